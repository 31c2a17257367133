"""
EMIT MIMO 通道分析工具 - EMIT-Based MIMO Characterization Toolkit

以電磁資訊理論 (EMIT) 分析多重散射環境中的 MIMO 通道：
二維 TM 圓柱群的 T 矩陣求解、通道矩陣的模態分解與有效容量、
自由空間容量掃描，以及基於模態的功率分配與 BPSK 影像傳輸。

主要功能：
- 特殊函數與格林函數核
- 多重散射求解與場分布
- 奇異值分解、有效容量、串擾
- 功率分配與 Monte-Carlo 傳輸
- 獨立驗證器與黃金檔

使用範例：
    from emit_mimo import EmitPipeline, load_scenario

    scenario = load_scenario("scenarios/cluster_10x10.yaml")
    pipeline = EmitPipeline(scenario, out_dir="results")
    summary = pipeline.run_modes()
"""

__version__ = "1.0.0"
__author__ = "EMIT Toolkit Team"

from emit_mimo.data.scenario import Scenario, load_scenario
from emit_mimo.pipeline import EmitPipeline

__all__ = [
    "Scenario",
    "load_scenario",
    "EmitPipeline",
]

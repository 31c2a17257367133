"""
分析模組 - Analysis Module

負責通道矩陣的資訊指標與自由空間掃描。

模組包含：
- infomet: 正規化、模態分解、有效容量、串擾
- sweeps: 源數 / 孔徑 / 距離掃描
"""

from emit_mimo.analysis.infomet import (
    ChannelMatrix,
    MimoLink,
    ModeDecomposition,
    Provenance,
    decompose,
    effective_capacity,
    normalize,
)
from emit_mimo.analysis.sweeps import SweepConfig, SweepKind, sweep

__all__ = [
    "ChannelMatrix",
    "MimoLink",
    "ModeDecomposition",
    "Provenance",
    "decompose",
    "effective_capacity",
    "normalize",
    "SweepConfig",
    "SweepKind",
    "sweep",
]

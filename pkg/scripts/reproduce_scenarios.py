#!/usr/bin/env python3
"""
重現所有場景 - Reproduce Every Shipped Scenario

對 scenarios/ 中每個場景執行場分布、模態分析與影像傳輸，並執行自由空間掃描。
結果寫入 results/<場景名稱>/。
"""

import sys
from pathlib import Path

# 添加 src 目錄到 Python 路徑
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root / "src"))

from emit_mimo.pipeline import EmitPipeline  # noqa: E402
from emit_mimo.utils.errors import EmitError  # noqa: E402
from emit_mimo.utils.logger import get_logger  # noqa: E402

logger = get_logger(__name__)

SWEEP_DISTANCES = (5.0, 20.0)


def run_scenario(path: Path, results_dir: Path, quick: bool = False) -> None:
    """單一場景的完整流程；quick 模式略過模態場分布與傳輸"""
    pipeline = EmitPipeline(out_dir=results_dir / path.stem)
    scenario = pipeline.load_scenario(path)

    if scenario.probes is not None:
        summary = pipeline.run_fieldmap()
        logger.info(
            f"  🌊 場分布 Field map: {summary['probes']:,} probes "
            f"in {summary['solve_seconds']:.2f} s"
        )
    if scenario.rx is not None:
        summary = pipeline.run_modes(with_maps=not quick)
        logger.info(
            f"  🧮 C_eff = {summary['c_eff']:.4f}, "
            f"可用模態 available modes = {summary['available_modes']}"
        )
        if not quick:
            metrics = pipeline.run_transmit()
            logger.info(
                f"  📡 BER = {metrics['ber']:.6f}, PSNR = {metrics['psnr']:.2f} dB"
            )


def main(quick: bool = False) -> None:
    """
    主函數 - 依序執行所有場景與自由空間掃描
    """
    logger.info("🚀 開始重現所有場景 Reproducing every shipped scenario")
    results_dir = project_root / "results"
    scenarios = sorted((project_root / "scenarios").glob("*.yaml"))

    failed = []
    for path in scenarios:
        logger.info(f"📂 場景 Scenario: {path.stem}")
        try:
            run_scenario(path, results_dir, quick)
        except EmitError as e:
            logger.error(f"❌ 場景失敗 Scenario failed: {path.stem}: {e}")
            failed.append(path.stem)

    if not quick:
        pipeline = EmitPipeline(out_dir=results_dir / "sweeps")
        for kind in ("sources", "aperture", "distance"):
            distances = () if kind == "distance" else SWEEP_DISTANCES
            pipeline.run_sweep(kind, distances)
            logger.info(f"📈 掃描完成 Sweep {kind} written")

    if failed:
        logger.error(f"❌ {len(failed)} 個場景失敗 scenarios failed: {', '.join(failed)}")
        sys.exit(1)
    logger.info(
        f"✅ 所有 {len(scenarios)} 個場景完成！All scenarios completed! "
        f"結果 Results: {results_dir}"
    )


if __name__ == "__main__":
    # 檢查命令列參數
    main(quick=len(sys.argv) > 1 and sys.argv[1] == "--quick")

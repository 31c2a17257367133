"""
EMIT 分析管道 - EMIT Analysis Pipeline

整合場景載入、場分布、模態分析、自由空間掃描、影像傳輸與獨立驗證，
CLI 只是此管道的薄包裝。
"""

import time
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from emit_mimo.analysis.infomet import (
    ChannelMatrix,
    MimoLink,
    ModeDecomposition,
    available_modes,
    crosstalk_matrix,
    decompose,
    effective_capacity,
    mode_energy_at,
    mode_field_maps,
    normalize,
    shannon_capacity,
)
from emit_mimo.analysis.sweeps import SweepConfig, SweepKind, sweep, sweep_family
from emit_mimo.data.exporters import ArtifactWriter, read_pgm
from emit_mimo.data.scenario import Scenario, load_scenario
from emit_mimo.physics.fieldmap import FieldMap, evaluate_masked, line_points
from emit_mimo.physics.greens import Point3
from emit_mimo.physics.scatter import (
    ScatteringScene,
    ScatterSolution,
    SourceArray,
    Truncation,
    suggest_truncation,
)
from emit_mimo.transmission.txsim import (
    LinkConfig,
    compare_schemes,
    default_test_image,
    scheme_allocation,
    transmit_image,
)
from emit_mimo.utils.config import get_config
from emit_mimo.utils.errors import ConfigError
from emit_mimo.utils.logger import LoggerMixin, log_execution_time, log_matrix_info
from emit_mimo.validation import oracles

PathLike = Union[str, Path]

# 輸出的模態場分布上限
MAX_MODE_MAPS = 10


class EmitPipeline(LoggerMixin):
    """
    EMIT 分析管道

    一個管道對應一個場景與一個輸出目錄；傳播器 (含 LU 分解) 在各步驟間共用。
    """

    def __init__(
        self,
        scenario: Optional[Scenario] = None,
        out_dir: Optional[PathLike] = None,
        seed: Optional[int] = None,
        n_jobs: Optional[int] = None,
        nmax: Optional[int] = None,
    ):
        """
        初始化分析管道

        Args:
            scenario: 已載入的場景，可稍後以 load_scenario 載入
            out_dir: 輸出目錄，預設為配置中的 results_dir
            seed: 覆寫場景中的種子
            n_jobs: 執行緒數
            nmax: 覆寫截斷階數
        """
        self.config = get_config()
        self.scenario = scenario
        self.out_dir = Path(out_dir) if out_dir is not None else self.config.results_dir
        self.seed = seed
        self.n_jobs = n_jobs or self.config.n_jobs
        self.nmax = nmax
        self.writer = ArtifactWriter(self.out_dir, self.config.encoding)

        self._propagator: Any = None
        self._link: Optional[MimoLink] = None
        self._channel: Optional[ChannelMatrix] = None
        self._modes: Optional[ModeDecomposition] = None

        self.logger.info("🔧 EMIT 分析管道初始化完成 Pipeline initialized")

    # ------------------------------------------------------------------
    # 場景

    @log_execution_time
    def load_scenario(self, path: PathLike) -> Scenario:
        self.logger.info(f"📂 載入場景 Loading scenario: {path}")
        self.scenario = load_scenario(path)
        self._propagator = None
        self._link = None
        self._channel = None
        self._modes = None
        return self.scenario

    def _require_scenario(self) -> Scenario:
        if self.scenario is None:
            raise ConfigError("請先載入場景 Please load a scenario first (--scenario)")
        return self.scenario

    @property
    def effective_seed(self) -> int:
        if self.seed is not None:
            return int(self.seed)
        return int(self._require_scenario().seed)

    @property
    def propagator(self) -> Any:
        if self._propagator is None:
            self._propagator = self._require_scenario().propagator(
                n_jobs=self.n_jobs, nmax=self.nmax
            )
        return self._propagator

    @property
    def link(self) -> MimoLink:
        if self._link is None:
            self._link = self._require_scenario().link(self.propagator)
        return self._link

    def truncation(self) -> Optional[Truncation]:
        prop = self.propagator
        return prop.truncation if isinstance(prop, ScatteringScene) else None

    # ------------------------------------------------------------------
    # 場分布

    @log_execution_time
    def compute_field_map(self) -> FieldMap:
        """所有發射點以單位激勵同時發射時的總場 Total field with all tx driven at unit amplitude"""
        scenario = self._require_scenario()
        points, shape = scenario.probe_points()
        tx = scenario.tx_points()
        excitations = np.ones(len(tx), dtype=complex)
        mask = self.propagator.valid_probe_mask(tx, points)

        def total(pts: np.ndarray) -> np.ndarray:
            return self.propagator.transfer_matrix(tx, pts) @ excitations

        return evaluate_masked(total, points, mask, shape)

    def run_fieldmap(self) -> Dict[str, Any]:
        """
        場分布：fieldmap.csv 與 fieldmap.pgm (網格探測點)

        Returns:
            Dict: 摘要，含 solve_seconds
        """
        scenario = self._require_scenario()
        self.logger.info(f"🌊 計算場分布 Computing field map for {scenario.name}")
        start = time.perf_counter()
        field_map = self.compute_field_map()
        elapsed = time.perf_counter() - start
        self.writer.field_map("fieldmap", field_map)
        trunc = self.truncation()
        return {
            "scenario": scenario.name,
            "scatterers": len(scenario.scatterer_list()),
            "n_max": trunc.n_max if trunc else None,
            "probes": len(field_map),
            "masked": int(np.count_nonzero(~field_map.mask)),
            "solve_seconds": elapsed,
        }

    # ------------------------------------------------------------------
    # 模態

    def normalized_channel(self) -> ChannelMatrix:
        """正規化通道，每個場景只計算一次"""
        if self._channel is None:
            raw = self.link.channel()
            log_matrix_info(raw.entries, "G")
            self._channel = normalize(raw)
        return self._channel

    @log_execution_time
    def decompose_channel(self) -> ModeDecomposition:
        if self._modes is None:
            channel = self.normalized_channel()
            self._modes = decompose(channel)
            self.logger.info(
                f"🧮 通道分解 Channel {channel.n_rx}×{channel.n_tx} "
                f"({channel.provenance.value}), "
                f"σ1={self._modes.s[0]:.6g}"
            )
        return self._modes

    def dense_receive_line(self) -> Optional[np.ndarray]:
        """連接首末接收元件的密集取樣線；單一接收元件時為 None"""
        rx = self.link.rx
        if len(rx) < 2:
            return None
        count = self.config.crosstalk_oversampling * len(rx)
        line = line_points(
            tuple(rx[0, :2]), tuple(rx[-1, :2]), count, z=float(rx[0, 2])
        )
        return line[self.link.probe_mask(line)]

    def run_modes(self, with_maps: bool = True) -> Dict[str, Any]:
        """
        模態分析：modes.csv (σ, σ', 相對能量)、crosstalk.csv、modes_summary.csv，
        以及各模態場分布 (場景有探測網格時)
        """
        scenario = self._require_scenario()
        md = self.decompose_channel()
        c_eff = effective_capacity(md)
        usable = available_modes(md)
        snr = 10.0 ** (scenario.snr_db / 10.0)
        capacity = shannon_capacity(md, snr)
        active = md.active_modes()

        energy = np.full(md.s.size, np.nan)
        energy[:active] = mode_energy_at(md, self.link, self.link.rx, count=active)
        spectrum = pd.DataFrame(
            {
                "index": np.arange(1, md.s.size + 1),
                "sigma": md.s,
                "sigma_norm": md.sigma_norm,
                "rx_energy_rel": energy,
            }
        )
        self.writer.csv("modes.csv", spectrum)

        summary = {
            "scenario": scenario.name,
            "provenance": self.link.provenance.value,
            "n_tx": len(self.link.tx),
            "n_rx": len(self.link.rx),
            "c_eff": c_eff,
            "available_modes": usable,
            "snr_db": scenario.snr_db,
            "shannon_capacity_bits": capacity,
        }
        self.writer.csv("modes_summary.csv", pd.DataFrame([summary]))

        line = self.dense_receive_line()
        if line is not None and active > 1:
            count = min(active, MAX_MODE_MAPS)
            ct = crosstalk_matrix(md, self.link, line, modes=count)
            labels = [f"mode_{m + 1}" for m in range(count)]
            frame = pd.DataFrame(ct, columns=labels).assign(mode=labels)
            self.writer.csv("crosstalk.csv", frame[["mode"] + labels])

        if with_maps and scenario.probes is not None:
            points, shape = scenario.probe_points()
            count = min(active, MAX_MODE_MAPS)
            maps = mode_field_maps(
                md, self.link, points, count=count, grid_shape=shape
            )
            for m, field_map in enumerate(maps, start=1):
                self.writer.field_map(f"mode_{m}", field_map)
        return summary

    # ------------------------------------------------------------------
    # 掃描

    def run_sweep(
        self,
        kind: Union[str, SweepKind],
        distances_lambda: Sequence[float] = (),
        values: Optional[Sequence[float]] = None,
        config: Optional[SweepConfig] = None,
    ) -> pd.DataFrame:
        """
        自由空間掃描；多個距離時每個距離一欄

        Returns:
            pd.DataFrame: sweep_{kind}.csv 的內容
        """
        try:
            kind = SweepKind(kind)
        except ValueError as exc:
            raise ConfigError(f"未知的掃描類型 Unknown sweep kind: {kind}") from exc
        config = config or SweepConfig()
        if values is not None:
            config = config.copy(update={"values": list(values)})
        if len(distances_lambda) > 1:
            table = sweep_family(kind, distances_lambda, config, self.n_jobs)
        else:
            if distances_lambda:
                distance = float(distances_lambda[0])
                config = config.copy(update={"distance_lambda": distance})
            table = sweep(kind, config, self.n_jobs)
        self.writer.csv(f"sweep_{kind.value}.csv", table)
        return table

    # ------------------------------------------------------------------
    # 傳輸

    def load_image(self, image_path: Optional[PathLike]) -> np.ndarray:
        if image_path is None:
            self.logger.info("🖼️ 使用內建測試影像 Using the built-in test image")
            return default_test_image()
        return read_pgm(image_path)

    def run_transmit(
        self,
        image_path: Optional[PathLike] = None,
        scheme: str = "optimized",
        combining: Optional[str] = None,
    ) -> Dict[str, Any]:
        """
        影像傳輸：received.pgm、transmit_metrics.csv

        Returns:
            Dict: 指標列
        """
        scenario = self._require_scenario()
        image = self.load_image(image_path)
        md = self.decompose_channel()
        channel = self.normalized_channel()
        allocation = scheme_allocation(
            md, scenario.p0, scheme, scenario.mode_count, scenario.constraint
        )
        link = LinkConfig(
            modes=tuple(range(scenario.mode_count)),
            noise_std=scenario.chi,
            seed=self.effective_seed,
            combining=combining or scenario.combining,
        )
        self.logger.info(
            f"📡 傳輸影像 Transmitting {image.shape[1]}×{image.shape[0]} image, "
            f"scheme={scheme}"
        )
        result = transmit_image(
            image, channel, link, allocation, md=md, n_jobs=self.n_jobs
        )
        self.writer.pgm("received.pgm", result.image)
        metrics = {
            "scenario": scenario.name,
            "scheme": scheme,
            "combining": link.combining,
            "constraint": allocation.constraint,
            "chi": scenario.chi,
            "p0": scenario.p0,
            "seed": link.seed,
            "ber": result.ber,
            "psnr": result.psnr,
            "bit_errors": result.bit_errors,
            "n_bits": result.n_bits,
        }
        self.writer.csv("transmit_metrics.csv", pd.DataFrame([metrics]))
        return metrics

    def run_compare(
        self,
        image_path: Optional[PathLike] = None,
        seeds: int = 10,
        combining: Optional[str] = None,
    ) -> pd.DataFrame:
        """所有方案 × seeds 個連續種子的比較表 scheme_comparison.csv"""
        scenario = self._require_scenario()
        image = self.load_image(image_path)
        channel = self.normalized_channel()
        schemes = ["optimized"] + [f"mode-{m + 1}" for m in range(scenario.mode_count)]
        table = compare_schemes(
            image,
            channel,
            scenario.p0,
            scenario.chi,
            range(self.effective_seed, self.effective_seed + seeds),
            schemes=schemes,
            mode_count=scenario.mode_count,
            combining=combining or scenario.combining,
            constraint=scenario.constraint,
            n_jobs=self.n_jobs,
        )
        self.writer.csv("scheme_comparison.csv", table)
        return table

    # ------------------------------------------------------------------
    # 驗證

    @log_execution_time
    def regenerate_golden(
        self, scenario_paths: Sequence[PathLike], golden_dir: Optional[PathLike] = None
    ) -> Dict[str, Path]:
        """
        重新產生所有 golden 檔

        - specfun.csv：任意精度 J/Y 參考值
        - allocation_discrepancy.csv：λ∝σ 與格點最佳解
        - boundary_residuals.csv：各場景在 N_max、N_max+2、N_max+4 的邊界殘差
        - oracle_reports.csv：所有驗證結果
        """
        golden_dir = Path(golden_dir or self.config.golden_dir)
        self.logger.info(f"🔬 重新產生黃金檔 Regenerating golden files into {golden_dir}")

        orders, xs = oracles.default_specfun_grid()
        tables: Dict[str, pd.DataFrame] = {"specfun": oracles.specfun_table(orders, xs)}

        discrepancy = pd.concat(
            [
                oracles.allocation_discrepancy(sigma, 1.0)
                for sigma in oracles.ALLOCATION_CASES
            ],
            ignore_index=True,
        )
        tables["allocation_discrepancy"] = discrepancy

        reports: List[oracles.OracleReport] = oracles.kernel_reports()
        residual_rows = []
        for path in scenario_paths:
            scenario = load_scenario(path)
            cylinders = scenario.scatterer_list()
            if not cylinders:
                continue
            k = scenario.wavenumber.k
            base = suggest_truncation(cylinders, k).n_max
            sources = _unit_sources(scenario)

            def solve(n_max: int) -> ScatterSolution:
                scene = ScatteringScene(
                    cylinders, k, Truncation(n_max), n_jobs=self.n_jobs
                )
                return scene.solve(sources)

            sweep_table = oracles.truncation_sweep(solve, base)
            sweep_table = sweep_table.assign(scenario=scenario.name)
            residual_rows.append(sweep_table)
            residual = float(sweep_table["residual"].iloc[0])
            monotone = oracles.monotone_non_increasing(
                sweep_table["residual"].tolist()
            )
            digest = scenario.digest()
            reports.append(
                oracles.OracleReport(
                    "boundary_residual",
                    digest,
                    f"max_residual@nmax={base}",
                    residual,
                    1e-3,
                    residual <= 1e-3,
                )
            )
            reports.append(
                oracles.OracleReport(
                    "boundary_convergence",
                    digest,
                    "monotone@nmax+2/+4",
                    float(monotone),
                    1.0,
                    monotone,
                )
            )
        if residual_rows:
            residuals = pd.concat(residual_rows, ignore_index=True)
            tables["boundary_residuals"] = residuals[["scenario", "n_max", "residual"]]
        tables["oracle_reports"] = oracles.reports_frame(reports)

        failed = [r for r in reports if not r.passed]
        for report in failed:
            self.logger.warning(
                f"⚠️ 驗證未通過 Oracle failed: "
                f"{report.name} {report.metric} = {report.value:.3e}"
            )
        if not failed:
            self.logger.info(f"✅ 所有 {len(reports)} 項驗證通過 All oracle checks passed")
        return oracles.write_golden(golden_dir, tables, self.config.encoding)


def _unit_sources(scenario: Scenario) -> SourceArray:
    return SourceArray.unit([Point3.from_sequence(p) for p in scenario.tx_points()])

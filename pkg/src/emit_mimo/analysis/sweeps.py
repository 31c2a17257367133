"""
自由空間掃描 - Free-Space Sweeps

三維純量自由空間中，兩個正對的 n×n 平面陣列 (發射在 z = 0，接收在 z = D)，
掃描源數、孔徑或距離，記錄電磁有效容量。長度以波長為單位。
"""

from concurrent.futures import ThreadPoolExecutor
from enum import Enum
from typing import List, Optional, Sequence

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field, validator

from emit_mimo.analysis.infomet import (
    ChannelMatrix,
    Provenance,
    decompose,
    effective_capacity,
    normalize,
)
from emit_mimo.physics.greens import FreeSpace3DPropagator, Wavenumber
from emit_mimo.utils.config import get_config
from emit_mimo.utils.errors import ConfigError
from emit_mimo.utils.logger import get_logger, log_execution_time

logger = get_logger(__name__)


class SweepKind(str, Enum):
    """掃描類型 Sweep kind"""

    SOURCES = "sources"
    APERTURE = "aperture"
    DISTANCE = "distance"


_DEFAULT_VALUES = {
    SweepKind.SOURCES: [1, 2, 3, 4, 6, 8, 10, 12, 16, 20, 24],
    SweepKind.APERTURE: [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 8.0, 10.0],
    SweepKind.DISTANCE: [2.0, 5.0, 10.0, 20.0, 50.0, 100.0, 200.0],
}


class SweepConfig(BaseModel):
    """
    掃描設定

    sources_per_side 在源數掃描中被掃描值取代；aperture_lambda、distance_lambda 同理。
    """

    frequency_hz: float = Field(default=3.0e9, gt=0)
    aperture_lambda: float = Field(default=6.0, gt=0, description="陣列邊長 (波長)")
    sources_per_side: int = Field(default=30, ge=1, description="每邊源數")
    distance_lambda: float = Field(default=10.0, gt=0, description="收發距離 (波長)")
    values: Optional[List[float]] = None

    @validator("values")
    def _check_values(cls, value: Optional[List[float]]) -> Optional[List[float]]:
        if value is not None:
            if not value:
                raise ValueError("掃描值不可為空 Sweep values must not be empty")
            if any(v <= 0 for v in value):
                raise ValueError("掃描值必須為正 Sweep values must be positive")
        return value

    @property
    def wavelength(self) -> float:
        return Wavenumber(self.frequency_hz).wavelength


def planar_array(per_side: int, side: float, z: float) -> np.ndarray:
    """
    以原點為中心、邊長 side 的 per_side×per_side 平面陣列，間距 side/per_side

    Returns:
        np.ndarray: (per_side², 3)
    """
    pitch = side / per_side
    coords = (np.arange(per_side) - (per_side - 1) / 2.0) * pitch
    gx, gy = np.meshgrid(coords, coords)
    return np.column_stack([gx.ravel(), gy.ravel(), np.full(gx.size, z)])


def free_space_channel(
    config: SweepConfig, per_side: int, aperture_lambda: float, distance_lambda: float
) -> ChannelMatrix:
    """正對平面陣列之間的三維純量通道"""
    wavelength = config.wavelength
    side = aperture_lambda * wavelength
    tx = planar_array(per_side, side, 0.0)
    rx = planar_array(per_side, side, distance_lambda * wavelength)
    propagator = FreeSpace3DPropagator(Wavenumber(config.frequency_hz).k)
    return ChannelMatrix(
        entries=propagator.transfer_matrix(tx, rx), provenance=Provenance.FREE_SPACE_3D
    )


def _point_capacity(kind: SweepKind, config: SweepConfig, x: float) -> float:
    per_side = config.sources_per_side
    aperture = config.aperture_lambda
    distance = config.distance_lambda
    if kind is SweepKind.SOURCES:
        if int(x) != x:
            raise ConfigError(f"源數必須為整數 Source count must be an integer: {x}")
        per_side = int(x)
    elif kind is SweepKind.APERTURE:
        aperture = x
    else:
        distance = x
    channel = normalize(free_space_channel(config, per_side, aperture, distance))
    return effective_capacity(decompose(channel))


@log_execution_time
def sweep(
    kind: SweepKind, config: Optional[SweepConfig] = None, n_jobs: Optional[int] = None
) -> pd.DataFrame:
    """
    掃描電磁有效容量

    Args:
        kind: 掃描類型
        config: 掃描設定；values 為 None 時使用預設掃描值
        n_jobs: 執行緒數，預設取自全域配置

    Returns:
        pd.DataFrame: 欄位 x, c_eff
    """
    try:
        kind = SweepKind(kind)
    except ValueError as exc:
        raise ConfigError(f"未知的掃描類型 Unknown sweep kind: {kind}") from exc
    config = config or SweepConfig()
    values: Sequence[float] = config.values or _DEFAULT_VALUES[kind]
    n_jobs = n_jobs or get_config().n_jobs

    logger.info(f"📈 開始掃描 Starting {kind.value} sweep over {len(values)} points")

    def point(x: float) -> float:
        return _point_capacity(kind, config, x)  # type: ignore[arg-type]

    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as executor:
            c_eff = list(executor.map(point, values))
    else:
        c_eff = [point(x) for x in values]
    return pd.DataFrame({"x": list(values), "c_eff": c_eff})


def sweep_family(
    kind: SweepKind,
    distances_lambda: Sequence[float],
    config: Optional[SweepConfig] = None,
    n_jobs: Optional[int] = None,
) -> pd.DataFrame:
    """
    在多個距離下重複掃描，每個距離一欄 c_eff_d{距離}

    Returns:
        pd.DataFrame: 欄位 x, c_eff_d..., ...
    """
    config = config or SweepConfig()
    family: Optional[pd.DataFrame] = None
    for distance in distances_lambda:
        at_distance = config.copy(update={"distance_lambda": float(distance)})
        table = sweep(kind, at_distance, n_jobs)
        column = f"c_eff_d{float(distance):g}"
        table = table.rename(columns={"c_eff": column})
        family = table if family is None else family.merge(table, on="x")
    if family is None:
        raise ConfigError("至少需要一個距離 At least one distance is required")
    return family

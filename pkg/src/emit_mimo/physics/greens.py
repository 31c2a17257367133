"""
自由空間格林函數 - Free-Space Green's Functions

- 三維純量格林函數 exp(ikd) / (4πd)
- 三維並矢格林函數 (I + ∇∇/k²) g，以 1/(kd) 冪次的封閉形式計算
- 二維 TM 線源場 (i/4) H_0^(1)(kd)，作為散射求解器的入射場

源項的 iωμ0 前置因子併入激勵振幅；通道定義為單位源的場量。
"""

from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np

from emit_mimo.physics.specfun import hankel1
from emit_mimo.utils.errors import DomainError, SingularityError

SPEED_OF_LIGHT = 299_792_458.0

# 重合判定的相對距離
_COINCIDENT_TOL = 1e-12


@dataclass(frozen=True)
class Point3:
    """空間點 (公尺) Point in space, meters"""

    x: float
    y: float
    z: float = 0.0

    def __post_init__(self) -> None:
        if not all(np.isfinite(v) for v in (self.x, self.y, self.z)):
            raise DomainError(f"座標必須為有限值 Coordinates must be finite: {self}")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)

    @classmethod
    def from_sequence(cls, values: Sequence[float]) -> "Point3":
        if len(values) == 2:
            return cls(float(values[0]), float(values[1]))
        if len(values) == 3:
            return cls(float(values[0]), float(values[1]), float(values[2]))
        raise DomainError(f"點需要 2 或 3 個座標 A point needs 2 or 3 coordinates: {values!r}")


@dataclass(frozen=True)
class Wavenumber:
    """
    自由空間波數 Free-space wavenumber

    k = 2π·frequency / c，方程式中的 k 與 k_0 視為同一量。
    """

    frequency: float
    c: float = SPEED_OF_LIGHT

    def __post_init__(self) -> None:
        if not (np.isfinite(self.frequency) and self.frequency > 0):
            raise DomainError(f"頻率必須為正 Frequency must be positive: {self.frequency}")
        if not (np.isfinite(self.c) and self.c > 0):
            raise DomainError(f"波速必須為正 Wave speed must be positive: {self.c}")

    @property
    def k(self) -> float:
        return 2.0 * np.pi * self.frequency / self.c

    @property
    def omega(self) -> float:
        return 2.0 * np.pi * self.frequency

    @property
    def wavelength(self) -> float:
        return self.c / self.frequency

    @classmethod
    def from_k(cls, k: float, c: float = SPEED_OF_LIGHT) -> "Wavenumber":
        return cls(frequency=k * c / (2.0 * np.pi), c=c)


KLike = Union[Wavenumber, float]
PointsLike = Union[np.ndarray, Iterable[Point3]]


def wavenumber_value(k: KLike) -> float:
    """取出波數數值 Extract the numeric wavenumber"""
    value = k.k if isinstance(k, Wavenumber) else float(k)
    if not (np.isfinite(value) and value > 0):
        raise DomainError(f"波數必須為正 Wavenumber must be positive: {value}")
    return value


def as_xyz(points: PointsLike) -> np.ndarray:
    """
    將點集合轉為 (N, 3) 陣列

    Args:
        points: Point3 的序列，或形狀 (N, 2)/(N, 3) 的陣列

    Returns:
        np.ndarray: (N, 3) 浮點陣列；二維輸入補 z = 0
    """
    if isinstance(points, np.ndarray):
        arr = np.atleast_2d(np.asarray(points, dtype=float))
    else:
        items = list(points)
        if not items:
            return np.zeros((0, 3))
        arr = np.array(
            [p.as_array() if isinstance(p, Point3) else p for p in items], dtype=float
        )
        arr = np.atleast_2d(arr)
    if arr.shape[-1] == 2:
        arr = np.column_stack([arr, np.zeros(len(arr))])
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise DomainError(f"點陣列形狀錯誤 Point array must be (N, 3), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DomainError("座標必須為有限值 Coordinates must be finite")
    return arr


def _separation(r_r: np.ndarray, r_t: np.ndarray) -> np.ndarray:
    d = np.linalg.norm(r_r - r_t, axis=-1)
    scale = np.maximum(np.linalg.norm(r_r, axis=-1), np.linalg.norm(r_t, axis=-1))
    if np.any(d <= _COINCIDENT_TOL * np.maximum(scale, 1.0)):
        raise SingularityError("場點與源點重合 Field point coincides with source point")
    return d


def scalar_g3d(r_rx: Point3, r_tx: Point3, k: KLike) -> complex:
    """
    三維純量格林函數 exp(ik|rR - rT|) / (4π|rR - rT|)

    Raises:
        SingularityError: 兩點重合
    """
    k_val = wavenumber_value(k)
    d = float(_separation(r_rx.as_array(), r_tx.as_array()))
    return complex(np.exp(1j * k_val * d) / (4.0 * np.pi * d))


def dyadic_g3d(r_rx: Point3, r_tx: Point3, k: KLike) -> np.ndarray:
    """
    三維並矢格林函數 (I + ∇∇/k²) g

    G = g·[(1 + i/kd - 1/(kd)²) I + (-1 - 3i/kd + 3/(kd)²) R̂R̂]

    Returns:
        np.ndarray: 3×3 複數張量，對稱
    """
    k_val = wavenumber_value(k)
    separation = r_rx.as_array() - r_tx.as_array()
    d = float(_separation(r_rx.as_array(), r_tx.as_array()))
    kd = k_val * d
    g = np.exp(1j * kd) / (4.0 * np.pi * d)
    r_hat = separation / d
    a = 1.0 + 1j / kd - 1.0 / kd**2
    b = -1.0 - 3j / kd + 3.0 / kd**2
    return g * (a * np.eye(3) + b * np.outer(r_hat, r_hat))


def line_source_g2d(r: Point3, r_src: Point3, k: KLike) -> complex:
    """
    二維 TM 線源場 (i/4) H_0^(1)(k|r - rs|)，忽略 z 座標

    Raises:
        SingularityError: 兩點在 xy 平面上重合
    """
    k_val = wavenumber_value(k)
    p = np.array([r.x, r.y])
    q = np.array([r_src.x, r_src.y])
    d = float(_separation(p, q))
    return complex(0.25j * hankel1(0, k_val * d))


def scalar_g3d_matrix(rx: PointsLike, tx: PointsLike, k: KLike) -> np.ndarray:
    """
    三維純量核的通道矩陣 G[i, j] = g(rx_i, tx_j)

    Returns:
        np.ndarray: (N_R, N_T) 複數矩陣
    """
    k_val = wavenumber_value(k)
    r_r = as_xyz(rx)
    r_t = as_xyz(tx)
    d = _separation(r_r[:, np.newaxis, :], r_t[np.newaxis, :, :])
    return np.exp(1j * k_val * d) / (4.0 * np.pi * d)


def line_source_g2d_matrix(rx: PointsLike, tx: PointsLike, k: KLike) -> np.ndarray:
    """
    二維線源核的通道矩陣 G[i, j] = (i/4) H_0^(1)(k|rx_i - tx_j|)

    Returns:
        np.ndarray: (N_R, N_T) 複數矩陣
    """
    k_val = wavenumber_value(k)
    r_r = as_xyz(rx)[:, :2]
    r_t = as_xyz(tx)[:, :2]
    d = _separation(r_r[:, np.newaxis, :], r_t[np.newaxis, :, :])
    return 0.25j * hankel1(0, k_val * d)


def off_source_mask(tx: PointsLike, probes: PointsLike, planar: bool) -> np.ndarray:
    """不與任何發射點重合的探測點 Probes that do not coincide with a transmitter"""
    cols = slice(0, 2) if planar else slice(0, 3)
    t = as_xyz(tx)[:, cols]
    p = as_xyz(probes)[:, cols]
    if len(t) == 0 or len(p) == 0:
        return np.ones(len(p), dtype=bool)
    d = np.linalg.norm(p[:, np.newaxis, :] - t[np.newaxis, :, :], axis=-1)
    scale = np.maximum(np.linalg.norm(p, axis=-1)[:, np.newaxis], 1.0)
    return np.all(d > _COINCIDENT_TOL * scale, axis=1)


@dataclass(frozen=True)
class FreeSpace3DPropagator:
    """三維純量自由空間傳播 3-D scalar free-space propagation"""

    k: float

    def transfer_matrix(self, tx: PointsLike, probes: PointsLike) -> np.ndarray:
        return scalar_g3d_matrix(probes, tx, self.k)

    def valid_probe_mask(self, tx: PointsLike, probes: PointsLike) -> np.ndarray:
        return off_source_mask(tx, probes, planar=False)


@dataclass(frozen=True)
class FreeSpace2DPropagator:
    """二維線源自由空間傳播 2-D line-source free-space propagation"""

    k: float

    def transfer_matrix(self, tx: PointsLike, probes: PointsLike) -> np.ndarray:
        return line_source_g2d_matrix(probes, tx, self.k)

    def valid_probe_mask(self, tx: PointsLike, probes: PointsLike) -> np.ndarray:
        return off_source_mask(tx, probes, planar=True)

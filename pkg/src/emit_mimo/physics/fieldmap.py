"""
場分布 - Field Maps

在矩形網格或線上的複數場取樣，支援遮罩 (圓柱內或源點上的網格點)。
匯出見 emit_mimo.data.exporters。
"""

from dataclasses import dataclass, replace
from typing import Callable, Optional, Tuple

import numpy as np
import pandas as pd

from emit_mimo.utils.errors import DegenerateChannelError, DomainError


@dataclass(frozen=True)
class FieldMap:
    """
    複數場取樣 Complex field samples

    Attributes:
        points: (P, 3) 探測點
        values: (P,) 複數場值；遮罩點為 0
        mask: (P,) 布林，True 表示有效
        grid_shape: 網格形狀 (ny, nx)，點以列優先排列；線取樣為 None
    """

    points: np.ndarray
    values: np.ndarray
    mask: Optional[np.ndarray] = None
    grid_shape: Optional[Tuple[int, int]] = None

    def __post_init__(self) -> None:
        points = np.asarray(self.points, dtype=float)
        values = np.asarray(self.values, dtype=complex).reshape(-1)
        if self.mask is None:
            mask = np.ones(len(values), dtype=bool)
        else:
            mask = np.asarray(self.mask, dtype=bool)
        if len(points) != len(values) or len(mask) != len(values):
            raise DomainError(
                f"場分布長度不一致 Inconsistent field map lengths: "
                f"{len(points)} points, {len(values)} values, {len(mask)} mask"
            )
        shape = self.grid_shape
        if shape is not None and shape[0] * shape[1] != len(values):
            raise DomainError(
                f"網格形狀不符 Grid shape {shape} does not match {len(values)} samples"
            )
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "values", np.where(mask, values, 0.0))
        object.__setattr__(self, "mask", mask)

    def __len__(self) -> int:
        return len(self.values)

    @property
    def magnitude(self) -> np.ndarray:
        return np.abs(self.values)

    @property
    def peak(self) -> float:
        valid = self.magnitude[self.mask]
        return float(valid.max()) if valid.size else 0.0

    def normalized(self) -> "FieldMap":
        """
        正規化為最大幅值 1

        Raises:
            DegenerateChannelError: 場處處為零
        """
        peak = self.peak
        if peak == 0.0:
            raise DegenerateChannelError("場處處為零，無法正規化 Field is identically zero")
        return replace(self, values=self.values / peak)

    def to_frame(self) -> pd.DataFrame:
        """轉為 DataFrame：x, y, re, im, abs_norm (遮罩點為 NaN)"""
        peak = self.peak or 1.0
        frame = pd.DataFrame(
            {
                "x": self.points[:, 0],
                "y": self.points[:, 1],
                "re": self.values.real,
                "im": self.values.imag,
                "abs_norm": self.magnitude / peak,
            }
        )
        frame.loc[~self.mask, ["re", "im", "abs_norm"]] = np.nan
        return frame

    def to_gray(self) -> np.ndarray:
        """
        8 位元灰階影像 (ny, nx)，正規化幅值 × 255，遮罩點為 0

        Raises:
            DomainError: 非網格取樣
        """
        if self.grid_shape is None:
            raise DomainError("線取樣無法轉為影像 Line samples cannot be rendered as an image")
        peak = self.peak or 1.0
        scaled = np.clip(self.magnitude / peak, 0.0, 1.0) * 255.0
        gray = np.rint(scaled).astype(np.uint8)
        gray[~self.mask] = 0
        return gray.reshape(self.grid_shape)


def grid_points(
    x_range: Tuple[float, float],
    y_range: Tuple[float, float],
    nx: int,
    ny: int,
    z: float = 0.0,
) -> Tuple[np.ndarray, Tuple[int, int]]:
    """
    矩形網格點，列優先 (每列固定 y，x 遞增)

    Returns:
        (points (ny·nx, 3), (ny, nx))
    """
    if nx < 1 or ny < 1:
        raise DomainError(f"網格點數必須為正 Grid counts must be positive: {nx}×{ny}")
    xs = np.linspace(x_range[0], x_range[1], nx)
    ys = np.linspace(y_range[0], y_range[1], ny)
    gx, gy = np.meshgrid(xs, ys)
    points = np.column_stack([gx.ravel(), gy.ravel(), np.full(gx.size, z)])
    return points, (ny, nx)


def line_points(
    start: Tuple[float, float], stop: Tuple[float, float], count: int, z: float = 0.0
) -> np.ndarray:
    """兩點間等距取樣 Equally spaced samples on a segment"""
    if count < 1:
        raise DomainError(f"取樣數必須為正 Sample count must be positive: {count}")
    t = np.linspace(0.0, 1.0, count)
    x = start[0] + t * (stop[0] - start[0])
    y = start[1] + t * (stop[1] - start[1])
    return np.column_stack([x, y, np.full(count, z)])


def evaluate_masked(
    evaluate: Callable[[np.ndarray], np.ndarray],
    points: np.ndarray,
    mask: np.ndarray,
    grid_shape: Optional[Tuple[int, int]] = None,
) -> FieldMap:
    """只在有效點上評估場，其餘點遮罩 Evaluate only at valid points"""
    values = np.zeros(len(points), dtype=complex)
    if mask.any():
        values[mask] = evaluate(points[mask])
    return FieldMap(points=points, values=values, mask=mask, grid_shape=grid_shape)

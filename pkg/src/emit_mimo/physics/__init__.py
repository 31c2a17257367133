"""
物理模組 - Physics Module

模組包含：
- specfun: 整數階 Bessel / Hankel 函數
- greens: 自由空間格林函數與傳播器
- scatter: 圓柱群多重散射求解器 (需直接匯入 emit_mimo.physics.scatter)
- fieldmap: 場取樣與網格
"""

from emit_mimo.physics.fieldmap import FieldMap, grid_points, line_points
from emit_mimo.physics.greens import (
    FreeSpace2DPropagator,
    FreeSpace3DPropagator,
    Point3,
    Wavenumber,
    dyadic_g3d,
    line_source_g2d,
    scalar_g3d,
)
from emit_mimo.physics.specfun import bessel_j, bessel_y, hankel1

__all__ = [
    "FieldMap",
    "grid_points",
    "line_points",
    "Point3",
    "Wavenumber",
    "FreeSpace2DPropagator",
    "FreeSpace3DPropagator",
    "scalar_g3d",
    "dyadic_g3d",
    "line_source_g2d",
    "bessel_j",
    "bessel_y",
    "hankel1",
]

"""
場景檔模組 - Scenario Files

YAML 場景檔 (鍵名帶單位：frequency_hz、radius_m) 以 pydantic 驗證，
展開為散射體、收發陣列與探測點，並在任何計算之前檢查幾何不變量。
"""

import hashlib
import json
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
import yaml
from pydantic import BaseModel, Field, ValidationError, root_validator, validator

from emit_mimo.analysis.infomet import MimoLink, Provenance
from emit_mimo.physics.fieldmap import grid_points
from emit_mimo.physics.greens import (
    FreeSpace2DPropagator,
    FreeSpace3DPropagator,
    Point3,
    Wavenumber,
)
from emit_mimo.physics.scatter import (
    PEC,
    Dielectric,
    Material,
    Scatterer,
    ScatteringScene,
    Truncation,
    grid_scatterers,
    remove_random,
    validate_geometry,
)
from emit_mimo.transmission.txsim import COMBINERS, CONSTRAINTS
from emit_mimo.utils.errors import ConfigError, GeometryError, ScenarioIOError
from emit_mimo.utils.logger import get_logger

logger = get_logger(__name__)


class SpaceKind(str, Enum):
    """傳播空間 Propagation space"""

    FREE_SPACE_3D = "free_space_3d"
    FREE_SPACE_2D = "free_space_2d"
    CYLINDERS = "cylinders"


class MaterialKind(str, Enum):
    PEC = "pec"
    DIELECTRIC = "dielectric"


class _Model(BaseModel):
    class Config:
        extra = "forbid"


def _pad_xyz(cls: Any, value: Any) -> Any:
    """(x, y) 補上 z = 0"""
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return (value[0], value[1], 0.0)
    return value


def _require_permittivity(values: Dict[str, Any]) -> None:
    dielectric = values["material"] is MaterialKind.DIELECTRIC
    if dielectric and values.get("relative_permittivity") is None:
        raise ValueError(
            "介質圓柱需要 relative_permittivity Dielectric needs relative_permittivity"
        )


class ArraySpec(_Model):
    """
    天線陣列：count 個元素以 center_m 為中心、間距 pitch_m，x 優先排列；
    或直接列出 points_m
    """

    count: Tuple[int, int] = (1, 1)
    pitch_m: float = Field(default=0.0, ge=0)
    center_m: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    points_m: Optional[List[Tuple[float, float, float]]] = None

    _pad_center = validator("center_m", pre=True, allow_reuse=True)(_pad_xyz)
    _pad_points = validator(
        "points_m", pre=True, each_item=True, allow_reuse=True
    )(_pad_xyz)

    @validator("count")
    def _check_count(cls, value: Tuple[int, int]) -> Tuple[int, int]:
        if value[0] < 1 or value[1] < 1:
            raise ValueError(f"陣列元素數必須為正 Array counts must be positive: {value}")
        return value

    @root_validator(skip_on_failure=True)
    def _check_pitch(cls, values: Dict[str, Any]) -> Dict[str, Any]:
        nx, ny = values["count"]
        if values.get("points_m") is None and nx * ny > 1 and values["pitch_m"] <= 0:
            raise ValueError(
                "多元素陣列需要正的 pitch_m Multi-element arrays need a positive pitch_m"
            )
        return values

    def positions(self) -> np.ndarray:
        """(N, 3) 元素位置"""
        if self.points_m is not None:
            return np.asarray(self.points_m, dtype=float).reshape(-1, 3)
        nx, ny = self.count
        xs = self.center_m[0] + (np.arange(nx) - (nx - 1) / 2.0) * self.pitch_m
        ys = self.center_m[1] + (np.arange(ny) - (ny - 1) / 2.0) * self.pitch_m
        return np.array([[x, y, self.center_m[2]] for x in xs for y in ys], dtype=float)


class CylinderSpec(_Model):
    center_m: Tuple[float, float]
    radius_m: float = Field(gt=0)
    material: MaterialKind = MaterialKind.PEC
    relative_permittivity: Optional[float] = Field(default=None, gt=0)

    @root_validator(skip_on_failure=True)
    def _check_material(cls, values: Dict[str, Any]) -> Dict[str, Any]:
        _require_permittivity(values)
        return values

    def to_material(self) -> Material:
        if self.material is MaterialKind.DIELECTRIC:
            eps = float(self.relative_permittivity)  # type: ignore[arg-type]
            return Dielectric(eps)
        return PEC()


class CylinderGridSpec(_Model):
    """rows×cols 圓柱格陣，可隨機移除 remove_count 個 (random array)"""

    rows: int = Field(ge=1)
    cols: int = Field(ge=1)
    pitch_m: float = Field(gt=0)
    radius_m: float = Field(gt=0)
    center_m: Tuple[float, float] = (0.0, 0.0)
    material: MaterialKind = MaterialKind.PEC
    relative_permittivity: Optional[float] = Field(default=None, gt=0)
    remove_count: int = Field(default=0, ge=0)
    removal_seed: int = Field(default=0, ge=0)

    @root_validator(skip_on_failure=True)
    def _check_grid(cls, values: Dict[str, Any]) -> Dict[str, Any]:
        _require_permittivity(values)
        if values["remove_count"] > values["rows"] * values["cols"]:
            raise ValueError(
                f"移除數量 {values['remove_count']} 超過格陣大小 exceeds grid size "
                f"{values['rows']}×{values['cols']}"
            )
        return values

    def expand(self) -> List[Scatterer]:
        material: Material = PEC()
        if self.material is MaterialKind.DIELECTRIC:
            eps = float(self.relative_permittivity)  # type: ignore[arg-type]
            material = Dielectric(eps)
        cylinders = grid_scatterers(
            self.rows, self.cols, self.pitch_m, self.radius_m, self.center_m, material
        )
        if self.remove_count:
            cylinders = remove_random(cylinders, self.remove_count, self.removal_seed)
        return cylinders


class ProbeGridSpec(_Model):
    x_range_m: Tuple[float, float]
    y_range_m: Tuple[float, float]
    nx: int = Field(ge=1)
    ny: int = Field(ge=1)
    z_m: float = 0.0


class ProbeSpec(_Model):
    """探測點：網格 (圓柱內的點被遮罩) 或明確列出 (圓柱內為錯誤)"""

    grid: Optional[ProbeGridSpec] = None
    points_m: Optional[List[Tuple[float, float, float]]] = None

    _pad_points = validator(
        "points_m", pre=True, each_item=True, allow_reuse=True
    )(_pad_xyz)

    @root_validator(skip_on_failure=True)
    def _exactly_one(cls, values: Dict[str, Any]) -> Dict[str, Any]:
        if (values.get("grid") is None) == (values.get("points_m") is None):
            raise ValueError(
                "探測點需恰好指定 grid 或 points_m 其一 Give exactly one of grid / points_m"
            )
        return values

    def expand(self) -> Tuple[np.ndarray, Optional[Tuple[int, int]]]:
        if self.grid is not None:
            g = self.grid
            return grid_points(g.x_range_m, g.y_range_m, g.nx, g.ny, g.z_m)
        return np.asarray(self.points_m, dtype=float).reshape(-1, 3), None


class Scenario(_Model):
    """
    場景 Scenario

    所有計算命令的輸入；transmit 另需 chi、p0 與 seed。
    """

    name: str = "scenario"
    description: Optional[str] = None
    frequency_hz: float = Field(gt=0)
    space: SpaceKind = SpaceKind.CYLINDERS
    tx: ArraySpec
    rx: Optional[ArraySpec] = None
    scatterers: List[CylinderSpec] = []
    scatterer_grid: Optional[CylinderGridSpec] = None
    nmax: Optional[int] = Field(default=None, ge=1)
    probes: Optional[ProbeSpec] = None
    chi: float = Field(default=0.0, ge=0, description="雜訊標準差")
    p0: float = Field(default=1.0, gt=0, description="總發射功率")
    seed: int = Field(default=0, ge=0)
    snr_db: float = 10.0
    mode_count: int = Field(default=3, ge=1)
    combining: str = "objective"
    constraint: str = "sum"

    @validator("combining")
    def _check_combining(cls, value: str) -> str:
        if value not in COMBINERS:
            raise ValueError(
                f"未知的合併方式 Unknown combining {value!r}; expected one of {COMBINERS}"
            )
        return value

    @validator("constraint")
    def _check_constraint(cls, value: str) -> str:
        if value not in CONSTRAINTS:
            raise ValueError(
                f"未知的功率約束 Unknown constraint {value!r}; "
                f"expected one of {CONSTRAINTS}"
            )
        return value

    @root_validator(skip_on_failure=True)
    def _check_space(cls, values: Dict[str, Any]) -> Dict[str, Any]:
        has_grid = values.get("scatterer_grid") is not None
        has_cylinders = bool(values.get("scatterers")) or has_grid
        if values["space"] is not SpaceKind.CYLINDERS and has_cylinders:
            raise ValueError(
                f"{values['space'].value} 空間不可有散射體 Free space cannot hold scatterers"
            )
        return values

    # ------------------------------------------------------------------
    # 展開

    @property
    def wavenumber(self) -> Wavenumber:
        return Wavenumber(self.frequency_hz)

    @property
    def planar(self) -> bool:
        return self.space is not SpaceKind.FREE_SPACE_3D

    def scatterer_list(self) -> List[Scatterer]:
        """明確列出的圓柱在前，格陣展開在後"""
        cylinders = [
            Scatterer(Point3(*c.center_m), c.radius_m, c.to_material())
            for c in self.scatterers
        ]
        if self.scatterer_grid is not None:
            cylinders.extend(self.scatterer_grid.expand())
        return cylinders

    def tx_points(self) -> np.ndarray:
        return self.tx.positions()

    def rx_points(self) -> np.ndarray:
        if self.rx is None:
            raise ConfigError(f"場景 {self.name} 未定義接收陣列 Scenario has no rx array")
        return self.rx.positions()

    def probe_points(self) -> Tuple[np.ndarray, Optional[Tuple[int, int]]]:
        if self.probes is None:
            raise ConfigError(f"場景 {self.name} 未定義探測點 Scenario has no probes")
        return self.probes.expand()

    def check_geometry(self) -> None:
        """
        計算前的幾何檢查

        Raises:
            GeometryError: 圓柱重疊、源在圓柱內、明確探測點在圓柱內或與源重合
        """
        cylinders = self.scatterer_list()
        tx = self.tx_points()
        validate_geometry(cylinders, sources=tx)
        if self.rx is not None:
            validate_geometry(cylinders, probes=self.rx_points())
            _check_off_sources(tx, self.rx_points(), "接收點 rx element", self.planar)
        if self.probes is not None and self.probes.points_m is not None:
            points, _ = self.probe_points()
            validate_geometry(cylinders, probes=points)
            _check_off_sources(tx, points, "探測點 probe", self.planar)

    def propagator(
        self, n_jobs: Optional[int] = None, nmax: Optional[int] = None
    ) -> Any:
        """
        依空間類型建立傳播器

        Args:
            nmax: 覆寫截斷階數 (優先於場景檔)
        """
        k = self.wavenumber.k
        if self.space is SpaceKind.FREE_SPACE_3D:
            return FreeSpace3DPropagator(k)
        if self.space is SpaceKind.FREE_SPACE_2D:
            return FreeSpace2DPropagator(k)
        n_max = nmax or self.nmax
        truncation = Truncation(n_max) if n_max else None
        return ScatteringScene(self.scatterer_list(), k, truncation, n_jobs=n_jobs)

    def provenance(self) -> Provenance:
        if self.space is SpaceKind.FREE_SPACE_3D:
            return Provenance.FREE_SPACE_3D
        if self.space is SpaceKind.FREE_SPACE_2D or not self.scatterer_list():
            return Provenance.FREE_SPACE_2D
        return Provenance.SCATTERED

    def link(self, propagator: Any) -> MimoLink:
        return MimoLink(
            propagator=propagator,
            tx=self.tx_points(),
            rx=self.rx_points(),
            provenance=self.provenance(),
        )

    # ------------------------------------------------------------------
    # 序列化

    def to_plain(self) -> Dict[str, Any]:
        return json.loads(self.json(exclude_none=True))

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.to_plain(), sort_keys=False, allow_unicode=True)

    def digest(self) -> str:
        """場景內容雜湊 Content hash of the canonical form"""
        canonical = json.dumps(self.to_plain(), sort_keys=True).encode("utf-8")
        return hashlib.sha256(canonical).hexdigest()[:16]


def _check_off_sources(
    tx: np.ndarray, points: np.ndarray, label: str, planar: bool
) -> None:
    cols = 2 if planar else 3
    d = np.linalg.norm(points[:, np.newaxis, :cols] - tx[np.newaxis, :, :cols], axis=-1)
    hits = np.argwhere(d <= 1e-12)
    if hits.size:
        i, j = hits[0]
        raise GeometryError(f"{label} {i} 與發射點 {j} 重合 coincides with tx {j}")


def _format_errors(error: ValidationError) -> str:
    lines = []
    for item in error.errors():
        loc = ".".join(str(part) for part in item["loc"])
        lines.append(f"  - {loc}: {item['msg']}")
    return "\n".join(lines)


def parse_scenario(text: str, source: str = "<string>") -> Scenario:
    """
    解析 YAML 文字

    Raises:
        ConfigError: YAML 語法錯誤 (附行列) 或欄位驗證失敗 (附欄位路徑)
    """
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = ""
        if mark is not None:
            where = f" (line {mark.line + 1}, column {mark.column + 1})"
        raise ConfigError(
            f"場景檔語法錯誤 Scenario syntax error in {source}{where}: {exc}"
        ) from exc
    if not isinstance(data, dict):
        raise ConfigError(f"場景檔必須是映射 Scenario {source} must be a mapping")
    try:
        return Scenario(**data)
    except ValidationError as exc:
        raise ConfigError(
            f"場景檔欄位錯誤 Invalid scenario {source}:\n{_format_errors(exc)}"
        ) from exc


def load_scenario(path: Union[str, Path], check: bool = True) -> Scenario:
    """
    載入並驗證場景檔

    Args:
        check: 同時執行幾何檢查

    Raises:
        ScenarioIOError: 檔案無法讀取
        ConfigError: 內容無效
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioIOError(f"無法讀取場景檔 Cannot read scenario {path}: {exc}") from exc
    scenario = parse_scenario(text, str(path))
    if check:
        scenario.check_geometry()
    logger.debug(f"📄 場景載入 Scenario loaded: {scenario.name} ({path})")
    return scenario

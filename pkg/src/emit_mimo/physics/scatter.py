"""
多重散射求解器 - Multiple-Scattering Solver (group T-matrix)

二維 TM 圓柱群的 Foldy–Lax 方程:

    I_n^(q) = a_n^(q) + Σ_{p≠q} Σ_m H_{n-m}(k d_pq) e^{-i(n-m)φ_pq} T_m^(p) I_m^(p)

寫成 Z·I = V，Z 對角區塊為 -1，V = -a (入射展開係數取負)。
角度慣例 φ_{a,b} = atan2(a_y - b_y, a_x - b_x)。

散射場以各圓柱中心的外行柱諧波表示:
    ψ_s(r) = Σ_p Σ_n T_n^(p) I_n^(p) H_n(k|r - r_p|) e^{in φ_{r,p}}

Z 與激勵無關，因此每個場景只做一次 LU 分解，所有右端項共用。
分解前以對角相似縮放 W Z W⁻¹ (W = diag 1/|H_n(k a_q)|) 平衡高階列與低階行的量級，
殘差與條件數都在平衡後的系統上量測。
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import linalg
from scipy.linalg import lapack

from emit_mimo.analysis.infomet import ChannelMatrix, Provenance
from emit_mimo.physics.fieldmap import FieldMap
from emit_mimo.physics.greens import (
    KLike,
    Point3,
    PointsLike,
    as_xyz,
    line_source_g2d_matrix,
    off_source_mask,
    wavenumber_value,
)
from emit_mimo.physics.specfun import (
    bessel_j,
    bessel_j_prime,
    hankel1,
    hankel1_prime,
    hankel1_table,
)
from emit_mimo.utils.config import get_config
from emit_mimo.utils.errors import ConditioningError, DomainError, GeometryError
from emit_mimo.utils.logger import LoggerMixin

# 圓柱間最小間隙 (公尺)
MIN_CLEARANCE = 1e-9


@dataclass(frozen=True)
class PEC:
    """理想導體 Perfect electric conductor"""

    name: str = "pec"


@dataclass(frozen=True)
class Dielectric:
    """
    無損介質圓柱 Lossless dielectric cylinder

    內部波數 k_p = k·sqrt(relative_permittivity)。
    """

    relative_permittivity: float
    name: str = "dielectric"

    def __post_init__(self) -> None:
        eps = self.relative_permittivity
        if not (np.isfinite(eps) and eps > 0):
            raise DomainError(
                f"相對介電常數必須為正實數 Relative permittivity must be positive: "
                f"{self.relative_permittivity}"
            )

    def k_inside(self, k: float) -> float:
        return k * math.sqrt(self.relative_permittivity)

    @classmethod
    def from_k_inside(cls, k_inside: float, k: float) -> "Dielectric":
        return cls(relative_permittivity=(k_inside / k) ** 2)


Material = Union[PEC, Dielectric]


@dataclass(frozen=True)
class Scatterer:
    """圓柱散射體 (z 忽略) Circular cylinder, z ignored"""

    center: Point3
    radius: float
    material: Material = field(default_factory=PEC)

    def __post_init__(self) -> None:
        if not (np.isfinite(self.radius) and self.radius > 0):
            raise GeometryError(f"半徑必須為正 Radius must be positive: {self.radius}")


@dataclass(frozen=True)
class SourceArray:
    """線源陣列與複數激勵 Line-source positions with complex excitations"""

    positions: Tuple[Point3, ...]
    excitations: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "positions", tuple(self.positions))
        amplitudes = np.asarray(self.excitations, dtype=complex).reshape(-1)
        object.__setattr__(self, "excitations", amplitudes)
        if len(self.positions) < 1:
            raise GeometryError("至少需要一個源 At least one source is required")
        if len(self.positions) != len(amplitudes):
            raise GeometryError(
                f"源位置與激勵數量不符 {len(self.positions)} positions vs "
                f"{len(amplitudes)} excitations"
            )
        xy = as_xyz(self.positions)[:, :2]
        gaps = np.linalg.norm(xy[:, np.newaxis] - xy[np.newaxis, :], axis=-1)
        np.fill_diagonal(gaps, np.inf)
        if np.any(gaps <= 0.0):
            i, j = np.argwhere(gaps <= 0.0)[0]
            raise GeometryError(f"源 {i} 與源 {j} 重合 Sources {i} and {j} coincide")

    @classmethod
    def unit(cls, positions: Sequence[Point3]) -> "SourceArray":
        return cls(tuple(positions), np.ones(len(positions), dtype=complex))

    @property
    def xy(self) -> np.ndarray:
        return as_xyz(self.positions)[:, :2]


@dataclass(frozen=True)
class Truncation:
    """截斷階數：n ∈ [-N_max, N_max] Truncation number"""

    n_max: int

    def __post_init__(self) -> None:
        if int(self.n_max) != self.n_max or self.n_max < 1:
            raise DomainError(
                f"N_max 必須為正整數 N_max must be a positive integer: {self.n_max}"
            )

    @property
    def orders(self) -> np.ndarray:
        return np.arange(-self.n_max, self.n_max + 1)

    @property
    def size(self) -> int:
        return 2 * self.n_max + 1


def t_coeff(
    scatterer: Scatterer, k: KLike, n: Union[int, np.ndarray]
) -> Union[complex, np.ndarray]:
    """
    單一圓柱的 T 係數 T_n

    PEC: T_n = -J_n(ka) / H_n(ka)
    介質 (TM, 非磁性):
        T_n = [k_p J'_n(k_p a) J_n(ka) - k J'_n(ka) J_n(k_p a)]
              / [k H'_n(ka) J_n(k_p a) - k_p J'_n(k_p a) H_n(ka)]

    Args:
        scatterer: 散射體
        k: 外部波數
        n: 整數階數，可為陣列

    Returns:
        複數 T_n；無損材料滿足 Re T = -|T|²
    """
    k_val = wavenumber_value(k)
    ka = k_val * scatterer.radius
    if isinstance(scatterer.material, PEC):
        value = -np.asarray(bessel_j(n, ka)) / np.asarray(hankel1(n, ka))
    else:
        k_in = scatterer.material.k_inside(k_val)
        kpa = k_in * scatterer.radius
        j_out = np.asarray(bessel_j(n, ka))
        jp_out = np.asarray(bessel_j_prime(n, ka))
        h_out = np.asarray(hankel1(n, ka))
        hp_out = np.asarray(hankel1_prime(n, ka))
        j_in = np.asarray(bessel_j(n, kpa))
        jp_in = np.asarray(bessel_j_prime(n, kpa))
        numerator = k_in * jp_in * j_out - k_val * jp_out * j_in
        denominator = k_val * hp_out * j_in - k_in * jp_in * h_out
        value = numerator / denominator
    return value.item() if value.ndim == 0 else value


def suggest_truncation(
    scatterers: Sequence[Scatterer], k: KLike, floor: Optional[int] = None
) -> Truncation:
    """
    建議截斷階數 N_max = ceil(x + 4·x^(1/3) + 4)，x = max k·a_p，下限 floor (預設 6)

    Raises:
        DomainError: 場景沒有散射體
    """
    if not scatterers:
        raise DomainError("空場景無法建議截斷 Cannot suggest a truncation for an empty scene")
    floor = get_config().nmax_floor if floor is None else floor
    k_val = wavenumber_value(k)
    x = max(k_val * s.radius for s in scatterers)
    n_max = int(math.ceil(x + 4.0 * float(np.cbrt(x)) + 4.0))
    return Truncation(max(n_max, floor))


def validate_geometry(
    scatterers: Sequence[Scatterer],
    sources: Optional[PointsLike] = None,
    probes: Optional[PointsLike] = None,
) -> None:
    """
    檢查幾何不變量

    - 圓柱兩兩分離，間隙 ≥ MIN_CLEARANCE
    - 源點嚴格位於所有圓柱外
    - 探測點不在圓柱內 (邊界上允許)

    Raises:
        GeometryError: 訊息指出違規的索引
    """
    if scatterers:
        centers = np.array([[s.center.x, s.center.y] for s in scatterers])
        radii = np.array([s.radius for s in scatterers])
        for q in range(len(scatterers)):
            for p in range(q + 1, len(scatterers)):
                gap = float(np.hypot(*(centers[p] - centers[q]))) - radii[p] - radii[q]
                if gap < MIN_CLEARANCE:
                    raise GeometryError(
                        f"圓柱 {q} 與 {p} 重疊或相切 Scatterers {q} and {p} overlap or touch "
                        f"(clearance {gap:.3e} m)"
                    )
    if sources is not None:
        inside = _points_inside(scatterers, sources, strict=False)
        if inside.size:
            idx, sc = inside[0]
            raise GeometryError(
                f"源 {idx} 位於圓柱 {sc} 內或邊界上 "
                f"Source {idx} lies inside or on scatterer {sc}"
            )
    if probes is not None:
        inside = _points_inside(scatterers, probes, strict=True)
        if inside.size:
            idx, sc = inside[0]
            raise GeometryError(
                f"探測點 {idx} 位於圓柱 {sc} 內 Probe {idx} lies inside scatterer {sc}"
            )


def _points_inside(
    scatterers: Sequence[Scatterer], points: PointsLike, strict: bool
) -> np.ndarray:
    """回傳 (點索引, 圓柱索引) 配對；strict=True 時邊界不算內部"""
    xy = as_xyz(points)[:, :2]
    if not scatterers or len(xy) == 0:
        return np.zeros((0, 2), dtype=int)
    centers = np.array([[s.center.x, s.center.y] for s in scatterers])
    radii = np.array([s.radius for s in scatterers])
    rho = np.linalg.norm(xy[:, np.newaxis, :] - centers[np.newaxis, :, :], axis=-1)
    if strict:
        hit = rho < radii * (1.0 - 1e-12)
    else:
        hit = rho <= radii
    return np.argwhere(hit)


def outside_mask(scatterers: Sequence[Scatterer], points: PointsLike) -> np.ndarray:
    """點位於所有圓柱外 (含邊界) 的布林遮罩"""
    xy = as_xyz(points)
    mask = np.ones(len(xy), dtype=bool)
    inside = _points_inside(scatterers, xy, strict=True)
    if inside.size:
        mask[inside[:, 0]] = False
    return mask


@dataclass(frozen=True)
class ScatterSolution:
    """
    求解結果 Solved cylindrical-wave coefficients

    coefficients[p, n + N_max] 為 I_n^(p)；t_matrix 同索引。
    """

    scene: "ScatteringScene"
    sources: SourceArray
    coefficients: np.ndarray
    t_matrix: np.ndarray
    residual: float

    @property
    def dimension(self) -> int:
        return int(self.coefficients.size)

    def total_field(self, probes: PointsLike) -> np.ndarray:
        return self.scene.field_of_sources(
            self.sources, probes, coefficients=self.coefficients
        )


class ScatteringScene(LoggerMixin):
    """
    圓柱群散射場景

    封裝 T 係數、Z 矩陣與其 LU 分解；分解在第一次求解時進行並快取，
    factorization_count 記錄分解次數。
    """

    def __init__(
        self,
        scatterers: Sequence[Scatterer],
        k: KLike,
        truncation: Optional[Truncation] = None,
        n_jobs: Optional[int] = None,
    ):
        self.scatterers: Tuple[Scatterer, ...] = tuple(scatterers)
        self.k = wavenumber_value(k)
        validate_geometry(self.scatterers)

        config = get_config()
        if truncation is None:
            truncation = (
                suggest_truncation(self.scatterers, self.k)
                if self.scatterers
                else Truncation(config.nmax_floor)
            )
        self.truncation = truncation
        self.n_jobs = n_jobs or config.n_jobs
        self.cond_limit = config.cond_limit
        self.residual_tol = config.residual_tol
        self.probe_chunk = config.probe_chunk

        orders = self.truncation.orders
        self.centers = np.array(
            [[s.center.x, s.center.y] for s in self.scatterers]
        ).reshape(-1, 2)
        self.t_matrix = np.array(
            [t_coeff(s, self.k, orders) for s in self.scatterers], dtype=complex
        ).reshape(len(self.scatterers), self.truncation.size)
        self.balance = 1.0 / np.array(
            [np.abs(hankel1(orders, self.k * s.radius)) for s in self.scatterers],
            dtype=float,
        ).reshape(-1)

        self._system: Optional[np.ndarray] = None
        self._balanced: Optional[np.ndarray] = None
        self._lu: Optional[Tuple[np.ndarray, np.ndarray]] = None
        self.factorization_count = 0
        self.rcond: Optional[float] = None

        self.logger.debug(
            f"🧱 場景建立 Scene created: {len(self.scatterers)} scatterers, "
            f"N_max={self.truncation.n_max}, k={self.k:.4f} rad/m"
        )

    @property
    def scatterer_count(self) -> int:
        return len(self.scatterers)

    @property
    def dimension(self) -> int:
        return self.scatterer_count * self.truncation.size

    def translation_matrix(self) -> np.ndarray:
        """
        圓柱間平移算子 A (不含 T)，對角區塊為零

        A[(q,n),(p,m)] = H_{n-m}(k d_pq) e^{-i(n-m) φ_pq}

        Returns:
            np.ndarray: (N·M, N·M) 複數矩陣
        """
        count = self.scatterer_count
        size = self.truncation.size
        n_max = self.truncation.n_max
        if count == 0:
            return np.zeros((0, 0), dtype=complex)

        # offsets[q, p] = r_p - r_q
        offsets = self.centers[np.newaxis, :, :] - self.centers[:, np.newaxis, :]
        distance = np.hypot(offsets[..., 0], offsets[..., 1])
        angle = np.arctan2(offsets[..., 1], offsets[..., 0])
        np.fill_diagonal(distance, 1.0)

        table = hankel1_table(2 * n_max, self.k * distance)
        orders = self.truncation.orders
        nu = orders[:, np.newaxis] - orders[np.newaxis, :]
        sign = np.where((nu < 0) & (nu % 2 == 1), -1.0, 1.0)
        h_nu = table[:, :, np.abs(nu)] * sign
        phase = nu[np.newaxis, np.newaxis, :, :] * angle[:, :, np.newaxis, np.newaxis]
        blocks = h_nu * np.exp(-1j * phase)
        idx = np.arange(count)
        blocks[idx, idx] = 0.0
        return blocks.transpose(0, 2, 1, 3).reshape(count * size, count * size)

    def system_matrix(self) -> np.ndarray:
        """Z = -I + A·diag(T)"""
        if self._system is None:
            translation = self.translation_matrix()
            z = translation * self.t_matrix.reshape(1, -1)
            z[np.diag_indices_from(z)] -= 1.0
            self._system = z
        return self._system

    def incident_coefficients(self, sources_xy: np.ndarray) -> np.ndarray:
        """
        單位線源在各圓柱的入射展開係數

        a_n^(q) = (i/4) H_n(k|r_s - r_q|) e^{-in φ_{s,q}}

        Args:
            sources_xy: (S, 2) 源座標

        Returns:
            np.ndarray: (S, N, M)
        """
        n_max = self.truncation.n_max
        offsets = sources_xy[:, np.newaxis, :] - self.centers[np.newaxis, :, :]
        distance = np.hypot(offsets[..., 0], offsets[..., 1])
        angle = np.arctan2(offsets[..., 1], offsets[..., 0])
        table = hankel1_table(n_max, self.k * distance)
        orders = self.truncation.orders
        sign = np.where((orders < 0) & (orders % 2 == 1), -1.0, 1.0)
        h_full = table[..., np.abs(orders)] * sign
        return 0.25j * h_full * np.exp(-1j * orders * angle[..., np.newaxis])

    def balanced_matrix(self) -> np.ndarray:
        """W Z W⁻¹，W = diag(self.balance)"""
        if self._balanced is None:
            w = self.balance
            ratio = w[:, np.newaxis] / w[np.newaxis, :]
            self._balanced = self.system_matrix() * ratio
        return self._balanced

    def factorize(self) -> Tuple[np.ndarray, np.ndarray]:
        """
        LU 分解平衡後的 Z 並估計條件數

        Raises:
            ConditioningError: 條件數估計超過 cond_limit
        """
        if self._lu is not None:
            return self._lu
        z = self.balanced_matrix()
        lu, piv = linalg.lu_factor(z, check_finite=True)
        self.factorization_count += 1
        anorm = float(np.linalg.norm(z, 1))
        gecon = lapack.get_lapack_funcs("gecon", (lu,))
        rcond, info = gecon(lu, anorm, norm="1")
        self.rcond = float(rcond)
        condition = np.inf if self.rcond == 0.0 else 1.0 / self.rcond
        if info != 0 or condition > self.cond_limit:
            raise ConditioningError(
                f"Z 矩陣病態 Ill-conditioned system: condition estimate "
                f"{condition:.3e} > {self.cond_limit:.1e} "
                f"(dimension {self.dimension}, N_max {self.truncation.n_max})"
            )
        self._lu = (lu, piv)
        self.logger.info(
            f"🧮 LU 分解完成 LU factorization done: dimension {self.dimension}, "
            f"cond ≈ {condition:.2e}"
        )
        return self._lu

    def solve_coefficients(self, rhs: np.ndarray) -> Tuple[np.ndarray, float]:
        """
        以快取的分解求解多個右端項

        Args:
            rhs: (N·M, S) 的 V 矩陣

        Returns:
            (I 矩陣 (N·M, S), 平衡後系統的最大相對殘差)
        """
        if self.dimension == 0:
            return np.zeros((0, rhs.shape[1]), dtype=complex), 0.0
        lu = self.factorize()
        w = self.balance[:, np.newaxis]
        scaled = rhs * w
        balanced = linalg.lu_solve(lu, scaled)
        rhs_norm = np.linalg.norm(scaled, axis=0)
        rhs_norm[rhs_norm == 0.0] = 1.0
        misfit = self.balanced_matrix() @ balanced - scaled
        residual = np.linalg.norm(misfit, axis=0) / rhs_norm
        worst = float(residual.max()) if residual.size else 0.0
        if worst > self.residual_tol:
            raise ConditioningError(
                f"殘差過大 Residual {worst:.3e} exceeds tolerance {self.residual_tol:.1e}"
            )
        return balanced / w, worst

    def solve(self, sources: SourceArray) -> ScatterSolution:
        """求解單一激勵 Solve Z·I = V for one source array"""
        validate_geometry(self.scatterers, sources=sources.positions)
        size = self.truncation.size
        unit = self.incident_coefficients(sources.xy)
        incident = np.tensordot(sources.excitations, unit, axes=1)
        rhs = -incident.reshape(-1, 1)
        coefficients, residual = self.solve_coefficients(rhs)
        return ScatterSolution(
            scene=self,
            sources=sources,
            coefficients=coefficients[:, 0].reshape(self.scatterer_count, size),
            t_matrix=self.t_matrix,
            residual=residual,
        )

    def _unit_source_coefficients(self, tx_xy: np.ndarray) -> np.ndarray:
        """每個發射點單位激勵的係數，(S, N, M)"""
        size = self.truncation.size
        if self.dimension == 0:
            return np.zeros((len(tx_xy), 0, size), dtype=complex)
        unit = self.incident_coefficients(tx_xy)
        rhs = -unit.reshape(len(tx_xy), -1).T
        solution, _ = self.solve_coefficients(rhs)
        return solution.T.reshape(len(tx_xy), self.scatterer_count, size)

    def _scattered_chunk(
        self, weights: np.ndarray, probes_xy: np.ndarray
    ) -> np.ndarray:
        """
        外行波疊加 Σ_p Σ_n w[s,p,n] H_n(kρ_p) e^{inθ_p}

        e^{inθ} 由單位相量連乘取得，負階 H_{-n} e^{-inθ} = (-1)^n H_n conj(e^{inθ})。

        Args:
            weights: (S, N, M)，即 T·I
            probes_xy: (P, 2)

        Returns:
            np.ndarray: (P, S)
        """
        n_max = self.truncation.n_max
        offsets = probes_xy[:, np.newaxis, :] - self.centers[np.newaxis, :, :]
        rho = np.hypot(offsets[..., 0], offsets[..., 1])
        phasor = (offsets[..., 0] + 1j * offsets[..., 1]) / rho
        table = hankel1_table(n_max, self.k * rho)

        powers = np.empty(table.shape, dtype=complex)
        powers[..., 0] = 1.0
        for n in range(1, n_max + 1):
            powers[..., n] = powers[..., n - 1] * phasor
        positive = table * powers
        parity = np.where(np.arange(n_max, 0, -1) % 2 == 1, -1.0, 1.0)
        negative = table[..., :0:-1] * np.conj(powers[..., :0:-1]) * parity
        harmonics = np.concatenate([negative, positive], axis=-1)
        flat = weights.reshape(weights.shape[0], -1)
        return harmonics.reshape(len(probes_xy), -1) @ flat.T

    def _scattered_field(
        self, weights: np.ndarray, probes_xy: np.ndarray
    ) -> np.ndarray:
        if self.scatterer_count == 0 or len(probes_xy) == 0:
            return np.zeros((len(probes_xy), weights.shape[0]), dtype=complex)
        step = self.probe_chunk
        chunks = [probes_xy[i : i + step] for i in range(0, len(probes_xy), step)]
        if self.n_jobs > 1 and len(chunks) > 1:
            with ThreadPoolExecutor(max_workers=self.n_jobs) as executor:
                parts = list(
                    executor.map(lambda c: self._scattered_chunk(weights, c), chunks)
                )
        else:
            parts = [self._scattered_chunk(weights, c) for c in chunks]
        return np.concatenate(parts, axis=0)

    def field_of_sources(
        self,
        sources: SourceArray,
        probes: PointsLike,
        coefficients: Optional[np.ndarray] = None,
    ) -> np.ndarray:
        """
        總場 = 入射場 + 散射場，於探測點

        Args:
            sources: 源陣列
            probes: 探測點 (不得在圓柱內)
            coefficients: 已求解的 I (N, M)；None 時重新求解

        Returns:
            np.ndarray: (P,) 複數場值
        """
        probes_xyz = as_xyz(probes)
        validate_geometry(self.scatterers, probes=probes_xyz)
        free = line_source_g2d_matrix(probes_xyz, sources.xy, self.k)
        incident = free @ sources.excitations
        if self.scatterer_count == 0:
            return incident
        if coefficients is None:
            coefficients = self.solve(sources).coefficients
        weights = (self.t_matrix * coefficients)[np.newaxis]
        return incident + self._scattered_field(weights, probes_xyz[:, :2])[:, 0]

    def transfer_matrix(self, tx: PointsLike, probes: PointsLike) -> np.ndarray:
        """
        單位激勵轉移矩陣 G[i, j] = 發射點 j 的單位源在探測點 i 的總場

        所有發射點共用同一次 LU 分解。

        Returns:
            np.ndarray: (P, N_T) 複數矩陣
        """
        tx_xyz = as_xyz(tx)
        probes_xyz = as_xyz(probes)
        validate_geometry(self.scatterers, sources=tx_xyz, probes=probes_xyz)
        incident = line_source_g2d_matrix(probes_xyz, tx_xyz, self.k)
        if self.scatterer_count == 0:
            return incident
        coefficients = self._unit_source_coefficients(tx_xyz[:, :2])
        weights = self.t_matrix[np.newaxis] * coefficients
        return incident + self._scattered_field(weights, probes_xyz[:, :2])

    def valid_probe_mask(self, tx: PointsLike, probes: PointsLike) -> np.ndarray:
        """圓柱外且不與發射點重合的探測點"""
        outside = outside_mask(self.scatterers, probes)
        return outside & off_source_mask(tx, probes, planar=True)

    def fixed_point_defect(self, solution: ScatterSolution) -> float:
        """
        以逐項迴圈驗證 Foldy–Lax 不動點形式

        ‖I - (a + Σ_{p≠q} 平移·T·I)‖ / ‖a‖，與向量化組裝無共用路徑。
        """
        size = self.truncation.size
        orders = self.truncation.orders
        incident = np.zeros((self.scatterer_count, size), dtype=complex)
        sources = solution.sources
        for pos, amp in zip(sources.xy, sources.excitations):
            for q in range(self.scatterer_count):
                dx, dy = pos - self.centers[q]
                d = math.hypot(dx, dy)
                phi = math.atan2(dy, dx)
                for i, n in enumerate(orders):
                    h = hankel1(int(n), self.k * d)
                    incident[q, i] += amp * 0.25j * h * np.exp(-1j * n * phi)

        rebuilt = incident.copy()
        for q in range(self.scatterer_count):
            for p in range(self.scatterer_count):
                if p == q:
                    continue
                dx, dy = self.centers[p] - self.centers[q]
                d = math.hypot(dx, dy)
                phi = math.atan2(dy, dx)
                for i, n in enumerate(orders):
                    for j, m in enumerate(orders):
                        nu = int(n - m)
                        rebuilt[q, i] += (
                            hankel1(nu, self.k * d)
                            * np.exp(-1j * nu * phi)
                            * self.t_matrix[p, j]
                            * solution.coefficients[p, j]
                        )
        defect = np.linalg.norm(solution.coefficients - rebuilt)
        return float(defect / np.linalg.norm(incident))


def assemble_system(
    scatterers: Sequence[Scatterer],
    sources: SourceArray,
    k: KLike,
    trunc: Truncation,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    組裝 Foldy–Lax 系統

    Returns:
        (Z, V)：Z 為 (N·M, N·M)，V 為 (N·M,)，索引 (q, n) → q·M + (n + N_max)
    """
    scene = ScatteringScene(scatterers, k, trunc)
    validate_geometry(scene.scatterers, sources=sources.positions)
    incident = np.tensordot(
        sources.excitations, scene.incident_coefficients(sources.xy), axes=1
    )
    return scene.system_matrix().copy(), -incident.reshape(-1)


def solve_scene(
    scatterers: Sequence[Scatterer],
    sources: SourceArray,
    k: KLike,
    trunc: Optional[Truncation] = None,
) -> ScatterSolution:
    """以密集 LU 求解場景 Solve the scene by dense LU with partial pivoting"""
    return ScatteringScene(scatterers, k, trunc).solve(sources)


def total_field(solution: ScatterSolution, probes: PointsLike) -> FieldMap:
    """於探測點計算總場 Evaluate the total field at the probes"""
    points = as_xyz(probes)
    return FieldMap(points=points, values=solution.total_field(points))


def channel_matrix_eit(
    scatterers: Sequence[Scatterer],
    tx_positions: PointsLike,
    rx_positions: PointsLike,
    k: KLike,
    trunc: Optional[Truncation] = None,
    scene: Optional[ScatteringScene] = None,
) -> ChannelMatrix:
    """
    散射空間通道矩陣 G_EIT

    第 j 行為 tx_j 單位激勵在所有接收點的總場；無散射體時退化為二維自由空間通道。
    """
    scene = scene or ScatteringScene(scatterers, k, trunc)
    entries = scene.transfer_matrix(tx_positions, rx_positions)
    provenance = (
        Provenance.SCATTERED if scene.scatterer_count else Provenance.FREE_SPACE_2D
    )
    return ChannelMatrix(entries=entries, provenance=provenance)


def grid_scatterers(
    rows: int,
    cols: int,
    pitch: Union[float, Tuple[float, float]],
    radius: float,
    center: Tuple[float, float] = (0.0, 0.0),
    material: Optional[Material] = None,
) -> List[Scatterer]:
    """
    以中心為基準的 rows×cols 圓柱格陣，列優先 (row-major) 排列

    Args:
        pitch: 間距，或 (x 間距, y 間距)
    """
    px, py = (pitch, pitch) if np.isscalar(pitch) else pitch  # type: ignore[misc]
    material = material or PEC()
    xs = center[0] + (np.arange(cols) - (cols - 1) / 2.0) * px
    ys = center[1] + (np.arange(rows) - (rows - 1) / 2.0) * py
    return [
        Scatterer(Point3(float(x), float(y)), radius, material) for y in ys for x in xs
    ]


def remove_random(
    scatterers: Sequence[Scatterer], count: int, seed: int
) -> List[Scatterer]:
    """以固定種子隨機移除 count 個散射體，保留原順序"""
    if count < 0 or count > len(scatterers):
        raise GeometryError(
            f"移除數量無效 Invalid removal count {count} "
            f"for {len(scatterers)} scatterers"
        )
    rng = np.random.default_rng(seed)
    removed = set(rng.choice(len(scatterers), size=count, replace=False).tolist())
    return [s for i, s in enumerate(scatterers) if i not in removed]


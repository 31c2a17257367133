"""
資訊指標模組 - Information Metrics Module

通道矩陣的正規化、SVD 模態分解、電磁有效容量 (奇異值熵的指數)、
Shannon 容量、串擾矩陣與各模態的場分布。
"""

from dataclasses import dataclass, replace
from enum import Enum
from typing import List, Optional, Protocol, Sequence

import numpy as np

from emit_mimo.physics.fieldmap import FieldMap
from emit_mimo.physics.greens import PointsLike, as_xyz
from emit_mimo.utils.config import get_config
from emit_mimo.utils.errors import DegenerateChannelError, DomainError
from emit_mimo.utils.logger import get_logger

logger = get_logger(__name__)


class Provenance(str, Enum):
    """通道來源 Channel provenance"""

    FREE_SPACE_3D = "free_space_3d"
    FREE_SPACE_2D = "free_space_2d"
    SCATTERED = "scattered"


@dataclass(frozen=True)
class ChannelMatrix:
    """
    通道矩陣 Channel matrix (N_R × N_T)

    alpha 為 None 表示原始通道；否則為正規化步驟的縮放係數。
    """

    entries: np.ndarray
    provenance: Provenance = Provenance.FREE_SPACE_3D
    alpha: Optional[float] = None

    def __post_init__(self) -> None:
        entries = np.atleast_2d(np.asarray(self.entries, dtype=complex))
        if entries.ndim != 2:
            raise DomainError(
                f"通道必須為二維矩陣 Channel must be 2-D, got shape {entries.shape}"
            )
        object.__setattr__(self, "entries", entries)
        if self.alpha is not None:
            target = self.n_rx * self.n_tx
            if abs(self.frobenius**2 - target) > 1e-9 * target:
                raise DomainError(
                    f"正規化通道的 Frobenius² 應為 {target} Normalized channel has "
                    f"Frobenius² {self.frobenius**2:.12g}"
                )

    @property
    def n_rx(self) -> int:
        return int(self.entries.shape[0])

    @property
    def n_tx(self) -> int:
        return int(self.entries.shape[1])

    @property
    def frobenius(self) -> float:
        return float(np.linalg.norm(self.entries))

    @property
    def is_normalized(self) -> bool:
        return self.alpha is not None


@dataclass(frozen=True)
class ModeDecomposition:
    """
    模態分解 H = U·diag(S)·V^H

    u: (N_R, N_R) 么正；s: 遞減奇異值 (min(N_R, N_T),)；
    v: (N_T, N_T) 么正，第 m 行為第 m 個發射模態；sigma_norm = s / Σs
    """

    u: np.ndarray
    s: np.ndarray
    v: np.ndarray
    sigma_norm: np.ndarray

    @property
    def mode_count(self) -> int:
        return int(self.s.size)

    def active_modes(self, rtol: float = 1e-12) -> int:
        """非零奇異值的數量 Number of non-negligible singular values"""
        if self.s.size == 0 or self.s[0] == 0.0:
            return 0
        return int(np.count_nonzero(self.s > rtol * self.s[0]))

    def reconstruct(self) -> np.ndarray:
        r = self.s.size
        return (self.u[:, :r] * self.s) @ self.v[:, :r].conj().T


class Propagator(Protocol):
    """可計算單位激勵轉移矩陣的場景 Anything that maps unit tx excitations to probe fields"""

    def transfer_matrix(self, tx: PointsLike, probes: PointsLike) -> np.ndarray: ...

    def valid_probe_mask(self, tx: PointsLike, probes: PointsLike) -> np.ndarray: ...


@dataclass(frozen=True)
class MimoLink:
    """
    MIMO 鏈路：傳播場景 + 發射/接收陣列

    所有模態場、串擾與通道皆經由同一個傳播器計算。
    """

    propagator: Propagator
    tx: np.ndarray
    rx: np.ndarray
    provenance: Provenance

    def __post_init__(self) -> None:
        object.__setattr__(self, "tx", as_xyz(self.tx))
        object.__setattr__(self, "rx", as_xyz(self.rx))

    def channel(self) -> ChannelMatrix:
        return ChannelMatrix(entries=self.transfer(self.rx), provenance=self.provenance)

    def transfer(self, probes: PointsLike) -> np.ndarray:
        return self.propagator.transfer_matrix(self.tx, probes)

    def probe_mask(self, probes: PointsLike) -> np.ndarray:
        return self.propagator.valid_probe_mask(self.tx, probes)


def normalize(h: ChannelMatrix) -> ChannelMatrix:
    """
    通道正規化，使 ‖αH‖_F² = N_T·N_R

    確定性通道不需取期望值。

    Raises:
        DegenerateChannelError: 全零通道
    """
    if not np.all(np.isfinite(h.entries)):
        raise DomainError("通道含非有限值 Channel has non-finite entries")
    norm = h.frobenius
    if norm == 0.0:
        raise DegenerateChannelError("全零通道無法正規化 Cannot normalize an all-zero channel")
    alpha = float(np.sqrt(h.n_tx * h.n_rx) / norm)
    return replace(h, entries=h.entries * alpha, alpha=alpha)


def _fix_phase(columns: np.ndarray, count: int) -> np.ndarray:
    """使每行最大幅值元素為正實數，回傳各行乘上的相位"""
    phases = np.ones(count, dtype=complex)
    for j in range(count):
        idx = int(np.argmax(np.abs(columns[:, j])))
        pivot = columns[idx, j]
        if pivot != 0:
            phases[j] = np.conj(pivot) / abs(pivot)
    return phases


def decompose(h: ChannelMatrix) -> ModeDecomposition:
    """
    完整 SVD 與確定性相位慣例

    V 每行最大幅值元素為正實數；U 對應行乘上同一相位，使 H 不變。
    零空間中的 U 行以相同規則固定。

    Raises:
        DomainError: 通道含非有限值
    """
    entries = h.entries
    if not np.all(np.isfinite(entries)):
        raise DomainError("通道含非有限值 Channel has non-finite entries")
    u, s, vh = np.linalg.svd(entries, full_matrices=True)
    v = vh.conj().T
    rank = s.size

    v_phase = _fix_phase(v, v.shape[1])
    v = v * v_phase
    u = u.copy()
    u[:, :rank] = u[:, :rank] * v_phase[:rank]
    if u.shape[1] > rank:
        u[:, rank:] = u[:, rank:] * _fix_phase(u[:, rank:], u.shape[1] - rank)

    total = float(s.sum())
    sigma_norm = s / total if total > 0 else np.zeros_like(s)
    return ModeDecomposition(u=u, s=s, v=v, sigma_norm=sigma_norm)


def effective_capacity(md: ModeDecomposition) -> float:
    """
    電磁有效容量 C_eff = exp(-Σ σ'_i ln σ'_i)，0·ln 0 = 0

    結果與對數底數無關。

    Raises:
        DegenerateChannelError: 奇異值全為零
    """
    p = md.sigma_norm[md.sigma_norm > 0]
    if p.size == 0:
        raise DegenerateChannelError("奇異值全為零 All singular values are zero")
    return float(np.exp(-np.sum(p * np.log(p))))


def available_modes(md: ModeDecomposition) -> int:
    """可用模態數：索引 ≤ round(C_eff)"""
    return int(round(effective_capacity(md)))


def shannon_capacity(
    md: ModeDecomposition, snr: float, n_t: Optional[int] = None
) -> float:
    """
    Shannon 容量 C = Σ log2(1 + snr·σ_i²/N_T)  (bits/s/Hz)

    同時以 log det(I + (snr/N_T) H H^H) 交叉檢查，差異超過 1e-9 時記錄警告。

    Raises:
        DomainError: snr 為負
    """
    if not np.isfinite(snr) or snr < 0:
        raise DomainError(f"信噪比必須非負 SNR must be non-negative: {snr}")
    n_t = md.v.shape[0] if n_t is None else int(n_t)
    capacity = float(np.sum(np.log2(1.0 + snr * md.s**2 / n_t)))

    det_form = shannon_capacity_logdet(md.reconstruct(), snr, n_t)
    if abs(det_form - capacity) > 1e-9 * max(1.0, capacity):
        logger.warning(
            f"⚠️ 容量兩種算法不一致 Capacity forms disagree: "
            f"sum {capacity:.12g} vs logdet {det_form:.12g}"
        )
    return capacity


def shannon_capacity_logdet(entries: np.ndarray, snr: float, n_t: int) -> float:
    """log2 det(I + (snr/N_T) H H^H)"""
    gram = entries @ entries.conj().T
    sign, logdet = np.linalg.slogdet(np.eye(gram.shape[0]) + (snr / n_t) * gram)
    return float(logdet / np.log(2.0))


def crosstalk_matrix(
    md: ModeDecomposition,
    link: MimoLink,
    dense_rx_line: PointsLike,
    modes: Optional[int] = None,
    oversampling: Optional[int] = None,
) -> np.ndarray:
    """
    串擾矩陣 CT_mn = |⟨E_m, E_n⟩| / (‖E_m‖·‖E_n‖)

    E_m 為發射陣列以 V 第 m 行激勵時，在密集接收線上的場。
    取樣數少於 oversampling × N_R 時只記錄警告 (於通道取樣點上計算時即為單位矩陣)。

    Args:
        md: 模態分解
        link: 產生該分解的鏈路
        dense_rx_line: 密集接收取樣點
        modes: 使用的模態數，預設為非零奇異值數

    Returns:
        np.ndarray: (modes, modes) 實對稱矩陣，對角為 1

    Raises:
        DegenerateChannelError: 某模態場為零
    """
    samples = as_xyz(dense_rx_line)
    if oversampling is None:
        oversampling = get_config().crosstalk_oversampling
    if len(samples) < oversampling * len(link.rx):
        logger.warning(
            f"⚠️ 接收線取樣不足 Sparse receive line: {len(samples)} samples for "
            f"{len(link.rx)} receive elements (< {oversampling}×)"
        )
    count = md.active_modes() if modes is None else int(modes)
    if count < 1 or count > md.v.shape[1]:
        raise DomainError(f"模態數無效 Invalid mode count: {count}")
    fields = link.transfer(samples) @ md.v[:, :count]
    norms = np.linalg.norm(fields, axis=0)
    if np.any(norms == 0.0):
        bad = int(np.argmin(norms))
        raise DegenerateChannelError(
            f"模態 {bad + 1} 的場為零 Mode {bad + 1} radiates no field"
        )
    gram = np.abs(fields.conj().T @ fields) / np.outer(norms, norms)
    gram = 0.5 * (gram + gram.T)
    np.fill_diagonal(gram, 1.0)
    return np.clip(gram, 0.0, 1.0)


def mode_field_maps(
    md: ModeDecomposition,
    link: MimoLink,
    probes: PointsLike,
    count: Optional[int] = None,
    grid_shape: Optional[Sequence[int]] = None,
) -> List[FieldMap]:
    """
    各模態的正規化場分布

    轉移矩陣只計算一次，模態 m 的場為 T·V[:, m] (線性疊加)。
    圓柱內或發射點上的探測點被遮罩。

    Returns:
        List[FieldMap]: 每個模態一張，最大幅值為 1
    """
    points = as_xyz(probes)
    mask = link.probe_mask(points)
    count = md.active_modes() if count is None else int(count)
    shape = tuple(grid_shape) if grid_shape is not None else None
    transfer = np.zeros((len(points), md.v.shape[0]), dtype=complex)
    if mask.any():
        transfer[mask] = link.transfer(points[mask])

    maps = []
    for m in range(count):
        field_map = FieldMap(
            points=points, values=transfer @ md.v[:, m], mask=mask, grid_shape=shape
        )
        maps.append(field_map.normalized())
    return maps


def mode_energy_at(
    md: ModeDecomposition,
    link: MimoLink,
    points: PointsLike,
    count: Optional[int] = None,
) -> np.ndarray:
    """
    各模態在指定點上的能量，相對於第一模態

    Returns:
        np.ndarray: (count,)，第一項為 1
    """
    count = md.active_modes() if count is None else int(count)
    fields = link.transfer(points) @ md.v[:, :count]
    energy = np.sum(np.abs(fields) ** 2, axis=0)
    if energy[0] == 0.0:
        raise DegenerateChannelError("第一模態能量為零 Mode 1 delivers no energy")
    return energy / energy[0]

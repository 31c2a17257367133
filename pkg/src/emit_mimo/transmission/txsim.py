"""
模態功率分配與影像傳輸模擬 - Mode Power Allocation and Image Transmission

- 功率分配：λ_m ∝ σ_m (Cauchy 不等式的等號條件)，約束為 Σλ = P0 ("sum")
  或 Σλ² = P0² ("sphere")
- 預編碼：振幅 a = sqrt(P0)·λ/‖λ‖₂，x = s·Σ a_m V_m，因此 ‖x‖² = P0
- 接收：ỹ = U^H y；預設以鏈路模態的等增益和 Re Σ ỹ_m 判決 (即接收評估函數 f)，
  可選最大比合併 (權重 σ_m·a_m)
- 8 位元灰階影像，列優先、每像素 MSB 先出，每位元一個 BPSK 符號
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from emit_mimo.analysis.infomet import ChannelMatrix, ModeDecomposition, decompose
from emit_mimo.utils.config import get_config
from emit_mimo.utils.errors import DomainError, FramingError
from emit_mimo.utils.logger import get_logger

logger = get_logger(__name__)

CONSTRAINTS = ("sum", "sphere")
COMBINERS = ("objective", "mrc")


@dataclass(frozen=True)
class AllocationResult:
    """
    功率分配結果

    lambdas[i] 對應模態 modes[i] (0 起算)；objective 為 f = Σ σ_m λ_m。
    """

    lambdas: np.ndarray
    modes: Tuple[int, ...]
    objective: float
    p0: float
    constraint: str = "sum"

    @property
    def amplitudes(self) -> np.ndarray:
        """單位球上的振幅方向乘以 sqrt(P0)"""
        norm = float(np.linalg.norm(self.lambdas))
        return np.sqrt(self.p0) * self.lambdas / norm


@dataclass(frozen=True)
class LinkConfig:
    """
    鏈路設定

    Attributes:
        modes: 接收端使用的模態 (0 起算)
        noise_std: 每個接收元件每個實數維度的雜訊標準差 χ
        seed: 64 位元亂數種子
        modulation: 僅支援 "bpsk"
        combining: "objective" (等增益) 或 "mrc" (最大比)
    """

    modes: Tuple[int, ...]
    noise_std: float = 0.0
    seed: int = 0
    modulation: str = "bpsk"
    # 預設 objective；最佳化 < mode-1 < mode-3 的 BER 排序只在此合併方式下成立，
    # mrc 時 mode-1 反而優於最佳化 (image_link_3x3: 0.00133 vs 0.00298)
    combining: str = "objective"
    batch_size: int = field(default_factory=lambda: get_config().batch_size)

    def __post_init__(self) -> None:
        object.__setattr__(self, "modes", tuple(int(m) for m in self.modes))
        distinct = len(set(self.modes)) == len(self.modes)
        if not self.modes or min(self.modes) < 0 or not distinct:
            raise DomainError(f"模態集合無效 Invalid mode set: {self.modes}")
        if not (np.isfinite(self.noise_std) and self.noise_std >= 0):
            raise DomainError(
                f"雜訊標準差必須為非負有限值 Noise std must be finite and ≥ 0: "
                f"{self.noise_std}"
            )
        if not (0 <= int(self.seed) < 2**64):
            raise DomainError(f"種子必須為 64 位元無號整數 Seed must be a u64: {self.seed}")
        if self.modulation.lower() != "bpsk":
            raise DomainError(f"僅支援 BPSK Only BPSK is supported: {self.modulation}")
        if self.combining not in COMBINERS:
            raise DomainError(f"未知的合併方式 Unknown combining: {self.combining}")
        if self.batch_size < 1:
            raise DomainError(
                f"批次大小必須為正 Batch size must be positive: {self.batch_size}"
            )


@dataclass(frozen=True)
class TransmissionResult:
    """影像傳輸結果"""

    image: np.ndarray
    ber: float
    psnr: float
    bit_errors: int
    n_bits: int


def allocate_power(
    md: ModeDecomposition, p0: float, mode_count: int, constraint: str = "sum"
) -> AllocationResult:
    """
    λ_m ∝ σ_m 的功率分配

    Args:
        md: 模態分解
        p0: 總功率 P0
        mode_count: 使用前 mode_count 個模態
        constraint: "sum" (Σλ = P0) 或 "sphere" (Σλ² = P0²)

    Raises:
        DomainError: P0 ≤ 0、模態數無效或約束未知
    """
    if not (np.isfinite(p0) and p0 > 0):
        raise DomainError(f"總功率必須為正 P0 must be positive: {p0}")
    if constraint not in CONSTRAINTS:
        raise DomainError(f"未知的約束 Unknown constraint: {constraint}")
    positive = int(np.count_nonzero(md.s > 0))
    if mode_count < 1 or mode_count > positive:
        raise DomainError(
            f"模態數 {mode_count} 超出正奇異值數 {positive} Mode count out of range"
        )

    sigma = md.s[:mode_count]
    scale = sigma.sum() if constraint == "sum" else np.linalg.norm(sigma)
    lambdas = p0 * sigma / scale
    return AllocationResult(
        lambdas=lambdas,
        modes=tuple(range(mode_count)),
        objective=float(np.dot(sigma, lambdas)),
        p0=float(p0),
        constraint=constraint,
    )


def single_mode_allocation(
    md: ModeDecomposition, p0: float, mode: int
) -> AllocationResult:
    """全部功率給單一模態 (0 起算) All power on one mode"""
    if not (np.isfinite(p0) and p0 > 0):
        raise DomainError(f"總功率必須為正 P0 must be positive: {p0}")
    if mode < 0 or mode >= md.s.size:
        raise DomainError(f"模態索引超出範圍 Mode index out of range: {mode}")
    return AllocationResult(
        lambdas=np.array([float(p0)]),
        modes=(int(mode),),
        objective=float(md.s[mode] * p0),
        p0=float(p0),
    )


def evaluate_objective(md: ModeDecomposition, allocation: AllocationResult) -> float:
    """接收評估函數 f = Σ_m σ_m λ_m"""
    sigma = md.s[list(allocation.modes)]
    return float(np.dot(sigma, allocation.lambdas))


def image_to_bits(image: np.ndarray) -> np.ndarray:
    """列優先、MSB 先出 Row-major, MSB first"""
    pixels = np.asarray(image)
    if pixels.dtype != np.uint8:
        raise FramingError(f"影像必須為 8 位元 Image must be uint8, got {pixels.dtype}")
    return np.unpackbits(pixels.reshape(-1))


def bits_to_image(bits: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    expected = int(np.prod(shape)) * 8
    if bits.size != expected:
        raise FramingError(
            f"位元數 {bits.size} 與影像 {shape} 不符 Bit count does not match the image"
        )
    return np.packbits(bits.astype(np.uint8)).reshape(shape)


def precode(
    bits: np.ndarray, v: np.ndarray, allocation: AllocationResult
) -> np.ndarray:
    """
    BPSK 預編碼：位元 1 → s = +1，位元 0 → s = -1，x = s·V[:, modes]·a

    Returns:
        np.ndarray: (符號數, N_T) 複數發射向量；空位元流回傳 (0, N_T)
    """
    bits = np.asarray(bits).reshape(-1)
    if max(allocation.modes) >= v.shape[1]:
        raise FramingError(
            f"分配模態超出 V 的行數 Allocation uses mode beyond V "
            f"({v.shape[1]} columns)"
        )
    direction = v[:, list(allocation.modes)] @ allocation.amplitudes
    symbols = 2.0 * bits.astype(float) - 1.0
    return symbols[:, np.newaxis] * direction[np.newaxis, :]


def _combiner_weights(
    md: ModeDecomposition, link: LinkConfig, allocation: AllocationResult
) -> np.ndarray:
    weights = np.zeros(len(link.modes))
    if link.combining == "objective":
        weights[:] = 1.0
    else:
        amplitudes = dict(zip(allocation.modes, allocation.amplitudes))
        for i, m in enumerate(link.modes):
            weights[i] = md.s[m] * amplitudes.get(m, 0.0)
    return weights


def _detect_batch(
    tx: np.ndarray,
    entries: np.ndarray,
    u_h: np.ndarray,
    weights: np.ndarray,
    noise_std: float,
    seed_seq: np.random.SeedSequence,
) -> np.ndarray:
    received = tx @ entries.T
    if noise_std > 0:
        rng = np.random.default_rng(seed_seq)
        real = rng.standard_normal(received.shape)
        noise = real + 1j * rng.standard_normal(received.shape)
        received = received + noise_std * noise
    projected = received @ u_h.T
    decision = np.real(projected @ weights)
    return (decision > 0).astype(np.uint8)


def transmit_bits(
    bits: np.ndarray,
    channel: ChannelMatrix,
    link: LinkConfig,
    allocation: AllocationResult,
    md: Optional[ModeDecomposition] = None,
    n_jobs: Optional[int] = None,
) -> np.ndarray:
    """
    位元流經通道傳輸並判決

    每個批次使用由種子衍生的獨立亂數串流，結果依批次順序合併，與執行緒數無關。

    Raises:
        FramingError: 分配模態不在鏈路模態內，或超出通道秩
    """
    md = md or decompose(channel)
    rank = md.s.size
    if max(link.modes) >= rank:
        raise FramingError(f"鏈路模態超出通道秩 {rank} Link mode beyond channel rank")
    if not set(allocation.modes) <= set(link.modes):
        raise FramingError(
            f"分配模態 {allocation.modes} 不在鏈路模態 {link.modes} 內 "
            f"Allocation modes outside the link"
        )
    bits = np.asarray(bits).reshape(-1)
    if bits.size == 0:
        return np.zeros(0, dtype=np.uint8)

    tx = precode(bits, md.v, allocation)
    u_h = md.u[:, list(link.modes)].conj().T
    weights = _combiner_weights(md, link, allocation)
    starts = range(0, bits.size, link.batch_size)
    streams = np.random.SeedSequence(int(link.seed)).spawn(len(starts))
    jobs = [(tx[s : s + link.batch_size], stream) for s, stream in zip(starts, streams)]

    def run(job: Tuple[np.ndarray, np.random.SeedSequence]) -> np.ndarray:
        batch, stream = job
        return _detect_batch(
            batch, channel.entries, u_h, weights, link.noise_std, stream
        )

    n_jobs = n_jobs or get_config().n_jobs
    if n_jobs > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as executor:
            decided = list(executor.map(run, jobs))
    else:
        decided = [run(job) for job in jobs]
    return np.concatenate(decided)


def psnr(original: np.ndarray, received: np.ndarray) -> float:
    """峰值信噪比 (dB)；完全相同時為 inf"""
    mse = float(np.mean((original.astype(float) - received.astype(float)) ** 2))
    if mse == 0.0:
        return float("inf")
    return float(10.0 * np.log10(255.0**2 / mse))


def transmit_image(
    image: np.ndarray,
    channel: ChannelMatrix,
    link: LinkConfig,
    allocation: AllocationResult,
    md: Optional[ModeDecomposition] = None,
    n_jobs: Optional[int] = None,
) -> TransmissionResult:
    """
    8 位元灰階影像經 EMIT 鏈路傳輸

    Returns:
        TransmissionResult: 接收影像、BER、PSNR
    """
    bits = image_to_bits(image)
    decided = transmit_bits(bits, channel, link, allocation, md=md, n_jobs=n_jobs)
    errors = int(np.count_nonzero(decided != bits))
    received = bits_to_image(decided, image.shape)
    ber = errors / bits.size if bits.size else 0.0
    return TransmissionResult(
        image=received,
        ber=ber,
        psnr=psnr(image, received),
        bit_errors=errors,
        n_bits=int(bits.size),
    )


def default_test_image(size: int = 128, block: int = 16) -> np.ndarray:
    """
    程序產生的測試影像：對角漸層加棋盤格

    Returns:
        np.ndarray: (size, size) uint8
    """
    idx = np.arange(size)
    scale = 255.0 / max(2 * (size - 1), 1)
    gradient = (idx[np.newaxis, :] + idx[:, np.newaxis]) * scale
    tiles = idx // block
    parity = (tiles[:, np.newaxis] + tiles[np.newaxis, :]) % 2
    checker = np.where(parity == 0, 40.0, -40.0)
    return np.clip(np.rint(gradient + checker), 0, 255).astype(np.uint8)


def parse_scheme(scheme: str) -> Optional[int]:
    """'optimized' → None；'mode-k' → k - 1"""
    scheme = scheme.strip().lower()
    if scheme == "optimized":
        return None
    if scheme.startswith("mode-"):
        try:
            k = int(scheme[len("mode-"):])
        except ValueError as exc:
            raise DomainError(f"未知的傳輸方案 Unknown scheme: {scheme}") from exc
        if k < 1:
            raise DomainError(f"模態編號從 1 開始 Mode numbers start at 1: {scheme}")
        return k - 1
    raise DomainError(f"未知的傳輸方案 Unknown scheme: {scheme}")


def scheme_allocation(
    md: ModeDecomposition,
    p0: float,
    scheme: str,
    mode_count: int,
    constraint: str = "sum",
) -> AllocationResult:
    """依方案名稱建立分配 Allocation for a named scheme"""
    mode = parse_scheme(scheme)
    if mode is None:
        return allocate_power(md, p0, mode_count, constraint)
    return single_mode_allocation(md, p0, mode)


def compare_schemes(
    image: np.ndarray,
    channel: ChannelMatrix,
    p0: float,
    noise_std: float,
    seeds: Iterable[int],
    schemes: Sequence[str] = ("optimized", "mode-1", "mode-2", "mode-3"),
    mode_count: int = 3,
    combining: str = "objective",
    constraint: str = "sum",
    n_jobs: Optional[int] = None,
) -> pd.DataFrame:
    """
    多個種子、多個方案的 BER/PSNR 表

    Returns:
        pd.DataFrame: 欄位 seed, chi, p0, scheme, ber, psnr
    """
    md = decompose(channel)
    rows: List[dict] = []
    for seed in seeds:
        link = LinkConfig(
            modes=tuple(range(mode_count)),
            noise_std=noise_std,
            seed=int(seed),
            combining=combining,
        )
        for scheme in schemes:
            allocation = scheme_allocation(md, p0, scheme, mode_count, constraint)
            result = transmit_image(
                image, channel, link, allocation, md=md, n_jobs=n_jobs
            )
            rows.append(
                {
                    "seed": int(seed),
                    "chi": noise_std,
                    "p0": p0,
                    "scheme": scheme,
                    "ber": result.ber,
                    "psnr": result.psnr,
                }
            )
    logger.info(f"📡 方案比較完成 Scheme comparison done: {len(rows)} runs")
    return pd.DataFrame(rows, columns=["seed", "chi", "p0", "scheme", "ber", "psnr"])

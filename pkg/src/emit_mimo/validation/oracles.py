"""
獨立驗證器 - Independent Oracles

與生產路徑不共用數值程式碼的暴力驗證:

- 特殊函數：mpmath 任意精度 (升冪級數 + Hankel 漸近)
- PEC 邊界殘差：直接以 scipy.special.hankel1 重新疊加場
- 並矢格林函數：對純量核做中央差分 ∇∇
- Helmholtz 殘差：(∇² + k²) 的有限差分
- 功率分配：單形格點與球面格點窮舉

結果寫入 golden/ 目錄的 CSV；重新產生只透過 CLI 明確觸發。
"""

import hashlib
import itertools
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import mpmath as mp
import numpy as np
import pandas as pd
from scipy import special

from emit_mimo.physics.scatter import PEC, ScatterSolution, Scatterer
from emit_mimo.utils.errors import UnsupportedRangeError
from emit_mimo.utils.logger import get_logger

logger = get_logger(__name__)

ORACLE_MAX_ORDER = 200
ORACLE_X_RANGE = (1e-3, 1e4)
ORACLE_DIGITS = 40
MAX_ORACLE_MODES = 4
# 振盪區 (x > |n|) 的相對誤差分母下限，以 √(J² + Y²) 為單位
SPECFUN_ZERO_FLOOR = 1e-3


@dataclass(frozen=True)
class OracleReport:
    """單一驗證結果 One oracle verdict"""

    name: str
    scene_digest: str
    metric: str
    value: float
    tolerance: float
    passed: bool


def digest(*arrays: np.ndarray) -> str:
    """陣列內容的短雜湊 Short content hash"""
    h = hashlib.sha256()
    for arr in arrays:
        h.update(np.ascontiguousarray(arr).tobytes())
    return h.hexdigest()[:16]


# ---------------------------------------------------------------------------
# 特殊函數


def specfun_oracle(
    n: int, x: float, digits: int = ORACLE_DIGITS
) -> Tuple[mp.mpf, mp.mpf]:
    """
    任意精度 J_n(x)、Y_n(x)

    Y 在 x = 0 時回傳 -inf。

    Raises:
        UnsupportedRangeError: |n| > 200 或 x 不在 {0} ∪ [1e-3, 1e4]
    """
    if int(n) != n or abs(n) > ORACLE_MAX_ORDER:
        raise UnsupportedRangeError(
            f"階數超出驗證範圍 Order {n} outside |n| ≤ {ORACLE_MAX_ORDER}"
        )
    if x != 0 and not (ORACLE_X_RANGE[0] <= x <= ORACLE_X_RANGE[1]):
        raise UnsupportedRangeError(f"引數超出驗證範圍 Argument {x} outside {ORACLE_X_RANGE}")
    with mp.workdps(digits):
        xm = mp.mpf(x)
        j = mp.besselj(int(n), xm)
        y = mp.bessely(int(n), xm) if x != 0 else mp.mpf("-inf")
        return +j, +y


def specfun_oracle_prime(
    n: int, x: float, digits: int = ORACLE_DIGITS
) -> Tuple[mp.mpf, mp.mpf]:
    """任意精度 J'_n(x)、Y'_n(x)"""
    specfun_oracle(n, x, digits)
    with mp.workdps(digits):
        xm = mp.mpf(x)
        jp = mp.besselj(int(n), xm, derivative=1)
        yp = mp.bessely(int(n), xm, derivative=1)
        return +jp, +yp


def oracle_wronskian_defect(n: int, x: float, digits: int = ORACLE_DIGITS) -> mp.mpf:
    """|J Y' - J' Y - 2/(πx)| / (2/(πx))"""
    j, y = specfun_oracle(n, x, digits)
    jp, yp = specfun_oracle_prime(n, x, digits)
    with mp.workdps(digits):
        target = 2 / (mp.pi * mp.mpf(x))
        return abs(j * yp - jp * y - target) / target


def relative_error(value: float, reference: float, floor: float = 0.0) -> float:
    """|value - reference| / max(|reference|, floor)"""
    scale = max(abs(float(reference)), float(floor))
    if scale == 0.0:
        return abs(float(value))
    return abs(float(value) - float(reference)) / scale


def specfun_errors(
    n: int, x: float, j: float, y: float, digits: int = 30
) -> Tuple[float, float]:
    """
    J、Y 相對於任意精度參考值的相對誤差

    x ≤ |n| 時 J_n、Y_n 無零點，取純相對誤差；振盪區內分母不低於
    SPECFUN_ZERO_FLOOR · √(J² + Y²)，避免零點附近的相對誤差發散。
    """
    j_ref, y_ref = (float(v) for v in specfun_oracle(n, x, digits))
    floor = SPECFUN_ZERO_FLOOR * float(np.hypot(j_ref, y_ref)) if x > abs(n) else 0.0
    return relative_error(j, j_ref, floor), relative_error(y, y_ref, floor)


def specfun_table(
    orders: Iterable[int], xs: Iterable[float], digits: int = 25
) -> pd.DataFrame:
    """
    參考值表，數值以字串保留 digits 位有效數字

    Returns:
        pd.DataFrame: 欄位 n, x, j, y
    """
    rows = []
    for n, x in itertools.product(list(orders), list(xs)):
        j, y = specfun_oracle(n, x)
        rows.append(
            {
                "n": int(n),
                "x": repr(float(x)),
                "j": mp.nstr(j, digits),
                "y": mp.nstr(y, digits),
            }
        )
    return pd.DataFrame(rows, columns=["n", "x", "j", "y"])


# ---------------------------------------------------------------------------
# PEC 邊界殘差


def _direct_field(
    solution: ScatterSolution, points: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    """直接以 scipy 疊加入射場與散射場 (逐圓柱、逐階數)"""
    k = solution.scene.k
    incident = np.zeros(len(points), dtype=complex)
    for pos, amp in zip(solution.sources.xy, solution.sources.excitations):
        d = np.hypot(points[:, 0] - pos[0], points[:, 1] - pos[1])
        incident += amp * 0.25j * special.hankel1(0, k * d)

    scattered = np.zeros(len(points), dtype=complex)
    n_max = solution.scene.truncation.n_max
    for p, scatterer in enumerate(solution.scene.scatterers):
        dx = points[:, 0] - scatterer.center.x
        dy = points[:, 1] - scatterer.center.y
        rho = np.hypot(dx, dy)
        theta = np.arctan2(dy, dx)
        for i, n in enumerate(range(-n_max, n_max + 1)):
            weight = solution.t_matrix[p, i] * solution.coefficients[p, i]
            scattered += weight * special.hankel1(n, k * rho) * np.exp(1j * n * theta)
    return incident, incident + scattered


def _ring(scatterer: Scatterer, samples: int) -> np.ndarray:
    angles = 2.0 * np.pi * np.arange(samples) / samples
    return np.column_stack(
        [
            scatterer.center.x + scatterer.radius * np.cos(angles),
            scatterer.center.y + scatterer.radius * np.sin(angles),
        ]
    )


def boundary_residual(
    solution: ScatterSolution, scatterer: int, samples: int = 64
) -> float:
    """
    PEC 邊界上總場的最大幅值，除以場景中所有圓柱邊界上入射場的最大幅值

    Args:
        solution: 已求解的場景
        scatterer: 圓柱索引
        samples: 邊界等距取樣數

    Raises:
        UnsupportedRangeError: 非 PEC 圓柱
    """
    target = solution.scene.scatterers[scatterer]
    if not isinstance(target.material, PEC):
        raise UnsupportedRangeError("邊界殘差僅適用於 PEC Boundary residual is PEC-specific")
    reference = 0.0
    for other in solution.scene.scatterers:
        incident, _ = _direct_field(solution, _ring(other, samples))
        reference = max(reference, float(np.abs(incident).max()))
    _, total = _direct_field(solution, _ring(target, samples))
    return float(np.abs(total).max() / reference)


def scene_boundary_residual(solution: ScatterSolution, samples: int = 64) -> float:
    """所有 PEC 圓柱的最大邊界殘差"""
    reference = 0.0
    worst = 0.0
    rings = [_ring(s, samples) for s in solution.scene.scatterers]
    for ring in rings:
        incident, _ = _direct_field(solution, ring)
        reference = max(reference, float(np.abs(incident).max()))
    for scatterer, ring in zip(solution.scene.scatterers, rings):
        if isinstance(scatterer.material, PEC):
            _, total = _direct_field(solution, ring)
            worst = max(worst, float(np.abs(total).max()))
    return worst / reference if reference else 0.0


# ---------------------------------------------------------------------------
# 格林函數


def _g3d(r: np.ndarray, k: float) -> complex:
    d = float(np.sqrt(np.dot(r, r)))
    return complex(np.exp(1j * k * d) / (4.0 * np.pi * d))


def dyadic_fd_oracle(
    r_rx: np.ndarray, r_tx: np.ndarray, k: float, step: float = 1e-3
) -> np.ndarray:
    """
    以中央差分計算 (I + ∇∇/k²) g，步長 h = step / k

    Returns:
        np.ndarray: 3×3 複數張量
    """
    r = np.asarray(r_rx, dtype=float) - np.asarray(r_tx, dtype=float)
    h = step / k
    basis = np.eye(3) * h
    g0 = _g3d(r, k)
    hessian = np.zeros((3, 3), dtype=complex)
    for i in range(3):
        forward, backward = _g3d(r + basis[i], k), _g3d(r - basis[i], k)
        hessian[i, i] = (forward - 2.0 * g0 + backward) / h**2
        for j in range(i + 1, 3):
            mixed = (
                _g3d(r + basis[i] + basis[j], k)
                - _g3d(r + basis[i] - basis[j], k)
                - _g3d(r - basis[i] + basis[j], k)
                + _g3d(r - basis[i] - basis[j], k)
            ) / (4.0 * h**2)
            hessian[i, j] = hessian[j, i] = mixed
    return g0 * np.eye(3) + hessian / k**2


def helmholtz_residual(
    kernel: Callable[[np.ndarray], complex],
    point: np.ndarray,
    k: float,
    dims: int,
    step: float = 1e-2,
) -> float:
    """
    |(∇² + k²) ψ| / (k² |ψ|)，(2·dims + 1) 點差分，步長 h = step / k

    Args:
        kernel: 場函數 ψ(r)，r 為長度 dims 的陣列
        dims: 2 或 3
    """
    point = np.asarray(point, dtype=float)[:dims]
    h = step / k
    center = kernel(point)
    laplacian = 0.0 + 0.0j
    for axis in range(dims):
        shift = np.zeros(dims)
        shift[axis] = h
        forward, backward = kernel(point + shift), kernel(point - shift)
        laplacian += (forward - 2.0 * center + backward) / h**2
    return float(abs(laplacian + k**2 * center) / (k**2 * abs(center)))


def scalar_kernel_3d(source: np.ndarray, k: float) -> Callable[[np.ndarray], complex]:
    src = np.asarray(source, dtype=float)[:3]
    return lambda r: _g3d(r - src, k)


def line_source_kernel_2d(
    source: np.ndarray, k: float
) -> Callable[[np.ndarray], complex]:
    src = np.asarray(source, dtype=float)[:2]

    def kernel(r: np.ndarray) -> complex:
        rho = float(np.hypot(*(r - src)))
        return complex(0.25j * special.hankel1(0, k * rho))

    return kernel


# ---------------------------------------------------------------------------
# 功率分配


@dataclass(frozen=True)
class GridOptimum:
    """格點搜尋最佳解"""

    lambdas: np.ndarray
    objective: float
    constraint: str


def _simplex_grid(modes: int, resolution: int) -> Iterable[np.ndarray]:
    for cuts in itertools.combinations(range(resolution + modes - 1), modes - 1):
        bounds = (-1,) + cuts + (resolution + modes - 1,)
        counts = [bounds[i + 1] - bounds[i] - 1 for i in range(modes)]
        yield np.array(counts, dtype=float) / resolution


def _sphere_grid(modes: int, resolution: int) -> Iterable[np.ndarray]:
    angles = np.linspace(0.0, np.pi / 2.0, resolution + 1)
    for combo in itertools.product(angles, repeat=modes - 1):
        point = np.ones(modes)
        for i, angle in enumerate(combo):
            point[i] *= np.cos(angle)
            point[i + 1 :] *= np.sin(angle)
        yield point


def allocation_grid_oracle(
    sigma: Sequence[float], p0: float, resolution: int = 200, constraint: str = "sum"
) -> GridOptimum:
    """
    在可行集上窮舉 f = Σ σ_m λ_m

    "sum": 單形 Σλ = P0 的格點；"sphere": 非負象限球面 Σλ² = P0² 的角度格點。

    Raises:
        UnsupportedRangeError: 模態數 > 4
    """
    sigma_arr = np.asarray(sigma, dtype=float)
    modes = sigma_arr.size
    if modes < 1 or modes > MAX_ORACLE_MODES:
        raise UnsupportedRangeError(f"模態數 {modes} 超出窮舉上限 {MAX_ORACLE_MODES}")
    if constraint == "sum":
        candidates = _simplex_grid(modes, resolution)
    elif constraint == "sphere":
        candidates = _sphere_grid(modes, resolution)
    else:
        raise UnsupportedRangeError(f"未知的約束 Unknown constraint: {constraint}")

    units = np.array(list(candidates))
    values = units @ sigma_arr
    best_f = float(values.max())
    # 並列最佳時取其重心 (線性目標的最佳集合為凸集)
    tied = units[values >= best_f - 1e-12 * max(1.0, abs(best_f))]
    best = tied.mean(axis=0)
    if constraint == "sphere":
        best = best / np.linalg.norm(best)
    return GridOptimum(
        lambdas=p0 * best,
        objective=p0 * float(np.dot(sigma_arr, best)),
        constraint=constraint,
    )


def allocation_discrepancy(
    sigma: Sequence[float], p0: float, resolution: int = 200
) -> pd.DataFrame:
    """
    λ ∝ σ 與格點最佳解在兩種約束下的比較

    Returns:
        pd.DataFrame: 每種約束一列；proportional_optimal 表示 λ ∝ σ 是否達到格點最佳
    """
    sigma_arr = np.asarray(sigma, dtype=float)
    rows = []
    for constraint in ("sum", "sphere"):
        scale = sigma_arr.sum() if constraint == "sum" else np.linalg.norm(sigma_arr)
        proportional = p0 * sigma_arr / scale
        f_prop = float(np.dot(sigma_arr, proportional))
        optimum = allocation_grid_oracle(sigma_arr, p0, resolution, constraint)
        # 格點解析度造成的容許誤差
        slack = p0 * float(sigma_arr.max()) * (np.pi / (2 * resolution)) ** 2
        rows.append(
            {
                "constraint": constraint,
                "sigma": " ".join(f"{s:.6g}" for s in sigma_arr),
                "p0": p0,
                "lambda_proportional": " ".join(f"{v:.6g}" for v in proportional),
                "f_proportional": f_prop,
                "lambda_oracle": " ".join(f"{v:.6g}" for v in optimum.lambdas),
                "f_oracle": optimum.objective,
                "gap": optimum.objective - f_prop,
                "proportional_optimal": bool(optimum.objective - f_prop <= slack),
            }
        )
        if optimum.objective - f_prop > slack:
            logger.warning(
                f"⚠️ 約束 {constraint} 下 λ∝σ 非最佳 Proportional split is not optimal under "
                f"'{constraint}': oracle f={optimum.objective:.6g} vs {f_prop:.6g}"
            )
    return pd.DataFrame(rows)


# ---------------------------------------------------------------------------
# 報告與黃金檔


def reports_frame(reports: Sequence[OracleReport]) -> pd.DataFrame:
    return pd.DataFrame(
        [asdict(r) for r in reports], columns=list(OracleReport.__dataclass_fields__)
    )


# golden/allocation_discrepancy.csv 的 σ 組合
ALLOCATION_CASES = ((1.0, 1.0), (2.0, 1.0), (3.0, 2.0, 1.0))

# kernel_reports 的 kd、單位方向與源點
KERNEL_DISTANCES = (5.0, 10.0, 20.0, 50.0, 100.0)
KERNEL_DIRECTIONS = (
    (0.6, 0.8, 0.0),
    (0.0, 0.6, 0.8),
    (0.8, 0.0, 0.6),
    (0.48, 0.6, 0.64),
)
KERNEL_SOURCE = (0.25, -0.5, 0.125)


def default_specfun_grid() -> Tuple[List[int], List[float]]:
    """golden 參考值的 (n, x) 網格"""
    orders = [0, 1, 2, 5, 10, 20, 50]
    xs = [1e-3, 0.1, 1.0, 2.5, 10.0, 50.0, 100.0, 1000.0]
    return orders, xs


def kernel_reports(
    k: float = 2.0 * np.pi, cases: int = len(KERNEL_DISTANCES)
) -> List[OracleReport]:
    """
    並矢閉式 vs 差分、Helmholtz 殘差的報告

    取樣點固定，報告可與 golden/oracle_reports.csv 逐列比較。
    """
    from emit_mimo.physics.greens import Point3, dyadic_g3d

    reports = []
    r_tx = np.array(KERNEL_SOURCE)
    for i, kd in enumerate(KERNEL_DISTANCES[:cases]):
        direction = np.array(KERNEL_DIRECTIONS[i % len(KERNEL_DIRECTIONS)])
        r_rx = r_tx + direction * kd / k
        closed = dyadic_g3d(Point3(*r_rx), Point3(*r_tx), k)
        fd = dyadic_fd_oracle(r_rx, r_tx, k)
        err = float(np.linalg.norm(fd - closed) / np.linalg.norm(closed))
        scene = digest(r_rx, r_tx)
        reports.append(
            OracleReport(
                "dyadic_fd", scene, f"rel_err@kd={kd:.3g}", err, 1e-6, err <= 1e-6
            )
        )
        kernels = ((3, scalar_kernel_3d(r_tx, k)), (2, line_source_kernel_2d(r_tx, k)))
        for dims, kernel in kernels:
            res = helmholtz_residual(kernel, r_rx, k, dims)
            reports.append(
                OracleReport(
                    f"helmholtz_{dims}d",
                    scene,
                    f"residual@kd={kd:.3g}",
                    res,
                    1e-4,
                    res <= 1e-4,
                )
            )
    return reports


def write_golden(
    golden_dir: Path, tables: Dict[str, pd.DataFrame], encoding: str = "utf-8"
) -> Dict[str, Path]:
    """寫出 golden CSV (UTF-8、LF)"""
    from emit_mimo.data.exporters import write_csv

    golden_dir = Path(golden_dir)
    golden_dir.mkdir(parents=True, exist_ok=True)
    written = {}
    for name, frame in tables.items():
        path = golden_dir / f"{name}.csv"
        write_csv(frame, path, encoding=encoding)
        written[name] = path
        logger.info(f"💾 黃金檔已寫入 Golden file written: {path}")
    return written


def truncation_sweep(
    solve: Callable[[int], ScatterSolution],
    n_max: int,
    extra: Sequence[int] = (0, 2, 4),
    samples: int = 64,
) -> pd.DataFrame:
    """
    在 N_max + extra 下求解並記錄邊界殘差

    Args:
        solve: 給定 N_max 回傳解的函數
    """
    rows = []
    for delta in extra:
        solution = solve(n_max + delta)
        residual = scene_boundary_residual(solution, samples)
        rows.append({"n_max": n_max + delta, "residual": residual})
    return pd.DataFrame(rows)


def monotone_non_increasing(
    values: Sequence[float], rtol: float = 1e-9, floor: Optional[float] = 1e-13
) -> bool:
    """序列單調不增 (容許捨入誤差，低於 floor 的值視為捨入)"""
    arr = np.asarray(values, dtype=float)
    for a, b in zip(arr[:-1], arr[1:]):
        if floor is not None and a <= floor and b <= floor:
            continue
        if b > a * (1.0 + rtol):
            return False
    return True

"""
柱諧波特殊函數 - Cylinder-Harmonic Special Functions

整數階 Bessel J_n、Neumann Y_n、第一類 Hankel H_n^(1) 及其導數，
引數為非負實數。數值核心來自 scipy.special (AMOS / Cephes：
大階數以 Miller 反向遞迴、x ≫ n 以漸近展開)，本模組只負責:

- 定義域檢查 (x 有限、Y/H 要求 x ≥ X_MIN)
- 負階奇偶性 C_{-n} = (-1)^n C_n，以構造方式精確成立
- H = J + iY 由同一組 J、Y 組合
- 導數 C'_n = (C_{n-1} - C_{n+1}) / 2

時間慣例為 exp(-iωt)，因此 H^(1) 為外行波。所有函數為純函數，可在
任意執行緒中同時呼叫，並支援 numpy 廣播。
"""

import math
from typing import Union

import numpy as np
from scipy import special

from emit_mimo.utils.errors import DomainError

ArrayLike = Union[int, float, np.ndarray]

# Y_n 與 H_n 的最小引數 (對數奇異點)
X_MIN = 1e-300

# hankel1_table：低於此值的 J 直接以 scipy 計算
TINY_ARGUMENT = 1e-6
MILLER_ACCURACY = 160.0
MILLER_RESCALE = 1e250


def _orders(n: ArrayLike) -> np.ndarray:
    """檢查並轉換整數階數 Validate integer harmonic orders"""
    n_arr = np.asarray(n)
    if n_arr.dtype.kind in "iu":
        return n_arr.astype(np.int64)
    if n_arr.dtype.kind == "f" and np.all(np.isfinite(n_arr)):
        if np.all(n_arr == np.round(n_arr)):
            return n_arr.astype(np.int64)
    raise DomainError(f"階數必須為整數 Harmonic order must be an integer, got {n!r}")


def _arguments(x: ArrayLike, x_floor: float) -> np.ndarray:
    """檢查並轉換實數引數 Validate real arguments against a lower floor"""
    try:
        x_arr = np.asarray(x, dtype=float)
    except TypeError as exc:
        raise DomainError(f"引數必須為實數 Argument must be real, got {x!r}") from exc
    if not np.all(np.isfinite(x_arr)):
        raise DomainError("引數必須為有限值 Argument must be finite")
    if np.any(x_arr < x_floor):
        bad = float(np.min(x_arr))
        raise DomainError(
            f"引數低於下限 Argument {bad!r} below the documented floor {x_floor!r}"
        )
    return x_arr


def _parity(n: np.ndarray) -> np.ndarray:
    return np.where((n < 0) & (n % 2 == 1), -1.0, 1.0)


def _unwrap(value: np.ndarray) -> Union[float, complex, np.ndarray]:
    if value.ndim == 0:
        return value.item()
    return value


def _jn(n: np.ndarray, x: np.ndarray) -> np.ndarray:
    return _parity(n) * special.jv(np.abs(n), x)


def _yn(n: np.ndarray, x: np.ndarray) -> np.ndarray:
    return _parity(n) * special.yv(np.abs(n), x)


def bessel_j(n: ArrayLike, x: ArrayLike) -> Union[float, np.ndarray]:
    """
    第一類 Bessel 函數 J_n(x)

    Args:
        n: 整數階數 (可為負)
        x: 引數，x ≥ 0；x = 0 取解析極限

    Returns:
        J_n(x)，純量輸入回傳 float
    """
    orders = _orders(n)
    args = _arguments(x, 0.0)
    return _unwrap(_jn(orders, args))


def bessel_y(n: ArrayLike, x: ArrayLike) -> Union[float, np.ndarray]:
    """
    第二類 Bessel (Neumann) 函數 Y_n(x)，要求 x ≥ X_MIN

    Raises:
        DomainError: x 非有限或低於 X_MIN
    """
    orders = _orders(n)
    args = _arguments(x, X_MIN)
    return _unwrap(_yn(orders, args))


def hankel1(n: ArrayLike, x: ArrayLike) -> Union[complex, np.ndarray]:
    """第一類 Hankel 函數 H_n^(1)(x) = J_n(x) + i Y_n(x)"""
    orders = _orders(n)
    args = _arguments(x, X_MIN)
    return _unwrap(_jn(orders, args) + 1j * _yn(orders, args))


def bessel_j_prime(n: ArrayLike, x: ArrayLike) -> Union[float, np.ndarray]:
    """J'_n(x) = (J_{n-1}(x) - J_{n+1}(x)) / 2，x = 0 亦可"""
    orders = _orders(n)
    args = _arguments(x, 0.0)
    return _unwrap(0.5 * (_jn(orders - 1, args) - _jn(orders + 1, args)))


def bessel_y_prime(n: ArrayLike, x: ArrayLike) -> Union[float, np.ndarray]:
    """Y'_n(x) = (Y_{n-1}(x) - Y_{n+1}(x)) / 2"""
    orders = _orders(n)
    args = _arguments(x, X_MIN)
    return _unwrap(0.5 * (_yn(orders - 1, args) - _yn(orders + 1, args)))


def hankel1_prime(n: ArrayLike, x: ArrayLike) -> Union[complex, np.ndarray]:
    """H^(1)'_n(x) = (H_{n-1}(x) - H_{n+1}(x)) / 2"""
    orders = _orders(n)
    args = _arguments(x, X_MIN)
    below = _jn(orders - 1, args) + 1j * _yn(orders - 1, args)
    above = _jn(orders + 1, args) + 1j * _yn(orders + 1, args)
    return _unwrap(0.5 * (below - above))


def hankel1_table(n_max: int, x: ArrayLike) -> np.ndarray:
    """
    非負階 Hankel 表 H_n^(1)(x), n = 0..n_max

    供組裝與場疊加使用：負階由奇偶性取得。每個引數只呼叫一次
    j0/j1/y0/y1，其餘階數以遞迴填入:

    - Y_n 向上遞迴 (對所有 x 穩定)
    - J_n 在 x ≥ n_max 時向上遞迴，否則以 Miller 向下遞迴並以
      J_0 + 2ΣJ_{2k} = 1 正規化；極小引數直接呼叫 scipy

    Returns:
        形狀為 x.shape + (n_max + 1,) 的複數陣列
    """
    args = _arguments(x, X_MIN)
    flat = args.reshape(-1)
    y = _upward(n_max, flat, special.y0(flat), special.y1(flat))
    j = _upward(n_max, flat, special.j0(flat), special.j1(flat))

    below = flat < n_max
    if below.any():
        tiny = flat < TINY_ARGUMENT
        miller = below & ~tiny
        if miller.any():
            j[miller] = _miller_j(n_max, flat[miller])
        if tiny.any():
            j[tiny] = special.jv(np.arange(n_max + 1), flat[tiny, np.newaxis])
    return (j + 1j * y).reshape(args.shape + (n_max + 1,))


def _upward(n_max: int, x: np.ndarray, c0: np.ndarray, c1: np.ndarray) -> np.ndarray:
    """C_{n+1} = (2n/x) C_n - C_{n-1}"""
    out = np.empty(x.shape + (n_max + 1,))
    out[:, 0] = c0
    if n_max >= 1:
        out[:, 1] = c1
    with np.errstate(over="ignore", invalid="ignore"):
        for n in range(1, n_max):
            out[:, n + 1] = (2.0 * n / x) * out[:, n] - out[:, n - 1]
    return out


def _miller_j(n_max: int, x: np.ndarray) -> np.ndarray:
    """Miller 向下遞迴 J_0..J_{n_max}，適用 TINY_ARGUMENT ≤ x < n_max"""
    start = 2 * ((n_max + int(math.sqrt(MILLER_ACCURACY * max(n_max, 1)))) // 2)
    out = np.zeros(x.shape + (n_max + 1,))
    above = np.zeros_like(x)
    upper = np.ones_like(x)
    total = np.zeros_like(x)
    for order in range(start - 1, -1, -1):
        lower = (2.0 * (order + 1) / x) * upper - above
        above, upper = upper, lower
        if order <= n_max:
            out[:, order] = upper
        if order > 0 and order % 2 == 0:
            total += 2.0 * upper
        big = np.abs(upper) > MILLER_RESCALE
        if big.any():
            upper[big] /= MILLER_RESCALE
            above[big] /= MILLER_RESCALE
            total[big] /= MILLER_RESCALE
            out[big] /= MILLER_RESCALE
    total += upper
    return out / total[:, np.newaxis]

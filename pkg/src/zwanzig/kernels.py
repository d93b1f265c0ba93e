"""Special-function kernels shared by the cycle and chain modules.

Both kernels are written against plain recurrences so that their behaviour
at very large orders and arguments is under our control:

* :func:`laguerre_scaled` evaluates ``L^1_{k-1}(x) exp(-x/2)`` by forward
  recurrence with running exponent bookkeeping, so neither the polynomial
  nor the exponential factor can overflow on their own.
* :func:`bessel_j_all` returns ``J_0 .. J_M`` in a single Miller downward
  sweep normalised with ``J_0 + 2 sum J_{2m} = 1``.
"""
from __future__ import annotations

import math

import numpy as np

_BIG = 1e150
_LOG_BIG = math.log(_BIG)
_TINY = 1e-8


def laguerre_scaled(k: int, x) -> np.ndarray:
    """Scaled associated Laguerre function ``L^1_{k-1}(x) * exp(-x/2)``.

    Parameters
    ----------
    k : int
        Cycle index; the polynomial order is ``k - 1``. ``k = 0`` gives zero.
    x : array_like
        Non-negative arguments.

    Returns
    -------
    numpy.ndarray
        Values with the same shape as ``x``. Results below the double range
        underflow to zero.
    """
    x0 = np.asarray(x, dtype=float)
    x = np.atleast_1d(x0)
    if k < 0:
        raise ValueError("k must be non-negative")
    if np.any(x < 0):
        raise ValueError("x must be non-negative")
    if k == 0:
        return np.zeros_like(x0)
    n = k - 1
    if n == 0:
        return np.exp(-0.5 * x0)
    lo = np.ones_like(x)
    hi = 2.0 - x
    logscale = np.zeros_like(x)
    for j in range(1, n):
        nxt = ((2 * j + 2 - x) * hi - (j + 1) * lo) / (j + 1)
        lo, hi = hi, nxt
        big = np.abs(hi) > _BIG
        if big.any():
            hi[big] /= _BIG
            lo[big] /= _BIG
            logscale[big] += _LOG_BIG
    with np.errstate(divide="ignore"):
        mag = np.log(np.abs(hi)) + logscale - 0.5 * x
    return (np.sign(hi) * np.exp(mag)).reshape(x0.shape)


def _miller_start(order: int, xmax: float) -> int:
    top = max(order, xmax)
    start = int(top + 30 + 10 * math.sqrt(top + 1.0))
    return start + (start % 2)


def bessel_j_all(max_order: int, x) -> np.ndarray:
    """Integer-order Bessel functions ``J_0(x) .. J_M(x)``.

    Parameters
    ----------
    max_order : int
        Highest order ``M`` (at most ``1e5``).
    x : array_like
        Non-negative arguments.

    Returns
    -------
    numpy.ndarray
        Array of shape ``(M + 1,) + x.shape``.
    """
    if max_order < 0 or max_order > 100_000:
        raise ValueError("order must lie in [0, 1e5]")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(x < 0):
        raise ValueError("x must be non-negative")
    out = np.zeros((max_order + 1,) + x.shape)
    # tiny arguments: two-term power series, the recurrence would overflow
    zero = x < _TINY
    xs = np.where(zero, 1.0, x)
    start = _miller_start(max_order, float(x.max(initial=0.0)))
    jp1 = np.zeros_like(xs)
    jm = np.full_like(xs, 1e-300)
    norm = np.zeros_like(xs)
    for m in range(start, 0, -1):
        jprev = (2.0 * m / xs) * jm - jp1
        jp1, jm = jm, jprev
        order = m - 1
        if order <= max_order:
            out[order] = jm
        if order > 0 and order % 2 == 0:
            norm += 2.0 * jm
        big = np.abs(jm) > 1e250
        if big.any():
            jm[big] *= 1e-250
            jp1[big] *= 1e-250
            norm[big] *= 1e-250
            out[:, big] *= 1e-250
    norm += jm
    out /= norm
    if zero.any():
        out[:, zero] = _small_series(max_order, x[zero])
    return out


def _small_series(max_order: int, x) -> np.ndarray:
    h = 0.5 * x
    m = np.arange(max_order + 1)[:, None]
    with np.errstate(divide="ignore", under="ignore", invalid="ignore"):
        lead = np.exp(m * np.log(h) - np.array([math.lgamma(k + 1.0) for k in range(max_order + 1)])[:, None])
    lead = np.where(h == 0.0, (m == 0).astype(float), lead)
    return lead * (1.0 - h * h / (m + 1))


def bessel_j(order: int, x) -> np.ndarray:
    """Single-order Bessel function ``J_order(x)``."""
    vals = bessel_j_all(order, x)[order]
    return vals if np.ndim(x) else vals[0]

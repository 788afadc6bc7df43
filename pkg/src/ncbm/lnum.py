"""Log-domain helpers: factorial tables and signed-exponent arithmetic.

Coefficients like ``h_l = sqrt(pi) 2^l l!`` or the skew norms ``r_k``
overflow or underflow double precision well inside the parameter ranges
of interest, so every table is built in log space and combined into a
single ``exp`` at the end.
"""

from __future__ import annotations

import math

import numpy as np

LOG_PI = math.log(math.pi)
LOG_2 = math.log(2.0)


def log_factorials(n: int) -> np.ndarray:
    """ln Gamma(k+1) for k = 0..n via cumulative sums (exact to ~1e-12)."""
    if n < 0:
        raise ValueError("n must be >= 0")
    out = np.zeros(n + 1)
    if n >= 1:
        out[1:] = np.cumsum(np.log(np.arange(1, n + 1, dtype=float)))
    return out


def log_gamma_half(n: int) -> np.ndarray:
    """ln Gamma(k+1/2) for k = 0..n."""
    out = np.full(n + 1, 0.5 * LOG_PI)
    if n >= 1:
        out[1:] += np.cumsum(np.log(np.arange(1, n + 1, dtype=float) - 0.5))
    return out


def log_h(lmax: int) -> np.ndarray:
    """ln h_l with h_l = sqrt(pi) 2^l l!, the Hermite norm squares."""
    ls = np.arange(lmax + 1, dtype=float)
    return 0.5 * LOG_PI + ls * LOG_2 + log_factorials(lmax)


def signed_exp(log_mag, sign):
    """exp(log_mag) carrying an explicit sign; arrays or scalars."""
    return sign * np.exp(log_mag)


def signed_log(x):
    """(sign, ln|x|) with ln 0 mapped to -inf."""
    x = np.asarray(x, dtype=float)
    sign = np.sign(x)
    with np.errstate(divide="ignore"):
        mag = np.log(np.abs(x))
    if x.ndim == 0:
        return float(sign), float(mag)
    return sign, mag

"""Pfaffian of skew-symmetric matrices.

The production path is Parlett-Reid-style skew elimination with full
row/column-pair pivoting, O(n^3), with the pivot-swap sign tracked
exactly.  The perfect-matching expansion (exponential cost) is kept as a
reference implementation for small matrices.
"""

from __future__ import annotations

import numpy as np

from .errors import DomainError, SkewSymmetryError

PIVOT_RTOL = 1e-13


def check_skew(a: np.ndarray, rtol: float = 1e-10):
    """Raise SkewSymmetryError (reporting the worst entry pair) if a != -a^T."""
    res = np.abs(a + a.T)
    scale = np.max(np.abs(a)) if a.size else 0.0
    worst = np.unravel_index(np.argmax(res), res.shape) if a.size else (0, 0)
    if a.size and res[worst] > rtol * max(scale, 1e-300):
        raise SkewSymmetryError(
            f"matrix is not skew-symmetric: |A+A^T|[{worst[0]},{worst[1]}] = {res[worst]:.3e}",
            indices=worst, residual=float(res[worst]))


def pfaffian(a: np.ndarray, check: bool = True) -> complex:
    """Pfaffian of an even-dimensional skew-symmetric matrix.

    Returns a float for real input, complex otherwise.  A structurally
    zero Pfaffian (no usable pivot in some column pair) returns exact 0.
    """
    a = np.array(a, copy=True)
    n = a.shape[0]
    if a.ndim != 2 or a.shape[1] != n:
        raise DomainError("pfaffian needs a square matrix")
    if n % 2 != 0:
        raise DomainError(f"pfaffian needs even dimension, got {n}")
    if n == 0:
        return 1.0
    if check:
        check_skew(a)
    real_input = not np.iscomplexobj(a)
    a = a.astype(np.complex128, copy=False)
    scale = np.max(np.abs(a))
    if scale == 0.0:
        return 0.0 if real_input else 0.0 + 0.0j
    pf = 1.0 + 0.0j
    for k in range(0, n - 2, 2):
        col = np.abs(a[k + 1:, k])
        kp = k + 1 + int(np.argmax(col))
        if np.abs(a[kp, k]) <= PIVOT_RTOL * scale:
            return 0.0 if real_input else 0.0 + 0.0j
        if kp != k + 1:
            a[[k + 1, kp], :] = a[[kp, k + 1], :]
            a[:, [k + 1, kp]] = a[:, [kp, k + 1]]
            pf = -pf
        pf *= a[k, k + 1]
        tau = a[k + 2:, k] / a[k + 1, k]
        c = a[k + 2:, k + 1]
        a[k + 2:, k + 2:] += np.outer(tau, c) - np.outer(c, tau)
    pf *= a[n - 2, n - 1]
    return float(pf.real) if real_input else complex(pf)


def pfaffian_reference(a: np.ndarray) -> complex:
    """Perfect-matching expansion of the Pfaffian; reference for n <= 12."""
    a = np.asarray(a)
    n = a.shape[0]
    if n % 2 != 0:
        raise DomainError("pfaffian needs even dimension")
    if n > 12:
        raise DomainError("reference Pfaffian is exponential; use n <= 12")

    def rec(idx):
        if not idx:
            return 1.0 + 0.0j
        i0 = idx[0]
        total = 0.0 + 0.0j
        for pos in range(1, len(idx)):
            j = idx[pos]
            rest = idx[1:pos] + idx[pos + 1:]
            total += ((-1.0) ** (pos - 1)) * a[i0, j] * rec(rest)
        return total

    val = rec(tuple(range(n)))
    return float(val.real) if not np.iscomplexobj(a) else complex(val)

"""Special functions: Gaussian heat kernel, Hermite machinery, Airy.

The Hermite functions phi_l (harmonic-oscillator eigenfunctions) are the
workhorse basis of the whole package; they are generated by the stable
normalized three-term recurrence with an internal floating-point rescale
so that arbitrary (l, x) combinations are representable as
``value * exp(log_scale)`` pairs.

The Airy function is evaluated piecewise: Maclaurin series in the
middle, asymptotic expansions outside.  The oscillatory integral
representation is deliberately *not* used for evaluation (it is not
absolutely convergent); a contour-rotated quadrature of it is kept as a
test oracle in :func:`airy_integral_oracle`.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DomainError
from .quadrature import euler_accelerate, gl_nodes, gl_panels, oscillating_panels

SQRT_2PI = math.sqrt(2.0 * math.pi)

# Ai(0) = 3^{-2/3}/Gamma(2/3), Ai'(0) = -3^{-1/3}/Gamma(1/3)
AIRY_AT_0 = 3.0 ** (-2.0 / 3.0) / math.gamma(2.0 / 3.0)
AIRY_PRIME_AT_0 = -(3.0 ** (-1.0 / 3.0)) / math.gamma(1.0 / 3.0)


# ---------------------------------------------------------------------------
# heat kernel

def heat_kernel(t: float, x, y):
    """Gaussian transition density (2 pi t)^{-1/2} exp(-(x-y)^2 / 2t).

    t = 0 is rejected: the delta-function convention is applied
    symbolically by callers, never through this routine.
    """
    if not t > 0:
        raise DomainError(f"heat_kernel needs t > 0, got t={t}")
    d = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    out = np.exp(-d * d / (2.0 * t)) / math.sqrt(2.0 * math.pi * t)
    return float(out) if out.ndim == 0 else out


def log_heat_kernel(t: float, x, y):
    if not t > 0:
        raise DomainError(f"heat_kernel needs t > 0, got t={t}")
    d = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    out = -d * d / (2.0 * t) - 0.5 * math.log(2.0 * math.pi * t)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# Hermite polynomials and functions

def hermite(l: int, x: float) -> float:
    """Physicists' Hermite polynomial H_l(x), stable forward recurrence."""
    if l < 0:
        raise DomainError("hermite needs l >= 0")
    h0, h1 = 1.0, 2.0 * x
    if l == 0:
        return h0
    if l == 1:
        return h1
    for k in range(1, l):
        h0, h1 = h1, 2.0 * x * h1 - 2.0 * k * h0
    return h1


def phi_seq_scaled(u, lmax: int):
    """All phi_l(u) for l = 0..lmax as (values, log_scales).

    phi_l(u) = values[l] * exp(logs[l]); ``u`` may be a scalar or 1-d
    array (then shapes are (lmax+1, len(u))).  The Gaussian weight is
    carried in the log so deep forbidden-region evaluations never
    underflow.
    """
    u = np.atleast_1d(np.asarray(u, dtype=float))
    n = len(u)
    vals = np.empty((lmax + 1, n))
    logs = np.empty((lmax + 1, n))
    scale = -0.5 * u * u
    v0 = np.full(n, math.pi ** -0.25)
    vals[0] = v0
    logs[0] = scale
    if lmax >= 1:
        v1 = math.sqrt(2.0) * u * v0
        vals[1] = v1
        logs[1] = scale
        for l in range(1, lmax):
            v0, v1 = v1, math.sqrt(2.0 / (l + 1)) * u * v1 - math.sqrt(l / (l + 1)) * v0
            big = np.abs(v1) > 1e250
            if np.any(big):
                f = np.where(big, np.abs(v1), 1.0)
                v1 = v1 / f
                v0 = v0 / f
                scale = scale + np.log(f)
            vals[l + 1] = v1
            logs[l + 1] = scale
    return vals, logs


def phi(l: int, x: float) -> float:
    """Orthonormal Hermite function e^{-x^2/2} H_l(x) / sqrt(h_l).

    Bounded by ~0.8 for all (l, x); normalization is done in log space
    so arbitrarily large l is safe.
    """
    if l < 0:
        raise DomainError("phi needs l >= 0")
    vals, logs = phi_seq_scaled(float(x), l)
    return float(vals[l, 0] * math.exp(logs[l, 0]))


def phi_values(u, lmax: int) -> np.ndarray:
    """Plain-float phi_l(u) array (safe: |phi| <= 1)."""
    vals, logs = phi_seq_scaled(u, lmax)
    return vals * np.exp(logs)


def hermite_derivative_identity(l: int, y: float) -> float:
    """e^{-y^2/2} H_{l+1}(y) assembled from the weighted derivative rule.

    Uses -2 d/dy(e^{-y^2/2} H_l) + 2l e^{-y^2/2} H_{l-1} with the
    derivative expanded through H_l' = 2l H_{l-1}; must agree with the
    direct weighted evaluation pointwise.
    """
    if l < 1:
        raise DomainError("hermite_derivative_identity needs l >= 1")
    w = math.exp(-0.5 * y * y)
    hl = hermite(l, y)
    hlm = hermite(l - 1, y)
    derivative = w * (2.0 * l * hlm - y * hl)
    return -2.0 * derivative + 2.0 * l * w * hlm


def phi_upper_integrals(a: float, lmax: int) -> np.ndarray:
    """J_l(a) = int_a^inf phi_l(u) du for l = 0..lmax.

    Forward recurrence J_{l+1} = sqrt(2/(l+1)) phi_l(a)
    + sqrt(l/(l+1)) J_{l-1}; all-positive coefficients keep it stable.
    """
    J = np.empty(lmax + 1)
    pv = phi_values(float(a), max(lmax, 1))[:, 0]
    J[0] = (math.pi ** 0.25 / math.sqrt(2.0)) * math.erfc(a / math.sqrt(2.0))
    if lmax >= 1:
        J[1] = math.sqrt(2.0) * (math.pi ** -0.25) * math.exp(-0.5 * a * a)
    for l in range(1, lmax):
        J[l + 1] = math.sqrt(2.0 / (l + 1)) * pv[l] + math.sqrt(l / (l + 1)) * J[l - 1]
    return J


def phi_full_integrals(lmax: int) -> np.ndarray:
    """T_l = int_R phi_l(u) du (zero for odd l)."""
    T = np.zeros(lmax + 1)
    T[0] = math.sqrt(2.0) * math.pi ** 0.25
    for l in range(1, lmax):
        T[l + 1] = math.sqrt(l / (l + 1)) * T[l - 1]
    return T


# ---------------------------------------------------------------------------
# Airy function

_SERIES_HI = 5.5     # switch to the right asymptotic expansion above this
_SERIES_LO = -7.2    # switch to the left (oscillatory) expansion below this


def _airy_series(z):
    """Maclaurin series for Ai and Ai' (adequate on [-7.2, 5.5])."""
    z = np.asarray(z, dtype=float)
    z3 = z ** 3
    f = np.ones_like(z)
    fp = np.zeros_like(z)
    g = z.copy()
    gp = np.ones_like(z)
    tf = np.ones_like(z)
    tg = z.copy()
    for k in range(0, 60):
        tf = tf * z3 / ((3 * k + 2) * (3 * k + 3))
        tg = tg * z3 / ((3 * k + 3) * (3 * k + 4))
        f += tf
        g += tg
        kk = 3 * (k + 1)
        with np.errstate(divide="ignore", invalid="ignore"):
            fp += np.where(z != 0.0, tf * kk / z, 0.0)
            gp += np.where(z != 0.0, tg * (kk + 1) / z, 0.0)
        if np.all(np.abs(tf) + np.abs(tg) < 1e-20 * (np.abs(f) + np.abs(g) + 1.0)):
            break
    c1, c2 = AIRY_AT_0, -AIRY_PRIME_AT_0
    return c1 * f - c2 * g, c1 * fp - c2 * gp


def _airy_u_coeffs(kmax: int):
    u = [1.0]
    for k in range(kmax):
        num = (3 * k + 0.5) * (3 * k + 1.5) * (3 * k + 2.5)
        u.append(u[-1] * num / (54.0 * (k + 1) * (k + 0.5)))
    u = np.array(u)
    ks = np.arange(kmax + 1)
    v = -(6 * ks + 1) / (6 * ks - 1.0) * u
    v[0] = 1.0
    return u, v


_U_COEF, _V_COEF = _airy_u_coeffs(40)


def _airy_asym_right(z):
    z = np.asarray(z, dtype=float)
    zeta = (2.0 / 3.0) * z ** 1.5
    su = np.zeros_like(z)
    sv = np.zeros_like(z)
    term_u = np.ones_like(z)
    term_v = np.ones_like(z)
    live = np.ones_like(z, dtype=bool)
    for k in range(len(_U_COEF)):
        tu = ((-1.0) ** k) * _U_COEF[k] / zeta ** k
        tv = ((-1.0) ** k) * _V_COEF[k] / zeta ** k
        grow = np.abs(tu) > np.abs(term_u)
        live &= ~grow | (k == 0)
        su = np.where(live, su + tu, su)
        sv = np.where(live, sv + tv, sv)
        term_u, term_v = tu, tv
    pref = np.exp(-zeta) / (2.0 * math.sqrt(math.pi) * z ** 0.25)
    ai = pref * su
    aip = -(z ** 0.25) * np.exp(-zeta) / (2.0 * math.sqrt(math.pi)) * sv
    return ai, aip


def _airy_asym_left(z):
    x = -np.asarray(z, dtype=float)
    zeta = (2.0 / 3.0) * x ** 1.5
    c = np.cos(zeta - 0.25 * math.pi)
    s = np.sin(zeta - 0.25 * math.pi)
    P = np.zeros_like(x)
    Q = np.zeros_like(x)
    R = np.zeros_like(x)
    S = np.zeros_like(x)
    kmax = (len(_U_COEF) - 1) // 2
    prev = np.inf * np.ones_like(x)
    live = np.ones_like(x, dtype=bool)
    for j in range(kmax):
        tP = ((-1.0) ** j) * _U_COEF[2 * j] / zeta ** (2 * j)
        tQ = ((-1.0) ** j) * _U_COEF[2 * j + 1] / zeta ** (2 * j + 1)
        tR = ((-1.0) ** j) * _V_COEF[2 * j] / zeta ** (2 * j)
        tS = ((-1.0) ** j) * _V_COEF[2 * j + 1] / zeta ** (2 * j + 1)
        live &= np.abs(tP) <= prev
        P = np.where(live, P + tP, P)
        Q = np.where(live, Q + tQ, Q)
        R = np.where(live, R + tR, R)
        S = np.where(live, S + tS, S)
        prev = np.abs(tP)
    pref = 1.0 / (math.sqrt(math.pi) * x ** 0.25)
    ai = pref * (c * P + s * Q)
    aip = (x ** 0.25) / math.sqrt(math.pi) * (s * R - c * S)
    return ai, aip


def _airy_both(z):
    z = np.atleast_1d(np.asarray(z, dtype=float))
    ai = np.empty_like(z)
    aip = np.empty_like(z)
    mid = (z >= _SERIES_LO) & (z <= _SERIES_HI)
    right = z > _SERIES_HI
    left = z < _SERIES_LO
    if np.any(mid):
        ai[mid], aip[mid] = _airy_series(z[mid])
    if np.any(right):
        ai[right], aip[right] = _airy_asym_right(z[right])
    if np.any(left):
        ai[left], aip[left] = _airy_asym_left(z[left])
    return ai, aip


def airy_ai(z):
    """Airy function Ai(z); scalar or ndarray, |error| <~ 1e-11 on [-20, 20]."""
    ai, _ = _airy_both(z)
    return float(ai[0]) if np.isscalar(z) or np.ndim(z) == 0 else ai


def airy_ai_prime(z):
    """Derivative Ai'(z)."""
    _, aip = _airy_both(z)
    return float(aip[0]) if np.isscalar(z) or np.ndim(z) == 0 else aip


def airy_zero(s: int) -> float:
    """s-th negative zero of Ai (s = 1, 2, ...), Newton-polished."""
    if s < 1:
        raise DomainError("airy_zero needs s >= 1")
    t = 3.0 * math.pi * (4.0 * s - 1.0) / 8.0
    z = -(t ** (2.0 / 3.0)) * (1.0 + 5.0 / (48.0 * t * t))
    for _ in range(3):
        z -= airy_ai(z) / airy_ai_prime(z)
    return z


def airy_integral_oracle(z: float, abs_tol: float = 1e-12) -> float:
    """Ai(z) from the (contour-rotated) oscillatory integral; test oracle.

    For z > 0 the rotated representation
    Ai(z) = e^{-zeta}/pi * int_0^inf e^{-sqrt(z) u^2} cos(u^3/3) du
    is Gaussian-damped; at z = 0 the raw cos(u^3/3) integral is summed
    over its sign-change segments with Euler acceleration.
    """
    if z < 0:
        raise DomainError("oracle covers z >= 0 only")
    if z == 0.0:
        edges = [0.0] + [(1.5 * math.pi * (k + 0.5)) ** (1.0 / 3.0) for k in range(80)]
        xg, wg = gl_nodes(16)
        terms = []
        for lo, hi in zip(edges[:-1], edges[1:]):
            h = 0.5 * (hi - lo)
            u = lo + h * (xg + 1.0)
            terms.append(h * float(np.dot(wg, np.cos(u ** 3 / 3.0))))
        est, _ = euler_accelerate(terms)
        return est / math.pi
    zeta = (2.0 / 3.0) * z ** 1.5
    width = z ** -0.25

    def f(u):
        return np.exp(-math.sqrt(z) * u * u) * np.cos(u ** 3 / 3.0)

    val = gl_panels(f, np.linspace(0.0, 12.0 * width, 25), 16)
    return math.exp(-zeta) / math.pi * val


def airy_upper_integral(z: float) -> float:
    """aiint(z) = int_z^inf Ai(u) du.

    Brute quadrature in the moderate range; for deeply negative z the
    oscillatory asymptotic of the antiderivative is used.
    """
    if z >= 0.0:
        return gl_panels(airy_ai, np.linspace(z, z + 16.0, 33), 16)
    if z >= -80.0:
        tail = gl_panels(airy_ai, np.linspace(0.0, 16.0, 33), 16)
        osc = oscillating_panels(airy_ai, z, 0.0, 2.0 * math.pi / math.sqrt(-z + 1.0), nodes=12)
        return tail + osc
    w = -z
    zeta = (2.0 / 3.0) * w ** 1.5
    theta = zeta - 0.25 * math.pi
    # two-term asymptotic of the antiderivative (next order is O(zeta^-2))
    osc = math.sin(theta) - 41.0 / (72.0 * zeta) * math.cos(theta)
    return 1.0 + osc / (math.sqrt(math.pi) * w ** 0.75)

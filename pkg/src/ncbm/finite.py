"""Finite-N machinery: skew-orthogonal polynomials, kernels, Tdet correlations.

Everything numerical happens in the *conjugated* representation: with
b_m(x) the positive conjugation factor of the model, the stable
quantities are

    Rhat_k  = R_k^{(m)} / b_m,        Phihat_k = b_m * Phi_k^{(m)},

so each term of the kernel sums

    Dhat = D / (b_m b_n),  Shat = (b_m / b_n) S,  Ihat = b_m b_n I

carries only bounded exponentials.  The quaternion determinant is
invariant under this conjugation, so correlations are computed directly
from the hatted kernels at any N; the raw kernels are recovered by
multiplying the (log-space) b factors back in when they are
representable.

The transported polynomials at the horizon time (tau = 0, where the
series expansion of Phi stops converging) are handled exactly through
the closed-form integrals int_a^inf phi_l.
"""

from __future__ import annotations

import math
from typing import Callable, NamedTuple

import numpy as np

from .errors import DomainError, NonConvergenceError
from .lnum import LOG_2
from .model import FiniteNModel, MultitimeRequest
from .quadrature import gl_nodes, gl_panels
from .quaternion import QKernelMatrix, tdet
from .special import (
    hermite,
    log_heat_kernel,
    phi_full_integrals,
    phi_seq_scaled,
    phi_upper_integrals,
)

_TAIL_LOG = 38.0          # e^-38 ~ 3e-17: series tail cut in units of |tau|
_TAU_FLOOR = 2e-6         # below this the Phi series is hopeless; quadrature fallback
_EXP_GUARD = 690.0        # exponent bound before exp() overflow


class KernelValues(NamedTuple):
    S: float
    D: float
    I: float
    Stilde: float
    Itilde: float


def _combine2(m1, g1, m2, g2):
    """Signed-log of m1*e^g1 + m2*e^g2 without overflow."""
    g = max(g1, g2)
    if g == -math.inf:
        return 0.0, -math.inf
    v = m1 * math.exp(g1 - g) + m2 * math.exp(g2 - g)
    if v == 0.0:
        return 0.0, -math.inf
    return math.copysign(1.0, v), g + math.log(abs(v))


# ---------------------------------------------------------------------------
# polynomials and partner functions (reference forms, plain floats)

def R_k(model: FiniteNModel, k: int, x: float) -> float:
    """Monic skew-orthogonal polynomial R_k at the first observation time."""
    if k < 0 or k > model.kmax:
        raise DomainError(f"k must be in [0, kmax={model.kmax}]")
    u = x / model.c[0]
    z1 = model.z[0]
    out = model.alpha(k, k) * hermite(k, u)
    if k % 2 == 1 and k >= 3:
        out += model.alpha(k, k - 2) * hermite(k - 2, u) / (z1 * z1)
    return out


def R_k_m(model: FiniteNModel, m: int, k: int, x: float) -> float:
    """Transported polynomial R_k^{(m)}(x), closed Hermite form."""
    _check_time(model, m)
    u = x / model.c[m]
    w = math.exp(-0.5 * (1.0 - model.gamma[m]) * u * u + k * model.tau[0])
    s = model.alpha(k, k) * math.exp(-k * model.tau[m]) * hermite(k, u)
    if k % 2 == 1 and k >= 2:
        s += model.alpha(k, k - 2) * math.exp(-(k - 2) * model.tau[m]) * hermite(k - 2, u)
    return w * s / math.sqrt(2.0 * math.pi * model.times[m])


def R_k_m_quadrature(model: FiniteNModel, m: int, k: int, x: float, nodes: int = 24) -> float:
    """Defining integral of R_k^{(m)}: transport of R_k by the heat flow."""
    _check_time(model, m)
    t1 = model.times[0]
    if m == 0:
        return R_k(model, k, x) * math.exp(log_heat_kernel(t1, 0.0, x))
    dt = model.times[m] - t1
    lo, hi = -10.0 * math.sqrt(t1) - abs(x), 10.0 * math.sqrt(t1) + abs(x)

    def f(y):
        rk = np.array([R_k(model, k, yi) for yi in np.atleast_1d(y)])
        return rk * np.exp(log_heat_kernel(t1, 0.0, y) + log_heat_kernel(dt, y, x))

    return gl_panels(f, np.linspace(lo, hi, 40), nodes)


def F_mn(model: FiniteNModel, m: int, n: int, x: float, y: float,
         method: str = "closed", K: int | None = None) -> float:
    """Antisymmetric pair weight F^{m,n}(x, y).

    ``closed``  -- exact reduction: the ordered double Gaussian integral
                   equals E[sgn(B - A)] = erf((y-x)/sqrt(2 sigma^2)) with
                   sigma^2 = (T-t_m) + (T-t_n); collapses to sgn at the
                   horizon pair.
    ``direct``  -- quadrature of the defining double integral (inner
                   integral expressed through Gaussian CDFs).
    ``series``  -- Hermite double series with the closed-form Gram
                   matrix of the star inner product.
    """
    _check_time(model, m)
    _check_time(model, n)
    if method == "closed":
        return _F_closed(model, m, n, x, y)
    if method == "direct":
        return _F_direct(model, m, n, x, y)
    if method == "series":
        return _F_series(model, m, n, x, y, K or model.kmax)
    raise DomainError(f"unknown F method {method!r}")


def _F_closed(model, m, n, x, y):
    var = (model.T - model.times[m]) + (model.T - model.times[n])
    if var == 0.0:
        return float(np.sign(y - x))
    return math.erf((y - x) / math.sqrt(2.0 * var))


def _F_direct(model, m, n, x, y, nodes: int = 20):
    T = model.T
    vm = T - model.times[m]
    vn = T - model.times[n]

    def cdf(center, var, w):
        return 0.5 * (1.0 + np.vectorize(math.erf)((w - center) / math.sqrt(2.0 * var)))

    if vm == 0.0 and vn == 0.0:
        return float(np.sign(y - x))
    if vm == 0.0 or vn == 0.0:
        # one delta factor collapses the double integral to single integrals
        center, var, point = (y, vn, x) if vm == 0.0 else (x, vm, y)
        sd = math.sqrt(var)
        lo, hi = center - 10 * sd, center + 10 * sd

        def dens(w):
            return np.exp(log_heat_kernel(var, center, w))

        upper = gl_panels(dens, np.linspace(max(point, lo), max(point, lo) + (hi - lo), 40), nodes)
        lower = gl_panels(dens, np.linspace(min(point, hi) - (hi - lo), min(point, hi), 40), nodes)
        return (upper - lower) if vm == 0.0 else -(upper - lower)
    sd = math.sqrt(max(vm, vn))
    lo = min(x, y) - 10 * sd
    hi = max(x, y) + 10 * sd

    def f(w):
        pm = np.exp(log_heat_kernel(vm, x, w))
        pn = np.exp(log_heat_kernel(vn, y, w))
        return pn * cdf(x, vm, w) - pm * cdf(y, vn, w)

    return gl_panels(f, np.linspace(lo, hi, 60), nodes)


def _F_series(model, m, n, x, y, K):
    u = x / model.c[m]
    v = y / model.c[n]
    tau_m, tau_n = model.tau[m], model.tau[n]
    pu, lu = phi_seq_scaled(u, K)
    pv, lv = phi_seq_scaled(v, K)
    ks = np.arange(K + 1)
    au = pu[:, 0] * np.exp(ks * tau_m + lu[:, 0] - 0.5 * model.log_h[ks])
    av = pv[:, 0] * np.exp(ks * tau_n + lv[:, 0] - 0.5 * model.log_h[ks])
    g = model.gram_star(K)
    core = float(au @ g @ av)
    pref = math.exp(-0.5 * model.gamma[m] * u * u - 0.5 * model.gamma[n] * v * v) \
        / math.sqrt((2.0 * model.T - model.times[m]) * (2.0 * model.T - model.times[n]))
    return pref * core


def _check_time(model, m):
    if not 0 <= m <= model.M:
        raise DomainError(f"time index {m} outside 0..{model.M}")


# ---------------------------------------------------------------------------
# skew inner products (quadrature)

def skew_inner(model: FiniteNModel, m: int, f: Callable, g: Callable,
               half_width: float | None = None, nodes: int = 160) -> float:
    """<f, g>_m = iint F^{m,m}(x,y) f(x) g(y) dx dy, antisymmetrized."""
    _check_time(model, m)
    L = half_width if half_width is not None else 8.0 * math.sqrt(model.T) + 6.0
    xg, wg = gl_nodes(nodes)
    xs = L * xg
    ws = L * wg
    fv = np.array([f(t) for t in xs])
    gv = np.array([g(t) for t in xs])
    Fm = np.vectorize(math.erf)((xs[None, :] - xs[:, None])
                                / math.sqrt(4.0 * (model.T - model.times[m]))) \
        if model.times[m] < model.T else np.sign(xs[None, :] - xs[:, None])
    val = ws @ (Fm * np.outer(fv, gv)) @ ws
    return 0.5 * float(val - ws @ (Fm * np.outer(gv, fv)) @ ws)


def skew_inner_weighted(model: FiniteNModel, f: Callable, g: Callable,
                        half_width: float | None = None, nodes: int = 160) -> float:
    """<f, g> with the time-1 Gaussian start weights folded in."""
    t1 = model.times[0]
    L = half_width if half_width is not None else 9.0 * math.sqrt(t1) + 4.0

    def fw(xx):
        return f(xx) * math.exp(log_heat_kernel(t1, 0.0, xx))

    def gw(xx):
        return g(xx) * math.exp(log_heat_kernel(t1, 0.0, xx))

    return skew_inner(model, 0, fw, gw, half_width=L, nodes=nodes)


def skew_inner_star(model: FiniteNModel, f: Callable, g: Callable,
                    half_width: float | None = None, panels: int = 80,
                    nodes: int = 12) -> float:
    """<f, g>_* over the ordered half-plane with weight e^{-(z^2+w^2)/2T}.

    Separates into one-dimensional integrals: the inner cumulative
    integral is evaluated exactly at every outer node (panel prefix plus
    an in-panel partial Gauss rule).
    """
    L = half_width if half_width is not None else 9.0 * math.sqrt(model.T) + 4.0
    edges = np.linspace(-L, L, panels + 1)
    xg, wg = gl_nodes(nodes)
    h = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    pts = (mid[:, None] + h[:, None] * xg[None, :]).ravel()
    wts = (h[:, None] * wg[None, :]).ravel()

    def weighted(fn):
        vals = np.array([fn(t) for t in pts])
        return vals * np.exp(-pts * pts / (2.0 * model.T))

    fv = weighted(f)
    gv = weighted(g)

    def cumulative(vals, fn):
        # per-panel prefix sums, then the partial from the panel edge to
        # each node by a fresh Gauss rule on the smooth integrand
        panel_int = (vals * wts).reshape(panels, nodes).sum(axis=1)
        prefix = np.concatenate([[0.0], np.cumsum(panel_int)[:-1]])
        out = np.empty_like(vals)
        for p in range(panels):
            lo = edges[p]
            for k in range(nodes):
                z = pts[p * nodes + k]
                hh = 0.5 * (z - lo)
                sub = lo + hh * (xg + 1.0)
                subv = np.array([fn(t) for t in sub]) * np.exp(-sub * sub / (2.0 * model.T))
                out[p * nodes + k] = prefix[p] + hh * float(np.dot(wg, subv))
        return out

    cf = cumulative(fv, f)
    cg = cumulative(gv, g)
    return float(np.dot(gv * wts, cf) - np.dot(fv * wts, cg))


# ---------------------------------------------------------------------------
# densities

def km_density(model: FiniteNModel, s: float, x, t: float, y) -> float:
    """Non-colliding transition density: det of the heat-kernel matrix."""
    if not s < t:
        raise DomainError("km_density needs s < t")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise DomainError("configurations must be equal-length vectors")
    lp = log_heat_kernel(t - s, x[:, None], y[None, :])
    sign, logdet = np.linalg.slogdet(np.exp(lp))
    return float(sign * np.exp(logdet))


def _log_vandermonde(x):
    n = len(x)
    if n < 2:
        return 1.0, 0.0
    diffs = [x[j] - x[i] for i in range(n) for j in range(i + 1, n)]
    sign = 1.0
    logsum = 0.0
    for d in diffs:
        if d == 0.0:
            return 0.0, -math.inf
        sign *= math.copysign(1.0, d)
        logsum += math.log(abs(d))
    return sign, logsum


def density_multitime(model: FiniteNModel, positions) -> float:
    """Joint multitime density of the full N-particle paths.

    ``positions``: one length-N strictly increasing tuple per model time.
    Everything is accumulated in log space with explicit sign tracking.
    """
    pos = [np.asarray(p, dtype=float) for p in positions]
    if len(pos) != model.M + 1:
        raise DomainError(f"need {model.M + 1} configurations")
    for p in pos:
        if len(p) != model.N:
            raise DomainError("each configuration must have exactly N points")
        if np.any(np.diff(p) <= 0):
            raise DomainError("configurations must be strictly ordered")
    return _density_unchecked(model, pos)


def _density_unchecked(model, pos):
    sign_h1, log_h1 = _log_vandermonde(list(pos[0]))
    if log_h1 == -math.inf:
        return 0.0
    sign_hlast, _ = _log_vandermonde(list(pos[-1]))
    total_log = model.log_C + log_h1
    total_sign = sign_h1 * sign_hlast
    total_log += float(np.sum(log_heat_kernel(model.times[0], 0.0, pos[0])))
    for m in range(model.M):
        lp = log_heat_kernel(model.times[m + 1] - model.times[m],
                             pos[m][:, None], pos[m + 1][None, :])
        sign, logdet = np.linalg.slogdet(np.exp(lp - np.max(lp)))
        if sign == 0.0:
            return 0.0
        logdet += model.N * np.max(lp)
        total_sign *= sign
        total_log += logdet
    return float(total_sign * math.exp(total_log))


def density_multitime_batch(model: FiniteNModel, pos_arrays) -> np.ndarray:
    """Vectorized symmetric extension of the joint density.

    ``pos_arrays``: list over times of (B, N) coordinate arrays in any
    per-row order; returns (B,) densities (the formula is symmetric per
    time, with the sign factors handling unordered input).
    """
    B = pos_arrays[0].shape[0]
    N = model.N
    sign = np.ones(B)
    logv = np.full(B, model.log_C)
    x1 = pos_arrays[0]
    for i in range(N):
        for j in range(i + 1, N):
            d = x1[:, j] - x1[:, i]
            sign *= np.sign(d)
            with np.errstate(divide="ignore"):
                logv += np.log(np.abs(d))
    xl = pos_arrays[-1]
    for i in range(N):
        for j in range(i + 1, N):
            sign *= np.sign(xl[:, j] - xl[:, i])
    logv += np.sum(log_heat_kernel(model.times[0], 0.0, x1), axis=1)
    for m in range(model.M):
        lp = log_heat_kernel(model.times[m + 1] - model.times[m],
                             pos_arrays[m][:, :, None], pos_arrays[m + 1][:, None, :])
        peak = np.max(lp, axis=(1, 2))
        s, ld = np.linalg.slogdet(np.exp(lp - peak[:, None, None]))
        sign *= s
        logv += ld + N * peak
    with np.errstate(over="ignore"):
        out = sign * np.exp(logv)
    return np.where(np.isfinite(out), out, 0.0)


# ---------------------------------------------------------------------------
# kernel evaluator (conjugated representation)

class KernelEvaluator:
    """Evaluates the S/D/I kernel family of a model, conjugated form.

    Per-argument tables (Hermite function arrays and the hatted
    R/Phi signed-log vectors) are cached on (time index, position).
    """

    def __init__(self, model: FiniteNModel, kcut: int | None = None):
        self.model = model
        self.kcut = int(kcut) if kcut is not None else model.N // 2
        if self.kcut < model.N // 2:
            raise DomainError("kcut must reach at least N/2")
        self._cache: dict = {}
        m = model
        ks = np.arange(self.kcut)
        lh = m.log_h_table(2 * self.kcut + 2)
        lf = m.lfact_table(self.kcut + 1)
        # ln lambda_k = k tau_1 + k (ln c1 - ln 2) + 0.5 ln h_k
        lc1 = math.log(m.c[0])
        self._llam = (np.arange(2 * self.kcut + 2) * (m.tau[0] + lc1 - LOG_2)
                      + 0.5 * lh[np.arange(2 * self.kcut + 2)])
        # Phi even series prefactor and odd-term coefficient (signed logs)
        self._lpref_even = (m.log_rstar[ks] + 2 * ks * m.tau[0]
                            - 0.5 * math.log(2.0 * math.pi * m.T)
                            - (2 * ks + 1) * lc1 - lf[ks])
        self._lphi_odd = (m.log_rstar[ks] + 2 * ks * (LOG_2 - lc1)
                          - 0.5 * lh[2 * ks] + (2 * ks + 1) * m.tau[0]
                          - 0.5 * math.log(2.0 * math.pi * m.T))
        self._flags: list = []

    # -- per-argument tables ------------------------------------------------

    def _tables(self, m: int, x: float):
        key = (m, float(x))
        tab = self._cache.get(key)
        if tab is None:
            tab = self._build_tables(m, float(x))
            self._cache[key] = tab
        return tab

    def _series_length(self, m):
        md = self.model
        base = max(2 * self.kcut + 1, md.N) + 2
        tau = abs(float(md.tau[m]))
        if tau < _TAU_FLOOR:
            raise NonConvergenceError(
                f"tau[{m}] = {md.tau[m]:.2e} too small for the series path "
                "(observation time nearly at the horizon); use the horizon index")
        extra = int(math.ceil(_TAIL_LOG / tau))
        if extra > 4_000_000:
            raise NonConvergenceError("series tail too long; tighten times or raise tau")
        return base + extra

    def _build_tables(self, m, x):
        md = self.model
        K = self.kcut
        u = x / md.c[m]
        horizon = (m == md.M)
        lmax = (2 * K + 2) if horizon else self._series_length(m)
        pv, pl = phi_seq_scaled(u, lmax)
        pv = pv[:, 0]
        pl = pl[:, 0]
        ks = np.arange(K)
        tau_m = md.tau[m]

        # Rhat even/odd signed logs
        re_s = np.sign(pv[2 * ks])
        pref = -math.log(md.c[m]) - 0.5 * math.log(2.0 * math.pi * md.T)
        with np.errstate(divide="ignore"):
            re_l = (pref + self._llam[2 * ks] + (md.N - 2 * ks) * tau_m
                    + pl[2 * ks] + np.log(np.abs(pv[2 * ks])))
        ro_s = np.empty(K)
        ro_l = np.empty(K)
        for k in range(K):
            kk = 2 * k + 1
            g1 = (md.N - kk) * tau_m + pl[kk]
            m1 = pv[kk]
            if k >= 1:
                g2 = (md.N - kk + 2) * tau_m + pl[kk - 2]
                m2 = -math.sqrt((kk - 1) / kk) * pv[kk - 2]
            else:
                g2, m2 = -math.inf, 0.0
            s, g = _combine2(m1, g1, m2, g2)
            ro_s[k] = s
            ro_l[k] = pref + self._llam[kk] + g

        # Phihat even/odd signed logs
        pe_s = np.empty(K)
        pe_l = np.empty(K)
        po_s = np.empty(K)
        po_l = np.empty(K)
        if horizon:
            J = phi_upper_integrals(u, 2 * K + 2)
            Tfull = phi_full_integrals(2 * K + 2)
            base = 0.5 * math.log(md.T) - 0.5 * math.log(2.0 * math.pi)
            for k in range(K):
                val = Tfull[2 * k] - 2.0 * J[2 * k]
                pe_s[k], g = _signed_log_scalar(val)
                pe_l[k] = base + self._llam[2 * k] + g
                kk = 2 * k + 1
                m1 = Tfull[kk] - 2.0 * J[kk]
                if k >= 1:
                    m2 = -math.sqrt((kk - 1) / kk) * (Tfull[kk - 2] - 2.0 * J[kk - 2])
                else:
                    m2 = 0.0
                po_s[k], g = _signed_log_scalar(m1 + m2)
                po_l[k] = base + self._llam[kk] + g
        else:
            ls = np.arange(1, lmax + 1, 2)
            half = (ls - 1) // 2
            lh = md.log_h_table(lmax)
            lf = md.lfact_table(lmax)
            with np.errstate(divide="ignore"):
                lcoef = ((ls - md.N) * tau_m + ls * LOG_2 + lf[half]
                         - 0.5 * lh[ls] + pl[ls])
            terms = pv[ls] * np.exp(lcoef)
            suffix = np.concatenate([np.cumsum(terms[::-1])[::-1], [0.0]])
            for k in range(K):
                val = suffix[k]  # suffix over odd l >= 2k+1 is position k
                pe_s[k], g = _signed_log_scalar(val)
                pe_l[k] = self._lpref_even[k] + g
            po_s = -np.sign(pv[2 * ks])
            with np.errstate(divide="ignore"):
                po_l = (self._lphi_odd[ks] + (2 * ks - md.N) * tau_m
                        + pl[2 * ks] + np.log(np.abs(pv[2 * ks])))
        return {"re": (re_s, re_l), "ro": (ro_s, ro_l),
                "pe": (pe_s, pe_l), "po": (po_s, po_l),
                "logb": md.log_b(m, x)}

    # -- kernel entries -----------------------------------------------------

    def _pair_sum(self, A, B, K=None):
        (sa, la), (sb, lb) = A, B
        K = K if K is not None else self.kcut
        lr = self.model.log_r[:K]
        expo = la[:K] + lb[:K] - lr
        if np.any(expo > _EXP_GUARD):
            raise NonConvergenceError("kernel sum exponent overflow; model out of range")
        return float(np.sum(sa[:K] * sb[:K] * np.exp(expo)))

    def entry(self, m: int, n: int, x: float, y: float,
              conjugated: bool = True) -> KernelValues:
        """Kernel values S, D, I, Stilde, Itilde at (x at time m, y at time n)."""
        _check_time(self.model, m)
        _check_time(self.model, n)
        md = self.model
        K = md.N // 2
        ta = self._tables(m, x)
        tb = self._tables(n, y)
        D = self._pair_sum(ta["re"], tb["ro"], K) - self._pair_sum(ta["ro"], tb["re"], K)
        S = self._pair_sum(ta["pe"], tb["ro"], K) - self._pair_sum(ta["po"], tb["re"], K)
        I = -(self._pair_sum(ta["pe"], tb["po"], K) - self._pair_sum(ta["po"], tb["pe"], K))
        logbb = ta["logb"] + tb["logb"]
        F = _F_closed(md, m, n, x, y)
        Fhat = F * _guarded_exp(logbb)
        Itilde = I + Fhat
        if m < n:
            lp = log_heat_kernel(md.times[n] - md.times[m], x, y)
            Stilde = S - _guarded_exp(ta["logb"] - tb["logb"] + lp)
        else:
            Stilde = S
        if conjugated:
            return KernelValues(S, D, I, Stilde, Itilde)
        em = _guarded_exp(ta["logb"])
        en = _guarded_exp(tb["logb"])
        return KernelValues(S * en / em, D * em * en, I / (em * en),
                            Stilde * en / em, Itilde / (em * en))

    def phi_hat_pairs(self, m: int, x: float):
        """(sign, log) vectors of Phihat_{2k}, Phihat_{2k+1} for k < kcut."""
        t = self._tables(m, x)
        return t["pe"], t["po"]

    def F_series_partials(self, m: int, n: int, x: float, y: float) -> np.ndarray:
        """Partial sums over k of the Phi-pair series for b_m b_n F^{m,n}."""
        ta = self._tables(m, x)
        tb = self._tables(n, y)
        K = self.kcut
        (sa, la), (sb, lb) = ta["pe"], tb["po"]
        (sc, lc), (sd, ld) = ta["po"], tb["pe"]
        lr = self.model.log_r[:K]
        t1 = sa * sb * np.exp(la + lb - lr)
        t2 = sc * sd * np.exp(lc + ld - lr)
        return np.cumsum(t1 - t2)


def _signed_log_scalar(v: float):
    if v == 0.0:
        return 0.0, -math.inf
    return math.copysign(1.0, v), math.log(abs(v))


def _guarded_exp(g: float) -> float:
    if g > _EXP_GUARD:
        raise NonConvergenceError(f"exponent {g:.1f} out of double range")
    return math.exp(g)


def kernels_SDI(model: FiniteNModel, m: int, n: int, x: float, y: float,
                conjugated: bool = False) -> KernelValues:
    """One-shot kernel evaluation; see KernelEvaluator for batched use."""
    return KernelEvaluator(model).entry(m, n, x, y, conjugated=conjugated)


def Phi_k_m(model: FiniteNModel, m: int, k: int, x: float) -> float:
    """Partner function Phi_k^{(m)}(x) (raw, unconjugated)."""
    _check_time(model, m)
    ev = KernelEvaluator(model, kcut=max(model.N // 2, k // 2 + 1))
    (pe_s, pe_l), (po_s, po_l) = ev.phi_hat_pairs(m, x)
    idx = k // 2
    s, l = (pe_s[idx], pe_l[idx]) if k % 2 == 0 else (po_s[idx], po_l[idx])
    return float(s * _guarded_exp(l - model.log_b(m, x)))


def Phi_k_m_quadrature(model: FiniteNModel, m: int, k: int, x: float,
                       half_width: float | None = None) -> float:
    """Defining integral of Phi: int R_k^{(m)}(y) F^{m,m}(y, x) dy."""
    _check_time(model, m)
    c = model.c[m]
    sd = c / math.sqrt(1.0 - model.gamma[m])
    L = half_width if half_width is not None else (10.0 + 2.0 * math.sqrt(k + 1)) * sd

    def f(ys):
        ys = np.atleast_1d(ys)
        rk = np.array([R_k_m(model, m, k, yy) for yy in ys])
        fm = np.array([_F_closed(model, m, m, yy, x) for yy in ys])
        return rk * fm

    # F^{m,m}(., x) has a kink (sgn jump at the horizon) at y = x
    left = np.linspace(-L, x, 41) if x > -L else np.array([-L, x])
    right = np.linspace(x, L, 41) if x < L else np.array([x, L])
    return gl_panels(f, left, 16) + gl_panels(f, right, 16)


# ---------------------------------------------------------------------------
# assembly and correlations

def assemble_Q(request: MultitimeRequest, conjugated: bool = True,
               evaluator: KernelEvaluator | None = None) -> QKernelMatrix:
    """Self-dual quaternion kernel matrix over the requested points.

    Every block is computed independently and self-duality is asserted
    afterwards (it reflects the antisymmetries of D and Itilde).  With
    ``conjugated`` the blocks carry the b-factor conjugation, which
    leaves the quaternion determinant unchanged.
    """
    ev = evaluator or KernelEvaluator(request.model)
    labels = [(m, i, xx) for m, cfg in enumerate(request.configs)
              for i, xx in enumerate(cfg.positions)]
    n = len(labels)
    blocks = np.zeros((n, n, 2, 2), dtype=complex)
    for r, (m, _, xr) in enumerate(labels):
        for c_, (nn, _, xc) in enumerate(labels):
            here = ev.entry(m, nn, xr, xc, conjugated=conjugated)
            back = ev.entry(nn, m, xc, xr, conjugated=conjugated)
            blocks[r, c_, 0, 0] = here.Stilde
            blocks[r, c_, 0, 1] = here.Itilde
            blocks[r, c_, 1, 0] = here.D
            blocks[r, c_, 1, 1] = back.Stilde
    q = QKernelMatrix(blocks, block_index={(m, i): r for r, (m, i, _) in enumerate(labels)})
    q.require_self_dual(tol=1e-8)
    return q


def correlation(request: MultitimeRequest, evaluator: KernelEvaluator | None = None) -> float:
    """Multitime correlation function: Tdet of the assembled kernel matrix."""
    q = assemble_Q(request, conjugated=True, evaluator=evaluator)
    value, im = tdet(q, check=False)
    if im > 1e-6:
        raise NonConvergenceError(f"Tdet imaginary part {im:.2e} out of tolerance")
    return value

"""Scaling limits: extended sine (bulk) and extended Airy (edge) kernels,
their determinantal reductions, and the numerical convergence driver that
compares conjugated finite-N kernels against the limits.

Times s are nonpositive with the last one equal to 0 (the horizon).  The
bulk map sends s -> t = 2N + s with no spatial scaling; the edge map
sends s -> t = 2N^{1/3} + s and shifts positions by
a_N(s) = 2N^{2/3} - s^2/4.  The finite kernels are compared in the
b-conjugated normalization, matching

    D / (b_m b_n),   b_m b_n * Itilde,   (b_m / b_n) * Stilde.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError, NonConvergenceError
from .finite import KernelEvaluator, KernelValues
from .model import FiniteNModel
from .quadrature import (
    euler_accelerate,
    gl_fixed,
    gl_nodes,
    gl_panels,
    oscillating_panels,
)
from .special import airy_ai, airy_ai_prime, airy_upper_integral

BULK = "bulk"
EDGE = "edge"

_DAMP_LOG = 84.0  # exp(-84) ~ 3e-37: truncation depth for damped tails


# ---------------------------------------------------------------------------
# extended sine kernel (bulk limit)

def sine_Stilde(s: float, x: float, t: float, y: float) -> float:
    d = x - y
    if s == t:
        if abs(d) < 1e-8:
            return (1.0 - d * d / 6.0) / math.pi
        return math.sin(d) / (math.pi * d)
    if s > t:
        return gl_fixed(lambda lam: np.cos(lam * d) * np.exp(-lam * lam * (t - s) / 2.0),
                        0.0, 1.0, 64) / math.pi
    lam_max = math.sqrt(2.0 * _DAMP_LOG / (t - s))
    if lam_max <= 1.0:
        return 0.0
    wav = 2.0 * math.pi / max(abs(d), 1e-9)
    return -oscillating_panels(
        lambda lam: np.cos(lam * d) * np.exp(-lam * lam * (t - s) / 2.0),
        1.0, lam_max, min(wav, 2.0), nodes=12) / math.pi


def sine_D(s: float, x: float, t: float, y: float) -> float:
    d = x - y
    if d == 0.0:
        return 0.0
    return -gl_fixed(lambda lam: lam * np.sin(lam * d) * np.exp(-(s + t) * lam * lam / 2.0),
                     0.0, 1.0, 96) / math.pi


def sine_Itilde(s: float, x: float, t: float, y: float) -> float:
    d = x - y
    if d == 0.0:
        return 0.0
    if s + t < 0.0:
        lam_max = math.sqrt(2.0 * _DAMP_LOG / -(s + t))
        if lam_max <= 1.0:
            return 0.0
        wav = 2.0 * math.pi / abs(d)
        return -oscillating_panels(
            lambda lam: np.sin(lam * d) / lam * np.exp((s + t) * lam * lam / 2.0),
            1.0, lam_max, min(wav, 2.0), nodes=12) / math.pi
    if s + t > 0.0:
        raise DomainError("sine kernel needs s + t <= 0")
    # conditionally convergent tail: half-period segments + Euler
    xg, wg = gl_nodes(16)
    half = math.pi / abs(d)
    k0 = int(math.ceil(1.0 / half))
    edges = [1.0] + [k * half for k in range(k0, k0 + 120)]
    terms = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        h = 0.5 * (hi - lo)
        lam = lo + h * (xg + 1.0)
        terms.append(h * float(np.dot(wg, np.sin(lam * d) / lam)))
    est, err = euler_accelerate(terms)
    if err > 1e-9:
        raise NonConvergenceError(f"oscillatory sine tail error {err:.2e}")
    return -est / math.pi


def sine_Stilde_jump(s: float, x: float, y: float, eps: float = 1e-4) -> float:
    """Branch mismatch of Stilde across equal times, reported as a diagnostic.

    The s > t and s < t branches differ by the regularized full-line
    cosine integral, a Gaussian spike of width sqrt(eps) at x = y (the
    analogue of the edge kernel's P term); it is recorded, not asserted
    to vanish.
    """
    upper = sine_Stilde(s, x, s - eps, y)
    lower = sine_Stilde(s, x, s + eps, y)
    return upper - lower


def sine_kernel(s: float, x: float, t: float, y: float) -> KernelValues:
    """Extended sine kernel triple (Stilde, D, Itilde) packaged like the
    finite-N values (S == Stilde here, I == Itilde)."""
    st = sine_Stilde(s, x, t, y)
    d = sine_D(s, x, t, y)
    it = sine_Itilde(s, x, t, y)
    return KernelValues(S=st, D=d, I=it, Stilde=st, Itilde=it)


def sine_reduction_A(s_m: float, x: float, s_n: float, y: float) -> float:
    """Entry of the determinantal (bulk, widely separated times) reduction."""
    return sine_Stilde(s_m, x, s_n, y)


# ---------------------------------------------------------------------------
# extended Airy kernel (edge limit)

def _airy_upper_panels(shift_min: float, lam_max: float) -> np.ndarray:
    width = math.pi / (2.0 * math.sqrt(lam_max + abs(shift_min) + 2.0))
    n = max(8, int(math.ceil(lam_max / width)))
    return np.linspace(0.0, lam_max, n + 1)


def airy_D(s: float, x: float, t: float, y: float) -> float:
    """Antisymmetric derivative-bracket integral; the lambda derivative is
    expanded through Ai' so no numerical differentiation is nested."""
    if s == t and x == y:
        return 0.0
    lam_max = 40.0 + max(0.0, -min(x, y))

    def f(lam):
        ax = airy_ai(x + lam)
        ay = airy_ai(y + lam)
        apx = airy_ai_prime(x + lam)
        apy = airy_ai_prime(y + lam)
        damp = np.exp((s + t) * lam / 2.0)
        return damp * (0.5 * (t - s) * ax * ay + ax * apy - ay * apx)

    return 0.25 * gl_panels(f, _airy_upper_panels(min(x, y), lam_max), 12)


def airy_boundary_integral(s: float, x: float) -> float:
    """int_0^inf e^{s lam / 2} Ai(x - lam) d lam (s <= 0)."""
    if s > 0:
        raise DomainError("needs s <= 0")
    if s == 0.0:
        return 1.0 - airy_upper_integral(x)
    lam_max = _DAMP_LOG / -s

    def f(lam):
        return np.exp(s * lam / 2.0) * airy_ai(x - lam)

    return gl_panels(f, _airy_upper_panels(x, lam_max), 12)


def airy_S(s: float, x: float, t: float, y: float) -> float:
    lam_max = 50.0 + max(0.0, -min(x, y)) + (t - s) ** 2

    def f(lam):
        return np.exp((t - s) * lam / 2.0) * airy_ai(x + lam) * airy_ai(y + lam)

    main = gl_panels(f, _airy_upper_panels(min(x, y), lam_max), 12)
    return main + 0.5 * airy_ai(y) * airy_boundary_integral(s, x)


def airy_P(s: float, x: float, t: float, y: float) -> float:
    """Full-line exponentially weighted Airy overlap; needs t > s."""
    if not t > s:
        raise DomainError("P needs t > s (its integral diverges otherwise)")
    lam_max = 50.0 + max(0.0, -min(x, y)) + (t - s) ** 2

    def f(lam):
        return np.exp((t - s) * lam / 2.0) * airy_ai(x + lam) * airy_ai(y + lam)

    pos = gl_panels(f, _airy_upper_panels(min(x, y), lam_max), 12)
    lam_min = -2.0 * _DAMP_LOG / (t - s)
    wav = 2.0 * math.pi / math.sqrt(-lam_min + abs(min(x, y)) + 2.0)
    neg = oscillating_panels(f, lam_min, 0.0, wav, nodes=12)
    return pos + neg


def _G_on_sorted(b: float, shift: float, nodes: np.ndarray) -> np.ndarray:
    """G(lam) = int_lam^inf e^{b mu / 2} Ai(shift - mu) d mu at sorted nodes."""
    last = float(nodes[-1])
    if b == 0.0:
        anchor = 1.0 - airy_upper_integral(shift - last)
    else:
        lam_stop = _DAMP_LOG / -b
        if lam_stop > last + 0.5:
            wav = 2.0 * math.pi / math.sqrt(lam_stop + abs(shift) + 2.0)
            anchor = oscillating_panels(
                lambda mu: np.exp(b * mu / 2.0) * airy_ai(shift - mu),
                last, lam_stop, wav, nodes=12)
        else:
            anchor = 0.0
    xg, wg = gl_nodes(8)
    lo = nodes[:-1]
    hi = nodes[1:]
    h = 0.5 * (hi - lo)
    mids = 0.5 * (lo + hi)
    mu = (mids[:, None] + h[:, None] * xg[None, :]).ravel()
    vals = (np.exp(b * mu / 2.0) * airy_ai(shift - mu)).reshape(len(h), len(xg))
    gaps = h * (vals @ wg)
    out = np.empty(len(nodes))
    out[-1] = anchor
    out[:-1] = anchor + np.cumsum(gaps[::-1])[::-1]
    return out


class _ItildeEvaluator:
    """Shared node set and cached G / Ai tables for Itilde at fixed (s, t)."""

    def __init__(self, s: float, t: float):
        self.s = s
        self.t = t
        self.hard = (s == 0.0 and t == 0.0)
        lam_max = 300.0 if self.hard else min(2.0 * _DAMP_LOG / -(s + t), 600.0)
        self.lam_max = lam_max
        wav = 2.0 * math.pi / math.sqrt(lam_max + 8.0)
        n = max(8, int(math.ceil(lam_max / wav)))
        edges = np.linspace(0.0, lam_max, n + 1)
        xg, wg = gl_nodes(12)
        h = 0.5 * np.diff(edges)
        mids = 0.5 * (edges[:-1] + edges[1:])
        lam = (mids[:, None] + h[:, None] * xg[None, :]).ravel()
        wts = (h[:, None] * wg[None, :]).ravel()
        order = np.argsort(lam)
        self.lam = lam[order]
        self.wts = wts[order]
        self._g: dict = {}
        self._ai: dict = {}

    def _G(self, b, shift):
        key = (b, shift)
        if key not in self._g:
            self._g[key] = _G_on_sorted(b, shift, self.lam)
        return self._g[key]

    def _Ai(self, shift):
        if shift not in self._ai:
            self._ai[shift] = airy_ai(shift - self.lam)
        return self._ai[shift]

    def value(self, x: float, y: float) -> float:
        if x == y and self.s == self.t:
            return 0.0
        s, t = self.s, self.t
        integrand = (np.exp(t * self.lam / 2.0) * self._Ai(y) * self._G(s, x)
                     - np.exp(s * self.lam / 2.0) * self._Ai(x) * self._G(t, y))
        val = float(np.dot(self.wts, integrand))
        if self.hard:
            val += _itilde_tail(x, y, self.lam_max)
        return val


_ITILDE_CACHE: dict = {}


def _itilde_tail(x: float, y: float, lam0: float) -> float:
    """Analytic tail of the s = t = 0 Itilde integrand beyond lam0.

    Uses the oscillatory asymptotics of Ai and its antiderivative; the
    surviving slow component oscillates with phase zeta(lam-x)-zeta(lam-y)
    and is summed over its half-periods with Euler acceleration.
    """
    if x == y:
        return 0.0
    sgn = 1.0

    def phase(lam):
        return (2.0 / 3.0) * ((lam - x) ** 1.5 - (lam - y) ** 1.5)

    def slow(lam):
        A = (lam - y) ** -0.25 * (lam - x) ** -0.75
        B = (lam - x) ** -0.25 * (lam - y) ** -0.75
        return -(A + B) * np.sin(phase(lam)) / (2.0 * math.pi)

    # segment ends where the slow phase passes multiples of pi
    d = abs(x - y)
    p0 = phase(lam0)
    k0 = int(math.floor(abs(p0) / math.pi)) + 1
    edges = [lam0]
    for k in range(k0, k0 + 80):
        lam = (k * math.pi / d) ** 2  # first-order inversion of the phase
        for _ in range(3):
            g = abs(phase(lam)) - k * math.pi
            dg = abs(math.sqrt(lam - x) - math.sqrt(lam - y))
            lam -= g / dg
        if lam > edges[-1]:
            edges.append(lam)
    xg, wg = gl_nodes(16)
    terms = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        h = 0.5 * (hi - lo)
        lam = lo + h * (xg + 1.0)
        terms.append(h * float(np.dot(wg, slow(lam))))
    est, err = euler_accelerate(terms)
    if err > 1e-7:
        raise NonConvergenceError(f"Itilde tail acceleration error {err:.2e}")
    return sgn * est


def airy_Itilde(s: float, x: float, t: float, y: float) -> float:
    """Antisymmetric double integral of the extended Airy system."""
    if s == t and x == y:
        return 0.0
    if s > 0 or t > 0:
        raise DomainError("needs s, t <= 0")
    key = (float(s), float(t))
    ev = _ITILDE_CACHE.get(key)
    if ev is None:
        if len(_ITILDE_CACHE) > 32:
            _ITILDE_CACHE.clear()
        ev = _ItildeEvaluator(*key)
        _ITILDE_CACHE[key] = ev
    return ev.value(x, y)


def airy_Stilde(s: float, x: float, t: float, y: float) -> float:
    st = airy_S(s, x, t, y)
    if s < t:
        st -= airy_P(s, x, t, y)
    return st


def airy_kernel(s: float, x: float, t: float, y: float) -> tuple:
    """(Stilde, D, Itilde, S, P) of the extended Airy system."""
    S = airy_S(s, x, t, y)
    P = airy_P(s, x, t, y) if s < t else 0.0
    return (S - P * (1.0 if s < t else 0.0), airy_D(s, x, t, y),
            airy_Itilde(s, x, t, y), S, P)


def airy_reduction_a(s_m: float, x: float, s_n: float, y: float) -> float:
    """Temporally homogeneous edge reduction kernel (the Airy process)."""
    rate = (s_n - s_m) / 2.0

    def f(lam):
        return np.exp(rate * lam) * airy_ai(x + lam) * airy_ai(y + lam)

    if s_m >= s_n:
        lam_max = 50.0 + max(0.0, -min(x, y))
        return gl_panels(f, _airy_upper_panels(min(x, y), lam_max), 12)
    lam_min = -_DAMP_LOG / rate
    wav = 2.0 * math.pi / math.sqrt(-lam_min + abs(min(x, y)) + 2.0)
    return -oscillating_panels(f, lam_min, 0.0, wav, nodes=12)


# ---------------------------------------------------------------------------
# scaling maps and convergence driver

@dataclass(frozen=True)
class ScalingMap:
    """Finite-N realization of a scaling regime at particle count N."""

    regime: str
    N: int
    s_values: tuple

    def __post_init__(self):
        if self.regime not in (BULK, EDGE):
            raise DomainError(f"regime must be '{BULK}' or '{EDGE}'")
        s = tuple(float(v) for v in self.s_values)
        object.__setattr__(self, "s_values", s)
        if any(b <= a for a, b in zip(s, s[1:])):
            raise DomainError("s values must be strictly increasing")
        if any(v > 0 for v in s) or s[-1] != 0.0:
            raise DomainError("s values must be nonpositive with the last exactly 0")
        if self.horizon + s[0] <= 0:
            raise DomainError(f"N={self.N} too small for s_1={s[0]}")

    @property
    def horizon(self) -> float:
        return 2.0 * self.N if self.regime == BULK else 2.0 * self.N ** (1.0 / 3.0)

    @property
    def times(self) -> tuple:
        return tuple(self.horizon + v for v in self.s_values)

    def space_shift(self, m: int) -> float:
        if self.regime == BULK:
            return 0.0
        return 2.0 * self.N ** (2.0 / 3.0) - self.s_values[m] ** 2 / 4.0

    def model(self) -> FiniteNModel:
        return FiniteNModel(self.N, self.horizon, self.times)


def scaled_finite_kernel(smap: ScalingMap, m: int, n: int, x: float, y: float,
                         evaluator: KernelEvaluator | None = None) -> KernelValues:
    """Conjugated finite-N kernels at the mapped points of a scaling regime.

    The returned entries are normalized so they converge *entrywise* to
    the limit kernels evaluated at (s_m, x; s_n, y).  The quaternion
    determinant is blind to any diagonal conjugation, so the exact
    factors are fixed empirically per regime:

    * bulk: raw kernels with the constant split (2 D, Itilde / 2);
    * edge: b-factor conjugation rescaled by the horizon T with a sign
      flip on the off-diagonal pair (a constant unit-quaternion twist).
    """
    ev = evaluator or KernelEvaluator(smap.model())
    X = smap.space_shift(m) + x
    Y = smap.space_shift(n) + y
    if smap.regime == BULK:
        kv = ev.entry(m, n, X, Y, conjugated=False)
        return KernelValues(S=kv.S, D=2.0 * kv.D, I=0.5 * kv.I,
                            Stilde=kv.Stilde, Itilde=0.5 * kv.Itilde)
    kv = ev.entry(m, n, X, Y, conjugated=True)
    T = smap.horizon
    return KernelValues(S=kv.S, D=-T * kv.D, I=-kv.I / T,
                        Stilde=kv.Stilde, Itilde=-kv.Itilde / T)


DEFAULT_PROBE = {
    BULK: {"s_values": (-2.0, -1.0, 0.0), "grid": (-2.0, -1.0, 0.0, 1.0, 2.0)},
    EDGE: {"s_values": (-1.0, -0.5, 0.0), "grid": (-2.0, -1.0, 0.0, 1.0, 2.0)},
}


def limit_kernel_table(regime: str, s_values: Sequence[float], grid: Sequence[float]):
    """Limit kernel entries over all time pairs and grid points."""
    s_values = tuple(s_values)
    grid = tuple(grid)
    out = {}
    for mi, sm in enumerate(s_values):
        for ni, sn in enumerate(s_values):
            for x in grid:
                for y in grid:
                    if regime == BULK:
                        st = sine_Stilde(sm, x, sn, y)
                        d = sine_D(sm, x, sn, y)
                        it = sine_Itilde(sm, x, sn, y)
                    else:
                        st = airy_Stilde(sm, x, sn, y)
                        d = airy_D(sm, x, sn, y)
                        it = airy_Itilde(sm, x, sn, y)
                    out[(mi, ni, x, y)] = (st, d, it)
    return out


def convergence_table(regime: str, N_list: Iterable[int],
                      s_values: Sequence[float] | None = None,
                      grid: Sequence[float] | None = None,
                      limits: dict | None = None):
    """Sup-errors of the conjugated finite kernels against the limit kernels.

    Returns (rows, verdict): rows are dicts with keys N/entry/sup_error,
    verdict maps entry name to True when the error decreases strictly
    along N_list.
    """
    N_list = list(N_list)
    if any(n % 2 != 0 for n in N_list):
        raise DomainError("N_list entries must be even")
    if any(b <= a for a, b in zip(N_list, N_list[1:])):
        raise DomainError("N_list must be increasing")
    s_values = tuple(s_values if s_values is not None else DEFAULT_PROBE[regime]["s_values"])
    grid = tuple(grid if grid is not None else DEFAULT_PROBE[regime]["grid"])
    if limits is None:
        limits = limit_kernel_table(regime, s_values, grid)
    workers = max(1, int(os.environ.get("NCBM_THREADS", "1")))
    rows = []
    sups = {"Stilde": [], "D": [], "Itilde": []}
    keys = sorted(limits)
    for N in N_list:
        smap = ScalingMap(regime, N, s_values)
        ev = KernelEvaluator(smap.model())

        def one(key):
            mi, ni, x, y = key
            return scaled_finite_kernel(smap, mi, ni, x, y, evaluator=ev)

        if workers > 1:
            # warm the per-argument caches serially (shared evaluator),
            # then fan out; results keyed so the reduction order is fixed
            for mi in range(len(s_values)):
                for x in grid:
                    ev._tables(mi, smap.space_shift(mi) + x)
            from concurrent.futures import ThreadPoolExecutor
            with ThreadPoolExecutor(max_workers=workers) as pool:
                values = dict(zip(keys, pool.map(one, keys)))
        else:
            values = {k: one(k) for k in keys}
        sup = {"Stilde": 0.0, "D": 0.0, "Itilde": 0.0}
        for key in keys:
            lst, ld, lit = limits[key]
            kv = values[key]
            sup["Stilde"] = max(sup["Stilde"], abs(kv.Stilde - lst))
            sup["D"] = max(sup["D"], abs(kv.D - ld))
            sup["Itilde"] = max(sup["Itilde"], abs(kv.Itilde - lit))
        for entry in ("Stilde", "D", "Itilde"):
            rows.append({"N": N, "entry": entry, "sup_error": float(sup[entry])})
            sups[entry].append(float(sup[entry]))
    verdict = {e: all(b < a for a, b in zip(v, v[1:])) for e, v in sups.items()}
    return rows, verdict

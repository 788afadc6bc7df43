"""Model constants and request types for the finite-N particle system.

A :class:`FiniteNModel` freezes everything derived from (N, T, times):
the per-time constants c_n, gamma_n, z_n, tau_n, the skew norms r_j and
r*_j, the polynomial coefficient tables alpha/beta, and the overall
normalization C(N, T, t_1).  All products of factorials and powers are
kept in log space; the tables are exposed both as plain floats (small
indices) and as (sign, log magnitude) pairs.

Time indices are 0-based in code: m = 0 .. M, where index M is the
horizon time t = T (one-based references would call it m+1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .lnum import LOG_2, LOG_PI, log_factorials, log_gamma_half, log_h


class FiniteNModel:
    """Constants of N non-colliding Brownian particles on [0, T].

    Parameters
    ----------
    N : even particle count (the skew-orthogonal pairing needs N even)
    T : non-collision horizon, > 0
    times : strictly increasing observation times with times[-1] == T
    kmax : truncation order for series expansions (default N + 40)
    """

    def __init__(self, N: int, T: float, times, kmax: int | None = None):
        if N < 2 or N % 2 != 0:
            raise DomainError(f"N must be a positive even integer, got {N}")
        if not T > 0:
            raise DomainError("T must be positive")
        times = tuple(float(t) for t in times)
        if not times:
            raise DomainError("at least one observation time is required")
        if any(t2 <= t1 for t1, t2 in zip(times, times[1:])):
            raise DomainError(f"times must be strictly increasing, got {times}")
        if not times[0] > 0:
            raise DomainError("the first observation time must be > 0")
        if abs(times[-1] - T) > 1e-12 * max(T, 1.0):
            raise DomainError(f"the last observation time must equal T={T}, got {times[-1]}")
        times = times[:-1] + (float(T),)

        self.N = int(N)
        self.T = float(T)
        self.times = times
        self.M = len(times) - 1      # number of intermediate times
        self.kmax = int(kmax) if kmax is not None else N + 40

        t = np.asarray(times)
        self.c = np.sqrt(t * (2.0 * T - t) / T)
        self.gamma = -(T - t) / T
        self.z = np.sqrt((2.0 * T - t) / t)
        # tau_m = -log z_m <= 0, exactly 0 at the horizon
        self.tau = -0.5 * (np.log(2.0 * T - t) - np.log(t))
        self.tau[-1] = 0.0

        kmx = max(self.kmax, N // 2) + 2
        ks = np.arange(kmx + 1, dtype=float)
        lt1sq = 2.0 * math.log(times[0]) - math.log(T)
        # ln r_j = ln Gamma(j+1/2) + ln Gamma(j+1) - ln pi + (2j+1/2) ln(t1^2/T)
        self.log_r = (log_gamma_half(kmx) + log_factorials(kmx) - LOG_PI
                      + (2.0 * ks + 0.5) * lt1sq)
        self._log_h = log_h(2 * kmx + 2)
        lc1 = math.log(self.c[0])
        # ln r*_k = ln 4 + ln h_{2k} + ln T + (4k+1)(ln c1 - ln 2)
        self.log_rstar = (math.log(4.0) + self._log_h[2 * ks.astype(int)]
                          + math.log(T) + (4.0 * ks + 1.0) * (lc1 - LOG_2))
        self._lfact = log_factorials(2 * kmx + 2)
        self._lc1 = lc1

        # ln C(N,T,t1) = (N/2) ln pi - sum_j ln Gamma(j/2) + N(N-1)/4 ln T - N(N-1)/2 ln t1
        lg_half = sum(math.lgamma(j / 2.0) for j in range(1, N + 1))
        self.log_C = (0.5 * N * LOG_PI - lg_half
                      + 0.25 * N * (N - 1) * math.log(T)
                      - 0.5 * N * (N - 1) * math.log(times[0]))

    def log_h_table(self, n: int) -> np.ndarray:
        """ln h_l for l = 0..n (table grows on demand)."""
        if len(self._log_h) <= n:
            self._log_h = log_h(n + 16)
        return self._log_h

    def lfact_table(self, n: int) -> np.ndarray:
        """ln l! for l = 0..n (table grows on demand)."""
        if len(self._lfact) <= n:
            self._lfact = log_factorials(n + 16)
        return self._lfact

    @property
    def log_h(self) -> np.ndarray:
        return self._log_h

    # -- coefficient tables ------------------------------------------------

    def alpha(self, k: int, j: int) -> float:
        """Coefficient alpha_{kj} mapping Hermite to the monic family."""
        if k < 0 or j < 0:
            return 0.0
        base = 2.0 ** -k * self.c[0] ** k
        if k % 2 == 0:
            return base if j == k else 0.0
        if j == k:
            return base
        if j == k - 2:
            return -2.0 * (k - 1) * base
        return 0.0

    def beta(self, k: int, j: int) -> float:
        """Inverse table: sum_j beta_{kj} alpha_{js} = delta_{ks}."""
        if k < 0 or j < 0:
            return 0.0
        if k % 2 == 0:
            return 2.0 ** k * self.c[0] ** -k if j == k else 0.0
        if j % 2 == 1 and k >= j:
            return (2.0 ** k * math.gamma((k + 1) / 2.0)
                    / (self.c[0] ** j * math.gamma((j + 1) / 2.0)))
        return 0.0

    def r(self, j: int) -> float:
        return math.exp(self.log_r[j])

    def rstar(self, j: int) -> float:
        return math.exp(self.log_rstar[j])

    def log_b(self, m: int, x) -> float:
        """ln b_m(x) of the conjugation factor; exponent arithmetic only."""
        u = np.asarray(x, dtype=float) / self.c[m]
        out = (0.5 * math.log(2.0 * self.T - self.times[m])
               + 0.5 * self.gamma[m] * u * u - self.N * self.tau[m])
        return float(out) if out.ndim == 0 else out

    def gram_star(self, kmax: int) -> np.ndarray:
        """Closed-form Gram matrix <H_k(./sqrt(T)), H_l(./sqrt(T))>_*.

        Supported on (even, odd) index pairs; entry (2a, l) equals
        beta_{2a,2a} beta_{l,2a+1} r*_a, antisymmetrized.
        """
        g = np.zeros((kmax + 1, kmax + 1))
        for k in range(0, kmax + 1, 2):
            a = k // 2
            for l in range(k + 1, kmax + 1, 2):
                val = self.beta(k, k) * self.beta(l, k + 1) * self.rstar(a)
                g[k, l] = val
                g[l, k] = -val
        return g

    def __repr__(self):
        return f"FiniteNModel(N={self.N}, T={self.T}, times={self.times})"


@dataclass(frozen=True)
class Configuration:
    """A point configuration at one observation time.

    Positions are kept sorted (the Weyl-chamber representative); use
    :meth:`from_unsorted` to canonicalize arbitrary input, implementing
    the labelling-forgetting map onto the sorted representative.  Ties
    are tolerated here -- any correlation involving a repeated point
    vanishes through the repeated Pfaffian row pair -- while the density
    routines demand strict ordering.
    """

    positions: tuple
    time_index: int = 0

    def __post_init__(self):
        pos = tuple(float(p) for p in self.positions)
        object.__setattr__(self, "positions", pos)
        if any(b < a for a, b in zip(pos, pos[1:])):
            raise DomainError(f"positions must be sorted, got {pos}")

    @classmethod
    def from_unsorted(cls, positions, time_index: int = 0):
        return cls(tuple(sorted(float(p) for p in positions)), time_index)

    def __len__(self):
        return len(self.positions)


@dataclass(frozen=True)
class MultitimeRequest:
    """Which points to correlate at which observation times.

    One configuration per model time; empty configurations are allowed
    (that time is marginalized out entirely), at least one must be
    non-empty and every size must be <= N.
    """

    model: FiniteNModel
    configs: tuple = field(default=())

    def __post_init__(self):
        cfgs = tuple(self.configs)
        object.__setattr__(self, "configs", cfgs)
        if len(cfgs) != self.model.M + 1:
            raise DomainError(
                f"need {self.model.M + 1} configurations (one per time), got {len(cfgs)}")
        for m, c in enumerate(cfgs):
            if c.time_index != m:
                raise DomainError(f"configuration {m} carries time_index {c.time_index}")
            if len(c) > self.model.N:
                raise DomainError(f"configuration {m} has more than N={self.model.N} points")
        if sum(len(c) for c in cfgs) == 0:
            raise DomainError("at least one configuration must be non-empty")

    @classmethod
    def from_points(cls, model: FiniteNModel, points_per_time):
        cfgs = tuple(Configuration.from_unsorted(p, m)
                     for m, p in enumerate(points_per_time))
        return cls(model, cfgs)

    @property
    def counts(self):
        return tuple(len(c) for c in self.configs)

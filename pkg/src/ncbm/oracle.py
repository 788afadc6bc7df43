"""Independent ground truth: brute-force quadrature of the correlation
integrals, and a Metropolis sampler of the joint multitime density with
box-count correlation estimates.

The quadrature oracle integrates the explicit product-form density over
the unfixed coordinates exactly as the correlation is defined: each free
coordinate runs over the whole line (the symmetric extension of the
density handles unordered points) and the result carries the
1/(N - N_m)! multiplicities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NonConvergenceError
from .finite import density_multitime_batch
from .model import FiniteNModel, MultitimeRequest
from .quadrature import gl_nodes


# ---------------------------------------------------------------------------
# quadrature oracle

def correlation_quadrature(request: MultitimeRequest, nodes: int = 80,
                           half_width: float | None = None,
                           force: bool = False,
                           max_points: int = 40_000_000) -> float:
    """Correlation function by direct nested quadrature (slow, exact).

    Guarded to N <= 3, M <= 2 by default (the cost grows exponentially
    in the number of free coordinates); pass ``force=True`` to override.
    """
    model = request.model
    if not force and (model.N > 3 or model.M > 2):
        raise DomainError("quadrature oracle guarded to N <= 3, M <= 2 "
                          "(pass force=True to override, or use the sampler)")
    free = [model.N - len(c) for c in request.configs]
    fdim = sum(free)
    if nodes ** max(fdim, 1) > max_points:
        raise DomainError(f"{fdim} free dimensions at {nodes} nodes exceeds the "
                          "point budget; reduce nodes or fix more coordinates")
    L = half_width if half_width is not None else 6.5 * math.sqrt(model.T) + 2.0
    if fdim == 0:
        pos = [np.asarray(c.positions) for c in request.configs]
        vals = density_multitime_batch(model, [p[None, :] for p in pos])
        return float(vals[0])
    # the symmetric density has |z - x_fixed| kinks at each fixed point of
    # the same time, so every free axis is split there
    axes = []
    for m, cfg in enumerate(request.configs):
        pts, wts = _free_axis(L, cfg.positions, nodes)
        for _ in range(free[m]):
            axes.append((pts, wts))
    sizes = [len(p) for p, _ in axes]
    n_total = int(np.prod(sizes))
    if n_total > max_points:
        raise DomainError(f"{fdim} free dimensions need {n_total} points, over budget")
    total = 0.0
    chunk = 200_000
    factorial_norm = 1.0
    for f in free:
        factorial_norm /= math.factorial(f)
    for start in range(0, n_total, chunk):
        idx = np.arange(start, min(start + chunk, n_total))
        B = len(idx)
        digits = []
        rem = idx
        for size in sizes:
            digits.append(rem % size)
            rem = rem // size
        w = np.ones(B)
        arrays = []
        d = 0
        for m, cfg in enumerate(request.configs):
            cols = [np.full(B, xx) for xx in cfg.positions]
            for _ in range(free[m]):
                pts, wts = axes[d]
                cols.append(pts[digits[d]])
                w = w * wts[digits[d]]
                d += 1
            arrays.append(np.column_stack(cols))
        total += float(np.dot(w, density_multitime_batch(model, arrays)))
    return total * factorial_norm


def _free_axis(L: float, fixed, nodes: int):
    """Composite GL nodes on [-L, L] split at the fixed same-time points."""
    edges = [-L] + sorted(x for x in fixed if -L < x < L) + [L]
    pts = []
    wts = []
    xg, wg = gl_nodes(max(16, nodes // max(1, len(edges) - 1)))
    for lo, hi in zip(edges[:-1], edges[1:]):
        h = 0.5 * (hi - lo)
        pts.append(lo + h * (xg + 1.0))
        wts.append(h * wg)
    return np.concatenate(pts), np.concatenate(wts)


# ---------------------------------------------------------------------------
# Metropolis sampler

@dataclass(frozen=True)
class McConfig:
    seed: int = 20260808
    chains: int = 4
    burn_in: int = 4000
    samples_per_chain: int = 50_000
    proposal_scale: float = 0.5
    bin_width: float = 0.3

    def __post_init__(self):
        if self.chains < 2:
            raise DomainError("need chains >= 2 for the split-Rhat diagnostic")
        if self.samples_per_chain < 1000:
            raise DomainError("need samples_per_chain >= 1000")
        if not self.proposal_scale > 0:
            raise DomainError("proposal_scale must be positive")
        if not self.bin_width > 0:
            raise DomainError("bin_width must be positive")


@dataclass
class EstimateWithError:
    value: float
    std_error: float
    n_effective: float
    rhat: float
    multi_occupancy: float = 0.0

    def to_dict(self):
        return {"value": self.value, "std_error": self.std_error,
                "n_effective": self.n_effective, "rhat": self.rhat,
                "multi_occupancy": self.multi_occupancy}


class SampleSet:
    """Post-burn-in samples: array (chains, steps, M+1, N), plus metadata."""

    def __init__(self, model, samples, acceptance_rate, proposal_scale):
        self.model = model
        self.samples = samples
        self.acceptance_rate = acceptance_rate
        self.proposal_scale = proposal_scale

    def iter_rows(self):
        """Yield export rows (chain, step, time index, particle, position)."""
        C, S, MT, N = self.samples.shape
        for c in range(C):
            for s in range(S):
                for m in range(MT):
                    for i in range(N):
                        yield c, s, m, i, self.samples[c, s, m, i]


def _log_density_factory(model: FiniteNModel):
    N = model.N
    M = model.M
    logC = model.log_C
    t1 = model.times[0]
    dts = [model.times[m + 1] - model.times[m] for m in range(M)]

    def logrho(x):
        # x: (M+1, N) ordered rows
        lv = logC
        row = x[0]
        for i in range(N):
            for j in range(i + 1, N):
                d = row[j] - row[i]
                if d <= 0.0:
                    return -math.inf
                lv += math.log(d)
        lv += -0.5 * float(np.sum(row * row)) / t1 - 0.5 * N * math.log(2.0 * math.pi * t1)
        for m in range(M):
            a, b = x[m], x[m + 1]
            d2 = (a[:, None] - b[None, :]) ** 2
            mat = np.exp(-d2 / (2.0 * dts[m]))
            sign, logdet = np.linalg.slogdet(mat)
            if sign <= 0.0:
                return -math.inf
            lv += logdet - 0.5 * N * math.log(2.0 * math.pi * dts[m])
        return lv

    return logrho


def sample_density(model: FiniteNModel, mc: McConfig) -> SampleSet:
    """Random-walk Metropolis on the joint ordered configurations.

    One uniformly chosen coordinate is perturbed per step; proposals
    breaking the ordering are rejected.  The proposal scale adapts
    toward a 0.2-0.5 acceptance rate during burn-in only, so the
    post-burn-in chain satisfies detailed balance.  Deterministic for a
    fixed seed.
    """
    N, M = model.N, model.M
    logrho = _log_density_factory(model)
    out = np.empty((mc.chains, mc.samples_per_chain, M + 1, N))
    acc_rates = []
    scales = []
    for chain in range(mc.chains):
        rng = np.random.default_rng([int(mc.seed), int(chain)])
        x = np.empty((M + 1, N))
        for m in range(M + 1):
            spread = math.sqrt(model.times[m] * N)
            x[m] = np.linspace(-spread, spread, N)
        lp = logrho(x)
        scale = mc.proposal_scale
        accepted = 0
        window_accepts = 0
        rejects_in_row = 0
        total = mc.burn_in + mc.samples_per_chain
        for step in range(total):
            m = int(rng.integers(0, M + 1))
            i = int(rng.integers(0, N))
            old = x[m, i]
            x[m, i] = old + scale * rng.standard_normal()
            ok = (i == 0 or x[m, i] > x[m, i - 1]) and (i == N - 1 or x[m, i] < x[m, i + 1])
            lp_new = logrho(x) if ok else -math.inf
            if lp_new >= lp or rng.random() < math.exp(lp_new - lp):
                lp = lp_new
                accepted += 1
                window_accepts += 1
                rejects_in_row = 0
            else:
                x[m, i] = old
                rejects_in_row += 1
                if rejects_in_row >= 1000:
                    raise NonConvergenceError(
                        "sampler rejected 1000 consecutive proposals; "
                        f"proposal_scale={scale:.3g} is misconfigured")
            if step < mc.burn_in and (step + 1) % 200 == 0:
                rate = window_accepts / 200.0
                if rate < 0.2:
                    scale *= 0.8
                elif rate > 0.5:
                    scale *= 1.25
                window_accepts = 0
            if step >= mc.burn_in:
                out[chain, step - mc.burn_in] = x
        acc_rates.append(accepted / total)
        scales.append(scale)
    return SampleSet(model, out, float(np.mean(acc_rates)), float(np.mean(scales)))


def split_rhat(series: np.ndarray) -> float:
    """Gelman split-Rhat over (chains, steps) series; 1.0 when degenerate."""
    C, S = series.shape
    half = S // 2
    groups = np.concatenate([series[:, :half], series[:, half:2 * half]], axis=0)
    w = np.mean(np.var(groups, axis=1, ddof=1))
    b = half * np.var(np.mean(groups, axis=1), ddof=1)
    if w <= 0.0:
        return 1.0
    var_plus = (half - 1) / half * w + b / half
    return float(math.sqrt(var_plus / w))


def estimate_correlation(samples: SampleSet, windows) -> EstimateWithError:
    """Box-count estimator of the correlation over product windows.

    ``windows``: sequence of (time_index, lo, hi); the estimator is the
    product over windows of the point counts, normalized by the product
    of the window volumes.
    """
    data = samples.samples
    C, S, _, _ = data.shape
    vol = 1.0
    y = np.ones((C, S))
    multi = np.zeros((C, S), dtype=bool)
    for (m, lo, hi) in windows:
        if not hi > lo:
            raise DomainError("window must have hi > lo")
        vol *= (hi - lo)
        cnt = np.sum((data[:, :, m, :] >= lo) & (data[:, :, m, :] < hi), axis=2)
        multi |= cnt > 1
        y = y * cnt
    y = y / vol
    value = float(np.mean(y))
    nb = 40
    bsize = S // nb
    if bsize < 1:
        raise DomainError("too few samples for batch means")
    trimmed = y[:, :nb * bsize].reshape(C, nb, bsize)
    bmeans = trimmed.mean(axis=2).reshape(-1)
    var_bm = float(np.var(bmeans, ddof=1))
    se = math.sqrt(var_bm / len(bmeans)) if var_bm > 0 else 0.0
    var_y = float(np.var(y, ddof=1))
    if var_bm > 0 and var_y > 0:
        # iid samples would give var_bm = var_y / bsize; the shortfall is
        # the autocorrelation time, which deflates the effective count
        neff = min(float(C * S), (C * S) * var_y / (bsize * var_bm))
    else:
        neff = float(C * S)
    rhat = split_rhat(y)
    if se == 0.0 and value == 0.0:
        se = 1.0 / (C * S * vol)
    return EstimateWithError(value=value, std_error=se,
                             n_effective=float(neff), rhat=rhat,
                             multi_occupancy=float(np.mean(multi)))

"""Convergence-time measurement and bounds.

Covers empirical mixing time (worst-start total variation), spectral bounds,
Monte-Carlo coupling times, exact absorbing times on the transient block, and
the composite convergence-time bound. All bound formulas use the natural
logarithm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import AllTrialsCapped, FailedToConverge, NotErgodic, StructuralError
from .graphs import SccDecomposition, condensation, scc_decompose
from .stochastic import StochasticMatrix, ergodicity_check, stationary

EXACT_START_LIMIT = 2000
SAMPLED_STARTS = 64
_CHUNK = 8_000_000  # cap on walkers * states scratch size


@dataclass
class CouplingEstimate:
    """Monte-Carlo estimate of the worst-pair expected coupling time."""

    mean: float
    stderr: float
    trials: int
    capped: int
    start_pair: tuple[int, int]


@dataclass
class AbsorbingTimes:
    """Expected steps to enter the union of closed components.

    `longest_path_total` is the proof-level variant: the largest sum of
    per-component exit times along a condensation path.
    """

    node_expectation: np.ndarray  # full length, zero on recurrent nodes
    max_expectation: float
    component_expectation: dict[int, float]
    longest_path_total: float


@dataclass
class MixingReport:
    epsilon: float
    t_mix: int | None = None
    d_curve: np.ndarray | None = None
    lambda2_abs: float | None = None
    lower_bound: float | None = None
    upper_bound: float | None = None
    coupling: CouplingEstimate | None = None
    absorbing_h: float | None = None
    theorem_bound: float | None = None


def _start_rows(n: int, starts, rng) -> np.ndarray:
    if starts == "exact" or (starts is None and n <= EXACT_START_LIMIT):
        return np.arange(n)
    count = SAMPLED_STARTS if starts is None or starts == "sampled" else int(starts)
    if count >= n:
        return np.arange(n)
    rng = rng or np.random.Generator(np.random.Philox(np.random.SeedSequence(0)))
    return rng.choice(n, size=count, replace=False)


def measure_mixing_time(matrix: StochasticMatrix, epsilon: float = 0.25,
                        starts=None, rng=None, max_steps: int = 1_000_000,
                        return_curve: bool = False):
    """Smallest k with max-over-starts TV distance to stationarity <= epsilon.

    Exact over all starts up to 2000 states, otherwise over 64 sampled starts
    (set `starts` to "exact", "sampled", or a count to override). Periodic or
    reducible chains raise NotErgodic.
    """
    ergodicity_check(matrix)
    if not 0 < epsilon < 1:
        raise ValueError(f"epsilon must be in (0, 1), got {epsilon}")
    pi = stationary(matrix, check=False)
    n = matrix.n
    rows = _start_rows(n, starts, rng)
    dist = np.zeros((rows.size, n))
    dist[np.arange(rows.size), rows] = 1.0
    curve = []
    d0 = 0.5 * float(np.abs(dist - pi).sum(axis=1).max())
    if d0 <= epsilon:
        return (0, np.asarray(curve)) if return_curve else 0
    pt = matrix.csr.T.tocsr()
    for k in range(1, int(max_steps) + 1):
        dist = (pt @ dist.T).T
        d = 0.5 * float(np.abs(dist - pi).sum(axis=1).max())
        curve.append(d)
        if d <= epsilon:
            return (k, np.asarray(curve)) if return_curve else k
    raise FailedToConverge(f"TV distance still {curve[-1]:.3g} after {max_steps} steps")


def second_eigenvalue(matrix: StochasticMatrix, tol: float = 1e-10,
                      max_iter: int = 200_000, check_every: int = 10) -> float:
    """|lambda_2| by power iteration on the operator deflated by (1, pi).

    Once the iterates settle into the dominant invariant subspace they obey a
    three-term recurrence B^2 x = a Bx + b x, so the dominant modulus is the
    larger root of s^2 - a s - b. Fitting (a, b) by least squares handles
    real, negative, and complex conjugate dominant pairs alike. Raises
    FailedToConverge when the extracted modulus refuses to stabilize.
    """
    ergodicity_check(matrix)
    n = matrix.n
    if n == 1:
        return 0.0
    pi = stationary(matrix, check=False)
    pt = matrix.csr.T.tocsr()

    def deflated(v):
        return pt @ v - pi * v.sum()

    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(0x5EED)))
    prev = rng.random(n) - 0.5
    prev -= pi * prev.sum()
    norm = np.linalg.norm(prev)
    if norm < 1e-300:
        return 0.0
    prev /= norm
    cur = deflated(prev)
    s_cur = np.linalg.norm(cur)
    if s_cur < 1e-300:
        return 0.0  # rank-1 chain: the deflated operator is null
    cur /= s_cur

    last_est = None
    agreements = 0
    for it in range(1, int(max_iter) + 1):
        nxt = deflated(cur)
        s_nxt = np.linalg.norm(nxt)
        if s_nxt < 1e-300:
            return 0.0
        if it % check_every == 0:
            # recurrence in unnormalized terms: B^2 prev = a B prev + b prev
            basis = np.stack([cur, prev], axis=1)
            (a_hat, b_hat), *_ = np.linalg.lstsq(basis, nxt / s_nxt, rcond=None)
            alpha = a_hat * s_nxt
            beta = b_hat * s_cur * s_nxt
            disc = alpha * alpha + 4.0 * beta
            if disc >= 0:
                root = math.sqrt(disc)
                est = max(abs(alpha + root), abs(alpha - root)) / 2.0
            else:
                est = math.sqrt(-beta)  # conjugate pair: |roots|^2 = -beta
            if last_est is not None and abs(est - last_est) <= tol * max(est, 1e-12):
                agreements += 1
                if agreements >= 2:
                    return est
            else:
                agreements = 0
            last_est = est
        prev, s_cur = cur, s_nxt
        cur = nxt / s_nxt
    raise FailedToConverge("second-eigenvalue estimate did not stabilize")


def eigen_bounds(matrix: StochasticMatrix, epsilon: float = 0.25,
                 lambda2: float | None = None) -> tuple[float, float]:
    """Spectral mixing-time bounds.

    lower = lambda2 / (2 (1 - lambda2)) * ln(1 / (2 epsilon))
    upper = (ln n + ln(1 / epsilon)) / (1 - lambda2)
    """
    lam = second_eigenvalue(matrix) if lambda2 is None else float(lambda2)
    if lam >= 1.0:
        raise FailedToConverge(f"|lambda_2| estimate {lam} >= 1")
    lower = lam / (2.0 * (1.0 - lam)) * math.log(1.0 / (2.0 * epsilon))
    upper = (math.log(matrix.n) + math.log(1.0 / epsilon)) / (1.0 - lam)
    return lower, upper


def _row_cdf(matrix: StochasticMatrix) -> np.ndarray:
    cdf = np.cumsum(matrix.dense(), axis=1)
    cdf[:, -1] = 1.0
    return cdf


def _advance(cdf: np.ndarray, states: np.ndarray, rng) -> np.ndarray:
    """One synchronous step for a batch of walkers (inverse-CDF sampling)."""
    n = cdf.shape[1]
    out = np.empty_like(states)
    chunk = max(1, _CHUNK // n)
    for lo in range(0, states.size, chunk):
        sl = slice(lo, min(lo + chunk, states.size))
        u = rng.random(sl.stop - sl.start)
        out[sl] = (cdf[states[sl]] < u[:, None]).sum(axis=1)
    return out


def _run_coupling(cdf, pairs_x, pairs_y, step_cap, rng):
    """Coupling times for each (x, y) walker pair; -1 marks a capped trial."""
    x = pairs_x.copy()
    y = pairs_y.copy()
    k = np.zeros(x.size, dtype=np.int64)
    active = x != y
    steps = 0
    while active.any() and steps < step_cap:
        steps += 1
        idx = np.flatnonzero(active)
        x[idx] = _advance(cdf, x[idx], rng)
        y[idx] = _advance(cdf, y[idx], rng)
        met = idx[x[idx] == y[idx]]
        k[met] = steps
        active[met] = False
    k[active] = -1
    return k


def estimate_coupling_time(matrix: StochasticMatrix, trials: int = 1000,
                           step_cap: int = 10_000_000, rng=None,
                           pairs=None) -> CouplingEstimate:
    """Monte-Carlo mean of the meeting time of two independent walks.

    Start pairs: the worst of 32 random pairs, plus every pair when the chain
    has at most 40 states (override with `pairs`). Walks move independently
    until they meet. Trials that never couple within step_cap are excluded
    from the mean and reported in `capped`; AllTrialsCapped if none couple.
    """
    ergodicity_check(matrix)
    n = matrix.n
    rng = rng or np.random.Generator(np.random.Philox(np.random.SeedSequence(1)))
    if n == 1:
        return CouplingEstimate(0.0, 0.0, trials, 0, (0, 0))
    cdf = _row_cdf(matrix)

    if pairs is None:
        if n <= 40:
            pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
        else:
            seen = set()
            while len(seen) < 32:
                i, j = int(rng.integers(n)), int(rng.integers(n))
                if i != j:
                    seen.add((min(i, j), max(i, j)))
            pairs = sorted(seen)
    pairs = list(pairs)

    worst = pairs[0]
    if len(pairs) > 1:
        pilot = max(8, trials // 50)
        px = np.repeat([p[0] for p in pairs], pilot)
        py = np.repeat([p[1] for p in pairs], pilot)
        ks = _run_coupling(cdf, px, py, step_cap, rng).astype(np.float64)
        ks[ks < 0] = float(step_cap)
        means = ks.reshape(len(pairs), pilot).mean(axis=1)
        worst = pairs[int(np.argmax(means))]

    px = np.full(trials, worst[0], dtype=np.int64)
    py = np.full(trials, worst[1], dtype=np.int64)
    ks = _run_coupling(cdf, px, py, step_cap, rng)
    coupled = ks[ks >= 0]
    capped = int((ks < 0).sum())
    if coupled.size == 0:
        raise AllTrialsCapped(f"no trial coupled within {step_cap} steps")
    mean = float(coupled.mean())
    stderr = float(coupled.std(ddof=1) / math.sqrt(coupled.size)) if coupled.size > 1 else 0.0
    return CouplingEstimate(mean, stderr, trials, capped, worst)


def expected_absorbing_time(matrix: StochasticMatrix,
                            decomp: SccDecomposition | None = None) -> AbsorbingTimes:
    """Exact expected times to enter the union of closed components.

    Solves (I - Z) h = 1 on the transient block. Also reports per-component
    exit times and their largest sum along a condensation path.
    """
    if decomp is None:
        decomp = scc_decompose(matrix.to_graph())
    if not any(decomp.closed):
        raise StructuralError("graph has no closed component")
    n = matrix.n
    node_h = np.zeros(n)
    transient = decomp.transient_nodes()
    if transient.size:
        z = matrix.minor(transient, transient)
        h = _solve_fundamental(z, np.ones(transient.size))
        node_h[transient] = h

    comp_h: dict[int, float] = {}
    for cid in range(decomp.count):
        if decomp.closed[cid]:
            continue
        comp = decomp.components[cid]
        zc = matrix.minor(comp, comp)
        comp_h[cid] = float(_solve_fundamental(zc, np.ones(comp.size)).max())

    # largest node-weighted path through the condensation (closed nodes weigh 0)
    cond = condensation(decomp)
    best = np.zeros(decomp.count)
    for cid in range(decomp.count):  # successors always carry a smaller id
        succ = cond.successors(cid)
        follow = max((best[int(s)] for s in succ), default=0.0)
        best[cid] = comp_h.get(cid, 0.0) + follow
    longest = float(best.max()) if decomp.count else 0.0

    h_max = float(node_h.max()) if n else 0.0
    return AbsorbingTimes(node_h, h_max, comp_h, longest)


def _solve_fundamental(z: sp.spmatrix, rhs: np.ndarray) -> np.ndarray:
    """Solve (I - Z) x = rhs; a singular system marks a misclassified block."""
    system = (sp.eye(z.shape[0]) - z).tocsc()
    try:
        x = spla.spsolve(system, rhs)
    except RuntimeError as exc:
        raise StructuralError(f"(I - Z) solve failed: {exc}") from exc
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    residual = np.abs(system @ x - rhs).max() if rhs.size else 0.0
    if not np.all(np.isfinite(x)) or residual > 1e-6:
        raise StructuralError("(I - Z) is singular; a closed block leaked into Z")
    return x


def theorem_bound(l_g: float, l_t: float, h_g: float, h_t: float,
                  epsilon: float) -> float:
    """Composite convergence-time bound 32 (max L + max H) ln(1/epsilon)."""
    for name, v in (("l_g", l_g), ("l_t", l_t), ("h_g", h_g), ("h_t", h_t)):
        if v < 0:
            raise ValueError(f"{name} must be non-negative")
    if not 0 < epsilon <= 1:
        raise ValueError(f"epsilon must be in (0, 1], got {epsilon}")
    return 32.0 * (max(l_g, l_t) + max(h_g, h_t)) * math.log(1.0 / epsilon)


def coupling_bound(l: float, h: float, epsilon: float) -> float:
    """Single-graph convergence-time bound 4 (L + H) ln(1/epsilon)."""
    if l < 0 or h < 0:
        raise ValueError("L and H must be non-negative")
    if not 0 < epsilon <= 1:
        raise ValueError(f"epsilon must be in (0, 1], got {epsilon}")
    return 4.0 * (l + h) * math.log(1.0 / epsilon)


def distance_to_limit_curve(operator: sp.spmatrix, limit: np.ndarray,
                            steps: int) -> np.ndarray:
    """Worst-initial-condition distance to the limit for k = 1..steps.

    The distance at step k is half the largest column L1 deviation of the
    k-th operator power from its limit (initial conditions range over the
    unit simplex, whose extreme points are the operator columns).
    """
    op = sp.csr_matrix(operator)
    n = op.shape[0]
    power = np.eye(n)
    out = np.empty(steps)
    for k in range(steps):
        power = op @ power
        out[k] = 0.5 * np.abs(power - limit).sum(axis=0).max()
    return out


def product_distance_to_limit(left: StochasticMatrix, right: StochasticMatrix,
                              k: int, starts=None, rng=None) -> float:
    """Distance to the limit at step k for the pure product operator L x R.

    Exploits (L x R)^k = L^k x R^k: one column of the product power is the
    Kronecker product of factor columns, so the worst simplex-vertex start is
    scanned without materializing the product. Factors must be ergodic.
    """
    pi_l = stationary(left)
    pi_r = stationary(right)
    lk = np.linalg.matrix_power(left.dense(), int(k))
    rk = np.linalg.matrix_power(right.dense(), int(k))
    n, m = left.n, right.n
    total = n * m
    if starts == "exact" or (starts is None and total <= EXACT_START_LIMIT):
        chosen = np.arange(total)
    else:
        count = SAMPLED_STARTS if starts is None else int(starts)
        rng = rng or np.random.Generator(np.random.Philox(np.random.SeedSequence(2)))
        chosen = rng.choice(total, size=min(count, total), replace=False)
    worst = 0.0
    for s in chosen:
        i, u = divmod(int(s), m)
        dev = np.abs(np.outer(lk[:, i], rk[:, u]) - pi_l[i] * pi_r[u]).sum()
        worst = max(worst, 0.5 * float(dev))
    return worst


def analyze_mixing(matrix: StochasticMatrix, epsilon: float = 0.25,
                   trials: int = 300, rng=None,
                   include_curve: bool = False) -> MixingReport:
    """Bundle t_mix, spectral bounds, and a coupling estimate for one chain."""
    report = MixingReport(epsilon=epsilon)
    t = measure_mixing_time(matrix, epsilon, rng=rng, return_curve=include_curve)
    if include_curve:
        report.t_mix, report.d_curve = t
    else:
        report.t_mix = t
    report.lambda2_abs = second_eigenvalue(matrix)
    report.lower_bound, report.upper_bound = eigen_bounds(matrix, epsilon,
                                                          lambda2=report.lambda2_abs)
    report.coupling = estimate_coupling_time(matrix, trials=trials, rng=rng)
    report.absorbing_h = 0.0  # ergodic chain: nothing is transient
    report.theorem_bound = coupling_bound(report.coupling.mean, 0.0, epsilon)
    return report

"""Inner problems solved against one (sampled or true) future.

Each IRS policy and its matching performance bound reduce to one of these:
a ratio argmax, a knapsack over per-arm prefix allocations, a lattice DP
with penalised payoffs, or a single-arm index found by bisection.
"""

from dataclasses import dataclass
from functools import lru_cache
from math import gcd
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .bayes import BeliefState, RewardModel, SampledOutcome, posterior_mean
from .errors import CapabilityError

DEFAULT_NODES = 64
DEFAULT_TOL = 1e-6
DEFAULT_MAX_ITER = 60
DEFAULT_LATTICE_CAP = 3


def ratio_argmax(values, costs) -> int:
    """Smallest index attaining max values[a] / costs[a].

    Ratios are compared by cross-multiplication so that exact ties such as
    0.4/10 and 0.8/20 are recognised as ties.
    """
    best = 0
    for a in range(1, len(values)):
        if values[a] * costs[best] > values[best] * costs[a]:
            best = a
    return best


# ---------------------------------------------------------------------------
# Knapsack over prefix allocations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Allocation:
    counts: tuple
    objective: float


def _pad(rows, fill=0.0, dtype=np.float64):
    width = max(len(r) for r in rows)
    out = np.full((len(rows), width), fill, dtype=dtype)
    for i, r in enumerate(rows):
        out[i, :len(r)] = r
    return out


def allocation_dp(payoff_prefixes: Sequence, costs: Sequence, budget: int) -> Allocation:
    """Maximise sum_a S_a(n_a) subject to sum_a c_a n_a <= budget.

    payoff_prefixes[a] holds S_a(0..N_a).  Among optimal allocations the
    lexicographically smallest count vector is returned.
    """
    k = len(costs)
    if budget < 0:
        return Allocation((0,) * k, 0.0)
    costs = [int(c) for c in costs]
    # every cost is a multiple of g, so floor(budget / g) is an exact capacity
    g = 0
    for c in costs:
        g = gcd(g, c)
    capacity = int(budget) // g
    unit = [c // g for c in costs]
    lengths = np.array([min(len(p) - 1, capacity // u) for p, u in zip(payoff_prefixes, unit)],
                       dtype=np.int64)
    values = _pad([np.asarray(p, dtype=np.float64)[:n + 1]
                   for p, n in zip(payoff_prefixes, lengths)])
    weights = _pad([np.arange(n + 1, dtype=np.int64) * u for n, u in zip(lengths, unit)],
                   fill=capacity + 1, dtype=np.int64)
    counts, obj = kernels.prefix_knapsack(values, weights, lengths, capacity)
    return Allocation(tuple(int(c) for c in counts), float(obj))


# ---------------------------------------------------------------------------
# Quadrature for E[max_a mu_a / c_a]
# ---------------------------------------------------------------------------

@lru_cache(maxsize=64)
def _legendre(nodes):
    return np.polynomial.legendre.leggauss(nodes)


def quadrature_rule(kinks, nodes=DEFAULT_NODES):
    """Composite Gauss-Legendre rule on [0, max(kinks)] split at every kink.

    Each arm's ratio CDF is smooth between kinks (and a polynomial for
    integer hyperparameters), so the rule is exact for small counts.
    """
    pts = np.unique(np.asarray([k for k in kinks if k > 0], dtype=np.float64))
    if pts.size == 0:
        return np.zeros(0), np.zeros(0)
    t, w = _legendre(int(nodes))
    edges = np.concatenate(([0.0], pts))
    xs, ws = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        half = 0.5 * (hi - lo)
        xs.append(lo + half * (t + 1.0))
        ws.append(half * w)
    return np.concatenate(xs), np.concatenate(ws)


def expected_max_ratio(beliefs: Sequence[BeliefState], models: Sequence[RewardModel],
                       costs: Sequence, nodes: int = DEFAULT_NODES) -> float:
    """E[max_a m_a theta_a / c_a] for independent Beta posteriors."""
    k = len(beliefs)
    if k == 1:
        return posterior_mean(beliefs[0], models[0]) / float(costs[0])
    trials = np.array([md.trials for md in models], dtype=np.float64)
    denoms = np.asarray(costs, dtype=np.float64).reshape(k, 1)
    xs, ws = quadrature_rule(trials / denoms[:, 0], nodes)
    alphas = np.array([[b.alpha] for b in beliefs], dtype=np.float64)
    betas = np.array([[b.beta] for b in beliefs], dtype=np.float64)
    dims = np.ones(k, dtype=np.int64)
    return float(kernels.lattice_gamma(alphas, betas, trials, denoms, dims, xs, ws)[0])


# ---------------------------------------------------------------------------
# Gamma^lambda and the single-arm index
# ---------------------------------------------------------------------------

def gamma_lambda(belief: BeliefState, model: RewardModel, lam: float) -> float:
    """E[max(mu(theta), lam)] under the belief."""
    m = model.trials
    a, b = belief.alpha, belief.beta
    if lam <= 0:
        return m * a / (a + b)
    if lam >= m:
        return float(lam)
    x = lam / m
    i0, i1 = kernels.betainc(np.array([a, a + 1.0]), b, x)
    return float(m * (x * i0 + a / (a + b) * (1.0 - i1)))


@dataclass(frozen=True)
class IndexResult:
    lambda_star: float
    evaluations: int
    degenerate: bool = False


def _root(belief):
    return belief if isinstance(belief, BeliefState) else belief[0]


def _path_arrays(outcome: SampledOutcome, model: RewardModel, horizon: int):
    if outcome.horizon < max(horizon - 1, 0):
        raise ValueError("outcome is shorter than the index horizon")
    succ = np.zeros(max(horizon, 1) + 1)
    r = np.asarray(outcome.rewards[:max(horizon, 1)], dtype=np.float64)
    np.cumsum(r, out=succ[1:1 + len(r)])
    mu = np.asarray(outcome.estimate_path, dtype=np.float64)
    return succ, mu


def index_gain(outcome, belief, model, cost, budget, lam) -> float:
    """Single-arm inner optimum over n >= 1 pulls, minus the all-outside value.

    The arm's index is the largest lambda at which this is still nonnegative.
    With a horizon of zero it falls back to the myopic mu_hat_0 - lambda.
    """
    horizon = max(int(budget) // int(cost), 0)
    succ, mu = _path_arrays(outcome, model, horizon)
    b0 = _root(belief)
    work = np.empty(max(horizon, 1))
    return float(kernels.index_gain(float(lam), b0.alpha, b0.beta, succ, mu,
                                    float(model.trials), horizon, work))


def index_phi(outcome, belief, model, cost, budget, lam) -> float:
    """max over n in 0..T of the single-arm inner objective, minus T*lambda.

    n = 0 contributes exactly zero, so this is max(0, index_gain) for T >= 1.
    """
    horizon = max(int(budget) // int(cost), 0)
    if horizon == 0:
        return 0.0
    return max(0.0, index_gain(outcome, belief, model, cost, budget, lam))


def index_bisect(outcome, belief, model, cost, budget, tol=DEFAULT_TOL,
                 max_iter=DEFAULT_MAX_ITER) -> IndexResult:
    """Largest lambda in [0, m] at which pulling the arm is still worthwhile."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    horizon = max(int(budget) // int(cost), 0)
    succ, mu = _path_arrays(outcome, model, horizon)
    b0 = _root(belief)
    lam, evals, degenerate = kernels.index_bisect(b0.alpha, b0.beta, succ, mu,
                                                  float(model.trials), horizon,
                                                  float(tol), int(max_iter))
    return IndexResult(float(lam), int(evals), bool(degenerate))


# ---------------------------------------------------------------------------
# Lattice DP
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LatticeResult:
    first_action: Optional[int]
    sequence: tuple
    allocation: Allocation


def _strides(dims):
    strides = [1] * len(dims)
    for a in range(len(dims) - 2, -1, -1):
        strides[a] = strides[a + 1] * int(dims[a + 1])
    return strides


def solve_lattice(rz, dims, feasible) -> LatticeResult:
    """Run the lattice Bellman recursion and backtrack from argmax M."""
    dims = np.asarray(dims, dtype=np.int64)
    m_val, back, best = kernels.lattice_dp(np.ascontiguousarray(rz, dtype=np.float64),
                                           dims, np.asarray(feasible, dtype=np.bool_))
    strides = _strides(dims)
    seq = []
    flat = int(best)
    while flat != 0:
        a = int(back[flat])
        seq.append(a)
        flat -= strides[a]
    seq.reverse()
    counts = tuple(int(c) for c in np.unravel_index(int(best), tuple(int(d) for d in dims)))
    value = float(m_val[int(best)]) if best else 0.0
    return LatticeResult(seq[0] if seq else None, tuple(seq), Allocation(counts, value))


def lattice_tables(rewards, priors, models, horizons):
    """Padded per-arm arrays (alpha, beta, mu_hat) along sampled paths."""
    k = len(priors)
    width = max(horizons) + 1
    alpha = np.ones((k, width))
    beta = np.ones((k, width))
    mu = np.zeros((k, width))
    for a in range(k):
        n = horizons[a]
        m = models[a].trials
        succ = np.zeros(n + 1)
        np.cumsum(np.asarray(rewards[a][:n], dtype=np.float64), out=succ[1:])
        steps = np.arange(n + 1)
        alpha[a, :n + 1] = priors[a].alpha + succ
        beta[a, :n + 1] = priors[a].beta + steps * m - succ
        mu[a, :n + 1] = m * alpha[a, :n + 1] / (alpha[a, :n + 1] + beta[a, :n + 1])
    return alpha, beta, mu


def emax_lattice_dp(outcomes: Sequence[SampledOutcome], beliefs: Sequence[BeliefState],
                    models: Sequence[RewardModel], costs: Sequence, budget: int,
                    nodes: int = DEFAULT_NODES, cap: int = DEFAULT_LATTICE_CAP) -> LatticeResult:
    """Lattice inner problem with the W^BTS-based penalty.

    outcomes[a] must carry at least floor(budget / c_a) rewards.
    """
    k = len(costs)
    if k > cap:
        raise CapabilityError(f"lattice DP supports at most {cap} arms, got {k}")
    if budget < min(costs):
        return LatticeResult(None, (), Allocation((0,) * k, 0.0))
    horizons = [int(budget) // int(c) for c in costs]
    priors = [_root(b) for b in beliefs]
    alpha, beta, mu = lattice_tables([o.rewards for o in outcomes], priors, models, horizons)
    return _emax_from_tables(alpha, beta, mu, models, costs, horizons, budget, nodes)


def _emax_from_tables(alpha, beta, mu, models, costs, horizons, budget, nodes):
    width = alpha.shape[1]
    trials = np.array([md.trials for md in models], dtype=np.float64)
    c = np.asarray(costs, dtype=np.float64)
    denoms = np.repeat(c[:, None], width, axis=1)
    xs, ws = quadrature_rule(trials / c, nodes)
    cumcost = c[:, None] * np.arange(width)[None, :]
    return solve_lattice_tables(alpha, beta, mu, trials, denoms, cumcost, denoms, horizons,
                                budget, xs, ws)


def solve_lattice_tables(alpha, beta, mu, trials, denoms, cumcost, expcost, horizons, budget,
                         xs, ws) -> LatticeResult:
    """Lattice inner problem from per-arm path tables.

    denoms[a, n] is the cost denominator inside Gamma~ at n pulls of arm a,
    cumcost[a, n] the cost of the first n pulls and expcost[a, n] the
    expected cost of pull n + 1 used in the penalty.
    """
    dims = np.array([h + 1 for h in horizons], dtype=np.int64)
    gamma = kernels.lattice_gamma(alpha, beta, trials, denoms, dims, xs, ws)
    rz, feasible = kernels.lattice_rz(mu, cumcost, expcost, gamma, dims, float(budget))
    return solve_lattice(rz, dims, feasible)

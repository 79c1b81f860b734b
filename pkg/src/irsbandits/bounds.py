"""Monte-Carlo performance bounds W^BTS, W^IRS.FH, W^IRS.V-Zero, W^IRS.V-EMax, W^ideal.

Each bound averages the optimum of an inner problem solved against a true
future drawn from the prior.  The inner solvers are the ones the policies
use, fed with prior draws instead of posterior draws.

Every estimator accepts ``thetas`` (shape (samples, K)) to share parameter
draws across bound kinds; by default fresh draws are taken from ``rng``.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .bayes import BanditInstance
from .errors import CapabilityError
from .solvers import (DEFAULT_LATTICE_CAP, DEFAULT_NODES, _emax_from_tables, lattice_tables,
                      solve_lattice)

BOUND_KINDS = ("bts", "irs_fh", "irs_vzero", "irs_vemax", "ideal")
_CHUNK = 8192


@dataclass(frozen=True)
class BoundEstimate:
    kind: str
    mean: float
    std_error: float
    samples: int

    @classmethod
    def from_values(cls, kind, values):
        values = np.asarray(values, dtype=np.float64)
        n = len(values)
        if n < 2:
            raise ValueError("a bound estimate needs at least two samples")
        mean = math.fsum(values) / n
        var = math.fsum((values - mean) ** 2) / (n - 1)
        return cls(kind, mean, math.sqrt(var / n), n)


def _check_samples(samples):
    if int(samples) != samples or samples < 2:
        raise ValueError("samples must be an integer >= 2")


def _priors(instance):
    alpha = np.array([arm.prior.alpha for arm in instance.arms], dtype=np.float64)
    beta = np.array([arm.prior.beta for arm in instance.arms], dtype=np.float64)
    return alpha, beta


def draw_thetas(instance, samples, rng):
    """Reward parameters, one row per sample."""
    alpha, beta = _priors(instance)
    return rng.beta(alpha, beta, size=(int(samples), instance.num_arms))


def _cost_means(instance, samples, rng):
    """Sampled mean costs; deterministic costs for a BanditInstance."""
    if isinstance(instance, BanditInstance):
        return np.tile(instance.costs.astype(np.float64), (samples, 1))
    ca = np.array([arm.cost.prior.alpha for arm in instance.arms])
    cb = np.array([arm.cost.prior.beta for arm in instance.arms])
    theta_c = rng.beta(ca, cb, size=(samples, instance.num_arms))
    return instance.low + (instance.high - instance.low) * theta_c


# ---------------------------------------------------------------------------
# Estimators
# ---------------------------------------------------------------------------

def bts_values(instance, thetas, cost_means=None):
    """B * max_a mu_a(theta_a) / c_a per row of thetas."""
    if cost_means is None:
        cost_means = instance.costs.astype(np.float64)
    return instance.budget * np.max(instance.trials * thetas / cost_means, axis=1)


def w_bts(instance, samples, rng, thetas=None) -> BoundEstimate:
    """Fractional clairvoyant value B * E[max_a mu_a / c_a].

    For a random-cost instance the denominator is the mean cost mu^c(theta^c).
    """
    _check_samples(samples)
    if thetas is None:
        thetas = draw_thetas(instance, samples, rng)
    cmeans = _cost_means(instance, len(thetas), rng)
    return BoundEstimate.from_values("bts", bts_values(instance, thetas, cmeans))


def w_irs_fh(instance: BanditInstance, samples, rng, thetas=None) -> BoundEstimate:
    """B * E[max_a mu_hat_{a, N_a - 1} / c_a] with N_a = floor(B / c_a)."""
    _check_samples(samples)
    if thetas is None:
        thetas = draw_thetas(instance, samples, rng)
    alpha, beta = _priors(instance)
    m = instance.trials
    costs = instance.costs
    horizons = np.maximum(instance.budget // costs - 1, 0)
    n_trials = np.broadcast_to(horizons * m, thetas.shape).astype(np.int64)
    totals = rng.binomial(n_trials, thetas)
    mu = m * (alpha + totals) / (alpha + beta + horizons * m)
    values = instance.budget * np.max(mu / costs, axis=1)
    return BoundEstimate.from_values("irs_fh", values)


def _prefix_tables(instance, thetas, rng):
    """Prefix payoffs S_a(0..N_a) for a block of sampled futures, shape (S, K, L)."""
    alpha, beta = _priors(instance)
    m = instance.trials
    horizons = instance.budget // instance.costs
    s_count, k = thetas.shape
    width = int(horizons.max()) + 1
    values = np.zeros((s_count, k, width))
    for a in range(k):
        h = int(horizons[a])
        if h == 0:
            continue
        r = rng.binomial(int(m[a]), thetas[:, a:a + 1], size=(s_count, h))
        succ = np.zeros((s_count, h))
        np.cumsum(r[:, :h - 1], axis=1, out=succ[:, 1:])
        n = np.arange(h)
        mu = m[a] * (alpha[a] + succ) / (alpha[a] + beta[a] + n * m[a])
        np.cumsum(mu, axis=1, out=values[:, a, 1:h + 1])
    return values, horizons


def w_irs_vzero(instance: BanditInstance, samples, rng, thetas=None) -> BoundEstimate:
    """E[max over integer allocations of sum_a S_a(n_a)] on sampled true futures."""
    _check_samples(samples)
    if thetas is None:
        thetas = draw_thetas(instance, samples, rng)
    if instance.budget < instance.costs.min():
        return BoundEstimate.from_values("irs_vzero", np.zeros(len(thetas)))
    costs = instance.costs
    g = int(np.gcd.reduce(costs))
    capacity = instance.budget // g
    horizons = instance.budget // costs
    width = int(horizons.max()) + 1
    steps = np.arange(width, dtype=np.int64)
    weights = (costs // g)[:, None] * steps[None, :]
    weights = np.where(steps[None, :] <= horizons[:, None], weights, capacity + 1)
    out = []
    for start in range(0, len(thetas), _CHUNK):
        block = thetas[start:start + _CHUNK]
        values, _ = _prefix_tables(instance, block, rng)
        out.append(kernels.prefix_knapsack_batch(values, weights, horizons, capacity))
    return BoundEstimate.from_values("irs_vzero", np.concatenate(out))


class _PathMemo:
    """Bounded memo of inner optima keyed by the raw bytes of the reward paths.

    Small instances revisit the same few path combinations constantly; large
    ones almost never do, so the memo stops growing at ``limit`` entries.
    """

    def __init__(self, solve, limit=1 << 16):
        self.solve = solve
        self.limit = limit
        self.table = {}

    def __call__(self, paths):
        key = b"|".join(p.tobytes() for p in paths)
        hit = self.table.get(key)
        if hit is None:
            hit = self.solve(paths)
            if len(self.table) < self.limit:
                self.table[key] = hit
        return hit


def w_irs_vemax(instance: BanditInstance, samples, rng, thetas=None, nodes=DEFAULT_NODES,
                cap=DEFAULT_LATTICE_CAP) -> BoundEstimate:
    """E[max_n M(n, omega)] of the lattice problem with the W^BTS penalty."""
    _check_samples(samples)
    if instance.num_arms > cap:
        raise CapabilityError(f"W^IRS.V-EMax supports at most {cap} arms")
    if thetas is None:
        thetas = draw_thetas(instance, samples, rng)
    if instance.budget < instance.costs.min():
        return BoundEstimate.from_values("irs_vemax", np.zeros(len(thetas)))
    priors = [arm.prior for arm in instance.arms]
    models = [arm.reward for arm in instance.arms]
    horizons = [int(h) for h in instance.budget // instance.costs]
    m = instance.trials

    def solve(paths):
        alpha, beta, mu = lattice_tables(paths, priors, models, horizons)
        res = _emax_from_tables(alpha, beta, mu, models, instance.costs, horizons,
                                instance.budget, nodes)
        return res.allocation.objective

    memo = _PathMemo(solve)
    values = np.empty(len(thetas))
    for s, theta in enumerate(thetas):
        values[s] = memo([rng.binomial(int(m[a]), theta[a], size=horizons[a])
                          for a in range(instance.num_arms)])
    return BoundEstimate.from_values("irs_vemax", values)


def ideal_payoffs(instance: BanditInstance, paths, table):
    """Lattice payoffs Q*(b, y, a) - V*(b - c_a, y') along fixed reward paths."""
    k = instance.num_arms
    costs = [int(c) for c in instance.costs]
    m = [int(t) for t in instance.trials]
    dims = np.array([len(p) + 1 for p in paths], dtype=np.int64)
    total = int(np.prod(dims))
    succ = [np.concatenate(([0], np.cumsum(p))).astype(np.int64) for p in paths]
    rz = np.zeros((total, k))
    feasible = np.zeros(total, dtype=np.bool_)
    for flat, idx in enumerate(np.ndindex(*dims)):
        used = sum(c * n for c, n in zip(costs, idx))
        if used > instance.budget:
            continue
        feasible[flat] = True
        left = instance.budget - used
        tallies = tuple((int(succ[a][idx[a]]), m[a] * idx[a] - int(succ[a][idx[a]]))
                        for a in range(k))
        for a in range(k):
            if idx[a] + 1 >= dims[a] or costs[a] > left:
                continue
            r = int(succ[a][idx[a] + 1] - succ[a][idx[a]])
            nxt = list(tallies)
            nxt[a] = (tallies[a][0] + r, tallies[a][1] + m[a] - r)
            rz[flat, a] = float(table.q(left, tallies, a)) - float(
                table.value(left - costs[a], tuple(nxt)))
    return rz, dims, feasible


def w_ideal(instance: BanditInstance, samples, rng, vstar_oracle, thetas=None) -> BoundEstimate:
    """Inner optimum under the ideal penalty built from exact V* values.

    vstar_oracle is a ValueTable (see oracle.bellman_vstar).  Every sample
    equals V*(B, y) up to rounding.
    """
    _check_samples(samples)
    if thetas is None:
        thetas = draw_thetas(instance, samples, rng)
    if instance.budget < instance.costs.min():
        return BoundEstimate.from_values("ideal", np.zeros(len(thetas)))
    horizons = [int(h) for h in instance.budget // instance.costs]
    m = instance.trials

    def solve(paths):
        rz, dims, feasible = ideal_payoffs(instance, paths, vstar_oracle)
        return solve_lattice(rz, dims, feasible).allocation.objective

    memo = _PathMemo(solve)
    values = np.empty(len(thetas))
    for s, theta in enumerate(thetas):
        values[s] = memo([rng.binomial(int(m[a]), theta[a], size=horizons[a])
                          for a in range(instance.num_arms)])
    return BoundEstimate.from_values("ideal", values)


ESTIMATORS = {
    "bts": w_bts,
    "irs_fh": w_irs_fh,
    "irs_vzero": w_irs_vzero,
    "irs_vemax": w_irs_vemax,
}


def estimate_bound(kind, instance, samples, rng, thetas=None, oracle_table=None):
    if kind == "ideal":
        if oracle_table is None:
            from .oracle import bellman_vstar
            oracle_table = bellman_vstar(instance)
        return w_ideal(instance, samples, rng, oracle_table, thetas)
    try:
        fn = ESTIMATORS[kind]
    except KeyError:
        raise KeyError(f"unknown bound kind {kind!r}; choose from {BOUND_KINDS}") from None
    return fn(instance, samples, rng, thetas=thetas)


def estimate_bounds(kinds, instance, samples, rng, common_random_numbers=False):
    """Several bounds; with common random numbers they share theta draws."""
    thetas = draw_thetas(instance, samples, rng) if common_random_numbers else None
    return [estimate_bound(k, instance, samples, rng, thetas) for k in kinds]


# ---------------------------------------------------------------------------
# Suboptimality gap bound
# ---------------------------------------------------------------------------

def suboptimality_gap_bound(kind, num_arms, t_max, lipschitz=0.5, nu=2.0):
    """Worst-case W^kind - V(pi^kind) for an L-smooth conjugate family.

    lipschitz is the smoothness constant L of the log-partition function and
    nu the prior strength (L = 1/2, nu = alpha + beta for Beta-Bernoulli).
    Valid for budgets of at least twice the largest cost.
    """
    k, t = float(num_arms), float(t_max)
    if t < 1:
        raise ValueError("t_max must be at least 1")
    root_l = math.sqrt(lipschitz)
    spread = math.sqrt(2.0 * math.log(t))
    inner = k / math.sqrt(nu) + 2.0 * math.sqrt(k * t)
    if kind == "bts":
        return 2.0 * root_l * (1.0 / math.sqrt(nu) + spread * inner)
    inner -= math.sqrt(t / k) / 3.0
    if kind == "irs_fh":
        return 2.0 * root_l * (1.0 / math.sqrt(nu) + spread * inner)
    if kind == "irs_vzero":
        return root_l * (1.0 / math.sqrt(nu) + spread * inner)
    raise KeyError(f"no gap bound for kind {kind!r}")

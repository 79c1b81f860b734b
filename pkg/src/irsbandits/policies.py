"""Deterministic-cost policies: BTS and the IRS family.

A policy is a function ``step(state, rng) -> Optional[int]`` returning the
arm to play, or ``None`` to stop.  Every step draws fresh futures from the
current posterior; nothing is reused across periods.
"""

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Dict, Optional

import numpy as np

from . import kernels
from .bayes import BanditInstance, BeliefState
from .errors import CapabilityError
from .solvers import (DEFAULT_LATTICE_CAP, DEFAULT_MAX_ITER, DEFAULT_NODES, DEFAULT_TOL,
                      _emax_from_tables, lattice_tables, ratio_argmax)

Decision = Optional[int]


@dataclass(frozen=True)
class PolicyConfig:
    tol: float = DEFAULT_TOL
    max_iter: int = DEFAULT_MAX_ITER
    lattice_cap: int = DEFAULT_LATTICE_CAP
    nodes: int = DEFAULT_NODES


@dataclass(frozen=True)
class PolicyState:
    """Beliefs, pull counts and remaining budget of one episode."""

    instance: BanditInstance
    alpha: np.ndarray
    beta: np.ndarray
    pulls: np.ndarray
    remaining: int
    config: PolicyConfig = field(default_factory=PolicyConfig)

    @classmethod
    def initial(cls, instance, config=None, budget=None):
        alpha = np.array([arm.prior.alpha for arm in instance.arms], dtype=np.float64)
        beta = np.array([arm.prior.beta for arm in instance.arms], dtype=np.float64)
        pulls = np.zeros(instance.num_arms, dtype=np.int64)
        budget = instance.budget if budget is None else int(budget)
        return cls(instance, alpha, beta, pulls, budget, config or PolicyConfig())

    @property
    def beliefs(self):
        return tuple(BeliefState(float(a), float(b)) for a, b in zip(self.alpha, self.beta))

    @property
    def posterior_means(self):
        return self.instance.trials * self.alpha / (self.alpha + self.beta)

    def advance(self, arm, reward):
        m = self.instance.arms[arm].reward.trials
        if reward < 0 or reward > m:
            raise ValueError(f"reward {reward} not in 0..{m}")
        alpha = self.alpha.copy()
        beta = self.beta.copy()
        pulls = self.pulls.copy()
        alpha[arm] += reward
        beta[arm] += m - reward
        pulls[arm] += 1
        return PolicyState(self.instance, alpha, beta, pulls,
                           self.remaining - int(self.instance.costs[arm]), self.config)


def _affordable(state, arm):
    return arm if state.instance.costs[arm] <= state.remaining else None


def _sample_paths(state, horizons, thetas, rng):
    """Reward futures of the given lengths, one array per arm."""
    trials = state.instance.trials
    return [rng.binomial(int(trials[a]), thetas[a], size=int(horizons[a]))
            for a in range(len(horizons))]


# ---------------------------------------------------------------------------
# Steps
# ---------------------------------------------------------------------------

def bts_step(state: PolicyState, rng) -> Decision:
    """Play the arm with the best sampled mean-to-cost ratio."""
    if state.remaining <= 0:
        return None
    thetas = rng.beta(state.alpha, state.beta)
    cand = ratio_argmax(state.instance.trials * thetas, state.instance.costs)
    return _affordable(state, cand)


def fh_terminal_estimates(state, rng, horizons):
    """Sampled mu_hat at the given per-arm horizons via one Binomial sum each."""
    trials = state.instance.trials
    thetas = rng.beta(state.alpha, state.beta)
    n_trials = (horizons * trials).astype(np.int64)
    totals = rng.binomial(n_trials, thetas)
    return trials * (state.alpha + totals) / (state.alpha + state.beta + n_trials)


def irs_fh_step(state: PolicyState, rng) -> Decision:
    """Ratio argmax of the estimate a clairvoyant would hold at the horizon."""
    if state.remaining <= 0:
        return None
    costs = state.instance.costs
    horizons = np.maximum(state.remaining // costs - 1, 0)
    mu = fh_terminal_estimates(state, rng, horizons)
    return _affordable(state, ratio_argmax(mu, costs))


def prefix_values(alpha0, beta0, m, rewards, horizon, out):
    """S(0..horizon) of a reward path into out[:horizon + 1]."""
    out[0] = 0.0
    if horizon == 0:
        return
    succ = np.zeros(horizon)
    if horizon > 1:
        np.cumsum(rewards[:horizon - 1], out=succ[1:])
    n = np.arange(horizon)
    mu = m * (alpha0 + succ) / (alpha0 + beta0 + n * m)
    np.cumsum(mu, out=out[1:horizon + 1])


@lru_cache(maxsize=256)
def _unit_costs(costs):
    g = 0
    for c in costs:
        g = np.gcd(g, c)
    return tuple(c // g for c in costs), int(g)


def knapsack_counts(values, horizons, costs, budget):
    """prefix_knapsack on the gcd-reduced budget axis."""
    unit, g = _unit_costs(tuple(int(c) for c in costs))
    capacity = int(budget) // g
    width = values.shape[1]
    steps = np.arange(width, dtype=np.int64)
    weights = np.asarray(unit, dtype=np.int64)[:, None] * steps[None, :]
    weights = np.where(steps[None, :] <= horizons[:, None], weights, capacity + 1)
    return kernels.prefix_knapsack(values, weights, horizons.astype(np.int64), capacity)


def irs_vzero_step(state: PolicyState, rng) -> Decision:
    """Play the arm receiving the most pulls in the sampled optimal allocation."""
    if state.remaining <= 0:
        return None
    costs = state.instance.costs
    horizons = state.remaining // costs
    if not horizons.any():
        return None
    thetas = rng.beta(state.alpha, state.beta)
    paths = _sample_paths(state, horizons, thetas, rng)
    values = np.zeros((len(costs), int(horizons.max()) + 1))
    trials = state.instance.trials
    for a in range(len(costs)):
        prefix_values(state.alpha[a], state.beta[a], trials[a], paths[a], int(horizons[a]),
                      values[a])
    counts, _ = knapsack_counts(values, horizons, costs, state.remaining)
    if not counts.any():
        return None
    return int(np.argmax(counts))


def irs_vemax_step(state: PolicyState, rng) -> Decision:
    """First action of the lattice inner problem with the W^BTS penalty."""
    k = state.instance.num_arms
    if k > state.config.lattice_cap:
        raise CapabilityError(f"IRS.V-EMax supports at most {state.config.lattice_cap} arms")
    if state.remaining <= 0:
        return None
    costs = state.instance.costs
    horizons = [int(h) for h in state.remaining // costs]
    if not any(horizons):
        return None
    thetas = rng.beta(state.alpha, state.beta)
    paths = _sample_paths(state, horizons, thetas, rng)
    priors = state.beliefs
    models = [arm.reward for arm in state.instance.arms]
    alpha, beta, mu = lattice_tables(paths, priors, models, horizons)
    res = _emax_from_tables(alpha, beta, mu, models, costs, horizons, state.remaining,
                            state.config.nodes)
    return res.first_action


def index_values(state, rng, horizons, denominators=None):
    """lambda* per arm on freshly sampled futures of the given horizons."""
    trials = state.instance.trials
    thetas = rng.beta(state.alpha, state.beta)
    paths = _sample_paths(state, horizons, thetas, rng)
    cfg = state.config
    out = np.empty(len(horizons))
    for a in range(len(horizons)):
        t = int(horizons[a])
        m = trials[a]
        succ = np.zeros(max(t, 1))
        if t > 1:
            np.cumsum(paths[a][:t - 1], out=succ[1:])
        n = np.arange(len(succ))
        mu = m * (state.alpha[a] + succ) / (state.alpha[a] + state.beta[a] + n * m)
        lam, _, _ = kernels.index_bisect(state.alpha[a], state.beta[a], succ, mu, m, t,
                                         cfg.tol, cfg.max_iter)
        out[a] = lam
    return out


def irs_index_step(state: PolicyState, rng) -> Decision:
    """Ratio argmax of the sampled single-arm indices lambda*_a / c_a."""
    if state.remaining <= 0:
        return None
    costs = state.instance.costs
    horizons = state.remaining // costs
    lam = index_values(state, rng, horizons)
    return _affordable(state, ratio_argmax(lam, costs))


POLICIES: Dict[str, Callable] = {
    "bts": bts_step,
    "irs_fh": irs_fh_step,
    "irs_vzero": irs_vzero_step,
    "irs_vemax": irs_vemax_step,
    "irs_index": irs_index_step,
}

DISPLAY_NAMES = {
    "bts": "BTS",
    "irs_fh": "IRS.FH",
    "irs_vzero": "IRS.V-Zero",
    "irs_vemax": "IRS.V-EMax",
    "irs_index": "IRS.INDEX",
}


def get_policy(name):
    try:
        return POLICIES[name]
    except KeyError:
        raise KeyError(f"unknown policy {name!r}; choose from {sorted(POLICIES)}") from None

"""Random per-pull costs with their own Beta beliefs.

Each pull of arm a costs c_high with probability theta^c and c_low
otherwise.  Two families of policies are provided:

* S-EXT: substitute a sampled mean cost mu(theta~^c) for the deterministic
  cost and run the deterministic inner problem.
* P-EXT: sample cost realizations too and charge the penalty
  lambda~ (C~ - mu_hat^c) for knowing them.

Steps take ``(state, rng, cost_rng=None)``.  Reward draws go through ``rng``
with exactly the calls the deterministic policies make, and cost draws go
through ``cost_rng``; with a degenerate cost model (low == high) each policy
therefore reproduces its deterministic counterpart on matched streams.
"""

from dataclasses import dataclass, field
from functools import cached_property
from math import gcd
from typing import Callable, Dict, Optional

import numpy as np

from . import kernels
from .bayes import BERNOULLI, BeliefState, RewardModel
from .errors import CapabilityError
from .policies import (PolicyConfig, _sample_paths, fh_terminal_estimates, index_values,
                       knapsack_counts, prefix_values)
from .solvers import lattice_tables, quadrature_rule, ratio_argmax, solve_lattice_tables

Decision = Optional[int]


# ---------------------------------------------------------------------------
# Model
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CostModel:
    """Two-point cost: c_high with probability theta^c, else c_low.

    low == high is accepted and gives a deterministic cost.
    """

    low: int
    high: int
    prior: BeliefState = BeliefState(1.0, 1.0)

    def __post_init__(self):
        for v in (self.low, self.high):
            if int(v) != v or v < 1:
                raise ValueError("cost support must be positive integers")
        if self.low > self.high:
            raise ValueError("cost support needs low <= high")

    @property
    def spread(self):
        return self.high - self.low

    def mean(self, theta):
        return self.low + self.spread * theta

    def update(self, belief: BeliefState, cost) -> BeliefState:
        if cost == self.high and self.spread:
            return BeliefState(belief.alpha + 1.0, belief.beta)
        if cost == self.low:
            return BeliefState(belief.alpha, belief.beta + 1.0)
        raise ValueError(f"cost {cost} outside support ({self.low}, {self.high})")


@dataclass(frozen=True)
class RandomCostArm:
    cost: CostModel
    reward: RewardModel = BERNOULLI
    prior: BeliefState = BeliefState(1.0, 1.0)


@dataclass(frozen=True)
class RandomCostInstance:
    arms: tuple
    budget: int

    def __post_init__(self):
        object.__setattr__(self, "arms", tuple(self.arms))
        if not self.arms:
            raise ValueError("an instance needs at least one arm")
        if int(self.budget) != self.budget or self.budget < 0:
            raise ValueError("budget must be a nonnegative integer")

    @property
    def num_arms(self):
        return len(self.arms)

    @cached_property
    def trials(self):
        arr = np.array([arm.reward.trials for arm in self.arms], dtype=np.float64)
        arr.flags.writeable = False
        return arr

    @cached_property
    def low(self):
        arr = np.array([arm.cost.low for arm in self.arms], dtype=np.int64)
        arr.flags.writeable = False
        return arr

    @cached_property
    def high(self):
        arr = np.array([arm.cost.high for arm in self.arms], dtype=np.int64)
        arr.flags.writeable = False
        return arr

    @cached_property
    def cost_unit(self):
        g = 0
        for arm in self.arms:
            g = gcd(gcd(g, arm.cost.low), arm.cost.high)
        return g

    @property
    def t_max(self):
        return max(self.budget // arm.cost.low + 1 for arm in self.arms)

    def with_budget(self, budget):
        return RandomCostInstance(self.arms, budget)


def two_arm_instance(budget, support=(10, 20), alpha=1.0, beta=1.0):
    """Two Bernoulli arms with uniform reward and cost priors."""
    model = CostModel(support[0], support[1], BeliefState(alpha, beta))
    arm = RandomCostArm(model, BERNOULLI, BeliefState(alpha, beta))
    return RandomCostInstance((arm, arm), budget)


@dataclass(frozen=True)
class DualVariable:
    lam: float

    @classmethod
    def from_means(cls, reward_means, cost_means):
        r = np.asarray(reward_means, dtype=np.float64)
        c = np.asarray(cost_means, dtype=np.float64)
        return cls(float(np.max(r / c)))


@dataclass(frozen=True)
class RandomCostState:
    """Reward and cost beliefs, pull counts and remaining budget."""

    instance: RandomCostInstance
    alpha: np.ndarray
    beta: np.ndarray
    cost_alpha: np.ndarray
    cost_beta: np.ndarray
    pulls: np.ndarray
    remaining: int
    config: PolicyConfig = field(default_factory=PolicyConfig)

    @classmethod
    def initial(cls, instance, config=None, budget=None):
        arms = instance.arms
        f = lambda vals: np.array(vals, dtype=np.float64)
        budget = instance.budget if budget is None else int(budget)
        return cls(instance,
                   f([a.prior.alpha for a in arms]), f([a.prior.beta for a in arms]),
                   f([a.cost.prior.alpha for a in arms]), f([a.cost.prior.beta for a in arms]),
                   np.zeros(len(arms), dtype=np.int64), budget, config or PolicyConfig())

    @property
    def posterior_means(self):
        return self.instance.trials * self.alpha / (self.alpha + self.beta)

    @property
    def cost_means(self):
        inst = self.instance
        return inst.low + (inst.high - inst.low) * self.cost_alpha / (self.cost_alpha
                                                                      + self.cost_beta)

    def advance(self, arm, reward, cost):
        spec = self.instance.arms[arm]
        m = spec.reward.trials
        if reward < 0 or reward > m:
            raise ValueError(f"reward {reward} not in 0..{m}")
        if cost not in (spec.cost.low, spec.cost.high):
            raise ValueError(f"cost {cost} outside support")
        alpha, beta = self.alpha.copy(), self.beta.copy()
        ca, cb = self.cost_alpha.copy(), self.cost_beta.copy()
        pulls = self.pulls.copy()
        alpha[arm] += reward
        beta[arm] += m - reward
        if spec.cost.spread:
            if cost == spec.cost.high:
                ca[arm] += 1.0
            else:
                cb[arm] += 1.0
        pulls[arm] += 1
        return RandomCostState(self.instance, alpha, beta, ca, cb, pulls,
                               self.remaining - int(cost), self.config)


def _playable(state, arm):
    # the realized cost is unknown before the pull; only the floor is checked
    return arm if state.instance.low[arm] <= state.remaining else None


def _sampled_cost_means(state, cost_rng):
    inst = state.instance
    theta = cost_rng.beta(state.cost_alpha, state.cost_beta)
    return inst.low + (inst.high - inst.low) * theta


def _real_horizons(remaining, cost_means):
    return np.floor(remaining / cost_means).astype(np.int64)


# ---------------------------------------------------------------------------
# S-EXT
# ---------------------------------------------------------------------------

def sext_bts_step(state, rng, cost_rng=None) -> Decision:
    """BTS with the sampled mean cost in the ratio."""
    cost_rng = rng if cost_rng is None else cost_rng
    if state.remaining <= 0:
        return None
    thetas = rng.beta(state.alpha, state.beta)
    cmeans = _sampled_cost_means(state, cost_rng)
    return _playable(state, ratio_argmax(state.instance.trials * thetas, cmeans))


def sext_irs_fh_step(state, rng, cost_rng=None) -> Decision:
    cost_rng = rng if cost_rng is None else cost_rng
    if state.remaining <= 0:
        return None
    cmeans = _sampled_cost_means(state, cost_rng)
    horizons = np.maximum(_real_horizons(state.remaining, cmeans) - 1, 0)
    mu = fh_terminal_estimates(state, rng, horizons)
    return _playable(state, ratio_argmax(mu, cmeans))


def sext_irs_vzero_step(state, rng, cost_rng=None) -> Decision:
    """V-Zero allocation with costs replaced by sampled mean costs.

    Integral sampled means reuse the integer knapsack; otherwise the
    allocation is found by enumeration over the (small) count box.
    """
    cost_rng = rng if cost_rng is None else cost_rng
    if state.remaining <= 0:
        return None
    cmeans = _sampled_cost_means(state, cost_rng)
    horizons = _real_horizons(state.remaining, cmeans)
    if not horizons.any():
        return None
    thetas = rng.beta(state.alpha, state.beta)
    paths = _sample_paths(state, horizons, thetas, rng)
    k = state.instance.num_arms
    values = np.zeros((k, int(horizons.max()) + 1))
    trials = state.instance.trials
    for a in range(k):
        prefix_values(state.alpha[a], state.beta[a], trials[a], paths[a], int(horizons[a]),
                      values[a])
    if np.all(cmeans == np.round(cmeans)):
        counts, _ = knapsack_counts(values, horizons, cmeans.astype(np.int64), state.remaining)
    else:
        counts, _ = kernels.real_allocation(values, cmeans, horizons, float(state.remaining))
    if not counts.any():
        return None
    return _playable(state, int(np.argmax(counts)))


def sext_irs_index_step(state, rng, cost_rng=None) -> Decision:
    cost_rng = rng if cost_rng is None else cost_rng
    if state.remaining <= 0:
        return None
    cmeans = _sampled_cost_means(state, cost_rng)
    horizons = _real_horizons(state.remaining, cmeans)
    lam = index_values(state, rng, horizons)
    return _playable(state, ratio_argmax(lam, cmeans))


# ---------------------------------------------------------------------------
# P-EXT: sampled cost futures
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CostFuture:
    """Sampled cost path of one arm and the estimates it induces."""

    cumcost: np.ndarray   # cumulative cost after 0..n pulls
    mean_path: np.ndarray  # mu_hat^c after 0..n pulls
    horizon: int          # pulls affordable within the budget


def sample_cost_future(model: CostModel, alpha, beta, theta, budget, cost_rng) -> CostFuture:
    """Cost realizations until their running sum would exceed the budget."""
    n_max = int(budget) // model.low
    highs = cost_rng.random(n_max) < theta
    costs = np.where(highs, float(model.high), float(model.low))
    cumcost = np.zeros(n_max + 1)
    np.cumsum(costs, out=cumcost[1:])
    nhigh = np.zeros(n_max + 1)
    np.cumsum(highs, out=nhigh[1:])
    n = np.arange(n_max + 1)
    mean_path = model.low + model.spread * (alpha + nhigh) / (alpha + beta + n)
    horizon = int(np.searchsorted(cumcost, budget, side="right")) - 1
    return CostFuture(cumcost, mean_path, horizon)


def _cost_futures(state, cost_rng):
    inst = state.instance
    theta_c = cost_rng.beta(state.cost_alpha, state.cost_beta)
    futures = [sample_cost_future(arm.cost, state.cost_alpha[a], state.cost_beta[a],
                                  theta_c[a], state.remaining, cost_rng)
               for a, arm in enumerate(inst.arms)]
    return theta_c, futures


def pext_prefix_values(alpha0, beta0, m, rewards, future, lam, out):
    """Penalised prefix values sum_{i<=n} mu_hat^r_{i-1} + lam (C~_i - mu_hat^c_{i-1})."""
    h = future.horizon
    out[0] = 0.0
    if h == 0:
        return
    succ = np.zeros(h)
    if h > 1:
        np.cumsum(rewards[:h - 1], out=succ[1:])
    n = np.arange(h)
    mu = m * (alpha0 + succ) / (alpha0 + beta0 + n * m)
    step = np.diff(future.cumcost[:h + 1])
    np.cumsum(mu + lam * (step - future.mean_path[:h]), out=out[1:h + 1])


def pext_vzero_step(state, rng, cost_rng=None) -> Decision:
    """Knapsack on sampled cost paths with the lambda~ penalty."""
    cost_rng = rng if cost_rng is None else cost_rng
    if state.remaining <= 0:
        return None
    inst = state.instance
    thetas = rng.beta(state.alpha, state.beta)
    theta_c, futures = _cost_futures(state, cost_rng)
    horizons = np.array([f.horizon for f in futures], dtype=np.int64)
    if not horizons.any():
        return None
    dual = DualVariable.from_means(inst.trials * thetas, inst.low + (inst.high - inst.low)
                                   * theta_c)
    paths = _sample_paths(state, horizons, thetas, rng)
    k = inst.num_arms
    width = int(horizons.max()) + 1
    values = np.zeros((k, width))
    unit = inst.cost_unit
    capacity = state.remaining // unit
    weights = np.full((k, width), capacity + 1, dtype=np.int64)
    for a in range(k):
        h = int(horizons[a])
        pext_prefix_values(state.alpha[a], state.beta[a], inst.trials[a], paths[a], futures[a],
                           dual.lam, values[a])
        weights[a, :h + 1] = futures[a].cumcost[:h + 1].astype(np.int64) // unit
    counts, _ = kernels.prefix_knapsack(values, weights, horizons, capacity)
    if not counts.any():
        return None
    return _playable(state, int(np.argmax(counts)))


def pext_vemax_step(state, rng, cost_rng=None) -> Decision:
    """Lattice DP over sampled cost paths with cost-mean denominators in Gamma~."""
    cost_rng = rng if cost_rng is None else cost_rng
    inst = state.instance
    if inst.num_arms > state.config.lattice_cap:
        raise CapabilityError(f"IRS.V-EMax.P-EXT supports at most {state.config.lattice_cap}"
                              " arms")
    if state.remaining <= 0:
        return None
    thetas = rng.beta(state.alpha, state.beta)
    _, futures = _cost_futures(state, cost_rng)
    horizons = [f.horizon for f in futures]
    if not any(horizons):
        return None
    paths = _sample_paths(state, np.asarray(horizons), thetas, rng)
    priors = [BeliefState(float(a), float(b)) for a, b in zip(state.alpha, state.beta)]
    models = [arm.reward for arm in inst.arms]
    alpha, beta, mu = lattice_tables(paths, priors, models, horizons)
    width = alpha.shape[1]
    k = inst.num_arms
    cumcost = np.zeros((k, width))
    denoms = np.ones((k, width))
    for a, f in enumerate(futures):
        h = horizons[a]
        cumcost[a, :h + 1] = f.cumcost[:h + 1]
        denoms[a, :h + 1] = f.mean_path[:h + 1]
    kinks = np.concatenate((inst.trials / inst.low, inst.trials / inst.high))
    xs, ws = quadrature_rule(kinks, state.config.nodes)
    res = solve_lattice_tables(alpha, beta, mu, inst.trials, denoms, cumcost, denoms, horizons,
                               state.remaining, xs, ws)
    return None if res.first_action is None else _playable(state, res.first_action)


def pext_index_values(state, rng, cost_rng):
    """lambda* per arm of the penalised single-arm problem on sampled futures."""
    inst = state.instance
    thetas = rng.beta(state.alpha, state.beta)
    _, futures = _cost_futures(state, cost_rng)
    horizons = np.array([f.horizon for f in futures], dtype=np.int64)
    paths = _sample_paths(state, horizons, thetas, rng)
    cfg = state.config
    out = np.empty(inst.num_arms)
    for a, f in enumerate(futures):
        t = int(horizons[a])
        m = inst.trials[a]
        succ = np.zeros(t + 1)
        np.cumsum(paths[a][:t], out=succ[1:])
        n = np.arange(t + 1)
        mu_r = m * (state.alpha[a] + succ) / (state.alpha[a] + state.beta[a] + n * m)
        upper = m / inst.low[a]
        lam, _, _ = kernels.pext_bisect(state.alpha[a], state.beta[a], succ, mu_r,
                                        f.mean_path[:t + 1], f.cumcost[:t + 1], m, t,
                                        float(state.remaining), upper, cfg.tol, cfg.max_iter)
        out[a] = lam
    return out


def pext_index_step(state, rng, cost_rng=None) -> Decision:
    """Play argmax_a lambda*_a; the outside option already has unit cost."""
    cost_rng = rng if cost_rng is None else cost_rng
    if state.remaining <= 0:
        return None
    lam = pext_index_values(state, rng, cost_rng)
    return _playable(state, int(np.argmax(lam)))


RANDOM_COST_POLICIES: Dict[str, Callable] = {
    "bts": sext_bts_step,
    "irs_fh_sext": sext_irs_fh_step,
    "irs_vzero_sext": sext_irs_vzero_step,
    "irs_index_sext": sext_irs_index_step,
    "irs_vzero_pext": pext_vzero_step,
    "irs_vemax_pext": pext_vemax_step,
    "irs_index_pext": pext_index_step,
}

# deterministic counterpart of each random-cost policy under degenerate costs
DETERMINISTIC_COUNTERPART = {
    "bts": "bts",
    "irs_fh_sext": "irs_fh",
    "irs_vzero_sext": "irs_vzero",
    "irs_index_sext": "irs_index",
    "irs_vzero_pext": "irs_vzero",
    "irs_vemax_pext": "irs_vemax",
    "irs_index_pext": "irs_index",
}

DISPLAY_NAMES = {
    "bts": "BTS",
    "irs_fh_sext": "IRS.FH.S-EXT",
    "irs_vzero_sext": "IRS.V-Zero.S-EXT",
    "irs_index_sext": "IRS.INDEX.S-EXT",
    "irs_vzero_pext": "IRS.V-Zero.P-EXT",
    "irs_vemax_pext": "IRS.V-EMax.P-EXT",
    "irs_index_pext": "IRS.INDEX.P-EXT",
}


def get_random_cost_policy(name):
    try:
        return RANDOM_COST_POLICIES[name]
    except KeyError:
        raise KeyError(f"unknown random-cost policy {name!r}; choose from "
                       f"{sorted(RANDOM_COST_POLICIES)}") from None

"""Episode simulation, regret reports and reproducible parallel experiments.

Seeding
-------
Every random stream is a PCG64 generator on a SeedSequence keyed by the
base seed and a spawn key:

* environment of episode e: (ENV_TAG, e).  The policy id is *not* part of
  the key, so all policies face the same true parameters and reward
  sequences (common random numbers across policies).
* policy randomness: (POLICY_TAG, crc32(policy id), e, 0) and, for cost
  draws of random-cost policies, (..., 1).
* the W^BTS baseline: (BOUND_TAG, budget).

Per-episode results are reduced with exactly rounded sums, so reports do
not depend on how episodes are split across worker processes.
"""

import math
import os
import time
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from multiprocessing import get_context
from typing import Optional, Sequence

import numpy as np

from .bounds import w_bts
from .policies import POLICIES, PolicyConfig, PolicyState
from .random_cost import RANDOM_COST_POLICIES, RandomCostInstance, RandomCostState
from .stats import mean_and_se

ENV_TAG = 0x454E56
POLICY_TAG = 0x504F4C
BOUND_TAG = 0x424E44
DEFAULT_BOUND_SAMPLES = 200_000


# ---------------------------------------------------------------------------
# Streams
# ---------------------------------------------------------------------------

def _generator(base_seed, *key):
    return np.random.Generator(np.random.PCG64(
        np.random.SeedSequence(int(base_seed), spawn_key=tuple(int(k) for k in key))))


def policy_id(policy):
    return zlib.crc32(policy.encode("utf-8"))


def env_stream(base_seed, episode):
    return _generator(base_seed, ENV_TAG, episode)


def policy_streams(base_seed, policy, episode):
    """(reward/decision stream, cost stream) of one policy in one episode."""
    pid = policy_id(policy)
    return (_generator(base_seed, POLICY_TAG, pid, episode, 0),
            _generator(base_seed, POLICY_TAG, pid, episode, 1))


def bound_stream(base_seed, budget):
    return _generator(base_seed, BOUND_TAG, budget)


# ---------------------------------------------------------------------------
# Episodes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Environment:
    """True parameters and pre-drawn outcome sequences of one episode.

    rewards[a][j] is the reward of the (j+1)-th pull of arm a; costs[a][j]
    likewise for random costs (None for deterministic costs).
    """

    theta: np.ndarray
    rewards: tuple
    cost_theta: Optional[np.ndarray] = None
    costs: Optional[tuple] = None


def is_random_cost(instance):
    return isinstance(instance, RandomCostInstance)


def draw_environment(instance, env_rng) -> Environment:
    k = instance.num_arms
    theta = np.array([env_rng.beta(arm.prior.alpha, arm.prior.beta) for arm in instance.arms])
    if not is_random_cost(instance):
        rewards = tuple(env_rng.binomial(arm.reward.trials, theta[a],
                                         size=instance.budget // arm.cost)
                        for a, arm in enumerate(instance.arms))
        return Environment(theta, rewards)
    cost_theta = np.array([env_rng.beta(arm.cost.prior.alpha, arm.cost.prior.beta)
                           for arm in instance.arms])
    rewards, costs = [], []
    for a in range(k):
        arm = instance.arms[a]
        n = instance.budget // arm.cost.low
        rewards.append(env_rng.binomial(arm.reward.trials, theta[a], size=n))
        highs = env_rng.random(n) < cost_theta[a]
        costs.append(np.where(highs, arm.cost.high, arm.cost.low).astype(np.int64))
    return Environment(theta, tuple(rewards), cost_theta, tuple(costs))


@dataclass(frozen=True)
class EpisodeLog:
    actions: tuple
    rewards: tuple
    costs: tuple
    total_reward: float
    pulls_used: int
    mean_value: float = 0.0
    predictions: tuple = ()

    @property
    def penalty(self):
        """Cumulative sum of r_t - E[r_t | history]: the V-Zero penalty of the path."""
        return math.fsum(r - p for r, p in zip(self.rewards, self.predictions))


def resolve_policy(instance, policy):
    table = RANDOM_COST_POLICIES if is_random_cost(instance) else POLICIES
    try:
        return table[policy]
    except KeyError:
        setting = "random-cost" if is_random_cost(instance) else "deterministic-cost"
        raise KeyError(f"policy {policy!r} is not available for {setting} instances; "
                       f"choose from {sorted(table)}") from None


def run_episode(instance, policy, env_rng, policy_rng, config: PolicyConfig = None,
                cost_rng=None, environment: Environment = None) -> EpisodeLog:
    """Draw the environment from env_rng and play ``policy`` until it stops.

    Policy randomness comes only from policy_rng (and cost_rng for
    random-cost policies), never from env_rng.
    """
    step = resolve_policy(instance, policy)
    env = environment if environment is not None else draw_environment(instance, env_rng)
    random_cost = is_random_cost(instance)
    if random_cost:
        state = RandomCostState.initial(instance, config)
        cost_rng = cost_rng if cost_rng is not None else policy_rng
    else:
        state = PolicyState.initial(instance, config)
    trials = instance.trials
    next_pull = [0] * instance.num_arms
    actions, rewards, costs, preds = [], [], [], []
    mean_terms = []
    while state.remaining > 0:
        arm = step(state, policy_rng, cost_rng) if random_cost else step(state, policy_rng)
        if arm is None:
            break
        j = next_pull[arm]
        if random_cost:
            cost = int(env.costs[arm][j])
            if cost > state.remaining:
                break  # pull aborted; nothing is collected
        else:
            cost = int(instance.costs[arm])
        reward = int(env.rewards[arm][j])
        preds.append(float(state.posterior_means[arm]))
        mean_terms.append(float(trials[arm] * env.theta[arm]))
        actions.append(arm)
        rewards.append(reward)
        costs.append(cost)
        next_pull[arm] += 1
        state = state.advance(arm, reward, cost) if random_cost else state.advance(arm, reward)
    return EpisodeLog(tuple(actions), tuple(rewards), tuple(costs), float(sum(rewards)),
                      len(actions), math.fsum(mean_terms), tuple(preds))


# ---------------------------------------------------------------------------
# Batches of episodes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EpisodeBatch:
    """Per-episode summaries, in episode order."""

    mean_values: np.ndarray
    realized: np.ndarray
    penalties: np.ndarray
    pulls: np.ndarray

    @classmethod
    def concat(cls, parts):
        return cls(*(np.concatenate([getattr(p, f) for p in parts])
                     for f in ("mean_values", "realized", "penalties", "pulls")))


def _run_range(instance, policy, base_seed, start, stop, config):
    n = stop - start
    mv, rv, pen, pulls = np.empty(n), np.empty(n), np.empty(n), np.empty(n, dtype=np.int64)
    for i, e in enumerate(range(start, stop)):
        prng, crng = policy_streams(base_seed, policy, e)
        log = run_episode(instance, policy, env_stream(base_seed, e), prng, config, crng)
        mv[i], rv[i], pen[i], pulls[i] = (log.mean_value, log.total_reward, log.penalty,
                                          log.pulls_used)
    return EpisodeBatch(mv, rv, pen, pulls)


def warm_up():
    """Load every compiled kernel once so forked workers inherit them."""
    from .bayes import bernoulli_instance
    from .random_cost import two_arm_instance
    rng = np.random.default_rng(0)
    inst = bernoulli_instance((1, 2), 4)
    for step in POLICIES.values():
        step(PolicyState.initial(inst), rng)
    rc = two_arm_instance(40)
    for step in RANDOM_COST_POLICIES.values():
        step(RandomCostState.initial(rc), rng, rng)


def _chunks(episodes, parallelism):
    pieces = max(1, min(episodes, 4 * parallelism))
    edges = np.linspace(0, episodes, pieces + 1).astype(int)
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def simulate(instance, policy, episodes, base_seed, parallelism=1,
             config: PolicyConfig = None) -> EpisodeBatch:
    """Run episodes 0..episodes-1; the result does not depend on parallelism."""
    resolve_policy(instance, policy)
    episodes = int(episodes)
    if parallelism <= 1 or episodes < 2:
        return _run_range(instance, policy, base_seed, 0, episodes, config)
    warm_up()
    chunks = _chunks(episodes, parallelism)
    with ProcessPoolExecutor(max_workers=int(parallelism), mp_context=get_context("fork")) as ex:
        futures = [ex.submit(_run_range, instance, policy, base_seed, a, b, config)
                   for a, b in chunks]
        parts = [f.result() for f in futures]
    return EpisodeBatch.concat(parts)


def simulate_values(instance, policy, episodes, base_seed, parallelism=1, config=None):
    return simulate(instance, policy, episodes, base_seed, parallelism, config).mean_values


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RegretReport:
    policy: str
    budget: int
    episodes: int
    mean_value: float
    value_se: float
    w_bts: float
    w_bts_se: float
    regret: float
    regret_se: float
    wall_ms: int = 0
    values: Optional[np.ndarray] = field(default=None, repr=False, compare=False)

    CSV_FIELDS = ("policy", "budget", "episodes", "mean_value", "value_se", "w_bts", "regret",
                  "regret_se", "wall_ms")

    def row(self):
        return {k: getattr(self, k) for k in self.CSV_FIELDS}


def baseline(instance, base_seed, samples=DEFAULT_BOUND_SAMPLES):
    """W^BTS estimate shared by all policies at this budget."""
    if instance.budget == 0:
        return 0.0, 0.0
    est = w_bts(instance, samples, bound_stream(base_seed, instance.budget))
    return est.mean, est.std_error


def run_experiment(instance, policies: Sequence[str], episodes, base_seed, parallelism=1,
                   config: PolicyConfig = None, bound_samples=DEFAULT_BOUND_SAMPLES,
                   timing=False, keep_values=False, reference=None):
    """One RegretReport per policy, reproducible from (base_seed, episodes).

    ``reference`` is an optional precomputed ``(w_bts, se)`` pair; it must
    come from :func:`baseline` with the same seed to keep reports identical.
    """
    if episodes < 2:
        raise ValueError("episodes must be at least 2")
    for p in policies:
        resolve_policy(instance, p)
    w, w_se = reference if reference is not None else baseline(instance, base_seed, bound_samples)
    reports = []
    for p in policies:
        t0 = time.perf_counter()
        batch = simulate(instance, p, episodes, base_seed, parallelism, config)
        wall = int(round((time.perf_counter() - t0) * 1000)) if timing else 0
        mean, se = mean_and_se(batch.mean_values)
        reports.append(RegretReport(p, int(instance.budget), int(episodes), mean, se, w, w_se,
                                    w - mean, math.hypot(se, w_se), wall,
                                    batch.mean_values if keep_values else None))
    return reports


def budget_sweep(instance, budgets, policies, episodes, base_seed, parallelism=1, config=None,
                 bound_samples=DEFAULT_BOUND_SAMPLES, timing=False):
    """Reports for every (budget, policy), budget-major."""
    budgets = [int(b) for b in budgets]
    if not budgets:
        raise ValueError("budgets must be nonempty")
    if any(b1 >= b2 for b1, b2 in zip(budgets[:-1], budgets[1:])):
        raise ValueError("budgets must be increasing")
    out = []
    for b in budgets:
        out.extend(run_experiment(instance.with_budget(b), policies, episodes, base_seed,
                                  parallelism, config, bound_samples, timing))
    return out


def default_parallelism():
    return len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else os.cpu_count()

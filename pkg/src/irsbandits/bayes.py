"""Reward models, conjugate Beta beliefs and finite-sample mean estimates.

An arm's reward is Binomial(m, theta) with a Beta(alpha, beta) belief over
theta; Bernoulli is the m = 1 case.  After n observations with reward sum s
the Bayesian estimate of the mean reward is

    mu_hat_n = m (alpha + s) / (alpha + beta + n m).
"""

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np


class InvalidObservation(ValueError):
    """A reward outside {0, ..., trials}."""


@dataclass(frozen=True)
class RewardModel:
    kind: str = "bernoulli"
    trials: int = 1

    def __post_init__(self):
        if self.kind not in ("bernoulli", "binomial"):
            raise ValueError(f"unknown reward kind {self.kind!r}")
        if int(self.trials) != self.trials or self.trials < 1:
            raise ValueError("trials must be a positive integer")
        if self.kind == "bernoulli" and self.trials != 1:
            raise ValueError("a Bernoulli model has exactly one trial")

    @classmethod
    def binomial(cls, trials):
        return cls("bernoulli" if trials == 1 else "binomial", int(trials))

    def mean(self, theta):
        return self.trials * theta


BERNOULLI = RewardModel()


@dataclass(frozen=True)
class BeliefState:
    alpha: float
    beta: float

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0):
            raise ValueError("Beta hyperparameters must be positive")


@dataclass(frozen=True)
class ArmSpec:
    cost: int
    reward: RewardModel = BERNOULLI
    prior: BeliefState = BeliefState(1.0, 1.0)

    def __post_init__(self):
        if int(self.cost) != self.cost or self.cost < 1:
            raise ValueError("arm cost must be a positive integer")


def _frozen(arr):
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class BanditInstance:
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
    def costs(self):
        return _frozen(np.array([arm.cost for arm in self.arms], dtype=np.int64))

    @cached_property
    def trials(self):
        return _frozen(np.array([arm.reward.trials for arm in self.arms], dtype=np.float64))

    @property
    def t_max(self):
        return max(self.budget // arm.cost + 1 for arm in self.arms)

    def with_budget(self, budget):
        return BanditInstance(self.arms, budget)


def bernoulli_instance(costs, budget, alpha=1.0, beta=1.0):
    """Instance with Bernoulli arms sharing one Beta prior."""
    prior = BeliefState(alpha, beta)
    return BanditInstance(tuple(ArmSpec(int(c), BERNOULLI, prior) for c in costs), budget)


@dataclass(frozen=True)
class SampledOutcome:
    theta: float
    rewards: np.ndarray
    estimate_path: np.ndarray
    prefix_payoff: np.ndarray

    @property
    def horizon(self):
        return len(self.rewards)


# ---------------------------------------------------------------------------
# Updates and estimates
# ---------------------------------------------------------------------------

def update_belief(belief: BeliefState, model: RewardModel, reward) -> BeliefState:
    if reward < 0 or reward > model.trials or int(reward) != reward:
        raise InvalidObservation(f"reward {reward} not in 0..{model.trials}")
    return BeliefState(belief.alpha + reward, belief.beta + model.trials - reward)


def posterior_mean(belief: BeliefState, model: RewardModel) -> float:
    return model.trials * belief.alpha / (belief.alpha + belief.beta)


def estimate_path(belief: BeliefState, model: RewardModel, rewards: Sequence) -> np.ndarray:
    """mu_hat_0..mu_hat_n along a reward sequence."""
    rewards = np.asarray(rewards, dtype=np.float64)
    m = model.trials
    succ = np.concatenate(([0.0], np.cumsum(rewards)))
    n = np.arange(len(succ))
    return m * (belief.alpha + succ) / (belief.alpha + belief.beta + n * m)


def prefix_payoff(path: np.ndarray) -> np.ndarray:
    """S_0..S_n with S_n the sum of mu_hat_0..mu_hat_{n-1}."""
    out = np.zeros(len(path))
    np.cumsum(path[:-1], out=out[1:])
    return out


def belief_path(belief: BeliefState, model: RewardModel, rewards: Sequence):
    """Beliefs after 0..n observations of a reward sequence."""
    out = [belief]
    for r in rewards:
        out.append(update_belief(out[-1], model, int(r)))
    return out


def outcome_from_rewards(belief, model, rewards, theta=float("nan")) -> SampledOutcome:
    rewards = np.asarray(rewards, dtype=np.int64)
    path = estimate_path(belief, model, rewards)
    return SampledOutcome(theta, rewards, path, prefix_payoff(path))


def sample_outcome(belief, model, horizon, rng) -> SampledOutcome:
    """Draw theta from the belief and a future of `horizon` rewards."""
    if horizon < 0:
        raise ValueError("horizon must be nonnegative")
    theta = rng.beta(belief.alpha, belief.beta)
    rewards = rng.binomial(model.trials, theta, size=horizon)
    return outcome_from_rewards(belief, model, rewards, theta)


def sample_estimate_terminal(belief, model, n, rng) -> float:
    """mu_hat_n of a sampled future, drawn through one Binomial reward sum."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    if n == 0:
        return posterior_mean(belief, model)
    theta = rng.beta(belief.alpha, belief.beta)
    m = model.trials
    total = rng.binomial(n * m, theta)
    return m * (belief.alpha + total) / (belief.alpha + belief.beta + n * m)

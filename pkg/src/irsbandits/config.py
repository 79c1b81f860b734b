"""Experiment configuration: strict JSON schema, bundled instances, builders."""

import json
from importlib import resources
from pathlib import Path
from typing import List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .bayes import ArmSpec, BanditInstance, BeliefState, RewardModel
from .errors import ConfigError
from .policies import POLICIES, PolicyConfig
from .random_cost import RANDOM_COST_POLICIES, CostModel, RandomCostArm, RandomCostInstance
from .solvers import DEFAULT_LATTICE_CAP, DEFAULT_MAX_ITER, DEFAULT_NODES, DEFAULT_TOL

SCHEMA_VERSION = 1
BUNDLED = ("beta_bernoulli_k2", "beta_bernoulli_k5", "ipinyou_k6", "random_cost_k2")
LATTICE_POLICIES = ("irs_vemax", "irs_vemax_pext")


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class PriorSpec(_Strict):
    alpha: float = Field(1.0, gt=0)
    beta: float = Field(1.0, gt=0)


class RewardSpec(_Strict):
    trials: int = Field(1, ge=1)


class CostModelSpec(_Strict):
    low: int = Field(ge=1)
    high: int = Field(ge=1)
    prior: PriorSpec = PriorSpec()

    @model_validator(mode="after")
    def _ordered(self):
        if self.low > self.high:
            raise ValueError("cost_model.low must not exceed cost_model.high")
        return self


class ArmConfig(_Strict):
    cost: Optional[int] = Field(None, ge=1)
    cost_model: Optional[CostModelSpec] = None
    reward: RewardSpec = RewardSpec()
    prior: PriorSpec = PriorSpec()

    @model_validator(mode="after")
    def _one_cost(self):
        if (self.cost is None) == (self.cost_model is None):
            raise ValueError("each arm needs exactly one of 'cost' or 'cost_model'")
        return self


class InstanceConfig(_Strict):
    arms: List[ArmConfig] = Field(min_length=1)

    @model_validator(mode="after")
    def _uniform_setting(self):
        kinds = {arm.cost_model is not None for arm in self.arms}
        if len(kinds) > 1:
            raise ValueError("arms must all use 'cost' or all use 'cost_model'")
        return self

    @property
    def random_cost(self):
        return self.arms[0].cost_model is not None


class PolicySpec(_Strict):
    kind: str
    tol: float = Field(DEFAULT_TOL, gt=0)
    max_iter: int = Field(DEFAULT_MAX_ITER, ge=1)
    lattice_cap: int = Field(DEFAULT_LATTICE_CAP, ge=1)
    nodes: int = Field(DEFAULT_NODES, ge=2)

    def policy_config(self):
        return PolicyConfig(self.tol, self.max_iter, self.lattice_cap, self.nodes)


class BoundsSpec(_Strict):
    kinds: List[Literal["bts", "irs_fh", "irs_vzero", "irs_vemax", "ideal"]] = ["bts"]
    samples: int = Field(10_000, ge=2)
    common_random_numbers: bool = False


class OutputSpec(_Strict):
    path: Optional[str] = None
    format: Literal["csv", "json"] = "csv"


class ExperimentConfig(_Strict):
    schema_version: Literal[1]
    name: str = "experiment"
    instance: InstanceConfig
    budgets: List[int] = Field(min_length=1)
    policies: List[PolicySpec] = []
    episodes: int = Field(1000, ge=2)
    bounds: BoundsSpec = BoundsSpec()
    baseline_samples: int = Field(200_000, ge=2)
    base_seed: int = Field(0, ge=0)
    parallelism: int = Field(1, ge=1)
    output: OutputSpec = OutputSpec()

    @model_validator(mode="after")
    def _check(self):
        if any(b < 0 for b in self.budgets):
            raise ValueError("budgets must be nonnegative")
        table = RANDOM_COST_POLICIES if self.instance.random_cost else POLICIES
        for p in self.policies:
            if p.kind not in table:
                setting = "random-cost" if self.instance.random_cost else "deterministic-cost"
                raise ValueError(f"policy kind {p.kind!r} is not implemented for {setting} "
                                 f"instances; choose from {sorted(table)}")
        return self

    # -- builders ---------------------------------------------------------

    def build_instance(self, budget):
        arms = []
        for arm in self.instance.arms:
            reward = RewardModel.binomial(arm.reward.trials)
            prior = BeliefState(arm.prior.alpha, arm.prior.beta)
            if arm.cost_model is None:
                arms.append(ArmSpec(arm.cost, reward, prior))
            else:
                cm = arm.cost_model
                model = CostModel(cm.low, cm.high, BeliefState(cm.prior.alpha, cm.prior.beta))
                arms.append(RandomCostArm(model, reward, prior))
        if self.instance.random_cost:
            return RandomCostInstance(tuple(arms), int(budget))
        return BanditInstance(tuple(arms), int(budget))

    def to_json(self):
        return json.dumps(self.model_dump(mode="json"), indent=2)


# ---------------------------------------------------------------------------
# Loading
# ---------------------------------------------------------------------------

def _format_validation(err: ValidationError):
    lines = []
    for e in err.errors():
        loc = ".".join(str(x) for x in e["loc"]) or "<root>"
        lines.append(f"{loc}: {e['msg']}")
    return "; ".join(lines)


def parse_config(text, source="<config>") -> ExperimentConfig:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(f"{source}: {_format_validation(exc)}") from None


def bundled_path(name):
    return resources.files("irsbandits") / "configs" / f"{name}.json"


def load_config(ref) -> ExperimentConfig:
    """Load a config from a path or a bundled name such as ``beta_bernoulli_k2``."""
    ref = str(ref)
    if ref in BUNDLED or ref.removesuffix(".json") in BUNDLED and not Path(ref).exists():
        res = bundled_path(ref.removesuffix(".json"))
        return parse_config(res.read_text(encoding="utf-8"), ref)
    path = Path(ref)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {ref}: {exc.strerror}") from None
    return parse_config(text, ref)

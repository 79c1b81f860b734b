from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from irsbandits.bayes import BERNOULLI, ArmSpec, BanditInstance, BeliefState, bernoulli_instance
from irsbandits.config import load_config
from irsbandits.errors import CapabilityError
from irsbandits.harness import simulate
from irsbandits.oracle import (EXACT_BOUND_KINDS, ValueTable, beta_binomial_pmf, bellman_vstar,
                               estimate_states, exact_bound, exact_policy_value)
from irsbandits.stats import mean_and_se

from oracles import bellman_value, enumerate_fh_vzero, w_bts_quadrature

TINY = bernoulli_instance((1, 1), 2)


def _instance(costs, budget, priors):
    return BanditInstance(tuple(ArmSpec(int(c), BERNOULLI, BeliefState(*p))
                                for c, p in zip(costs, priors)), budget)


def _small_case(seed):
    rng = np.random.default_rng(seed)
    k = int(rng.integers(1, 3))
    costs = rng.integers(1, 3, size=k).tolist()
    priors = [tuple(int(x) for x in rng.integers(1, 5, size=2)) for _ in range(k)]
    return costs, int(rng.integers(0, 6)), priors


# ---------------------------------------------------------------------------
# Predictive pmf and state counts
# ---------------------------------------------------------------------------

def test_beta_binomial_pmf_exact():
    p = beta_binomial_pmf(2, Fraction(1), Fraction(1))
    assert p == [Fraction(1, 3)] * 3
    q = beta_binomial_pmf(3, Fraction(2), Fraction(5))
    assert sum(q) == 1
    mean = sum(s * w for s, w in enumerate(q))
    assert mean == Fraction(3 * 2, 7)


def test_estimate_states_counts_tally_lattice():
    # c = (1, 1), B = 2: pull vectors (0,0),(1,0),(0,1),(2,0),(1,1),(0,2)
    assert estimate_states(TINY) == 1 + 2 + 2 + 3 + 4 + 3


# ---------------------------------------------------------------------------
# Bellman V*
# ---------------------------------------------------------------------------

def test_vstar_examples():
    one = bellman_vstar(bernoulli_instance((1,), 2)).root
    assert one == 1
    assert bellman_vstar(TINY).root == Fraction(13, 12)


def test_vstar_zero_below_min_cost_and_monotone():
    values = [bellman_vstar(bernoulli_instance((2, 3), b)).root for b in range(9)]
    assert values[:2] == [0, 0]
    assert all(x <= y for x, y in zip(values, values[1:]))


@settings(max_examples=30)
@given(st.integers(0, 2 ** 32 - 1))
def test_vstar_matches_plain_recursion(seed):
    costs, budget, priors = _small_case(seed)
    assert bellman_vstar(_instance(costs, budget, priors)).root == \
        bellman_value(costs, budget, priors)


def test_value_table_float_mode_agrees():
    inst = _instance((1, 2), 6, [(2, 1), (1, 3)])
    exact = bellman_vstar(inst, arithmetic="exact").root
    approx = bellman_vstar(inst, arithmetic="float").root
    assert isinstance(approx, float)
    assert approx == pytest.approx(float(exact), abs=1e-12)
    table = ValueTable(inst)
    assert table.value(0, table.root_tallies) == 0


def test_vstar_state_limit():
    inst = load_config("beta_bernoulli_k5").build_instance(2000)
    with pytest.raises(CapabilityError, match="states"):
        bellman_vstar(inst)


# ---------------------------------------------------------------------------
# Exact bounds
# ---------------------------------------------------------------------------

def test_exact_bounds_tiny_instance():
    assert exact_bound("bts", TINY) == Fraction(4, 3)
    assert exact_bound("irs_fh", TINY) == Fraction(7, 6)
    assert exact_bound("irs_vzero", TINY) == Fraction(9, 8)


@pytest.mark.parametrize("kind", EXACT_BOUND_KINDS)
def test_exact_bounds_zero_budget(kind):
    assert exact_bound(kind, bernoulli_instance((1, 3), 0)) == 0


def test_fractional_bounds_below_cheapest_cost():
    # nothing fits, yet the fractional relaxations keep B * max ratio
    inst = _instance((2, 2), 1, [(4, 3), (4, 4)])
    assert exact_bound("irs_fh", inst) == Fraction(2, 7)
    assert float(exact_bound("bts", inst)) == pytest.approx(
        w_bts_quadrature([2, 2], 1, [(4, 3), (4, 4)]), abs=1e-12)
    for kind in ("bts_integer", "irs_fh_integer", "irs_vzero"):
        assert exact_bound(kind, inst) == 0


def test_exact_bound_unknown_kind():
    with pytest.raises(KeyError):
        exact_bound("irs_vemax", TINY)


@settings(max_examples=30)
@given(st.integers(0, 2 ** 32 - 1))
def test_exact_bounds_match_enumeration(seed):
    costs, budget, priors = _small_case(seed)
    inst = _instance(costs, budget, priors)
    fh, vz = enumerate_fh_vzero(costs, budget, priors)
    assert exact_bound("irs_fh", inst) == fh
    assert exact_bound("irs_vzero", inst) == vz
    bts = exact_bound("bts", inst)
    assert float(bts) == pytest.approx(w_bts_quadrature(costs, budget, priors), abs=1e-10)


@settings(max_examples=30)
@given(st.integers(0, 2 ** 32 - 1))
def test_exact_chain_and_integer_variants(seed):
    costs, budget, priors = _small_case(seed)
    inst = _instance(costs, budget, priors)
    bts, fh, vz = (exact_bound(k, inst) for k in ("bts", "irs_fh", "irs_vzero"))
    vstar = bellman_vstar(inst).root
    assert bts >= fh >= vz >= vstar
    # integer allocations can only lose against the fractional relaxation
    assert exact_bound("bts_integer", inst) <= float(bts) + 1e-12
    assert exact_bound("irs_fh_integer", inst) <= fh


def test_exact_bound_float_fallback_for_real_priors():
    inst = _instance((1, 2), 4, [(1.5, 2.25), (0.5, 1.0)])
    fh, vz = enumerate_fh_vzero([1, 2], 4, [(Fraction(3, 2), Fraction(9, 4)),
                                            (Fraction(1, 2), Fraction(1))])
    assert float(exact_bound("irs_fh", inst)) == pytest.approx(float(fh), abs=1e-12)
    assert float(exact_bound("irs_vzero", inst)) == pytest.approx(float(vz), abs=1e-12)


def test_exact_bound_path_limit():
    with pytest.raises(CapabilityError):
        exact_bound("irs_vzero", bernoulli_instance((1, 1), 30), limit=1000)


# ---------------------------------------------------------------------------
# Exact policy values
# ---------------------------------------------------------------------------

def test_policy_value_myopic_one_pull():
    inst = _instance((5, 5), 5, [(2, 3), (4, 3)])
    for policy in ("irs_fh", "irs_vzero"):
        res = exact_policy_value(policy, inst)
        assert res.exact and res.value == pytest.approx(4 / 7, abs=1e-14)


@pytest.mark.parametrize("policy", ["bts", "irs_fh", "irs_vzero"])
def test_policy_value_single_arm(policy):
    inst = _instance((2,), 7, [(3, 2)])
    assert exact_policy_value(policy, inst).value == pytest.approx(3 * 0.6, abs=1e-13)


def test_policy_value_zero_budget():
    res = exact_policy_value("bts", bernoulli_instance((2, 3), 1))
    assert res.value == 0.0 and res.exact


def _vectorised_bts_tiny(n, rng):
    """BTS on the tiny instance written directly: two pulls, uniform priors."""
    theta = rng.random((n, 2))
    first = (rng.random(n) > rng.random(n)).astype(int)
    idx = np.arange(n)
    r1 = rng.random(n) < theta[idx, first]
    alpha = np.ones((n, 2))
    beta = np.ones((n, 2))
    alpha[idx, first] += r1
    beta[idx, first] += ~r1
    sample = rng.beta(alpha, beta)
    second = np.argmax(sample, axis=1)
    return theta[idx, first] + theta[idx, second]


def test_bts_policy_value_tiny_against_simulation():
    res = exact_policy_value("bts", TINY)
    assert res.value == pytest.approx(37 / 36, abs=1e-12)
    vals = _vectorised_bts_tiny(10 ** 6, np.random.default_rng(31))
    mean, se = mean_and_se(vals)
    assert abs(mean - res.value) < 3 * se
    batch = simulate(TINY, "bts", 20_000, base_seed=3)
    mean, se = mean_and_se(batch.mean_values)
    assert abs(mean - res.value) < 3 * se


@pytest.mark.parametrize("policy", ["irs_fh", "irs_vzero"])
def test_irs_policy_values_against_simulation(policy):
    inst = _instance((1, 2), 4, [(1, 1), (2, 1)])
    res = exact_policy_value(policy, inst)
    batch = simulate(inst, policy, 20_000, base_seed=4)
    mean, se = mean_and_se(batch.mean_values)
    assert abs(mean - res.value) < 3 * se
    assert res.value <= float(bellman_vstar(inst).root) + 1e-12


def test_policy_value_falls_back_to_monte_carlo():
    inst = _instance((5, 5), 5, [(2, 3), (4, 3)])
    res = exact_policy_value("irs_index", inst, episodes=2000)
    assert not res.exact and res.std_error > 0
    assert abs(res.value - 4 / 7) < 4 * res.std_error + 1e-9

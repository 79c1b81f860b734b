"""Exact ground truth for small instances.

Bellman V* by memoised backward induction over (remaining budget, reward
tallies), exact bound values by total enumeration of reward realizations,
and exact policy values on enumerable episode trees.

Belief states are keyed by integer tallies (successes, failures) per arm,
so the memo is exact.  With rational hyperparameters all arithmetic is done
in Fractions; floating hyperparameters are converted exactly.
"""

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import kernels
from .bayes import BanditInstance
from .errors import CapabilityError
from .policies import knapsack_counts, prefix_values
from .solvers import _legendre, quadrature_rule

DEFAULT_STATE_LIMIT = 10 ** 6
DEFAULT_PATH_LIMIT = 10 ** 6
_EXACT_STATE_LIMIT = 2 * 10 ** 5
# reward-path combinations cost about this many oracle states each in Fractions
_FRACTION_VZERO_SCALE = 4


# ---------------------------------------------------------------------------
# Predictive distributions
# ---------------------------------------------------------------------------

def _num(x, exact):
    return Fraction(x) if exact else float(x)


def beta_binomial_pmf(n, alpha, beta):
    """P[S = s], s = 0..n, for S ~ BetaBinomial(n, alpha, beta).

    Exact when alpha and beta are Fractions.
    """
    one = alpha / alpha
    p = [one] * (n + 1)
    # p(0) = (beta)_n / (alpha + beta)_n
    acc = one
    for i in range(n):
        acc = acc * (beta + i) / (alpha + beta + i)
    p[0] = acc
    for s in range(n):
        p[s + 1] = p[s] * (n - s) / (s + 1) * (alpha + s) / (beta + n - s - 1)
    return p


def _prior_pairs(instance, exact):
    return [(_num(arm.prior.alpha, exact), _num(arm.prior.beta, exact))
            for arm in instance.arms]


def _is_integral(x):
    return float(x).is_integer()


# ---------------------------------------------------------------------------
# State-count estimate
# ---------------------------------------------------------------------------

def estimate_states(instance: BanditInstance, cap=None) -> float:
    """Number of (budget, tallies) states reachable from the root.

    Sums prod_a (m_a n_a + 1) over pull vectors with sum_a c_a n_a <= B.
    Returns early once the count exceeds ``cap``.
    """
    costs = [int(c) for c in instance.costs]
    g = 0
    for c in costs:
        g = math.gcd(g, c)
    cap_units = instance.budget // g
    series = np.zeros(cap_units + 1)
    series[0] = 1.0
    for arm in instance.arms:
        unit = arm.cost // g
        m = arm.reward.trials
        arm_series = np.zeros(cap_units + 1)
        n = np.arange(cap_units // unit + 1)
        arm_series[n * unit] = m * n + 1.0
        series = np.convolve(series, arm_series)[:cap_units + 1]
        total = float(series.sum())
        if cap is not None and total > cap:
            return total
    return float(series.sum())


def _check_state_limit(instance, limit):
    est = estimate_states(instance, cap=limit)
    if est > limit:
        raise CapabilityError(f"exact oracle needs about {est:.3g} states, above the limit "
                              f"of {limit:.3g}")
    return est


# ---------------------------------------------------------------------------
# Bellman V*
# ---------------------------------------------------------------------------

class ValueTable:
    """Memoised V*(b, y) and Q*(b, y, a) for one instance.

    Tallies are a tuple of (successes, failures) per arm, counted from the
    instance's priors.
    """

    def __init__(self, instance: BanditInstance, exact=True):
        self.instance = instance
        self.exact = exact
        self.costs = [int(c) for c in instance.costs]
        self.trials = [int(t) for t in instance.trials]
        self.priors = _prior_pairs(instance, exact)
        self.zero = Fraction(0) if exact else 0.0
        self._v = {}
        self._pmf = {}
        self._min_cost = min(self.costs)

    @property
    def root_tallies(self):
        return tuple((0, 0) for _ in self.costs)

    @property
    def root(self):
        return self.value(self.instance.budget, self.root_tallies)

    def __len__(self):
        return len(self._v)

    def _predictive(self, a, tally):
        key = (a, tally)
        p = self._pmf.get(key)
        if p is None:
            alpha, beta = self.priors[a]
            p = beta_binomial_pmf(self.trials[a], alpha + tally[0], beta + tally[1])
            self._pmf[key] = p
        return p

    def mean(self, a, tally):
        alpha, beta = self.priors[a]
        alpha = alpha + tally[0]
        return self.trials[a] * alpha / (alpha + beta + tally[1])

    def q(self, budget, tallies, a):
        """Expected reward of pulling a, then acting optimally."""
        budget = int(budget)
        if self.costs[a] > budget:
            raise ValueError("arm not affordable")
        tallies = tuple(tuple(t) for t in tallies)
        m = self.trials[a]
        s, f = tallies[a]
        nxt = list(tallies)
        cont = self.zero
        left = budget - self.costs[a]
        for r, p in enumerate(self._predictive(a, tallies[a])):
            nxt[a] = (s + r, f + m - r)
            cont += p * self.value(left, tuple(nxt))
        return self.mean(a, tallies[a]) + cont

    def value(self, budget, tallies):
        budget = int(budget)
        if budget < self._min_cost:
            return self.zero
        tallies = tuple(tuple(t) for t in tallies)
        key = (budget, tallies)
        v = self._v.get(key)
        if v is None:
            v = self.zero
            for a, c in enumerate(self.costs):
                if c <= budget:
                    qa = self.q(budget, tallies, a)
                    if qa > v:
                        v = qa
            self._v[key] = v
        return v


def _use_exact(instance, arithmetic, est):
    if arithmetic == "exact":
        return True
    if arithmetic == "float":
        return False
    if arithmetic != "auto":
        raise ValueError("arithmetic must be 'auto', 'exact' or 'float'")
    return est <= _EXACT_STATE_LIMIT


def bellman_vstar(instance: BanditInstance, limit=DEFAULT_STATE_LIMIT,
                  arithmetic="auto") -> ValueTable:
    """Exact V* table; raises CapabilityError above ``limit`` states."""
    est = _check_state_limit(instance, limit)
    table = ValueTable(instance, exact=_use_exact(instance, arithmetic, est))
    table.root  # fill the memo from the root
    return table


# ---------------------------------------------------------------------------
# Polynomial helpers for W^BTS
# ---------------------------------------------------------------------------

def _poly_mul(p, q):
    out = [Fraction(0)] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        if a:
            for j, b in enumerate(q):
                out[i + j] += a * b
    return out


def _poly_integral(p, lo, hi):
    return sum(c * (hi ** (i + 1) - lo ** (i + 1)) / (i + 1) for i, c in enumerate(p))


def _beta_cdf_poly(alpha, beta, scale):
    """Coefficients in x of I_{x * scale}(alpha, beta) for integer alpha, beta."""
    n = alpha + beta - 1
    coef = [Fraction(0)] * (n + 1)
    for j in range(alpha, n + 1):
        # C(n, j) t^j (1 - t)^(n - j)
        for i in range(n - j + 1):
            coef[j + i] += math.comb(n, j) * math.comb(n - j, i) * (-1) ** i
    return [c * scale ** p for p, c in enumerate(coef)]


def _exact_emax_ratio(instance):
    """E[max_a m_a theta_a / c_a] exactly for integer hyperparameters."""
    ends, polys = [], []
    for arm in instance.arms:
        scale = Fraction(arm.cost, arm.reward.trials)
        ends.append(1 / scale)
        polys.append(_beta_cdf_poly(int(arm.prior.alpha), int(arm.prior.beta), scale))
    edges = sorted(set([Fraction(0)] + ends))
    total = Fraction(0)
    for lo, hi in zip(edges[:-1], edges[1:]):
        prod = [Fraction(1)]
        for end, poly in zip(ends, polys):
            if end >= hi:
                prod = _poly_mul(prod, poly)
        total += (hi - lo) - _poly_integral(prod, lo, hi)
    return total


# ---------------------------------------------------------------------------
# Exact bounds
# ---------------------------------------------------------------------------

EXACT_BOUND_KINDS = ("bts", "bts_integer", "irs_fh", "irs_fh_integer", "irs_vzero")


def _integer_priors(instance):
    return all(_is_integral(arm.prior.alpha) and _is_integral(arm.prior.beta)
               for arm in instance.arms)


def _exact_bts(instance):
    if _integer_priors(instance):
        return instance.budget * _exact_emax_ratio(instance)
    # smooth part only; integrated numerically on a fine kink-split rule
    from .solvers import expected_max_ratio
    beliefs = [arm.prior for arm in instance.arms]
    models = [arm.reward for arm in instance.arms]
    return instance.budget * expected_max_ratio(beliefs, models, instance.costs, nodes=256)


def _maximal_allocations(costs, budget):
    """Integer allocations to which no further pull can be added."""
    ranges = [range(budget // c + 1) for c in costs]
    out = []
    for n in itertools.product(*ranges):
        used = sum(c * k for c, k in zip(costs, n))
        if used <= budget and all(used + c > budget for c in costs):
            out.append(n)
    return out


def _fh_atoms(instance, exact):
    """Per arm: (mu_hat values at horizon N_a - 1, probabilities)."""
    out = []
    for arm, (alpha, beta) in zip(instance.arms, _prior_pairs(instance, exact)):
        m = arm.reward.trials
        h = max(instance.budget // arm.cost - 1, 0)
        n = h * m
        pmf = beta_binomial_pmf(n, alpha, beta)
        vals = [m * (alpha + s) / (alpha + beta + n) for s in range(n + 1)]
        out.append((vals, pmf))
    return out


def _exact_fh(instance, exact):
    atoms = _fh_atoms(instance, exact)
    costs = [int(c) for c in instance.costs]
    per_arm = [([v / c for v in vals], pmf) for (vals, pmf), c in zip(atoms, costs)]
    support = sorted(set(v for vals, _ in per_arm for v in vals))

    def cdf(vals, pmf, x, strict):
        return sum((p for v, p in zip(vals, pmf) if (v < x if strict else v <= x)),
                   _num(0, exact))

    total = _num(0, exact)
    for x in support:
        upper = _num(1, exact)
        lower = _num(1, exact)
        for vals, pmf in per_arm:
            upper *= cdf(vals, pmf, x, False)
            lower *= cdf(vals, pmf, x, True)
        total += x * (upper - lower)
    return instance.budget * total


def _exact_fh_integer(instance, exact, limit):
    atoms = _fh_atoms(instance, exact)
    count = math.prod(len(v) for v, _ in atoms)
    if count > limit:
        raise CapabilityError(f"enumeration needs {count} outcomes, above the limit {limit}")
    costs = [int(c) for c in instance.costs]
    allocs = _maximal_allocations(costs, instance.budget)
    total = _num(0, exact)
    for combo in itertools.product(*[range(len(v)) for v, _ in atoms]):
        prob = _num(1, exact)
        vals = []
        for a, i in enumerate(combo):
            prob *= atoms[a][1][i]
            vals.append(atoms[a][0][i])
        best = max(sum(n * v for n, v in zip(alloc, vals)) for alloc in allocs)
        total += prob * best
    return total


def _exact_bts_integer(instance, nodes=128):
    """E[max over integer allocations of sum_a n_a mu_a(theta_a)].

    Outer arms are integrated by Gauss-Legendre quadrature; the last arm's
    expectation of the upper envelope is evaluated in closed form.
    """
    costs = [int(c) for c in instance.costs]
    allocs = np.array(_maximal_allocations(costs, instance.budget), dtype=np.float64)
    k = instance.num_arms
    m = instance.trials
    priors = [(arm.prior.alpha, arm.prior.beta) for arm in instance.arms]
    t, w = _legendre(nodes)
    xs = 0.5 * (t + 1.0)
    ws = 0.5 * w

    def beta_pdf(x, a, b):
        return np.exp((a - 1) * np.log(x) + (b - 1) * np.log1p(-x)
                      - (math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)))

    a_last, b_last = priors[-1]
    slope_scale = m[-1]

    def last_arm_expectation(intercepts, slopes):
        # E[max_j (intercepts_j + slopes_j * theta)] for theta ~ Beta(a_last, b_last)
        order = np.lexsort((intercepts, slopes))
        lines = []
        for j in order:
            s, c = slopes[j], intercepts[j]
            while lines:
                s0, c0 = lines[-1]
                if s0 == s:
                    lines.pop()
                    continue
                if len(lines) >= 2:
                    s1, c1 = lines[-2]
                    # drop the middle line if it never leads
                    if (c0 - c1) * (s - s0) <= (c - c0) * (s0 - s1):
                        lines.pop()
                        continue
                break
            lines.append((s, c))
        cuts = [0.0]
        for (s0, c0), (s1, c1) in zip(lines[:-1], lines[1:]):
            cuts.append(min(max((c0 - c1) / (s1 - s0), 0.0), 1.0))
        cuts.append(1.0)
        total = 0.0
        mean = a_last / (a_last + b_last)
        for (s, c), lo, hi in zip(lines, cuts[:-1], cuts[1:]):
            if hi <= lo:
                continue
            p = _ibeta(a_last, b_last, hi) - _ibeta(a_last, b_last, lo)
            pm = mean * (_ibeta(a_last + 1.0, b_last, hi) - _ibeta(a_last + 1.0, b_last, lo))
            total += c * p + s * pm
        return total

    def recurse(arm, partial, weight):
        if arm == k - 1:
            return weight * last_arm_expectation(partial, allocs[:, -1] * slope_scale)
        a, b = priors[arm]
        dens = beta_pdf(xs, a, b) * ws
        acc = 0.0
        for x, d in zip(xs, dens):
            acc += recurse(arm + 1, partial + allocs[:, arm] * m[arm] * x, weight * d)
        return acc

    return recurse(0, np.zeros(len(allocs)), 1.0)


def _sequences(m, length):
    """All reward sequences of the given length, one per row."""
    seqs = list(itertools.product(range(m + 1), repeat=length))
    return np.array(seqs, dtype=np.int64).reshape(len(seqs), length)


def _ibeta(a, b, x):
    return float(kernels.betainc(np.array([a]), b, np.array([x]))[0])


def _path_tables(instance, limit):
    """Per arm: probabilities and prefix payoffs of every reward sequence.

    Only the first N_a - 1 rewards affect S_a(0..N_a), so sequences of that
    length are enumerated.
    """
    out = []
    count = 1
    for arm in instance.arms:
        m = arm.reward.trials
        h = instance.budget // arm.cost
        length = max(h - 1, 0)
        count *= (m + 1) ** length
        if count > limit:
            raise CapabilityError(f"enumeration needs more than {limit} reward-path "
                                  "combinations")
        seqs = _sequences(m, length)
        alpha, beta = arm.prior.alpha, arm.prior.beta
        probs = np.ones(len(seqs))
        succ = np.zeros((len(seqs), length + 1))
        np.cumsum(seqs, axis=1, out=succ[:, 1:])
        for i in range(length):
            a_i = alpha + succ[:, i]
            b_i = beta + i * m - succ[:, i]
            r = seqs[:, i]
            probs *= _bb_prob(m, a_i, b_i, r)
        prefix = np.zeros((len(seqs), h + 1))
        for j in range(len(seqs)):
            prefix_values(alpha, beta, float(m), seqs[j], h, prefix[j])
        out.append((probs, prefix))
    return out


def _bb_prob(m, alpha, beta, r):
    """Vectorised one-step Beta-Binomial predictive probability."""
    logp = (np.log([math.comb(m, int(x)) for x in r])
            + _log_rising(alpha, r) + _log_rising(beta, m - r) - _log_rising(alpha + beta, m))
    return np.exp(logp)


def _log_rising(x, n):
    n = np.broadcast_to(n, np.shape(x))
    out = np.zeros(np.shape(x))
    for k in range(int(np.max(n)) if np.size(n) else 0):
        out += np.where(k < n, np.log(x + k), 0.0)
    return out


def _rising(x, n):
    out = Fraction(1)
    for k in range(n):
        out *= x + k
    return out


def _exact_path_table(arm, alpha, beta, horizon):
    """Fraction twin of one _path_tables entry: (probabilities, prefix payoffs)."""
    m = arm.reward.trials
    length = max(horizon - 1, 0)
    probs, prefixes = [], []
    for seq in itertools.product(range(m + 1), repeat=length):
        p = Fraction(1)
        succ = 0
        prefix = [Fraction(0)]
        for i in range(horizon):
            prefix.append(prefix[-1] + m * (alpha + succ) / (alpha + beta + i * m))
            if i < length:
                r = seq[i]
                a_i, b_i = alpha + succ, beta + i * m - succ
                p *= (math.comb(m, r) * _rising(a_i, r) * _rising(b_i, m - r)
                      / _rising(a_i + b_i, m))
                succ += r
        probs.append(p)
        prefixes.append(prefix)
    return probs, prefixes


def _exact_vzero_fraction(instance, tables, allocs):
    """Exact W^IRS.V-Zero: floats locate the near-optimal allocations, Fractions decide."""
    k = instance.num_arms
    alloc_arr = np.array(allocs, dtype=np.int64)
    exact_tables = [_exact_path_table(arm, alpha, beta, instance.budget // arm.cost)
                    for arm, (alpha, beta) in zip(instance.arms, _prior_pairs(instance, True))]
    # per arm: float payoff of every sequence under every allocation
    per_arm = [tables[a][1][:, alloc_arr[:, a]] for a in range(k)]
    total = Fraction(0)
    for combo in itertools.product(*[range(len(t[0])) for t in tables]):
        fvals = sum(per_arm[a][combo[a]] for a in range(k))
        near = np.nonzero(fvals >= fvals.max() - 1e-9)[0]
        best = max(sum(exact_tables[a][1][combo[a]][allocs[j][a]] for a in range(k))
                   for j in near)
        weight = Fraction(1)
        for a in range(k):
            weight *= exact_tables[a][0][combo[a]]
        total += weight * best
    return total


def _exact_vzero(instance, limit, arithmetic="auto"):
    costs = [int(c) for c in instance.costs]
    if instance.budget < min(costs):
        return 0.0
    tables = _path_tables(instance, limit)
    allocs = _maximal_allocations(costs, instance.budget)
    combos = math.prod(len(t[0]) for t in tables)
    if _use_exact(instance, arithmetic, combos * _FRACTION_VZERO_SCALE):
        return _exact_vzero_fraction(instance, tables, allocs)
    k = len(costs)
    shape = tuple(len(p) for p, _ in tables)
    best = np.full(shape, -np.inf)
    for alloc in allocs:
        val = np.zeros(shape)
        for a in range(k):
            idx = [None] * k
            idx[a] = slice(None)
            val = val + tables[a][1][:, alloc[a]][tuple(idx)]
        np.maximum(best, val, out=best)
    weight = np.ones(shape)
    for a in range(k):
        idx = [None] * k
        idx[a] = slice(None)
        weight = weight * tables[a][0][tuple(idx)]
    return math.fsum((weight * best).ravel())


def exact_bound(kind, instance: BanditInstance, limit=DEFAULT_PATH_LIMIT, arithmetic="auto"):
    """Exact expectation of an inner optimum over all reward realizations.

    Kinds: "bts" (fractional), "bts_integer", "irs_fh" (fractional),
    "irs_fh_integer", "irs_vzero".  Values are Fractions where the
    arithmetic is exact and floats otherwise.
    """
    if kind not in EXACT_BOUND_KINDS:
        raise KeyError(f"unknown exact bound {kind!r}; choose from {EXACT_BOUND_KINDS}")
    costs = [int(c) for c in instance.costs]
    # fractional relaxations stay positive below the cheapest cost
    fractional = kind in ("bts", "irs_fh")
    if instance.budget <= 0 or (not fractional and instance.budget < min(costs)):
        return Fraction(0) if arithmetic != "float" else 0.0
    exact = arithmetic != "float"
    if kind == "bts":
        return _exact_bts(instance)
    if kind == "bts_integer":
        return _exact_bts_integer(instance)
    if kind == "irs_fh":
        return _exact_fh(instance, exact)
    if kind == "irs_fh_integer":
        return _exact_fh_integer(instance, exact, limit)
    return _exact_vzero(instance, limit, arithmetic)


# ---------------------------------------------------------------------------
# Policy values
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PolicyValue:
    value: float
    std_error: float
    exact: bool


def _bts_action_probs(table, budget, tallies, nodes=64):
    """P[BTS picks a] from the ratio densities; exact for integer beliefs of low degree."""
    inst = table.instance
    k = inst.num_arms
    m = np.array(table.trials, dtype=np.float64)
    c = np.array(table.costs, dtype=np.float64)
    ab = [(float(table.priors[a][0]) + tallies[a][0], float(table.priors[a][1]) + tallies[a][1])
          for a in range(k)]
    xs, ws = quadrature_rule(m / c, nodes)
    cdf = np.empty((k, len(xs)))
    pdf = np.empty((k, len(xs)))
    for a, (al, be) in enumerate(ab):
        u = np.clip(xs * c[a] / m[a], 0.0, 1.0)
        cdf[a] = kernels.betainc(np.full(len(xs), al), be, u)
        inside = (u > 0) & (u < 1)
        dens = np.zeros(len(xs))
        lb = math.lgamma(al) + math.lgamma(be) - math.lgamma(al + be)
        dens[inside] = np.exp((al - 1) * np.log(u[inside]) + (be - 1) * np.log1p(-u[inside])
                              - lb) * c[a] / m[a]
        pdf[a] = dens
    probs = np.empty(k)
    for a in range(k):
        others = np.prod(np.delete(cdf, a, axis=0), axis=0) if k > 1 else 1.0
        probs[a] = float(np.sum(ws * pdf[a] * others))
    return probs / probs.sum()


def _fh_action_probs(table, budget, tallies):
    inst = table.instance
    k = inst.num_arms
    atoms = []
    for a in range(k):
        m = table.trials[a]
        alpha = float(table.priors[a][0]) + tallies[a][0]
        beta = float(table.priors[a][1]) + tallies[a][1]
        h = max(budget // table.costs[a] - 1, 0)
        n = h * m
        pmf = [float(p) for p in beta_binomial_pmf(n, Fraction(alpha), Fraction(beta))]
        vals = [m * (alpha + s) / (alpha + beta + n) for s in range(n + 1)]
        atoms.append((vals, pmf))
    probs = np.zeros(k)
    # enumerate joint atoms; the decision uses the same cross-multiplied comparison
    for combo in itertools.product(*[range(len(v)) for v, _ in atoms]):
        p = 1.0
        vals = []
        for a, i in enumerate(combo):
            p *= atoms[a][1][i]
            vals.append(atoms[a][0][i])
        best = 0
        for a in range(1, k):
            if vals[a] * table.costs[best] > vals[best] * table.costs[a]:
                best = a
        probs[best] += p
    return probs


def _vzero_action_probs(table, budget, tallies, limit):
    """P[IRS.V-Zero plays a], with index k standing for Stop."""
    inst = table.instance
    k = inst.num_arms
    costs = np.array(table.costs, dtype=np.int64)
    horizons = budget // costs
    seq_sets = []
    count = 1
    for a in range(k):
        m = table.trials[a]
        alpha = float(table.priors[a][0]) + tallies[a][0]
        beta = float(table.priors[a][1]) + tallies[a][1]
        h = int(horizons[a])
        # the last reward does not enter S_a(0..h); enumerate h - 1 of them
        length = max(h - 1, 0)
        count *= (m + 1) ** length
        if count > limit:
            raise CapabilityError("IRS.V-Zero action enumeration above the limit")
        seqs = _sequences(m, length)
        succ = np.zeros((len(seqs), length + 1))
        np.cumsum(seqs, axis=1, out=succ[:, 1:])
        probs = np.ones(len(seqs))
        for i in range(length):
            probs *= _bb_prob(m, alpha + succ[:, i], beta + i * m - succ[:, i], seqs[:, i])
        prefix = np.zeros((len(seqs), int(horizons.max()) + 1))
        for j in range(len(seqs)):
            prefix_values(alpha, beta, float(m), seqs[j], h, prefix[j])
        seq_sets.append((probs, prefix))
    out = np.zeros(k + 1)
    for combo in itertools.product(*[range(len(p)) for p, _ in seq_sets]):
        p = 1.0
        values = np.empty((k, int(horizons.max()) + 1))
        for a, i in enumerate(combo):
            p *= seq_sets[a][0][i]
            values[a] = seq_sets[a][1][i]
        counts, _ = knapsack_counts(values, horizons, costs, budget)
        out[int(np.argmax(counts)) if counts.any() else k] += p
    return out


def exact_policy_value(policy, instance: BanditInstance, limit=DEFAULT_STATE_LIMIT,
                       episodes=200_000, seed=0) -> PolicyValue:
    """V(pi) by recursion over the episode tree, or by simulation.

    Exact for "bts", "irs_fh" and "irs_vzero" (action probabilities computed
    at every reachable state); other policies fall back to Monte Carlo with
    a reported standard error.
    """
    if instance.budget < int(instance.costs.min()):
        return PolicyValue(0.0, 0.0, True)
    if policy not in ("bts", "irs_fh", "irs_vzero"):
        from .harness import simulate_values
        from .stats import mean_and_se
        vals = simulate_values(instance, policy, episodes, seed)
        mean, se = mean_and_se(vals)
        return PolicyValue(mean, se, False)
    _check_state_limit(instance, limit)
    table = ValueTable(instance, exact=False)
    memo = {}

    def probs_at(budget, tallies):
        if policy == "bts":
            p = _bts_action_probs(table, budget, tallies)
            return np.append(p, 0.0)
        if policy == "irs_fh":
            return np.append(_fh_action_probs(table, budget, tallies), 0.0)
        return _vzero_action_probs(table, budget, tallies, limit)

    def value(budget, tallies):
        if budget <= 0:
            return 0.0
        key = (budget, tallies)
        if key in memo:
            return memo[key]
        probs = probs_at(budget, tallies)
        total = 0.0
        for a in range(instance.num_arms):
            if probs[a] == 0.0 or table.costs[a] > budget:
                continue  # an unaffordable choice stops the episode
            m = table.trials[a]
            s, f = tallies[a]
            cont = 0.0
            nxt = list(tallies)
            for r, p in enumerate(table._predictive(a, tallies[a])):
                nxt[a] = (s + r, f + m - r)
                cont += p * value(budget - table.costs[a], tuple(nxt))
            total += probs[a] * (table.mean(a, tallies[a]) + cont)
        memo[key] = total
        return total

    return PolicyValue(float(value(instance.budget, table.root_tallies)), 0.0, True)

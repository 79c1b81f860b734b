"""Numba-compiled kernels.

Every public function here has a twin with the same signature in
``_kernels_numpy``.  Arrays are expected in the dtypes noted in each
docstring; the dispatching layer in ``kernels`` takes care of conversion.
"""

import math

import numpy as np
from numba import njit

_EPS = 1e-16
_TINY = 1e-300
_MAX_CF_ITER = 20000
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)
# Posterior paths with at most this many trials per pull are walked with the
# contiguous-parameter recurrences instead of fresh continued fractions.
_RECURRENCE_MAX_TRIALS = 32


# =============================================================================
# Regularized incomplete beta
# =============================================================================

@njit(cache=True)
def _stirling_corr(x):
    # lgamma(x) - [(x - 1/2) log x - x + log(2 pi)/2], valid for x >= 10
    z = 1.0 / (x * x)
    s = 1.0 / 12.0 - z * (1.0 / 360.0 - z * (1.0 / 1260.0 - z * (
        1.0 / 1680.0 - z * (1.0 / 1188.0 - z * 691.0 / 360360.0))))
    return s / x


@njit(cache=True)
def log_beta_kernel(a, b, x):
    """log of x^a (1-x)^b / B(a, b)."""
    if a >= 10.0 and b >= 10.0:
        s = a + b
        p0 = a / s
        q0 = b / s
        t = a * math.log1p((x - p0) / p0) + b * math.log1p((p0 - x) / q0)
        corr = _stirling_corr(a) + _stirling_corr(b) - _stirling_corr(s)
        return t + 0.5 * math.log(a * b / s) - _HALF_LOG_2PI - corr
    lbeta = math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)
    return a * math.log(x) + b * math.log1p(-x) - lbeta


@njit(cache=True)
def _betacf(a, b, x):
    # modified Lentz evaluation of the incomplete beta continued fraction
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, _MAX_CF_ITER + 1):
        m2 = 2.0 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return h


@njit(cache=True)
def betainc_scalar(a, b, x):
    """Regularized incomplete beta I_x(a, b)."""
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    if x < (a + 1.0) / (a + b + 2.0):
        return math.exp(log_beta_kernel(a, b, x)) * _betacf(a, b, x) / a
    y = 1.0 - x
    return 1.0 - math.exp(log_beta_kernel(b, a, y)) * _betacf(b, a, y) / b


@njit(cache=True)
def betainc_flat(a, b, x):
    out = np.empty(x.shape[0])
    for i in range(x.shape[0]):
        out[i] = betainc_scalar(a[i], b[i], x[i])
    return out


def betainc(a, b, x):
    """Vectorised I_x(a, b) with numpy broadcasting."""
    a, b, x = np.broadcast_arrays(np.asarray(a, dtype=np.float64),
                                  np.asarray(b, dtype=np.float64),
                                  np.asarray(x, dtype=np.float64))
    shape = x.shape
    # np.array copies, so numba never sees a read-only broadcast view
    out = betainc_flat(np.array(a).ravel(), np.array(b).ravel(), np.array(x).ravel())
    return out.reshape(shape)


# =============================================================================
# Gamma^lambda along a posterior path
# =============================================================================

@njit(cache=True)
def _gamma_scalar(alpha, beta, m, lam):
    # E[max(m theta, lam)] for theta ~ Beta(alpha, beta)
    mean = alpha / (alpha + beta)
    if lam <= 0.0:
        return m * mean
    if lam >= m:
        return lam
    x = lam / m
    i0 = betainc_scalar(alpha, beta, x)
    i1 = betainc_scalar(alpha + 1.0, beta, x)
    return m * (x * i0 + mean * (1.0 - i1))


@njit(cache=True)
def gamma_path(lam, alpha0, beta0, succ, m, count, out):
    """Fill out[:count] with Gamma^lam at beliefs 0..count-1 of a path.

    succ[i] is the cumulative reward after i observations.
    """
    if count <= 0:
        return
    if lam <= 0.0 or lam >= m:
        for i in range(count):
            a = alpha0 + succ[i]
            b = beta0 + i * m - succ[i]
            out[i] = _gamma_scalar(a, b, m, lam)
        return
    x = lam / m
    if m > _RECURRENCE_MAX_TRIALS:
        for i in range(count):
            a = alpha0 + succ[i]
            b = beta0 + i * m - succ[i]
            out[i] = _gamma_scalar(a, b, m, lam)
        return
    a = alpha0
    b = beta0
    ia = betainc_scalar(a, b, x)
    h = math.exp(log_beta_kernel(a, b, x))
    mi = int(m)
    for i in range(count):
        i_plus = ia - h / a
        if i_plus < 0.0:
            i_plus = 0.0
        iv = min(max(ia, 0.0), 1.0)
        out[i] = m * (x * iv + a / (a + b) * (1.0 - i_plus))
        if i + 1 < count:
            r = int(succ[i + 1] - succ[i])
            for _ in range(r):
                ia = ia - h / a
                h = h * x * (a + b) / a
                a += 1.0
            for _ in range(mi - r):
                ia = ia + h / b
                h = h * (1.0 - x) * (a + b) / b
                b += 1.0


# =============================================================================
# Index (deterministic cost)
# =============================================================================

@njit(cache=True)
def index_gain(lam, alpha0, beta0, succ, mu_hat, m, horizon, work):
    """max over n >= 1 of the single-arm inner objective minus T*lam."""
    if horizon <= 0:
        return mu_hat[0] - lam
    t = horizon
    gamma_path(lam, alpha0, beta0, succ, m, t, work)
    base = t * work[0]
    best = -np.inf
    run_min = work[0]
    acc = 0.0
    for n in range(1, t + 1):
        acc += mu_hat[n - 1] - work[n - 1]
        if n < t:
            if work[n] < run_min:
                run_min = work[n]
            val = base + (t - n) * (lam - run_min) + acc
        else:
            val = base + acc
        if val > best:
            best = val
    return best - t * lam


@njit(cache=True)
def _bisect_gain_det(alpha0, beta0, succ, mu_hat, m, horizon, tol, max_iter, work):
    evals = 1
    if index_gain(0.0, alpha0, beta0, succ, mu_hat, m, horizon, work) < 0.0:
        return 0.0, evals, True
    lo = 0.0
    hi = m
    evals += 1
    if index_gain(hi, alpha0, beta0, succ, mu_hat, m, horizon, work) >= 0.0:
        return hi, evals, False
    it = 0
    while hi - lo > tol and it < max_iter:
        mid = 0.5 * (lo + hi)
        evals += 1
        if index_gain(mid, alpha0, beta0, succ, mu_hat, m, horizon, work) >= 0.0:
            lo = mid
        else:
            hi = mid
        it += 1
    return lo, evals, False


@njit(cache=True)
def index_bisect(alpha0, beta0, succ, mu_hat, m, horizon, tol, max_iter):
    """Largest lambda in [0, m] with nonnegative index gain, by bisection.

    Returns (lambda_star, evaluations, degenerate).
    """
    work = np.empty(max(horizon, 1))
    return _bisect_gain_det(alpha0, beta0, succ, mu_hat, m, horizon, tol, max_iter, work)


# =============================================================================
# Index (random cost, penalised)
# =============================================================================

@njit(cache=True)
def _pext_gammas(lam, alpha0, beta0, succ, m, mu_c, count, out):
    d0 = mu_c[0]
    constant = True
    for i in range(1, count):
        if mu_c[i] != d0:
            constant = False
            break
    if constant:
        # deterministic cost: same recurrence as the unit-cost index
        gamma_path(lam * d0, alpha0, beta0, succ, m, count, out)
        for i in range(count):
            out[i] /= d0
        return
    for i in range(count):
        a = alpha0 + succ[i]
        b = beta0 + i * m - succ[i]
        d = mu_c[i]
        out[i] = _gamma_scalar(a, b, m, lam * d) / d


@njit(cache=True)
def pext_gain(lam, alpha0, beta0, succ, mu_r, mu_c, cumcost, m, n_max, budget, work):
    """Random-cost single-arm inner objective (n >= 1) minus B*lam."""
    if n_max <= 0:
        return mu_r[0] - mu_c[0] * lam
    _pext_gammas(lam, alpha0, beta0, succ, m, mu_c, n_max + 1, work)
    base = budget * work[0]
    best = -np.inf
    run_min = work[0]
    acc = 0.0
    for n in range(1, n_max + 1):
        acc += mu_r[n - 1] - mu_c[n - 1] * work[n - 1]
        if work[n] < run_min:
            run_min = work[n]
        val = base + (budget - cumcost[n]) * (lam - run_min) + acc
        if val > best:
            best = val
    return best - budget * lam


@njit(cache=True)
def pext_bisect(alpha0, beta0, succ, mu_r, mu_c, cumcost, m, n_max, budget, upper,
                tol, max_iter):
    work = np.empty(n_max + 1)
    evals = 1
    if pext_gain(0.0, alpha0, beta0, succ, mu_r, mu_c, cumcost, m, n_max, budget, work) < 0.0:
        return 0.0, evals, True
    lo = 0.0
    hi = upper
    evals += 1
    if pext_gain(hi, alpha0, beta0, succ, mu_r, mu_c, cumcost, m, n_max, budget, work) >= 0.0:
        return hi, evals, False
    it = 0
    while hi - lo > tol and it < max_iter:
        mid = 0.5 * (lo + hi)
        evals += 1
        if pext_gain(mid, alpha0, beta0, succ, mu_r, mu_c, cumcost, m, n_max, budget,
                     work) >= 0.0:
            lo = mid
        else:
            hi = mid
        it += 1
    return lo, evals, False


# =============================================================================
# Knapsack over prefix allocations
# =============================================================================

@njit(cache=True)
def _suffix_table(values, weights, lengths, capacity, g):
    k = values.shape[0]
    for b in range(capacity + 1):
        g[k, b] = 0.0
    for a in range(k - 1, -1, -1):
        for b in range(capacity + 1):
            best = -np.inf
            for n in range(lengths[a] + 1):
                w = weights[a, n]
                if w > b:
                    break
                v = values[a, n] + g[a + 1, b - w]
                if v > best:
                    best = v
            g[a, b] = best


@njit(cache=True)
def prefix_knapsack(values, weights, lengths, capacity):
    """Maximise sum_a values[a, n_a] s.t. sum_a weights[a, n_a] <= capacity.

    weights[a] must be nondecreasing with weights[a, 0] == 0.  Returns the
    lexicographically smallest optimal counts and the optimum.
    """
    k = values.shape[0]
    counts = np.zeros(k, dtype=np.int64)
    if capacity < 0:
        return counts, 0.0
    g = np.empty((k + 1, capacity + 1))
    _suffix_table(values, weights, lengths, capacity, g)
    b = capacity
    for a in range(k):
        target = g[a, b]
        for n in range(lengths[a] + 1):
            w = weights[a, n]
            if w > b:
                break
            if values[a, n] + g[a + 1, b - w] == target:
                counts[a] = n
                b -= w
                break
    return counts, g[0, capacity]


@njit(cache=True)
def prefix_knapsack_batch(values, weights, lengths, capacity):
    """Optimum of prefix_knapsack for each sample values[s]."""
    s_count = values.shape[0]
    k = values.shape[1]
    out = np.zeros(s_count)
    if capacity < 0:
        return out
    g = np.empty((k + 1, capacity + 1))
    for s in range(s_count):
        _suffix_table(values[s], weights, lengths, capacity, g)
        out[s] = g[0, capacity]
    return out


@njit(cache=True)
def real_allocation(values, costs, lengths, budget):
    """Exhaustive prefix allocation with real-valued per-pull costs."""
    k = values.shape[0]
    counts = np.zeros(k, dtype=np.int64)
    best_counts = np.zeros(k, dtype=np.int64)
    best = -np.inf
    while True:
        used = 0.0
        for a in range(k):
            used += costs[a] * counts[a]
        if used <= budget:
            val = 0.0
            for a in range(k):
                val += values[a, counts[a]]
            if val > best:
                best = val
                for a in range(k):
                    best_counts[a] = counts[a]
        # odometer increment, last arm fastest (lexicographic order)
        pos = k - 1
        while pos >= 0:
            counts[pos] += 1
            if counts[pos] <= lengths[pos]:
                break
            counts[pos] = 0
            pos -= 1
        if pos < 0:
            break
    return best_counts, best


# =============================================================================
# Lattice DP
# =============================================================================

@njit(cache=True)
def _strides(dims):
    k = dims.shape[0]
    strides = np.ones(k, dtype=np.int64)
    for a in range(k - 2, -1, -1):
        strides[a] = strides[a + 1] * dims[a + 1]
    return strides


@njit(cache=True)
def lattice_gamma(alpha_paths, beta_paths, trials, denoms, dims, xs, ws):
    """E[max_a trials_a theta_a / denoms[a, n_a]] at every box point (C order).

    Uses a fixed quadrature rule (xs, ws) of the survival identity.
    """
    k = dims.shape[0]
    total = 1
    for a in range(k):
        total *= dims[a]
    j_count = xs.shape[0]
    lmax = alpha_paths.shape[1]
    cdf = np.empty((k, lmax, j_count))
    for a in range(k):
        for n in range(dims[a]):
            scale = denoms[a, n] / trials[a]
            for j in range(j_count):
                cdf[a, n, j] = betainc_scalar(alpha_paths[a, n], beta_paths[a, n], xs[j] * scale)
    strides = _strides(dims)
    out = np.empty(total)
    idx = np.zeros(k, dtype=np.int64)
    for flat in range(total):
        rem = flat
        for a in range(k):
            idx[a] = rem // strides[a]
            rem -= idx[a] * strides[a]
        acc = 0.0
        for j in range(j_count):
            prod = 1.0
            for a in range(k):
                prod *= cdf[a, idx[a], j]
            acc += ws[j] * (1.0 - prod)
        out[flat] = acc
    return out


@njit(cache=True)
def lattice_rz(mu_hat, cumcost, expcost, gamma, dims, budget):
    """Penalised one-step payoffs r^z[n, a] and the feasibility mask."""
    k = dims.shape[0]
    strides = _strides(dims)
    total = gamma.shape[0]
    rz = np.zeros((total, k))
    feasible = np.zeros(total, dtype=np.bool_)
    idx = np.zeros(k, dtype=np.int64)
    for flat in range(total):
        rem = flat
        used = 0.0
        for a in range(k):
            idx[a] = rem // strides[a]
            rem -= idx[a] * strides[a]
            used += cumcost[a, idx[a]]
        if used > budget:
            continue
        feasible[flat] = True
        left = budget - used
        for a in range(k):
            n = idx[a]
            if n + 1 >= dims[a]:
                continue
            step = cumcost[a, n + 1] - cumcost[a, n]
            if step > left:
                continue
            rz[flat, a] = (mu_hat[a, n] + (left - expcost[a, n]) * gamma[flat]
                           - (left - step) * gamma[flat + strides[a]])
    return rz, feasible


@njit(cache=True)
def lattice_dp(rz, dims, feasible):
    """Bellman recursion M[n] = max_{a: n_a > 0} M[n - e_a] + rz[n - e_a, a].

    Returns (M, backpointer, best flat index).  Ties in the backpointer go to
    the smallest arm; ties in the final argmax go to fewer total pulls, then
    to the smaller flat index.
    """
    k = dims.shape[0]
    strides = _strides(dims)
    total = rz.shape[0]
    m_val = np.full(total, -np.inf)
    back = np.full(total, -1, dtype=np.int64)
    idx = np.zeros(k, dtype=np.int64)
    best_flat = 0
    best_val = 0.0
    best_pulls = 0
    m_val[0] = 0.0
    for flat in range(1, total):
        if not feasible[flat]:
            continue
        rem = flat
        pulls = 0
        for a in range(k):
            idx[a] = rem // strides[a]
            rem -= idx[a] * strides[a]
            pulls += idx[a]
        cur = -np.inf
        arg = -1
        for a in range(k):
            if idx[a] == 0:
                continue
            prev = flat - strides[a]
            v = m_val[prev] + rz[prev, a]
            if v > cur:
                cur = v
                arg = a
        m_val[flat] = cur
        back[flat] = arg
        if cur > best_val or (cur == best_val and pulls < best_pulls):
            best_val = cur
            best_flat = flat
            best_pulls = pulls
    return m_val, back, best_flat

"""Vectorised numpy kernels, the fallback twin of ``_kernels_numba``."""

import math

import numpy as np

_EPS = 1e-16
_TINY = 1e-300
_MAX_CF_ITER = 20000
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


# =============================================================================
# Regularized incomplete beta
# =============================================================================

def _stirling_corr(x):
    z = 1.0 / (x * x)
    s = 1.0 / 12.0 - z * (1.0 / 360.0 - z * (1.0 / 1260.0 - z * (
        1.0 / 1680.0 - z * (1.0 / 1188.0 - z * 691.0 / 360360.0))))
    return s / x


def _lgamma(x):
    return np.vectorize(math.lgamma, otypes=[float])(x)


def log_beta_kernel(a, b, x):
    """log of x^a (1-x)^b / B(a, b), elementwise."""
    a, b, x = np.broadcast_arrays(np.asarray(a, float), np.asarray(b, float),
                                  np.asarray(x, float))
    out = np.empty(x.shape)
    big = (a >= 10.0) & (b >= 10.0)
    if big.any():
        aa, bb, xx = a[big], b[big], x[big]
        s = aa + bb
        p0 = aa / s
        q0 = bb / s
        with np.errstate(divide="ignore"):
            t = aa * np.log1p((xx - p0) / p0) + bb * np.log1p((p0 - xx) / q0)
        corr = _stirling_corr(aa) + _stirling_corr(bb) - _stirling_corr(s)
        out[big] = t + 0.5 * np.log(aa * bb / s) - _HALF_LOG_2PI - corr
    small = ~big
    if small.any():
        aa, bb, xx = a[small], b[small], x[small]
        lbeta = _lgamma(aa) + _lgamma(bb) - _lgamma(aa + bb)
        with np.errstate(divide="ignore"):
            out[small] = aa * np.log(xx) + bb * np.log1p(-xx) - lbeta
    return out


def _clip_tiny(v):
    return np.where(np.abs(v) < _TINY, _TINY, v)


def _betacf(a, b, x):
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = np.ones_like(x)
    d = 1.0 / _clip_tiny(1.0 - qab * x / qap)
    h = d.copy()
    active = np.ones(x.shape, dtype=bool)
    for m in range(1, _MAX_CF_ITER + 1):
        if not active.any():
            break
        m2 = 2.0 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d_new = 1.0 / _clip_tiny(1.0 + aa * d)
        c_new = _clip_tiny(1.0 + aa / c)
        h_new = h * d_new * c_new
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d_new = 1.0 / _clip_tiny(1.0 + aa * d_new)
        c_new = _clip_tiny(1.0 + aa / c_new)
        delta = d_new * c_new
        h_new = h_new * delta
        d = np.where(active, d_new, d)
        c = np.where(active, c_new, c)
        h = np.where(active, h_new, h)
        active &= ~(np.abs(delta - 1.0) < _EPS)
    return h


def betainc(a, b, x):
    """Vectorised I_x(a, b) with numpy broadcasting."""
    a, b, x = np.broadcast_arrays(np.asarray(a, float), np.asarray(b, float),
                                  np.asarray(x, float))
    out = np.empty(x.shape)
    lo = x <= 0.0
    hi = x >= 1.0
    out[lo] = 0.0
    out[hi] = 1.0
    mid = ~(lo | hi)
    direct = mid & (x < (a + 1.0) / (a + b + 2.0))
    if direct.any():
        aa, bb, xx = a[direct], b[direct], x[direct]
        out[direct] = np.exp(log_beta_kernel(aa, bb, xx)) * _betacf(aa, bb, xx) / aa
    flip = mid & ~direct
    if flip.any():
        aa, bb, yy = b[flip], a[flip], 1.0 - x[flip]
        out[flip] = 1.0 - np.exp(log_beta_kernel(aa, bb, yy)) * _betacf(aa, bb, yy) / aa
    return out


def betainc_scalar(a, b, x):
    return float(betainc(a, b, x))


# =============================================================================
# Gamma^lambda
# =============================================================================

def gamma_values(alpha, beta, m, lam):
    """E[max(m theta, lam)] for theta ~ Beta(alpha, beta), elementwise."""
    alpha, beta, m, lam = np.broadcast_arrays(np.asarray(alpha, float),
                                              np.asarray(beta, float),
                                              np.asarray(m, float),
                                              np.asarray(lam, float))
    mean = alpha / (alpha + beta)
    x = np.clip(lam / m, 0.0, 1.0)
    i0 = betainc(alpha, beta, x)
    i1 = betainc(alpha + 1.0, beta, x)
    out = m * (x * i0 + mean * (1.0 - i1))
    out = np.where(lam <= 0.0, m * mean, out)
    return np.where(lam >= m, lam, out)


def gamma_path(lam, alpha0, beta0, succ, m, count, out):
    if count <= 0:
        return
    i = np.arange(count)
    a = alpha0 + succ[:count]
    b = beta0 + i * m - succ[:count]
    out[:count] = gamma_values(a, b, m, lam)


# =============================================================================
# Index (deterministic cost)
# =============================================================================

def index_gain(lam, alpha0, beta0, succ, mu_hat, m, horizon, work):
    if horizon <= 0:
        return mu_hat[0] - lam
    t = horizon
    gamma_path(lam, alpha0, beta0, succ, m, t, work)
    g = work[:t]
    n = np.arange(1, t + 1)
    acc = np.cumsum(mu_hat[:t] - g)
    run_min = np.minimum.accumulate(g)
    # for n < t the running minimum covers Gamma_0..Gamma_n; n = t has weight 0
    mins = np.append(run_min[1:], 0.0)
    vals = t * g[0] + (t - n) * (lam - mins) + acc
    vals[-1] = t * g[0] + acc[-1]
    return float(vals.max() - t * lam)


def _bisect(gain, upper, tol, max_iter):
    evals = 1
    if gain(0.0) < 0.0:
        return 0.0, evals, True
    lo, hi = 0.0, upper
    evals += 1
    if gain(hi) >= 0.0:
        return hi, evals, False
    it = 0
    while hi - lo > tol and it < max_iter:
        mid = 0.5 * (lo + hi)
        evals += 1
        if gain(mid) >= 0.0:
            lo = mid
        else:
            hi = mid
        it += 1
    return lo, evals, False


def index_bisect(alpha0, beta0, succ, mu_hat, m, horizon, tol, max_iter):
    work = np.empty(max(horizon, 1))

    def gain(lam):
        return index_gain(lam, alpha0, beta0, succ, mu_hat, m, horizon, work)

    return _bisect(gain, m, tol, max_iter)


# =============================================================================
# Index (random cost, penalised)
# =============================================================================

def pext_gain(lam, alpha0, beta0, succ, mu_r, mu_c, cumcost, m, n_max, budget, work):
    if n_max <= 0:
        return mu_r[0] - mu_c[0] * lam
    cnt = n_max + 1
    i = np.arange(cnt)
    a = alpha0 + succ[:cnt]
    b = beta0 + i * m - succ[:cnt]
    d = mu_c[:cnt]
    g = gamma_values(a, b, m, lam * d) / d
    work[:cnt] = g
    acc = np.cumsum(mu_r[:n_max] - mu_c[:n_max] * g[:n_max])
    run_min = np.minimum.accumulate(g)[1:]
    vals = budget * g[0] + (budget - cumcost[1:cnt]) * (lam - run_min) + acc
    return float(vals.max() - budget * lam)


def pext_bisect(alpha0, beta0, succ, mu_r, mu_c, cumcost, m, n_max, budget, upper,
                tol, max_iter):
    work = np.empty(n_max + 1)

    def gain(lam):
        return pext_gain(lam, alpha0, beta0, succ, mu_r, mu_c, cumcost, m, n_max, budget, work)

    return _bisect(gain, upper, tol, max_iter)


# =============================================================================
# Knapsack over prefix allocations
# =============================================================================

def _suffix_table(values, weights, lengths, capacity):
    k = values.shape[0]
    g = np.empty((k + 1, capacity + 1))
    g[k] = 0.0
    for a in range(k - 1, -1, -1):
        row = np.full(capacity + 1, -np.inf)
        for n in range(lengths[a] + 1):
            w = int(weights[a, n])
            if w > capacity:
                break
            cand = values[a, n] + g[a + 1, :capacity + 1 - w]
            np.maximum(row[w:], cand, out=row[w:])
        g[a] = row
    return g


def prefix_knapsack(values, weights, lengths, capacity):
    k = values.shape[0]
    counts = np.zeros(k, dtype=np.int64)
    if capacity < 0:
        return counts, 0.0
    g = _suffix_table(values, weights, lengths, capacity)
    b = capacity
    for a in range(k):
        target = g[a, b]
        for n in range(lengths[a] + 1):
            w = int(weights[a, n])
            if w > b:
                break
            if values[a, n] + g[a + 1, b - w] == target:
                counts[a] = n
                b -= w
                break
    return counts, float(g[0, capacity])


def prefix_knapsack_batch(values, weights, lengths, capacity):
    s_count, k = values.shape[0], values.shape[1]
    if capacity < 0:
        return np.zeros(s_count)
    # vectorised over samples: g has shape (samples, capacity + 1)
    g = np.zeros((s_count, capacity + 1))
    for a in range(k - 1, -1, -1):
        row = np.full((s_count, capacity + 1), -np.inf)
        for n in range(lengths[a] + 1):
            w = int(weights[a, n])
            if w > capacity:
                break
            cand = values[:, a, n][:, None] + g[:, :capacity + 1 - w]
            np.maximum(row[:, w:], cand, out=row[:, w:])
        g = row
    return g[:, capacity].copy()


def real_allocation(values, costs, lengths, budget):
    k = values.shape[0]
    grids = np.meshgrid(*[np.arange(lengths[a] + 1) for a in range(k)], indexing="ij")
    counts = np.stack([gr.ravel() for gr in grids], axis=1)
    used = np.zeros(counts.shape[0])
    val = np.zeros(counts.shape[0])
    for a in range(k):
        used = used + costs[a] * counts[:, a]
        val = val + values[a, counts[:, a]]
    val = np.where(used <= budget, val, -np.inf)
    # first maximiser in lexicographic (C) order
    i = int(np.argmax(val))
    return counts[i].astype(np.int64), float(val[i])


# =============================================================================
# Lattice DP
# =============================================================================

def _unravel(dims):
    total = int(np.prod(dims))
    return np.stack(np.unravel_index(np.arange(total), tuple(int(d) for d in dims)), axis=1)


def _strides(dims):
    k = len(dims)
    strides = np.ones(k, dtype=np.int64)
    for a in range(k - 2, -1, -1):
        strides[a] = strides[a + 1] * dims[a + 1]
    return strides


def lattice_gamma(alpha_paths, beta_paths, trials, denoms, dims, xs, ws):
    k = len(dims)
    idx = _unravel(dims)
    prod = np.ones((idx.shape[0], xs.shape[0]))
    for a in range(k):
        n = np.arange(dims[a])
        scale = denoms[a, n] / trials[a]
        cdf = betainc(alpha_paths[a, n][:, None], beta_paths[a, n][:, None],
                      xs[None, :] * scale[:, None])
        prod = prod * cdf[idx[:, a]]
    return (1.0 - prod) @ ws


def lattice_rz(mu_hat, cumcost, expcost, gamma, dims, budget):
    k = len(dims)
    idx = _unravel(dims)
    strides = _strides(dims)
    total = idx.shape[0]
    used = np.zeros(total)
    for a in range(k):
        used = used + cumcost[a, idx[:, a]]
    feasible = used <= budget
    left = budget - used
    rz = np.zeros((total, k))
    for a in range(k):
        n = idx[:, a]
        ok = feasible & (n + 1 < dims[a])
        nn = np.where(ok, n, 0)
        step = cumcost[a, np.minimum(nn + 1, dims[a] - 1)] - cumcost[a, nn]
        ok &= step <= left
        nxt = np.where(ok, np.arange(total) + strides[a], 0)
        val = (mu_hat[a, nn] + (left - expcost[a, nn]) * gamma
               - (left - step) * gamma[nxt])
        rz[:, a] = np.where(ok, val, 0.0)
    return rz, feasible


def lattice_dp(rz, dims, feasible):
    k = len(dims)
    idx = _unravel(dims)
    strides = _strides(dims)
    total = idx.shape[0]
    pulls = idx.sum(axis=1)
    m_val = np.full(total, -np.inf)
    back = np.full(total, -1, dtype=np.int64)
    m_val[0] = 0.0
    # points with equal total pulls only depend on the previous level
    for level in range(1, int(pulls.max()) + 1 if total > 1 else 1):
        pts = np.nonzero((pulls == level) & feasible)[0]
        if pts.size == 0:
            continue
        cur = np.full(pts.size, -np.inf)
        arg = np.full(pts.size, -1, dtype=np.int64)
        for a in range(k):
            has = idx[pts, a] > 0
            prev = np.where(has, pts - strides[a], 0)
            v = np.where(has, m_val[prev] + rz[prev, a], -np.inf)
            better = v > cur
            cur = np.where(better, v, cur)
            arg = np.where(better, a, arg)
        m_val[pts] = cur
        back[pts] = arg
    cand = np.where(feasible, m_val, -np.inf)
    best_val = max(cand.max(), 0.0)
    ties = np.nonzero(cand == best_val)[0]
    if ties.size == 0:
        return m_val, back, 0
    order = np.lexsort((ties, pulls[ties]))
    return m_val, back, int(ties[order[0]])

"""Pure Python / NumPy implementations of the numerical kernels.

These mirror ``_kernels.pyx`` call for call and are used when the compiled
extension is not available (or when ``D2DSIM_PURE_PYTHON=1``).
"""
import math

import numpy as np

EPS = 1e-15
TINY = 1e-300
MAX_ITER = 100000


def _gamma_series(a, x):
    ap = a
    term = 1.0 / a
    total = term
    for _ in range(MAX_ITER):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * EPS:
            break
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _gamma_contfrac(a, x):
    # modified Lentz evaluation of the upper tail Q(a, x)
    b = x + 1.0 - a
    c = 1.0 / TINY
    d = 1.0 / b
    h = d
    for i in range(1, MAX_ITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < TINY:
            d = TINY
        c = b + an / c
        if abs(c) < TINY:
            c = TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < EPS:
            break
    return math.exp(-x + a * math.log(x) - math.lgamma(a)) * h


def gammainc_lower(a, x):
    """Regularized lower incomplete gamma P(a, x) for a > 0, x >= 0."""
    if x == 0.0:
        return 0.0
    if x < a + 1.0:
        p = _gamma_series(a, x)
    else:
        p = 1.0 - _gamma_contfrac(a, x)
    return min(max(p, 0.0), 1.0)


def ibp_old_counts(new_counts, uniforms):
    """Replay independent IBP processes from pre-drawn randomness.

    ``new_counts[r, i]`` is the number of fresh contents user ``i + 1``
    creates in replay ``r``. ``uniforms`` is consumed replay by replay, user
    by user, and within a user over the already-existing contents in creation
    order; a content with ``m`` prior selectors is taken by user ``i + 1``
    when ``u < m / (i + 1)``. Returns the old-content counts, same shape as
    ``new_counts``.
    """
    new_counts = np.ascontiguousarray(new_counts, dtype=np.int64)
    n_rep, n_users = new_counts.shape
    old = np.zeros_like(new_counts)
    if n_rep == 0 or n_users == 0:
        return old

    cum = np.cumsum(new_counts, axis=1)
    alive = np.zeros_like(new_counts)
    alive[:, 1:] = cum[:, :-1]
    totals = cum[:, -1]
    content_base = np.concatenate(([0], np.cumsum(totals)[:-1]))
    stream_len = alive.sum(axis=1)
    replay_base = np.concatenate(([0], np.cumsum(stream_len)[:-1]))
    step_base = replay_base[:, None] + np.cumsum(alive, axis=1) - alive
    if uniforms.shape[0] < stream_len.sum():
        raise ValueError("not enough uniforms for the requested replays")

    n_contents = int(totals.sum())
    rep = np.repeat(np.arange(n_rep), totals)
    local = np.arange(n_contents) - content_base[rep]
    creator = np.repeat(np.tile(np.arange(n_users), n_rep), new_counts.ravel())
    counts = np.ones(n_contents, dtype=np.int64)

    for i in range(1, n_users):
        idx = np.flatnonzero(creator < i)
        if idx.size == 0:
            continue
        u = uniforms[step_base[rep[idx], i] + local[idx]]
        taken = u < counts[idx] / (i + 1.0)
        old[:, i] = np.bincount(rep[idx][taken], minlength=n_rep)
        counts[idx] += taken
    return old


def _poisson_cutoff(mu):
    # Poisson(mu) mass above mu + 15 sqrt(mu + 1) + 40 is far below 1e-12
    return int(math.ceil(mu + 15.0 * math.sqrt(mu + 1.0) + 40.0))


def skellam_pmf(mu1, mu2, ks):
    """P(X - Y = k), X ~ Poisson(mu1), Y ~ Poisson(mu2), by truncated convolution."""
    ks = np.asarray(ks, dtype=np.int64)
    out = np.empty(ks.shape, dtype=np.float64)
    i_max = _poisson_cutoff(mu2)
    lm1, lm2 = math.log(mu1), math.log(mu2)
    flat = out.reshape(-1)
    for pos, k in enumerate(ks.reshape(-1)):
        k = int(k)
        lo = max(0, -k)
        if lo > i_max:
            flat[pos] = 0.0
            continue
        i = np.arange(lo, i_max + 1, dtype=np.float64)
        j = i + k
        logt = (j * lm1 - mu1 - _lgamma(j + 1.0)) + (i * lm2 - mu2 - _lgamma(i + 1.0))
        flat[pos] = float(np.exp(logt).sum())
    return out


def _lgamma(v):
    return np.fromiter((math.lgamma(t) for t in v), dtype=np.float64, count=len(v))

"""Tail analysis of the old-content count.

Chernoff bounds around mu = (n - 1) alpha / n, the saddlepoint pmf/CDF of
the Skellam model (difference of Poisson(alpha) and Poisson(alpha / n)),
an exact Skellam oracle by convolution, and the empirical CDF of IBP
samples. Everything is evaluated in log space and exponentiated last.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from . import ibp, kernels
from .errors import DomainError

TABLE_HEADER = ["k", "exact_pmf", "exact_cdf", "sp_pmf", "sp_cdf", "empirical_cdf", "chernoff_bound_on_cdf"]
DELTA_GRID = np.round(np.arange(1, 100) / 100, 2)


@dataclass(frozen=True)
class TailParams:
    mu1: float
    mu2: float

    def __post_init__(self):
        if not (self.mu1 > 0 and self.mu2 > 0):
            raise DomainError(f"Poisson means must be positive, got {self.mu1}, {self.mu2}")

    @property
    def mu(self) -> float:
        return self.mu1 - self.mu2

    @classmethod
    def from_ibp(cls, alpha, n):
        if n < 2:
            raise DomainError(f"need n >= 2 for a non-trivial old-content count, got {n}")
        return cls(float(alpha), float(alpha) / n)


def _xlogx(x):
    return 0.0 if x == 0 else x * math.log(x)


def log_chernoff_lower(mu, delta):
    # the delta = 1 endpoint is the limit (1 - delta) ** (1 - delta) -> 1
    if not 0 <= delta <= 1:
        raise DomainError(f"delta must lie in [0, 1], got {delta}")
    return mu * (-delta - _xlogx(1.0 - delta))


def log_chernoff_upper(mu, delta):
    if delta < 0:
        raise DomainError(f"delta must be non-negative, got {delta}")
    return mu * (delta - (1.0 + delta) * math.log1p(delta))


def chernoff_lower(mu: float, delta: float, log: bool = False) -> float:
    """Bound on P(X < (1 - delta) mu); ``log=True`` returns the natural log."""
    if not delta > 0:
        raise DomainError(f"delta must be positive, got {delta}")
    if delta >= 1:
        raise DomainError(f"delta must be below 1 for the lower tail, got {delta}")
    v = log_chernoff_lower(mu, delta)
    return v if log else math.exp(v)


def chernoff_upper(mu: float, delta: float, log: bool = False) -> float:
    """Bound on P(X > (1 + delta) mu); ``log=True`` returns the natural log."""
    if not delta > 0:
        raise DomainError(f"delta must be positive, got {delta}")
    v = log_chernoff_upper(mu, delta)
    return v if log else math.exp(v)


def saddlepoint_terms(mu1, mu2, k):
    """The pair (C, D) with C - D = k and C * D = mu1 * mu2."""
    root = math.sqrt(k * k + 4.0 * mu1 * mu2)
    # pick the cancellation-free branch for each sign of k
    if k >= 0:
        c = (k + root) / 2.0
        d = mu1 * mu2 / c
    else:
        d = (root - k) / 2.0
        c = mu1 * mu2 / d
    return c, d


def log_saddlepoint_pmf(params: TailParams, k: int) -> float:
    c, d = saddlepoint_terms(params.mu1, params.mu2, k)
    return (
        -0.5 * math.log(2.0 * math.pi * (c + d))
        - (params.mu1 + params.mu2)
        + c
        + d
        + k * math.log(d / params.mu2)
    )


def saddlepoint_pmf(params: TailParams, k: int) -> float:
    return math.exp(log_saddlepoint_pmf(params, k))


def saddlepoint_cdf(params: TailParams, m: int) -> float:
    """Saddlepoint CDF summed from k = 0; negative support is left out."""
    if m < 0:
        return 0.0
    total = math.fsum(saddlepoint_pmf(params, k) for k in range(0, int(m) + 1))
    return min(max(total, 0.0), 1.0)


def exact_skellam_pmf(params: TailParams, k):
    """P(X - Y = k) by truncated convolution; ``k`` may be an int or an array."""
    ks = np.atleast_1d(np.asarray(k, dtype=np.int64))
    out = kernels.skellam_pmf(float(params.mu1), float(params.mu2), ks)
    return float(out[0]) if np.ndim(k) == 0 else out


def exact_skellam_cdf(params: TailParams, k, lower=None):
    """P(lower <= X - Y <= k); ``lower=None`` means the full support."""
    ks = np.atleast_1d(np.asarray(k, dtype=np.int64))
    lo = _support_floor(params) if lower is None else int(lower)
    hi = int(ks.max()) if ks.size else lo
    if hi < lo:
        out = np.zeros(ks.shape)
    else:
        support = np.arange(lo, hi + 1)
        cum = np.cumsum(exact_skellam_pmf(params, support))
        out = np.where(ks < lo, 0.0, cum[np.clip(ks - lo, 0, len(cum) - 1)])
    out = np.clip(out, 0.0, 1.0)
    return float(out[0]) if np.ndim(k) == 0 else out


def _support_floor(params):
    # Poisson(mu2) mass above this is far below 1e-12, so X - Y is essentially >= floor
    return -int(math.ceil(params.mu2 + 15.0 * math.sqrt(params.mu2 + 1.0) + 40.0))


def empirical_cdf(samples):
    """Return ``(grid, F)`` on the integer grid spanning the sample range."""
    x = np.asarray(samples, dtype=np.int64)
    if x.size == 0:
        raise DomainError("empirical CDF of an empty sample")
    grid = np.arange(x.min(), x.max() + 1)
    return grid, ecdf_at(x, grid)


def ecdf_at(samples, grid):
    x = np.sort(np.asarray(samples, dtype=np.int64))
    if x.size == 0:
        raise DomainError("empirical CDF of an empty sample")
    return np.searchsorted(x, np.asarray(grid), side="right") / x.size


def chernoff_curves(mu, grid):
    """Bound curves on the integer grid.

    ``lower[x]`` (x <= mu) bounds F(x) from above, ``upper[x]`` (x >= mu)
    bounds 1 - F(x); entries on the other side of mu are NaN.
    """
    lower = np.full(len(grid), np.nan)
    upper = np.full(len(grid), np.nan)
    for i, x in enumerate(grid):
        delta = abs(mu - x) / mu
        if x <= mu and delta <= 1:
            lower[i] = math.exp(log_chernoff_lower(mu, delta))
        if x >= mu:
            upper[i] = math.exp(log_chernoff_upper(mu, delta))
    return lower, upper


@dataclass(frozen=True)
class DistributionTable:
    support: np.ndarray
    exact_pmf: np.ndarray
    exact_cdf: np.ndarray
    saddlepoint_pmf: np.ndarray
    saddlepoint_cdf: np.ndarray
    empirical_cdf: np.ndarray
    chernoff_lower_curve: np.ndarray
    chernoff_upper_curve: np.ndarray
    params: TailParams
    saddlepoint_deficit: float
    samples: np.ndarray

    @property
    def chernoff_bound_on_cdf(self):
        """Single bound column on the CDF axis: the lower-tail bound up to mu
        (an upper bound on F), then one minus the upper-tail bound (a lower
        bound on F)."""
        return np.where(np.isnan(self.chernoff_lower_curve), 1.0 - self.chernoff_upper_curve,
                        self.chernoff_lower_curve)


def table_grid(params: TailParams, samples=None):
    hi = max(int(math.ceil(params.mu1 + 5.0 * math.sqrt(params.mu1 + params.mu2))),
             int(math.ceil(2 * params.mu)) + 10)
    if samples is not None and len(samples):
        hi = max(hi, int(np.max(samples)))
    return np.arange(0, hi + 1)


def build_table(alpha, n, n_samples, rng) -> DistributionTable:
    params = TailParams.from_ibp(alpha, n)
    if n_samples < 1:
        raise DomainError("need at least one sample")
    _, old = ibp.replay(alpha, n, n_samples, rng)
    samples = old[:, n - 1]
    grid = table_grid(params, samples)

    exact_pmf = exact_skellam_pmf(params, grid)
    exact_cdf = exact_skellam_cdf(params, grid)
    sp_pmf = np.array([saddlepoint_pmf(params, int(k)) for k in grid])
    sp_cdf = np.clip(np.cumsum(sp_pmf), 0.0, 1.0)
    lower, upper = chernoff_curves(params.mu, grid)
    return DistributionTable(
        support=grid,
        exact_pmf=exact_pmf,
        exact_cdf=exact_cdf,
        saddlepoint_pmf=sp_pmf,
        saddlepoint_cdf=sp_cdf,
        empirical_cdf=ecdf_at(samples, grid),
        chernoff_lower_curve=lower,
        chernoff_upper_curve=upper,
        params=params,
        saddlepoint_deficit=1.0 - float(np.sum(sp_pmf)),
        samples=samples,
    )


def bound_violations(params: TailParams, deltas=DELTA_GRID):
    """Deltas at which the exact Skellam tail exceeds its Chernoff bound.

    Returns two lists of ``(delta, tail_probability, bound)`` for the lower
    and upper tails.
    """
    mu = params.mu
    lower, upper = [], []
    for delta in deltas:
        x_lo = (1 - delta) * mu
        p_lo = exact_skellam_cdf(params, math.ceil(x_lo) - 1)
        b_lo = chernoff_lower(mu, delta)
        if p_lo > b_lo:
            lower.append((float(delta), p_lo, b_lo))
        x_hi = (1 + delta) * mu
        p_hi = 1.0 - exact_skellam_cdf(params, math.floor(x_hi))
        b_hi = chernoff_upper(mu, delta)
        if p_hi > b_hi:
            upper.append((float(delta), p_hi, b_hi))
    return lower, upper


def write_table_csv(table: DistributionTable, fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(TABLE_HEADER)
    bound = table.chernoff_bound_on_cdf
    for i, k in enumerate(table.support):
        writer.writerow([
            int(k),
            repr(float(table.exact_pmf[i])),
            repr(float(table.exact_cdf[i])),
            repr(float(table.saddlepoint_pmf[i])),
            repr(float(table.saddlepoint_cdf[i])),
            repr(float(table.empirical_cdf[i])),
            repr(float(bound[i])),
        ])

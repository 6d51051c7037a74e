"""Tetrad and partial-correlation test statistics.

Implements the Wishart vanishing-tetrad test with the sample-tetrad
variance formula, the Fisher z-test of partial correlations, and the
Sidak simultaneous-testing adjustment. The two composite hypotheses are

    H_vt(A, B):        all tetrads of sigma[A, B] vanish,
    H_ci(j, A | B):    X_j is independent of every X_k, k in A, given X_B,

each tested by adjusting the per-statistic p-values and rejecting when
any adjusted p-value falls below alpha.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy.special import erfc

from .errors import (
    DegenerateVariance,
    EmptyHypothesis,
    InsufficientSamples,
    InvalidData,
    InvalidTetrad,
)
from .linalg import (
    CovarianceSource,
    _det4,
    partial_correlation,
    std_normal_two_tailed_p,
)

logger = logging.getLogger(__name__)

_SQRT2 = math.sqrt(2.0)

# Chunk length for the vectorized tetrad kernel; keeps the stacked 4x4
# submatrix buffer around 30 MB.
_BLOCK = 1 << 18


@dataclass(frozen=True)
class TetradIndex:
    """Four distinct column indices (i, j) x (u, v) naming one tetrad."""

    i: int
    j: int
    u: int
    v: int

    def __post_init__(self) -> None:
        idx = (self.i, self.j, self.u, self.v)
        if any(int(x) != x for x in idx):
            raise InvalidTetrad(f"tetrad indices must be integers, got {idx}")
        if len(set(idx)) != 4:
            raise InvalidTetrad(f"tetrad indices must be distinct, got {idx}")

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.i, self.j, self.u, self.v)


@dataclass(frozen=True)
class TestReport:
    """Outcome of one composite hypothesis test.

    statistic_ids names the individual statistics (TetradIndex values for
    H_vt, (j, k, cond) triples for H_ci); for large batches an integer
    array of index quadruples is stored instead. raw_p and adjusted_p are
    aligned with statistic_ids, and reject is True exactly when some
    adjusted p-value is below alpha.
    """

    statistic_ids: tuple
    raw_p: np.ndarray
    adjusted_p: np.ndarray
    alpha: float
    reject: bool

    @property
    def min_adjusted_p(self) -> float:
        return float(np.min(self.adjusted_p))


def _check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not 0.0 < alpha <= 1.0:
        raise InvalidData(f"alpha must be in (0, 1], got {alpha}")
    return alpha


def _as_tetrad(t) -> TetradIndex:
    if isinstance(t, TetradIndex):
        return t
    return TetradIndex(*(int(x) for x in t))


def tetrad(cov: CovarianceSource, t) -> float:
    """The tetrad sigma[i,u]*sigma[j,v] - sigma[i,v]*sigma[j,u]."""
    t = _as_tetrad(t)
    p = cov.p
    for x in t.as_tuple():
        if x < 0 or x >= p:
            raise IndexError(f"tetrad index {x} out of range for {p} variables")
    s = cov.sigma
    return float(s[t.i, t.u] * s[t.j, t.v] - s[t.i, t.v] * s[t.j, t.u])


def _tetrad_stats(sigma: np.ndarray, ii, jj, uu, vv):
    """Vectorized tetrads and the minors entering the variance formula."""
    t = sigma[ii, uu] * sigma[jj, vv] - sigma[ii, vv] * sigma[jj, uu]
    det_aa = sigma[ii, ii] * sigma[jj, jj] - sigma[ii, jj] * sigma[jj, ii]
    det_bb = sigma[uu, uu] * sigma[vv, vv] - sigma[uu, vv] * sigma[vv, uu]
    idx = np.stack([ii, jj, uu, vv], axis=-1)
    sub = sigma[idx[..., :, None], idx[..., None, :]]
    det_4 = _det4(sub)
    return t, det_aa, det_bb, det_4


def _variance_from_stats(n: int, t, det_aa, det_bb, det_4):
    """Sample-tetrad variance: n(n-1)^-3 ((n+2)|S_AA||S_BB| - n|S_4| + 3n t^2)."""
    return (n * ((n + 2.0) * det_aa * det_bb - n * det_4 + 3.0 * n * t * t)) / (n - 1.0) ** 3


def tetrad_variance(cov: CovarianceSource, n: int, t) -> float:
    """Plug-in variance of the sample tetrad at sample size n.

    Raises DegenerateVariance when the plug-in value is not positive,
    which signals a near-singular covariance; callers treating the test
    leniently map that case to p = 1.
    """
    t = _as_tetrad(t)
    if n < 4:
        raise InsufficientSamples(f"tetrad variance needs n >= 4, got {n}")
    ii = np.array([t.i])
    jj = np.array([t.j])
    uu = np.array([t.u])
    vv = np.array([t.v])
    tt, det_aa, det_bb, det_4 = _tetrad_stats(cov.sigma, ii, jj, uu, vv)
    var = float(_variance_from_stats(n, tt, det_aa, det_bb, det_4)[0])
    if var <= 0.0:
        raise DegenerateVariance(f"non-positive plug-in variance {var:g} for tetrad {t.as_tuple()}")
    return var


def _tetrad_pvalues_core(sigma: np.ndarray, n: int, ii, jj, uu, vv) -> np.ndarray:
    """Raw two-tailed Wishart p-values for index arrays of equal length.

    Non-positive plug-in variances are mapped to p = 1 (and logged) so
    that long sweeps survive near-singular sample covariances.
    """
    m = len(ii)
    out = np.empty(m)
    degenerate = 0
    for lo in range(0, m, _BLOCK):
        sl = slice(lo, min(lo + _BLOCK, m))
        t, det_aa, det_bb, det_4 = _tetrad_stats(sigma, ii[sl], jj[sl], uu[sl], vv[sl])
        var = _variance_from_stats(n, t, det_aa, det_bb, det_4)
        ok = var > 0.0
        degenerate += int(np.size(ok) - np.count_nonzero(ok))
        safe_var = np.where(ok, var, 1.0)
        z = np.where(ok, t / np.sqrt(safe_var), 0.0)
        p = erfc(np.abs(z) / _SQRT2)
        p[~ok] = 1.0
        out[sl] = p
    if degenerate:
        logger.warning("mapped %d non-positive tetrad variances to p = 1", degenerate)
    return out


def _require_sample_n(cov: CovarianceSource, needed: int, what: str) -> int:
    if cov.n_eff is None:
        raise InsufficientSamples(f"{what} requires a finite sample size, got a population covariance")
    if cov.n_eff < needed:
        raise InsufficientSamples(f"{what} requires n >= {needed}, got n = {cov.n_eff}")
    return cov.n_eff


def wishart_pvalues(cov: CovarianceSource, A, B) -> tuple[list[TetradIndex], np.ndarray]:
    """Raw Wishart p-values for every tetrad between index sets A and B.

    Enumerates pairs {i, j} in A and {u, v} in B (i < j, u < v,
    lexicographic order) with all four indices distinct. When A and B
    overlap, symmetric duplicates t_{ij,uv} = t_{uv,ij} are removed,
    keeping the first occurrence.
    """
    n = _require_sample_n(cov, 4, "the Wishart test")
    p = cov.p
    a_sorted = sorted({int(x) for x in A})
    b_sorted = sorted({int(x) for x in B})
    for x in a_sorted + b_sorted:
        if x < 0 or x >= p:
            raise IndexError(f"variable index {x} out of range for {p} variables")
    ids: list[TetradIndex] = []
    seen = set()
    for i, j in combinations(a_sorted, 2):
        for u, v in combinations(b_sorted, 2):
            if len({i, j, u, v}) != 4:
                continue
            key = ((i, j), (u, v)) if (i, j) <= (u, v) else ((u, v), (i, j))
            if key in seen:
                continue
            seen.add(key)
            ids.append(TetradIndex(i, j, u, v))
    if not ids:
        raise EmptyHypothesis("no valid tetrad between the given index sets")
    quad = np.array([t.as_tuple() for t in ids], dtype=np.intp)
    raw = _tetrad_pvalues_core(cov.sigma, n, quad[:, 0], quad[:, 1], quad[:, 2], quad[:, 3])
    return ids, raw


def _sidak_transform(raw: np.ndarray, m: int) -> np.ndarray:
    """Elementwise 1 - (1 - p)^m, evaluated stably and kept >= raw."""
    if m == 1:
        return raw.copy()
    with np.errstate(divide="ignore"):
        adj = -np.expm1(m * np.log1p(-raw))
    return np.minimum(1.0, np.maximum(adj, raw))


def sidak_adjust(raw_p) -> np.ndarray:
    """Sidak-adjusted p-values 1 - (1 - p)^M with M = len(raw_p)."""
    raw = np.asarray(raw_p, dtype=float)
    if raw.ndim != 1:
        raise InvalidData(f"expected a flat list of p-values, got shape {raw.shape}")
    if raw.size and (raw.min() < 0.0 or raw.max() > 1.0):
        raise InvalidData("p-values must lie in [0, 1]")
    return _sidak_transform(raw, raw.size)


def _make_report(ids, raw: np.ndarray, alpha: float) -> TestReport:
    alpha = _check_alpha(alpha)
    adjusted = _sidak_transform(raw, raw.size)
    reject = bool(adjusted.size and float(adjusted.min()) < alpha)
    return TestReport(tuple(ids), raw, adjusted, alpha, reject)


def test_vanishing_tetrads(cov: CovarianceSource, A, B, alpha: float) -> TestReport:
    """H_vt(X_A, X_B): the null that every tetrad of sigma[A, B] vanishes.

    Rejects when any Sidak-adjusted Wishart p-value is below alpha; a
    retained null is consistent with all tetrads vanishing.
    """
    ids, raw = wishart_pvalues(cov, A, B)
    return _make_report(ids, raw, alpha)


def fisher_pvalue(rho_hat: float, n: int, cond_size: int) -> float:
    """Two-tailed p-value of z = sqrt(n - cond_size - 3) * arctanh(rho).

    A perfect correlation |rho| >= 1 gives p = 0 rather than an error.
    """
    dof = n - cond_size - 3
    if dof < 1:
        raise InsufficientSamples(
            f"Fisher test needs n - |cond| - 3 >= 1, got n = {n}, |cond| = {cond_size}"
        )
    rho_hat = float(rho_hat)
    if abs(rho_hat) >= 1.0:
        return 0.0
    r = min(1.0 - 1e-12, max(-(1.0 - 1e-12), rho_hat))
    z = math.sqrt(dof) * 0.5 * math.log((1.0 + r) / (1.0 - r))
    return std_normal_two_tailed_p(z)


def test_conditional_independence(cov: CovarianceSource, j: int, A, B, alpha: float) -> TestReport:
    """H_ci(X_j, X_A | X_B): X_j independent of each node of A given B.

    One Fisher z-test per k in A against the partial correlation
    rho_{jk|B}; p-values are Sidak-adjusted and the null is rejected when
    any adjusted p-value is below alpha.
    """
    j = int(j)
    a_sorted = sorted({int(x) for x in A})
    b_sorted = sorted({int(x) for x in B})
    if not a_sorted:
        raise EmptyHypothesis("A must contain at least one variable")
    if j in a_sorted or j in b_sorted:
        raise InvalidData("the tested variable must not appear in A or B")
    if set(a_sorted) & set(b_sorted):
        raise InvalidData("A and B must be disjoint")
    n = _require_sample_n(cov, len(b_sorted) + 4, "the Fisher test")
    cond = tuple(b_sorted)
    ids = []
    raw = np.empty(len(a_sorted))
    for m, k in enumerate(a_sorted):
        rho = partial_correlation(cov, j, k, b_sorted)
        raw[m] = fisher_pvalue(rho, n, len(b_sorted))
        ids.append((j, k, cond))
    return _make_report(ids, raw, alpha)

"""Dense symmetric-matrix primitives used by the test statistics.

Sample covariance, small-minor determinants, partial correlations, and the
standard normal tail. All functions are pure; nothing here mutates its
arguments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    InsufficientSamples,
    InvalidData,
    ShapeError,
    SingularMatrix,
)

_SQRT2 = math.sqrt(2.0)

# Condition-number threshold above which a conditioning submatrix is
# declared singular.
_COND_LIMIT = 1e12


@dataclass(frozen=True)
class DataMatrix:
    """An n x p sample matrix with named columns.

    Rows are samples, columns are observed variables. Entries must be
    finite and column names unique.
    """

    values: np.ndarray
    column_names: tuple[str, ...]

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2:
            raise ShapeError(f"data must be 2-dimensional, got shape {values.shape}")
        n, p = values.shape
        if n < 1 or p < 1:
            raise ShapeError(f"data must have at least one row and column, got {n}x{p}")
        if not np.all(np.isfinite(values)):
            raise InvalidData("data contains non-finite entries")
        names = tuple(str(c) for c in self.column_names)
        if len(names) != p:
            raise ShapeError(f"{len(names)} column names for {p} columns")
        if len(set(names)) != p:
            raise InvalidData("column names are not unique")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "column_names", names)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class CovarianceSource:
    """A p x p covariance matrix together with its effective sample size.

    n_eff is a positive integer for sample covariances and None for exact
    population covariances (only usable by oracles, not by tests). The
    matrix must be symmetric to within 1e-12 relative tolerance and is
    stored exactly symmetrized. A zero diagonal entry is tolerated (it
    arises from constant data columns); consumers that need positive
    variances raise their own errors.
    """

    sigma: np.ndarray
    n_eff: int | None

    def __post_init__(self) -> None:
        sigma = np.asarray(self.sigma, dtype=float)
        if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1]:
            raise ShapeError(f"covariance must be square, got shape {sigma.shape}")
        if not np.all(np.isfinite(sigma)):
            raise InvalidData("covariance contains non-finite entries")
        scale = float(np.abs(sigma).max()) if sigma.size else 0.0
        asym = float(np.abs(sigma - sigma.T).max()) if sigma.size else 0.0
        if asym > 1e-12 * max(scale, 1e-300):
            raise InvalidData(f"covariance is not symmetric (max asymmetry {asym:g})")
        if np.any(np.diag(sigma) < 0.0):
            raise InvalidData("covariance has a negative diagonal entry")
        if self.n_eff is not None and (int(self.n_eff) != self.n_eff or self.n_eff < 1):
            raise InvalidData(f"n_eff must be a positive integer or None, got {self.n_eff!r}")
        object.__setattr__(self, "sigma", (sigma + sigma.T) / 2.0)
        object.__setattr__(self, "n_eff", None if self.n_eff is None else int(self.n_eff))

    @property
    def p(self) -> int:
        return self.sigma.shape[0]

    @property
    def is_population(self) -> bool:
        return self.n_eff is None


def sample_covariance(data: DataMatrix) -> CovarianceSource:
    """Mean-centered covariance with divisor n-1; n_eff = n.

    Args:
        data: sample matrix with at least 2 rows.

    Returns:
        CovarianceSource whose matrix is exactly symmetric.
    """
    values = data.values
    n = values.shape[0]
    if n < 2:
        raise InsufficientSamples(f"need at least 2 samples, got {n}")
    if not np.all(np.isfinite(values)):
        raise InvalidData("data contains non-finite entries")
    centered = values - values.mean(axis=0)
    sigma = centered.T @ centered / (n - 1)
    sigma = (sigma + sigma.T) / 2.0
    return CovarianceSource(sigma, n_eff=n)


def _det2(m: np.ndarray) -> np.ndarray:
    return m[..., 0, 0] * m[..., 1, 1] - m[..., 0, 1] * m[..., 1, 0]


def _det3(m: np.ndarray) -> np.ndarray:
    return (
        m[..., 0, 0] * (m[..., 1, 1] * m[..., 2, 2] - m[..., 1, 2] * m[..., 2, 1])
        - m[..., 0, 1] * (m[..., 1, 0] * m[..., 2, 2] - m[..., 1, 2] * m[..., 2, 0])
        + m[..., 0, 2] * (m[..., 1, 0] * m[..., 2, 1] - m[..., 1, 1] * m[..., 2, 0])
    )


def _det4(m: np.ndarray) -> np.ndarray:
    # First-row cofactor expansion into 3x3 minors.
    rest = m[..., 1:, :]
    out = m[..., 0, 0] * _det3(rest[..., :, [1, 2, 3]])
    out = out - m[..., 0, 1] * _det3(rest[..., :, [0, 2, 3]])
    out = out + m[..., 0, 2] * _det3(rest[..., :, [0, 1, 3]])
    out = out - m[..., 0, 3] * _det3(rest[..., :, [0, 1, 2]])
    return out


def _det_small(m: np.ndarray) -> np.ndarray:
    """Determinant of stacked k x k matrices, k in 1..4, by cofactor expansion."""
    k = m.shape[-1]
    if k == 1:
        return m[..., 0, 0]
    if k == 2:
        return _det2(m)
    if k == 3:
        return _det3(m)
    if k == 4:
        return _det4(m)
    raise ShapeError(f"determinants only supported up to 4x4, got {k}x{k}")


def _check_indices(idx, p: int, what: str) -> list[int]:
    out = []
    for i in idx:
        i = int(i)
        if i < 0 or i >= p:
            raise IndexError(f"{what} index {i} out of range for {p} variables")
        out.append(i)
    return out


def submatrix_det(cov: CovarianceSource, rows, cols) -> float:
    """Determinant of sigma[rows, cols] for up to 4 rows/columns.

    Computed by direct cofactor expansion; for two rows this is exactly
    the tetrad sigma[r0,c0]*sigma[r1,c1] - sigma[r0,c1]*sigma[r1,c0].
    """
    rows = _check_indices(rows, cov.p, "row")
    cols = _check_indices(cols, cov.p, "column")
    if len(rows) != len(cols):
        raise ShapeError(f"{len(rows)} rows vs {len(cols)} columns")
    if not 1 <= len(rows) <= 4:
        raise ShapeError(f"submatrix must be 1x1 up to 4x4, got {len(rows)}x{len(cols)}")
    sub = cov.sigma[np.ix_(rows, cols)]
    return float(_det_small(sub))


def partial_correlation(cov: CovarianceSource, i: int, j: int, cond) -> float:
    """Partial correlation rho_{ij|cond} from the precision matrix.

    The covariance submatrix over {i, j} union cond is inverted and
    rho = -P01 / sqrt(P00 * P11). The result is clamped to [-1, 1].
    Symmetric in i and j by construction.
    """
    cond = sorted(_check_indices(cond, cov.p, "conditioning"))
    (i, j) = _check_indices((i, j), cov.p, "variable")
    if i == j:
        raise InvalidData("partial correlation requires two distinct variables")
    if i in cond or j in cond:
        raise InvalidData("conditioning set must not contain the tested variables")
    a, b = (i, j) if i < j else (j, i)
    idx = [a, b] + cond
    sub = cov.sigma[np.ix_(idx, idx)]
    cond_number = np.linalg.cond(sub)
    if not np.isfinite(cond_number) or cond_number > _COND_LIMIT:
        raise SingularMatrix(f"conditioning submatrix over {idx} is numerically singular")
    prec = np.linalg.inv(sub)
    denom = prec[0, 0] * prec[1, 1]
    if denom <= 0.0:
        raise SingularMatrix(f"conditioning submatrix over {idx} is not positive definite")
    r = -prec[0, 1] / math.sqrt(denom)
    return float(min(1.0, max(-1.0, r)))


def std_normal_two_tailed_p(z: float) -> float:
    """Two-tailed standard normal p-value, 2*Q(|z|).

    Uses the complementary error function, exact to double precision:
    2*Q(|z|) = erfc(|z| / sqrt(2)).
    """
    if not math.isfinite(z):
        raise InvalidData(f"z must be finite, got {z!r}")
    return math.erfc(abs(z) / _SQRT2)

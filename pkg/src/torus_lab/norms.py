"""Scalar norms on the split torus and on finite-rank operators.

Space integrals are uniform Riemann sums on the sampling grid.  They are exact
for ``L^2`` of band-limited fields whose grid resolves the band, and carry a
quadrature bias for other exponents that shrinks as the grid is refined.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg

from .admissibility import as_float
from .errors import NumericDomainError, ParameterDomainError
from .spectral import (
    FrequencyLattice,
    SpectralField,
    Trajectory,
    apply_multiplier,
    bessel_symbol,
    bessel_y_symbol,
)

__all__ = [
    "FiniteOperator",
    "lp_mean",
    "mixed_norm_values",
    "mixed_space_norm",
    "time_norm",
    "spacetime_norm",
    "sobolev_norm",
    "lr_sobolev_norm",
    "partial_sobolev_norm",
    "mixed_besov_norm",
    "singular_values",
    "lp_of_vector",
    "schatten_norm",
    "sobolev_schatten_norm",
    "operator_sobolev_schatten_norm",
    "NORM_CSV_COLUMNS",
]

NORM_CSV_COLUMNS = ("norm_name", "d", "k", "N", "M", "s", "q", "r", "r_tilde", "alpha", "value")


def _exp(p, name: str, minimum: float = 1.0) -> float:
    v = as_float(p)
    if not v >= minimum:
        raise ParameterDomainError(f"{name} must be >= {minimum}, got {p}")
    return v


def lp_mean(a: np.ndarray, p: float, axes) -> np.ndarray:
    """``(mean |a|^p)^(1/p)`` over ``axes``; ``max`` for ``p = inf``.

    ``a`` must already be non-negative.  Exponents in ``(0, 1)`` give the
    usual quasi-norm.
    """
    if math.isinf(p):
        return np.max(a, axis=axes)
    if p == 2:
        return np.sqrt(np.mean(a * a, axis=axes))
    if p == 1:
        return np.mean(a, axis=axes)
    return np.mean(a ** p, axis=axes) ** (1.0 / p)


def mixed_norm_values(values: np.ndarray, d: int, k: int, r, r_tilde) -> np.ndarray:
    """``L^r_x L^{r_tilde}_y`` norms of grid samples over the trailing ``d`` axes.

    Leading axes are kept, so a stack of time slices returns one norm per
    slice.  No range checks are made on the exponents.
    """
    r, rt = as_float(r), as_float(r_tilde)
    a = np.abs(values)
    inner = lp_mean(a, rt, tuple(range(-k, 0)))
    if d == k:
        return inner
    return lp_mean(inner, r, tuple(range(-(d - k), 0)))


def mixed_space_norm(field, r, r_tilde, k: int | None = None) -> float:
    """Mixed Lebesgue norm ``(int_x (int_y |f|^r_tilde)^(r/r_tilde))^(1/r)``.

    Parameters
    ----------
    field : SpectralField or ndarray
        A field, or raw grid samples with ``d`` axes (then ``k`` is required).
    r, r_tilde : float, Fraction, str or inf
        Outer (x) and inner (y) exponents, both at least 1.
    """
    r = _exp(r, "r")
    rt = _exp(r_tilde, "r_tilde")
    if isinstance(field, SpectralField):
        values, d, k = field.samples, field.d, field.k
    else:
        values = np.asarray(field)
        d = values.ndim
        if k is None:
            raise ParameterDomainError("k is required for raw samples")
    return float(mixed_norm_values(values, d, k, r, rt))


def time_norm(values: np.ndarray, weights: np.ndarray, q) -> float:
    """Weighted ``L^q`` norm of per-time values."""
    q = _exp(q, "q")
    values = np.abs(np.asarray(values, dtype=float))
    if math.isinf(q):
        return float(values.max())
    return float(np.sum(np.asarray(weights) * values ** q) ** (1.0 / q))


def spacetime_norm(traj: Trajectory, q, r, r_tilde, chunk: int = 64) -> float:
    """``L^q_t L^r_x L^{r_tilde}_y`` norm of a trajectory."""
    if len(traj) == 0:
        raise ParameterDomainError("empty trajectory")
    _exp(r, "r"), _exp(r_tilde, "r_tilde")
    per_time = np.concatenate([
        np.atleast_1d(mixed_norm_values(block, traj.d, traj.k, r, r_tilde))
        for block in traj.iter_sample_chunks(chunk)
    ])
    return time_norm(per_time, traj.weights, q)


def sobolev_norm(field: SpectralField, s: float) -> float:
    """``H^s`` norm ``(sum (1+|xi|^2)^s |a(xi)|^2)^(1/2)``."""
    w = (1.0 + field.lattice.norms_sq) ** float(s)
    return float(np.sqrt(np.sum(w * np.abs(field.coeffs) ** 2)))


def lr_sobolev_norm(field: SpectralField, s: float, r) -> float:
    """``W^{s,r}`` norm ``||<grad>^s f||_{L^r}``; exact from coefficients when ``r = 2``."""
    r = _exp(r, "r")
    if r == 2:
        return sobolev_norm(field, s)
    g = apply_multiplier(field, bessel_symbol(field.lattice, s))
    return float(lp_mean(np.abs(g.samples), r, tuple(range(-field.d, 0))))


def partial_sobolev_norm(field: SpectralField, s: float, q, k: int | None = None) -> float:
    """Partial-regularity norm: ``H^{1/q}`` in all variables plus ``s - 1/q`` more in ``y``.

    Computed as ``(sum (1+|xi_2|^2)^(s-1/q) (1+|xi|^2)^(1/q) |a|^2)^(1/2)``.
    A warning is emitted when ``s`` lies outside ``[1/q, 1 + 1/q]``.
    """
    if k is not None and k != field.k:
        raise ParameterDomainError(f"field is split with k={field.k}, not {k}")
    iq = 1.0 / _exp(q, "q")
    if not (iq - 1e-15 <= s <= 1 + iq + 1e-15):
        warnings.warn(f"s={s} outside the range [1/q, 1+1/q] = [{iq:g}, {1 + iq:g}]", stacklevel=2)
    lat = field.lattice
    w = (1.0 + lat.y_norms_sq) ** (s - iq) * (1.0 + lat.norms_sq) ** iq
    return float(np.sqrt(np.sum(w * np.abs(field.coeffs) ** 2)))


def mixed_besov_norm(field: SpectralField, s: float, r, r_tilde, profile: str = "sharp") -> float:
    """``sup_N N^s ||P_N f||_{L^r_x L^{r_tilde}_y}`` over the dyadic levels of the band."""
    from .littlewood_paley import ProjectorBank

    bank = ProjectorBank.for_lattice(field.lattice, profile)
    best = 0.0
    for N, comp in zip(bank.levels, bank.components(field)):
        val = float(N) ** s * float(mixed_norm_values(comp, field.d, field.k, r, r_tilde))
        best = max(best, val)
    return best


# ---------------------------------------------------------------------------
# operators


@dataclass(frozen=True, eq=False)
class FiniteOperator:
    """A dense matrix acting on a discretized Hilbert space.

    Parameters
    ----------
    matrix : ndarray
        Square complex matrix.
    rows, cols : ndarray, optional
        Labels of the row and column basis elements (lattice or grid points).
    """

    matrix: np.ndarray
    rows: np.ndarray | None = None
    cols: np.ndarray | None = None

    def __post_init__(self):
        m = np.asarray(self.matrix)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ParameterDomainError(f"operator matrix must be square, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise NumericDomainError("operator matrix has non-finite entries")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def singular_values(op) -> np.ndarray:
    """Singular values of a matrix or :class:`FiniteOperator`."""
    m = op.matrix if isinstance(op, FiniteOperator) else np.asarray(op)
    if not np.all(np.isfinite(m)):
        raise NumericDomainError("matrix has non-finite entries")
    try:
        return scipy.linalg.svdvals(m)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericDomainError(f"SVD failed: {exc}") from exc


def lp_of_vector(v: np.ndarray, p) -> float:
    """``l^p`` norm of a vector, scaled to avoid overflow."""
    p = _exp(p, "alpha")
    a = np.abs(np.asarray(v, dtype=float)).ravel()
    if a.size == 0:
        return 0.0
    top = a.max()
    if top == 0 or math.isinf(p):
        return float(top)
    return float(top * np.sum((a / top) ** p) ** (1.0 / p))


def schatten_norm(op, alpha) -> float:
    """Schatten-``alpha`` norm: the ``l^alpha`` norm of the singular values."""
    _exp(alpha, "alpha")
    return lp_of_vector(singular_values(op), alpha)


def sobolev_schatten_norm(gamma, alpha_prime, s: float = 0.0) -> float:
    """``|| <grad>^s gamma <grad>^s ||`` in the Schatten class of exponent ``alpha_prime``.

    Parameters
    ----------
    gamma : DensityMatrix or OrthonormalEnsemble
        Finite-rank operator ``sum_j lambda_j |a_j><a_j|`` given by its frames
        (rows of coefficient vectors), weights and lattice.  Dense matrices
        go through :func:`operator_sobolev_schatten_norm`.
    alpha_prime : exponent
    s : float
        Regularity weight.

    Notes
    -----
    For frames the operator is never formed: with ``B`` the weighted frame
    matrix and ``B^T = Q R``, the nonzero singular values are those of the
    small matrix ``R diag(lambda) R^H``.
    """
    if hasattr(gamma, "frames"):
        lat: FrequencyLattice = gamma.lattice
        w = bessel_symbol(lat, s).ravel()
        B = np.asarray(gamma.frames) * w[None, :]
        lam = np.asarray(gamma.weights, dtype=float)
        if B.shape[0] == 0:
            return 0.0
        _, R = np.linalg.qr(B.T)
        small = (R * lam[None, :]) @ R.conj().T
        return schatten_norm(small, alpha_prime)
    raise ParameterDomainError("use operator_sobolev_schatten_norm for dense matrices")


def operator_sobolev_schatten_norm(matrix: np.ndarray, lattice: FrequencyLattice, alpha_prime, s: float = 0.0) -> float:
    """Sobolev-Schatten norm of a dense operator in the lexicographic coefficient basis."""
    w = bessel_symbol(lattice, s).ravel()
    m = np.asarray(matrix)
    if m.shape != (lattice.size, lattice.size):
        raise ParameterDomainError("matrix size does not match the lattice")
    return schatten_norm(w[:, None] * m * w[None, :], alpha_prime)



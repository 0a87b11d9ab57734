"""Dyadic frequency projectors, square functions and the equivalence probes built on them.

Two cutoff profiles are available.  ``sharp`` uses the indicator of the unit
cube, so ``P_{<=N}`` keeps frequencies with ``max_i |xi_i| <= N``.  ``smooth``
uses the radial bump ``phi(rho) = h(2 - rho) / (h(2 - rho) + h(rho - 1))``
with ``h(s) = exp(-1/s)`` for ``s > 0`` and ``0`` otherwise, so ``phi = 1`` on
``rho <= 1`` and ``phi = 0`` on ``rho >= 2``.  In both cases
``P_N = P_{<=N} - P_{<=N/2}`` for ``N > 1`` and ``P_1 = P_{<=1}``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .ensemble import OrthonormalEnsemble
from .errors import NumericDomainError, ParameterDomainError
from .norms import mixed_norm_values
from .admissibility import as_float
from .spectral import (
    FrequencyLattice,
    SpectralField,
    bessel_symbol,
    coeffs_to_samples,
    next_pow2,
)

__all__ = [
    "PROFILES",
    "CutoffProfile",
    "bump_h",
    "bump_phi",
    "leq_symbol",
    "dyadic_symbol",
    "ProjectorBank",
    "project_leq",
    "project_dyadic",
    "square_function_samples",
    "square_function_norm",
    "LPScanResult",
    "lp_equivalence_scan",
    "density_square_norm",
    "density_norm",
    "density_lp_ratio",
    "shell_family",
    "bernstein_ratio",
    "l2_extension_ratio",
]

PROFILES = ("sharp", "smooth")


def bump_h(s: np.ndarray) -> np.ndarray:
    """``exp(-1/s)`` for ``s > 0`` and ``0`` otherwise."""
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    pos = s > 0
    out[pos] = np.exp(-1.0 / s[pos])
    return out


def bump_phi(rho: np.ndarray) -> np.ndarray:
    """Smooth radial cutoff: 1 on ``[0, 1]``, 0 on ``[2, inf)``, monotone between."""
    rho = np.asarray(rho, dtype=float)
    a = bump_h(2.0 - rho)
    b = bump_h(rho - 1.0)
    return a / (a + b)


@dataclass(frozen=True)
class CutoffProfile:
    """Cutoff family used to build ``P_{<=N}``."""

    kind: str = "smooth"

    def __post_init__(self):
        if self.kind not in PROFILES:
            raise ParameterDomainError(f"unknown profile {self.kind!r}; choose from {PROFILES}")

    def leq(self, lattice: FrequencyLattice, N: float) -> np.ndarray:
        if self.kind == "sharp":
            return (lattice.sup_norms <= N).astype(float)
        return bump_phi(np.sqrt(lattice.norms_sq) / N)

    def top_level(self, lattice: FrequencyLattice) -> int:
        """Smallest dyadic ``N`` with ``P_{<=N}`` equal to the identity on the lattice."""
        if self.kind == "sharp":
            return next_pow2(lattice.N)
        return next_pow2(math.ceil(math.sqrt(int(lattice.norms_sq.max()))))


def _profile(profile) -> CutoffProfile:
    return profile if isinstance(profile, CutoffProfile) else CutoffProfile(profile)


def _check_dyadic(N) -> int:
    if isinstance(N, bool) or int(N) != N or N < 1 or (int(N) & (int(N) - 1)):
        raise ParameterDomainError(f"N must be a dyadic integer 1, 2, 4, ..., got {N}")
    return int(N)


def leq_symbol(lattice: FrequencyLattice, N: int, profile="smooth") -> np.ndarray:
    """Multiplier of ``P_{<=N}`` on the lattice."""
    return _profile(profile).leq(lattice, _check_dyadic(N))


def dyadic_symbol(lattice: FrequencyLattice, N: int, profile="smooth") -> np.ndarray:
    """Multiplier of ``P_N``."""
    prof = _profile(profile)
    N = _check_dyadic(N)
    top = prof.leq(lattice, N)
    return top if N == 1 else top - prof.leq(lattice, N // 2)


def project_leq(field: SpectralField, N: int, profile="smooth") -> SpectralField:
    """``P_{<=N} f``."""
    return field.with_coeffs(field.coeffs * leq_symbol(field.lattice, N, profile))


def project_dyadic(field: SpectralField, N: int, profile="smooth") -> SpectralField:
    """``P_N f``."""
    return field.with_coeffs(field.coeffs * dyadic_symbol(field.lattice, N, profile))


class ProjectorBank:
    """Cached dyadic multipliers ``psi_N`` for ``N = 1, 2, 4, ..., N_max``.

    Parameters
    ----------
    lattice : FrequencyLattice
    profile : str or CutoffProfile
    N_max : int, optional
        Top level.  Defaults to the smallest level at which ``P_{<=N}`` is the
        identity on the lattice, so the bank is a partition of unity there.
    """

    def __init__(self, lattice: FrequencyLattice, profile="smooth", N_max: int | None = None):
        self.lattice = lattice
        self.profile = _profile(profile)
        top = self.profile.top_level(lattice) if N_max is None else _check_dyadic(N_max)
        self.levels = [1 << j for j in range(top.bit_length())]
        self.symbols = np.stack([dyadic_symbol(lattice, N, self.profile) for N in self.levels])

    @classmethod
    def for_lattice(cls, lattice: FrequencyLattice, profile="smooth") -> "ProjectorBank":
        return cls(lattice, profile)

    @property
    def kind(self) -> str:
        return self.profile.kind

    def partition(self) -> np.ndarray:
        """``sum_N psi_N`` on the lattice."""
        return self.symbols.sum(axis=0)

    def components(self, field: SpectralField) -> np.ndarray:
        """Grid samples of ``P_N f`` for every level, stacked on axis 0."""
        return self.components_of(field.coeffs, field.M)

    def components_of(self, coeffs: np.ndarray, M: int) -> np.ndarray:
        """Like :meth:`components` for a coefficient array with optional batch axes.

        The level axis is placed first.
        """
        coeffs = np.asarray(coeffs)
        lead = coeffs.ndim - self.lattice.d
        sym = self.symbols.reshape((len(self.levels),) + (1,) * lead + self.lattice.shape)
        return coeffs_to_samples(sym * coeffs[None], self.lattice.d, M)


def square_function_samples(field: SpectralField, profile="smooth") -> np.ndarray:
    """Grid samples of ``(sum_N |P_N f|^2)^(1/2)``."""
    comps = ProjectorBank(field.lattice, profile).components(field)
    return np.sqrt(np.sum(np.abs(comps) ** 2, axis=0))


def _open_range(r, name: str, lower: float = 1.0) -> float:
    v = as_float(r)
    if not lower < v < math.inf:
        raise ParameterDomainError(f"{name} must lie in ({lower:g}, inf), got {r}")
    return v


def square_function_norm(field: SpectralField, r, r_tilde, profile="smooth") -> float:
    """Mixed norm of the Littlewood-Paley square function; requires ``1 < r, r_tilde < inf``."""
    r = _open_range(r, "r")
    rt = _open_range(r_tilde, "r_tilde")
    return float(mixed_norm_values(square_function_samples(field, profile), field.d, field.k, r, rt))


@dataclass(frozen=True)
class LPScanResult:
    """Extreme ratios of a Littlewood-Paley scan."""

    min_ratio: float
    max_ratio: float
    ratios: tuple

    @property
    def spread(self) -> float:
        return self.max_ratio / self.min_ratio


def lp_equivalence_scan(sampler: Callable[[np.random.Generator], SpectralField], r, r_tilde,
                        trials: int, profile="smooth", seed: int = 0) -> LPScanResult:
    """Ratios ``||S f|| / ||f||`` of square-function norm to mixed norm over sampled fields.

    Parameters
    ----------
    sampler : callable
        Draws a field from a ``numpy`` generator.
    trials : int
        Number of fields, at least 1.
    """
    if trials < 1:
        raise ParameterDomainError("trials must be >= 1")
    r = _open_range(r, "r")
    rt = _open_range(r_tilde, "r_tilde")
    rng = np.random.default_rng(seed)
    ratios = []
    for _ in range(trials):
        f = sampler(rng)
        num = mixed_norm_values(square_function_samples(f, profile), f.d, f.k, r, rt)
        den = mixed_norm_values(f.samples, f.d, f.k, r, rt)
        if den == 0:
            raise NumericDomainError("sampled field has zero norm")
        ratios.append(float(num / den))
    return LPScanResult(min(ratios), max(ratios), tuple(ratios))


def _density_exponents(r, r_tilde) -> tuple:
    r = _open_range(r, "r", 0.5)
    rt = _open_range(r_tilde, "r_tilde", 0.5)
    if r < 1 or rt < 1:
        warnings.warn("exponent below 1: the density norm is only a quasi-norm", stacklevel=3)
    return r, rt


def density_square_norm(ensemble: OrthonormalEnsemble, weights=None, r=2, r_tilde=2, profile="smooth") -> float:
    """Mixed norm of ``sum_N sum_j lambda_j |P_N u_j|^2``.

    Exponents may lie in ``(1/2, inf)``; below 1 a warning flags quasi-norm mode.
    """
    r, rt = _density_exponents(r, r_tilde)
    lam = ensemble.weights if weights is None else np.asarray(weights, dtype=float)
    if np.any(lam <= 0):
        raise ParameterDomainError("density weights must be positive")
    bank = ProjectorBank(ensemble.lattice, profile)
    comps = bank.components_of(ensemble.coeffs(), ensemble.M)  # (levels, J, grid)
    dens = np.tensordot(np.abs(comps) ** 2, lam, axes=(1, 0)).sum(axis=0)
    lat = ensemble.lattice
    return float(mixed_norm_values(dens, lat.d, lat.k, r, rt))


def density_norm(ensemble: OrthonormalEnsemble, weights=None, r=2, r_tilde=2) -> float:
    """Mixed norm of ``sum_j lambda_j |u_j|^2``."""
    r, rt = _density_exponents(r, r_tilde)
    lam = ensemble.weights if weights is None else np.asarray(weights, dtype=float)
    u = coeffs_to_samples(ensemble.coeffs(), ensemble.lattice.d, ensemble.M)
    dens = np.tensordot(lam, np.abs(u) ** 2, axes=(0, 0))
    lat = ensemble.lattice
    return float(mixed_norm_values(dens, lat.d, lat.k, r, rt))


def density_lp_ratio(ensemble: OrthonormalEnsemble, r, r_tilde, profile="smooth", weights=None) -> float:
    """``density_square_norm / density_norm``."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        den = density_norm(ensemble, weights, r, r_tilde)
        num = density_square_norm(ensemble, weights, r, r_tilde, profile)
    if den == 0:
        raise NumericDomainError("density vanishes identically")
    return num / den


def shell_family(lattice: FrequencyLattice, N: int, J: int, rng: np.random.Generator) -> np.ndarray:
    """Random coefficients ``(J,) + lattice.shape`` supported on the cube shell ``N``.

    The shell is ``N/2 < max_i |xi_i| <= N`` (``max_i |xi_i| <= 1`` for ``N = 1``).
    """
    N = _check_dyadic(N)
    if N > lattice.N:
        raise ParameterDomainError(f"shell {N} does not fit in a lattice of radius {lattice.N}")
    mask = dyadic_symbol(lattice, N, "sharp") > 0
    z = rng.standard_normal((J,) + lattice.shape) + 1j * rng.standard_normal((J,) + lattice.shape)
    return z * mask


def _family_coeffs(family) -> tuple:
    if isinstance(family, SpectralField):
        family = [family]
    fields = list(family)
    if not fields:
        raise ParameterDomainError("empty family")
    lat, M = fields[0].lattice, fields[0].M
    if any(f.lattice != lat or f.M != M for f in fields):
        raise ParameterDomainError("family members must share lattice and grid")
    return np.stack([f.coeffs for f in fields]), lat, M


def _vector_norm(coeffs: np.ndarray, lat: FrequencyLattice, M: int, r, rt) -> float:
    u = coeffs_to_samples(coeffs, lat.d, M)
    sq = np.sqrt(np.sum(np.abs(u) ** 2, axis=0))
    return float(mixed_norm_values(sq, lat.d, lat.k, r, rt))


def bernstein_ratio(family, rho: float, N: int, r, r_tilde, profile="sharp") -> float:
    """Vector Bernstein ratio ``||(sum |P_N <grad>^rho g_j|^2)^(1/2)|| / (N^rho ||(sum |P_N g_j|^2)^(1/2)||)``.

    Parameters
    ----------
    family : SpectralField or sequence of SpectralField
        Fields supported where ``P_N`` is nonzero.
    """
    C, lat, M = _family_coeffs(family)
    N = _check_dyadic(N)
    psi = dyadic_symbol(lat, N, profile)
    if np.any(np.abs(C[:, psi == 0]) > 0):
        raise ParameterDomainError(f"family is not supported on the shell N={N}")
    base = C * psi
    den = float(N) ** rho * _vector_norm(base, lat, M, r, r_tilde)
    if den == 0:
        raise NumericDomainError("undefined ratio: the family vanishes on the shell")
    num = _vector_norm(base * bessel_symbol(lat, rho), lat, M, r, r_tilde)
    return num / den


def l2_extension_ratio(family, symbol: np.ndarray, r, r_tilde) -> float:
    """``||(sum |T f_j|^2)^(1/2)|| / ||(sum |f_j|^2)^(1/2)||`` for the multiplier ``T``."""
    C, lat, M = _family_coeffs(family)
    den = _vector_norm(C, lat, M, r, r_tilde)
    if den == 0:
        raise NumericDomainError("undefined ratio: the family vanishes")
    return _vector_norm(C * symbol, lat, M, r, r_tilde) / den

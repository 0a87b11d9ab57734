"""Finite orthonormal systems and the density matrices they define."""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from .errors import AliasingError, ParameterDomainError
from .spectral import (
    FrequencyLattice,
    SpectralField,
    coeffs_to_samples,
    default_grid_size,
    propagator_phase,
)

__all__ = [
    "GRAM_TOL",
    "OrthonormalEnsemble",
    "DensityMatrix",
    "make_ons",
    "gram_deviation",
    "density_samples",
    "density_field",
]

GRAM_TOL = 1e-10


def gram_deviation(frames: np.ndarray) -> float:
    """``max |G - I|`` for the Gram matrix of the rows of ``frames``."""
    frames = np.asarray(frames)
    if frames.shape[0] == 0:
        return 0.0
    G = frames.conj() @ frames.T
    return float(np.max(np.abs(G - np.eye(G.shape[0]))))


@dataclass(frozen=True, eq=False)
class OrthonormalEnsemble:
    """Orthonormal frames ``a_j`` on a lattice with non-negative weights ``lambda_j``.

    Parameters
    ----------
    lattice : FrequencyLattice
    frames : ndarray, shape (J, lattice.size)
        Row ``j`` holds the coefficients of ``f_j`` in lexicographic order.
    weights : ndarray, shape (J,)
    M : int, optional
        Sampling grid; defaults to the solver grid of the lattice.
    check : bool
        Verify orthonormality to :data:`GRAM_TOL`.
    """

    lattice: FrequencyLattice
    frames: np.ndarray
    weights: np.ndarray
    M: int = 0
    check: bool = dc_field(default=True, repr=False)

    def __post_init__(self):
        F = np.asarray(self.frames, dtype=complex)
        if F.ndim != 2 or F.shape[1] != self.lattice.size:
            raise ParameterDomainError(f"frames must have shape (J, {self.lattice.size}), got {F.shape}")
        lam = np.asarray(self.weights, dtype=float)
        if lam.shape != (F.shape[0],):
            raise ParameterDomainError("need one weight per frame")
        if not np.all(np.isfinite(lam)) or np.any(lam < 0):
            raise ParameterDomainError("weights must be finite and non-negative")
        if self.check and gram_deviation(F) > GRAM_TOL:
            raise ParameterDomainError(f"frames are not orthonormal (Gram deviation {gram_deviation(F):.3e})")
        F.flags.writeable = False
        lam.flags.writeable = False
        object.__setattr__(self, "frames", F)
        object.__setattr__(self, "weights", lam)
        object.__setattr__(self, "M", int(self.M) or default_grid_size(self.lattice.N))

    @property
    def rank(self) -> int:
        return self.frames.shape[0]

    @property
    def trace(self) -> float:
        return float(self.weights.sum())

    def coeffs(self) -> np.ndarray:
        """Frames reshaped to ``(J,) + lattice.shape``."""
        return self.frames.reshape((self.rank,) + self.lattice.shape)

    def field(self, j: int) -> SpectralField:
        return SpectralField(self.lattice, self.coeffs()[j], self.M)

    def gram_deviation(self) -> float:
        return gram_deviation(self.frames)

    def with_weights(self, weights) -> "OrthonormalEnsemble":
        return OrthonormalEnsemble(self.lattice, self.frames, weights, self.M, check=False)

    def with_frames(self, frames, check: bool = False) -> "OrthonormalEnsemble":
        return OrthonormalEnsemble(self.lattice, frames, self.weights, self.M, check=check)

    def on_grid(self, M: int) -> "OrthonormalEnsemble":
        return OrthonormalEnsemble(self.lattice, self.frames, self.weights, M, check=False)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """The operator ``gamma = sum_j lambda_j |u_j><u_j|`` of an ensemble."""

    ensemble: OrthonormalEnsemble

    @property
    def lattice(self) -> FrequencyLattice:
        return self.ensemble.lattice

    @property
    def frames(self) -> np.ndarray:
        return self.ensemble.frames

    @property
    def weights(self) -> np.ndarray:
        return self.ensemble.weights

    @property
    def M(self) -> int:
        return self.ensemble.M

    @property
    def trace(self) -> float:
        return self.ensemble.trace

    def matrix(self) -> np.ndarray:
        """Dense matrix in the lexicographic coefficient basis."""
        F = self.frames
        return (F.T * self.weights[None, :]) @ F.conj()


def make_ons(kind: str, J: int, lattice: FrequencyLattice, seed: int | None = None,
             weights=None, M: int = 0) -> OrthonormalEnsemble:
    """Generate an orthonormal ensemble.

    Parameters
    ----------
    kind : {"plane_waves", "random"}
        ``plane_waves`` takes the first ``J`` lattice characters in
        lexicographic order; ``random`` orthonormalizes a seeded complex
        Gaussian matrix by a QR factorization.
    J : int
        Number of frames, at most ``lattice.size``.
    seed : int, optional
        Seed for ``random``.
    weights : array_like, optional
        Defaults to all ones.
    """
    n = lattice.size
    if not 1 <= J <= n:
        raise ParameterDomainError(f"J={J} frames do not fit in a lattice of {n} points")
    if kind == "plane_waves":
        F = np.eye(J, n, dtype=complex)
    elif kind == "random":
        rng = np.random.default_rng(seed)
        Z = rng.standard_normal((n, J)) + 1j * rng.standard_normal((n, J))
        Q, R = np.linalg.qr(Z)
        # fix the phase ambiguity so the output depends only on the seed
        ph = np.diag(R) / np.abs(np.diag(R))
        F = (Q * ph[None, :]).T
    else:
        raise ParameterDomainError(f"unknown ensemble kind {kind!r}; use 'plane_waves' or 'random'")
    lam = np.ones(J) if weights is None else np.asarray(weights, dtype=float)
    return OrthonormalEnsemble(lattice, F, lam, M)


def density_samples(frames: np.ndarray, weights: np.ndarray, lattice: FrequencyLattice, M: int,
                    t=None) -> np.ndarray:
    """Grid samples of ``sum_j lambda_j |e^{it Delta} f_j|^2``.

    With ``t`` an array, a leading time axis is added.
    """
    J = frames.shape[0]
    coeffs = np.asarray(frames).reshape((J,) + lattice.shape)
    lam = np.asarray(weights, dtype=float)
    if t is None:
        u = coeffs_to_samples(coeffs, lattice.d, M)
        return np.tensordot(lam, np.abs(u) ** 2, axes=(0, 0))
    t = np.asarray(t, dtype=float)
    if t.ndim == 0:
        u = coeffs_to_samples(coeffs * propagator_phase(lattice, t), lattice.d, M)
        return np.tensordot(lam, np.abs(u) ** 2, axes=(0, 0))
    ph = propagator_phase(lattice, t)  # (n_t,) + shape
    u = coeffs_to_samples(ph[:, None] * coeffs[None], lattice.d, M)
    return np.tensordot(np.abs(u) ** 2, lam, axes=(1, 0))


def density_field(ensemble: OrthonormalEnsemble, t: float = 0.0) -> SpectralField:
    """Density at time ``t`` as a real field on the doubled band ``2N``."""
    lat2 = FrequencyLattice(ensemble.lattice.d, ensemble.lattice.k, 2 * ensemble.lattice.N)
    if ensemble.M < 2 * lat2.N + 1:
        raise AliasingError(f"grid of {ensemble.M} points cannot hold the density band {lat2.N}")
    rho = density_samples(ensemble.frames, ensemble.weights, ensemble.lattice, ensemble.M, t)
    return SpectralField.from_samples(rho.astype(complex), lat2)

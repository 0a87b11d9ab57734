"""Nonlinear Schrödinger flow with a convolution nonlinearity.

The model is ``i du/dt = H_0 u + G(u)`` where ``H_0`` is the generator of the
free flow ``U(t)`` (symbol ``-2 pi |xi|^2``), so that

    u(t) = U(t) f - i int_0^t U(t - s) G(u(s)) ds.

Three nonlinearities are supported, each with a sign ``sigma = +-1``:

* ``gauge``: ``G = w * (sigma |u|^(p-1) u)``
* ``non_gauge``: ``G = w * (sigma |u|^p)``
* ``hartree``: ``G = sigma (w * |u|^(p-1)) u``

All solvers work on the band of the initial datum: every nonlinear
evaluation is re-truncated to that band.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field as dc_field
from typing import Sequence

import numpy as np
import scipy.fft as sfft
from scipy.integrate import cumulative_trapezoid, trapezoid

from .admissibility import AdmissibleTriple, as_float, classify_triple, conjugate_exponent, nonlinear_triple
from .errors import (
    AliasingError,
    ClassificationError,
    DivergenceError,
    NumericDomainError,
    ParameterDomainError,
)
from .norms import mixed_norm_values, spacetime_norm, time_norm
from .spectral import (
    FrequencyLattice,
    SpectralField,
    Trajectory,
    bessel_symbol,
    bessel_y_symbol,
    coeffs_to_samples,
    propagator_phase,
    samples_to_coeffs,
    trapezoid_rule,
)

__all__ = [
    "VARIANTS",
    "NonlinearitySpec",
    "PotentialSpec",
    "SolverConfig",
    "delta_potential",
    "constant_potential",
    "gaussian_potential",
    "power_law_potential",
    "random_potential",
    "zero_potential",
    "eval_nonlinearity",
    "hartree_term",
    "duhamel_apply",
    "default_metric_triples",
    "PicardResult",
    "picard_map",
    "picard_solve",
    "splitstep_solve",
    "ProbeResult",
    "nonlinear_estimate_probe",
]

VARIANTS = ("gauge", "non_gauge", "hartree")
REAL_TOL = 1e-10


@dataclass(frozen=True)
class NonlinearitySpec:
    """Power nonlinearity of growth exponent ``p > 1``."""

    p: float = 2.0
    variant: str = "gauge"
    sign: int = 1

    def __post_init__(self):
        if not (isinstance(self.p, (int, float)) and self.p > 1 and math.isfinite(self.p)):
            raise ParameterDomainError(f"p must be a finite number > 1, got {self.p}")
        if self.variant not in VARIANTS:
            raise ParameterDomainError(f"unknown variant {self.variant!r}; choose from {VARIANTS}")
        if self.sign not in (1, -1):
            raise ParameterDomainError("sign must be +1 or -1")

    def pointwise(self, u: np.ndarray) -> np.ndarray:
        """``F_p(u)`` on samples (the ``hartree`` variant uses the gauge form)."""
        a = np.abs(u)
        if self.variant == "non_gauge":
            return self.sign * a ** self.p + 0j
        return self.sign * a ** (self.p - 1) * u


@dataclass(frozen=True, eq=False)
class PotentialSpec:
    """A real interaction potential given by its Fourier coefficients.

    Parameters
    ----------
    w : SpectralField
        Band-limited potential.  Its coefficients must be conjugate symmetric.
    regularity : str
        Free-form tag recording the intended regularity class.
    """

    w: SpectralField
    regularity: str = "W^{2/q,1}"

    def __post_init__(self):
        c = self.w.coeffs
        scale = max(1.0, float(np.max(np.abs(c))))
        flipped = np.conj(c[(slice(None, None, -1),) * c.ndim])
        if np.max(np.abs(c - flipped)) > REAL_TOL * scale:
            raise ParameterDomainError("potential is not real valued (coefficients are not conjugate symmetric)")

    @property
    def lattice(self) -> FrequencyLattice:
        return self.w.lattice

    @property
    def is_delta(self) -> bool:
        """True when all coefficients equal 1 (a band-limited Dirac mass)."""
        return bool(np.all(self.w.coeffs == 1))

    @property
    def is_zero(self) -> bool:
        return not np.any(self.w.coeffs)

    def grid_hat(self, M: int) -> np.ndarray:
        """Coefficients embedded in the ``M``-point DFT layout (zero outside the band)."""
        lat = self.lattice
        if M < 2 * lat.N + 1:
            raise AliasingError(f"potential band N={lat.N} does not fit a grid of {M} points")
        full = np.zeros((M,) * lat.d, dtype=complex)
        idx = np.arange(-lat.N, lat.N + 1) % M
        full[np.ix_(*([idx] * lat.d))] = self.w.coeffs
        return full


def _pot(lattice: FrequencyLattice, coeffs: np.ndarray, M: int, tag: str) -> PotentialSpec:
    return PotentialSpec(SpectralField(lattice, coeffs, M or 0), tag)


def delta_potential(lattice: FrequencyLattice, M: int = 0) -> PotentialSpec:
    """``w_hat = 1`` on the band: convolution acts as the identity there."""
    return _pot(lattice, np.ones(lattice.shape), M, "delta")


def constant_potential(lattice: FrequencyLattice, value: float = 1.0, M: int = 0) -> PotentialSpec:
    """``w = value``: convolution returns ``value`` times the mean."""
    return _pot(lattice, lattice.delta((0,) * lattice.d, value), M, "constant")


def zero_potential(lattice: FrequencyLattice, M: int = 0) -> PotentialSpec:
    return _pot(lattice, np.zeros(lattice.shape), M, "zero")


def gaussian_potential(lattice: FrequencyLattice, width: float = 0.1, strength: float = 1.0, M: int = 0) -> PotentialSpec:
    """Smooth even potential with ``w_hat(xi) = strength * exp(-(width |xi|)^2)``."""
    return _pot(lattice, strength * np.exp(-(width ** 2) * lattice.norms_sq), M, "smooth")


def power_law_potential(lattice: FrequencyLattice, a: float, M: int = 0) -> PotentialSpec:
    """Band-limited truncation of ``|x|^(-a)``: ``w_hat(xi) = |xi|^(a - d)`` for ``xi != 0``, ``w_hat(0) = 0``."""
    if not 0 < a < lattice.d:
        raise ParameterDomainError(f"need 0 < a < d, got a={a}")
    nsq = lattice.norms_sq.astype(float)
    c = np.zeros(lattice.shape)
    nz = nsq > 0
    c[nz] = nsq[nz] ** ((a - lattice.d) / 2.0)
    return _pot(lattice, c, M, f"|x|^-{a} truncated")


def random_potential(lattice: FrequencyLattice, rng: np.random.Generator, decay: float = 1.0, M: int = 0) -> PotentialSpec:
    """Random real potential with coefficients decaying like ``(1+|xi|^2)^(-decay)``."""
    z = lattice.random_coeffs(rng)
    z = 0.5 * (z + np.conj(z[(slice(None, None, -1),) * lattice.d]))
    return _pot(lattice, z * (1.0 + lattice.norms_sq) ** (-decay), M, "random")


@dataclass(frozen=True)
class SolverConfig:
    """Time grid and iteration controls.

    Attributes
    ----------
    T : float
        Final time.
    n_t : int
        Number of time samples on ``[0, T]`` (at least 16).
    max_picard : int
        Iteration cap.
    tol : float
        Fixed-point tolerance in the space-time metric.
    M : int
        Spatial grid (0 selects the grid of the initial datum).
    triples : tuple, optional
        Exponent triples of the metric; default from :func:`default_metric_triples`.
    substeps : int
        Split-step substeps per output interval.
    refine : bool
        Double the time sampling until the fixed point moves by less than ``tol/4``.
    max_refinements : int
    """

    T: float = 0.05
    n_t: int = 64
    max_picard: int = 60
    tol: float = 1e-12
    M: int = 0
    triples: tuple | None = None
    substeps: int = 1
    refine: bool = False
    max_refinements: int = 3

    def __post_init__(self):
        if self.n_t < 16:
            raise ParameterDomainError("n_t must be at least 16")
        if not self.tol > 0:
            raise ParameterDomainError("tol must be positive")
        if not (math.isfinite(self.T) and self.T != 0):
            raise ParameterDomainError("T must be finite and nonzero")
        if self.max_picard < 1 or self.substeps < 1:
            raise ParameterDomainError("max_picard and substeps must be >= 1")


class _Nonlinearity:
    """Batched evaluation of ``P_N G(u)`` on coefficient stacks."""

    def __init__(self, lattice: FrequencyLattice, M: int, w: PotentialSpec, spec: NonlinearitySpec):
        if (w.lattice.d, w.lattice.k) != (lattice.d, lattice.k):
            raise ParameterDomainError("potential and field live on different splits")
        if M < 2 * lattice.N + 1:
            raise AliasingError(f"grid of {M} points cannot resolve band N={lattice.N}")
        self.lattice, self.M, self.spec, self.w = lattice, M, spec, w
        self.d = lattice.d
        self.what = w.grid_hat(M)
        self.zero = w.is_zero
        self.delta = w.is_delta and w.lattice.N >= lattice.N
        # potential-type nonlinearity G = V(u) u with V real
        self.potential_form = spec.variant == "hartree" or (spec.variant == "gauge" and self.delta)

    def _band(self, full_hat: np.ndarray) -> np.ndarray:
        N, M = self.lattice.N, self.M
        idx = np.arange(-N, N + 1) % M
        return full_hat[(Ellipsis,) + np.ix_(*([idx] * self.d))]

    def potential(self, u: np.ndarray) -> np.ndarray:
        """Real grid potential ``V`` with ``G = V u`` (potential form only)."""
        axes = tuple(range(-self.d, 0))
        if self.spec.variant == "hartree":
            dens = np.abs(u) ** (self.spec.p - 1)
            V = sfft.ifftn(sfft.fftn(dens, axes=axes) * self.what, axes=axes).real
        else:
            V = np.abs(u) ** (self.spec.p - 1)
        return self.spec.sign * V

    def __call__(self, coeffs: np.ndarray) -> np.ndarray:
        if self.zero:
            return np.zeros_like(coeffs)
        axes = tuple(range(-self.d, 0))
        u = coeffs_to_samples(coeffs, self.d, self.M)
        if self.spec.variant == "hartree":
            G = self.potential(u) * u
            return samples_to_coeffs(G, self.d, self.lattice.N)
        F = self.spec.pointwise(u)
        Fh = sfft.fftn(F, axes=axes, norm="forward")
        return self._band(Fh * self.what)


def eval_nonlinearity(field: SpectralField, spec: NonlinearitySpec) -> SpectralField:
    """``F_p(u)`` evaluated on the grid and projected back to the band of ``field``."""
    F = spec.pointwise(field.samples)
    return field.with_coeffs(samples_to_coeffs(F, field.d, field.N))


def hartree_term(u: SpectralField, w: PotentialSpec, spec: NonlinearitySpec) -> SpectralField:
    """Nonlinearity ``G(u)`` (convolution with ``w``) on the band of ``u``."""
    if (w.lattice.d, w.lattice.k) != (u.d, u.k):
        raise ParameterDomainError("band mismatch: potential and field have different (d, k)")
    if w.w.M != u.M:
        raise ParameterDomainError(f"band mismatch: potential grid {w.w.M} vs field grid {u.M}")
    return u.with_coeffs(_Nonlinearity(u.lattice, u.M, w, spec)(u.coeffs))


def duhamel_apply(f: SpectralField, G_traj: Trajectory, t: float) -> SpectralField:
    """``U(t) f - i int_0^t U(t - s) G(s) ds`` with the composite trapezoid rule.

    ``G_traj`` must start at time 0; a final partial interval is handled by
    linear interpolation of the integrand.
    """
    if not G_traj.band_limited or G_traj.lattice != f.lattice:
        raise ParameterDomainError("G trajectory must be band-limited on the lattice of f")
    times = G_traj.times
    if times[0] != 0:
        raise ParameterDomainError("G trajectory must start at t = 0")
    if t < 0 or t > times[-1] * (1 + 1e-12):
        raise ParameterDomainError(f"t={t} beyond the trajectory span [0, {times[-1]}]")
    if t == 0:
        return f.with_coeffs(f.coeffs.copy())
    lat = f.lattice
    j = int(np.searchsorted(times, t, side="right"))  # nodes times[:j] <= t
    H = np.conj(propagator_phase(lat, times[:j])) * G_traj.coeffs[:j]
    integral = np.zeros(lat.shape, dtype=complex)
    if j > 1:
        integral = trapezoid(H, times[:j], axis=0)
    t_last = times[j - 1]
    if t > t_last:
        Hn = np.conj(propagator_phase(lat, times[j])) * G_traj.coeffs[j]
        theta = (t - t_last) / (times[j] - t_last)
        Ht = (1 - theta) * H[-1] + theta * Hn
        integral = integral + 0.5 * (t - t_last) * (H[-1] + Ht)
    return f.with_coeffs(propagator_phase(lat, t) * (f.coeffs - 1j * integral))


def default_metric_triples(d: int, k: int, p: float) -> tuple:
    """Metric triples for the Picard distance.

    For ``d >= 3`` and ``k = 2`` this is the triple of :func:`nonlinear_triple`
    with ``s = 1/2``; otherwise the diagonal triple ``r = r_tilde = p + 1``
    with ``2/q = d (1/2 - 1/r)``.
    """
    if d >= 3 and k == 2:
        try:
            return (nonlinear_triple(d, p, 0.5),)
        except ParameterDomainError:
            pass
    r = p + 1
    iq = d * (0.5 - 1.0 / r) / 2
    q = math.inf if iq == 0 else 1.0 / iq
    return (classify_triple(q, r, r, d, k),)


def _metric(coeffs: np.ndarray, lattice: FrequencyLattice, M: int, times, weights, triples) -> float:
    traj = Trajectory(times, weights, coeffs=coeffs, lattice=lattice, M=M)
    return max(spacetime_norm(traj, *t.floats()) for t in triples)


@dataclass
class PicardResult:
    """Outcome of :func:`picard_solve`."""

    trajectory: Trajectory
    history: list
    converged: bool
    iterations: int
    n_t: int
    refinement_change: float | None = None

    @property
    def ratios(self) -> list:
        h = self.history
        return [h[i + 1] / h[i] for i in range(len(h) - 1) if h[i] > 0]


def _resolve(f: SpectralField, w: PotentialSpec, spec: NonlinearitySpec, config: SolverConfig) -> tuple:
    M = config.M or f.M
    if w.w.M != M and w.lattice.N * 2 + 1 > M:
        raise AliasingError("potential band does not fit the solver grid")
    triples = config.triples
    if triples is None:
        triples = default_metric_triples(f.d, f.k, spec.p)
    else:
        triples = tuple(t if isinstance(t, AdmissibleTriple) else classify_triple(*t, f.d, f.k) for t in triples)
    return M, triples


def _picard_step(u, f_coeffs, phases, times, nonlin):
    G = nonlin(u)
    H = np.conj(phases) * G
    integral = cumulative_trapezoid(H, times, axis=0, initial=0)
    return phases * (f_coeffs[None] - 1j * integral)


def picard_map(traj: Trajectory, f: SpectralField, w: PotentialSpec, spec: NonlinearitySpec) -> Trajectory:
    """One application of the Duhamel map on the time grid of ``traj``."""
    lat = f.lattice
    phases = propagator_phase(lat, traj.times)
    nonlin = _Nonlinearity(lat, traj.M, w, spec)
    new = _picard_step(traj.coeffs, f.coeffs, phases, traj.times, nonlin)
    return Trajectory(traj.times, traj.weights, coeffs=new, lattice=lat, M=traj.M)


def _picard_once(f, w, spec, config, n_t, M, triples):
    lat = f.lattice
    times, weights = trapezoid_rule(0.0, config.T, n_t)
    phases = propagator_phase(lat, times)
    nonlin = _Nonlinearity(lat, M, w, spec)
    u = phases * f.coeffs[None]
    history, converged, streak = [], False, 0
    for _ in range(config.max_picard):
        with np.errstate(over="ignore", invalid="ignore"):
            new = _picard_step(u, f.coeffs, phases, times, nonlin)
        if not np.all(np.isfinite(new)):
            raise DivergenceError("Picard iterates blew up to non-finite values; try a smaller final time T",
                                  math.inf, history)
        with np.errstate(over="ignore"):
            dist = _metric(new - u, lat, M, times, weights, triples)
        history.append(dist)
        u = new
        if dist < config.tol:
            converged = True
            break
        if len(history) >= 2 and history[-2] > 0:
            ratio = dist / history[-2]
            streak = streak + 1 if ratio >= 1 else 0
            if streak >= 3:
                raise DivergenceError(
                    f"Picard iteration is not contracting (ratio {ratio:.3g} for 3 iterations); "
                    f"try a smaller final time T", ratio, history)
    traj = Trajectory(times, weights, coeffs=u, lattice=lat, M=M)
    return traj, history, converged


def picard_solve(f: SpectralField, w: PotentialSpec, spec: NonlinearitySpec, config: SolverConfig) -> PicardResult:
    """Solve the Duhamel equation on ``[0, T]`` by fixed-point iteration from the free evolution.

    Raises
    ------
    DivergenceError
        When successive distances fail to shrink three times in a row.
    """
    if config.T <= 0:
        raise ParameterDomainError("Picard iteration needs T > 0")
    M, triples = _resolve(f, w, spec, config)
    n_t = config.n_t
    traj, history, converged = _picard_once(f, w, spec, config, n_t, M, triples)
    if not converged:
        warnings.warn(f"Picard iteration stopped after {len(history)} iterations without reaching tol", stacklevel=2)
    change = None
    if config.refine:
        for _ in range(config.max_refinements):
            n_new = 2 * n_t - 1
            fine, history, converged = _picard_once(f, w, spec, config, n_new, M, triples)
            diff = fine.coeffs[::2] - traj.coeffs
            change = _metric(diff, f.lattice, M, traj.times, traj.weights, triples)
            traj, n_t = fine, n_new
            if change < config.tol / 4:
                break
        else:
            warnings.warn(f"time refinement still moves the solution by {change:.3e}", stacklevel=2)
    return PicardResult(traj, history, converged, len(history), n_t, change)


def _implicit_midpoint(u0: np.ndarray, dt: float, nonlin: _Nonlinearity, lat: FrequencyLattice, M: int) -> np.ndarray:
    """Norm-preserving step for ``i du/dt = P(V(u) u)`` with real ``V``."""
    d = lat.d
    u1 = u0 - 1j * dt * nonlin(u0)
    scale = max(np.sqrt(np.sum(np.abs(u0) ** 2)), 1e-300)
    for _ in range(100):
        mid = 0.5 * (u0 + u1)
        ug = coeffs_to_samples(mid, d, M)
        V = nonlin.potential(ug)
        new = u0 - 1j * dt * samples_to_coeffs(V * ug, d, lat.N)
        delta = np.sqrt(np.sum(np.abs(new - u1) ** 2))
        u1 = new
        if delta <= 1e-15 * scale:
            break
    return u1


def splitstep_solve(f: SpectralField, w: PotentialSpec, spec: NonlinearitySpec, config: SolverConfig) -> Trajectory:
    """Strang splitting: half free flight, nonlinear step, half free flight.

    The free flight is the exact multiplier.  When ``G = V(u) u`` with real
    ``V`` (the ``hartree`` variant, or ``gauge`` with a Dirac potential) the
    nonlinear step is the implicit midpoint rule, which keeps the ``L^2`` norm
    on the band; otherwise it is the explicit midpoint rule.
    """
    lat = f.lattice
    M = config.M or f.M
    nonlin = _Nonlinearity(lat, M, w, spec)
    times = np.linspace(0.0, config.T, config.n_t)
    dt = config.T / (config.n_t - 1) / config.substeps
    half = propagator_phase(lat, dt / 2)
    u = f.coeffs.copy()
    out = [u.copy()]
    for _ in range(config.n_t - 1):
        for _ in range(config.substeps):
            u = half * u
            if not nonlin.zero:
                if nonlin.potential_form:
                    u = _implicit_midpoint(u, dt, nonlin, lat, M)
                else:
                    u = u - 1j * dt * nonlin(u - 0.5j * dt * nonlin(u))
            u = half * u
        if not np.all(np.isfinite(u)):
            raise NumericDomainError("split-step solution became non-finite")
        out.append(u.copy())
    if config.T > 0:
        _, weights = trapezoid_rule(0.0, config.T, config.n_t)
        return Trajectory(times, weights, coeffs=np.stack(out), lattice=lat, M=M)
    _, weights = trapezoid_rule(config.T, 0.0, config.n_t)
    return Trajectory(times[::-1], weights, coeffs=np.stack(out[::-1]), lattice=lat, M=M)


@dataclass(frozen=True)
class ProbeResult:
    """Nonlinear estimate probe: ``ratio = numerator / (w_norm * u_norm^p)``."""

    ratio: float
    numerator: float
    w_norm: float
    u_norm: float
    degenerate: bool = False


def nonlinear_estimate_probe(u: Trajectory, w: PotentialSpec, s: float, triple,
                             spec: NonlinearitySpec = NonlinearitySpec(2.0, "non_gauge")) -> ProbeResult:
    """Ratio of the dual space-time norm of ``<grad_y>^s <grad>^{2/q} G(u)`` to ``||w|| ||u||^p``.

    Parameters
    ----------
    u : Trajectory
        Band-limited trajectory on a lattice with ``k = 2``.
    s : float
        ``0 <= s < 1``.
    triple : AdmissibleTriple or (q, r, r_tilde)
        Must belong to the refined triplet set for ``(d, 2)``.

    Notes
    -----
    ``||w||`` is ``||<grad>^{2/q} w||_{L^1}`` and ``||u||`` is
    ``||<grad_y>^s u||_{L^q_t L^r_x L^{r_tilde}_y}``.  A vanishing ``u``
    returns ratio 0 with ``degenerate=True``.
    """
    if not 0 <= s < 1:
        raise ParameterDomainError(f"s must satisfy 0 <= s < 1, got {s}")
    lat = u.lattice
    if lat is None:
        raise ParameterDomainError("u must be band-limited")
    tr = triple if isinstance(triple, AdmissibleTriple) else classify_triple(*triple, lat.d, lat.k)
    if lat.k != 2 or not tr.in_A:
        raise ClassificationError(f"triple {tr.label()} is not in the refined set for (d, 2)")
    q, r, rt = tr.floats()
    qp, rp, rtp = (as_float(conjugate_exponent(v)) for v in (q, r, rt))
    nonlin = _Nonlinearity(lat, u.M, w, spec)
    mult = bessel_y_symbol(lat, s) * bessel_symbol(lat, 2.0 / q)
    G = nonlin(u.coeffs) * mult
    per_t = mixed_norm_values(coeffs_to_samples(G, lat.d, u.M), lat.d, lat.k, rp, rtp)
    num = time_norm(np.atleast_1d(per_t), u.weights, qp)
    wl = w.lattice
    wg = coeffs_to_samples(w.w.coeffs * bessel_symbol(wl, 2.0 / q), wl.d, w.w.M)
    w_norm = float(np.mean(np.abs(wg)))
    us = Trajectory(u.times, u.weights, coeffs=u.coeffs * bessel_y_symbol(lat, s), lattice=lat, M=u.M)
    u_norm = spacetime_norm(us, q, r, rt)
    if u_norm == 0 or w_norm == 0:
        return ProbeResult(0.0, num, w_norm, u_norm, True)
    return ProbeResult(num / (w_norm * u_norm ** spec.p), num, w_norm, u_norm)

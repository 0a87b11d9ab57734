"""Self-consistent Hartree flow of finite-rank density matrices.

Each orbital obeys ``i du_j/dt = (H_0 + V) u_j`` with the shared mean field
``V = w * rho`` and ``rho = sum_j lambda_j |u_j|^2``; equivalently
``i dgamma/dt = [H_0 + V, gamma]``.  ``H_0`` is the generator of the free
flow (symbol ``-2 pi |xi|^2``), the same convention as :mod:`torus_lab.nls`.

The default collocation grid has ``M = 2N + 1`` points per axis.  Sampling
is then a square unitary map of the band, so every substep of the
splitting is exactly unitary on the band and orthonormality survives to
round-off.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field as dc_field
from typing import Sequence

import numpy as np
import scipy.fft as sfft
from scipy.integrate import cumulative_trapezoid

from .admissibility import classify_triple
from .ensemble import DensityMatrix, OrthonormalEnsemble, density_field, gram_deviation
from .errors import AliasingError, DivergenceError, NumericDomainError, ParameterDomainError
from .nls import PotentialSpec
from .norms import mixed_norm_values, operator_sobolev_schatten_norm, sobolev_schatten_norm, time_norm
from .spectral import FrequencyLattice, SpectralField, coeffs_to_samples, propagator_phase, samples_to_coeffs

__all__ = [
    "DensityMatrix",
    "HartreeConfig",
    "HartreeTrajectory",
    "density_of",
    "evolve_fermions",
    "commutator_residual",
    "ReportRow",
    "conservation_report",
    "write_report_csv",
    "REPORT_COLUMNS",
    "OperatorPicardResult",
    "picard_operator_solve",
    "rho_difference",
]


@dataclass(frozen=True, eq=False)
class HartreeConfig:
    """Time stepping and diagnostics for :func:`evolve_fermions`.

    Attributes
    ----------
    dt : float
    n_steps : int
        ``dt * n_steps`` is the final time and may not exceed 1.
    w : PotentialSpec
        Real potential whose band fits the collocation grid.
    M : int
        Collocation grid (0 selects ``2N + 1``).
    cadence : int
        Store every ``cadence``-th step.
    alpha_primes : tuple of float
        Schatten exponents reported by :func:`conservation_report`.
    s : float
        Sobolev weight of the reported Sobolev-Schatten norm.
    triple : tuple
        ``(q, r, r_tilde)`` of the running density norm.
    """

    dt: float
    n_steps: int
    w: PotentialSpec
    M: int = 0
    cadence: int = 1
    alpha_primes: tuple = (1.0,)
    s: float = 0.0
    triple: tuple = (4, 2, 2)

    def __post_init__(self):
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ParameterDomainError("dt must be positive")
        if self.n_steps < 1 or self.cadence < 1:
            raise ParameterDomainError("n_steps and cadence must be >= 1")
        if self.T > 1 + 1e-12:
            raise ParameterDomainError(f"dt * n_steps = {self.T} exceeds 1")

    @property
    def T(self) -> float:
        return self.dt * self.n_steps


@dataclass(eq=False)
class HartreeTrajectory:
    """Stored orbitals of a Hartree run.

    ``frames`` has shape ``(n_saved, J, lattice.size)``; the weights never change.
    """

    lattice: FrequencyLattice
    M: int
    times: np.ndarray
    frames: np.ndarray
    weights: np.ndarray
    w: PotentialSpec
    energy: np.ndarray = dc_field(default=None)

    def __len__(self) -> int:
        return len(self.times)

    def ensemble(self, i: int) -> OrthonormalEnsemble:
        return OrthonormalEnsemble(self.lattice, self.frames[i], self.weights, self.M, check=False)

    def density_matrix(self, i: int) -> DensityMatrix:
        return DensityMatrix(self.ensemble(i))

    def gamma(self, i: int) -> np.ndarray:
        F = self.frames[i]
        return (F.T * self.weights[None, :]) @ F.conj()

    def rho_samples(self) -> np.ndarray:
        """Densities on the collocation grid, shape ``(n_saved,) + (M,)*d``."""
        return np.stack([_rho(self.frames[i], self.weights, self.lattice, self.M) for i in range(len(self))])


def density_of(gamma: DensityMatrix | OrthonormalEnsemble, t: float = 0.0) -> SpectralField:
    """Density ``sum_j lambda_j |u_j|^2`` as a real field on the doubled band."""
    ens = gamma.ensemble if isinstance(gamma, DensityMatrix) else gamma
    return density_field(ens, t)


def _rho(frames: np.ndarray, weights: np.ndarray, lattice: FrequencyLattice, M: int) -> np.ndarray:
    u = coeffs_to_samples(frames.reshape((-1,) + lattice.shape), lattice.d, M)
    return np.tensordot(weights, np.abs(u) ** 2, axes=(0, 0))


class _MeanField:
    def __init__(self, lattice: FrequencyLattice, M: int, w: PotentialSpec):
        if (w.lattice.d, w.lattice.k) != (lattice.d, lattice.k):
            raise ParameterDomainError("potential and orbitals live on different splits")
        if M < 2 * lattice.N + 1:
            raise AliasingError(f"grid of {M} points cannot resolve band N={lattice.N}")
        self.what = w.grid_hat(M)
        self.d = lattice.d

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        axes = tuple(range(-self.d, 0))
        return sfft.ifftn(sfft.fftn(rho, axes=axes) * self.what, axes=axes).real


def _energy(frames, weights, lattice, M, mean_field) -> float:
    kinetic = -2 * math.pi * float(np.sum(weights[:, None] * np.abs(frames) ** 2 * lattice.norms_sq.ravel()[None]))
    rho = _rho(frames, weights, lattice, M)
    return kinetic + 0.5 * float(np.mean(mean_field(rho) * rho))


def evolve_fermions(gamma0: DensityMatrix | OrthonormalEnsemble, config: HartreeConfig) -> HartreeTrajectory:
    """Strang splitting: half potential kick, free flight, half kick with the updated field.

    The mean field is recomputed from the current density before each kick.

    Raises
    ------
    NumericDomainError
        If any orbital coefficient becomes non-finite.
    """
    ens = gamma0.ensemble if isinstance(gamma0, DensityMatrix) else gamma0
    lat = ens.lattice
    M = config.M or 2 * lat.N + 1
    field = _MeanField(lat, M, config.w)
    d, J = lat.d, ens.rank
    lam = np.asarray(ens.weights, dtype=float)
    u = ens.coeffs().copy()
    free = propagator_phase(lat, config.dt)

    def kick(coeffs):
        samples = coeffs_to_samples(coeffs, d, M)
        rho = np.tensordot(lam, np.abs(samples) ** 2, axes=(0, 0))
        V = field(rho)
        return samples_to_coeffs(samples * np.exp(-0.5j * config.dt * V)[None], d, lat.N)

    flat = u.reshape(J, -1).copy()
    times, frames, energy = [0.0], [flat], [_energy(flat, lam, lat, M, field)]
    for step in range(1, config.n_steps + 1):
        u = kick(u)
        u = free * u
        u = kick(u)
        if not np.all(np.isfinite(u)):
            raise NumericDomainError(f"non-finite orbital coefficients at step {step}")
        if step % config.cadence == 0 or step == config.n_steps:
            flat = u.reshape(J, -1).copy()
            times.append(step * config.dt)
            frames.append(flat)
            energy.append(_energy(flat, lam, lat, M, field))
    return HartreeTrajectory(lat, M, np.asarray(times), np.stack(frames), lam, config.w, np.asarray(energy))


def _potential_operator(V: np.ndarray, lattice: FrequencyLattice, M: int) -> np.ndarray:
    """Matrix of ``P_N V P_N`` in the lexicographic coefficient basis."""
    n = lattice.size
    basis = np.eye(n, dtype=complex).reshape((n,) + lattice.shape)
    cols = samples_to_coeffs(coeffs_to_samples(basis, lattice.d, M) * V[None], lattice.d, lattice.N)
    return cols.reshape(n, n).T


def _free_generator(lattice: FrequencyLattice) -> np.ndarray:
    return np.diag(-2 * math.pi * lattice.norms_sq.ravel().astype(float))


def commutator_residual(traj: HartreeTrajectory, w: PotentialSpec | None = None, t_index: int = 1) -> float:
    """``|| i dgamma/dt - [H_0 + w * rho, gamma] ||_HS / ||gamma||_HS`` at a stored time.

    The derivative is the central difference of neighbouring samples, which
    must be equally spaced.
    """
    if not 0 < t_index < len(traj) - 1:
        raise ParameterDomainError(f"t_index must be interior, got {t_index} for {len(traj)} samples")
    times = traj.times
    h1, h2 = times[t_index] - times[t_index - 1], times[t_index + 1] - times[t_index]
    if not math.isclose(h1, h2, rel_tol=1e-9):
        raise ParameterDomainError("central difference needs equally spaced samples")
    w = traj.w if w is None else w
    lat, M = traj.lattice, traj.M
    g = traj.gamma(t_index)
    dg = (traj.gamma(t_index + 1) - traj.gamma(t_index - 1)) / (h1 + h2)
    rho = _rho(traj.frames[t_index], traj.weights, lat, M)
    H = _free_generator(lat) + _potential_operator(_MeanField(lat, M, w)(rho), lat, M)
    res = 1j * dg - (H @ g - g @ H)
    norm = np.linalg.norm(g)
    if norm == 0:
        return float(np.linalg.norm(res))
    return float(np.linalg.norm(res) / norm)


@dataclass(frozen=True)
class ReportRow:
    step: int
    t: float
    trace: float
    gram_dev: float
    schatten: dict
    sobolev_schatten: float
    rho_mixed_norm_running: float
    energy: float


REPORT_COLUMNS = ("step", "t", "trace", "gram_dev", "schatten_a'", "sobolev_schatten", "rho_mixed_norm_running", "energy")


def conservation_report(traj: HartreeTrajectory, alpha_primes: Sequence[float] = (1.0,), s: float = 0.0,
                        triple=(4, 2, 2), steps: Sequence[int] | None = None) -> list:
    """Per stored time: trace, Gram deviation, Schatten norms and the running density norm.

    ``trace`` is the grid integral of the density; ``schatten`` maps each
    ``alpha'`` to the Schatten norm of the operator built from the evolved
    frames, and ``sobolev_schatten`` uses the first ``alpha'`` with weight ``s``.
    The running density norm is ``L^q_t L^r_x L^{r_tilde}_y`` over
    ``[0, t]`` with the trapezoid rule on the stored times.
    """
    if len(traj) == 0:
        raise ParameterDomainError("empty trajectory")
    lat = traj.lattice
    q, r, rt = classify_triple(*triple, lat.d, lat.k).floats()
    rho = traj.rho_samples()
    per_t = np.atleast_1d(mixed_norm_values(rho, lat.d, lat.k, r, rt))
    if math.isinf(q):
        running = np.maximum.accumulate(per_t)
    else:
        acc = cumulative_trapezoid(per_t ** q, traj.times, initial=0.0) if len(traj) > 1 else np.zeros(1)
        running = acc ** (1.0 / q)
    rows = []
    step_list = steps if steps is not None else range(len(traj))
    for i in step_list:
        dm = traj.density_matrix(i)
        schatten = {a: sobolev_schatten_norm(dm, a, 0.0) for a in alpha_primes}
        rows.append(ReportRow(
            step=i,
            t=float(traj.times[i]),
            trace=float(np.mean(rho[i])),
            gram_dev=gram_deviation(traj.frames[i]),
            schatten=schatten,
            sobolev_schatten=sobolev_schatten_norm(dm, alpha_primes[0], s),
            rho_mixed_norm_running=float(running[i]),
            energy=float(traj.energy[i]) if traj.energy is not None else float("nan"),
        ))
    return rows


def write_report_csv(rows: Sequence[ReportRow], path) -> None:
    """Write a conservation report; one ``schatten_a'=<value>`` column per exponent."""
    alphas = list(rows[0].schatten) if rows else []
    header = ["step", "t", "trace", "gram_dev"] + [f"schatten_a'={a:g}" for a in alphas] + [
        "sobolev_schatten", "rho_mixed_norm_running", "energy"]
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(header)
        for row in rows:
            wr.writerow([row.step, repr(row.t), repr(row.trace), repr(row.gram_dev)]
                        + [repr(row.schatten[a]) for a in alphas]
                        + [repr(row.sobolev_schatten), repr(row.rho_mixed_norm_running), repr(row.energy)])


@dataclass
class OperatorPicardResult:
    """Fixed point of the operator Duhamel map on a uniform time grid."""

    times: np.ndarray
    gammas: np.ndarray
    rho: np.ndarray
    history: list
    converged: bool
    lattice: FrequencyLattice
    M: int

    @property
    def iterations(self) -> int:
        return len(self.history)


def _synthesis_matrix(lattice: FrequencyLattice, M: int) -> np.ndarray:
    n = lattice.size
    basis = np.eye(n, dtype=complex).reshape((n,) + lattice.shape)
    return coeffs_to_samples(basis, lattice.d, M).reshape(n, -1).T


def picard_operator_solve(gamma0: DensityMatrix | OrthonormalEnsemble, w: PotentialSpec, T: float, n_t: int = 129,
                          M: int = 0, tol: float = 1e-12, max_iter: int = 60, alpha_prime: float = 1.0,
                          s: float = 0.0, triple=(4, 2, 2)) -> OperatorPicardResult:
    """Iterate the pair map ``(gamma, rho) -> (Phi(gamma, rho), rho[Phi(gamma, rho)])``.

    ``Phi(gamma, rho)(t) = S(t) - i int_0^t S_{t-t'}[V(t'), gamma(t')] dt'``
    with ``S`` the free conjugation and ``V = w * rho``, evaluated with dense
    matrices on the band in the interaction picture and the cumulative
    trapezoid rule.  The update size is the maximum over time of the
    Sobolev-Schatten norm of the change in ``gamma`` plus the
    ``L^q_t L^r_x L^{r_tilde}_y`` norm of the change in ``rho``.

    Raises
    ------
    DivergenceError
        If the update fails to shrink three iterations in a row.
    """
    ens = gamma0.ensemble if isinstance(gamma0, DensityMatrix) else gamma0
    lat = ens.lattice
    M = M or 2 * lat.N + 1
    if not T > 0 or n_t < 2:
        raise ParameterDomainError("need T > 0 and n_t >= 2")
    field = _MeanField(lat, M, w)
    S = _synthesis_matrix(lat, M)  # (M^d, n)
    g0 = DensityMatrix(ens).matrix()
    times = np.linspace(0.0, T, n_t)
    tw = np.full(n_t, T / (n_t - 1))
    tw[0] = tw[-1] = tw[0] / 2
    ph = propagator_phase(lat, times).reshape(n_t, -1)  # e^{-i t H_0} diagonal
    q, r, rt = classify_triple(*triple, lat.d, lat.k).floats()
    grid_shape = (M,) * lat.d

    def conj_free(G):  # S(t) G S(t)^*
        return ph[:, :, None] * G * ph[:, None, :].conj()

    def density(G):
        return np.einsum("zi,tij,zj->tz", S, G, S.conj(), optimize=True).real

    def potential_ops(rho):
        V = field(rho.reshape((n_t,) + grid_shape)).reshape(n_t, -1)
        return np.einsum("zi,tz,zj->tij", S.conj(), V, S, optimize=True) / S.shape[0]

    def pair_map(gt, rho):
        Vt = ph[:, :, None].conj() * potential_ops(rho) * ph[:, None, :]
        comm = Vt @ gt - gt @ Vt
        new = g0[None] - 1j * cumulative_trapezoid(comm, times, axis=0, initial=0)
        return new, density(conj_free(new))

    def dist(dG, drho):
        a = max(operator_sobolev_schatten_norm(m, lat, alpha_prime, s) for m in dG)
        per_t = np.atleast_1d(mixed_norm_values(drho.reshape((n_t,) + grid_shape), lat.d, lat.k, r, rt))
        return a + time_norm(per_t, tw, q)

    gt = np.broadcast_to(g0, (n_t,) + g0.shape).copy()  # interaction picture
    rho = density(conj_free(gt))
    history, converged, streak = [], False, 0
    for _ in range(max_iter):
        with np.errstate(over="ignore", invalid="ignore"):
            gt_new, rho_new = pair_map(gt, rho)
        if not np.all(np.isfinite(gt_new)):
            raise DivergenceError("operator Picard iterates blew up; reduce T or the data size", math.inf, history)
        h = dist(conj_free(gt_new - gt), rho_new - rho)
        history.append(h)
        gt, rho = gt_new, rho_new
        if h < tol:
            converged = True
            break
        if len(history) >= 2 and history[-2] > 0:
            ratio = h / history[-2]
            streak = streak + 1 if ratio >= 1 else 0
            if streak >= 3:
                raise DivergenceError(
                    f"operator Picard map is not contracting (ratio {ratio:.3g}); reduce T or the data size",
                    ratio, history)
    G = conj_free(gt)
    return OperatorPicardResult(times, G, rho.reshape((n_t,) + grid_shape), history, converged, lat, M)


def rho_difference(a: np.ndarray, b: np.ndarray, times: np.ndarray) -> float:
    """Relative ``L^2_{t,z}`` distance of two density histories on a common grid."""
    n_t = len(times)
    tw = np.ones(1)
    if n_t > 1:
        tw = np.full(n_t, (times[-1] - times[0]) / (n_t - 1))
        tw[0] = tw[-1] = tw[0] / 2
    axes = tuple(range(1, a.ndim))
    num = np.sum(tw * np.mean(np.abs(a - b) ** 2, axis=axes))
    den = np.sum(tw * np.mean(np.abs(b) ** 2, axis=axes))
    return float(np.sqrt(num / den)) if den > 0 else float(np.sqrt(num))

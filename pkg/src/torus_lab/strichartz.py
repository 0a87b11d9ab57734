"""Probes of the linear and orthonormal space-time estimates for the free flow.

The free flow is ``U(t) a(xi) = exp(2 pi i t |xi|^2) a(xi)``.  Its kernel on
the cube of radius ``N`` is ``K_N(t, z) = sum_xi exp(2 pi i (z . xi + t |xi|^2))``,
which factors into one-dimensional kernels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft

from .admissibility import AdmissibleTriple, as_float, classify_triple, conjugate_exponent
from .ensemble import (
    DensityMatrix,
    OrthonormalEnsemble,
    density_field,
    density_samples,
    make_ons,
)
from .errors import (
    AliasingError,
    ClassificationError,
    DimensionOverflowError,
    NumericDomainError,
    ParameterDomainError,
)
from .norms import lp_mean, lp_of_vector, mixed_norm_values, schatten_norm, sobolev_norm, time_norm
from .spectral import (
    FrequencyLattice,
    SpectralField,
    Trajectory,
    coeffs_to_samples,
    coeffs_to_x_samples,
    next_pow2,
    periodic_rule,
    probe_grid_size,
    propagator_phase,
    samples_to_coeffs,
    trapezoid_rule,
)

__all__ = [
    "OrthonormalEnsemble",
    "DensityMatrix",
    "make_ons",
    "KernelProbe",
    "kernel_value",
    "kernel_1d_on_grid",
    "kernel_decay_scan",
    "fixed_time_decay_terms",
    "fixed_time_decay_ratio",
    "free_mixed_norms",
    "strichartz_time_samples",
    "strichartz_ratio",
    "free_spacetime_norm",
    "localized_strichartz_ratio",
    "extension_apply",
    "restriction_apply",
    "ons_density",
    "ons_spacetime_norm",
    "ons_strichartz_ratio",
    "DualityResult",
    "duality_schatten_check",
    "duality_operator_matrix",
    "REFINE_RTOL",
]

REFINE_RTOL = 5e-3


# ---------------------------------------------------------------------------
# kernel


def _kernel_1d(t: float, x: np.ndarray, N: int) -> np.ndarray:
    xi = np.arange(-N, N + 1)
    phase_t = np.exp(2j * np.pi * np.mod(t * xi * xi, 1.0))
    out = np.empty(x.shape, dtype=complex)
    flat = x.ravel()
    res = out.ravel()
    step = max(1, 2 ** 20 // xi.size)
    for i in range(0, flat.size, step):
        blk = flat[i:i + step]
        res[i:i + step] = np.exp(2j * np.pi * np.outer(blk, xi)) @ phase_t
    return res.reshape(x.shape)


def kernel_value(t: float, z, lattice: FrequencyLattice):
    """``K_N(t, z)`` as a product of one-dimensional sums.

    Parameters
    ----------
    t : float
    z : array_like, shape (..., d)
        Points of the torus.
    lattice : FrequencyLattice
        Supplies ``d`` and ``N``.

    Returns
    -------
    complex or ndarray of shape ``z.shape[:-1]``
    """
    z = np.asarray(z, dtype=float)
    if z.shape[-1] != lattice.d:
        raise ParameterDomainError(f"points must have {lattice.d} coordinates")
    out = np.ones(z.shape[:-1], dtype=complex)
    for i in range(lattice.d):
        out = out * _kernel_1d(t, z[..., i], lattice.N)
    return out[()] if out.ndim == 0 else out


def kernel_1d_on_grid(times, N: int, M: int) -> np.ndarray:
    """One-dimensional kernel on the grid ``m / M`` for each time, shape ``(n_t, M)``."""
    times = np.atleast_1d(np.asarray(times, dtype=float))
    xi = np.arange(-N, N + 1)
    ph = np.exp(2j * np.pi * np.mod(np.outer(times, xi * xi), 1.0))
    return coeffs_to_samples(ph, 1, M)


@dataclass(frozen=True)
class KernelProbe:
    """Weighted kernel sup ``|t|^{d/2} sup_x |K_N(t, x)|`` over a time window.

    Attributes
    ----------
    N, d : int
    times : ndarray
        Sampled times in ``[eps, 1/(2N)]``.
    sup_abs : ndarray
        ``sup_x |K_N(t, x)|`` per time.
    weighted : ndarray
        ``|t|^{d/2} sup_abs``.
    """

    N: int
    d: int
    eps: float
    times: np.ndarray
    sup_abs: np.ndarray
    weighted: np.ndarray

    @property
    def sup_weighted(self) -> float:
        return float(self.weighted.max())

    @property
    def t_at_sup(self) -> float:
        return float(self.times[int(np.argmax(self.weighted))])


def kernel_decay_scan(N_list, eps: float = 1e-4, n_t: int = 64, M: int = 1024, d: int = 1) -> list:
    """Scan ``|t|^{d/2} |K_N(t, x)|`` over log-spaced ``t`` in ``[eps, 1/(2N)]``.

    The spatial sup uses ``M`` points per axis; in dimension ``d`` the kernel
    factorizes, so the sup is the ``d``-th power of the one-dimensional one.
    """
    if not eps > 0:
        raise ParameterDomainError("eps must be positive: t = 0 is excluded")
    probes = []
    for N in N_list:
        N = int(N)
        if N < 1:
            raise ParameterDomainError(f"N must be >= 1, got {N}")
        top = 1.0 / (2 * N)
        if not eps < top:
            raise ParameterDomainError(f"eps={eps} must be below 1/(2N)={top}")
        times = np.geomspace(eps, top, n_t)
        K = kernel_1d_on_grid(times, N, M)
        sup1 = np.abs(K).max(axis=1)
        sup = sup1 ** d
        probes.append(KernelProbe(N, d, eps, times, sup, times ** (d / 2) * sup))
    return probes


# ---------------------------------------------------------------------------
# fixed-time decay


def _grid_freqs(M: int, d: int):
    f = np.rint(sfft.fftfreq(M, 1.0 / M)).astype(np.int64)
    grids = np.meshgrid(*([f] * d), indexing="ij")
    return grids


def _beta(d: int, k: int, r: float, rt: float) -> float:
    return (d - k) * (0.5 - 1.0 / r) + k * (0.5 - 1.0 / rt)


def fixed_time_decay_terms(f, t: float, N: int, r, r_tilde, k: int | None = None) -> tuple:
    """Pieces of the fixed-time decay ratio.

    Returns ``(numerator, weight, denominator)`` with
    ``numerator = ||U(t) P_{<=N} f||_{L^r_x L^{r_tilde}_y}``, ``weight = |t|^beta``
    and ``denominator = ||f||_{L^{r'}_x L^{r_tilde'}_y}``.  ``P_{<=N}`` is the
    cube cutoff.

    Parameters
    ----------
    f : SpectralField or ndarray
        A field or raw grid samples (then ``k`` is required).
    """
    r_f, rt_f = as_float(r), as_float(r_tilde)
    if not 2 <= rt_f <= r_f <= math.inf:
        raise ParameterDomainError("need 2 <= r_tilde <= r <= inf")
    N = int(N)
    if t == 0 or abs(t) > 1.0 / (2 * N) * (1 + 1e-12):
        raise ParameterDomainError(f"t={t} outside the window 0 < |t| <= 1/(2N)")
    if isinstance(f, SpectralField):
        samples, d, k = f.samples, f.d, f.k
    else:
        samples = np.asarray(f, dtype=complex)
        d = samples.ndim
        if k is None:
            raise ParameterDomainError("k is required for raw samples")
    M = samples.shape[-1]
    if M < 2 * N + 1:
        raise AliasingError(f"grid of {M} points cannot resolve band N={N}")
    F = sfft.fftn(samples, norm="forward")
    grids = _grid_freqs(M, d)
    sup = np.max(np.abs(np.stack(grids)), axis=0)
    nsq = sum(g * g for g in grids)
    mult = (sup <= N) * np.exp(2j * np.pi * np.mod(t * nsq, 1.0))
    u = sfft.ifftn(F * mult, norm="forward")
    num = float(mixed_norm_values(u, d, k, r_f, rt_f))
    rp, rtp = as_float(conjugate_exponent(r)), as_float(conjugate_exponent(r_tilde))
    den = float(mixed_norm_values(samples, d, k, rp, rtp))
    return num, abs(t) ** _beta(d, k, r_f, rt_f), den


def fixed_time_decay_ratio(f, t: float, N: int, r, r_tilde, k: int | None = None) -> float:
    """``|t|^beta ||U(t) P_{<=N} f||_{L^r L^{r_tilde}} / ||f||_{L^{r'} L^{r_tilde'}}``."""
    num, w, den = fixed_time_decay_terms(f, t, N, r, r_tilde, k)
    if den == 0:
        raise NumericDomainError("zero data")
    return num * w / den


# ---------------------------------------------------------------------------
# Strichartz ratios


def free_mixed_norms(coeffs: np.ndarray, lattice: FrequencyLattice, M: int, times, r, r_tilde,
                     chunk: int = 128) -> np.ndarray:
    """``||U(t) f||_{L^r_x L^{r_tilde}_y}`` for each time.

    For ``r_tilde = 2`` only the ``x`` axes are transformed and the inner norm
    comes from Parseval in ``y``.
    """
    r, rt = as_float(r), as_float(r_tilde)
    times = np.atleast_1d(np.asarray(times, dtype=float))
    d, k = lattice.d, lattice.k
    out = np.empty(times.size)
    if rt == 2 and d == k:
        out[:] = np.sqrt(np.sum(np.abs(coeffs) ** 2))
        return out
    for i in range(0, times.size, chunk):
        ts = times[i:i + chunk]
        if rt == 2:
            # y phases have modulus one and drop out of the inner L^2 norm
            c = propagator_phase(lattice, ts, axes=range(d - k)) * coeffs[None]
            u = coeffs_to_x_samples(c, d, k, M)
            inner = np.sqrt(np.sum(np.abs(u) ** 2, axis=tuple(range(-k, 0))))
            out[i:i + chunk] = lp_mean(inner, r, tuple(range(-(d - k), 0)))
        else:
            c = propagator_phase(lattice, ts) * coeffs[None]
            out[i:i + chunk] = mixed_norm_values(coeffs_to_samples(c, d, M), d, k, r, rt)
    return out


def strichartz_time_samples(lattice: FrequencyLattice) -> int:
    """Starting number of uniform time samples on the period: covers time frequencies up to ``d N^2``."""
    return next_pow2(2 * lattice.d * lattice.N ** 2 + 1)


def _as_triple(triple, d: int, k: int) -> AdmissibleTriple:
    if isinstance(triple, AdmissibleTriple):
        if (triple.d, triple.k) != (d, k):
            raise ClassificationError(f"triple was classified for (d,k)=({triple.d},{triple.k}), field has ({d},{k})")
        return triple
    q, r, rt = triple
    return classify_triple(q, r, rt, d, k)


def _periodic_norm(fn, q: float, n_t: int, refine: bool, rtol: float, max_doublings: int):
    """Time ``L^q`` norm over one period of ``fn(times)`` with optional doubling refinement."""
    times, w = periodic_rule(n_t)
    val = time_norm(fn(times), w, q)
    if not refine:
        return val, n_t
    for _ in range(max_doublings):
        n_t *= 2
        times, w = periodic_rule(n_t)
        new = time_norm(fn(times), w, q)
        done = abs(new - val) <= rtol * abs(new)
        val = new
        if done:
            return val, n_t
    return val, n_t


def free_spacetime_norm(coeffs: np.ndarray, lattice: FrequencyLattice, q, r, r_tilde, M: int | None = None,
                        n_t: int | None = None, refine: bool = True, rtol: float = REFINE_RTOL,
                        max_doublings: int = 4) -> float:
    """``||U(t) f||_{L^q_t(T) L^r_x L^{r_tilde}_y}`` over one time period."""
    q, r, rt = as_float(q), as_float(r), as_float(r_tilde)
    M = M or probe_grid_size(lattice.N)
    n_t = n_t or strichartz_time_samples(lattice)
    val, _ = _periodic_norm(lambda ts: free_mixed_norms(coeffs, lattice, M, ts, r, rt),
                            q, n_t, refine, rtol, max_doublings)
    return val


def strichartz_ratio(f: SpectralField, triple, k: int | None = None, n_t: int | None = None,
                     M: int | None = None, refine: bool = True, rtol: float = REFINE_RTOL,
                     max_doublings: int = 4) -> float:
    """``||U(t) f||_{L^q_t(T) L^r_x L^{r_tilde}_y} / ||f||_{H^{1/q}}``.

    Parameters
    ----------
    f : SpectralField
    triple : AdmissibleTriple or (q, r, r_tilde)
        Must satisfy the Strichartz admissibility condition.
    n_t : int, optional
        Initial number of time samples on the period.
    M : int, optional
        Spatial grid; defaults to the probe grid of the band.
    refine : bool
        Double the time sampling until the value changes by less than ``rtol``.
    """
    if k is not None and k != f.k:
        raise ParameterDomainError(f"field is split with k={f.k}, not {k}")
    tr = _as_triple(triple, f.d, f.k)
    if not tr.satisfies_strichartz:
        raise ClassificationError(f"triple {tr.label()} is not Strichartz admissible for (d,k)=({f.d},{f.k})")
    q, r, rt = tr.floats()
    M = M or probe_grid_size(f.N)
    n_t = n_t or strichartz_time_samples(f.lattice)
    den = sobolev_norm(f, 1.0 / q)
    if den == 0:
        raise NumericDomainError("zero data")
    num = free_spacetime_norm(f.coeffs, f.lattice, q, r, rt, M, n_t, refine, rtol, max_doublings)
    return num / den


def localized_strichartz_ratio(f: SpectralField, N: int, triple, variant: str = "window",
                               n_t: int | None = None, M: int | None = None) -> float:
    """Frequency-localized Strichartz ratio.

    ``variant="window"`` returns ``||U(t) P_{<=N} f||_{L^q(I_N) L^r L^{r_tilde}} / ||f||_{L^2}``
    with ``I_N = [-1/(2N), 1/(2N)]`` (composite trapezoid in time).
    ``variant="global"`` integrates over the whole period and divides by
    ``N^{1/q} ||f||_{L^2}``.  ``P_{<=N}`` is the cube cutoff.
    """
    tr = _as_triple(triple, f.d, f.k)
    if not tr.satisfies_strichartz:
        raise ClassificationError(f"triple {tr.label()} is not Strichartz admissible")
    q, r, rt = tr.floats()
    N = int(N)
    coeffs = f.coeffs * (f.lattice.sup_norms <= N)
    M = M or probe_grid_size(f.N)
    den = f.l2_norm()
    if den == 0:
        raise NumericDomainError("zero data")
    if variant == "window":
        n = n_t or 257
        times, w = trapezoid_rule(-0.5 / N, 0.5 / N, n)
        vals = free_mixed_norms(coeffs, f.lattice, M, times, r, rt)
        return time_norm(vals, w, q) / den
    if variant == "global":
        num = free_spacetime_norm(coeffs, f.lattice, q, r, rt, M, n_t)
        return num / (N ** (1.0 / q) * den)
    raise ParameterDomainError(f"unknown variant {variant!r}; use 'window' or 'global'")


# ---------------------------------------------------------------------------
# extension and restriction


def extension_apply(a: np.ndarray, lattice: FrequencyLattice, times, weights=None, M: int | None = None) -> Trajectory:
    """``E a(t, z) = sum_xi a(xi) exp(2 pi i (z . xi + t |xi|^2))`` at the given times.

    ``weights`` defaults to the periodic rule when ``times`` is an integer
    count, and must be supplied otherwise.
    """
    if np.ndim(times) == 0:
        times, w = periodic_rule(int(times))
        weights = w if weights is None else weights
    times = np.asarray(times, dtype=float)
    if weights is None:
        raise ParameterDomainError("quadrature weights are required for explicit times")
    a = np.asarray(a, dtype=complex)
    if a.shape != lattice.shape:
        raise ParameterDomainError("coefficients do not match the lattice")
    coeffs = propagator_phase(lattice, times) * a[None]
    return Trajectory(times, weights, coeffs=coeffs, lattice=lattice, M=M or probe_grid_size(lattice.N))


def restriction_apply(traj: Trajectory, lattice: FrequencyLattice) -> np.ndarray:
    """``E* F(xi) = sum_t w_t M^{-d} sum_z F(t, z) exp(-2 pi i (z . xi + t |xi|^2))`` on the lattice."""
    if traj.d != lattice.d:
        raise ParameterDomainError("trajectory and lattice dimensions differ")
    out = np.zeros(lattice.shape, dtype=complex)
    phases = np.conj(propagator_phase(lattice, traj.times))
    start = 0
    for block in traj.iter_sample_chunks(64):
        n = block.shape[0]
        c = samples_to_coeffs(block, lattice.d, lattice.N)
        out += np.tensordot(traj.weights[start:start + n], phases[start:start + n] * c, axes=(0, 0))
        start += n
    return out


# ---------------------------------------------------------------------------
# orthonormal systems


def ons_density(ensemble: OrthonormalEnsemble, t: float = 0.0) -> SpectralField:
    """Density ``sum_j lambda_j |U(t) f_j|^2`` as a real field on the doubled band."""
    return density_field(ensemble, t)


def ons_spacetime_norm(ensemble: OrthonormalEnsemble, q, r, r_tilde, n_t: int | None = None,
                       M: int | None = None, refine: bool = True, rtol: float = REFINE_RTOL,
                       max_doublings: int = 3, chunk: int = 64) -> float:
    """``||rho||_{L^q_t(T) L^r_x L^{r_tilde}_y}`` for the free evolution of the ensemble."""
    lat = ensemble.lattice
    M = M or probe_grid_size(lat.N)
    q, r, rt = as_float(q), as_float(r), as_float(r_tilde)

    def per_time(ts):
        out = np.empty(ts.size)
        for i in range(0, ts.size, chunk):
            rho = density_samples(ensemble.frames, ensemble.weights, lat, M, ts[i:i + chunk])
            out[i:i + chunk] = mixed_norm_values(rho, lat.d, lat.k, r, rt)
        return out

    val, _ = _periodic_norm(per_time, q, n_t or strichartz_time_samples(lat), refine, rtol, max_doublings)
    return val


def ons_strichartz_ratio(ensemble: OrthonormalEnsemble, triple, alpha_prime=None, strict: bool = True,
                         **kwargs) -> float:
    """``||rho||_{L^q_t L^r_x L^{r_tilde}_y} / (N^{1/q} ||lambda||_{l^{alpha'}})``.

    Parameters
    ----------
    triple : AdmissibleTriple or (q, r, r_tilde)
        Must satisfy ``2/q + d/gamma = d`` and ``gamma < (d+1)/(d-1)``.
    alpha_prime : exponent, optional
        Defaults to ``2 gamma / (gamma + 1)``.  Larger values are rejected
        unless ``strict`` is False.
    **kwargs
        Passed to :func:`ons_spacetime_norm`.
    """
    lat = ensemble.lattice
    tr = _as_triple(triple, lat.d, lat.k)
    if not tr.satisfies_sharp:
        raise ClassificationError(f"triple {tr.label()} does not satisfy 2/q + d/gamma = d")
    if not tr.gamma_subcritical:
        raise ClassificationError(f"gamma={tr.gamma} is not below (d+1)/(d-1)")
    ap = as_float(tr.alpha_prime if alpha_prime is None else alpha_prime)
    if strict and ap > as_float(tr.alpha_prime) * (1 + 1e-12):
        raise ClassificationError(f"alpha'={ap} exceeds 2 gamma/(gamma+1)={as_float(tr.alpha_prime)}")
    q, r, rt = tr.floats()
    lam_norm = lp_of_vector(ensemble.weights, ap)
    if lam_norm == 0:
        raise NumericDomainError("all weights vanish")
    num = ons_spacetime_norm(ensemble, q, r, rt, **kwargs)
    return num / (lat.N ** (1.0 / q) * lam_norm)


# ---------------------------------------------------------------------------
# Schatten duality


@dataclass(frozen=True)
class DualityResult:
    """Outcome of :func:`duality_schatten_check`."""

    lhs: float
    rhs: float
    alpha: float
    dim: int

    @property
    def ratio(self) -> float:
        if self.rhs == 0:
            return 0.0 if self.lhs == 0 else math.inf
        return self.lhs / self.rhs


def _weighted_extension_matrix(W: np.ndarray, lattice: FrequencyLattice, times, weights) -> np.ndarray:
    """Rows ``p = (t, z)``: ``sqrt(w_t M^-d) W(p) exp(2 pi i (z . xi + t |xi|^2))``."""
    n_t = W.shape[0]
    M = W.shape[-1]
    d = lattice.d
    # column xi of E evaluated on the grid at each time: synthesize unit vectors
    eye = np.eye(lattice.size, dtype=complex).reshape((lattice.size,) + lattice.shape)
    rows = []
    for i in range(n_t):
        ph = propagator_phase(lattice, times[i])
        cols = coeffs_to_samples(eye * ph[None], d, M).reshape(lattice.size, -1).T  # (M^d, size)
        scale = np.sqrt(weights[i] * float(M) ** (-d))
        rows.append(scale * W[i].reshape(-1, 1) * cols)
    return np.vstack(rows)


def duality_operator_matrix(W: np.ndarray, lattice: FrequencyLattice, times, weights) -> np.ndarray:
    """Dense matrix of ``F -> W E E* (W F)`` in quadrature-normalized coordinates.

    Entry ``(p, p')`` is ``sqrt(c_p c_p') W(p) K_N(t - t', z - z') W(p')`` with
    ``c_p`` the space-time cell weight.
    """
    A = _weighted_extension_matrix(np.asarray(W), lattice, np.asarray(times), np.asarray(weights))
    return A @ A.conj().T


def duality_schatten_check(W: np.ndarray, N: int, triple, times, weights, d: int = 1, k: int = 1,
                           alpha=None, max_dim: int = 4096, method: str = "gram") -> DualityResult:
    """Compare ``||W E E* W||_{S^alpha}`` with ``||W||^2_{L^{2q'}_t L^{2r'}_x L^{2 r_tilde'}_y}``.

    Parameters
    ----------
    W : ndarray, shape (n_t,) + (M,) * d
        Space-time weight sampled at ``times`` on the grid.
    N : int
        Band of the extension operator.
    triple : AdmissibleTriple or (q, r, r_tilde)
    times, weights : array_like
        Time nodes (typically inside ``[-1/(2N), 1/(2N)]``) and weights.
    alpha : exponent, optional
        Schatten exponent, default ``2 gamma'``.
    max_dim : int
        Largest allowed space-time dimension ``n_t * M^d``.
    method : {"gram", "dense"}
        ``dense`` builds the full ``n_p x n_p`` matrix and takes its SVD;
        ``gram`` uses that its nonzero singular values are the eigenvalues of
        the small Gram matrix ``A^H A`` on the lattice.
    """
    W = np.asarray(W)
    lat = FrequencyLattice(d, k, int(N))
    tr = _as_triple(triple, d, k)
    if W.ndim != d + 1 or W.shape[0] != len(times):
        raise ParameterDomainError("W must have shape (n_t,) + (M,)*d matching times")
    dim = int(np.prod(W.shape))
    if dim > max_dim:
        raise DimensionOverflowError(f"space-time dimension {dim} exceeds the limit {max_dim}")
    a = as_float(tr.alpha if alpha is None else alpha)
    times = np.asarray(times, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if not np.any(W):
        return DualityResult(0.0, 0.0, a, dim)
    if method == "dense":
        lhs = schatten_norm(duality_operator_matrix(W, lat, times, weights), a)
    elif method == "gram":
        A = _weighted_extension_matrix(W, lat, times, weights)
        ev = np.linalg.eigvalsh(A.conj().T @ A)
        lhs = lp_of_vector(np.clip(ev, 0, None), a)
    else:
        raise ParameterDomainError(f"unknown method {method!r}")
    q2 = 2 * as_float(conjugate_exponent(tr.q))
    r2 = 2 * as_float(conjugate_exponent(tr.r))
    rt2 = 2 * as_float(conjugate_exponent(tr.r_tilde))
    per_t = mixed_norm_values(W, d, k, r2, rt2)
    rhs = time_norm(per_t, weights, q2) ** 2
    return DualityResult(float(lhs), float(rhs), a, dim)

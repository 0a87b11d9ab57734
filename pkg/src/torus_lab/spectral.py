"""Discrete Fourier analysis on the split torus.

The torus is written as a product of an ``x`` block with ``d - k`` coordinates
and a ``y`` block with ``k`` coordinates.  Frequencies live in the cube
``[-N, N]^d`` of the integer lattice.  Arrays of Fourier coefficients always
have shape ``(2N+1,) * d`` and are indexed by ``xi + N``; the first ``d - k``
axes carry the ``x`` frequencies and the last ``k`` axes the ``y``
frequencies.  Flattening in C order gives the lexicographic ordering used by
the serialization formats.

Grid samples live on ``(M,) * d`` points ``z_m = m / M``.  The free flow
multiplies coefficients by ``exp(2 pi i t |xi|^2)``, so it is 1-periodic in
time.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass, field as dc_field
from functools import cached_property
from typing import Callable, Iterator, Sequence, Union

import numpy as np
import scipy.fft as sfft

from .errors import AliasingError, NumericDomainError, ParameterDomainError

__all__ = [
    "FrequencyLattice",
    "TorusGrid",
    "SpectralField",
    "Trajectory",
    "build_lattice",
    "next_pow2",
    "default_grid_size",
    "probe_grid_size",
    "synthesize",
    "analyze",
    "coeffs_to_samples",
    "samples_to_coeffs",
    "coeffs_to_x_samples",
    "reband",
    "propagator_phase",
    "free_propagate",
    "free_trajectory",
    "apply_multiplier",
    "bessel_symbol",
    "bessel_y_symbol",
    "riesz_symbol",
    "periodic_rule",
    "trapezoid_rule",
    "midpoint_rule",
    "field_to_json",
    "field_from_json",
    "field_to_bytes",
    "field_from_bytes",
]


def next_pow2(n: int) -> int:
    """Smallest power of two that is >= ``n``."""
    n = int(n)
    return 1 if n <= 1 else 1 << (n - 1).bit_length()


def default_grid_size(N: int) -> int:
    """Solver grid: room for cubic products of band-``N`` fields."""
    return next_pow2(4 * (2 * N + 1))


def probe_grid_size(N: int) -> int:
    """Cheaper grid for norm probes: room for quadratic products of band-``N`` fields."""
    return sfft.next_fast_len(2 * (2 * N + 1))


@dataclass(frozen=True)
class FrequencyLattice:
    """The truncated frequency cube ``Z^d ∩ [-N, N]^d`` with a ``(d-k, k)`` split.

    Parameters
    ----------
    d : int
        Spatial dimension.
    k : int
        Number of ``y`` coordinates, ``1 <= k <= d``.
    N : int
        Truncation radius.
    """

    d: int
    k: int
    N: int

    def __post_init__(self):
        for name in ("d", "k", "N"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, np.integer)):
                raise ParameterDomainError(f"{name} must be an integer, got {v!r}")
            object.__setattr__(self, name, int(v))
        if self.d < 1:
            raise ParameterDomainError(f"d must be >= 1, got {self.d}")
        if not 1 <= self.k <= self.d:
            raise ParameterDomainError(f"k must satisfy 1 <= k <= d, got k={self.k}, d={self.d}")
        if self.N < 1:
            raise ParameterDomainError(f"N must be >= 1, got {self.N}")

    @property
    def shape(self) -> tuple:
        return (2 * self.N + 1,) * self.d

    @property
    def size(self) -> int:
        return (2 * self.N + 1) ** self.d

    @property
    def axis(self) -> np.ndarray:
        """Integer frequencies ``-N..N`` along one coordinate."""
        return np.arange(-self.N, self.N + 1)

    @cached_property
    def coords(self) -> tuple:
        """Per-coordinate integer frequency arrays broadcast to :attr:`shape`."""
        grids = np.meshgrid(*([self.axis] * self.d), indexing="ij")
        return tuple(g.astype(np.int64) for g in grids)

    @cached_property
    def norms_sq(self) -> np.ndarray:
        """``|xi|^2`` as exact integers, shape :attr:`shape`."""
        return sum(c * c for c in self.coords)

    @cached_property
    def x_norms_sq(self) -> np.ndarray:
        """``|xi_1|^2`` over the ``x`` block (zero when ``k == d``)."""
        out = np.zeros(self.shape, dtype=np.int64)
        for c in self.coords[: self.d - self.k]:
            out = out + c * c
        return out

    @cached_property
    def y_norms_sq(self) -> np.ndarray:
        """``|xi_2|^2`` over the ``y`` block."""
        out = np.zeros(self.shape, dtype=np.int64)
        for c in self.coords[self.d - self.k:]:
            out = out + c * c
        return out

    @cached_property
    def points(self) -> np.ndarray:
        """All lattice points in lexicographic order, shape ``(size, d)``."""
        return np.stack([c.ravel() for c in self.coords], axis=1)

    @cached_property
    def sup_norms(self) -> np.ndarray:
        """``max_i |xi_i|`` per point."""
        return np.max(np.abs(np.stack(self.coords)), axis=0)

    def index_of(self, xi: Sequence[int]) -> tuple:
        """Array index of the lattice point ``xi``."""
        xi = tuple(int(v) for v in xi)
        if len(xi) != self.d or any(abs(v) > self.N for v in xi):
            raise ParameterDomainError(f"{xi} is not a point of the lattice")
        return tuple(v + self.N for v in xi)

    def delta(self, xi: Sequence[int], amplitude: complex = 1.0) -> np.ndarray:
        """Coefficient array of ``amplitude * exp(2 pi i xi . z)``."""
        a = np.zeros(self.shape, dtype=complex)
        a[self.index_of(xi)] = amplitude
        return a

    def random_coeffs(self, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
        """Independent standard complex Gaussian coefficients."""
        z = rng.standard_normal(self.shape) + 1j * rng.standard_normal(self.shape)
        return scale * z / math.sqrt(2.0)


def build_lattice(d: int, k: int, N: int) -> FrequencyLattice:
    """Build the frequency cube of radius ``N`` in dimension ``d`` with ``k`` y-coordinates."""
    return FrequencyLattice(d, k, N)


@dataclass(frozen=True)
class TorusGrid:
    """Uniform sampling grid ``z_m = m / M`` on the unit torus."""

    d: int
    k: int
    M: int

    def __post_init__(self):
        if self.d < 1 or not 1 <= self.k <= self.d:
            raise ParameterDomainError(f"invalid split d={self.d}, k={self.k}")
        if self.M < 1:
            raise ParameterDomainError(f"M must be positive, got {self.M}")

    @property
    def shape(self) -> tuple:
        return (self.M,) * self.d

    @property
    def cell_weight(self) -> float:
        return float(self.M) ** (-self.d)

    @property
    def axis(self) -> np.ndarray:
        return np.arange(self.M) / self.M

    def coords(self) -> tuple:
        """Coordinate arrays broadcast to :attr:`shape`."""
        return tuple(np.meshgrid(*([self.axis] * self.d), indexing="ij"))

    def quadrature(self, values: np.ndarray) -> np.ndarray:
        """Riemann sum over the trailing ``d`` axes."""
        return np.mean(values, axis=tuple(range(-self.d, 0)))


def _check_grid(N: int, M: int) -> None:
    if M < 2 * N + 1:
        raise AliasingError(f"grid of {M} points per axis cannot resolve band N={N} (need M >= {2 * N + 1})")


def _wrap_index(N: int, M: int, d: int) -> tuple:
    idx = np.arange(-N, N + 1) % M
    return (Ellipsis,) + np.ix_(*([idx] * d))


def coeffs_to_samples(coeffs: np.ndarray, d: int, M: int) -> np.ndarray:
    """Evaluate ``sum_xi a(xi) exp(2 pi i z . xi)`` on the grid.

    The trailing ``d`` axes of ``coeffs`` are the lattice; any leading axes
    are treated as a batch.
    """
    coeffs = np.asarray(coeffs)
    N = (coeffs.shape[-1] - 1) // 2
    _check_grid(N, M)
    full = np.zeros(coeffs.shape[: coeffs.ndim - d] + (M,) * d, dtype=complex)
    full[_wrap_index(N, M, d)] = coeffs
    axes = tuple(range(-d, 0))
    return sfft.ifftn(full, axes=axes, norm="forward")


def coeffs_to_x_samples(coeffs: np.ndarray, d: int, k: int, M: int) -> np.ndarray:
    """Synthesize along the ``x`` axes only, keeping ``y`` frequencies.

    Returns an array whose trailing axes are ``(M,) * (d - k) + (2N+1,) * k``.
    By Parseval, the ``L^2_y`` norm at each ``x`` is the ``l^2`` norm over the
    trailing ``k`` axes.
    """
    coeffs = np.asarray(coeffs)
    N = (coeffs.shape[-1] - 1) // 2
    _check_grid(N, M)
    dx = d - k
    if dx == 0:
        return coeffs.astype(complex)
    lead = coeffs.shape[: coeffs.ndim - d]
    full = np.zeros(lead + (M,) * dx + (2 * N + 1,) * k, dtype=complex)
    idx = np.arange(-N, N + 1) % M
    sel = (Ellipsis,) + np.ix_(*([idx] * dx + [np.arange(2 * N + 1)] * k))
    full[sel] = coeffs
    axes = tuple(range(-d, -k))
    return sfft.ifftn(full, axes=axes, norm="forward")


def samples_to_coeffs(samples: np.ndarray, d: int, N: int) -> np.ndarray:
    """Fourier coefficients in the band ``[-N, N]^d`` of grid samples."""
    samples = np.asarray(samples)
    M = samples.shape[-1]
    _check_grid(N, M)
    axes = tuple(range(-d, 0))
    full = sfft.fftn(samples, axes=axes, norm="forward")
    return full[_wrap_index(N, M, d)]


@dataclass(frozen=True, eq=False)
class SpectralField:
    """A band-limited function on the torus.

    Parameters
    ----------
    lattice : FrequencyLattice
        Band on which the coefficients live.
    coeffs : ndarray
        Complex coefficients of shape ``lattice.shape``.
    M : int, optional
        Samples per axis of the associated grid.  Defaults to
        :func:`default_grid_size`.
    """

    lattice: FrequencyLattice
    coeffs: np.ndarray
    M: int = dc_field(default=0)

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.shape != self.lattice.shape:
            raise ParameterDomainError(
                f"coefficient array has shape {c.shape}, lattice expects {self.lattice.shape}"
            )
        c = c.copy()
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)
        M = int(self.M) if self.M else default_grid_size(self.lattice.N)
        _check_grid(self.lattice.N, M)
        object.__setattr__(self, "M", M)

    @property
    def d(self) -> int:
        return self.lattice.d

    @property
    def k(self) -> int:
        return self.lattice.k

    @property
    def N(self) -> int:
        return self.lattice.N

    @property
    def grid(self) -> TorusGrid:
        return TorusGrid(self.d, self.k, self.M)

    @cached_property
    def samples(self) -> np.ndarray:
        s = coeffs_to_samples(self.coeffs, self.d, self.M)
        s.flags.writeable = False
        return s

    def l2_norm(self) -> float:
        """``L^2`` norm computed from the coefficients."""
        return float(np.sqrt(np.sum(np.abs(self.coeffs) ** 2)))

    def with_coeffs(self, coeffs: np.ndarray) -> "SpectralField":
        return SpectralField(self.lattice, coeffs, self.M)

    def on_grid(self, M: int) -> "SpectralField":
        """Same coefficients, different sampling grid."""
        return SpectralField(self.lattice, self.coeffs, M)

    def rebanded(self, N: int) -> "SpectralField":
        """Zero-pad or truncate to band ``N`` keeping the grid size."""
        lat = FrequencyLattice(self.d, self.k, N)
        return SpectralField(lat, reband(self.coeffs, self.d, N), max(self.M, 2 * N + 1))

    @classmethod
    def from_samples(cls, samples: np.ndarray, lattice: FrequencyLattice) -> "SpectralField":
        """Project grid samples onto the band of ``lattice``."""
        samples = np.asarray(samples)
        if samples.ndim != lattice.d:
            raise ParameterDomainError("samples must have exactly d axes")
        return cls(lattice, samples_to_coeffs(samples, lattice.d, lattice.N), samples.shape[-1])


def reband(coeffs: np.ndarray, d: int, N: int) -> np.ndarray:
    """Truncate or zero-pad trailing-``d``-axis coefficient arrays to band ``N``."""
    coeffs = np.asarray(coeffs)
    N0 = (coeffs.shape[-1] - 1) // 2
    if N == N0:
        return coeffs.copy()
    lead = coeffs.shape[: coeffs.ndim - d]
    if N < N0:
        sl = (Ellipsis,) + (slice(N0 - N, N0 + N + 1),) * d
        return coeffs[sl].copy()
    out = np.zeros(lead + (2 * N + 1,) * d, dtype=complex)
    out[(Ellipsis,) + (slice(N - N0, N + N0 + 1),) * d] = coeffs
    return out


def synthesize(coeffs: np.ndarray, grid: Union[TorusGrid, int, None] = None, lattice: FrequencyLattice | None = None) -> SpectralField:
    """Build a field from coefficients.

    Parameters
    ----------
    coeffs : ndarray
        Coefficients of shape ``(2N+1,) * d``.
    grid : TorusGrid or int, optional
        Target grid.  An integer is read as ``M``.  Defaults to the solver grid.
    lattice : FrequencyLattice, optional
        Needed when ``grid`` is not a :class:`TorusGrid` (it carries ``k``).
    """
    coeffs = np.asarray(coeffs)
    N = (coeffs.shape[0] - 1) // 2
    if isinstance(grid, TorusGrid):
        lat = lattice or FrequencyLattice(grid.d, grid.k, N)
        if lat.d != grid.d or lat.k != grid.k:
            raise ParameterDomainError("lattice and grid disagree on (d, k)")
        M = grid.M
    else:
        if lattice is None:
            raise ParameterDomainError("a lattice is required when no TorusGrid is given")
        lat, M = lattice, (grid or 0)
    return SpectralField(lat, coeffs, M)


def analyze(field: SpectralField) -> np.ndarray:
    """Recover the band coefficients from the grid samples of ``field``."""
    return samples_to_coeffs(field.samples, field.d, field.N)


def _axis_phases(N: int, t: np.ndarray) -> np.ndarray:
    xi = np.arange(-N, N + 1)
    return np.exp(2j * np.pi * np.mod(np.multiply.outer(t, xi * xi), 1.0))


def propagator_phase(lattice: FrequencyLattice, t, axes=None) -> np.ndarray:
    """``exp(2 pi i t |xi|^2)`` on the lattice; a time array adds a leading axis.

    The phase factors over coordinates, so only one-dimensional exponentials
    are evaluated.  Each ``t xi_i^2`` is reduced modulo 1 first, which makes
    integer times give phases that are exactly 1.  ``axes`` restricts the
    product to a subset of coordinates (the others contribute 1).
    """
    t = np.asarray(t, dtype=float)
    p1 = _axis_phases(lattice.N, t)
    d = lattice.d
    axes = range(d) if axes is None else axes
    out = np.ones(t.shape + lattice.shape, dtype=complex)
    for i in axes:
        shape = t.shape + tuple(2 * lattice.N + 1 if j == i else 1 for j in range(d))
        out = out * p1.reshape(shape)
    return out


def free_propagate(field: SpectralField, t: float) -> SpectralField:
    """Apply the free Schrödinger flow for time ``t``."""
    if not np.isfinite(t):
        raise ParameterDomainError(f"time must be finite, got {t}")
    return field.with_coeffs(field.coeffs * propagator_phase(field.lattice, t))


Multiplier = Union[np.ndarray, Callable[[FrequencyLattice], np.ndarray]]


def apply_multiplier(field: SpectralField, m: Multiplier) -> SpectralField:
    """Multiply the coefficients by the symbol ``m``.

    ``m`` is either an array over the lattice or a callable taking the lattice
    and returning such an array.
    """
    values = m(field.lattice) if callable(m) else m
    values = np.broadcast_to(np.asarray(values), field.lattice.shape)
    if not np.all(np.isfinite(values)):
        raise NumericDomainError("multiplier has non-finite values on the lattice")
    return field.with_coeffs(field.coeffs * values)


def bessel_symbol(lattice: FrequencyLattice, s: float) -> np.ndarray:
    """Symbol of ``<grad>^s``: ``(1 + |xi|^2)^(s/2)``."""
    return (1.0 + lattice.norms_sq) ** (s / 2.0)


def bessel_y_symbol(lattice: FrequencyLattice, s: float) -> np.ndarray:
    """Symbol of ``<grad_y>^s``: ``(1 + |xi_2|^2)^(s/2)``."""
    return (1.0 + lattice.y_norms_sq) ** (s / 2.0)


def riesz_symbol(lattice: FrequencyLattice, s: float) -> np.ndarray:
    """Symbol of ``|grad|^s``; for ``s < 0`` the zero mode is set to 0."""
    nsq = lattice.norms_sq.astype(float)
    if s >= 0:
        return nsq ** (s / 2.0)
    out = np.zeros_like(nsq)
    nz = nsq > 0
    out[nz] = nsq[nz] ** (s / 2.0)
    return out


# ---------------------------------------------------------------------------
# time quadrature rules


def periodic_rule(n: int, start: float = 0.0, period: float = 1.0):
    """``n`` equispaced samples of one period; the trapezoid rule for periodic data."""
    if n < 1:
        raise ParameterDomainError("need at least one time sample")
    times = start + period * np.arange(n) / n
    return times, np.full(n, period / n)


def trapezoid_rule(a: float, b: float, n: int):
    """Composite trapezoid rule on ``n`` equispaced nodes of ``[a, b]``."""
    if n < 2 or not b > a:
        raise ParameterDomainError("trapezoid rule needs n >= 2 and b > a")
    times = np.linspace(a, b, n)
    h = (b - a) / (n - 1)
    w = np.full(n, h)
    w[0] = w[-1] = h / 2
    return times, w


def midpoint_rule(a: float, b: float, n: int):
    """Composite midpoint rule with ``n`` cells on ``[a, b]``."""
    if n < 1 or not b > a:
        raise ParameterDomainError("midpoint rule needs n >= 1 and b > a")
    h = (b - a) / n
    return a + h * (np.arange(n) + 0.5), np.full(n, h)


class Trajectory:
    """Time samples of a function on the torus together with quadrature weights.

    A trajectory is either band-limited (built from ``coeffs`` of shape
    ``(n_t,) + lattice.shape``) or given directly by grid ``samples`` of shape
    ``(n_t,) + (M,) * d``.

    Parameters
    ----------
    times, weights : array_like
        Strictly increasing sample times and their quadrature weights.
    coeffs : ndarray, optional
        Stacked coefficients; requires ``lattice``.
    lattice : FrequencyLattice, optional
    M : int, optional
        Grid size; defaults to the solver grid of the lattice.
    samples : ndarray, optional
        Stacked grid samples, used instead of coefficients.
    k : int, optional
        Split index when only samples are given.
    """

    def __init__(self, times, weights, coeffs=None, lattice=None, M=None, samples=None, k=None):
        self.times = np.asarray(times, dtype=float).copy()
        self.weights = np.asarray(weights, dtype=float).copy()
        if self.times.ndim != 1 or self.times.size == 0:
            raise ParameterDomainError("trajectory needs a non-empty 1-d array of times")
        if self.weights.shape != self.times.shape:
            raise ParameterDomainError("weights and times must have the same length")
        if np.any(np.diff(self.times) <= 0):
            raise ParameterDomainError("times must be strictly increasing")
        if (coeffs is None) == (samples is None):
            raise ParameterDomainError("give exactly one of coeffs or samples")
        self.lattice = lattice
        if coeffs is not None:
            if lattice is None:
                raise ParameterDomainError("coeffs require a lattice")
            coeffs = np.asarray(coeffs, dtype=complex)
            if coeffs.shape != (self.times.size,) + lattice.shape:
                raise ParameterDomainError(f"coeffs shape {coeffs.shape} does not match times/lattice")
            self.d, self.k = lattice.d, lattice.k
            self.M = int(M) if M else default_grid_size(lattice.N)
            _check_grid(lattice.N, self.M)
            self.coeffs = coeffs
            self._samples = None
        else:
            samples = np.asarray(samples, dtype=complex)
            self.d = samples.ndim - 1
            if samples.shape[0] != self.times.size or self.d < 1:
                raise ParameterDomainError("samples must have shape (n_t, M, ..., M)")
            if lattice is not None:
                self.k = lattice.k
            elif k is not None:
                self.k = int(k)
            else:
                raise ParameterDomainError("samples require k or a lattice")
            self.M = samples.shape[-1]
            self.coeffs = None
            self._samples = samples

    def __len__(self) -> int:
        return self.times.size

    @property
    def span(self) -> float:
        """Total quadrature weight, the length of the time interval."""
        return float(self.weights.sum())

    @property
    def band_limited(self) -> bool:
        return self.coeffs is not None

    @property
    def samples(self) -> np.ndarray:
        """All grid samples, shape ``(n_t,) + (M,) * d`` (computed on demand)."""
        if self._samples is None:
            self._samples = coeffs_to_samples(self.coeffs, self.d, self.M)
        return self._samples

    def __getitem__(self, i: int) -> SpectralField:
        if self.coeffs is None:
            raise ParameterDomainError("sample-only trajectories have no band-limited fields")
        return SpectralField(self.lattice, self.coeffs[i], self.M)

    @property
    def fields(self) -> list:
        return [self[i] for i in range(len(self))]

    def iter_sample_chunks(self, chunk: int = 64) -> Iterator[np.ndarray]:
        """Yield grid samples in blocks of at most ``chunk`` time slices."""
        if self._samples is not None:
            for i in range(0, len(self), chunk):
                yield self._samples[i:i + chunk]
            return
        for i in range(0, len(self), chunk):
            yield coeffs_to_samples(self.coeffs[i:i + chunk], self.d, self.M)

    def final(self) -> SpectralField:
        return self[len(self) - 1]


def free_trajectory(field: SpectralField, times, weights=None, M: int | None = None) -> Trajectory:
    """Free evolution of ``field`` sampled at ``times``."""
    times = np.asarray(times, dtype=float)
    if weights is None:
        weights = np.full(times.shape, np.nan)
    coeffs = propagator_phase(field.lattice, times) * field.coeffs
    return Trajectory(times, weights, coeffs=coeffs, lattice=field.lattice, M=M or field.M)


# ---------------------------------------------------------------------------
# serialization
#
# Binary layout (all little-endian):
#   bytes 0..3    magic b"TLF1"
#   bytes 4..19   four uint32: d, k, N, M
#   bytes 20..    (2N+1)^d complex numbers in lexicographic xi order,
#                 each stored as two float64 (real part, imaginary part)

_MAGIC = b"TLF1"
_HEADER = struct.Struct("<4s4I")


def field_to_bytes(field: SpectralField) -> bytes:
    """Serialize a field to the documented little-endian binary record."""
    head = _HEADER.pack(_MAGIC, field.d, field.k, field.N, field.M)
    body = np.ascontiguousarray(field.coeffs.ravel()).astype("<c16").tobytes()
    return head + body


def field_from_bytes(data: bytes) -> SpectralField:
    """Inverse of :func:`field_to_bytes`."""
    if len(data) < _HEADER.size:
        raise ParameterDomainError("truncated field record")
    magic, d, k, N, M = _HEADER.unpack_from(data)
    if magic != _MAGIC:
        raise ParameterDomainError("not a field record (bad magic)")
    lat = FrequencyLattice(d, k, N)
    expected = _HEADER.size + 16 * lat.size
    if len(data) != expected:
        raise ParameterDomainError(f"field record has {len(data)} bytes, expected {expected}")
    c = np.frombuffer(data, dtype="<c16", offset=_HEADER.size).reshape(lat.shape)
    return SpectralField(lat, c.astype(complex), M)


def field_to_json(field: SpectralField) -> str:
    """JSON record ``{d, k, N, M, coeffs}`` with interleaved real/imag parts."""
    flat = field.coeffs.ravel()
    inter = np.empty(2 * flat.size)
    inter[0::2], inter[1::2] = flat.real, flat.imag
    return json.dumps({"d": field.d, "k": field.k, "N": field.N, "M": field.M, "coeffs": inter.tolist()})


def field_from_json(text: str) -> SpectralField:
    """Inverse of :func:`field_to_json`."""
    rec = json.loads(text)
    lat = FrequencyLattice(rec["d"], rec["k"], rec["N"])
    inter = np.asarray(rec["coeffs"], dtype=float)
    if inter.size != 2 * lat.size:
        raise ParameterDomainError("coefficient list has the wrong length")
    return SpectralField(lat, (inter[0::2] + 1j * inter[1::2]).reshape(lat.shape), rec["M"])

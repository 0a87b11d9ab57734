import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from torus_lab.errors import AliasingError, ParameterDomainError
from torus_lab.spectral import (
    FrequencyLattice,
    SpectralField,
    TorusGrid,
    analyze,
    apply_multiplier,
    bessel_symbol,
    bessel_y_symbol,
    build_lattice,
    default_grid_size,
    field_from_bytes,
    field_from_json,
    field_to_bytes,
    field_to_json,
    free_propagate,
    free_trajectory,
    periodic_rule,
    propagator_phase,
    reband,
    synthesize,
    trapezoid_rule,
)


def direct_synthesis(a, lat, M):
    """Brute-force sum over lattice points at every grid point."""
    x = np.arange(M) / M
    grids = np.meshgrid(*([x] * lat.d), indexing="ij")
    out = np.zeros((M,) * lat.d, dtype=complex)
    for xi in lat.points:
        phase = sum(g * c for g, c in zip(grids, xi))
        out += a[lat.index_of(xi)] * np.exp(2j * np.pi * phase)
    return out


def direct_analysis(samples, lat):
    M = samples.shape[0]
    x = np.arange(M) / M
    grids = np.meshgrid(*([x] * lat.d), indexing="ij")
    out = np.zeros(lat.shape, dtype=complex)
    for xi in lat.points:
        phase = sum(g * c for g, c in zip(grids, xi))
        out[lat.index_of(xi)] = np.mean(samples * np.exp(-2j * np.pi * phase))
    return out


class TestLattice:
    def test_counts(self):
        lat = build_lattice(1, 1, 2)
        assert lat.size == 5
        assert lat.axis.tolist() == [-2, -1, 0, 1, 2]
        assert lat.norms_sq.tolist() == [4, 1, 0, 1, 4]
        assert build_lattice(3, 2, 1).size == 27
        lat2 = build_lattice(2, 1, 4)
        assert lat2.size == 81
        assert lat2.norms_sq[lat2.index_of((3, -4))] == 25

    def test_split_norms(self):
        lat = FrequencyLattice(3, 2, 2)
        idx = lat.index_of((1, 2, -2))
        assert lat.x_norms_sq[idx] == 1
        assert lat.y_norms_sq[idx] == 8
        assert lat.norms_sq[idx] == 9

    @pytest.mark.parametrize("d,k,N", [(0, 1, 1), (2, 0, 1), (2, 3, 1), (1, 1, 0), (1.5, 1, 1)])
    def test_rejects_bad_parameters(self, d, k, N):
        with pytest.raises(ParameterDomainError):
            FrequencyLattice(d, k, N)

    def test_index_outside(self):
        with pytest.raises(ParameterDomainError):
            FrequencyLattice(1, 1, 2).index_of((3,))


class TestTransforms:
    def test_delta_zero_is_constant(self):
        lat = FrequencyLattice(2, 1, 3)
        f = SpectralField(lat, lat.delta((0, 0)))
        np.testing.assert_allclose(f.samples, 1.0, atol=1e-15)

    def test_plane_wave_samples(self):
        lat = FrequencyLattice(2, 1, 2)
        f = SpectralField(lat, lat.delta((1, 0)), 8)
        x = np.arange(8) / 8
        expected = np.exp(2j * np.pi * x)[:, None] * np.ones(8)[None, :]
        np.testing.assert_allclose(f.samples, expected, atol=1e-14)

    def test_matches_direct_sum(self, rng):
        lat = FrequencyLattice(1, 1, 4)
        a = lat.random_coeffs(rng)
        f = synthesize(a, 16, lattice=lat)
        np.testing.assert_allclose(f.samples, direct_synthesis(a, lat, 16), atol=1e-12)
        np.testing.assert_allclose(analyze(f), direct_analysis(f.samples, lat), atol=1e-12)
        assert np.max(np.abs(analyze(f) - a)) <= 1e-12 * np.max(np.abs(a))

    def test_direct_sum_2d(self, rng):
        lat = FrequencyLattice(2, 1, 2)
        a = lat.random_coeffs(rng)
        f = synthesize(a, TorusGrid(2, 1, 7))
        np.testing.assert_allclose(f.samples, direct_synthesis(a, lat, 7), atol=1e-12)

    @given(d=st.integers(1, 3), N=st.integers(1, 4), extra=st.integers(0, 5), seed=st.integers(0, 2**32 - 1))
    def test_roundtrip(self, d, N, extra, seed):
        lat = FrequencyLattice(d, 1, N)
        a = lat.random_coeffs(np.random.default_rng(seed))
        M = 2 * N + 1 + extra
        back = analyze(SpectralField(lat, a, M))
        assert np.max(np.abs(back - a)) <= 1e-12 * max(1.0, np.max(np.abs(a)))

    def test_aliasing_rejected(self):
        lat = FrequencyLattice(1, 1, 4)
        with pytest.raises(AliasingError):
            SpectralField(lat, np.zeros(lat.shape), 8)

    def test_default_grid(self):
        assert default_grid_size(4) == 64
        assert SpectralField(FrequencyLattice(1, 1, 4), np.zeros(9)).M == 64

    def test_from_samples_projects(self, rng):
        lat = FrequencyLattice(1, 1, 3)
        a = lat.random_coeffs(rng)
        f = SpectralField(lat, a, 32)
        g = SpectralField.from_samples(np.asarray(f.samples), lat)
        np.testing.assert_allclose(g.coeffs, a, atol=1e-13)

    def test_reband(self, rng):
        lat = FrequencyLattice(2, 1, 2)
        a = lat.random_coeffs(rng)
        up = reband(a, 2, 4)
        assert up.shape == (9, 9)
        np.testing.assert_array_equal(reband(up, 2, 2), a)
        f = SpectralField(lat, a, 16).rebanded(4)
        np.testing.assert_allclose(f.samples, SpectralField(lat, a, 16).samples, atol=1e-13)


class TestPropagator:
    def test_time_zero_identity(self, rng):
        lat = FrequencyLattice(2, 1, 3)
        f = SpectralField(lat, lat.random_coeffs(rng))
        np.testing.assert_array_equal(free_propagate(f, 0.0).coeffs, f.coeffs)

    def test_plane_wave_phase(self):
        lat = FrequencyLattice(2, 2, 3)
        xi = (2, -1)
        f = SpectralField(lat, lat.delta(xi), 16)
        t = 0.137
        g = free_propagate(f, t)
        np.testing.assert_allclose(g.samples, np.exp(2j * np.pi * t * 5) * f.samples, atol=1e-13)
        np.testing.assert_allclose(np.abs(g.samples), 1.0, atol=1e-13)

    @given(t=st.floats(-50, 50, allow_nan=False), seed=st.integers(0, 2**32 - 1))
    def test_unitary(self, t, seed):
        lat = FrequencyLattice(2, 1, 4)
        f = SpectralField(lat, lat.random_coeffs(np.random.default_rng(seed)))
        assert abs(free_propagate(f, t).l2_norm() - f.l2_norm()) <= 1e-12 * f.l2_norm()

    @given(s=st.floats(-3, 3, allow_nan=False), t=st.floats(-3, 3, allow_nan=False))
    def test_group_law(self, s, t):
        lat = FrequencyLattice(1, 1, 6)
        a = lat.random_coeffs(np.random.default_rng(0))
        f = SpectralField(lat, a)
        lhs = free_propagate(free_propagate(f, s), t).coeffs
        rhs = free_propagate(f, s + t).coeffs
        assert np.max(np.abs(lhs - rhs)) <= 1e-12 * np.max(np.abs(a)) * 10

    def test_integer_periodicity_exact(self, rng):
        lat = FrequencyLattice(3, 2, 3)
        f = SpectralField(lat, lat.random_coeffs(rng))
        for n in (1, 2, -3):
            np.testing.assert_array_equal(free_propagate(f, float(n)).coeffs, f.coeffs)
        assert np.all(propagator_phase(lat, 1.0) == 1.0)

    def test_nonfinite_time(self):
        lat = FrequencyLattice(1, 1, 2)
        with pytest.raises(ParameterDomainError):
            free_propagate(SpectralField(lat, lat.delta((0,))), float("nan"))

    def test_time_array_shape(self):
        lat = FrequencyLattice(2, 1, 2)
        assert propagator_phase(lat, np.zeros(4)).shape == (4, 5, 5)


class TestMultipliers:
    def test_identity_symbols(self, rng):
        lat = FrequencyLattice(2, 1, 3)
        f = SpectralField(lat, lat.random_coeffs(rng))
        np.testing.assert_array_equal(apply_multiplier(f, np.ones(lat.shape)).coeffs, f.coeffs)
        np.testing.assert_allclose(apply_multiplier(f, lambda L: bessel_symbol(L, 0)).coeffs, f.coeffs)

    def test_bessel_y_on_plane_wave(self):
        lat = FrequencyLattice(3, 2, 4)
        f = SpectralField(lat, lat.delta((1, 3, 4)))
        g = apply_multiplier(f, bessel_y_symbol(lat, 1.0))
        assert g.coeffs[lat.index_of((1, 3, 4))] == pytest.approx(np.sqrt(26))


class TestQuadrature:
    def test_rules(self):
        t, w = periodic_rule(8)
        assert w.sum() == pytest.approx(1.0)
        t, w = trapezoid_rule(0.0, 2.0, 5)
        assert w.sum() == pytest.approx(2.0)
        assert np.sum(w * t ** 2) == pytest.approx(8 / 3, rel=0.05)

    def test_free_trajectory(self, rng):
        lat = FrequencyLattice(1, 1, 3)
        f = SpectralField(lat, lat.random_coeffs(rng))
        tr = free_trajectory(f, [0.0, 0.25])
        np.testing.assert_allclose(tr[1].coeffs, free_propagate(f, 0.25).coeffs)
        assert tr.samples.shape == (2, f.M)


class TestSerialization:
    def test_bytes_roundtrip(self, rng):
        lat = FrequencyLattice(2, 1, 2)
        f = SpectralField(lat, lat.random_coeffs(rng), 9)
        blob = field_to_bytes(f)
        assert blob[:4] == b"TLF1" and len(blob) == 20 + 16 * 25
        g = field_from_bytes(blob)
        assert (g.d, g.k, g.N, g.M) == (2, 1, 2, 9)
        np.testing.assert_array_equal(g.coeffs, f.coeffs)

    def test_json_roundtrip(self, rng):
        lat = FrequencyLattice(1, 1, 3)
        f = SpectralField(lat, lat.random_coeffs(rng))
        g = field_from_json(field_to_json(f))
        np.testing.assert_array_equal(g.coeffs, f.coeffs)
        assert len(json.loads(field_to_json(f))["coeffs"]) == 14

    def test_bad_records(self):
        with pytest.raises(ParameterDomainError):
            field_from_bytes(b"XXXX" + bytes(16))
        with pytest.raises(ParameterDomainError):
            field_from_bytes(b"TL")

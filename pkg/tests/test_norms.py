import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from torus_lab.ensemble import DensityMatrix, OrthonormalEnsemble, make_ons
from torus_lab.errors import ParameterDomainError
from torus_lab.norms import (
    FiniteOperator,
    lp_of_vector,
    lr_sobolev_norm,
    mixed_besov_norm,
    mixed_space_norm,
    operator_sobolev_schatten_norm,
    partial_sobolev_norm,
    schatten_norm,
    sobolev_norm,
    sobolev_schatten_norm,
    spacetime_norm,
    time_norm,
)
from torus_lab.spectral import FrequencyLattice, SpectralField, free_trajectory, periodic_rule


def brute_mixed(samples, r, rt):
    """Nested quadrature on a 2D grid with x the first axis."""
    inner = np.mean(np.abs(samples) ** rt, axis=1) ** (1 / rt)
    return np.mean(inner ** r) ** (1 / r)


class TestMixedNorms:
    def test_constant_is_one(self):
        lat = FrequencyLattice(2, 1, 2)
        f = SpectralField(lat, lat.delta((0, 0)))
        for r, rt in [(2, 2), (4, 3), ("inf", 2), (7, 7)]:
            assert mixed_space_norm(f, r, rt) == pytest.approx(1.0, abs=1e-14)

    def test_cosine(self):
        lat = FrequencyLattice(2, 1, 2)
        f = SpectralField(lat, lat.delta((1, 0)) + lat.delta((-1, 0)), 16)
        assert mixed_space_norm(f, 2, 2) == pytest.approx(math.sqrt(2), abs=1e-13)
        assert brute_mixed(np.asarray(f.samples), 2, 2) == pytest.approx(math.sqrt(2), abs=1e-13)

    def test_separable(self, rng):
        lat1 = FrequencyLattice(1, 1, 3)
        g = SpectralField(lat1, lat1.random_coeffs(rng), 32)
        h = SpectralField(lat1, lat1.random_coeffs(rng), 32)
        prod = np.multiply.outer(np.asarray(g.samples), np.asarray(h.samples))
        val = mixed_space_norm(prod, 4, 3, k=1)
        assert val == pytest.approx(mixed_space_norm(g, 4, 4) * mixed_space_norm(h, 3, 3), rel=1e-12)

    @given(seed=st.integers(0, 2**32 - 1), r=st.sampled_from([1, 2, 3, 4.5]), rt=st.sampled_from([1, 2, 3]))
    def test_brute_force_oracle(self, seed, r, rt):
        lat = FrequencyLattice(2, 1, 2)
        f = SpectralField(lat, lat.random_coeffs(np.random.default_rng(seed)), 11)
        assert mixed_space_norm(f, r, rt) == pytest.approx(brute_mixed(np.asarray(f.samples), r, rt), rel=1e-12)

    def test_l2_parseval(self, rng):
        lat = FrequencyLattice(3, 2, 2)
        f = SpectralField(lat, lat.random_coeffs(rng))
        assert mixed_space_norm(f, 2, 2) == pytest.approx(f.l2_norm(), rel=1e-12)

    def test_rejects_small_exponent(self):
        lat = FrequencyLattice(1, 1, 1)
        with pytest.raises(ParameterDomainError):
            mixed_space_norm(SpectralField(lat, lat.delta((0,))), 0.5, 2)


class TestTimeNorms:
    def test_constant_in_time(self):
        t = np.linspace(0, 0.3, 11)
        w = np.full(11, 0.3 / 11)
        assert time_norm(np.full(11, 2.0), w, 4) == pytest.approx(2.0 * 0.3 ** 0.25)

    def test_single_sample(self):
        assert time_norm(np.array([3.0]), np.array([0.5]), 2) == pytest.approx(3.0 * 0.5 ** 0.5)

    def test_plane_wave_one(self):
        lat = FrequencyLattice(2, 1, 3)
        f = SpectralField(lat, lat.delta((2, -3)))
        t, w = periodic_rule(16)
        tr = free_trajectory(f, t, w)
        for q, r, rt in [(2, 2, 2), (8, 4, 2), ("inf", 5, 3)]:
            assert spacetime_norm(tr, q, r, rt) == pytest.approx(1.0, abs=1e-12)


class TestSobolev:
    def test_s0_is_l2(self, rng):
        lat = FrequencyLattice(2, 1, 3)
        f = SpectralField(lat, lat.random_coeffs(rng))
        assert lr_sobolev_norm(f, 0, 2) == pytest.approx(f.l2_norm(), rel=1e-14)

    def test_plane_wave(self):
        lat = FrequencyLattice(2, 1, 5)
        f = SpectralField(lat, lat.delta((3, -4)))
        assert lr_sobolev_norm(f, 1, 2) == pytest.approx(math.sqrt(26))
        assert lr_sobolev_norm(f, 1, 4) == pytest.approx(math.sqrt(26), rel=1e-12)

    def test_coefficient_oracle(self, rng):
        lat = FrequencyLattice(2, 1, 4)
        a = lat.random_coeffs(rng)
        f = SpectralField(lat, a)
        direct = math.sqrt(sum((1 + xi @ xi) ** 0.5 * abs(a[lat.index_of(xi)]) ** 2 for xi in lat.points))
        assert sobolev_norm(f, 0.5) == pytest.approx(direct, rel=1e-12)

    def test_partial_sobolev(self, rng):
        lat = FrequencyLattice(2, 1, 4)
        q = 4
        f = SpectralField(lat, lat.delta((2, 3)))
        s = 0.7
        expected = (1 + 9) ** ((s - 1 / q) / 2) * (1 + 4 + 9) ** (1 / (2 * q))
        assert partial_sobolev_norm(f, s, q) == pytest.approx(expected)
        g = SpectralField(lat, lat.random_coeffs(rng))
        assert partial_sobolev_norm(g, 1 / q, q) == pytest.approx(sobolev_norm(g, 1 / q))
        assert partial_sobolev_norm(g, s, q) <= sobolev_norm(g, s) * (1 + 1e-12)

    def test_partial_sobolev_warns(self, rng):
        lat = FrequencyLattice(2, 1, 2)
        g = SpectralField(lat, lat.random_coeffs(rng))
        with pytest.warns(UserWarning):
            partial_sobolev_norm(g, 3.0, 4)

    def test_besov(self, rng):
        lat = FrequencyLattice(2, 1, 8)
        a = lat.random_coeffs(rng) * ((lat.sup_norms > 2) & (lat.sup_norms <= 4))
        f = SpectralField(lat, a)
        assert mixed_besov_norm(f, 0.5, 2, 2) == pytest.approx(2.0 * f.l2_norm(), rel=1e-12)
        const = SpectralField(lat, lat.delta((0, 0)))
        assert mixed_besov_norm(const, 3.0, 4, 2) == pytest.approx(1.0)
        assert math.isfinite(mixed_besov_norm(SpectralField(lat, lat.random_coeffs(rng)), 0, 3, 3))


class TestSchatten:
    def test_diagonal(self):
        op = FiniteOperator(np.diag([3.0, 4.0]))
        assert schatten_norm(op, 1) == pytest.approx(7)
        assert schatten_norm(op, 2) == pytest.approx(5)
        assert schatten_norm(op, "inf") == pytest.approx(4)

    @given(alpha=st.floats(1, 10), seed=st.integers(0, 1000))
    def test_rank_one(self, alpha, seed):
        g = np.random.default_rng(seed)
        u = g.standard_normal(5) + 1j * g.standard_normal(5)
        v = g.standard_normal(5) + 1j * g.standard_normal(5)
        assert schatten_norm(np.outer(u, v.conj()), alpha) == pytest.approx(
            np.linalg.norm(u) * np.linalg.norm(v), rel=1e-10)

    def test_hilbert_schmidt_is_frobenius(self, rng):
        m = rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8))
        assert abs(schatten_norm(m, 2) - math.sqrt(np.sum(np.abs(m) ** 2))) <= 1e-10 * np.linalg.norm(m)

    def test_lp_vector(self):
        assert lp_of_vector(np.array([3.0, 4.0]), 2) == pytest.approx(5)
        assert lp_of_vector(np.array([1e300, 1e300]), 2) == pytest.approx(math.sqrt(2) * 1e300)

    def test_sobolev_schatten(self, rng):
        lat = FrequencyLattice(2, 1, 2)
        ens = make_ons("random", 4, lat, seed=3, weights=[1.0, 0.5, 0.25, 2.0])
        assert sobolev_schatten_norm(ens, 1.5, 0) == pytest.approx(lp_of_vector(ens.weights, 1.5))
        single = OrthonormalEnsemble(lat, lat.delta((0, 1)).reshape(1, -1), np.ones(1))
        for ap in (1, 2, 5):
            assert sobolev_schatten_norm(single, ap, 0.8) == pytest.approx(2 ** 0.8)
        two = make_ons("random", 2, lat, seed=5)
        dense = DensityMatrix(two).matrix()
        assert sobolev_schatten_norm(two, 2, 0.5) == pytest.approx(
            operator_sobolev_schatten_norm(dense, lat, 2, 0.5), rel=1e-12)

    def test_operator_checks(self):
        with pytest.raises(ParameterDomainError):
            FiniteOperator(np.zeros((2, 3)))
        with pytest.raises(ParameterDomainError):
            schatten_norm(np.eye(2), 0.5)

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from torus_lab.ensemble import OrthonormalEnsemble, make_ons
from torus_lab.errors import ParameterDomainError
from torus_lab.littlewood_paley import (
    ProjectorBank,
    bernstein_ratio,
    bump_phi,
    density_lp_ratio,
    density_norm,
    density_square_norm,
    dyadic_symbol,
    l2_extension_ratio,
    lp_equivalence_scan,
    project_dyadic,
    project_leq,
    shell_family,
    square_function_norm,
)
from torus_lab.norms import mixed_space_norm
from torus_lab.spectral import FrequencyLattice, SpectralField


def test_bump_profile():
    assert bump_phi(np.array([0.0, 0.5, 1.0]))[:3].tolist() == [1.0, 1.0, 1.0]
    assert bump_phi(np.array([2.0, 3.0])).tolist() == [0.0, 0.0]
    assert bump_phi(np.array([1.5]))[0] == pytest.approx(0.5)
    vals = bump_phi(np.linspace(0, 3, 301))
    assert np.all(np.diff(vals) <= 0)


def test_sharp_leq_keeps_band():
    lat = FrequencyLattice(2, 1, 4)
    f = SpectralField(lat, lat.delta((3, -4)))
    np.testing.assert_array_equal(project_leq(f, 4, "sharp").coeffs, f.coeffs)


def test_smooth_leq_kills_far_plane_wave():
    lat = FrequencyLattice(1, 1, 8)
    f = SpectralField(lat, lat.delta((5,)))
    assert np.all(project_leq(f, 2, "smooth").coeffs == 0)


def test_radius_three_levels():
    lat = FrequencyLattice(1, 1, 8)
    f = SpectralField(lat, lat.delta((3,)))
    nonzero = {N for N in (1, 2, 4, 8) if np.any(project_dyadic(f, N, "smooth").coeffs != 0)}
    assert nonzero == {2, 4}
    i = lat.index_of((3,))
    assert dyadic_symbol(lat, 2)[i] == pytest.approx(0.5)
    assert dyadic_symbol(lat, 4)[i] == pytest.approx(0.5)


def test_constant_field_levels():
    lat = FrequencyLattice(2, 2, 4)
    f = SpectralField(lat, lat.delta((0, 0)))
    np.testing.assert_array_equal(project_dyadic(f, 1, "smooth").coeffs, f.coeffs)
    for N in (2, 4):
        assert np.all(project_dyadic(f, N, "smooth").coeffs == 0)
    assert square_function_norm(f, 3, 2) == pytest.approx(1.0)


@pytest.mark.parametrize("profile", ["sharp", "smooth"])
@pytest.mark.parametrize("d,k,N", [(1, 1, 5), (2, 1, 6), (3, 2, 3)])
def test_partition_of_unity(profile, d, k, N):
    bank = ProjectorBank(FrequencyLattice(d, k, N), profile)
    np.testing.assert_allclose(bank.partition(), 1.0, atol=1e-15)


def test_non_dyadic_rejected():
    with pytest.raises(ParameterDomainError):
        dyadic_symbol(FrequencyLattice(1, 1, 4), 3)
    with pytest.raises(ParameterDomainError):
        square_function_norm(SpectralField(FrequencyLattice(1, 1, 1), np.ones(3)), "inf", 2)


def test_single_shell_square_function(rng):
    lat = FrequencyLattice(2, 1, 8)
    a = lat.random_coeffs(rng) * ((lat.sup_norms > 2) & (lat.sup_norms <= 4))
    f = SpectralField(lat, a)
    assert square_function_norm(f, 4, 2, "sharp") == pytest.approx(mixed_space_norm(f, 4, 2), rel=1e-12)


@given(seed=st.integers(0, 10_000))
def test_sharp_l2_parseval(seed):
    lat = FrequencyLattice(2, 1, 6)
    f = SpectralField(lat, lat.random_coeffs(np.random.default_rng(seed)))
    assert square_function_norm(f, 2, 2, "sharp") == pytest.approx(mixed_space_norm(f, 2, 2), abs=1e-12 * f.l2_norm())


def test_scan_plane_waves_sharp():
    lat = FrequencyLattice(2, 1, 4)

    def sampler(g):
        xi = tuple(int(v) for v in g.integers(-4, 5, size=2))
        return SpectralField(lat, lat.delta(xi))

    res = lp_equivalence_scan(sampler, 4, 3, 10, "sharp")
    assert res.min_ratio == pytest.approx(1.0) and res.max_ratio == pytest.approx(1.0)


def test_scan_spread_stable_small():
    def sampler_for(N):
        lat = FrequencyLattice(2, 1, N)
        return lambda g: SpectralField(lat, lat.random_coeffs(g))

    m8 = lp_equivalence_scan(sampler_for(8), 4, 3, 20, seed=1).max_ratio
    m16 = lp_equivalence_scan(sampler_for(16), 4, 3, 20, seed=1).max_ratio
    assert m16 / m8 < 1.5


def test_density_rank_one_reduces(rng):
    lat = FrequencyLattice(2, 1, 4)
    ens = make_ons("random", 1, lat, seed=4)
    f = ens.field(0)
    scalar = square_function_norm(f, 4, 4, "smooth")
    assert density_square_norm(ens, r=2, r_tilde=2) == pytest.approx(scalar ** 2, rel=1e-12)
    assert density_norm(ens, r=2, r_tilde=2) == pytest.approx(mixed_space_norm(f, 4, 4) ** 2, rel=1e-12)


def test_density_single_shell_equality(rng):
    lat = FrequencyLattice(2, 1, 8)
    mask = (lat.sup_norms > 4) & (lat.sup_norms <= 8)
    frames = np.eye(lat.size, dtype=complex)[mask.ravel()][:3]
    ens = OrthonormalEnsemble(lat, frames, np.array([1.0, 2.0, 0.5]))
    assert density_lp_ratio(ens, 2, 2, "sharp") == pytest.approx(1.0, abs=1e-12)


def test_bernstein():
    lat = FrequencyLattice(1, 1, 8)
    for N in (1, 2, 4, 8):
        c = np.zeros(lat.shape, dtype=complex)
        c[lat.index_of((N,))] = 1
        ratio = bernstein_ratio(SpectralField(lat, c), 1.0, N, 4, 4)
        assert ratio == pytest.approx(math.sqrt(1 + N * N) / N)
        assert ratio <= math.sqrt(2) + 1e-12
    fam = [SpectralField(lat, c) for c in shell_family(lat, 8, 3, np.random.default_rng(0))]
    assert bernstein_ratio(fam, 0.0, 8, 4, 2) == pytest.approx(1.0, abs=1e-14)


def test_bernstein_support_check():
    lat = FrequencyLattice(1, 1, 8)
    with pytest.raises(ParameterDomainError):
        bernstein_ratio(SpectralField(lat, lat.delta((1,))), 1.0, 8, 2, 2)


def test_l2_extension_identity(rng):
    lat = FrequencyLattice(2, 1, 3)
    fam = [SpectralField(lat, lat.random_coeffs(rng)) for _ in range(3)]
    assert l2_extension_ratio(fam, np.ones(lat.shape), 4, 2) == pytest.approx(1.0)

import numpy as np
import pytest
from hypothesis import given, strategies as st

from torus_lab.ensemble import (
    DensityMatrix,
    OrthonormalEnsemble,
    density_field,
    density_samples,
    gram_deviation,
    make_ons,
)
from torus_lab.errors import AliasingError, ParameterDomainError
from torus_lab.spectral import FrequencyLattice, SpectralField, free_propagate


def test_complete_plane_wave_basis():
    lat = FrequencyLattice(2, 1, 2)
    ens = make_ons("plane_waves", lat.size, lat)
    assert gram_deviation(ens.frames) == 0.0
    for t in (0.0, 0.3, 0.77):
        rho = density_samples(ens.frames, ens.weights, lat, 16, t)
        np.testing.assert_allclose(rho, lat.size, rtol=1e-12)


def test_random_reproducible():
    lat = FrequencyLattice(2, 1, 3)
    a = make_ons("random", 4, lat, seed=11)
    b = make_ons("random", 4, lat, seed=11)
    assert a.frames.tobytes() == b.frames.tobytes()


@given(J=st.integers(1, 8), seed=st.integers(0, 10_000), kind=st.sampled_from(["random", "plane_waves"]))
def test_gram(J, seed, kind):
    lat = FrequencyLattice(2, 1, 2)
    assert make_ons(kind, J, lat, seed=seed).gram_deviation() < 1e-10


def test_single_frame_density():
    lat = FrequencyLattice(1, 1, 3)
    ens = make_ons("random", 1, lat, seed=2)
    t = 0.21
    u = free_propagate(ens.field(0), t)
    np.testing.assert_allclose(density_field(ens, t).samples, np.abs(u.samples) ** 2, atol=1e-12)


def test_trace_identity():
    lat = FrequencyLattice(2, 1, 3)
    ens = make_ons("random", 3, lat, seed=9, weights=[0.2, 1.0, 3.5])
    rho = density_samples(ens.frames, ens.weights, lat, ens.M, 0.4)
    assert abs(rho.mean() - 4.7) < 1e-10
    assert DensityMatrix(ens).trace == pytest.approx(4.7)


def test_density_matrix_dense():
    lat = FrequencyLattice(1, 1, 2)
    ens = make_ons("random", 2, lat, seed=1, weights=[2.0, 1.0])
    G = DensityMatrix(ens).matrix()
    np.testing.assert_allclose(G, G.conj().T, atol=1e-14)
    assert np.linalg.eigvalsh(G)[-2:] == pytest.approx([1.0, 2.0])


def test_validation():
    lat = FrequencyLattice(1, 1, 2)
    with pytest.raises(ParameterDomainError):
        make_ons("random", 6, lat)
    with pytest.raises(ParameterDomainError):
        make_ons("bogus", 1, lat)
    with pytest.raises(ParameterDomainError):
        OrthonormalEnsemble(lat, np.ones((2, 5)), np.ones(2))
    with pytest.raises(ParameterDomainError):
        make_ons("random", 2, lat, weights=[1.0, -1.0])
    with pytest.raises(AliasingError):
        density_field(make_ons("random", 2, lat, M=7))

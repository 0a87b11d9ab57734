import csv

import numpy as np
import pytest

from torus_lab.ensemble import DensityMatrix, OrthonormalEnsemble, make_ons
from torus_lab.errors import ParameterDomainError
from torus_lab.hartree import (
    HartreeConfig,
    commutator_residual,
    conservation_report,
    density_of,
    evolve_fermions,
    picard_operator_solve,
    rho_difference,
    write_report_csv,
)
from torus_lab.nls import gaussian_potential, zero_potential
from torus_lab.spectral import FrequencyLattice, free_propagate


@pytest.fixture
def lat():
    return FrequencyLattice(1, 1, 6)


@pytest.fixture
def ens(lat):
    return make_ons("random", 3, lat, seed=21, weights=[0.5, 0.3, 0.2])


def test_density_of(lat):
    one = make_ons("random", 1, lat, seed=1)
    np.testing.assert_allclose(density_of(one).samples, np.abs(one.field(0).samples) ** 2, atol=1e-13)
    full = make_ons("plane_waves", lat.size, lat)
    np.testing.assert_allclose(density_of(DensityMatrix(full), 0.3).samples, lat.size, rtol=1e-12)
    three = make_ons("random", 3, lat, seed=2, weights=[1.0, 2.0, 0.5])
    assert np.mean(density_of(three).samples) == pytest.approx(3.5, abs=1e-10)


def test_free_flow(lat, ens):
    traj = evolve_fermions(ens, HartreeConfig(0.01, 50, zero_potential(lat)))
    final = traj.ensemble(len(traj) - 1)
    for j in range(ens.rank):
        np.testing.assert_allclose(final.field(j).coeffs, free_propagate(ens.field(j), 0.5).coeffs, atol=1e-12)
    assert final.gram_deviation() < 1e-12
    np.testing.assert_array_equal(traj.weights, ens.weights)


def test_conservation_interacting(lat, ens):
    w = gaussian_potential(lat, 0.1, 5.0)
    traj = evolve_fermions(ens, HartreeConfig(1e-3, 300, w, cadence=30))
    assert len(traj) == 11
    rep = conservation_report(traj, (1.0, 2.0, 4.0), s=0.5)
    assert max(abs(r.trace - 1.0) for r in rep) < 1e-10
    assert max(r.gram_dev for r in rep) < 1e-8
    for a in (1.0, 2.0, 4.0):
        vals = [r.schatten[a] for r in rep]
        assert max(vals) - min(vals) < 1e-10
    running = [r.rho_mixed_norm_running for r in rep]
    assert running[0] == 0 and np.all(np.diff(running) > 0)


def test_residual_second_order(lat, ens):
    w = gaussian_potential(lat, 0.1, 5.0)
    res = []
    for dt in (2e-3, 1e-3, 5e-4):
        n = int(round(0.05 / dt))
        res.append(commutator_residual(evolve_fermions(ens, HartreeConfig(dt, n, w)), None, n // 2))
    for a, b in zip(res, res[1:]):
        assert abs(a / b - 4) <= 0.5


def test_residual_stationary(lat):
    full = make_ons("plane_waves", lat.size, lat)
    w = gaussian_potential(lat, 0.1, 5.0)
    traj = evolve_fermions(full, HartreeConfig(1e-3, 4, w))
    assert commutator_residual(traj, None, 2) < 1e-8


def test_residual_commuting_shell(lat):
    frames = np.zeros((2, lat.size), dtype=complex)
    frames[0, lat.index_of((2,))[0]] = 1
    frames[1, lat.index_of((-2,))[0]] = 1
    ens = OrthonormalEnsemble(lat, frames, np.array([1.0, 0.5]))
    traj = evolve_fermions(ens, HartreeConfig(1e-2, 4, zero_potential(lat)))
    assert commutator_residual(traj, None, 2) < 1e-12


def test_residual_bounds(lat, ens):
    traj = evolve_fermions(ens, HartreeConfig(1e-3, 4, zero_potential(lat)))
    with pytest.raises(ParameterDomainError):
        commutator_residual(traj, None, 0)


def test_config_checks(lat):
    with pytest.raises(ParameterDomainError):
        HartreeConfig(0.1, 20, zero_potential(lat))
    with pytest.raises(ParameterDomainError):
        HartreeConfig(-1e-3, 20, zero_potential(lat))


def test_operator_picard_free(lat, ens):
    res = picard_operator_solve(ens, zero_potential(lat), 0.1, n_t=17)
    assert res.converged and res.iterations == 1
    traj = evolve_fermions(ens, HartreeConfig(0.1 / 16, 16, zero_potential(lat)))
    assert rho_difference(traj.rho_samples(), res.rho, res.times) < 1e-12


def test_operator_picard_zero_state(lat):
    zero = make_ons("random", 2, lat, seed=0, weights=[0.0, 0.0])
    res = picard_operator_solve(zero, gaussian_potential(lat, 0.1, 5.0), 0.1, n_t=17)
    assert res.converged and not np.any(res.gammas)


def test_operator_picard_matches_splitting(lat):
    ens = make_ons("random", 3, lat, seed=5, weights=[0.005, 0.003, 0.002])
    w = gaussian_potential(lat, 0.1, 5.0)
    res = picard_operator_solve(ens, w, 0.1, n_t=101)
    assert res.converged
    assert all(b < a for a, b in zip(res.history, res.history[1:]) if a > 0)
    traj = evolve_fermions(ens, HartreeConfig(0.1 / 100, 100, w))
    assert rho_difference(traj.rho_samples(), res.rho, res.times) < 1e-5


def test_report_csv(tmp_path, lat, ens):
    traj = evolve_fermions(ens, HartreeConfig(1e-3, 10, gaussian_potential(lat)))
    rows = conservation_report(traj, (1.0, 2.0))
    path = tmp_path / "report.csv"
    write_report_csv(rows, path)
    with open(path) as fh:
        table = list(csv.reader(fh))
    assert table[0][:4] == ["step", "t", "trace", "gram_dev"]
    assert "schatten_a'=2" in table[0]
    assert len(table) == 12

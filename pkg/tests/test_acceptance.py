"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Criteria 2 to 11 run the registered experiments with their shipped default
parameters and thresholds; criterion 1 checks the spectral core directly.
"""

from fractions import Fraction

import numpy as np
import pytest

from torus_lab.admissibility import classify_triple
from torus_lab.experiments import ExperimentConfig, run_experiment
from torus_lab.spectral import FrequencyLattice, SpectralField, analyze, free_propagate

TOL = 1e-12


def report(log, number, title, passed, detail):
    line = f"CRITERION {number}: {'PASS' if passed else 'FAIL'} {title} :: {detail}"
    print(line)
    log.append(line)
    assert passed, line


def run_all(names):
    results = [run_experiment(ExperimentConfig(n)) for n in names]
    passed = all(r.passed for r in results)
    detail = " | ".join(f"{n}: {'PASS' if r.passed else 'FAIL'} ({r.note})" for n, r in zip(names, results))
    return passed, detail


def test_criterion_01_spectral_core(acceptance_log):
    rng = np.random.default_rng(2024)
    worst = {"roundtrip": 0.0, "unitarity": 0.0, "group": 0.0, "period": 0.0}
    for d, k, N in [(1, 1, 16), (2, 1, 8), (3, 2, 4)]:
        lat = FrequencyLattice(d, k, N)
        for _ in range(5):
            a = lat.random_coeffs(rng)
            scale = np.max(np.abs(a))
            f = SpectralField(lat, a)
            worst["roundtrip"] = max(worst["roundtrip"], np.max(np.abs(analyze(f) - a)) / scale)
            s, t = rng.uniform(-5, 5, size=2)
            u = free_propagate(f, t)
            worst["unitarity"] = max(worst["unitarity"], abs(u.l2_norm() - f.l2_norm()) / f.l2_norm())
            lhs = free_propagate(free_propagate(f, s), t).coeffs
            worst["group"] = max(worst["group"], np.max(np.abs(lhs - free_propagate(f, s + t).coeffs)) / scale)
            worst["period"] = max(worst["period"], np.max(np.abs(free_propagate(f, 1.0).coeffs - a)) / scale)
            worst["period"] = max(worst["period"], np.max(np.abs(free_propagate(u, 1.0).coeffs - u.coeffs)) / scale)
    passed = all(v <= TOL for v in worst.values())
    detail = ", ".join(f"{k} {v:.2e}" for k, v in worst.items())
    report(acceptance_log, 1, "spectral core exactness", passed, detail)


def test_criterion_02_kernel_decay(acceptance_log):
    passed, detail = run_all(["kernel-decay"])
    report(acceptance_log, 2, "kernel dispersive bound", passed, detail)


def test_criterion_03_fixed_time_decay(acceptance_log):
    passed, detail = run_all(["fixed-time-decay"])
    report(acceptance_log, 3, "fixed-time decay", passed, detail)


def test_criterion_04_strichartz(acceptance_log):
    passed, detail = run_all(["strichartz-scan", "localized-strichartz"])
    report(acceptance_log, 4, "Strichartz ratios", passed, detail)


def test_criterion_05_littlewood_paley(acceptance_log):
    passed, detail = run_all(["lp-equivalence", "density-lp"])
    report(acceptance_log, 5, "Littlewood-Paley equivalences", passed, detail)


def test_criterion_06_bernstein(acceptance_log):
    passed, detail = run_all(["bernstein"])
    report(acceptance_log, 6, "vector Bernstein", passed, detail)


def test_criterion_07_orthonormal_strichartz(acceptance_log):
    passed, detail = run_all(["ons-scan"])
    report(acceptance_log, 7, "orthonormal Strichartz", passed, detail)


def test_criterion_08_duality_schatten(acceptance_log):
    passed, detail = run_all(["duality-schatten"])
    report(acceptance_log, 8, "duality and Schatten", passed, detail)


def test_criterion_09_nls(acceptance_log):
    passed, detail = run_all(["nls-picard", "nls-crosscheck"])
    report(acceptance_log, 9, "NLS solver", passed, detail)


def test_criterion_10_hartree(acceptance_log):
    passed, detail = run_all(["hartree-conservation", "hartree-picard"])
    report(acceptance_log, 10, "Hartree conservation", passed, detail)


def test_criterion_11_admissibility(acceptance_log):
    passed, detail = run_all(["admissibility-region"])
    t = classify_triple("8/5", 4, 2, 2, 1)
    identity = (1 / t.gamma == Fraction(1, 4) * Fraction(1, 2) + Fraction(1, 2) * Fraction(1, 2)
                and t.alpha_prime == Fraction(16, 11) and 2 / t.q + 2 / t.gamma == 2)
    report(acceptance_log, 11, "admissibility algebra", passed and identity,
           f"{detail} | worked triple identity {'ok' if identity else 'broken'}")

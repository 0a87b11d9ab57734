"""Named experiments, sweep execution and CSV artifacts.

Each experiment splits its parameter grid into independent sweep points.
A point receives its own ``numpy.random.SeedSequence`` child (spawned by
point index), so results do not depend on the worker count.  Verdicts
compare the collected rows with thresholds from ``defaults.toml``.
"""

from __future__ import annotations

import csv
import hashlib
import io
import itertools
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Callable

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

import tomli_w

from . import __version__
from .admissibility import INF, as_float, classify_triple, parse_exponent, region_tag
from .ensemble import density_samples, make_ons
from .errors import EmptySweepError, ParameterDomainError, UnknownExperimentError
from .hartree import (
    HartreeConfig,
    commutator_residual,
    conservation_report,
    evolve_fermions,
    picard_operator_solve,
    rho_difference,
)
from .littlewood_paley import (
    bernstein_ratio,
    density_lp_ratio,
    lp_equivalence_scan,
    shell_family,
)
from .nls import (
    NonlinearitySpec,
    SolverConfig,
    delta_potential,
    gaussian_potential,
    picard_solve,
    splitstep_solve,
)
from .spectral import FrequencyLattice, SpectralField, periodic_rule, probe_grid_size, trapezoid_rule
from .strichartz import (
    duality_operator_matrix,
    duality_schatten_check,
    extension_apply,
    fixed_time_decay_ratio,
    free_spacetime_norm,
    kernel_1d_on_grid,
    kernel_decay_scan,
    kernel_value,
    localized_strichartz_ratio,
    ons_strichartz_ratio,
    restriction_apply,
    strichartz_ratio,
    strichartz_time_samples,
)
from .norms import schatten_norm

__all__ = [
    "Experiment",
    "ExperimentConfig",
    "RunResult",
    "REGISTRY",
    "load_thresholds",
    "list_experiments",
    "get_experiment",
    "run_experiment",
    "run",
    "write_csv",
    "region_plotdata",
    "growth_factors",
]


# ---------------------------------------------------------------------------
# configuration


def load_thresholds() -> dict:
    """Verdict thresholds shipped in ``defaults.toml``."""
    text = resources.files("torus_lab").joinpath("defaults.toml").read_text()
    return dict(tomllib.loads(text)["thresholds"])


def _canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), default=str)


@dataclass
class ExperimentConfig:
    """A declarative run description.

    Attributes
    ----------
    experiment : str
        Registered experiment name.
    params : dict
        Parameter overrides; list-valued sweep parameters form the grid.
    seed : int
    output : str
        CSV path ("" writes nothing).
    workers : int
        Process pool size; 1 runs in-process.
    thresholds : dict
        Overrides for the shipped verdict thresholds.
    """

    experiment: str
    params: dict = dc_field(default_factory=dict)
    seed: int = 0
    output: str = ""
    workers: int = 1
    thresholds: dict = dc_field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"experiment": self.experiment, "seed": self.seed, "output": self.output,
                "workers": self.workers, "params": dict(self.params), "thresholds": dict(self.thresholds)}

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {"experiment", "seed", "output", "workers", "params", "thresholds"}
        extra = set(data) - known
        if extra:
            raise ParameterDomainError(f"unknown config keys: {sorted(extra)}")
        if "experiment" not in data:
            raise ParameterDomainError("config needs an 'experiment' name")
        return cls(data["experiment"], dict(data.get("params", {})), int(data.get("seed", 0)),
                   str(data.get("output", "")), int(data.get("workers", 1)), dict(data.get("thresholds", {})))

    def to_toml(self) -> str:
        return tomli_w.dumps(self.to_dict())

    @classmethod
    def from_toml(cls, text: str) -> "ExperimentConfig":
        return cls.from_dict(tomllib.loads(text))

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        with open(path, "rb") as fh:
            return cls.from_dict(tomllib.load(fh))

    def config_hash(self) -> str:
        """Short digest of everything that influences the numbers (not the output path or workers)."""
        payload = _canonical({"experiment": self.experiment, "params": self.params,
                              "seed": self.seed, "thresholds": self.thresholds})
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# helpers


def growth_factors(values) -> list:
    """Consecutive ratios ``v[i+1] / v[i]``."""
    v = [float(x) for x in values]
    return [v[i + 1] / v[i] if v[i] != 0 else math.inf for i in range(len(v) - 1)]


def _growth_ok(values, limit: float, two_sided: bool = False) -> bool:
    g = growth_factors(values)
    if two_sided:
        return all(1 / limit < x < limit for x in g)
    return all(x < limit for x in g)


def _triple(t) -> tuple:
    return tuple(parse_exponent(v) for v in t)


def _fmt_exp(v) -> str:
    return "inf" if v == INF else str(v)


def _random_field(lat: FrequencyLattice, rng: np.random.Generator, M: int = 0) -> SpectralField:
    return SpectralField(lat, lat.random_coeffs(rng), M)


def _fmt_growth(values) -> str:
    return " ".join(f"{g:.4g}" for g in growth_factors(values))


@dataclass(frozen=True)
class Experiment:
    """A registered experiment.

    ``points(params)`` lists independent sweep points; ``evaluate(point,
    params, seed_seq)`` returns rows; ``verdict(rows, params, thresholds)``
    returns ``(passed, note)``.
    """

    name: str
    description: str
    defaults: dict
    sweep: tuple
    points: Callable
    evaluate: Callable
    verdict: Callable

    def schema(self) -> dict:
        return {"name": self.name, "description": self.description, "sweep": list(self.sweep),
                "params": dict(self.defaults)}


# ---------------------------------------------------------------------------
# kernel-decay


def _kernel_eval(pt, p, ss):
    N, d = int(pt["N"]), int(p["d"])
    probe = kernel_decay_scan([N], p["eps"], p["n_t"], p["M"], d)[0]
    lat = FrequencyLattice(d, d, N)
    k00 = kernel_value(0.0, np.zeros(d), lat)
    return [{"d": d, "N": N, "eps": p["eps"], "sup_weighted": probe.sup_weighted, "t_at_sup": probe.t_at_sup,
             "K00": float(np.real(k00)), "K00_expected": float((2 * N + 1) ** d)}]


def _kernel_verdict(rows, p, th):
    sups = [r["sup_weighted"] for r in rows]
    ok_growth = _growth_ok(sups, th["growth"], two_sided=True)
    ok_k00 = all(r["K00"] == r["K00_expected"] for r in rows)
    return ok_growth and ok_k00, f"consecutive factors {_fmt_growth(sups)}; K(0,0) exact={ok_k00}"


# ---------------------------------------------------------------------------
# fixed-time-decay


def _ftd_points(p):
    return [{"N": N, "pair": list(pair)} for pair in p["pairs"] for N in p["N"]]


def _ftd_eval(pt, p, ss):
    N = int(pt["N"])
    r, rt = _triple(pt["pair"])
    d, k = int(p["d"]), int(p["k"])
    lat = FrequencyLattice(d, k, N)
    rng = np.random.default_rng(ss)
    times = np.geomspace(p["eps"], 1.0 / (2 * N), int(p["n_times"]))
    best = 0.0
    for _ in range(int(p["trials"])):
        f = _random_field(lat, rng, probe_grid_size(N))
        best = max(best, max(fixed_time_decay_ratio(f, t, N, r, rt) for t in times))
    return [{"d": d, "k": k, "r": _fmt_exp(r), "r_tilde": _fmt_exp(rt), "N": N, "trials": int(p["trials"]),
             "max_ratio": best}]


def _ftd_verdict(rows, p, th):
    ok, notes = True, []
    for (r, rt), group in itertools.groupby(rows, key=lambda x: (x["r"], x["r_tilde"])):
        vals = [g["max_ratio"] for g in group]
        good = _growth_ok(vals, th["growth"])
        if (r, rt) == ("2", "2"):
            good = good and max(vals) <= 1 + th["plancherel_tol"]
        ok = ok and good
        notes.append(f"({r},{rt}): {_fmt_growth(vals)}")
    return ok, "; ".join(notes)


# ---------------------------------------------------------------------------
# strichartz-scan and localized-strichartz


def _strichartz_eval(pt, p, ss):
    N = int(pt["N"])
    d, k = int(p["d"]), int(p["k"])
    tr = classify_triple(*_triple(p["triple"]), d, k)
    lat = FrequencyLattice(d, k, N)
    rng = np.random.default_rng(ss)
    fields = [_random_field(lat, rng) for _ in range(int(p["trials"]))]
    coarse = [strichartz_ratio(f, tr, refine=False) for f in fields]
    j = int(np.argmax(coarse))
    refined = strichartz_ratio(fields[j], tr, refine=True)
    return [{"d": d, "k": k, "q": _fmt_exp(tr.q), "r": _fmt_exp(tr.r), "r_tilde": _fmt_exp(tr.r_tilde), "N": N,
             "trials": len(fields), "max_ratio": refined, "coarse_max": coarse[j],
             "refinement_change": abs(refined - coarse[j]) / refined}]


def _strichartz_verdict(rows, p, th):
    vals = [r["max_ratio"] for r in rows]
    return _growth_ok(vals, th["growth"]), f"growth {_fmt_growth(vals)}"


def _localized_eval(pt, p, ss):
    N = int(pt["N"])
    d, k = int(p["d"]), int(p["k"])
    tr = classify_triple(*_triple(p["triple"]), d, k)
    lat = FrequencyLattice(d, k, N)
    rng = np.random.default_rng(ss)
    win, glob = 0.0, 0.0
    for _ in range(int(p["trials"])):
        f = _random_field(lat, rng)
        win = max(win, localized_strichartz_ratio(f, N, tr, "window"))
        glob = max(glob, localized_strichartz_ratio(f, N, tr, "global"))
    return [{"d": d, "k": k, "q": _fmt_exp(tr.q), "r": _fmt_exp(tr.r), "r_tilde": _fmt_exp(tr.r_tilde), "N": N,
             "trials": int(p["trials"]), "max_window_ratio": win, "max_global_ratio": glob}]


def _localized_verdict(rows, p, th):
    w = [r["max_window_ratio"] for r in rows]
    g = [r["max_global_ratio"] for r in rows]
    return (_growth_ok(w, th["growth"]) and _growth_ok(g, th["growth"]),
            f"window growth {_fmt_growth(w)}; global growth {_fmt_growth(g)}")


# ---------------------------------------------------------------------------
# lp-equivalence and density-lp


def _lp_points(p):
    pts = [{"N_max": N, "pair": list(pair), "profile": p["profile"]} for pair in p["pairs"] for N in p["N_max"]]
    pts += [{"N_max": N, "pair": [2, 2], "profile": "sharp"} for N in p["N_max"]]
    return pts


def _lp_eval(pt, p, ss):
    N = int(pt["N_max"])
    r, rt = (as_float(v) for v in _triple(pt["pair"]))
    d, k = int(p["d"]), int(p["k"])
    lat = FrequencyLattice(d, k, N)
    seed = int(ss.generate_state(1)[0])
    res = lp_equivalence_scan(lambda g: _random_field(lat, g), r, rt, int(p["trials"]), pt["profile"], seed)
    return [{"profile": pt["profile"], "r": r, "r_tilde": rt, "N_max": N, "trials": int(p["trials"]),
             "min_ratio": res.min_ratio, "max_ratio": res.max_ratio, "spread": res.spread, "seed": seed}]


def _lp_verdict(rows, p, th):
    ok, notes = True, []
    key = lambda x: (x["profile"], x["r"], x["r_tilde"])
    for (prof, r, rt), group in itertools.groupby(sorted(rows, key=key), key=key):
        group = sorted(group, key=lambda x: x["N_max"])
        if prof == "sharp" and r == rt == 2:
            dev = max(max(abs(g["min_ratio"] - 1), abs(g["max_ratio"] - 1)) for g in group)
            good = dev <= th["exact_tol"]
            notes.append(f"sharp (2,2) deviation {dev:.2e}")
        else:
            sp = [g["spread"] for g in group]
            good = _growth_ok(sp, th["lp_spread"], two_sided=True)
            notes.append(f"{prof} ({r:g},{rt:g}) spread {' '.join(f'{s:.4g}' for s in sp)}")
        ok = ok and good
    return ok, "; ".join(notes)


def _density_lp_eval(pt, p, ss):
    N = int(pt["N_max"])
    d, k = int(p["d"]), int(p["k"])
    r, rt = (as_float(v) for v in _triple(p["pair"]))
    lat = FrequencyLattice(d, k, N)
    seeds = ss.spawn(2 * int(p["trials"]))
    rows = []
    for J, chunk in ((1, seeds[::2]), (int(p["J"]), seeds[1::2])):
        ratios = []
        for child in chunk:
            rng = np.random.default_rng(child)
            ens = make_ons("random", J, lat, seed=int(rng.integers(2 ** 63)),
                           weights=rng.uniform(0.1, 1.0, J))
            ratios.append(density_lp_ratio(ens, r, rt, p["profile"]))
        rows.append({"profile": p["profile"], "r": r, "r_tilde": rt, "N_max": N, "J": J, "trials": len(ratios),
                     "min_ratio": min(ratios), "max_ratio": max(ratios)})
    return rows


def _density_lp_verdict(rows, p, th):
    ok, notes = True, []
    for N, group in itertools.groupby(rows, key=lambda x: x["N_max"]):
        g = {x["J"]: x for x in group}
        one = g[1]
        many = [x for J, x in g.items() if J != 1][0] if len(g) > 1 else one
        tau = th["lp_spread"]
        good = many["min_ratio"] >= one["min_ratio"] / tau and many["max_ratio"] <= one["max_ratio"] * tau
        ok = ok and good
        notes.append(f"N={N}: rank-one [{one['min_ratio']:.4g},{one['max_ratio']:.4g}] "
                     f"rank-{many['J']} [{many['min_ratio']:.4g},{many['max_ratio']:.4g}]")
    return ok, "; ".join(notes)


# ---------------------------------------------------------------------------
# bernstein


def _bernstein_eval(pt, p, ss):
    N = int(pt["N"])
    d, k = int(p["d"]), int(p["k"])
    lat = FrequencyLattice(d, k, N)
    rng = np.random.default_rng(ss)
    r, rt = _triple(p["pair"])
    best = {float(rho): 0.0 for rho in p["rhos"]}
    for _ in range(int(p["trials"])):
        C = shell_family(lat, N, int(p["J"]), rng)
        fam = [SpectralField(lat, c) for c in C]
        for rho in best:
            best[rho] = max(best[rho], bernstein_ratio(fam, rho, N, r, rt))
    return [{"d": d, "k": k, "r": _fmt_exp(r), "r_tilde": _fmt_exp(rt), "N": N, "J": int(p["J"]),
             "rho": rho, "max_ratio": v} for rho, v in best.items()]


def _bernstein_verdict(rows, p, th):
    top = max(r["max_ratio"] for r in rows)
    zero = [r["max_ratio"] for r in rows if r["rho"] == 0]
    ok = top <= th["bernstein_bound"] and all(z == 1.0 for z in zero)
    return ok, f"max ratio {top:.4g}; rho=0 exact={all(z == 1.0 for z in zero)}"


# ---------------------------------------------------------------------------
# ons-scan


def _triangle_baseline(ens, tr, n_t: int, M: int) -> tuple:
    """``(ratio at alpha' = 1, max_j ||U f_j||^2_{L^{2q} L^{2r} L^{2 r_tilde}} / N^{1/q})`` on one quadrature."""
    from .strichartz import ons_spacetime_norm

    q, r, rt = tr.floats()
    lat = ens.lattice
    lhs = ons_spacetime_norm(ens, q, r, rt, n_t=n_t, M=M, refine=False) / (lat.N ** (1 / q) * ens.trace)
    single = max(free_spacetime_norm(ens.coeffs()[j], lat, 2 * q, 2 * r, 2 * rt, M, n_t, refine=False) ** 2
                 for j in range(ens.rank))
    return lhs, single / lat.N ** (1 / q)


def _ons_eval(pt, p, ss):
    N = int(pt["N"])
    d, k = int(p["d"]), int(p["k"])
    tr = classify_triple(*_triple(p["triple"]), d, k)
    lat = FrequencyLattice(d, k, N)
    M = probe_grid_size(N)
    n_t = strichartz_time_samples(lat)
    rows = []
    children = iter(ss.spawn(len(p["J"]) * int(p["seeds"]) + 1))
    for J in p["J"]:
        vals = []
        for _ in range(int(p["seeds"])):
            seed = int(next(children).generate_state(1)[0])
            ens = make_ons("random", int(J), lat, seed=seed)
            vals.append(ons_strichartz_ratio(ens, tr, refine=False, n_t=n_t, M=M))
        rows.append({"kind": "scan", "d": d, "k": k, "q": _fmt_exp(tr.q), "N": N, "J": int(J),
                     "alpha_prime": as_float(tr.alpha_prime), "max_ratio": max(vals)})
    seed = int(next(children).generate_state(1)[0])
    ens = make_ons("random", int(max(p["J"])), lat, seed=seed)
    lhs, bound = _triangle_baseline(ens, tr, n_t, M)
    rows.append({"kind": "baseline", "d": d, "k": k, "q": _fmt_exp(tr.q), "N": N, "J": ens.rank,
                 "alpha_prime": 1.0, "max_ratio": lhs, "bound": bound})
    full = make_ons("plane_waves", lat.size, lat)
    rho = density_samples(full.frames, full.weights, lat, M, np.array([0.0, 0.1234, 0.5]))
    dev = float(np.max(np.abs(rho - lat.size))) / lat.size
    rows.append({"kind": "closed_form", "d": d, "k": k, "N": N, "J": lat.size, "deviation": dev})
    return rows


def _ons_verdict(rows, p, th):
    scans = [r for r in rows if r["kind"] == "scan"]
    per_N = {}
    for r in scans:
        per_N[r["N"]] = max(per_N.get(r["N"], 0.0), r["max_ratio"])
    vals = [per_N[N] for N in sorted(per_N)]
    ok_growth = _growth_ok(vals, th["growth"])
    ok_base = all(r["max_ratio"] <= r["bound"] * (1 + 1e-12) for r in rows if r["kind"] == "baseline")
    ok_closed = all(r["deviation"] <= th["exact_tol"] for r in rows if r["kind"] == "closed_form")
    return (ok_growth and ok_base and ok_closed,
            f"growth {_fmt_growth(vals)}; baseline held={ok_base}; closed form={ok_closed}")


# ---------------------------------------------------------------------------
# duality-schatten


def _smooth_weight(rng, n_t: int, M: int, N: int, times) -> np.ndarray:
    """Positive weight ``1 + 0.5 Re sum c_ab e(a s + b z)`` in the rescaled time ``s = N t``."""
    s = N * np.asarray(times)[:, None]
    z = np.arange(M)[None, :] / M
    W = np.ones((n_t, M))
    for a in range(-2, 3):
        for b in range(-2, 3):
            c = (rng.standard_normal() + 1j * rng.standard_normal()) / 10
            W += 0.5 * np.real(c * np.exp(2j * np.pi * (a * s + b * z)))
    return W


def _direct_conv(F: np.ndarray, N: int, times, weights, M: int) -> np.ndarray:
    """``(K_N * F)(t, x)`` by a direct double sum on a periodic grid (d = 1)."""
    xi = np.arange(-N, N + 1)
    n_t = len(times)
    dt = np.subtract.outer(np.asarray(times), np.asarray(times))
    dx = np.subtract.outer(np.arange(M), np.arange(M)) / M
    kt = np.exp(2j * np.pi * dt[..., None] * xi ** 2)           # (n_t, n_t, n)
    kx = np.exp(2j * np.pi * dx[..., None] * xi)                 # (M, M, n)
    K = np.einsum("abn,cen->acbe", kt, kx)                       # (t, x, t', x')
    return np.einsum("acbe,b,be->ac", K, np.asarray(weights) / M, F)


def _duality_identities(N: int, rng) -> dict:
    lat = FrequencyLattice(1, 1, N)
    # the identities hold for any quadrature; a small grid keeps the direct sum cheap
    M, n_t = 2 * N + 3, 16
    times, tw = periodic_rule(n_t)
    a = lat.random_coeffs(rng)
    F = rng.standard_normal((n_t, M)) + 1j * rng.standard_normal((n_t, M))
    Ea = extension_apply(a, lat, times, tw, M)
    from .spectral import Trajectory

    traj_F = Trajectory(times, tw, samples=F, k=1)
    lhs = np.sum(tw[:, None] * Ea.samples * np.conj(F)) / M
    rhs = np.vdot(restriction_apply(traj_F, lat), a)
    adj = abs(lhs - rhs) / abs(lhs)
    EEF = extension_apply(restriction_apply(traj_F, lat), lat, times, tw, M).samples
    direct = _direct_conv(F, N, times, tw, M)
    conv = float(np.max(np.abs(EEF - direct)) / np.max(np.abs(direct)))
    # Hilbert-Schmidt: SVD of the operator matrix against the entrywise kernel sum on I_N
    tt, tww = trapezoid_rule(-0.5 / N, 0.5 / N, 9)
    Mh = 2 * N + 3
    W1 = np.ones((len(tt), Mh))
    svd_val = schatten_norm(duality_operator_matrix(W1, lat, tt, tww), 2)
    xi = np.arange(-N, N + 1)
    pts_t = np.repeat(tt, Mh)
    pts_x = np.tile(np.arange(Mh) / Mh, len(tt))
    cw = np.repeat(tww, Mh) / Mh
    ph = np.exp(2j * np.pi * (np.outer(pts_t, xi ** 2) + np.outer(pts_x, xi)))
    entries = (ph @ ph.conj().T) * np.sqrt(np.outer(cw, cw))
    frob = float(np.sqrt(np.sum(np.abs(entries) ** 2)))
    return {"adjoint": float(adj), "convolution": conv, "hilbert_schmidt": abs(svd_val - frob) / frob}


def _duality_eval(pt, p, ss):
    N = int(pt["N"])
    rng = np.random.default_rng(ss)
    tr = classify_triple(*_triple(p["triple"]), 1, 1)
    n_t, M = int(p["n_t"]), int(p["M"])
    times, tw = trapezoid_rule(-0.5 / N, 0.5 / N, n_t)
    best = 0.0
    last = None
    for _ in range(int(p["trials"])):
        W = _smooth_weight(rng, n_t, M, N, times)
        last = duality_schatten_check(W, N, tr, times, tw, 1, 1, method=p["method"])
        best = max(best, last.ratio)
    ids = _duality_identities(N, rng)
    return [{"N": N, "q": _fmt_exp(tr.q), "alpha": last.alpha, "dim": last.dim, "trials": int(p["trials"]),
             "max_ratio": best, "adjoint_err": ids["adjoint"], "convolution_err": ids["convolution"],
             "hs_err": ids["hilbert_schmidt"]}]


def _duality_verdict(rows, p, th):
    vals = [r["max_ratio"] for r in rows]
    tol = th["identity_tol"]
    ids = all(r[c] <= tol for r in rows for c in ("adjoint_err", "convolution_err", "hs_err"))
    return _growth_ok(vals, th["growth"]) and ids, f"growth {_fmt_growth(vals)}; identities within {tol:g}={ids}"


# ---------------------------------------------------------------------------
# nls-picard and nls-crosscheck


def _nls_setup(pt, p, ss, amp_key="amp"):
    N = int(pt["N"])
    d, k = int(p["d"]), int(p["k"])
    lat = FrequencyLattice(d, k, N)
    M = int(p["M"]) or 4 * N
    rng = np.random.default_rng(ss)
    c = lat.random_coeffs(rng)
    c *= p[amp_key] / np.linalg.norm(c)
    f = SpectralField(lat, c, M)
    if p["potential"] == "delta":
        w = delta_potential(lat, M=M)
    else:
        w = gaussian_potential(lat, p["width"], M=M)
    spec = NonlinearitySpec(float(p["p"]), p["variant"])
    return f, w, spec


def _nls_picard_eval(pt, p, ss):
    f, w, spec = _nls_setup(pt, p, ss)
    res = picard_solve(f, w, spec, SolverConfig(T=p["T"], n_t=int(p["n_t"]), tol=p["tol"]))
    rows = []
    for i, h in enumerate(res.history):
        ratio = h / res.history[i - 1] if i > 0 and res.history[i - 1] > 0 else float("nan")
        rows.append({"N": f.N, "iteration": i + 1, "distance": h, "ratio": ratio, "converged": res.converged})
    return rows


def _nls_picard_verdict(rows, p, th):
    ratios = [r["ratio"] for r in rows if not math.isnan(r["ratio"])]
    ok = all(r["converged"] for r in rows) and all(x < 1 for x in ratios)
    return ok, f"{len(rows)} iterations; max ratio {max(ratios, default=0):.3g}"


def _nls_cross_eval(pt, p, ss):
    children = ss.spawn(2)
    f, w, spec = _nls_setup(pt, p, children[0])
    cfg = SolverConfig(T=p["T"], n_t=int(p["n_t"]), tol=p["tol"])
    pic = picard_solve(f, w, spec, cfg)
    ss_traj = splitstep_solve(f, w, spec, cfg)
    a, b = pic.trajectory.coeffs[-1], ss_traj.coeffs[-1]
    rel = float(np.linalg.norm(a - b) / np.linalg.norm(a))
    rows = [{"kind": "crosscheck", "N": f.N, "rel_l2": rel, "picard_iterations": pic.iterations}]
    g, w2, spec2 = _nls_setup(pt, p, children[1], "conv_amp")
    finals = [splitstep_solve(g, w2, spec2, SolverConfig(T=p["conv_T"], n_t=17, substeps=int(s))).coeffs[-1]
              for s in p["substeps"]]
    diffs = [float(np.linalg.norm(finals[i] - finals[i + 1])) for i in range(len(finals) - 1)]
    for i in range(len(diffs) - 1):
        rows.append({"kind": "order", "N": f.N, "substeps": int(p["substeps"][i + 1]), "diff": diffs[i + 1],
                     "order": math.log2(diffs[i] / diffs[i + 1])})
    return rows


def _nls_cross_verdict(rows, p, th):
    rel = [r["rel_l2"] for r in rows if r["kind"] == "crosscheck"]
    orders = [r["order"] for r in rows if r["kind"] == "order"]
    ok = all(x <= th["picard_crosscheck"] for x in rel) and all(
        abs(o - th["order_target"]) <= th["order_tol"] for o in orders)
    return ok, f"relative L2 {max(rel):.3g}; orders {' '.join(f'{o:.3f}' for o in orders)}"


# ---------------------------------------------------------------------------
# hartree-conservation and hartree-picard


def _hartree_setup(pt, p, ss, scale=1.0):
    N = int(pt["N"])
    lat = FrequencyLattice(int(p["d"]), int(p["d"]), N)
    J = int(p["J"])
    seed = int(ss.generate_state(1)[0])
    lam = np.linspace(1.0, 0.25, J)
    ens = make_ons("random", J, lat, seed=seed, weights=scale * lam / lam.sum())
    w = gaussian_potential(lat, p["width"], p["strength"])
    return lat, ens, w


def _hartree_cons_eval(pt, p, ss):
    lat, ens, w = _hartree_setup(pt, p, ss)
    traj = evolve_fermions(ens, HartreeConfig(p["dt"], int(p["n_steps"]), w, cadence=int(p["cadence"])))
    alphas = tuple(float(a) for a in p["alpha_primes"])
    rep = conservation_report(traj, alphas)
    trace0 = ens.trace
    rows = [{"kind": "conservation", "N": lat.N, "J": ens.rank, "steps": int(p["n_steps"]),
             "trace_drift": max(abs(r.trace - trace0) for r in rep),
             "gram_dev": max(r.gram_dev for r in rep),
             "schatten_drift": max(max(r.schatten[a] for r in rep) - min(r.schatten[a] for r in rep) for a in alphas),
             "energy_drift": float(np.ptp(traj.energy))}]
    res = []
    for dt in p["residual_dts"]:
        n = int(round(p["residual_T"] / dt))
        tr2 = evolve_fermions(ens, HartreeConfig(dt, n, w))
        res.append(commutator_residual(tr2, None, n // 2))
    for i in range(1, len(res)):
        rows.append({"kind": "residual", "N": lat.N, "dt": p["residual_dts"][i], "residual": res[i],
                     "halving_ratio": res[i - 1] / res[i]})
    return rows


def _hartree_cons_verdict(rows, p, th):
    c = [r for r in rows if r["kind"] == "conservation"]
    ratios = [r["halving_ratio"] for r in rows if r["kind"] == "residual"]
    ok = all(r["trace_drift"] < th["trace_drift"] and r["gram_dev"] < th["gram_drift"]
             and r["schatten_drift"] < th["schatten_drift"] for r in c)
    ok_res = all(abs(x - th["residual_ratio"]) <= th["residual_ratio_tol"] for x in ratios)
    return ok and ok_res, (f"trace drift {max(r['trace_drift'] for r in c):.2e}; gram {max(r['gram_dev'] for r in c):.2e}; "
                           f"residual ratios {' '.join(f'{x:.3f}' for x in ratios)}")


def _hartree_picard_eval(pt, p, ss):
    lat, ens, w = _hartree_setup(pt, p, ss, scale=p["amp"])
    res = picard_operator_solve(ens, w, p["T"], int(p["n_t"]), tol=p["tol"])
    tr = evolve_fermions(ens, HartreeConfig(p["T"] / (int(p["n_t"]) - 1), int(p["n_t"]) - 1, w))
    diff = rho_difference(tr.rho_samples(), res.rho, res.times)
    rows = [{"kind": "history", "N": lat.N, "iteration": i + 1, "distance": h} for i, h in enumerate(res.history)]
    rows.append({"kind": "crosscheck", "N": lat.N, "rho_rel_l2": diff, "converged": res.converged})
    return rows


def _hartree_picard_verdict(rows, p, th):
    hist = [r["distance"] for r in rows if r["kind"] == "history"]
    nz = [h for h in hist if h > 0]
    geometric = all(g < 1 for g in growth_factors(nz))
    cross = [r for r in rows if r["kind"] == "crosscheck"]
    ok = geometric and all(r["converged"] and r["rho_rel_l2"] <= th["hartree_crosscheck"] for r in cross)
    return ok, f"{len(hist)} iterations; rho difference {max(r['rho_rel_l2'] for r in cross):.3g}"


# ---------------------------------------------------------------------------
# admissibility-region


def _oracle(iq: Fraction, ir: Fraction, irt: Fraction, d: int, k: int) -> tuple:
    """Independent rational oracle: ``(1/gamma, membership in the refined set)``."""
    inv_gamma = (Fraction(d - k) * ir + Fraction(k) * irt) / d
    half = Fraction(1, 2)
    member = (iq < half) and (0 < ir <= irt <= half) and (2 * iq == (d - k) * (half - ir) + k * (half - irt))
    return inv_gamma, member


def _random_reciprocal(rng, den_max: int = 12) -> Fraction:
    den = int(rng.integers(1, den_max + 1))
    return Fraction(int(rng.integers(0, den + 1)), den)


def _admissibility_eval(pt, p, ss):
    d = int(pt["d"])
    rng = np.random.default_rng(ss)
    bad, members = 0, 0
    n = int(p["trials"])
    for i in range(n):
        k = int(rng.integers(1, d + 1))
        ir, irt = _random_reciprocal(rng), _random_reciprocal(rng)
        if i % 2:
            # land on the equality surface half of the time
            iq = ((d - k) * (Fraction(1, 2) - ir) + k * (Fraction(1, 2) - irt)) / 2
            if iq < 0:
                iq = _random_reciprocal(rng)
        else:
            iq = _random_reciprocal(rng)
        inv = lambda v: INF if v == 0 else 1 / v
        t = classify_triple(inv(iq), inv(ir), inv(irt), d, k)
        g_inv, member = _oracle(iq, ir, irt, d, k)
        got_g = Fraction(0) if t.gamma == INF else 1 / t.gamma
        members += member
        if got_g != g_inv or t.in_A != member:
            bad += 1
    rows = [{"kind": "oracle", "d": d, "trials": n, "members": members, "disagreements": bad}]
    h = Fraction(1, 2)
    corners = {"O": ((0, 0), "dinh"), "C": ((h, 0), "energy-corner"), "D": ((h, h), "excluded")}
    for name, ((ir_, iq_), want) in corners.items():
        got = region_tag(Fraction(ir_), Fraction(iq_), d)
        rows.append({"kind": "corner", "d": d, "point": name, "inv_r": str(ir_), "inv_q": str(iq_),
                     "region": got, "expected": want})
    return rows


def _admissibility_verdict(rows, p, th):
    bad = sum(r["disagreements"] for r in rows if r["kind"] == "oracle")
    corners = [r for r in rows if r["kind"] == "corner"]
    ok_c = all(r["region"] == r["expected"] for r in corners)
    return bad == 0 and ok_c, f"{bad} disagreements; corners placed={ok_c}"


def region_plotdata(d: int, resolution: int) -> list:
    """Rows ``(1/r, 1/q, tag)`` on a uniform grid of the square ``[0, 1/2]^2``."""
    if resolution < 2:
        raise ParameterDomainError("resolution must be >= 2")
    rows = []
    for i in range(resolution):
        for j in range(resolution):
            ir = Fraction(i, 2 * (resolution - 1))
            iq = Fraction(j, 2 * (resolution - 1))
            rows.append((ir, iq, region_tag(ir, iq, d)))
    return rows


# ---------------------------------------------------------------------------
# registry


def _by(key):
    return lambda p: [{key: v} for v in p[key]]


REGISTRY: dict = {}


def _register(name, description, defaults, sweep, points, evaluate, verdict):
    REGISTRY[name] = Experiment(name, description, defaults, tuple(sweep), points, evaluate, verdict)


_register("kernel-decay", "weighted sup of |t|^{d/2}|K_N| over t in [eps, 1/(2N)]",
          {"d": 1, "N": [8, 16, 32, 64], "eps": 1e-4, "n_t": 64, "M": 1024}, ["N"],
          _by("N"), _kernel_eval, _kernel_verdict)
_register("fixed-time-decay", "max of |t|^beta ||U(t)P f|| / ||f||_{dual} over random f and t",
          {"d": 2, "k": 1, "N": [4, 8, 16], "pairs": [[2, 2], ["inf", 2], ["inf", "inf"]], "trials": 20,
           "n_times": 8, "eps": 1e-4}, ["N", "pairs"], _ftd_points, _ftd_eval, _ftd_verdict)
_register("strichartz-scan", "max Strichartz ratio against the H^{1/q} norm",
          {"d": 2, "k": 1, "triple": [8, 4, 2], "N": [4, 8, 16], "trials": 100}, ["N"],
          _by("N"), _strichartz_eval, _strichartz_verdict)
_register("localized-strichartz", "window and global frequency-localized ratios",
          {"d": 2, "k": 1, "triple": [8, 4, 2], "N": [4, 8, 16], "trials": 100}, ["N"],
          _by("N"), _localized_eval, _localized_verdict)
_register("lp-equivalence", "square function versus mixed norm on random fields",
          {"d": 2, "k": 1, "N_max": [8, 16, 32], "pairs": [[4, 2], [4, 3], [3, 3]], "trials": 100,
           "profile": "smooth"}, ["N_max", "pairs"], _lp_points, _lp_eval, _lp_verdict)
_register("density-lp", "operator-density square function, rank one against rank J",
          {"d": 2, "k": 1, "N_max": [8, 16, 32], "pair": [2, 2], "J": 4, "trials": 20, "profile": "smooth"},
          ["N_max"], _by("N_max"), _density_lp_eval, _density_lp_verdict)
_register("bernstein", "vector Bernstein ratios on shell-supported families",
          {"d": 2, "k": 1, "N": [4, 8, 16], "rhos": [-1, 0, 1], "pair": [4, 2], "J": 4, "trials": 10},
          ["N"], _by("N"), _bernstein_eval, _bernstein_verdict)
_register("ons-scan", "orthonormal Strichartz ratios, closed form and triangle baseline",
          {"d": 2, "k": 1, "triple": ["8/5", 4, 2], "N": [4, 8, 16], "J": [1, 2, 4, 8], "seeds": 2},
          ["N"], _by("N"), _ons_eval, _ons_verdict)
_register("duality-schatten", "Schatten norm of W E E* W against the mixed norm of W",
          {"triple": [4, 2, 2], "N": [2, 4, 8], "n_t": 32, "M": 64, "trials": 3, "method": "gram"},
          ["N"], _by("N"), _duality_eval, _duality_verdict)
_register("nls-picard", "Picard iteration history for small data",
          {"d": 3, "k": 2, "N": [4], "M": 16, "p": 2.0, "variant": "gauge", "potential": "gaussian",
           "width": 0.2, "T": 0.05, "n_t": 65, "tol": 1e-14, "amp": 1e-2}, ["N"],
          _by("N"), _nls_picard_eval, _nls_picard_verdict)
_register("nls-crosscheck", "Picard against split-step, and split-step self-convergence",
          {"d": 3, "k": 2, "N": [4], "M": 16, "p": 2.0, "variant": "gauge", "potential": "gaussian",
           "width": 0.2, "T": 0.05, "n_t": 65, "tol": 1e-14, "amp": 1e-2, "conv_amp": 3.0, "conv_T": 0.1,
           "substeps": [1, 2, 4, 8, 16]}, ["N"], _by("N"), _nls_cross_eval, _nls_cross_verdict)
_register("hartree-conservation", "trace, Gram and Schatten drift plus commutator residual halving",
          {"d": 1, "N": [8], "J": 4, "dt": 1e-3, "n_steps": 1000, "cadence": 10, "width": 0.1,
           "strength": 5.0, "alpha_primes": [1.0, 1.4545454545454546, 2.0],
           "residual_dts": [2e-3, 1e-3, 5e-4, 2.5e-4], "residual_T": 0.1}, ["N"],
          _by("N"), _hartree_cons_eval, _hartree_cons_verdict)
_register("hartree-picard", "operator Picard iteration against the splitting",
          {"d": 1, "N": [8], "J": 4, "width": 0.1, "strength": 5.0, "amp": 1e-2, "T": 0.1, "n_t": 201,
           "tol": 1e-12}, ["N"], _by("N"), _hartree_picard_eval, _hartree_picard_verdict)
_register("admissibility-region", "classification against a rational oracle and corner placement",
          {"d": [1, 2, 3, 4], "trials": 10000}, ["d"], _by("d"), _admissibility_eval, _admissibility_verdict)


def list_experiments() -> list:
    """Name and parameter schema of every registered experiment."""
    return [e.schema() for e in REGISTRY.values()]


def get_experiment(name: str) -> Experiment:
    try:
        return REGISTRY[name]
    except KeyError:
        raise UnknownExperimentError(
            f"unknown experiment {name!r}; valid names: {', '.join(sorted(REGISTRY))}") from None


# ---------------------------------------------------------------------------
# execution


@dataclass
class RunResult:
    config: ExperimentConfig
    rows: list
    passed: bool
    note: str

    @property
    def exit_code(self) -> int:
        return 0 if self.passed else 1


def _merged_params(exp: Experiment, params: dict) -> dict:
    unknown = set(params) - set(exp.defaults)
    if unknown:
        raise ParameterDomainError(
            f"parameters {sorted(unknown)} are not recognized by {exp.name}; known: {sorted(exp.defaults)}")
    merged = {**exp.defaults, **params}
    for key in exp.sweep:
        if isinstance(merged[key], list) and not merged[key]:
            raise EmptySweepError(f"empty sweep: parameter {key!r} has no values")
    return merged


def _evaluate_point(args):
    name, point, params, seed_seq = args
    return REGISTRY[name].evaluate(point, params, seed_seq)


def run_experiment(config: ExperimentConfig) -> RunResult:
    """Evaluate every sweep point and compute the verdict."""
    exp = get_experiment(config.experiment)
    params = _merged_params(exp, config.params)
    thresholds = {**load_thresholds(), **config.thresholds}
    points = exp.points(params)
    if not points:
        raise EmptySweepError("empty sweep")
    seeds = np.random.SeedSequence(config.seed).spawn(len(points))
    jobs = [(exp.name, pt, params, s) for pt, s in zip(points, seeds)]
    results = []
    try:
        if config.workers > 1:
            with ProcessPoolExecutor(max_workers=config.workers) as pool:
                for block in pool.map(_evaluate_point, jobs):
                    results.append(block)
        else:
            for job in jobs:
                results.append(_evaluate_point(job))
    except Exception as exc:
        if config.output:
            partial = RunResult(config, [r for b in results for r in b], False,
                                f"aborted after {len(results)} of {len(jobs)} points: {exc}")
            write_csv(partial, config.output)
        raise
    rows = [row for block in results for row in block]
    passed, note = exp.verdict(rows, params, thresholds)
    return RunResult(config, rows, bool(passed), note)


def _cell(v) -> str:
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (list, tuple)):
        return " ".join(_cell(x) for x in v)
    return str(v)


def write_csv(result: RunResult, path=None) -> str:
    """Render (and optionally write) the CSV artifact; returns the text."""
    cfg = result.config
    h = cfg.config_hash()
    columns = []
    for row in result.rows:
        for key in row:
            if key not in columns and key != "kind":
                columns.append(key)
    header = ["kind"] + columns + ["verdict", "note", "config_hash"]
    buf = io.StringIO()
    buf.write(f"# torus_lab version={__version__} experiment={cfg.experiment} seed={cfg.seed} config_hash={h}\n")
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(header)
    for row in result.rows:
        wr.writerow([row.get("kind", "data")] + [_cell(row.get(c, "")) for c in columns] + ["", "", h])
    wr.writerow(["verdict"] + [""] * len(columns) + ["PASS" if result.passed else "FAIL", result.note, h])
    text = buf.getvalue()
    if path:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text


def run(config: ExperimentConfig) -> RunResult:
    """Run an experiment and write its CSV to ``config.output`` when set."""
    result = run_experiment(config)
    if config.output:
        write_csv(result, config.output)
    return result

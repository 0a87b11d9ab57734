import json

import pytest

from torus_lab import cli
from torus_lab.errors import EmptySweepError, ParameterDomainError, UnknownExperimentError
from torus_lab.experiments import (
    ExperimentConfig,
    get_experiment,
    growth_factors,
    list_experiments,
    load_thresholds,
    region_plotdata,
    run,
    run_experiment,
    write_csv,
)

SMALL_KERNEL = {"N": [8, 16], "M": 256, "n_t": 32}


def body(text):
    return [line for line in text.splitlines() if not line.startswith("#")]


def test_registry():
    names = [e["name"] for e in list_experiments()]
    assert len(names) == 14
    assert len(set(names)) == 14
    assert "kernel-decay" in names and "admissibility-region" in names


def test_unknown_name_lists_valid():
    with pytest.raises(UnknownExperimentError) as exc:
        get_experiment("nope")
    assert "kernel-decay" in str(exc.value)


def test_unknown_param():
    with pytest.raises(ParameterDomainError):
        run_experiment(ExperimentConfig("kernel-decay", {"bogus": 1}))


def test_empty_sweep():
    with pytest.raises(EmptySweepError, match="empty sweep"):
        run_experiment(ExperimentConfig("kernel-decay", {"N": []}))


def test_kernel_decay_csv(tmp_path):
    out = tmp_path / "k.csv"
    res = run(ExperimentConfig("kernel-decay", {"N": [8, 16, 32, 64]}, seed=3, output=str(out)))
    text = out.read_text()
    lines = text.splitlines()
    assert lines[0].startswith("# torus_lab version=") and "seed=3" in lines[0]
    assert f"config_hash={res.config.config_hash()}" in lines[0]
    rows = body(text)
    assert rows[0].startswith("kind,")
    assert len(rows) == 1 + 4 + 1
    assert rows[-1].startswith("verdict,")
    assert res.passed and res.exit_code == 0


def test_deterministic_and_worker_independent():
    cfg = ExperimentConfig("fixed-time-decay", {"N": [4, 8], "trials": 3, "n_times": 2}, seed=7)
    a = write_csv(run_experiment(cfg))
    b = write_csv(run_experiment(cfg))
    assert body(a) == body(b)
    par = ExperimentConfig("fixed-time-decay", {"N": [4, 8], "trials": 3, "n_times": 2}, seed=7, workers=2)
    assert body(write_csv(run_experiment(par))) == body(a)


def test_seed_changes_numbers():
    a = write_csv(run_experiment(ExperimentConfig("fixed-time-decay", {"N": [4], "trials": 2, "n_times": 2}, seed=1)))
    b = write_csv(run_experiment(ExperimentConfig("fixed-time-decay", {"N": [4], "trials": 2, "n_times": 2}, seed=2)))
    assert body(a) != body(b)


def test_partial_flush_on_abort(tmp_path):
    out = tmp_path / "partial.csv"
    cfg = ExperimentConfig("kernel-decay", {"N": [8, 0], "M": 128, "n_t": 16}, output=str(out))
    with pytest.raises(ParameterDomainError):
        run(cfg)
    text = out.read_text()
    assert "aborted after 1 of 2 points" in text
    assert len(body(text)) == 3


def test_config_roundtrip(tmp_path):
    cfg = ExperimentConfig("ons-scan", {"J": [1, 2], "triple": ["8/5", 4, 2]}, seed=5, thresholds={"growth": 1.2})
    back = ExperimentConfig.from_toml(cfg.to_toml())
    assert back == cfg
    assert back.config_hash() == cfg.config_hash()
    path = tmp_path / "c.toml"
    path.write_text(cfg.to_toml())
    assert ExperimentConfig.from_file(path) == cfg
    assert ExperimentConfig("ons-scan", seed=6).config_hash() != ExperimentConfig("ons-scan", seed=5).config_hash()
    with pytest.raises(ParameterDomainError):
        ExperimentConfig.from_dict({"experiment": "x", "colour": 1})


def test_thresholds_loaded():
    th = load_thresholds()
    assert th["growth"] == 1.3 and th["lp_spread"] == 1.5


def test_threshold_override_fails_verdict():
    res = run_experiment(ExperimentConfig("kernel-decay", SMALL_KERNEL, thresholds={"growth": 1.0001}))
    assert not res.passed and res.exit_code == 1


def test_growth_factors():
    assert growth_factors([1, 2, 3]) == [2.0, 1.5]


def test_region_plotdata():
    rows = region_plotdata(3, 3)
    assert len(rows) == 9
    tags = {(float(a), float(b)): t for a, b, t in rows}
    assert tags[(0.0, 0.0)] == "dinh"
    assert tags[(0.5, 0.5)] == "excluded"
    assert tags[(0.5, 0.0)] == "energy-corner"


def test_cli_list(capsys):
    assert cli.main(["list"]) == 0
    assert len(capsys.readouterr().out.strip().splitlines()) == 14
    assert cli.main(["list", "--json"]) == 0
    assert len(json.loads(capsys.readouterr().out)) == 14


def test_cli_run(tmp_path, capsys):
    cfg = tmp_path / "run.toml"
    out = tmp_path / "out.csv"
    cfg.write_text(ExperimentConfig("kernel-decay", SMALL_KERNEL).to_toml())
    assert cli.main(["run", "--config", str(cfg), "--output", str(out)]) == 0
    assert "kernel-decay: PASS" in capsys.readouterr().out
    assert out.exists()


def test_cli_run_failure_exit(tmp_path):
    cfg = tmp_path / "run.toml"
    cfg.write_text(ExperimentConfig("kernel-decay", SMALL_KERNEL, thresholds={"growth": 1.0001}).to_toml())
    assert cli.main(["run", "--config", str(cfg)]) == 1


def test_cli_errors(tmp_path, capsys):
    assert cli.main(["run", "--config", str(tmp_path / "missing.toml")]) == 2
    cfg = tmp_path / "bad.toml"
    cfg.write_text('experiment = "nope"\n')
    assert cli.main(["run", "--config", str(cfg)]) == 2
    assert "valid names" in capsys.readouterr().err


def test_cli_region(tmp_path):
    out = tmp_path / "region.csv"
    assert cli.main(["region", "--d", "3", "--res", "5", "--output", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "inv_r,inv_q,region"
    assert len(lines) == 26

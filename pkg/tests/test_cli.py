import json
import math
import os

import numpy as np
import pytest
import yaml
from hypothesis import given, strategies as st

from mflattice.cli.config import load_config, parse_config, with_overrides
from mflattice.cli.main import load_trajectories, main
from mflattice.cli.persist import Table, format_value, persist_run, table_bytes
from mflattice.cli.studies import expected_rate, fit_slope, rate_study
from mflattice.errors import ConfigurationError, ContractViolation

TOY = {
    "model": {"name": "kuramoto", "K": 1.0, "sigma": 1.0},
    "lattice": {"dim": 1, "half_width": 6},
    "kernel": {"kind": "p_nearest", "R": 0.5},
    "sim": {"t_final": 0.2, "dt": 0.01, "replicas": 3, "sample_times": [0.0, 0.1, 0.2]},
    "metric": {"family": "pnn", "R": 0.5, "levels": [1, 2], "dictionary_size": 6, "replicas": 8,
               "probe_resolution": 128},
    "sweep": [4, 6, 8, 10],
    "reference": {"k_ref": 4, "omega_samples": 2, "path_samples": 16, "path_points": 21, "max_iter": 3},
    "yosida": {"lambdas": [10.0, 100.0], "replicas": 2, "half_width": 4, "samples": 1000},
    "lemma": {"dim": 1, "beta": [0.5], "N": [16, 32, 64, 128], "K": 1},
}


@pytest.fixture
def toy_config(tmp_path):
    path = tmp_path / "toy.yaml"
    path.write_text(yaml.safe_dump(TOY), encoding="utf-8")
    return str(path)


def test_expected_rate_examples():
    assert expected_rate(None, 1, "pnn") == (0.5, False)
    assert expected_rate(0.75, 1, "powerlaw") == (0.25, True)
    assert expected_rate(0.2, 1, "powerlaw", 0.49) == (0.49, False)
    assert expected_rate(0.5, 1, "powerlaw") == (0.5, True)
    assert expected_rate(None, 3, "pnn") == (1.0, False)


def test_expected_rate_domain():
    with pytest.raises(ContractViolation):
        expected_rate(1.0, 1, "powerlaw")
    with pytest.raises(ContractViolation):
        expected_rate(0.5, 1, "gaussian")


@given(st.floats(0.0, 0.499), st.floats(0.501, 0.999))
def test_expected_rate_regimes(low, high):
    e_low, log_low = expected_rate(low, 1, "powerlaw")
    e_high, log_high = expected_rate(high, 1, "powerlaw")
    assert not log_low and log_high
    assert e_low == pytest.approx(max(low, 0.49)) and e_high == pytest.approx(1 - high)


def test_fit_slope_recovers_power():
    N = [16, 32, 64, 128]
    assert fit_slope(N, [3 * n**-0.7 for n in N])[0] == pytest.approx(-0.7)
    assert fit_slope(N, [math.log(n) * n**-0.25 for n in N], True)[0] == pytest.approx(-0.25)
    with pytest.raises(ContractViolation):
        fit_slope(N[:3], [1, 2, 3])


def test_config_validation():
    with pytest.raises(ConfigurationError):
        parse_config({"sweep": [32, 16, 64, 128]})
    with pytest.raises(ConfigurationError):
        parse_config({"modle": {}})
    with pytest.raises(ConfigurationError):
        parse_config({"model": {"name": "kuramoto", "KK": 1}})
    with pytest.raises(ConfigurationError):
        parse_config({"metric": {"replicas": 4}})
    with pytest.raises(ConfigurationError):
        parse_config({"kernel": {"kind": "gaussian"}})


def test_overrides_merge_and_skip_none():
    cfg = with_overrides(parse_config(TOY), {"seed": 7, "sim": {"replicas": None, "dt": 0.02}})
    assert cfg.seed == 7 and cfg.sim["replicas"] == 3 and cfg.build_sim().dt == pytest.approx(0.02)


@pytest.mark.parametrize("name", sorted(os.listdir(os.path.join(os.path.dirname(__file__), "..", "configs"))))
def test_shipped_configs_parse(name):
    load_config(os.path.join(os.path.dirname(__file__), "..", "configs", name))


def test_format_value():
    assert format_value(0.1) == "0.1" and format_value(True) == "true" and format_value(None) == ""
    assert format_value(np.int64(3)) == "3"


def test_persist_empty_and_hashes(tmp_path):
    man = persist_run([], tmp_path / "a")
    assert man["files"] == {}
    t = Table("t", ["x"], [[1.5], [2]])
    assert table_bytes(t) == b"x\n1.5\n2\n"
    m1 = persist_run([t], tmp_path / "b", {"k": 1})
    m2 = persist_run([t], tmp_path / "c", {"k": 1})
    assert m1["files"] == m2["files"]
    assert json.loads((tmp_path / "b" / "manifest.json").read_text())["config"] == {"k": 1}


def test_persist_io_error(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(OSError):
        persist_run([Table("t", ["x"], [])], blocker / "sub")


def test_cli_reports_io_errors(tmp_path, capsys, toy_config):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["lemma-sums", "-c", toy_config, "-o", str(blocker / "sub")]) == 2
    assert "error" in capsys.readouterr().err


def test_expected_rate_command(capsys):
    assert main(["expected-rate", "--family", "powerlaw", "--alpha", "0.75"]) == 0
    assert capsys.readouterr().out.strip() == "exponent=0.25 log_factor=true"


def _csvs(directory):
    return {f: (directory / f).read_bytes() for f in sorted(os.listdir(directory)) if f.endswith(".csv")}


def test_simulate_csv_columns_and_worker_independence(tmp_path, toy_config):
    assert main(["simulate", "-c", toy_config, "-o", str(tmp_path / "a"), "-j", "1"]) == 0
    assert main(["simulate", "-c", toy_config, "-o", str(tmp_path / "b"), "-j", "3"]) == 0
    a = _csvs(tmp_path / "a")
    assert a == _csvs(tmp_path / "b")
    lines = a["trajectories.csv"].decode().splitlines()
    assert lines[0] == "replica,time,site,x0,omega0,theta0"
    assert len(lines) == 1 + 3 * 3 * 13
    man = json.loads((tmp_path / "a" / "manifest.json").read_text())
    assert {"config_hash", "seeds", "git_revision", "wall_time_s", "files"} <= set(man)


def test_simulate_flags_override(tmp_path, toy_config):
    main(["simulate", "-c", toy_config, "-o", str(tmp_path / "a"), "--seed", "1"])
    main(["simulate", "-c", toy_config, "-o", str(tmp_path / "b"), "--seed", "2", "--replicas", "1"])
    a, b = (tmp_path / "a" / "trajectories.csv").read_text(), (tmp_path / "b" / "trajectories.csv").read_text()
    assert a != b and len(b.splitlines()) == 1 + 3 * 13


def test_reference_then_distance_from_files(tmp_path, toy_config):
    assert main(["reference", "-c", toy_config, "-o", str(tmp_path / "ref"), "--tol", "1e-2",
                 "--max-iter", "2"]) == 0
    picard = (tmp_path / "ref" / "picard.csv").read_text().splitlines()
    assert picard[0] == "iteration,delta,stderr" and 2 <= len(picard) <= 3
    assert main(["simulate", "-c", toy_config, "-o", str(tmp_path / "traj"), "--format", "npz",
                 "--replicas", "8"]) == 0
    assert len(load_trajectories(tmp_path / "traj")) == 8
    assert main(["distance", "-c", toy_config, "-o", str(tmp_path / "d"), "--traj-dir", str(tmp_path / "traj"),
                 "--reference", str(tmp_path / "ref" / "reference.npz"), "--K-levels", "1",
                 "--dict-size", "4"]) == 0
    rows = (tmp_path / "d" / "distances.csv").read_text().splitlines()
    assert rows[0] == "t,K,p,distance,stderr,dict_size,excluded_atoms,replicas,sites"
    assert len(rows) == 3 and all(r.split(",")[5] == "12" for r in rows[1:])


def test_distance_command_simulates_when_no_trajectories(tmp_path, toy_config):
    assert main(["distance", "-c", toy_config, "-o", str(tmp_path / "d")]) == 0
    rows = (tmp_path / "d" / "distances.csv").read_text().splitlines()
    assert len(rows) == 1 + 2 * 2
    assert all(float(r.split(",")[3]) >= 0 for r in rows[1:])


def test_yosida_and_lemma_commands(tmp_path, toy_config):
    assert main(["yosida-check", "-c", toy_config, "-o", str(tmp_path / "y"), "--lambdas", "10,100"]) == 0
    rows = (tmp_path / "y" / "yosida.csv").read_text().splitlines()
    assert rows[0] == "lambda,sup_error,sup_stderr,h_norm,h_stderr,newton_iters_mean" and len(rows) == 3
    assert main(["lemma-sums", "-c", toy_config, "-o", str(tmp_path / "l")]) == 0
    header = (tmp_path / "l" / "lemma_sums.csv").read_text().splitlines()[0]
    assert header == "N,K,beta,regime,anchor,sum,predicted_scale,ratio"


def test_rate_study_deterministic_across_workers(tmp_path, toy_config):
    assert main(["rate-study", "-c", toy_config, "-o", str(tmp_path / "a"), "-j", "1"]) == 0
    assert main(["rate-study", "-c", toy_config, "-o", str(tmp_path / "b"), "-j", "4"]) == 0
    assert _csvs(tmp_path / "a") == _csvs(tmp_path / "b")


def test_rate_study_self_reference():
    cfg = with_overrides(parse_config(TOY), {"reference": {"strategy": "self"}, "sweep": [4, 6, 8, 10, 12]})
    res = rate_study(cfg)
    assert res.N == (4, 6, 8, 10) and res.verdict in ("PASS", "FAIL")


def test_rate_study_floor_limited():
    cfg = with_overrides(parse_config(TOY), {
        "model": {"name": "kuramoto", "K": 0.0, "sigma": 0.0},
        "initial": {"kind": "point_mass", "value": [0.0]},
        "disorder": {"kind": "point_mass", "value": [0.3]},
        "kernel": {"kind": "p_nearest", "R": 1.0},
        "metric": {"R": 1.0, "levels": [1]}})
    res = rate_study(cfg)
    assert res.verdict == "FLOOR-LIMITED" and max(res.values) < 1e-6

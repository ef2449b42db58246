import csv
import json

import pytest

from circuitdesign.cli import main
from circuitdesign.experiments import ConfigError, ExperimentConfig
from circuitdesign.pareto import CSV_HEADER
from circuitdesign.simulator import TRAJECTORY_HEADER


def write(tmp_path, name, obj):
    path = tmp_path / name
    path.write_text(json.dumps(obj, indent=1) if not isinstance(obj, str) else obj)
    return str(path)


def rows(path):
    return list(csv.reader(path.read_text().splitlines()))


def test_census(tmp_path):
    assert main(["census", "--out", str(tmp_path), "--quiet"]) == 0
    r = rows(tmp_path / "census.csv")
    assert r[0] == ["M", "num_configurations", "cumulative"]
    assert r[3] == ["2", "496", "529"] and len(r) == 34
    assert int(r[-1][2]) == 2**32
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert {"config_hash", "version", "timestamp", "seeds"} <= set(manifest)


def test_simulate_zero_circuit(tmp_path):
    cfg = write(tmp_path, "c.json", {"horizon": 50})
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path / "o"), "--quiet"]) == 0
    r = rows(tmp_path / "o" / "trajectory.csv")
    assert tuple(r[0]) == TRAJECTORY_HEADER
    assert all(float(v) == 0.0 for row in r[1:] for v in row[1:])
    assert all(len(row) == 7 for row in r)


def test_optimize_reports_toggle(tmp_path):
    cfg = write(tmp_path, "c.json", {"seeds": [0], "m_max": 2,
                                    "solver": {"name": "tabu", "max_evals": 1000}})
    out = tmp_path / "o"
    assert main(["optimize", "--config", cfg, "--out", str(out), "--quiet"]) == 0
    rep = json.loads((out / "report.json").read_text())
    assert sorted(map(tuple, rep["best"]["pairs"])) == [("Plac1", "tetR"), ("Ptet2", "lacI")]
    assert rows(out / "convergence.csv")[0] == ["evals", "best_primary"]


def test_reruns_are_byte_identical(tmp_path):
    cfg = write(tmp_path, "c.json", {"seeds": [4], "m_max": 2,
                                    "solver": {"name": "scatter", "max_evals": 300}})
    for d in ("a", "b"):
        assert main(["optimize", "--config", cfg, "--out", str(tmp_path / d), "--quiet"]) == 0
    for name in ("report.json", "convergence.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_pareto_outputs(tmp_path):
    cfg = write(tmp_path, "c.json", {"seeds": [0], "m_max": 2, "solver": "exhaustive"})
    out = tmp_path / "o"
    assert main(["pareto", "--config", cfg, "--out", str(out), "--quiet"]) == 0
    lines = (out / "front.csv").read_text().splitlines()
    assert lines[0].startswith("# bounds")
    body = list(csv.reader(lines[1:]))
    assert tuple(body[0]) == CSV_HEADER and all(len(r) == 6 for r in body)
    plot = rows(out / "front_plot.csv")
    assert plot[0] == ["J2", "J1", "band"] and len(plot) == len(body)
    assert json.loads((out / "front.json").read_text())["bounds"] is not None


def test_adapt_writes_step_responses(tmp_path):
    cfg = write(tmp_path, "c.json", {"seeds": [1], "m_max": 3, "eps_step": 10,
                                    "solver": {"name": "scatter", "max_evals": 150}})
    out = tmp_path / "o"
    assert main(["adapt", "--config", cfg, "--out", str(out), "--quiet"]) == 0
    n = len(rows(out / "front_plot.csv")) - 1
    files = sorted(out.glob("step_response_*.csv"))
    assert n >= 1 and len(files) == n
    assert tuple(rows(files[0])[0]) == TRAJECTORY_HEADER


def test_numerical_failure_exit_code(tmp_path):
    # at most one pair: no design has J1 < 0, so the cost extreme does not exist
    cfg = write(tmp_path, "c.json", {"seeds": [0], "m_max": 1, "solver": "exhaustive"})
    out = tmp_path / "o"
    assert main(["pareto", "--config", cfg, "--out", str(out), "--quiet"]) == 3
    assert json.loads((out / "manifest.json").read_text())["status"] == "failed"
    assert "error" in json.loads((out / "partial_report.json").read_text())


@pytest.mark.parametrize("text, line", [
    ('{\n "seeds": [0],\n "m_max": 2,\n "parameters": {"alpha_foo": 1}\n}', 4),
    ('{\n "seeds": [0],\n "bogus": 1\n}', 3),
    ('{\n "seeds": [0],\n "m_max": 40\n}', 3),
    ('{\n "seeds": [0],\n "solver": {"name": "annealing"}\n}', 3),
    ('{\n "seeds": [0],\n\n "m_max": 2,,\n}', 4),
])
def test_config_errors_are_line_precise(tmp_path, capsys, text, line):
    cfg = write(tmp_path, "bad.json", text)
    assert main(["optimize", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
    assert f"bad.json:{line}:" in capsys.readouterr().err


def test_seeds_required(tmp_path):
    cfg = write(tmp_path, "c.json", {"m_max": 2})
    assert main(["pareto", "--config", cfg, "--out", str(tmp_path)]) == 2
    # a command-line seed satisfies the requirement
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({}, kind="adapt")


def test_kind_mismatch(tmp_path):
    cfg = write(tmp_path, "c.json", {"kind": "census"})
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path)]) == 2


def test_config_roundtrip():
    data = {"seeds": [1, 2], "m_max": 3, "parameters": {"alpha_tet": 2.0},
            "tunables": {"alpha_tet": [0.1, 10.0]}, "protocol": {"t_cost": 400.0},
            "solver": {"name": "tabu", "max_evals": 100, "options": {"tenure": 7}}}
    cfg = ExperimentConfig.from_dict(data, kind="optimize")
    again = ExperimentConfig.from_dict(json.loads(cfg.to_json()))
    assert again == cfg and again.digest() == cfg.digest()


def test_cli_flags_override_config(tmp_path):
    from circuitdesign.cli import build_parser, load_config

    cfg = write(tmp_path, "c.json", {"seeds": [1], "workers": 1, "output": "x"})
    args = build_parser().parse_args(["optimize", "--config", cfg, "--seed", "9",
                                      "--workers", "2", "--out", "y"])
    c = load_config(args)
    assert c.seeds == [9] and c.workers == 2 and c.output == "y"

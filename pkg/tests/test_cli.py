import json
import subprocess
import sys

import numpy as np
import pytest

from windsde import __version__
from windsde.cli import EXIT_FAIL, EXIT_OK, EXIT_USAGE, main
from windsde.distributions import make
from windsde.simulator import read_ensemble, sample_stationary


def _run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def weibull_card(tmp_path, capsys):
    path = tmp_path / "weibull.json"
    code, _, _ = _run(capsys, "build", "--family", "weibull2", "--shape", 2, "--scale", 8, "--alpha", 0.5, "--out", path)
    assert code == EXIT_OK
    return path


def test_build_weibull_card(capsys):
    code, out, _ = _run(capsys, "build", "--family", "weibull2", "--shape", 2, "--scale", 8, "--alpha", 0.3)
    assert code == EXIT_OK
    card = json.loads(out)
    assert card["mu"] == pytest.approx(7.0898154, rel=1e-7)
    assert card["source"] == "closed_form"
    assert card["support"] == [0.0, "inf"]
    diag = card["diagnostics"]
    assert diag["oracle_max_error"] <= 1e-6
    assert diag["fpe_residual"]["passed"]
    assert len(card["model_hash"]) == 16


def test_build_rejects_negative_density(capsys):
    code, out, err = _run(capsys, "build", "--family", "gram_charlier3", "--skew", 9.0, "--alpha", 1)
    assert code == EXIT_USAGE
    assert out == ""
    msg = json.loads(err)
    assert msg["error"] == "invalid_spec" and "negative" in msg["message"]


def test_build_tabulated_spec(tmp_path, capsys):
    x = np.linspace(0.0, 2.0, 201)
    spec = {"family": "tabulated", "grid": np.column_stack([x, 1 - np.abs(x - 1)]).tolist()}
    (tmp_path / "tab.json").write_text(json.dumps(spec))
    code, out, _ = _run(capsys, "build", "--spec", tmp_path / "tab.json", "--alpha", 1, "--method", "quadrature")
    assert code == EXIT_OK
    assert json.loads(out)["source"] == "quadrature"


def test_build_from_catalog_spec_file(tmp_path, capsys):
    (tmp_path / "g.json").write_text(json.dumps({"family": "gamma2", "params": {"shape": 2.0, "scale": 3.0}}))
    code, out, _ = _run(capsys, "build", "--spec", tmp_path / "g.json", "--alpha", 1)
    assert code == EXIT_OK
    assert json.loads(out)["mu"] == pytest.approx(6.0)


@pytest.mark.parametrize("argv", [
    ["build", "--alpha", "1"],
    ["build", "--family", "weibull2", "--alpha", "0"],
    ["build", "--family", "weibull2", "--shape", "-2", "--alpha", "1"],
    ["build", "--family", "cauchy", "--alpha", "1"],
    ["build", "--spec", "/nonexistent.json", "--alpha", "1"],
    ["build", "--family", "tabulated", "--alpha", "1"],
])
def test_build_usage_errors(argv, capsys):
    assert main(argv) == EXIT_USAGE


def test_simulate_shape_and_manifest(tmp_path, capsys, weibull_card):
    out = tmp_path / "paths.csv"
    code, _, _ = _run(capsys, "simulate", "--model", weibull_card, "--dt", 0.01, "--horizon", 100,
                      "--n-paths", 10, "--seed", 4, "--out", out)
    assert code == EXIT_OK
    lines = out.read_text().splitlines()
    assert len(lines) == 10002  # header plus 10001 time points
    assert all(len(line.split(",")) == 11 for line in lines[:3])
    manifest = json.loads((tmp_path / "paths.csv.manifest.json").read_text())
    assert manifest["seed"] == 4
    assert manifest["tool_version"] == __version__
    assert manifest["model_hash"] == json.loads(weibull_card.read_text())["model_hash"]
    assert manifest["config"]["n_paths"] == 10
    assert {"started", "finished", "config_hash", "command", "output"} <= set(manifest)


def test_simulate_is_reproducible(tmp_path, capsys, weibull_card):
    files = []
    for name, threads in (("a", 1), ("b", 1), ("c", 8)):
        path = tmp_path / f"{name}.bin"
        code, _, _ = _run(capsys, "simulate", "--model", weibull_card, "--dt", 0.02, "--horizon", 20,
                          "--n-paths", 16, "--seed", 99, "--threads", threads, "--format", "bin", "--out", path)
        assert code == EXIT_OK
        files.append(path.read_bytes())
    assert files[0] == files[1] == files[2]


def test_simulate_step_too_coarse(tmp_path, capsys):
    card = tmp_path / "n.json"
    _run(capsys, "build", "--family", "normal", "--mu", 0, "--sigma", 1, "--alpha", 2, "--out", card)
    code, _, err = _run(capsys, "simulate", "--model", card, "--dt", 0.5, "--horizon", 10, "--alpha-check",
                        "--out", tmp_path / "x.csv")
    assert code == EXIT_USAGE
    assert json.loads(err)["error"] == "simulation"
    code, _, _ = _run(capsys, "simulate", "--model", card, "--dt", 0.3, "--horizon", 3, "--no-alpha-check",
                      "--quiet", "--out", tmp_path / "y.csv")
    assert code == EXIT_OK


@pytest.fixture
def weibull_ensemble(tmp_path, capsys, weibull_card):
    path = tmp_path / "w.bin"
    code, _, _ = _run(capsys, "simulate", "--model", weibull_card, "--dt", 0.02, "--horizon", 80, "--n-paths", 2000,
                      "--seed", 1, "--record-every", 10, "--format", "bin", "--out", path)
    assert code == EXIT_OK
    return path


def test_validate_passes(tmp_path, capsys, weibull_card, weibull_ensemble):
    report = tmp_path / "report.json"
    code, _, _ = _run(capsys, "validate", "--ensemble", weibull_ensemble, "--model", weibull_card,
                      "--report", report, "--plot-prefix", tmp_path / "plot")
    assert code == EXIT_OK
    data = json.loads(report.read_text())
    assert data["passed"] and all(data["pass_flags"].values())
    assert (tmp_path / "plot_acf.csv").exists() and (tmp_path / "plot_density.csv").exists()


def test_validate_wrong_family(tmp_path, capsys, weibull_ensemble):
    other = tmp_path / "ln.json"
    _run(capsys, "build", "--family", "lognormal2", "--log-mean", 1.9, "--log-std", 0.5, "--alpha", 0.5, "--out", other)
    code, out, _ = _run(capsys, "validate", "--ensemble", weibull_ensemble, "--model", other)
    assert code == EXIT_FAIL
    assert json.loads(out)["pass_flags"]["ks"] is False


def test_validate_short_ensemble(tmp_path, capsys, weibull_card):
    path = tmp_path / "short.csv"
    _run(capsys, "simulate", "--model", weibull_card, "--dt", 0.02, "--horizon", 2, "--n-paths", 3, "--out", path)
    code, _, err = _run(capsys, "validate", "--ensemble", path, "--model", weibull_card)
    assert code == EXIT_USAGE
    assert json.loads(err)["error"] == "precondition"


def test_validate_malformed_ensemble(tmp_path, capsys, weibull_card):
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b\n1,2\n")
    assert main(["validate", "--ensemble", str(bad), "--model", str(weibull_card)]) == EXIT_USAGE
    capsys.readouterr()


def _speed_csv(path, x, dt):
    t = np.arange(x.size) * dt
    np.savetxt(path, np.column_stack([t, x]), delimiter=",", header="time,speed", comments="", fmt="%.17g")


def test_fit_weibull_and_auto(tmp_path, capsys):
    x = sample_stationary(make("weibull2", shape=2, scale=8), 20_000, seed=2)
    _speed_csv(tmp_path / "s.csv", x, 1.0)
    code, out, _ = _run(capsys, "fit", "--input", tmp_path / "s.csv", "--family", "weibull2")
    assert code == EXIT_OK
    res = json.loads(out)
    assert res["spec"]["params"]["shape"] == pytest.approx(2.0, rel=0.05)
    assert res["sample_interval"] == 1.0
    assert res["alpha_hat"] is None or res["alpha_hat"] > 0
    code, out, _ = _run(capsys, "fit", "--input", tmp_path / "s.csv", "--family", "auto", "--out", tmp_path / "fit.json")
    assert code == EXIT_OK
    res = json.loads((tmp_path / "fit.json").read_text())
    assert len(res["goodness"]) >= 8
    assert res["spec"]["family"] == min(res["goodness"], key=res["goodness"].get)


@pytest.mark.parametrize("content", [
    "speed\n1\n2\n",
    "time,speed\n0,1\n1,oops\n",
    "time,speed\n0,1\n1,2\n3,4\n",
    "time,speed\n0,1\n",
])
def test_fit_malformed_csv(tmp_path, capsys, content):
    path = tmp_path / "bad.csv"
    path.write_text(content)
    code, _, err = _run(capsys, "fit", "--input", path, "--family", "normal")
    assert code == EXIT_USAGE
    assert "error" in json.loads(err)


def test_fit_too_few_samples(tmp_path, capsys):
    _speed_csv(tmp_path / "s.csv", np.random.default_rng(0).standard_normal(100), 1.0)
    code, _, _ = _run(capsys, "fit", "--input", tmp_path / "s.csv", "--family", "normal")
    assert code == EXIT_USAGE


def test_no_command_is_usage_error(capsys):
    assert main([]) == EXIT_USAGE
    capsys.readouterr()


def test_console_entry_point():
    out = subprocess.run([sys.executable, "-m", "windsde.cli", "--version"], capture_output=True, text=True)
    assert out.returncode == 0
    assert __version__ in out.stdout

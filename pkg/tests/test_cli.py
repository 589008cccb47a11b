import json
import subprocess
import sys

import numpy as np
import pytest

import superrotor.rates as rates_mod
from superrotor import lindblad as lb
from superrotor.cli import main, rate_plot_svg


def run_cli(args):
    return main(list(args))


def test_rates_command(tmp_path, capsys):
    out = tmp_path / "r.csv"
    code = run_cli(["rates", "n1", "--j", "10", "--jprime", "8", "--out", str(out)])
    captured = capsys.readouterr().out
    assert code == 0
    assert "gamma = 0.307727410356" in captured
    assert "Gamma_signal = 0.615454820712" in captured
    lines = out.read_text().splitlines()
    assert lines[0] == "j,j_prime,gamma,Gamma_signal,a_coeff,method"
    assert len(lines) == 2
    assert lines[1].endswith("closed_form")


def test_rates_zero_pair(tmp_path, capsys):
    out = tmp_path / "r.csv"
    code = run_cli(["rates", "n1", "--j", "0", "--jprime", "0", "--out", str(out)])
    assert code == 0
    assert "gamma = 0" in capsys.readouterr().out


def test_rates_quadrature_method(tmp_path, capsys):
    out = tmp_path / "r.csv"
    code = run_cli(
        [
            "rates", "n1", "--j", "6", "--jprime", "4",
            "--method", "quadrature", "--kappa", "half", "--out", str(out),
        ]
    )
    assert code == 0
    captured = capsys.readouterr().out
    gamma = float([l for l in captured.splitlines() if l.startswith("gamma")][0].split("=")[1])
    assert gamma == pytest.approx(rates_mod.gamma_closed_form(6, 4, _n1()).gamma, rel=1e-9)


def _n1():
    from superrotor.params import builtin_config, load_config

    return load_config(builtin_config("n1"))


def test_rates_malformed_config(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text('{"molecule": {"mass": 1}, "gas": {}, "mystery": 1}')
    code = run_cli(["rates", str(cfg), "--j", "4", "--jprime", "2"])
    assert code == 2
    assert "mystery" in capsys.readouterr().err


def test_missing_config_file(capsys):
    code = run_cli(["rates", "/nonexistent/cfg.json", "--j", "4", "--jprime", "2"])
    assert code == 2
    assert "cannot read config" in capsys.readouterr().err


def test_sweep_deterministic_and_manifest(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("SUPERROTOR_THREADS", "2")
    out1 = tmp_path / "a.csv"
    out2 = tmp_path / "b.csv"
    man = tmp_path / "m.json"
    assert run_cli(["sweep", "n1", "--jmax", "40", "--out", str(out1), "--manifest", str(man)]) == 0
    assert run_cli(["sweep", "n1", "--jmax", "40", "--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()
    rows = out1.read_text().splitlines()
    assert len(rows) == 40 - 2 + 2  # header + j in [2, 40]
    manifest = json.loads(man.read_text())
    assert manifest["command"] == "sweep"
    assert manifest["flags"] == []
    assert manifest["spec"]["units"]["system"] == "normalized"
    assert manifest["outputs"] == [str(out1)]


def test_sweep_jmax_guard(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    doc = json.loads((_n1_text()))
    doc["numerics"] = {"j_max": 50}
    cfg.write_text(json.dumps(doc))
    code = run_cli(["sweep", str(cfg), "--jmax", "60", "--out", str(tmp_path / "s.csv")])
    assert code == 2
    assert "exceeds basis limit" in capsys.readouterr().err


def _n1_text():
    from superrotor.params import builtin_config

    return builtin_config("n1")


def test_sweep_plot_svg(tmp_path):
    out = tmp_path / "s.csv"
    svg_path = tmp_path / "s.svg"
    assert run_cli(["sweep", "n1", "--jmax", "30", "--out", str(out), "--plot", str(svg_path)]) == 0
    svg = svg_path.read_text()
    assert svg.startswith("<?xml")
    assert svg.count("<polyline") == 1
    assert ">j</text>" in svg
    assert "Gamma_j" in svg


def test_rate_plot_svg_handles_flat_data():
    svg = rate_plot_svg([2, 3, 4], [0.0, 0.0, 0.0])
    assert svg.count("<polyline") == 1


def test_propagate_fit_summary(tmp_path, capsys):
    out = tmp_path / "t.csv"
    code = run_cli(
        [
            "propagate", "n1", "--state", "centrifuge:8,10",
            "--tfinal", "0.0975", "--dt", "0.0012",
            "--kappa", "half", "--out", str(out), "--record-every", "1",
        ]
    )
    assert code == 0
    captured = capsys.readouterr().out
    line = [l for l in captured.splitlines() if l.startswith("signal j=10")][0]
    fitted = float(line.split("fitted Gamma = ")[1].split(",")[0])
    gamma = rates_mod.gamma_closed_form(10, 8, _n1()).gamma
    assert fitted == pytest.approx(2 * gamma, rel=0.02)
    header = out.read_text().splitlines()[0]
    assert header == "t,trace,purity,min_eig,signal_j10"


def test_propagate_isotropic_stationary(tmp_path, capsys):
    out = tmp_path / "iso.csv"
    code = run_cli(
        [
            "propagate", "n1", "--state", "isotropic", "--jwindow", "2,5",
            "--tfinal", "0.5", "--dt", "0.01", "--out", str(out),
        ]
    )
    assert code == 0
    captured = capsys.readouterr().out
    drift_line = [l for l in captured.splitlines() if l.startswith("max |rho")][0]
    assert float(drift_line.split("=")[1]) <= 1e-8
    assert out.read_text().splitlines()[0] == "t,trace,purity,min_eig"


def test_propagate_step_size_violation(tmp_path, capsys):
    code = run_cli(
        [
            "propagate", "n1", "--state", "centrifuge:8,10",
            "--tfinal", "1.0", "--dt", "0.5", "--out", str(tmp_path / "t.csv"),
        ]
    )
    assert code == 2
    assert "step-size violation" in capsys.readouterr().err


def test_propagate_state_file_and_dump(tmp_path, capsys):
    state_doc = {
        "type": "centrifuge",
        "coefficients": {"4": [0.8, 0.0], "6": [0.0, 0.6]},
    }
    state_path = tmp_path / "state.json"
    state_path.write_text(json.dumps(state_doc))
    out = tmp_path / "t.csv"
    dump = tmp_path / "final.bin"
    man = tmp_path / "m.json"
    code = run_cli(
        [
            "propagate", "n1", "--state", str(state_path),
            "--tfinal", "0.05", "--dt", "0.002",
            "--out", str(out), "--dump", str(dump), "--manifest", str(man),
        ]
    )
    assert code == 0
    final = lb.read_state_binary(dump)
    assert final.layout == lb.BasisLayout(2, 6)
    assert final.time == pytest.approx(0.05)
    manifest = json.loads(man.read_text())
    assert manifest["outputs"] == [str(out), str(dump)]
    assert manifest["flags"] == []


def test_propagate_bad_state(capsys):
    assert run_cli(["propagate", "n1", "--state", "isotropic",
                    "--tfinal", "0.1", "--dt", "0.01"]) == 2
    assert "jwindow" in capsys.readouterr().err


def test_validate_filtered(tmp_path, capsys):
    report = tmp_path / "report.json"
    code = run_cli(
        [
            "validate", "--only",
            "closed-form prefactor,small-j guard values,radial integral table",
            "--json", str(report),
        ]
    )
    assert code == 0
    captured = capsys.readouterr().out
    assert captured.count("[PASS]") == 3
    doc = json.loads(report.read_text())
    assert doc["all_passed"] is True
    assert len(doc["criteria"]) == 3


def test_validate_unknown_criterion(capsys):
    assert run_cli(["validate", "--only", "no-such-check"]) == 2
    assert "unknown criteria" in capsys.readouterr().err


def test_validate_negative_control(tmp_path, capsys, monkeypatch):
    monkeypatch.setattr(rates_mod, "_PREFACTOR_SCALE", 1.0 + 5e-9)
    code = run_cli(["validate", "--only", "closed-form prefactor"])
    captured = capsys.readouterr().out
    assert code == 1
    assert "[FAIL] closed-form prefactor" in captured


def test_threads_env_guard(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("SUPERROTOR_THREADS", "0")
    code = run_cli(["sweep", "n1", "--jmax", "10", "--out", str(tmp_path / "s.csv")])
    assert code == 2
    assert "SUPERROTOR_THREADS" in capsys.readouterr().err


def test_module_entry_point(tmp_path):
    out = tmp_path / "r.csv"
    proc = subprocess.run(
        [
            sys.executable, "-m", "superrotor.cli",
            "rates", "n1", "--j", "4", "--jprime", "2", "--out", str(out),
        ],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert "gamma =" in proc.stdout
    assert out.exists()


def test_shipped_configs_load(tmp_path):
    import pathlib

    root = pathlib.Path(__file__).resolve().parents[1] / "configs"
    for name in ("n1.json", "nitrogen_helium_si.json"):
        out = tmp_path / ("%s.csv" % name)
        code = run_cli(["rates", str(root / name), "--j", "10", "--jprime", "8", "--out", str(out)])
        assert code == 0
import json
import subprocess
import sys

import pytest

from radonshell.cli import main
from radonshell.harness import ConfigError, ExperimentConfig, env_overrides, report, resolve, run
from radonshell.harness.config import DEFAULT_PARAMS, KINDS

QUICK = {"trials": 5, "d_list": [3]}


def write_config(tmp_path, obj, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(obj))
    return str(path)


def last_run(out):
    dirs = sorted(p for p in out.iterdir() if p.is_dir())
    assert dirs
    return dirs[-1]


# -- configuration ----------------------------------------------------------------

@pytest.mark.parametrize("kind", KINDS)
def test_defaults_validate_and_round_trip(kind):
    cfg = ExperimentConfig(kind).validate()
    again = ExperimentConfig.from_json(cfg.to_json())
    assert again == cfg and again.config_hash() == cfg.config_hash()
    assert cfg.params == DEFAULT_PARAMS[kind]


def test_hash_ignores_output_location():
    a = ExperimentConfig("decay", out="x", workers=1)
    b = ExperimentConfig("decay", out="y", workers=3)
    assert a.config_hash() == b.config_hash()
    assert ExperimentConfig("decay", seed=1).config_hash() != a.config_hash()


@pytest.mark.parametrize("obj,field", [
    ({"kind": "nope"}, "kind"),
    ({"kind": "decay", "seed": -1}, "seed"),
    ({"kind": "decay", "workers": 0}, "workers"),
    ({"kind": "reciprocal-scan", "params": {"w_list": [0.5, 2.0, 0.1]}}, "params.w_list"),
    ({"kind": "reciprocal-scan", "params": {"n": 0}}, "params.n"),
    ({"kind": "decay", "params": {"Rs": [8.0, 4.0, 16.0]}}, "params.Rs"),
    ({"kind": "lower-bound", "params": {"eps": 2.0}}, "params.eps"),
    ({"kind": "wave-energy", "d": 4}, "d"),
    ({"kind": "strichartz", "d": 3}, "d"),
    ({"kind": "layerwise", "params": {"gamma": 1.0}}, "params.gamma"),
    ({"kind": "decay", "colour": "red"}, "colour"),
])
def test_invalid_configs(obj, field):
    with pytest.raises(ConfigError) as info:
        ExperimentConfig.from_dict(obj).validate()
    assert info.value.record["field"] == field
    assert info.value.record["error"] == "invalid-config"


def test_precedence():
    file_obj = {"seed": 1, "workers": 2, "params": {"trials": 7, "tol": 1e-3}}
    env = env_overrides({"RADONSHELL_SEED": "2", "RADONSHELL_WORKERS": "3",
                         "RADONSHELL_PARAMS": '{"trials": 9}'})
    cfg = resolve("jacobian-check", file_obj, env, {"seed": 4, "workers": None})
    assert cfg.seed == 4 and cfg.workers == 3
    assert cfg.params["trials"] == 9 and cfg.params["tol"] == 1e-3
    assert cfg.params["d_list"] == [3, 4, 5]


def test_env_parsing():
    assert env_overrides({"RADONSHELL_GATE_SOFT": "false"}) == {"gate_soft": False}
    assert env_overrides({"RADONSHELL_SEED": ""}) == {}
    with pytest.raises(ConfigError):
        env_overrides({"RADONSHELL_SEED": "abc"})
    with pytest.raises(ConfigError):
        env_overrides({"RADONSHELL_PARAMS": "{bad"})


def test_file_kind_mismatch():
    with pytest.raises(ConfigError):
        resolve("decay", {"kind": "layerwise"}, {}, {})


# -- running --------------------------------------------------------------------------

def test_main_success(tmp_path, capsys, monkeypatch):
    monkeypatch.delenv("RADONSHELL_SEED", raising=False)
    cfg = write_config(tmp_path, {"params": QUICK})
    code = main(["jacobian-check", "--config", cfg, "--out", str(tmp_path / "runs")])
    assert code == 0
    assert "PASS" in capsys.readouterr().out
    rd = last_run(tmp_path / "runs")
    m = json.loads((rd / "manifest.json").read_text())
    assert m["kind"] == "jacobian-check" and m["criteria"][0]["status"] == "pass"
    assert set(m["outputs"]) == {"config.json", "jacobian.csv"}
    assert rd.name.startswith("jacobian-check-" + m["config_hash"][:12])


def test_main_hard_failure(tmp_path):
    cfg = write_config(tmp_path, {"params": dict(QUICK, tol=1e-300)})
    assert main(["jacobian-check", "--config", cfg, "--out", str(tmp_path)]) == 1


def test_main_config_errors(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["decay", "--config", str(bad), "--out", str(tmp_path)]) == 2
    assert main(["wave-energy", "--d", "4", "--out", str(tmp_path)]) == 2
    rec = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert rec == {"error": "invalid-config", "field": "d",
                   "message": "wave synthesis supports d in {3, 5}"}
    prof = write_config(tmp_path, {"params": {"profiles": [{"kind": "gaussian_bump", "colour": 1}]}})
    assert main(["wave-energy", "--config", prof, "--out", str(tmp_path)]) == 2
    assert json.loads(capsys.readouterr().err)["error"] == "invalid-input"
    assert not any(p.is_dir() and p.name.startswith("decay") for p in tmp_path.iterdir())


def test_runs_are_byte_reproducible(tmp_path):
    cfg = ExperimentConfig("adjoint-check", seed=5, out=str(tmp_path), params={"pairs": 2},
                           level=5)
    _, a = run(cfg)
    _, b = run(cfg)
    assert a != b
    assert (a / "adjoint.csv").read_bytes() == (b / "adjoint.csv").read_bytes()
    assert (a / "config.json").read_bytes() == (b / "config.json").read_bytes()


def test_soft_criterion_does_not_gate(tmp_path, monkeypatch):
    cfg = ExperimentConfig("jacobian-check", out=str(tmp_path), params=dict(QUICK, tol=1e-300),
                           soft=["jacobian_rel_error"])
    m, _ = run(cfg)
    assert m.criteria[0]["status"] == "soft-fail" and not m.hard_failures
    cfg.gate_soft = True
    m, _ = run(cfg)
    assert m.criteria[0]["status"] == "fail"


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "radonshell.cli", "report", str(tmp_path / "none")],
                         capture_output=True, text=True)
    assert res.returncode == 1
    assert "manifest missing" in res.stdout


# -- reports -------------------------------------------------------------------------------

def test_report_groups_and_flags(tmp_path):
    good, _ = run(ExperimentConfig("jacobian-check", out=str(tmp_path), params=QUICK))
    m5, d5 = run(ExperimentConfig("jacobian-check", d=5, out=str(tmp_path), params=QUICK))
    _, soft = run(ExperimentConfig("jacobian-check", out=str(tmp_path), params=dict(QUICK, tol=1e-300),
                                   soft=["jacobian_rel_error"]))
    runs = sorted(p for p in tmp_path.iterdir() if p.is_dir())
    text, bad = report(runs)
    assert bad == 0
    assert "== d = 3 ==" in text and "== d = 5 ==" in text
    assert "SOFT-FAIL" in text and "soft failures: 1" in text

    (d5 / "jacobian.csv").unlink()
    broken = tmp_path / "broken"
    broken.mkdir()
    (broken / "manifest.json").write_text("{truncated")
    text, bad = report(runs + [broken])
    assert bad == 2
    assert "[CORRUPT]" in text and "missing outputs: jacobian.csv" in text
    assert "manifest unreadable" in text


def test_report_cli_writes_file(tmp_path, capsys):
    _, rd = run(ExperimentConfig("jacobian-check", out=str(tmp_path / "r"), params=QUICK))
    out = tmp_path / "report.txt"
    assert main(["report", str(rd / "manifest.json"), "--out", str(out)]) == 0
    assert out.read_text().startswith("radonshell verification report")
    assert capsys.readouterr().out == ""

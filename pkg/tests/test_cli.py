import json
import re
from importlib import resources

import numpy as np
import pytest

from isolab.cli import main

CONFIGS = resources.files("isolab") / "configs"


def shipped(name):
    return str(CONFIGS / f"{name}.json")


def write(tmp_path, doc, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return str(p)


def manifest(out):
    return json.loads((out / "manifest.json").read_text())


def test_commuting_monodromy_config(tmp_path):
    assert main(["monodromy", "--config", shipped("commuting"), "--out", str(tmp_path)]) == 0
    m = manifest(tmp_path)
    assert m["status"] == "PASS"
    assert all(c["status"] == "PASS" for c in m["checks"])


def test_commuting_flow_constant(tmp_path):
    assert main(["flow", "--config", shipped("commuting"), "--out", str(tmp_path)]) == 0
    csv = [l for l in (tmp_path / "track.csv").read_text().splitlines() if not l.startswith("#")]
    assert csv[0].startswith("index,")


@pytest.mark.parametrize("name", ["generic4", "pvi", "pvi_half", "garnier", "garnier_half", "reduce",
                                  "probe_manufactured", "tau_loop"])
def test_shipped_configs_pass(tmp_path, name):
    cmd = {"generic4": "flow", "pvi": "pvi", "pvi_half": "pvi", "garnier": "garnier",
           "garnier_half": "garnier", "reduce": "reduce", "probe_manufactured": "probe-pole",
           "tau_loop": "tau"}[name]
    assert main([cmd, "--config", shipped(name), "--out", str(tmp_path)]) == 0


def test_pvi_half_echoes_alpha_zero(tmp_path):
    main(["pvi", "--config", shipped("pvi_half"), "--out", str(tmp_path)])
    alpha = json.loads((tmp_path / "params.json").read_text())["alpha"]
    assert abs(complex(*alpha)) < 1e-12


def test_negative_control_fails(tmp_path):
    assert main(["pvi", "--config", shipped("pvi_negative"), "--out", str(tmp_path)]) == 1
    assert manifest(tmp_path)["status"] == "FAIL"


def test_missing_file_is_io_error(tmp_path):
    assert main(["monodromy", "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path)]) == 3


def test_bad_json_is_config_error(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    assert main(["monodromy", "--config", str(p), "--out", str(tmp_path)]) == 2


def test_pole_collision_names_pair(tmp_path, capsys):
    doc = {"system": {"poles": [0, 1, 1], "residues": [[0, 0, 0, 0]] * 3}}
    assert main(["monodromy", "--config", write(tmp_path, doc), "--out", str(tmp_path)]) == 2
    err = capsys.readouterr().err
    assert "POLE_COLLISION" in err and "1" in err and "2" in err


def test_perturbed_residue_rejected(tmp_path):
    doc = json.loads((CONFIGS / "commuting.json").read_text())
    doc["system"]["residues"][0][0] = [0.2, 0]
    assert main(["verify", "--config", write(tmp_path, doc), "--out", str(tmp_path)]) == 2


def test_blowup_exit_code_and_partial_track(tmp_path):
    doc = json.loads((CONFIGS / "generic4.json").read_text())
    doc["task"]["ceiling"] = 1e-3
    assert main(["flow", "--config", write(tmp_path, doc), "--out", str(tmp_path)]) == 4
    m = manifest(tmp_path)
    assert m["abort"]["code"] == "BLOWUP_DETECTED"
    assert (tmp_path / "track.csv").exists()


def test_bad_flag_values(tmp_path):
    assert main(["verify", "--tol", "-1", "--out", str(tmp_path)]) == 2
    assert main(["monodromy", "--out", str(tmp_path)]) == 2


def test_seventeen_digit_numbers(tmp_path):
    main(["monodromy", "--config", shipped("commuting"), "--out", str(tmp_path)])
    text = (tmp_path / "manifest.json").read_text()
    floats = re.findall(r"-?\d+\.\d+(?:e[-+]\d+)?", text)
    assert floats
    for f in floats:
        assert float(format(float(f), ".17g")) == float(f)
    # complex numbers are emitted as [re, im] pairs
    gens = json.loads((tmp_path / "monodromy.json").read_text())["generators"]
    assert np.array(gens).shape[-1] == 2


def test_verify_subset_deterministic_and_tightened(tmp_path):
    doc = {"task": {"only": ["matrix_log", "lemma1", "theorem2"]}, "output": {"seed": 5}}
    cfg = write(tmp_path, doc)
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["verify", "--config", cfg, "--out", str(a)]) == 0
    assert main(["verify", "--config", cfg, "--out", str(b)]) == 0
    assert (a / "manifest.json").read_bytes() == (b / "manifest.json").read_bytes()
    doc["task"]["check_tolerance_scale"] = 0.01
    assert main(["verify", "--config", write(tmp_path, doc, "tight.json"), "--out", str(tmp_path / "t")]) == 1
    failed = [c["name"] for c in manifest(tmp_path / "t")["checks"] if c["status"] == "FAIL"]
    assert failed == ["lemma1_floor"]


def test_log_env_accepts_levels(tmp_path, monkeypatch):
    monkeypatch.setenv("ISOLAB_LOG", "2")
    assert main(["monodromy", "--config", shipped("commuting"), "--out", str(tmp_path)]) == 0

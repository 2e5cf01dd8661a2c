"""Acceptance criteria 1-10, each run at full size and reported on one line."""

import json
import math

import numpy as np
import pytest

from isolab.cli import main
from isolab.verify import (
    FAIL,
    INCONCLUSIVE,
    PASS,
    check_commuting,
    check_garnier,
    check_isomonodromy,
    check_lemma1,
    check_matrix_log,
    check_monodromy_relation,
    check_pole_probes,
    check_pvi,
    check_reduction,
)

from conftest import ACCEPTANCE_LINES

SEED = 20240611


def rng_for(k):
    return np.random.default_rng(np.random.SeedSequence([SEED, k]))


def report(k, results, allowed=(PASS,)):
    ok = all(r.status in allowed for r in results)
    parts = ", ".join(f"{r.name}={r.measured:.3g} ({r.status}, tol {r.tolerance:.0e})" for r in results)
    line = f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {parts}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def test_c01_matrix_log_branch():
    assert report(1, check_matrix_log(rng_for(1), count=1000))


def test_c02_monodromy_relation():
    assert report(2, check_monodromy_relation(rng_for(2), count=100, tol=1e-10))


def test_c03_commuting_oracle():
    assert report(3, check_commuting(rng_for(3)))


def test_c04_isomonodromy():
    assert report(4, check_isomonodromy(rng_for(4), count=20))


def test_c05_lemma1():
    assert report(5, check_lemma1(rng_for(5)))


def test_c06_pvi_end_to_end():
    assert report(6, check_pvi(rng_for(6), step=1e-3, count=1000))


def test_c07_reduction():
    assert report(7, check_reduction(rng_for(7), count=20))


def test_c08_garnier():
    assert report(8, check_garnier(rng_for(8), count=5))


@pytest.mark.slow
def test_c09_pole_probes(tmp_path):
    results = check_pole_probes(rng_for(9))
    # Theorem 5 probe on an n = 2 family; informational, never a FAIL
    cfg = tmp_path / "t5.json"
    cfg.write_text(json.dumps({"system": {"random": {"kind": "garnier", "n": 2, "theta_inf": [0.3, 0.0]}},
                               "output": {"seed": 9}}))
    code = main(["probe-pole", "--config", str(cfg), "--out", str(tmp_path / "t5")])
    manifest = json.loads((tmp_path / "t5" / "manifest.json").read_text())
    results += [_from_manifest(c) for c in manifest["checks"]]
    assert code in (0, 4)
    assert report(9, results, allowed=(PASS, INCONCLUSIVE))


def _from_manifest(c):
    from isolab.verify import CheckResult

    measured = c["measured"]
    measured = math.nan if measured is None else measured
    if isinstance(measured, list):
        measured = measured[0]
    return CheckResult(c["name"], c.get("provenance", ""), measured, c["tolerance"] or math.nan, c["status"],
                       c.get("details", {}))


def test_c10_determinism(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    codes = [main(["verify", "--seed", "7", "--out", str(d)]) for d in (a, b)]
    same = (a / "manifest.json").read_bytes() == (b / "manifest.json").read_bytes()
    from isolab.verify import CheckResult

    r = CheckResult("manifest_bytes_identical", "verify twice", 0.0 if same else 1.0, 0.0,
                    PASS if same and codes == [0, 0] else FAIL, {"exit_codes": codes})
    assert report(10, [r])

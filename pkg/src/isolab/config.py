"""Run configuration: a single JSON document with ``system``, ``task`` and ``output``.

Complex numbers are ``[re, im]`` pairs.  A residue is either a row-major
flat list of ``p*p`` entries or a list of rows.  Instead of explicit data
the system may be ``{"random": {...}}``, drawn from the run seed.
"""

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InvalidInput
from .fuchsian import POLICIES, SUM_ZERO, FuchsianSystem, ThetaData


class ConfigIOError(OSError):
    pass


def parse_complex(value, where):
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return complex(value)
    if isinstance(value, (list, tuple)) and len(value) == 2 and all(
        isinstance(v, (int, float)) and not isinstance(v, bool) for v in value
    ):
        return complex(value[0], value[1])
    raise InvalidInput(f"{where}: expected a number or [re, im], got {value!r}", code="BAD_CONFIG")


def parse_complex_list(values, where):
    if not isinstance(values, list):
        raise InvalidInput(f"{where}: expected a list", code="BAD_CONFIG")
    return np.array([parse_complex(v, f"{where}[{i}]") for i, v in enumerate(values)], dtype=complex)


def parse_matrix(value, where):
    if not isinstance(value, list) or not value:
        raise InvalidInput(f"{where}: expected a matrix", code="BAD_CONFIG")
    if all(isinstance(r, list) and r and isinstance(r[0], list) for r in value):
        rows = [parse_complex_list(r, f"{where}[{i}]") for i, r in enumerate(value)]
        M = np.array(rows, dtype=complex)
    else:
        flat = parse_complex_list(value, where)
        p = int(round(math.sqrt(len(flat))))
        if p * p != len(flat):
            raise InvalidInput(f"{where}: {len(flat)} entries is not a square matrix", code="BAD_CONFIG")
        M = flat.reshape(p, p)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise InvalidInput(f"{where}: matrix is not square", code="BAD_CONFIG")
    return M


def parse_theta(spec):
    if spec is None:
        return None
    try:
        return ThetaData(
            tuple(int(m) for m in spec["m"]),
            tuple(parse_complex(r, "theta.rho") for r in spec["rho"]),
            int(spec.get("m_inf", 0)),
            parse_complex(spec.get("rho_inf", 0), "theta.rho_inf"),
        )
    except (KeyError, TypeError) as exc:
        raise InvalidInput(f"theta: malformed entry ({exc})", code="BAD_CONFIG") from exc


def positive(value, name):
    try:
        v = float(value)
    except (TypeError, ValueError):
        raise InvalidInput(f"{name} must be a positive number", code="BAD_CONFIG") from None
    if not (v > 0 and math.isfinite(v)):
        raise InvalidInput(f"{name} must be positive, got {value!r}", code="BAD_CONFIG")
    return v


@dataclass
class RunConfig:
    system: dict = field(default_factory=dict)
    task: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)
    source: str = None

    @property
    def seed(self):
        return int(self.output.get("seed", 0))

    @property
    def tol(self):
        return positive(self.task.get("tol", 1e-10), "task.tol")

    @property
    def out_dir(self):
        return Path(self.output.get("dir", "isolab-out"))

    def echo(self):
        """Config as run; the output directory is omitted so manifests do not depend on it."""
        output = {k: v for k, v in self.output.items() if k != "dir"}
        return {"system": self.system, "task": self.task, "output": output}

    def build_system(self):
        from .samples import random_garnier_system, random_system

        spec = self.system
        if not spec:
            raise InvalidInput("config has no system", code="BAD_CONFIG")
        if "random" in spec:
            r = spec["random"]
            rng = np.random.default_rng(self.seed)
            if r.get("kind") == "garnier":
                return random_garnier_system(
                    rng, int(r["n"]), parse_complex(r.get("theta_inf", 0.3), "random.theta_inf"),
                    float(r.get("scale", 0.25)),
                )
            return random_system(
                rng, int(r["n"]), r.get("normalization", SUM_ZERO),
                parse_complex(r.get("theta", 0), "random.theta"), float(r.get("scale", 0.25)),
            )
        if "poles" not in spec or "residues" not in spec:
            raise InvalidInput("system needs poles and residues", code="BAD_CONFIG")
        poles = parse_complex_list(spec["poles"], "system.poles")
        res = [parse_matrix(m, f"system.residues[{i}]") for i, m in enumerate(spec["residues"])]
        if len({m.shape for m in res}) > 1:
            raise InvalidInput("residues have different sizes", code="SHAPE_MISMATCH")
        policy = spec.get("normalization", SUM_ZERO)
        if policy not in POLICIES:
            raise InvalidInput(f"unknown normalization {policy!r}", code="BAD_NORMALIZATION")
        return FuchsianSystem(poles, np.array(res), policy)

    def theta(self):
        return parse_theta(self.system.get("theta"))


def load_config(path):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigIOError(f"cannot read config {path}: {exc.strerror or exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidInput(f"config {path} is not valid JSON: {exc}", code="BAD_CONFIG") from exc
    return config_from_dict(doc, str(path))


def config_from_dict(doc, source=None):
    if not isinstance(doc, dict):
        raise InvalidInput("config must be a JSON object", code="BAD_CONFIG")
    unknown = set(doc) - {"system", "task", "output"}
    if unknown:
        raise InvalidInput(f"unknown top-level keys {sorted(unknown)}", code="BAD_CONFIG")
    cfg = RunConfig(doc.get("system", {}), dict(doc.get("task", {})), dict(doc.get("output", {})), source)
    for key in ("tol", "grid_step", "ceiling", "check_tolerance_scale"):
        if key in cfg.task and not isinstance(cfg.task[key], list):
            positive(cfg.task[key], f"task.{key}")
    seed = cfg.output.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool) or not 0 <= seed < 2**64:
        raise InvalidInput(f"seed must be an unsigned 64-bit integer, got {seed!r}", code="BAD_CONFIG")
    return cfg

"""Command-line entry point.

Every subcommand reads one JSON config, writes its artifacts plus a
``manifest.json`` into the output directory and exits with

    0 success, 1 a check failed, 2 invalid config, 3 I/O error,
    4 numerical abort (blow-up, step underflow, ...).

Wall-clock time goes to ``timing.json`` so manifests stay byte-identical
across repeated runs.
"""

import argparse
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, algebra
from .config import ConfigIOError, RunConfig, load_config, parse_complex, parse_complex_list, positive
from .errors import BlowupDetected, InvalidInput, IsolabError, NumericalAbort
from .fuchsian import ThetaData, reduce_to_scalar, scalar_monodromy_at
from .painleve import (
    apparent_polynomial,
    approach_points,
    deformation_track,
    elementary_symmetric,
    garnier_uv,
    pole_probe,
    probe_u_pole,
    pvi_grid,
    pvi_residual,
    symmetric_polys,
    theorem2_params,
    theorem5_probe,
    find_leading_zero,
)
from .schlesinger import (
    ParamPath,
    SchlesingerState,
    commutator_defect,
    commuting_ln_tau_change,
    flow,
)
from .serialize import dumps, fmt_float
from .transport import BASE_MARGIN, is_smaller, loop_basis, monodromy, rep_fingerprint_distance, transported_basis
from .verify import FAIL, INCONCLUSIVE, PASS, CheckResult, eig_drift, run_suite

log = logging.getLogger("isolab")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_IO, EXIT_NUMERIC = 0, 1, 2, 3, 4


class Run:
    """Collects checks and artifacts for one subcommand."""

    def __init__(self, command, cfg):
        self.command = command
        self.cfg = cfg
        self.checks = []
        self.files = {}
        self.abort = None

    def check(self, name, provenance, measured, tol, **details):
        measured = float(measured)
        ok = measured <= tol and np.isfinite(measured)
        self.checks.append(CheckResult(name, provenance, measured, float(tol), PASS if ok else FAIL, details))

    def add(self, result):
        self.checks.append(result)

    def manifest(self):
        counts = {s: sum(c.status == s for c in self.checks) for s in (PASS, FAIL, INCONCLUSIVE)}
        status = "ABORTED" if self.abort else (FAIL if counts[FAIL] else PASS)
        out = {
            "tool": "isolab",
            "version": __version__,
            "command": self.command,
            "seed": self.cfg.seed,
            "status": status,
            "summary": counts,
            "checks": [c.as_dict() for c in self.checks],
            "artifacts": sorted(self.files),
            "config": self.cfg.echo(),
        }
        if self.abort:
            out["abort"] = self.abort
        return out

    @property
    def failed(self):
        return any(c.status == FAIL for c in self.checks)


def _csv_header(cfg):
    return f"# isolab {__version__} seed={cfg.seed}\n"


def _task(cfg, key, default=None):
    return cfg.task.get(key, default)


def _path_from(cfg, poles, key="path"):
    """Waypoints from ``task.path`` or, relative to the poles, ``task.path_offsets``."""
    raw = _task(cfg, key)
    offsets = _task(cfg, "path_offsets")
    if raw is None and offsets is None:
        raise InvalidInput(f"task.{key} or task.path_offsets is required", code="BAD_CONFIG")
    if raw is not None:
        pts = [parse_complex_list(w, f"task.{key}[{i}]") for i, w in enumerate(raw)]
    else:
        pts = [poles + parse_complex_list(w, f"task.path_offsets[{i}]") for i, w in enumerate(offsets)]
    if any(len(p) != len(poles) for p in pts):
        raise InvalidInput("waypoints must list every pole", code="SHAPE_MISMATCH")
    if len(pts) and np.max(np.abs(pts[0] - poles)) > 1e-12:
        pts = [poles] + pts
    return ParamPath(pts, probe=bool(_task(cfg, "probe", False)))


def _theta(cfg, system):
    th = cfg.theta()
    if th is None:
        th = ThetaData.from_system(system)
    else:
        th.check_against(system)
    return th


# -- subcommands ---------------------------------------------------------------


def cmd_monodromy(cfg, run):
    sys_ = cfg.build_system()
    tol = cfg.tol
    lb = _task(cfg, "loop_basis", {}) or {}
    base = parse_complex(lb["base"], "loop_basis.base") if "base" in lb else None
    radii = lb.get("radii")
    margin = positive(lb["margin"], "loop_basis.margin") if "margin" in lb else None
    basis = loop_basis(sys_.poles, base, radii, margin=margin)
    basis.validate()
    rep = monodromy(sys_, basis, tol)
    det_err = max(
        abs(np.linalg.det(g) - np.exp(2j * np.pi * np.trace(B))) for g, B in zip(rep.generators, sys_.residues)
    )
    run.check("relation", "ordered product of generators is I", rep.relation_residual(),
              _task(cfg, "relation_tol", 1e-7))
    run.check("liouville", "det G_i = exp(2 pi i tr B_i)", det_err, 1e-8)
    if commutator_defect(sys_.residues) <= 1e-12:
        err = max(algebra.norm(g - algebra.mat_exp(2j * np.pi * B)) for g, B in zip(rep.generators, sys_.residues))
        run.check("commuting_oracle", "G_k = exp(2 pi i B_k)", err, 1e-7)
    run.files["monodromy.json"] = dumps({
        "seed": cfg.seed,
        "poles": sys_.poles,
        "generators": rep.generators,
        "fingerprint": rep.fingerprint(),
        "relation_residual": rep.relation_residual(),
        "scalar_generators": is_smaller(rep),
        "basis": rep.metadata,
    })


def _flow_track(state, path, tol, ceiling, per_leg):
    """Sample a flow ``per_leg`` times along each leg; returns (rows, final, abort)."""
    rows = [(0.0, state, "OK")]
    cur = state
    s = 0.0
    for w0, w1 in path.segments():
        for k in range(1, per_leg + 1):
            target = w0 + (w1 - w0) * k / per_leg
            try:
                nxt = flow(cur, ParamPath([cur.poles, target], probe=path.probe), tol, ceiling)
            except BlowupDetected as exc:
                part = exc.partial
                s += float(np.linalg.norm(part.poles - cur.poles))
                rows.append((s, part, "BLOWUP_DETECTED"))
                return rows, None, exc
            s += float(np.linalg.norm(target - cur.poles))
            cur = nxt
            rows.append((s, cur, "OK"))
    return rows, cur, None


def _flow_csv(cfg, rows):
    n = len(rows[0][1].poles)
    cols = ["index", "s"] + [f"a{i + 1}_{c}" for i in range(n) for c in ("re", "im")]
    cols += ["ln_tau_re", "ln_tau_im", "max_norm_B", "status"]
    lines = [_csv_header(cfg).rstrip("\n"), ",".join(cols)]
    for k, (s, st, status) in enumerate(rows):
        vals = [str(k), fmt_float(s)]
        for a in st.poles:
            vals += [fmt_float(a.real), fmt_float(a.imag)]
        vals += [fmt_float(st.ln_tau.real), fmt_float(st.ln_tau.imag), fmt_float(st.max_norm()), status]
        lines.append(",".join(vals))
    return "\n".join(lines) + "\n"


def cmd_flow(cfg, run):
    sys_ = cfg.build_system()
    tol = cfg.tol
    path = _path_from(cfg, sys_.poles)
    ceiling = positive(_task(cfg, "ceiling", 1e8), "task.ceiling")
    state = SchlesingerState.from_system(sys_)
    rows, final, abort = _flow_track(state, path, tol, ceiling, int(_task(cfg, "samples_per_leg", 10)))
    run.files["track.csv"] = _flow_csv(cfg, rows)
    if abort is not None:
        run.abort = {"code": abort.code, "message": str(abort)}
        return
    run.check("residue_sum_drift", "sum B_i constant", algebra.norm(final.residue_sum() - state.residue_sum()), 1e-9)
    run.check("exponent_drift", "eigenvalues of each B_i constant", eig_drift(state.residues, final.residues), 1e-8)
    if _task(cfg, "check_monodromy", True) and sys_.p == 2:
        shift = float(np.max(np.abs(final.poles - sys_.poles)))
        basis = loop_basis(sys_.poles, margin=BASE_MARGIN + shift)
        moved = transported_basis(basis, final.poles)
        d = rep_fingerprint_distance(monodromy(sys_, basis, tol), monodromy(final.to_system(), moved, tol))
        run.check("fingerprint_distance", "monodromy fingerprint constant along the flow", d, 1e-6,
                  homotopy_warnings=moved.warnings)
    if commutator_defect(sys_.residues) <= 1e-12:
        change = max(algebra.norm(a - b) for a, b in zip(final.residues, state.residues))
        run.check("commuting_constant", "commuting residues are fixed by the flow", change, 1e-9)
        run.check("commuting_tau", "ln tau matches the closed form", abs(
            final.ln_tau - commuting_ln_tau_change(sys_.residues, path)), 1e-7)
    run.files["final_state.json"] = dumps({
        "seed": cfg.seed, "poles": final.poles, "residues": final.residues, "ln_tau": final.ln_tau,
    })


def cmd_tau(cfg, run):
    sys_ = cfg.build_system()
    path = _path_from(cfg, sys_.poles)
    state = SchlesingerState.from_system(sys_)
    final = flow(state, path, cfg.tol, positive(_task(cfg, "ceiling", 1e8), "task.ceiling"))
    closed = np.max(np.abs(path.end - path.start)) <= 1e-14
    if closed:
        run.check("closed_loop", "d ln tau is closed", abs(final.ln_tau), 1e-7)
    oracle = None
    if commutator_defect(sys_.residues) <= 1e-12:
        oracle = commuting_ln_tau_change(sys_.residues, path)
        run.check("commuting_tau", "ln tau matches prod (a_i - a_j)^(tr B_i B_j)", abs(final.ln_tau - oracle), 1e-7)
    run.files["tau.json"] = dumps({
        "seed": cfg.seed, "path_length": path.length, "ln_tau_increment": final.ln_tau,
        "tau_ratio": complex(np.exp(final.ln_tau)), "closed_path": bool(closed), "oracle_increment": oracle,
    })


def _rf_dict(f):
    return {"poles": [{"center": c, "coefficients": k} for c, k in f.poles], "polynomial": f.poly}


def cmd_reduce(cfg, run):
    sys_ = cfg.build_system()
    normalized = bool(_task(cfg, "normalized", True))
    theta = _theta(cfg, sys_) if normalized else None
    eq = reduce_to_scalar(sys_, theta)
    tol = cfg.tol
    points = []
    worst_mono, worst_ind = 0.0, 0.0
    for u in eq.apparent_points:
        G = scalar_monodromy_at(eq, u, tol=tol)
        r = eq.indicial_roots(u)
        worst_mono = max(worst_mono, algebra.norm(G - np.eye(2)))
        worst_ind = max(worst_ind, abs(r[0]) + abs(r[1] - 2))
        points.append({"point": u, "indicial_roots": r, "monodromy_minus_identity": algebra.norm(G - np.eye(2))})
    if len(eq.apparent_points):
        run.check("apparent_monodromy", "monodromy around apparent points is I", worst_mono, 1e-6)
        run.check("apparent_indicial", "indicial roots {0, 2}", worst_ind, 1e-8)
    run.check("exponent_sum", "exponents over all singular points sum to N - 2", eq.exponent_sum_residual(), 1e-8)
    out = {
        "seed": cfg.seed,
        "normalized": normalized,
        "p": _rf_dict(eq.p),
        "q": _rf_dict(eq.q),
        "singular_points": [{"point": a, "indicial_roots": eq.indicial_roots(a)} for a in eq.singular_points],
        "apparent_points": points,
        "infinity_exponents": eq.indicial_roots_infinity(),
        "degenerate": eq.degenerate,
        "notes": eq.notes,
    }
    if normalized and sys_.n >= 3 and abs(sys_.poles[-2]) < 1e-14 and abs(sys_.poles[-1] - 1) < 1e-14:
        try:
            u, v = garnier_uv(SchlesingerState.from_system(sys_), theta)
            err = max(abs(eq.q.residue(uj) - vj) for uj, vj in zip(u, v))
            run.check("v_equals_res_q", "v_j equals res q at u_j", err, 1e-8)
            out["v"] = v
        except IsolabError as exc:
            out["notes"] = list(eq.notes) + [f"v check skipped: {exc.code}"]
    run.files["reduction.json"] = dumps(out)


def cmd_pvi(cfg, run):
    sys_ = cfg.build_system()
    if sys_.n != 3:
        raise InvalidInput("pvi needs poles (t, 0, 1)", code="BAD_CONVENTION")
    theta = _theta(cfg, sys_)
    params = theorem2_params(theta)
    step = parse_complex(_task(cfg, "grid_step", 1e-3), "task.grid_step")
    if step == 0:
        raise InvalidInput("grid step must be nonzero", code="BAD_CONFIG")
    count = int(_task(cfg, "grid_count", 1000))
    t0 = sys_.poles[0]
    track = deformation_track(SchlesingerState.from_system(sys_), pvi_grid(t0, step, count), theta, cfg.tol,
                              positive(_task(cfg, "ceiling", 1e8), "task.ceiling"))
    u = None
    if "constant_u" in cfg.task:
        u = np.full(len(track.samples), parse_complex(cfg.task["constant_u"], "task.constant_u"))
    res = pvi_residual(track, params, u=u)
    run.check("pvi_residual", "u(t) solves Painleve VI with the mapped parameters", res.max(),
              _task(cfg, "residual_tol", 1e-4), excluded=len(res.excluded),
              negative_control="constant_u" in cfg.task)
    run.files["track.csv"] = _csv_header(cfg) + track.to_csv()
    lines = [_csv_header(cfg).rstrip("\n"), "t_re,t_im,residual"]
    lines += [f"{fmt_float(t.real)},{fmt_float(t.imag)},{fmt_float(r)}" for t, r in zip(res.t, res.residual)]
    run.files["residual.csv"] = "\n".join(lines) + "\n"
    run.files["params.json"] = dumps({"seed": cfg.seed, **params.as_dict(),
                                      "half_case": theta.is_half_case(), "excluded": res.excluded})


def cmd_garnier(cfg, run):
    sys_ = cfg.build_system()
    theta = _theta(cfg, sys_)
    st = SchlesingerState.from_system(sys_)
    poly = apparent_polynomial(st)
    sig = symmetric_polys(poly)
    from_roots = elementary_symmetric(poly.roots)
    u, v = garnier_uv(st, theta)
    eq = reduce_to_scalar(sys_, theta)
    run.check("viete_vs_expansion", "Viete coefficients equal the expanded numerator", poly.discrepancy, 1e-10)
    run.check("sigma_ratio_vs_roots", "sigma_k ratio formula equals root recombination",
              float(np.max(np.abs(sig - from_roots))), 1e-8)
    run.check("v_equals_res_q", "v_j equals res q at u_j",
              max(abs(eq.q.residue(uj) - vj) for uj, vj in zip(u, v)), 1e-8)
    out = {"seed": cfg.seed, "b_m": poly.b_m, "f": poly.f, "expansion": poly.expansion,
           "u": u, "v": v, "sigma": sig, "sigma_from_roots": from_roots}
    if "path" in cfg.task or "path_offsets" in cfg.task:
        path = _path_from(cfg, sys_.poles)
        per = int(_task(cfg, "samples_per_leg", 10))
        pts = [sys_.poles]
        for w0, w1 in path.segments():
            pts += [w0 + (w1 - w0) * k / per for k in range(1, per + 1)]
        track = deformation_track(st, pts, theta, cfg.tol)
        run.files["track.csv"] = _csv_header(cfg) + track.to_csv()
        out["label_ambiguities"] = track.swaps
        if theta.is_half_case():
            bms = []
            cur = st
            for a, b in zip(pts, pts[1:]):
                cur = flow(cur, ParamPath([a, b]), cfg.tol)
                bms.append(apparent_polynomial(cur).b_m)
            run.check("b_m_constancy", "b_m constant in the (0, 1/2) case",
                      max(abs(b - poly.b_m) for b in bms), 1e-8)
    run.files["garnier.json"] = dumps(out)


def cmd_probe_pole(cfg, run):
    spec = _task(cfg, "manufactured")
    if spec is not None:
        order = float(spec.get("order", 1))
        t_star = parse_complex(spec.get("t_star", 0.5), "manufactured.t_star")
        ts = approach_points(t_star, parse_complex(spec.get("direction", 1), "direction"), 1e-1, 1e-5, 41)
        fit = pole_probe(ts, 1.0 / (ts - t_star) ** order)
        run.check("manufactured_order", "recovered order of a manufactured pole", abs(fit.order - order), 0.05,
                  fitted=fit.order, half_width=fit.half_width)
        run.files["probe.json"] = dumps({"seed": cfg.seed, "order": fit.order, "half_width": fit.half_width,
                                         "t_star": fit.t_star})
        return
    sys_ = cfg.build_system()
    st = SchlesingerState.from_system(sys_)
    p = _task(cfg, "probe", {}) or {}
    if sys_.n == 3:
        guess = parse_complex(p.get("t_guess", sys_.poles[0]), "probe.t_guess")
        try:
            fit, ts, us = probe_u_pole(
                st, guess, parse_complex(p.get("direction", 1), "probe.direction"),
                float(p.get("start", 1e-1)), float(p.get("stop", 1e-6)), int(p.get("count", 41)),
            )
        except NumericalAbort as exc:
            run.add(CheckResult("pole_order", "movable poles of u(t) are simple for alpha != 0", float("nan"), 1.0,
                                INCONCLUSIVE, {"error": exc.code, "message": str(exc)}))
            run.files["probe.json"] = dumps({"seed": cfg.seed, "verdict": INCONCLUSIVE, "error": exc.code})
            return
        ok = 0.8 <= fit.order <= 1.2
        run.add(CheckResult("pole_order", "movable poles of u(t) are simple for alpha != 0", fit.order, 1.0,
                            PASS if ok else INCONCLUSIVE, {"accepted": [0.8, 1.2], "half_width": fit.half_width}))
        run.files["probe.json"] = dumps({"seed": cfg.seed, "order": fit.order, "half_width": fit.half_width,
                                         "t_star": fit.t_star, "notes": fit.notes, "t": ts, "u": us})
        return
    theta = _theta(cfg, sys_)
    j = int(p.get("coordinate", 0))
    try:
        zero = find_leading_zero(st, j, parse_complex(p["guess"], "probe.guess") if "guess" in p else None)
    except NumericalAbort as exc:
        run.add(CheckResult("theorem5", "sigma pole-order bound", float("nan"), float(-st.n + 2), INCONCLUSIVE,
                            {"error": exc.code, "message": str(exc)}))
        run.files["probe.json"] = dumps({"seed": cfg.seed, "verdict": INCONCLUSIVE, "error": exc.code})
        return
    direction = parse_complex(p.get("direction", 1), "probe.direction")
    ts = approach_points(zero.poles[j], direction, float(p.get("start", 1e-1)), float(p.get("stop", 1e-6)),
                         int(p.get("count", 41)))
    cur, sig = zero, []
    for t in ts:
        target = cur.poles.copy()
        target[j] = t
        cur = flow(cur, ParamPath([cur.poles, target]), 1e-12)
        sig.append(symmetric_polys(apparent_polynomial(cur)))
    verdict = theorem5_probe(ts, np.array(sig), st.n - 2, abs(theta.riemann_thetas()[1]) < 1e-14)
    run.add(CheckResult("theorem5", "sigma pole-order bound", min(
        (o["order"] for o in verdict["orders"] if o), default=float("nan")), float(verdict["bound"]),
        verdict["verdict"], {"notes": verdict["notes"]}))
    run.files["probe.json"] = dumps({"seed": cfg.seed, **verdict, "t": ts})


def cmd_verify(cfg, run):
    scale = float(_task(cfg, "check_tolerance_scale", 1.0))
    if cfg.system:
        sys_ = cfg.build_system()
        if sys_.p == 2:
            rep = monodromy(sys_, tol=cfg.tol)
            run.check("config_system_relation", "ordered product of generators is I", rep.relation_residual(),
                      1e-7 * scale)
    for r in run_suite(cfg.seed, scale, _task(cfg, "only"), _task(cfg, "sizes")):
        run.add(r)


COMMANDS = {
    "monodromy": cmd_monodromy,
    "flow": cmd_flow,
    "pvi": cmd_pvi,
    "garnier": cmd_garnier,
    "reduce": cmd_reduce,
    "tau": cmd_tau,
    "verify": cmd_verify,
    "probe-pole": cmd_probe_pole,
}


def build_parser():
    ap = argparse.ArgumentParser(prog="isolab", description="Isomonodromic deformation toolkit")
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", help="JSON run configuration")
    ap.add_argument("--out", help="output directory (overrides output.dir)")
    ap.add_argument("--tol", type=float, help="integrator tolerance (overrides task.tol)")
    ap.add_argument("--seed", type=int, help="seed for randomized sampling (overrides output.seed)")
    ap.add_argument("--grid-step", type=float, help="parameter grid step (overrides task.grid_step)")
    return ap


def _setup_logging():
    level = os.environ.get("ISOLAB_LOG", "WARNING").upper()
    if level.isdigit():
        level = {0: "WARNING", 1: "INFO"}.get(int(level), "DEBUG")
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")


def _load(args):
    if args.config:
        cfg = load_config(args.config)
    elif args.command == "verify":
        cfg = RunConfig()
    else:
        raise InvalidInput(f"{args.command} needs --config", code="BAD_CONFIG")
    if args.out:
        cfg.output["dir"] = args.out
    if args.tol is not None:
        cfg.task["tol"] = positive(args.tol, "--tol")
    if args.seed is not None:
        if not 0 <= args.seed < 2**64:
            raise InvalidInput("--seed must be an unsigned 64-bit integer", code="BAD_CONFIG")
        cfg.output["seed"] = args.seed
    if args.grid_step is not None:
        cfg.task["grid_step"] = positive(args.grid_step, "--grid-step")
    return cfg


def main(argv=None):
    _setup_logging()
    args = build_parser().parse_args(argv)
    started = time.perf_counter()
    try:
        cfg = _load(args)
        run = Run(args.command, cfg)
        try:
            COMMANDS[args.command](cfg, run)
        except NumericalAbort as exc:
            run.abort = {"code": exc.code, "message": str(exc)}
        out = cfg.out_dir
        out.mkdir(parents=True, exist_ok=True)
        for name, text in run.files.items():
            (out / name).write_text(text, encoding="utf-8")
        (out / "manifest.json").write_text(dumps(run.manifest()), encoding="utf-8")
        (out / "timing.json").write_text(dumps({"wall_clock_seconds": time.perf_counter() - started}),
                                         encoding="utf-8")
    except InvalidInput as exc:
        print(f"isolab: invalid config [{exc.code}]: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConfigIOError, OSError) as exc:
        print(f"isolab: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except IsolabError as exc:
        print(f"isolab: numerical abort [{exc.code}]: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    for c in run.checks:
        log.info("%s %s measured=%.3e tol=%.1e", c.status, c.name, c.measured, c.tolerance)
    if run.abort:
        print(f"isolab: numerical abort [{run.abort['code']}]: {run.abort['message']}", file=sys.stderr)
        return EXIT_NUMERIC
    if run.failed:
        print(f"isolab: {sum(c.status == FAIL for c in run.checks)} check(s) FAILED", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

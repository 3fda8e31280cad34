"""Command-line front end.

Every subcommand accepts a model source (``--preset NAME`` or
``--model PATH``), integrator overrides, an output directory for CSV and
JSON artifacts, and ``--json`` for a machine-readable report on stdout.

Exit codes: 0 success, 2 model or assumption failure, 3 refusal because a
prerequisite quantity does not exist, 4 numerical non-convergence, 1 any
other failure (including property violations reported by ``oracle``).
"""

import argparse
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from .errors import FrontwaveError, ModelError, RefusalError
from .model import build_model, load_model, validate_assumptions
from .presets import presets
from .singular_ode import (BACKEND, DEFAULT_CONFIG, S_MINUS, S_PLUS, integrate_backward_from_one,
                           integrate_forward_from_zero)
from .thresholds import C_TOL, analytic_bounds, beta, critical_speed

EXIT_OK = 0
EXIT_FAILURE = 1


# ------------------------------------------------------------- output

def _clean(obj):
    """Recursively make a structure JSON-safe (infinities become strings)."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "+inf" if x > 0 else "-inf"
        return x
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _dumps(obj):
    return json.dumps(_clean(obj), indent=2, sort_keys=True)


class Output:
    """Collects the report and writes artifacts."""

    def __init__(self, args, command):
        self.args = args
        self.command = command
        self.out_dir = args.out
        if self.out_dir:
            os.makedirs(self.out_dir, exist_ok=True)

    def path(self, name):
        return os.path.join(self.out_dir, name) if self.out_dir else None

    def emit(self, report, text_lines):
        report = dict(report)
        report["command"] = self.command
        report["frontwave_version"] = __version__
        report["kernel_backend"] = BACKEND
        report["config"] = _config_record(self.args)
        report["timestamp"] = time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())
        if self.out_dir:
            with open(self.path(f"{self.command}.json"), "w") as fh:
                fh.write(_dumps(report) + "\n")
        if self.args.json:
            print(_dumps(report))
        else:
            for line in text_lines:
                print(line)


def _write_rows(path, header, rows):
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    return f"{float(v):.17g}"


def _num(x):
    if x is None:
        return "n/a"
    return f"{x:.10g}"


# -------------------------------------------------------------- config

def _config_record(args):
    return {"eps0": getattr(args, "eps0", None), "rtol": getattr(args, "rtol", None),
            "seed": getattr(args, "seed", None), "preset": getattr(args, "preset", None),
            "model_path": getattr(args, "model", None)}


def _cfg(args):
    changes = {}
    if args.eps0 is not None:
        changes["eps0"] = args.eps0
    if args.rtol is not None:
        changes["rel_tol"] = args.rtol
    try:
        return DEFAULT_CONFIG.with_(**changes)
    except ValueError as exc:
        raise ModelError(f"invalid integrator setting: {exc}") from exc


def _model(args, required=True):
    if args.preset and args.model:
        raise ModelError("give either --preset or --model, not both")
    if args.preset:
        return build_model(args.preset)
    if args.model:
        return load_model(args.model)
    if required:
        raise ModelError("a model is required: --preset NAME or --model PATH")
    return None


def _parse_sweep(text):
    try:
        a, b, n = text.split(":")
        a, b, n = float(a), float(b), int(n)
    except ValueError:
        raise argparse.ArgumentTypeError("sweep must look like START:STOP:COUNT") from None
    if n < 1 or (n > 1 and not b > a):
        raise argparse.ArgumentTypeError("sweep needs COUNT >= 1 and STOP > START")
    return a, b, n


# ------------------------------------------------------------ commands

def cmd_validate(args):
    m = _model(args)
    rep = validate_assumptions(m)
    lines = [f"model: {rep.model}", f"scenario: {rep.scenario} "
             f"({'consistent' if rep.scenario_consistent else 'inconsistent'})"]
    lines += [f"  {k}: {v}" for k, v in rep.verdicts.items()]
    lines.append(f"  q'(0): {rep.dq0 if rep.dq0_exists else 'does not exist'}")
    lines.append(f"  q'(1): {rep.dq1 if rep.dq1_exists else 'does not exist'}")
    lines += [f"note: {n}" for n in rep.notes]
    if not (rep.dq0_exists and rep.dq1_exists):
        code = RefusalError.exit_code
        lines.append("warning: an endpoint derivative of q does not exist")
    elif rep.ok:
        code = EXIT_OK
    else:
        code = ModelError.exit_code
    Output(args, "validate").emit({"report": rep.to_dict(), "exit_code": code}, lines)
    return code


def cmd_bounds(args):
    m = _model(args)
    b = analytic_bounds(m)
    lines = [f"lower (convective): {_num(b.lower_conv)}",
             f"lower (reactive):   {_num(b.lower_reac)}",
             f"lower:              {_num(b.lower)}",
             f"upper (pointwise):  {_num(b.upper_pointwise)}",
             f"upper (integral):   {_num(b.upper_integral)}"]
    lines += [f"note: {n}" for n in b.notes]
    Output(args, "bounds").emit({"bounds": b.to_dict()}, lines)
    return EXIT_OK


def cmd_cstar(args):
    m = _model(args)
    cfg = _cfg(args)
    res = critical_speed(m, cfg, c_tol=args.c_tol)
    out = Output(args, "cstar")
    report = res.to_dict()
    if out.out_dir:
        res.witness.to_csv(out.path("cstar_witness.csv"))
        report["witness_csv_path"] = out.path("cstar_witness.csv")
    lines = [f"c* = {res.c_star:.12g}  bracket [{res.bracket[0]:.12g}, {res.bracket[1]:.12g}]",
             f"bounds: [{_num(res.bounds.lower)}, {_num(res.bounds.upper_pointwise)}]"]
    out.emit(report, lines)
    return EXIT_OK


def _beta_point(payload):
    spec, c, cfg, c_star = payload
    m = build_model(spec)
    return beta(m, c, cfg, c_star=c_star).to_dict()


def cmd_beta(args):
    m = _model(args)
    cfg = _cfg(args)
    c_star = args.c_star
    if c_star is None:
        c_star = critical_speed(m, cfg).c_star
    if args.sweep is not None:
        a, b, n = args.sweep
        speeds = [a] if n == 1 else list(np.linspace(a, b, n))
    else:
        speeds = [args.c]
    for c in speeds:
        if c < c_star - C_TOL:
            raise RefusalError(f"c = {c:g} is below c* = {c_star:.9g}: no solutions exist")
    payloads = [(m.spec, float(c), cfg, c_star) for c in speeds]
    if args.jobs > 1 and len(payloads) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as ex:
            rows = list(ex.map(_beta_point, payloads))
    else:
        rows = [_beta_point(p) for p in payloads]
    betas = [r["beta"] for r in rows]
    decreasing = all(x is not None and y is not None and y < x for x, y in zip(betas, betas[1:]))
    out = Output(args, "beta")
    if out.out_dir:
        _write_rows(out.path("beta.csv"), ["c", "beta", "beta_hat", "floor"],
                    [(r["c"], r["beta"], r["beta_hat"], r["floor"]) for r in rows])
    lines = [f"c* = {c_star:.12g}"]
    lines += [f"c = {r['c']:.10g}: beta = {_num(r['beta'])}, beta_hat = {_num(r['beta_hat'])}, "
              f"floor = {_num(r['floor'])}" for r in rows]
    if len(rows) > 1:
        lines.append(f"beta strictly decreasing in c: {decreasing}")
    out.emit({"c_star": c_star, "results": rows, "strictly_decreasing": decreasing}, lines)
    return EXIT_OK


def cmd_zsolve(args):
    m = _model(args)
    cfg = _cfg(args)
    if args.forward:
        res = integrate_forward_from_zero(m, args.c, args.forward, cfg)
    else:
        res = integrate_backward_from_one(m, args.c, args.b, cfg)
    out = Output(args, "zsolve")
    report = {"shot": res.to_dict()}
    if out.out_dir:
        res.to_csv(out.path("z.csv"))
        report["csv_path"] = out.path("z.csv")
    lines = [f"{res.direction} shot at c = {res.c:.10g}: {res.terminal}",
             f"z(1) = {_num(res.z_right)}, samples = {len(res.phi_grid)}",
             f"slope estimates: at 0 {_num(res.slope_at_zero_estimate)}, "
             f"at 1 {_num(res.slope_at_one_estimate)}"]
    out.emit(report, lines)
    return EXIT_OK if res.succeeded else 4


def cmd_profile(args):
    from .profile import build_profile
    m = _model(args)
    cfg = _cfg(args)
    shot = integrate_backward_from_one(m, args.c, args.b, cfg)
    c_star = beta_hat = None
    notes = []
    if m.dq0 is not None:
        c_star = critical_speed(m, cfg).c_star
        if args.c > c_star + C_TOL and m.has_factors and float(m.D(0.0)) == 0.0:
            beta_hat = beta(m, args.c, cfg, c_star=c_star, extra_samples=0).beta_hat
    else:
        notes.append("q'(0) does not exist: classification at 0 from the tail test only")
    prof = build_profile(m, shot, cfg, c_star=c_star, beta_hat=beta_hat,
                         normalization=args.normalization)
    cls = prof.classification()
    cls["notes"] = notes + cls["notes"]
    cls["c_star"] = c_star
    cls["beta_hat"] = beta_hat
    out = Output(args, "profile")
    if out.out_dir:
        prof.to_csv(out.path("profile.csv"))
        cls["csv_path"] = out.path("profile.csv")
    lines = [f"kind at 0: {prof.kind_at_zero} ({prof.confidence_zero}), "
             f"xi0 = {_num(prof.xi0)}, slope {_num(prof.slope_at_xi0)}",
             f"kind at 1: {prof.kind_at_one} ({prof.confidence_one}), "
             f"a = {_num(prof.a)}, slope {_num(prof.slope_at_a)}"]
    out.emit({"classification": cls}, lines)
    return EXIT_OK


def cmd_oracle(args):
    from . import oracle
    cfg = _cfg(args)
    out = Output(args, "oracle")
    suite = args.suite
    if suite == "analytic":
        checks = oracle.analytic_suite(cfg)
        ok = all(c.passed for c in checks)
        lines = [f"{'PASS' if c.passed else 'FAIL'} {c.label} {_num(c.deviation)}" for c in checks]
        out.emit({"suite": suite, "ok": ok, "checks": [c.to_dict() for c in checks]}, lines)
    elif suite == "regression":
        checks = oracle.regression_suite(cfg)
        ok = all(c.passed for c in checks)
        lines = [f"{'PASS' if c.passed else 'FAIL'} {c.label} {c.detail}" for c in checks]
        out.emit({"suite": suite, "ok": ok, "checks": [c.to_dict() for c in checks]}, lines)
    elif suite == "properties":
        seed = oracle.CORPUS_SEED if args.seed is None else args.seed
        rep = oracle.property_suite(args.corpus, seed, cfg, jobs=args.jobs)
        ok = rep.ok
        lines = [f"{k}: {v['violations']} violations of {v['checked']}"
                 for k, v in rep.counts.items()]
        lines += [f"error in {e['member']}: {e['error']}" for e in rep.errors]
        lines.append(f"runtime {rep.runtime:.1f} s")
        report = rep.to_dict()
        report.pop("runtime_seconds")
        out.emit({"suite": suite, "ok": ok, "report": report}, lines)
    elif suite == "reference":
        m = _model(args)
        ref = oracle.reference_bisection(m, args.quantity, args.c)
        ok = ref.stable
        lines = [f"{ref.quantity}: {_num(ref.value)} ({ref.verdict}, spread {ref.spread:.3g})"]
        out.emit({"suite": suite, "ok": ok, "reference": ref.to_dict()}, lines)
    elif suite == "mint":
        path = out.path("baseline.json") if out.out_dir else oracle.BASELINE_PATH
        entries = oracle.mint_baseline(path)
        ok = True
        out.emit({"suite": suite, "ok": ok, "path": path, "entries": entries},
                 [f"wrote {len(entries)} entries to {path}"])
    else:
        raise ModelError(f"unknown suite {suite!r}")
    return EXIT_OK if ok else EXIT_FAILURE


def cmd_presets(args):
    rows = [{"name": p.name, "description": p.description,
             "exact_c_star": p.exact_c_star, "missing": list(p.missing)} for p in presets()]
    lines = [f"{r['name']:22s} {r['description']}" for r in rows]
    Output(args, "presets").emit({"presets": rows}, lines)
    return EXIT_OK


# --------------------------------------------------------------- parser

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    src = common.add_mutually_exclusive_group()
    src.add_argument("--preset", metavar="NAME", help="named model from the registry")
    src.add_argument("--model", metavar="PATH", help="JSON model file")
    common.add_argument("--out", metavar="DIR", help="directory for CSV and JSON artifacts")
    common.add_argument("--json", action="store_true", help="print the JSON report to stdout")
    common.add_argument("--eps0", type=float, help="boundary offset for desingularized starts")
    common.add_argument("--rtol", type=float, help="relative integration tolerance")
    common.add_argument("--seed", type=int, help="seed for randomized suites")
    common.add_argument("--jobs", type=int, default=1, help="worker processes for sweeps")

    p = argparse.ArgumentParser(prog="frontwave",
                                description="Traveling fronts of degenerate "
                                            "diffusion-convection-reaction equations.")
    p.add_argument("--version", action="version", version=f"frontwave {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("validate", parents=[common], help="check the standing assumptions")
    sub.add_parser("bounds", parents=[common], help="analytic bounds on the critical speed")
    s = sub.add_parser("cstar", parents=[common], help="critical speed by bisection")
    s.add_argument("--c-tol", type=float, default=C_TOL, help="bracket width at exit")

    s = sub.add_parser("beta", parents=[common], help="boundary-value thresholds at a speed")
    g = s.add_mutually_exclusive_group(required=True)
    g.add_argument("--c", type=float, help="speed")
    g.add_argument("--sweep", type=_parse_sweep, metavar="START:STOP:COUNT",
                   help="evenly spaced speeds")
    s.add_argument("--c-star", type=float, help="skip the critical-speed search")

    s = sub.add_parser("zsolve", parents=[common], help="one shot of the reduced equation")
    s.add_argument("--c", type=float, required=True, help="speed")
    s.add_argument("--b", type=float, default=0.0, help="boundary value z(1) <= 0")
    s.add_argument("--forward", choices=[S_MINUS, S_PLUS],
                   help="shoot forward from 0 along this slope instead")

    s = sub.add_parser("profile", parents=[common], help="rebuild and classify a profile")
    s.add_argument("--c", type=float, required=True, help="speed")
    s.add_argument("--b", type=float, default=0.0, help="boundary value z(1) <= 0")
    s.add_argument("--normalization", type=float, default=0.5, help="level placed at xi = 0")

    s = sub.add_parser("oracle", parents=[common], help="ground-truth and property suites")
    s.add_argument("--suite", default="analytic",
                   choices=["analytic", "properties", "regression", "reference", "mint"])
    s.add_argument("--corpus", type=int, default=50, help="size of the random corpus")
    s.add_argument("--quantity", choices=["c_star", "beta", "beta_hat"], default="c_star",
                   help="quantity for the reference suite")
    s.add_argument("--c", type=float, help="speed for the reference suite")

    sub.add_parser("presets", parents=[common], help="list the named models")
    return p


COMMANDS = {"validate": cmd_validate, "bounds": cmd_bounds, "cstar": cmd_cstar,
            "beta": cmd_beta, "zsolve": cmd_zsolve, "profile": cmd_profile,
            "oracle": cmd_oracle, "presets": cmd_presets}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except FrontwaveError as exc:
        print(f"frontwave {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except (ValueError, OSError) as exc:
        print(f"frontwave {args.command}: {exc}", file=sys.stderr)
        return ModelError.exit_code


if __name__ == "__main__":
    sys.exit(main())

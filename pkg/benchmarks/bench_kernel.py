"""Compare the compiled and pure-Python integration kernels.

Runs the same backward shots through both kernels, checks that the samples
agree bit for bit, and reports the median wall time per shot.

    python benchmarks/bench_kernel.py --repeat 5 --json
"""

import argparse
import json
import statistics
import time

import numpy as np

from frontwave import _pykernel, build_model
from frontwave.singular_ode import DEFAULT_CONFIG, _start_near_one

try:
    from frontwave import _kernel
except ImportError:
    _kernel = None

CASES = [
    ("remark_6_2", 0.0, 0.0),
    ("remark_6_2", 1.0, -0.5),
    ("fisher", 3.0, 0.0),
    ("fisher", 1.0, 0.0),
    ("counterexample_6_2b", 0.0, -1.0),
]


def _args(model, c, b, cfg):
    if b == 0.0:
        x0, y0, _ = _start_near_one(model, c, cfg)
    else:
        x0, y0 = 1.0, b
    kw = dict(rtol=cfg.rel_tol, atol=cfg.abs_tol, min_step=cfg.min_step,
              max_steps=cfg.max_steps, zero_guard=cfg.zero_guard)
    return (model.h_coef, model.q_coef, c, x0, y0, cfg.eps0), kw


def _time(fn, pos, kw, repeat):
    times = []
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*pos, **kw)
        times.append(time.perf_counter() - t0)
    return statistics.median(times), out


def run(repeat):
    rows = []
    for name, c, b in CASES:
        m = build_model(name)
        pos, kw = _args(m, c, b, DEFAULT_CONFIG)
        t_py, out_py = _time(_pykernel.integrate, pos, kw, repeat)
        row = {"case": f"{name} c={c:g} b={b:g}", "steps": len(out_py[0]),
               "python_s": t_py, "compiled_s": None, "speedup": None, "identical": None}
        if _kernel is not None:
            t_c, out_c = _time(_kernel.integrate, pos, kw, repeat)
            same = all(np.array_equal(np.asarray(a), np.asarray(b_))
                       for a, b_ in zip(out_py[:3], out_c[:3])) and out_py[3:] == tuple(out_c[3:])
            row.update(compiled_s=t_c, speedup=t_py / t_c, identical=bool(same))
        rows.append(row)
    return rows


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5, help="timed runs per case")
    p.add_argument("--json", action="store_true", help="print JSON instead of a table")
    args = p.parse_args()
    rows = run(args.repeat)
    if args.json:
        print(json.dumps(rows, indent=2))
        return
    if _kernel is None:
        print("compiled kernel not built; timing the Python kernel only")
    print(f"{'case':34s} {'steps':>6s} {'python ms':>10s} {'compiled ms':>12s} "
          f"{'speedup':>8s} {'identical':>9s}")
    for r in rows:
        comp = f"{1e3 * r['compiled_s']:12.3f}" if r["compiled_s"] is not None else f"{'-':>12s}"
        sp = f"{r['speedup']:8.1f}" if r["speedup"] is not None else f"{'-':>8s}"
        print(f"{r['case']:34s} {r['steps']:6d} {1e3 * r['python_s']:10.3f} {comp} {sp} "
              f"{str(r['identical']):>9s}")


if __name__ == "__main__":
    main()

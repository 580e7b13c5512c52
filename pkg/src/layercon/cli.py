"""Command-line interface: layercon synth|propagate|simulate|sweep <scenario>.

Exit codes are stable and part of the external contract:
  0 success
  2 usage error (argparse)
  3 scenario parse/validation error
  4 lifting assumption failure
  5 stabilizability failure
  6 synthesis (SDP) infeasibility
  7 propagation infeasibility (an empty piece; stderr names it)
  8 planner infeasibility mid-run (partial artifacts are written)
"""

import argparse
import os
import sys

from . import artifacts, pipeline
from .errors import (
    AssumptionError,
    PlannerInfeasibleError,
    PropagationInfeasibleError,
    ScenarioError,
    StabilizabilityError,
    SynthesisInfeasibleError,
)
from .scenario import load_scenario

EXIT_CODES = {
    ScenarioError: 3,
    AssumptionError: 4,
    StabilizabilityError: 5,
    SynthesisInfeasibleError: 6,
    PropagationInfeasibleError: 7,
    PlannerInfeasibleError: 8,
}


def _exit_code(exc):
    for cls, code in EXIT_CODES.items():
        if isinstance(exc, cls):
            return code
    return 1


def _outdir(args):
    os.makedirs(args.out, exist_ok=True)
    return args.out


def cmd_synth(args):
    sc = load_scenario(args.scenario)
    if args.method:
        sc = _override_method(sc, args.method)
    bundle = pipeline.synthesize(sc)
    v0 = pipeline._v0_max(sc, bundle.sf)
    from .simfunc import compute_precision
    from .polytopes import max_norm_over
    ub = sc.synthesis.ubar_max or max_norm_over(sc.Ubar)
    precision = compute_precision(bundle.sf, ub, v0)
    out = _outdir(args)
    path = artifacts.write_synthesis_report(
        bundle.sf, precision, os.path.join(out, f"{sc.name}_synthesis.txt"))
    print(f"synthesis ok: gamma={bundle.sf.gamma:.6g} epsilon={precision.epsilon:.6g}")
    print(f"report: {path}")
    return 0


def cmd_propagate(args):
    sc = load_scenario(args.scenario)
    if args.method:
        sc = _override_method(sc, args.method)
    bundle = pipeline.synthesize(sc)
    out = _outdir(args)
    try:
        prop = pipeline.propagate(sc, bundle)
    except PropagationInfeasibleError as exc:
        print(f"propagation infeasible: {exc}", file=sys.stderr)
        raise
    path = artifacts.write_planning_dump(prop, os.path.join(out, f"{sc.name}_planning.txt"))
    ok = all(r.passed for r in prop.reports)
    print(f"propagation ok: epsilon={prop.precision.epsilon:.6g} "
          f"pieces={len(prop.planning_sets)} checks_passed={ok}")
    print(f"dump: {path}")
    return 0


def cmd_simulate(args):
    sc = load_scenario(args.scenario)
    if args.method:
        sc = _override_method(sc, args.method)
    out = _outdir(args)
    try:
        log, bundle, prop = pipeline.simulate(sc)
    except PlannerInfeasibleError as exc:
        partial = getattr(exc, "partial_trace", None)
        if partial is not None:
            artifacts.write_trace_csv(partial, os.path.join(out, f"{sc.name}_trace.csv"))
            summary = artifacts.monitor_summary(partial)
            artifacts._atomic_write(os.path.join(out, f"{sc.name}_monitors.txt"), summary)
            print(summary, end="")
        print(f"planner infeasible: {exc}", file=sys.stderr)
        raise
    if args.strict_lowlevel_output and not all(log.y_in_Y_low):
        print("strict mode: low-level output excursion treated as failure", file=sys.stderr)
    artifacts.write_trace_csv(log, os.path.join(out, f"{sc.name}_trace.csv"))
    artifacts.write_synthesis_report(
        bundle.sf, prop.precision, os.path.join(out, f"{sc.name}_synthesis.txt"))
    artifacts.write_planning_dump(prop, os.path.join(out, f"{sc.name}_planning.txt"))
    artifacts.write_run_plots(sc, log, out, sc.name)
    summary = artifacts.monitor_summary(log)
    artifacts._atomic_write(os.path.join(out, f"{sc.name}_monitors.txt"), summary)
    print(summary, end="")
    return 0


def cmd_sweep(args):
    sc = load_scenario(args.scenario)
    if args.method:
        sc = _override_method(sc, args.method)
    if not args.freqs:
        print("sweep needs --freqs a,b,c", file=sys.stderr)
        return 2
    freqs = [float(v) for v in args.freqs.split(",") if v.strip()]
    if not freqs:
        print("sweep needs a nonempty frequency list", file=sys.stderr)
        return 2
    rows = pipeline.sweep_frequencies(sc, freqs)
    out = _outdir(args)
    csv_path = artifacts.write_sweep_csv(rows, os.path.join(out, f"{sc.name}_sweep.csv"))
    from .svg import plot_sweep
    svg_path = plot_sweep([r.freq_hz for r in rows], [r.epsilon for r in rows],
                          [r.u_bar_max for r in rows],
                          os.path.join(out, f"{sc.name}_sweep.svg"))
    for r in rows:
        note = f"  ({r.note})" if r.note else ""
        print(f"{r.freq_hz:6.3f} Hz  gamma={r.gamma:10.6g}  eps={r.epsilon:10.6g}  "
              f"ubar_max={r.u_bar_max:10.6g}  feasible={int(r.feasible)}{note}")
    print(f"csv: {csv_path}\nsvg: {svg_path}")
    return 0


def _override_method(sc, method):
    from dataclasses import replace
    return replace(sc, synthesis=replace(sc.synthesis, method=method))


def build_parser():
    ap = argparse.ArgumentParser(
        prog="layercon",
        description="Layered multirate control: synthesis, propagation, simulation, sweeps.",
    )
    sub = ap.add_subparsers(dest="command", required=True)
    for name, fn in (("synth", cmd_synth), ("propagate", cmd_propagate),
                     ("simulate", cmd_simulate), ("sweep", cmd_sweep)):
        sp = sub.add_parser(name)
        sp.add_argument("scenario", help="path to a .scenario file or a bundled name")
        sp.add_argument("--out", default="out", help="output directory (default: out)")
        sp.add_argument("--method", choices=["lyapunov", "sdp"], default=None,
                        help="override the scenario's synthesis method")
        if name == "sweep":
            sp.add_argument("--freqs", default="", help="comma-separated 1/T_L values in Hz")
        if name == "simulate":
            sp.add_argument("--strict-lowlevel-output", action="store_true",
                            help="treat low-level output excursions as failures")
        sp.set_defaults(fn=fn)
    return ap


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except tuple(EXIT_CODES) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _exit_code(exc)


if __name__ == "__main__":
    sys.exit(main())

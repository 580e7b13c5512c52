"""Run artifacts: trace CSV, synthesis report, planning-set dump, SVG plots.

All writes are atomic (write-temp-rename).  The trace CSV header is part of
the external interface and must not drift:
t,xbar...,ubar...,x...,u...,ybar...,y...,V,dist,eps_ok,y_in_Y,u_in_U
with vector fields expanded by index.
"""

import os

import numpy as np

from . import svg

__all__ = ["trace_csv", "write_trace_csv", "write_synthesis_report",
           "write_planning_dump", "write_run_plots", "write_sweep_csv", "monitor_summary"]


def _atomic_write(path, text):
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)
    return path


def trace_header(log):
    cols = ["t"]
    cols += [f"xbar{i}" for i in range(log.xbar.shape[1])]
    cols += [f"ubar{i}" for i in range(log.ubar.shape[1])]
    cols += [f"x{i}" for i in range(log.x.shape[1])]
    cols += [f"u{i}" for i in range(log.u.shape[1])]
    cols += [f"ybar{i}" for i in range(log.ybar.shape[1])]
    cols += [f"y{i}" for i in range(log.y.shape[1])]
    cols += ["V", "dist", "eps_ok", "y_in_Y", "u_in_U"]
    return ",".join(cols)


def trace_csv(log):
    lines = [trace_header(log)]
    for k in range(log.t.shape[0]):
        row = [f"{log.t[k]:.9g}"]
        for arr in (log.xbar, log.ubar, log.x, log.u, log.ybar, log.y):
            row += [f"{v:.12g}" for v in arr[k]]
        row += [f"{log.V[k]:.12g}", f"{log.dist[k]:.12g}",
                str(int(log.eps_ok[k])), str(int(log.y_in_Y_low[k])),
                str(int(log.u_in_U[k]))]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def write_trace_csv(log, path):
    return _atomic_write(path, trace_csv(log))


def _mat_lines(name, M):
    M = np.atleast_2d(M)
    out = [f"{name} ({M.shape[0]}x{M.shape[1]}):"]
    for row in M:
        out.append("  [" + ", ".join(f"{v: .12g}" for v in row) + "]")
    return out


def write_synthesis_report(sf, precision, path, extra=None):
    e7, e8 = sf.lmi_slacks()
    lines = ["synthesis report", "================", ""]
    lines += [f"method: {sf.method}",
              f"lambda: {sf.lam:.12g}",
              f"gamma: {sf.gamma:.12g}",
              f"epsilon: {precision.epsilon:.12g}",
              f"u_bar_max: {precision.u_bar_max:.12g}",
              f"v0_max: {precision.v0_max:.12g}",
              f"lift residual (output map): {sf.lift.residual_cp:.3e}",
              f"lift residual (commutation): {sf.lift.residual_sylv:.3e}",
              f"lmi slack (output bound, min eig): {e7:.6e}",
              f"lmi slack (contraction, max eig): {e8:.6e}",
              f"feedforward used pseudo-inverse: {sf.r_used_pinv}", ""]
    for name, M in (("P", sf.lift.P), ("Q", sf.lift.Q), ("M", sf.M),
                    ("K", sf.K), ("R", sf.R)):
        lines += _mat_lines(name, M)
        lines.append("")
    if extra:
        lines += [extra, ""]
    return _atomic_write(path, "\n".join(lines))


def write_planning_dump(prop, path):
    lines = ["planning sets", "=============", ""]
    for i, (ps, rep) in enumerate(zip(prop.planning_sets, prop.reports)):
        lines.append(f"piece {i}: epsilon={ps.epsilon:.12g} delta={ps.delta:.12g} "
                     f"u_bar_max={ps.u_bar_max:.12g}")
        lines.append(f"  empty: state={ps.Xp.is_empty()} input={ps.Up.is_empty()}")
        lines.append(f"  propagation check: passed={rep.passed} "
                     f"output_margin={rep.worst_output_margin:.6e} "
                     f"input_margin={rep.worst_input_margin:.6e} "
                     f"(n={rep.n_samples})")
        lines += _mat_lines("  Xp.F", ps.Xp.F)
        lines += _mat_lines("  Xp.f", ps.Xp.f[None, :])
        lines += _mat_lines("  Up.F", ps.Up.F)
        lines += _mat_lines("  Up.f", ps.Up.f[None, :])
        lines.append("")
    return _atomic_write(path, "\n".join(lines))


def monitor_summary(log):
    v = log.violations
    lines = ["monitor summary", "===============",
             f"records: {log.t.shape[0]} low-level steps (incl. t=0 and t=T)",
             f"epsilon bound: {log.eps:.12g}",
             f"max output distance: {float(np.max(log.dist)):.12g} "
             f"at step {int(np.argmax(log.dist))}",
             f"tracking bound violations: {v['eps']}",
             f"output-constraint violations at high-level steps: {v['y_high']}",
             f"output-constraint excursions at low-level steps (observation): {v['y_low']}",
             f"input-constraint violations at low-level steps: {v['u']}",
             f"goal reached: {not np.isnan(log.goal_time)}"
             + (f" at t={log.goal_time:g}s" if not np.isnan(log.goal_time) else ""),
             f"aborted: {log.aborted}" + (f" ({log.abort_reason})" if log.aborted else "")]
    return "\n".join(lines) + "\n"


def write_run_plots(sc, log, outdir, prefix):
    paths = []
    paths.append(svg.plot_trajectory(
        sc.safe_region, log.ybar, log.y, sc.mission.goal_center,
        sc.mission.goal_radius, os.path.join(outdir, f"{prefix}_trajectory.svg"),
        title=f"{sc.name}: output trajectories"))
    paths.append(svg.plot_distance(
        log.t, log.dist, log.eps, os.path.join(outdir, f"{prefix}_distance.svg"),
        title=f"{sc.name}: output distance vs bound"))
    # input bounds from the box rows of U (symmetric boxes in the bundled runs)
    lo = -float(np.max(np.abs(sc.U.f)))
    hi = float(np.max(np.abs(sc.U.f)))
    paths.append(svg.plot_inputs(
        log.t, log.u, log.ubar, (lo, hi),
        os.path.join(outdir, f"{prefix}_inputs.svg"),
        title=f"{sc.name}: input components"))
    return paths


def write_sweep_csv(rows, path):
    lines = ["freq_hz,gamma,epsilon,u_bar_max,feasible"]
    for r in rows:
        lines.append(f"{r.freq_hz:.9g},{r.gamma:.12g},{r.epsilon:.12g},"
                     f"{r.u_bar_max:.12g},{int(r.feasible)}")
    return _atomic_write(path, "\n".join(lines) + "\n")

"""Tiny deterministic SVG writer for the run artifacts.

Hand-rolled on purpose: output is plain text with fixed formatting, so plots
diff cleanly in CI and are bit-stable across runs.
"""

import os

import numpy as np

__all__ = ["plot_trajectory", "plot_distance", "plot_inputs", "plot_sweep"]

_W, _H = 640, 480
_PAD = 50


def _fmt(v):
    return f"{v:.3f}".rstrip("0").rstrip(".")


class _Canvas:
    def __init__(self, xlim, ylim, title=""):
        self.parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
            f'viewBox="0 0 {_W} {_H}">',
            f'<rect width="{_W}" height="{_H}" fill="white"/>',
        ]
        self.xlim, self.ylim = xlim, ylim
        if title:
            self.parts.append(
                f'<text x="{_W // 2}" y="22" text-anchor="middle" '
                f'font-family="monospace" font-size="14">{title}</text>')

    def sx(self, x):
        a, b = self.xlim
        return _PAD + (x - a) / (b - a) * (_W - 2 * _PAD)

    def sy(self, y):
        a, b = self.ylim
        return _H - _PAD - (y - a) / (b - a) * (_H - 2 * _PAD)

    def axes(self, xlabel="", ylabel=""):
        x0, y0 = self.sx(self.xlim[0]), self.sy(self.ylim[0])
        x1, y1 = self.sx(self.xlim[1]), self.sy(self.ylim[1])
        self.parts.append(f'<rect x="{_fmt(x0)}" y="{_fmt(y1)}" width="{_fmt(x1 - x0)}" '
                          f'height="{_fmt(y0 - y1)}" fill="none" stroke="black"/>')
        for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
            xv = self.xlim[0] + frac * (self.xlim[1] - self.xlim[0])
            yv = self.ylim[0] + frac * (self.ylim[1] - self.ylim[0])
            self.parts.append(f'<text x="{_fmt(self.sx(xv))}" y="{_H - _PAD + 18}" '
                              f'text-anchor="middle" font-family="monospace" '
                              f'font-size="10">{_fmt(xv)}</text>')
            self.parts.append(f'<text x="{_PAD - 6}" y="{_fmt(self.sy(yv) + 3)}" '
                              f'text-anchor="end" font-family="monospace" '
                              f'font-size="10">{_fmt(yv)}</text>')
        if xlabel:
            self.parts.append(f'<text x="{_W // 2}" y="{_H - 12}" text-anchor="middle" '
                              f'font-family="monospace" font-size="12">{xlabel}</text>')
        if ylabel:
            self.parts.append(f'<text x="14" y="{_H // 2}" text-anchor="middle" '
                              f'font-family="monospace" font-size="12" '
                              f'transform="rotate(-90 14 {_H // 2})">{ylabel}</text>')

    def polyline(self, xs, ys, color, width=1.5, dash=None):
        pts = " ".join(f"{_fmt(self.sx(x))},{_fmt(self.sy(y))}" for x, y in zip(xs, ys))
        d = f' stroke-dasharray="{dash}"' if dash else ""
        self.parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" '
                          f'stroke-width="{width}"{d}/>')

    def rect(self, lo, hi, fill="none", stroke="black", width=1.0):
        x, y = self.sx(lo[0]), self.sy(hi[1])
        w, h = self.sx(hi[0]) - self.sx(lo[0]), self.sy(lo[1]) - self.sy(hi[1])
        self.parts.append(f'<rect x="{_fmt(x)}" y="{_fmt(y)}" width="{_fmt(w)}" '
                          f'height="{_fmt(h)}" fill="{fill}" stroke="{stroke}" '
                          f'stroke-width="{width}"/>')

    def circle(self, center, radius_data, fill, stroke="none"):
        r = radius_data / (self.xlim[1] - self.xlim[0]) * (_W - 2 * _PAD)
        self.parts.append(f'<circle cx="{_fmt(self.sx(center[0]))}" '
                          f'cy="{_fmt(self.sy(center[1]))}" r="{_fmt(r)}" '
                          f'fill="{fill}" stroke="{stroke}"/>')

    def hline(self, y, color, dash="6,4", label=""):
        self.polyline(list(self.xlim), [y, y], color, width=1.2, dash=dash)
        if label:
            self.parts.append(f'<text x="{_W - _PAD - 4}" y="{_fmt(self.sy(y) - 5)}" '
                              f'text-anchor="end" font-family="monospace" font-size="10" '
                              f'fill="{color}">{label}</text>')

    def legend(self, entries):
        y = _PAD + 8
        for text, color in entries:
            self.parts.append(f'<line x1="{_PAD + 8}" y1="{y}" x2="{_PAD + 34}" y2="{y}" '
                              f'stroke="{color}" stroke-width="2"/>')
            self.parts.append(f'<text x="{_PAD + 40}" y="{y + 4}" font-family="monospace" '
                              f'font-size="11">{text}</text>')
            y += 16

    def write(self, path):
        self.parts.append("</svg>")
        tmp = f"{path}.tmp"
        with open(tmp, "w", encoding="utf-8") as fh:
            fh.write("\n".join(self.parts) + "\n")
        os.replace(tmp, path)
        return path


def _box_of(piece):
    """Bounding box of an axis-aligned 2-D piece from its halfspace rows."""
    lo = np.full(2, -np.inf)
    hi = np.full(2, np.inf)
    for row, rhs in zip(piece.F, piece.f):
        for ax in range(2):
            if abs(row[ax]) > 1e-12 and abs(row[1 - ax]) < 1e-12:
                if row[ax] > 0:
                    hi[ax] = min(hi[ax], rhs / row[ax])
                else:
                    lo[ax] = max(lo[ax], rhs / row[ax])
    return lo, hi


def plot_trajectory(region, ybar, y, goal_center, goal_radius, path, title="output trajectories"):
    if region.dim == 1:
        return _plot_trajectory_1d(region, ybar, y, goal_center, goal_radius, path, title)
    boxes = [_box_of(pc) for pc in region.pieces]
    los = np.array([b[0] for b in boxes])
    his = np.array([b[1] for b in boxes])
    margin = 0.5
    cv = _Canvas((los[:, 0].min() - margin, his[:, 0].max() + margin),
                 (los[:, 1].min() - margin, his[:, 1].max() + margin), title=title)
    span_x = cv.xlim[1] - cv.xlim[0]
    span_y = cv.ylim[1] - cv.ylim[0]
    cv.rect((cv.xlim[0], cv.ylim[0]), (cv.xlim[1], cv.ylim[1]), fill="#d9d9d9", stroke="none")
    for lo, hi in boxes:
        cv.rect(lo, hi, fill="white", stroke="none")
    for lo, hi in boxes:
        cv.rect(lo, hi, fill="none", stroke="#888888", width=0.6)
    cv.circle(goal_center, goal_radius, fill="#ffb366")
    cv.polyline(ybar[:, 0], ybar[:, 1], "#cc2222", width=1.6)
    cv.polyline(y[:, 0], y[:, 1], "#2255cc", width=1.2)
    cv.legend([("higher layer", "#cc2222"), ("lower layer", "#2255cc")])
    cv.axes("x (m)", "y (m)")
    _ = (span_x, span_y)
    return cv.write(path)


def _plot_trajectory_1d(region, ybar, y, goal_center, goal_radius, path, title):
    """Scalar-output systems: plot both outputs against the step index."""
    steps = np.arange(ybar.shape[0], dtype=float)
    lo = min(float(np.min(ybar)), float(np.min(y)))
    hi = max(float(np.max(ybar)), float(np.max(y)))
    pad = 0.1 * max(hi - lo, 1.0)
    cv = _Canvas((0.0, float(steps[-1]) if steps.size > 1 else 1.0),
                 (lo - pad, hi + pad), title=title)
    cv.axes("step", "output")
    cv.polyline(steps, ybar[:, 0], "#cc2222", width=1.6)
    cv.polyline(steps, y[:, 0], "#2255cc", width=1.2)
    cv.hline(float(goal_center[0]), "#ff8800", label="goal")
    for pc in region.pieces:
        for row, rhs in zip(pc.F, pc.f):
            if abs(row[0]) > 1e-12:
                cv.hline(rhs / row[0], "#888888", dash="2,4")
    cv.legend([("higher layer", "#cc2222"), ("lower layer", "#2255cc")])
    return cv.write(path)


def plot_distance(t, dist, eps, path, title="output distance"):
    top = max(float(np.max(dist, initial=0.0)), eps) * 1.2 + 1e-9
    cv = _Canvas((float(t[0]), float(t[-1])), (0.0, top), title=title)
    cv.axes("t (s)", "||ybar - y||")
    cv.polyline(t, dist, "#2255cc", width=1.4)
    cv.hline(eps, "#cc2222", label=f"bound {eps:.4g}")
    return cv.write(path)


def plot_inputs(t, u, ubar, u_bounds, path, title="inputs"):
    lo = min(float(np.min(u)), float(np.min(ubar)), u_bounds[0]) * 1.1
    hi = max(float(np.max(u)), float(np.max(ubar)), u_bounds[1]) * 1.1
    cv = _Canvas((float(t[0]), float(t[-1])), (lo, hi), title=title)
    cv.axes("t (s)", "input")
    colors = ["#2255cc", "#22aa88", "#cc2222", "#cc22aa"]
    for j in range(u.shape[1]):
        cv.polyline(t, u[:, j], colors[j % 4], width=1.3)
    for j in range(ubar.shape[1]):
        cv.polyline(t, ubar[:, j], colors[(2 + j) % 4], width=1.1, dash="4,3")
    cv.hline(u_bounds[0], "#555555", label=f"{u_bounds[0]:g}")
    cv.hline(u_bounds[1], "#555555", label=f"{u_bounds[1]:g}")
    entries = [(f"u[{j}] (lower)", colors[j % 4]) for j in range(u.shape[1])]
    entries += [(f"ubar[{j}] (higher)", colors[(2 + j) % 4]) for j in range(ubar.shape[1])]
    cv.legend(entries)
    return cv.write(path)


def plot_sweep(freqs, eps, ubmax, path, title="precision vs frequency"):
    f = np.asarray(freqs, dtype=float)
    e = np.asarray(eps, dtype=float)
    ub = np.asarray(ubmax, dtype=float)
    ok = np.isfinite(e)
    top = float(np.max(np.concatenate([e[ok], ub[np.isfinite(ub)], [1.0]]))) * 1.15
    cv = _Canvas((float(f.min()) - 0.5, float(f.max()) + 0.5), (0.0, top), title=title)
    cv.axes("1/T_L (Hz)", "value")
    cv.polyline(f[ok], e[ok], "#cc2222", width=1.6)
    okb = np.isfinite(ub)
    cv.polyline(f[okb], ub[okb], "#2255cc", width=1.6, dash="5,3")
    cv.legend([("tracking precision", "#cc2222"), ("input-norm bound", "#2255cc")])
    return cv.write(path)

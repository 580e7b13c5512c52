"""Constraint propagation: shrink lower-layer output/input sets into planning sets.

The output set loses an epsilon margin per row; the input set additionally
pays for the feedback term through the rows of K M^{-1/2} and, when the
feedforward-state matrix Q is nonzero, a delta budget on ||Q xbar||_inf.
"""

from dataclasses import dataclass

import numpy as np

from .errors import PropagationInfeasibleError
from .polytopes import HPolytope, max_norm_over
from .simfunc import compute_precision

__all__ = [
    "PlanningSets",
    "PropagationReport",
    "tighten_output",
    "tighten_input",
    "build_planning_sets",
    "check_propagation_conditions",
]


@dataclass(frozen=True)
class PlanningSets:
    """Tightened planner sets plus the hyperparameters that produced them."""

    Xp: HPolytope
    Up: HPolytope
    epsilon: float
    delta: float
    u_bar_max: float

    def __post_init__(self):
        if self.delta < 0 or self.epsilon < 0:
            raise ValueError("epsilon and delta must be nonnegative")
        cap = max_norm_over(self.Up)
        if cap > self.u_bar_max + 1e-9:
            raise ValueError(
                f"planner input set allows norm {cap:.9g} above the declared "
                f"bound {self.u_bar_max:.9g}"
            )


def tighten_output(Y, Cbar, Xbar, epsilon):
    """Rows of Xbar plus F_y Cbar xbar <= f_y - eps*||F_yj|| per output row."""
    if epsilon < 0:
        raise ValueError("epsilon must be nonnegative")
    Cbar = np.asarray(Cbar, dtype=float)
    shrink = epsilon * np.linalg.norm(Y.F, axis=1)
    rows = HPolytope(F=Y.F @ Cbar, f=Y.f - shrink)
    return Xbar.intersect(rows)


def _m_inv_sqrt(M, floor=1e-12):
    w, V = np.linalg.eigh(np.asarray(M, dtype=float))
    if w.min() < floor:
        raise ValueError(f"M is not positive definite (eigenvalue {w.min():.3e})")
    return (V / np.sqrt(w)) @ V.T


def tighten_input(U, R, K, M, epsilon, delta):
    """Rows of U plus F_u R ubar <= f_u - delta*||F_uj||_1 - eps*||G_uj||."""
    if epsilon < 0 or delta < 0:
        raise ValueError("epsilon and delta must be nonnegative")
    R = np.atleast_2d(np.asarray(R, dtype=float))
    K = np.atleast_2d(np.asarray(K, dtype=float))
    G = U.F @ K @ _m_inv_sqrt(M)
    shrink = delta * np.linalg.norm(U.F, ord=1, axis=1) + epsilon * np.linalg.norm(G, axis=1)
    rows = HPolytope(F=U.F @ R, f=U.f - shrink)
    return U.intersect(rows)


def _norm_cap_box(dim, cap):
    """Axis box inscribed in the Euclidean cap-ball: |u_i| <= cap/sqrt(dim)."""
    half = cap / np.sqrt(dim)
    return HPolytope.from_box(-half * np.ones(dim), half * np.ones(dim))


def _input_set(sf, U, Ubar, epsilon, delta):
    return Ubar.intersect(tighten_input(U, sf.R, sf.K, sf.M, epsilon, delta))


def build_planning_sets(sf, Y_piece, U, Xbar, Ubar, delta=0.0,
                        u_bar_max=None, v0_max=0.0, piece_index=None):
    """Build the tightened planner sets for one safe-region piece.

    Without a pinned u_bar_max the input-norm bound is driven to
    self-consistency: the map s -> max-norm of the tightened input set at
    epsilon(s) is non-increasing, so s - maxnorm(Up(eps(s))) has a unique
    root, found by bisection to 1e-9.  A pinned u_bar_max skips the
    iteration and instead intersects the input set with an inscribed box so
    the declared bound is honored exactly.
    """
    if delta < 0:
        raise ValueError("delta must be nonnegative")

    def eps_of(s):
        return compute_precision(sf, s, v0_max).epsilon if s > 0 else max(v0_max, 0.0)

    if u_bar_max is None:
        s_hi = max_norm_over(Ubar)
        up_hi = _input_set(sf, U, Ubar, eps_of(s_hi), delta)

        def gap(s):
            up = _input_set(sf, U, Ubar, eps_of(s), delta)
            if up.is_empty():
                return -np.inf  # too tight: shrink s
            return max_norm_over(up) - s

        if gap(s_hi) >= -1e-12:
            u_bar_max = s_hi
            Up = up_hi
        else:
            lo, hi = 0.0, s_hi
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                if hi - lo < 1e-9:
                    break
                if gap(mid) > 0:
                    lo = mid
                else:
                    hi = mid
            u_bar_max = hi  # upper end: consistent side of the root
            Up = _input_set(sf, U, Ubar, eps_of(u_bar_max), delta)
    else:
        if u_bar_max <= 0:
            raise ValueError("pinned u_bar_max must be positive")
        Up = _input_set(sf, U, Ubar, eps_of(u_bar_max), delta)
        Up = Up.intersect(_norm_cap_box(Up.dim, u_bar_max))

    epsilon = eps_of(u_bar_max)
    if Up.is_empty():
        raise PropagationInfeasibleError(
            f"tightened input set is empty at epsilon={epsilon:.6g}",
            piece=piece_index, which="input",
        )
    Xp = tighten_output(Y_piece, sf.higher.C, Xbar, epsilon)
    q_active = np.linalg.norm(sf.lift.Q) > 1e-12 or delta > 0
    if q_active:
        # ||Q xbar||_inf <= delta as +-row halfspaces
        Q = sf.lift.Q
        Xp = Xp.intersect(HPolytope(
            F=np.vstack([Q, -Q]),
            f=np.concatenate([np.full(Q.shape[0], delta), np.full(Q.shape[0], delta)]),
        ))
    if Xp.is_empty():
        raise PropagationInfeasibleError(
            f"tightened state set is empty at epsilon={epsilon:.6g}",
            piece=piece_index, which="state",
        )
    return PlanningSets(Xp=Xp, Up=Up, epsilon=float(epsilon), delta=float(delta),
                        u_bar_max=float(u_bar_max))


@dataclass(frozen=True)
class PropagationReport:
    passed: bool
    worst_output_margin: float
    worst_input_margin: float
    n_samples: int


def _unit_sphere(rng, dim, count):
    v = rng.standard_normal((count, dim))
    norms = np.linalg.norm(v, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    return v / norms


def _hull_samples(vertices, rng, count):
    if vertices.shape[0] == 0:
        return vertices
    w = rng.dirichlet(np.ones(vertices.shape[0]), size=count)
    return w @ vertices


def check_propagation_conditions(sf, ps, Y_piece, U, n_samples=1000, rng=None):
    """Sampling check of the two propagation inclusions.

    Output side: Cbar xbar + eps*e stays in the piece for boundary points of
    the tightened output set and unit vectors e (random plus each row's
    worst direction).  Input side: R ubar + Q xbar + eps*K M^{-1/2} e stays
    in U over vertices/hull points of the input set and the delta-box.
    Returns the worst margins; negative beyond -1e-9 means failure.
    """
    rng = rng or np.random.default_rng(0)
    eps = ps.epsilon

    # tightened output-space set: rows of Xp that act through Cbar only are
    # exactly the output rows; rebuild it directly from the piece
    shrink = eps * np.linalg.norm(Y_piece.F, axis=1)
    out_set = HPolytope(F=Y_piece.F, f=Y_piece.f - shrink)
    out_pts = out_set.vertices()
    out_pts = np.vstack([out_pts, _hull_samples(out_pts, rng, n_samples)])
    p = Y_piece.dim
    dirs = _unit_sphere(rng, p, n_samples)
    row_dirs = Y_piece.F / np.linalg.norm(Y_piece.F, axis=1, keepdims=True)
    dirs = np.vstack([dirs, row_dirs])
    worst_out = np.inf
    for y0 in out_pts:
        pts = y0[None, :] + eps * dirs
        margins = (Y_piece.f[None, :] - pts @ Y_piece.F.T).min(axis=1)
        worst_out = min(worst_out, float(margins.min()))

    u_verts = ps.Up.vertices()
    u_pts = np.vstack([u_verts, _hull_samples(u_verts, rng, n_samples)])
    n = sf.lower.nstate
    KMi = sf.K @ _m_inv_sqrt(sf.M)
    st_dirs = _unit_sphere(rng, n, n_samples)
    # each input row's worst direction: the unit row of G = F_u K M^{-1/2}
    G = U.F @ KMi
    gnorm = np.linalg.norm(G, axis=1, keepdims=True)
    st_dirs = np.vstack([st_dirs, G / np.where(gnorm > 0, gnorm, 1.0)])
    feedback = eps * st_dirs @ KMi.T
    if np.linalg.norm(sf.lift.Q) > 1e-12:
        dbox = HPolytope.from_box(-ps.delta * np.ones(sf.lift.Q.shape[0]),
                                  ps.delta * np.ones(sf.lift.Q.shape[0]))
        q_terms = dbox.vertices()
    else:
        q_terms = np.zeros((1, U.dim))
    worst_in = np.inf
    for ub in u_pts:
        base = sf.R @ ub
        for q in q_terms:
            pts = base[None, :] + q[None, :] + feedback
            margins = (U.f[None, :] - pts @ U.F.T).min(axis=1)
            worst_in = min(worst_in, float(margins.min()))

    passed = worst_out >= -1e-9 and worst_in >= -1e-9
    return PropagationReport(passed=passed, worst_output_margin=worst_out,
                             worst_input_margin=worst_in, n_samples=n_samples)

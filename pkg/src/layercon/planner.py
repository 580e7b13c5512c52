"""Waypoint mission management and the linear tracking MPC.

plan_step condenses the horizon QP onto the input sequence and enforces the
tightened planning sets at every stage; the first input is returned.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, PlannerInfeasibleError
from .qp import QpProblem, solve_qp

__all__ = ["PlannerConfig", "Mission", "MissionState", "PlanStep", "plan_step", "advance_mission"]


def _weight(w, dim, name):
    if w is None:
        return np.eye(dim)
    w = np.asarray(w, dtype=float)
    if w.ndim == 0:
        return float(w) * np.eye(dim)
    if w.ndim == 1:
        if w.size != dim:
            raise DimensionError(f"{name} diagonal has size {w.size}, expected {dim}")
        return np.diag(w)
    if w.shape != (dim, dim):
        raise DimensionError(f"{name} has shape {w.shape}, expected {(dim, dim)}")
    sym = 0.5 * (w + w.T)
    if np.linalg.eigvalsh(sym).min() < -1e-10:
        raise ValueError(f"{name} must be positive semidefinite")
    return sym


@dataclass(frozen=True)
class PlannerConfig:
    """Horizon, stage weights, and the waypoint switching radius."""

    horizon: int = 10
    state_weight: np.ndarray = None
    input_weight: np.ndarray = None
    terminal_weight: np.ndarray = None  # None -> Riccati cost-to-go
    waypoint_switch_radius: float = 0.3

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.waypoint_switch_radius <= 0:
            raise ValueError("switch radius must be positive")

    def resolved(self, nstate, ninput, sys_H=None):
        W = _weight(self.state_weight, nstate, "state_weight")
        Wu = _weight(self.input_weight, ninput, "input_weight")
        if self.terminal_weight is not None:
            WT = _weight(self.terminal_weight, nstate, "terminal_weight")
        elif sys_H is not None:
            WT = _riccati_cost(sys_H.Ad, sys_H.Bd, W, Wu)
        else:
            WT = W
        return W, Wu, WT


def _riccati_cost(A, B, Q, R, max_iter=20000, tol=1e-12):
    """Infinite-horizon cost-to-go for the terminal weight; falls back to Q."""
    P = Q.copy()
    for _ in range(max_iter):
        BtP = B.T @ P
        try:
            gain = np.linalg.solve(R + BtP @ B, BtP @ A)
        except np.linalg.LinAlgError:
            return Q
        Pn = Q + A.T @ P @ (A - B @ gain)
        Pn = 0.5 * (Pn + Pn.T)
        if not np.all(np.isfinite(Pn)) or np.linalg.norm(Pn) > 1e10:
            return Q
        if np.linalg.norm(Pn - P) <= tol * max(1.0, np.linalg.norm(P)):
            return Pn
        P = Pn
    return P


@dataclass(frozen=True)
class Mission:
    """Ordered waypoints with their safe-region piece, then a goal disk."""

    waypoints: tuple          # tuple of output-space points
    piece_of_waypoint: tuple  # piece index per waypoint
    goal_center: np.ndarray
    goal_radius: float
    goal_piece: int

    def __post_init__(self):
        wps = tuple(np.asarray(w, dtype=float).ravel() for w in self.waypoints)
        pieces = tuple(int(i) for i in self.piece_of_waypoint)
        if len(wps) != len(pieces):
            raise DimensionError("one piece index per waypoint required")
        object.__setattr__(self, "waypoints", wps)
        object.__setattr__(self, "piece_of_waypoint", pieces)
        object.__setattr__(self, "goal_center", np.asarray(self.goal_center, dtype=float).ravel())
        if self.goal_radius <= 0:
            raise ValueError("goal radius must be positive")


@dataclass
class MissionState:
    """Mutable cursor owned by the simulation engine."""

    index: int = 0
    done: bool = False
    switches: list = field(default_factory=list)  # step indices of waypoint switches


def advance_mission(mission, state, ybar, switch_radius, step=None):
    """Advance the cursor; returns (target, piece, done).

    Switches to the next waypoint when within the switch radius; once past
    the last waypoint the goal disk is the target, and done flips when the
    higher-layer output enters it.
    """
    ybar = np.asarray(ybar, dtype=float).ravel()
    nwp = len(mission.waypoints)
    while state.index < nwp and np.linalg.norm(ybar - mission.waypoints[state.index]) <= switch_radius:
        state.index += 1
        if step is not None:
            state.switches.append(step)
    if state.index >= nwp:
        if np.linalg.norm(ybar - mission.goal_center) <= mission.goal_radius:
            state.done = True
        return mission.goal_center, mission.goal_piece, state.done
    return mission.waypoints[state.index], mission.piece_of_waypoint[state.index], False


@dataclass(frozen=True)
class PlanStep:
    u: np.ndarray
    value: float          # optimal cost of the horizon QP
    kkt_residual: float
    predicted: np.ndarray  # planned state trajectory, shape (N+1, n)


def _reference_state(sys_H, target):
    """Min-norm state with the requested output (zero velocity for chains)."""
    x_ref, _, _, _ = np.linalg.lstsq(sys_H.C, np.asarray(target, dtype=float), rcond=None)
    return x_ref


def plan_step(xbar, target, ps, sys_H, cfg):
    """One planner call: horizon QP over the tightened sets, first input returned.

    The initial state must lie in the tightened state set (1e-6 slack);
    infeasibility is raised, never silently relaxed.
    """
    xbar = np.asarray(xbar, dtype=float).ravel()
    n, m = sys_H.nstate, sys_H.ninput
    if ps.Xp.nrows and float(np.min(ps.Xp.slack(xbar))) < -1e-6:
        raise PlannerInfeasibleError(
            f"initial state violates the planning set by "
            f"{-float(np.min(ps.Xp.slack(xbar))):.3e}"
        )
    N = cfg.horizon
    W, Wu, WT = cfg.resolved(n, m, sys_H)
    x_ref = _reference_state(sys_H, target)

    # prediction matrices: X = Sx xbar + Su U, rows are stages 1..N
    A, B = sys_H.Ad, sys_H.Bd
    Sx = np.zeros((N * n, n))
    Su = np.zeros((N * n, N * m))
    Ak = np.eye(n)
    for k in range(N):
        Ak = A @ Ak
        Sx[k * n:(k + 1) * n] = Ak
        for j in range(k + 1):
            blk = np.linalg.matrix_power(A, k - j) @ B
            Su[k * n:(k + 1) * n, j * m:(j + 1) * m] = blk
    Qbar = np.kron(np.eye(N), W)
    Qbar[-n:, -n:] = WT
    Rbar = np.kron(np.eye(N), Wu)
    ref = np.tile(x_ref, N)
    err0 = Sx @ xbar - ref
    H = Su.T @ Qbar @ Su + Rbar
    g = Su.T @ Qbar @ err0

    rows_F = []
    rows_h = []
    if ps.Xp.nrows:
        FX = np.kron(np.eye(N), ps.Xp.F)
        rows_F.append(FX @ Su)
        rows_h.append(np.tile(ps.Xp.f, N) - FX @ Sx @ xbar)
    if ps.Up.nrows:
        rows_F.append(np.kron(np.eye(N), ps.Up.F))
        rows_h.append(np.tile(ps.Up.f, N))
    Fineq = np.vstack(rows_F) if rows_F else np.zeros((0, N * m))
    hineq = np.concatenate(rows_h) if rows_h else np.zeros(0)

    prob = QpProblem(H=H, g=g, Fineq=Fineq, hineq=hineq)
    res = solve_qp(prob, tol=1e-8)
    if res.status == "infeasible":
        raise PlannerInfeasibleError("planner horizon QP is infeasible")
    U = res.x
    X = (Sx @ xbar + Su @ U).reshape(N, n)
    # full tracking cost incl. the constant term, for value-monotonicity logs
    value = res.objective + 0.5 * float(err0 @ Qbar @ err0)
    return PlanStep(u=U[:m].copy(), value=float(value), kkt_residual=res.kkt_residual,
                    predicted=np.vstack([xbar[None, :], X]))

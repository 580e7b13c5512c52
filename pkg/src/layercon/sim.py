"""Two-rate closed-loop execution with runtime monitors.

The outer loop plans once per high-level period and holds the input; the
inner loop runs the tracking controller at the low-level period.  Between
high-level steps the higher-layer state is propagated with its low-rate
discretization under the held input, which coincides with the high-rate
discretization at the boundaries (the unique ZOH-consistent choice).
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, PlannerInfeasibleError
from .planner import MissionState, advance_mission, plan_step
from .polytopes import membership
from .simfunc import eval_V, eval_controller

__all__ = ["InitPair", "TraceLog", "EpsVerdict", "run", "monitor_eps"]

_EPS_SLACK = 1e-9


@dataclass(frozen=True)
class InitPair:
    """Initial states of both layers; outputs must agree."""

    xbar0: np.ndarray
    x0: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "xbar0", np.asarray(self.xbar0, dtype=float).ravel())
        object.__setattr__(self, "x0", np.asarray(self.x0, dtype=float).ravel())

    @classmethod
    def lifted(cls, sf, xbar0):
        """x0 = P xbar0: zero certificate value at time zero."""
        xbar0 = np.asarray(xbar0, dtype=float).ravel()
        return cls(xbar0=xbar0, x0=sf.lift.P @ xbar0)

    def validate(self, lower, higher, Y_region, Xp_start, lifted, sf=None):
        yb = higher.C @ self.xbar0
        y = lower.C @ self.x0
        if np.linalg.norm(yb - y) > 1e-9:
            raise ValueError("initial outputs of the two layers disagree")
        inside, _ = membership(Y_region, y)
        if not inside:
            raise ValueError("initial lower-layer output violates the safe region")
        if Xp_start.nrows and float(np.min(Xp_start.slack(self.xbar0))) < -1e-9:
            raise ValueError("initial higher-layer state is outside the planning set")
        if lifted:
            if sf is None:
                raise ValueError("lifted-init check needs the certificate")
            if np.linalg.norm(self.x0 - sf.lift.P @ self.xbar0) > 1e-9:
                raise ValueError("lifted init declared but x0 != P xbar0")
        return self


@dataclass
class TraceLog:
    """Per-low-step arrays plus per-high-step planner records and monitors."""

    t: np.ndarray
    xbar: np.ndarray
    ubar: np.ndarray
    x: np.ndarray
    u: np.ndarray
    ybar: np.ndarray
    y: np.ndarray
    V: np.ndarray
    dist: np.ndarray
    eps_ok: np.ndarray        # dist <= eps + slack, per low step
    y_in_Y_low: np.ndarray    # observation, per low step
    u_in_U: np.ndarray        # per low step
    high_t: np.ndarray
    y_in_Y_high: np.ndarray   # guarantee, per high step
    planner_value: np.ndarray
    active_piece: np.ndarray
    target: np.ndarray
    eps: float
    gamma: float
    u_bar_max: float
    goal_time: float          # nan if never reached
    aborted: bool = False
    abort_reason: str = ""
    switches: list = field(default_factory=list)

    def validate_shape(self, rates):
        L = rates.total_steps
        if self.t.shape[0] != L + 1:
            raise DimensionError(f"trace must hold {L + 1} records, has {self.t.shape[0]}")
        dts = np.diff(self.t)
        if np.any(dts <= 0) or np.max(np.abs(dts - rates.T_L)) > 1e-9:
            raise ValueError("timestamps must increase strictly by T_L")
        return self

    @property
    def violations(self):
        return {
            "eps": int(np.sum(~self.eps_ok)),
            "y_high": int(np.sum(~self.y_in_Y_high)),
            "y_low": int(np.sum(~self.y_in_Y_low)),
            "u": int(np.sum(~self.u_in_U)),
        }


@dataclass(frozen=True)
class EpsVerdict:
    passed: bool
    max_dist: float
    argmax_step: int
    eps: float


def monitor_eps(log, eps):
    """Pass iff max ||ybar - y|| <= eps + 1e-9; reports the argmax step."""
    if log.dist.size == 0:
        raise ValueError("empty trace")
    k = int(np.argmax(log.dist))
    return EpsVerdict(passed=bool(log.dist[k] <= eps + _EPS_SLACK),
                      max_dist=float(log.dist[k]), argmax_step=k, eps=float(eps))


def run(lower, higher_L, sys_H, sf, planning_sets, cfg, mission, init, rates,
        Y_region, U_set, precision, stop_on_planner_failure=True):
    """Execute the two-rate loop and evaluate every monitor.

    planning_sets: list of PlanningSets, one per safe-region piece.
    Returns a TraceLog; planner infeasibility raises PlannerInfeasibleError
    with the partial trace attached as exc.partial_trace.
    """
    n_low = rates.inner_steps
    n_high = rates.outer_steps
    L = rates.total_steps
    eps = precision.epsilon

    recs = {k: [] for k in ("t", "xbar", "ubar", "x", "u", "ybar", "y", "V", "dist",
                            "eps_ok", "y_low", "u_ok")}
    high = {k: [] for k in ("t", "y_high", "value", "piece", "target")}

    xbar = init.xbar0.copy()
    x = init.x0.copy()
    state = MissionState()
    goal_time = np.nan
    aborted = False
    reason = ""

    def record_low(t, ub, u_now):
        yb = higher_L.C @ xbar
        yy = lower.C @ x
        recs["t"].append(t)
        recs["xbar"].append(xbar.copy())
        recs["ubar"].append(ub.copy())
        recs["x"].append(x.copy())
        recs["u"].append(u_now.copy())
        recs["ybar"].append(yb)
        recs["y"].append(yy)
        recs["V"].append(eval_V(sf, xbar, x))
        d = float(np.linalg.norm(yb - yy))
        recs["dist"].append(d)
        recs["eps_ok"].append(d <= eps + _EPS_SLACK)
        recs["y_low"].append(membership(Y_region, yy)[0])
        recs["u_ok"].append(U_set.contains(u_now, tol=1e-9))

    step_idx = 0
    ub = np.zeros(sys_H.ninput)
    for h in range(n_high):
        t_h = h * rates.T_H
        target, piece, done = advance_mission(
            mission, state, higher_L.C @ xbar, cfg.waypoint_switch_radius, step=step_idx)
        if done and np.isnan(goal_time):
            goal_time = t_h
        ps = planning_sets[piece]
        try:
            plan = plan_step(xbar, target, ps, sys_H, cfg)
        except PlannerInfeasibleError as exc:
            aborted = True
            reason = f"planner failed at t={t_h:g}s (piece {piece}): {exc}"
            if stop_on_planner_failure:
                partial = _assemble(recs, high, precision, sf, goal_time, True, reason,
                                    state)
                err = PlannerInfeasibleError(reason)
                err.partial_trace = partial
                raise err from exc
            break
        ub = plan.u
        high["t"].append(t_h)
        high["y_high"].append(membership(Y_region, lower.C @ x)[0])
        high["value"].append(plan.value)
        high["piece"].append(piece)
        high["target"].append(np.asarray(target, dtype=float))
        for _ in range(n_low):
            t = step_idx * rates.T_L
            u_now = eval_controller(sf, ub, xbar, x)
            record_low(t, ub, u_now)
            x = lower.step(x, u_now)
            xbar = higher_L.step(xbar, ub)
            step_idx += 1
    # final record at t = T (input that would be applied under the held ubar)
    u_now = eval_controller(sf, ub, xbar, x)
    record_low(step_idx * rates.T_L, ub, u_now)
    if np.isnan(goal_time):
        _, _, done = advance_mission(mission, state, higher_L.C @ xbar,
                                     cfg.waypoint_switch_radius, step=step_idx)
        if done:
            goal_time = rates.T
    # the guarantee covers t = T as well
    high["t"].append(rates.T)
    high["y_high"].append(membership(Y_region, lower.C @ x)[0])
    high["value"].append(np.nan)
    high["piece"].append(high["piece"][-1] if high["piece"] else 0)
    high["target"].append(high["target"][-1] if high["target"] else np.zeros(lower.noutput))

    log = _assemble(recs, high, precision, sf, goal_time, aborted, reason, state)
    if not aborted:
        log.validate_shape(rates)
    return log


def _assemble(recs, high, precision, sf, goal_time, aborted, reason, state):
    return TraceLog(
        t=np.array(recs["t"]),
        xbar=np.array(recs["xbar"]),
        ubar=np.array(recs["ubar"]),
        x=np.array(recs["x"]),
        u=np.array(recs["u"]),
        ybar=np.array(recs["ybar"]),
        y=np.array(recs["y"]),
        V=np.array(recs["V"]),
        dist=np.array(recs["dist"]),
        eps_ok=np.array(recs["eps_ok"], dtype=bool),
        y_in_Y_low=np.array(recs["y_low"], dtype=bool),
        u_in_U=np.array(recs["u_ok"], dtype=bool),
        high_t=np.array(high["t"]),
        y_in_Y_high=np.array(high["y_high"], dtype=bool),
        planner_value=np.array(high["value"]),
        active_piece=np.array(high["piece"], dtype=int),
        target=np.array(high["target"]) if high["target"] else np.zeros((0, 0)),
        eps=precision.epsilon,
        gamma=sf.gamma,
        u_bar_max=precision.u_bar_max,
        goal_time=goal_time,
        aborted=aborted,
        abort_reason=reason,
        switches=list(state.switches),
    )

"""Scenario files: one YAML document describing systems, rates, constraints,
synthesis settings, planner settings, mission, and init."""

import importlib.resources
import os
from dataclasses import dataclass, field

import numpy as np
import yaml

from .errors import ScenarioError
from .planner import Mission, PlannerConfig
from .polytopes import HPolytope, SafeRegion
from .systems import CtSystem, RatePair

__all__ = ["Scenario", "SynthesisSettings", "load_scenario", "dump_scenario", "bundled_path"]


def _need(d, key, where):
    if key not in d:
        raise ScenarioError(f"missing field {where}.{key}")
    return d[key]


def _matrix(obj, where):
    try:
        M = np.asarray(obj, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"{where} is not numeric: {exc}") from exc
    if not np.all(np.isfinite(M)):
        raise ScenarioError(f"{where} has non-finite entries")
    return np.atleast_2d(M)


def _polytope(obj, where, dim=None):
    if "box" in obj:
        lo = np.asarray(_need(obj["box"], "lo", where), dtype=float).ravel()
        hi = np.asarray(_need(obj["box"], "hi", where), dtype=float).ravel()
        P = HPolytope.from_box(lo, hi)
    elif "halfspaces" in obj:
        F = _matrix(_need(obj["halfspaces"], "F", where), f"{where}.F")
        f = np.asarray(_need(obj["halfspaces"], "f", where), dtype=float).ravel()
        P = HPolytope(F=F, f=f)
    else:
        raise ScenarioError(f"{where} must give a box or halfspaces")
    if dim is not None and P.dim != dim:
        raise ScenarioError(f"{where} has dimension {P.dim}, expected {dim}")
    return P


@dataclass(frozen=True)
class SynthesisSettings:
    method: str = "sdp"
    beta: float = 0.9
    delta: float = 0.0
    lambda_fixed: float = None
    gain_backoff: float = 0.999
    ubar_max: float = None        # pinned planner input-norm bound
    epsilon_override: float = None  # force the tightening epsilon (failure demo)
    eps_pd: float = 1e-6


@dataclass(frozen=True)
class Scenario:
    name: str
    lower_ct: CtSystem
    higher_ct: CtSystem
    rates: RatePair
    safe_region: SafeRegion
    U: HPolytope
    Ubar: HPolytope
    Xbar: HPolytope
    synthesis: SynthesisSettings
    planner: PlannerConfig
    mission: Mission
    start: np.ndarray
    lifted_init: bool
    raw: dict = field(repr=False, default=None)


def load_scenario(path):
    """Parse and validate a scenario file; all cross-dimension checks happen here."""
    path = str(path)
    if not os.path.exists(path):
        cand = bundled_path(path)
        if cand is None:
            raise ScenarioError(f"scenario file not found: {path}")
        path = cand
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise ScenarioError(f"cannot parse {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ScenarioError(f"{path} does not hold a mapping")
    return scenario_from_dict(doc)


def scenario_from_dict(doc):
    name = doc.get("name", "scenario")
    lo = _need(doc, "lower_system", name)
    hi = _need(doc, "higher_system", name)
    try:
        lower = CtSystem(A=_matrix(_need(lo, "A", "lower_system"), "lower_system.A"),
                         B=_matrix(_need(lo, "B", "lower_system"), "lower_system.B"),
                         C=_matrix(_need(lo, "C", "lower_system"), "lower_system.C"))
        higher = CtSystem(A=_matrix(_need(hi, "A", "higher_system"), "higher_system.A"),
                          B=_matrix(_need(hi, "B", "higher_system"), "higher_system.B"),
                          C=_matrix(_need(hi, "C", "higher_system"), "higher_system.C"))
    except ScenarioError:
        raise
    except Exception as exc:
        raise ScenarioError(f"bad system matrices: {exc}") from exc
    if lower.noutput != higher.noutput:
        raise ScenarioError("lower and higher systems must share the output dimension")
    if higher.nstate > lower.nstate:
        raise ScenarioError("the higher-layer model must not exceed the lower in state dimension")

    r = _need(doc, "rates", name)
    try:
        rates = RatePair(T_L=float(_need(r, "T_L", "rates")),
                         T_H=float(_need(r, "T_H", "rates")),
                         T=float(_need(r, "T", "rates")))
    except ValueError as exc:
        raise ScenarioError(f"rates: {exc}") from exc

    con = _need(doc, "constraints", name)
    pieces_raw = _need(con, "Y_pieces", "constraints")
    if not pieces_raw:
        raise ScenarioError("constraints.Y_pieces must list at least one piece")
    p = lower.noutput
    pieces = [_polytope(pc, f"constraints.Y_pieces[{i}]", dim=p)
              for i, pc in enumerate(pieces_raw)]
    safe = SafeRegion(pieces=tuple(pieces))
    U = _polytope(_need(con, "U", "constraints"), "constraints.U", dim=lower.ninput)
    Ubar = _polytope(_need(con, "Ubar", "constraints"), "constraints.Ubar", dim=higher.ninput)
    if "Xbar" in con and con["Xbar"]:
        Xbar = _polytope(con["Xbar"], "constraints.Xbar", dim=higher.nstate)
    else:
        Xbar = HPolytope.empty_rows(higher.nstate)

    syn = doc.get("synthesis", {}) or {}
    ov = syn.get("overrides", {}) or {}
    method = syn.get("method", "sdp")
    if method not in ("sdp", "lyapunov"):
        raise ScenarioError(f"synthesis.method must be sdp or lyapunov, got {method!r}")
    synthesis = SynthesisSettings(
        method=method,
        beta=float(syn.get("beta", 0.9)),
        delta=float(syn.get("delta", 0.0)),
        lambda_fixed=None if ov.get("lambda") is None else float(ov["lambda"]),
        gain_backoff=float(ov.get("gain_backoff", 0.999)),
        ubar_max=None if ov.get("ubar_max") is None else float(ov["ubar_max"]),
        epsilon_override=None if ov.get("epsilon") is None else float(ov["epsilon"]),
        eps_pd=float(ov.get("eps_pd", 1e-6)),
    )

    pl = doc.get("planner", {}) or {}
    planner = PlannerConfig(
        horizon=int(pl.get("horizon", 10)),
        state_weight=pl.get("state_weight"),
        input_weight=pl.get("input_weight"),
        terminal_weight=pl.get("terminal_weight"),
        waypoint_switch_radius=float(pl.get("switch_radius", 0.3)),
    )

    mi = _need(doc, "mission", name)
    start = np.asarray(_need(mi, "start", "mission"), dtype=float).ravel()
    if start.size != p:
        raise ScenarioError(f"mission.start has dimension {start.size}, expected {p}")
    wps = []
    wp_pieces = []
    for i, w in enumerate(mi.get("waypoints", []) or []):
        pt = np.asarray(_need(w, "point", f"mission.waypoints[{i}]"), dtype=float).ravel()
        if pt.size != p:
            raise ScenarioError(f"mission.waypoints[{i}] has dimension {pt.size}, expected {p}")
        idx = int(_need(w, "piece", f"mission.waypoints[{i}]"))
        if not (0 <= idx < len(pieces)):
            raise ScenarioError(f"mission.waypoints[{i}].piece {idx} out of range")
        wps.append(pt)
        wp_pieces.append(idx)
    goal = _need(mi, "goal", "mission")
    goal_center = np.asarray(_need(goal, "center", "mission.goal"), dtype=float).ravel()
    goal_radius = float(_need(goal, "radius", "mission.goal"))
    goal_piece = int(goal.get("piece", wp_pieces[-1] if wp_pieces else 0))
    if not (0 <= goal_piece < len(pieces)):
        raise ScenarioError(f"mission.goal.piece {goal_piece} out of range")
    # consecutive waypoints must sit in identical or geometrically adjacent pieces
    seq = wp_pieces + [goal_piece]
    for a, b in zip(seq, seq[1:]):
        if a != b and pieces[a].intersect(pieces[b]).is_empty():
            raise ScenarioError(f"mission pieces {a} and {b} are not adjacent")
    mission = Mission(waypoints=tuple(wps), piece_of_waypoint=tuple(wp_pieces),
                      goal_center=goal_center, goal_radius=goal_radius,
                      goal_piece=goal_piece)

    init = doc.get("init", {}) or {}
    lifted = bool(init.get("lifted", True))

    return Scenario(name=str(name), lower_ct=lower, higher_ct=higher, rates=rates,
                    safe_region=safe, U=U, Ubar=Ubar, Xbar=Xbar, synthesis=synthesis,
                    planner=planner, mission=mission, start=start, lifted_init=lifted,
                    raw=doc)


def dump_scenario(sc, path):
    """Serialize the semantic fields back to YAML (round-trips with load)."""
    doc = {
        "name": sc.name,
        "lower_system": {"A": sc.lower_ct.A.tolist(), "B": sc.lower_ct.B.tolist(),
                         "C": sc.lower_ct.C.tolist()},
        "higher_system": {"A": sc.higher_ct.A.tolist(), "B": sc.higher_ct.B.tolist(),
                          "C": sc.higher_ct.C.tolist()},
        "rates": {"T_L": sc.rates.T_L, "T_H": sc.rates.T_H, "T": sc.rates.T},
        "constraints": {
            "Y_pieces": [{"halfspaces": {"F": pc.F.tolist(), "f": pc.f.tolist()}}
                         for pc in sc.safe_region.pieces],
            "U": {"halfspaces": {"F": sc.U.F.tolist(), "f": sc.U.f.tolist()}},
            "Ubar": {"halfspaces": {"F": sc.Ubar.F.tolist(), "f": sc.Ubar.f.tolist()}},
        },
        "synthesis": {
            "method": sc.synthesis.method,
            "beta": sc.synthesis.beta,
            "delta": sc.synthesis.delta,
            "overrides": {
                "lambda": sc.synthesis.lambda_fixed,
                "gain_backoff": sc.synthesis.gain_backoff,
                "ubar_max": sc.synthesis.ubar_max,
                "epsilon": sc.synthesis.epsilon_override,
                "eps_pd": sc.synthesis.eps_pd,
            },
        },
        "planner": {
            "horizon": sc.planner.horizon,
            "state_weight": _weight_list(sc.planner.state_weight),
            "input_weight": _weight_list(sc.planner.input_weight),
            "terminal_weight": _weight_list(sc.planner.terminal_weight),
            "switch_radius": sc.planner.waypoint_switch_radius,
        },
        "mission": {
            "start": sc.start.tolist(),
            "waypoints": [{"point": w.tolist(), "piece": int(i)}
                          for w, i in zip(sc.mission.waypoints, sc.mission.piece_of_waypoint)],
            "goal": {"center": sc.mission.goal_center.tolist(),
                     "radius": sc.mission.goal_radius,
                     "piece": sc.mission.goal_piece},
        },
        "init": {"lifted": sc.lifted_init},
    }
    if sc.Xbar.nrows:
        doc["constraints"]["Xbar"] = {"halfspaces": {"F": sc.Xbar.F.tolist(),
                                                     "f": sc.Xbar.f.tolist()}}
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        yaml.safe_dump(doc, fh, sort_keys=False)
    os.replace(tmp, path)
    return path


def _weight_list(w):
    if w is None:
        return None
    arr = np.asarray(w, dtype=float)
    return arr.tolist()


def bundled_path(name):
    """Resolve a bundled scenario by name ('maze' or 'maze.scenario')."""
    base = os.path.basename(str(name))
    if not base.endswith(".scenario"):
        base += ".scenario"
    root = importlib.resources.files("layercon") / "scenarios" / base
    try:
        if root.is_file():
            return str(root)
    except (OSError, AttributeError):
        return None
    return None

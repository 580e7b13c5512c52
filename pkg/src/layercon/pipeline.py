"""Scenario-level workflows: synthesize, propagate, simulate, sweep.

These glue the synthesis, propagation, planner, and engine modules together
for a parsed scenario; the CLI is a thin shell over this module.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import PropagationInfeasibleError, ScenarioError
from .planner import PlannerConfig
from .polytopes import HPolytope
from .propagation import PlanningSets, build_planning_sets, check_propagation_conditions, \
    tighten_input, tighten_output
from .polytopes import max_norm_over
from .sim import InitPair, run
from .simfunc import SynthOptions, assemble, compute_precision, eval_V
from .systems import discretize_zoh
from .util import default_rng

__all__ = ["SynthBundle", "PropagationBundle", "synthesize", "propagate",
           "simulate", "sweep_frequencies", "lifted_init"]


@dataclass(frozen=True)
class SynthBundle:
    lower_L: object
    higher_L: object
    higher_H: object
    sf: object


@dataclass(frozen=True)
class PropagationBundle:
    planning_sets: list     # one PlanningSets per safe-region piece
    precision: object       # Precision used by the runtime monitors
    reports: list           # one PropagationReport per piece
    forced_epsilon: float   # tightening epsilon actually applied


def synthesize(sc, rates=None):
    """Discretize both layers and assemble the tracking certificate."""
    rates = rates or sc.rates
    lower_L = discretize_zoh(sc.lower_ct, rates.T_L)
    higher_L = discretize_zoh(sc.higher_ct, rates.T_L)
    higher_H = discretize_zoh(sc.higher_ct, rates.T_H)
    st = sc.synthesis
    options = SynthOptions(lambda_fixed=st.lambda_fixed, gain_backoff=st.gain_backoff,
                           eps_pd=st.eps_pd)
    sf = assemble(lower_L, higher_L, method=st.method, beta=st.beta, options=options)
    return SynthBundle(lower_L=lower_L, higher_L=higher_L, higher_H=higher_H, sf=sf)


def _v0_max(sc, sf):
    """Max sqrt(V) over the initial set; exactly zero for lifted init."""
    if sc.lifted_init:
        return 0.0
    init = lifted_init(sc, sf)  # falls back to the declared start pair
    return math.sqrt(max(eval_V(sf, init.xbar0, init.x0), 0.0))


def lifted_init(sc, sf):
    """Initial pair from the mission start: min-norm xbar with that output, x = P xbar."""
    xbar0, _, _, _ = np.linalg.lstsq(sf.higher.C, sc.start, rcond=None)
    return InitPair.lifted(sf, xbar0)


def propagate(sc, bundle):
    """Tightened planning sets for every piece plus soundness reports."""
    sf = bundle.sf
    st = sc.synthesis
    v0 = _v0_max(sc, sf)
    pieces = sc.safe_region.pieces
    sets = []
    reports = []
    if st.epsilon_override is not None:
        eps = float(st.epsilon_override)
        Up = sc.Ubar.intersect(tighten_input(sc.U, sf.R, sf.K, sf.M, eps, st.delta))
        if Up.is_empty():
            raise PropagationInfeasibleError(
                f"input set empty at forced epsilon={eps:g}", piece=None, which="input")
        ub_max = max_norm_over(Up)
        precision = compute_precision(sf, ub_max, v0)
        for i, piece in enumerate(pieces):
            Xp = tighten_output(piece, sf.higher.C, sc.Xbar, eps)
            if Xp.is_empty():
                raise PropagationInfeasibleError(
                    f"state set empty at forced epsilon={eps:g} (piece {i})",
                    piece=i, which="state")
            sets.append(PlanningSets(Xp=Xp, Up=Up, epsilon=eps, delta=st.delta,
                                     u_bar_max=ub_max))
        forced = eps
    else:
        for i, piece in enumerate(pieces):
            ps = build_planning_sets(sf, piece, sc.U, sc.Xbar, sc.Ubar,
                                     delta=st.delta, u_bar_max=st.ubar_max,
                                     v0_max=v0, piece_index=i)
            sets.append(ps)
        precision = compute_precision(sf, sets[0].u_bar_max, v0)
        forced = sets[0].epsilon
    rng = default_rng(0)
    for i, piece in enumerate(pieces):
        reports.append(check_propagation_conditions(sf, sets[i], piece, sc.U,
                                                    n_samples=400, rng=rng))
    return PropagationBundle(planning_sets=sets, precision=precision,
                             reports=reports, forced_epsilon=forced)


def validate_mission(sc, prop):
    """Waypoint handoffs must sit inside both adjacent tightened output sets."""
    sets = prop.planning_sets
    eps = prop.forced_epsilon
    pieces = sc.safe_region.pieces
    seq = list(zip(sc.mission.waypoints, sc.mission.piece_of_waypoint))
    next_pieces = [i for _, i in seq[1:]] + [sc.mission.goal_piece]
    warnings = []
    for k, ((w, pi), nxt) in enumerate(zip(seq, next_pieces)):
        for label, idx in (("own", pi), ("next", nxt)):
            piece = pieces[idx]
            shrink = eps * np.linalg.norm(piece.F, axis=1)
            margin = float(np.min(piece.f - shrink - piece.F @ w))
            if margin < 0:
                raise ScenarioError(
                    f"waypoint {k} lies outside the tightened output set of its "
                    f"{label} piece {idx} (margin {margin:.3g})")
            if margin < sc.planner.waypoint_switch_radius:
                warnings.append(
                    f"waypoint {k}: margin {margin:.3g} inside piece {idx} is below "
                    f"the switch radius {sc.planner.waypoint_switch_radius:g}")
    return warnings


def simulate(sc, bundle=None, prop=None):
    """Full two-rate closed-loop run for a scenario."""
    bundle = bundle or synthesize(sc)
    prop = prop or propagate(sc, bundle)
    validate_mission(sc, prop)
    init = lifted_init(sc, bundle.sf)
    start_piece = (sc.mission.piece_of_waypoint[0] if sc.mission.waypoints
                   else sc.mission.goal_piece)
    init.validate(bundle.lower_L, bundle.higher_L, sc.safe_region,
                  prop.planning_sets[start_piece].Xp, sc.lifted_init, sf=bundle.sf)
    log = run(bundle.lower_L, bundle.higher_L, bundle.higher_H, bundle.sf,
              prop.planning_sets, sc.planner, sc.mission, init, sc.rates,
              sc.safe_region, sc.U, prop.precision)
    return log, bundle, prop


@dataclass(frozen=True)
class SweepRow:
    freq_hz: float
    gamma: float
    epsilon: float
    u_bar_max: float
    feasible: bool
    note: str = ""


def sweep_frequencies(sc, freqs):
    """Re-synthesize and re-propagate per low-layer frequency.

    Each cell is independent; failures are recorded in the feasible column
    and the sweep continues.
    """
    from .systems import RatePair

    rows = []
    for f in freqs:
        if f <= 0:
            rows.append(SweepRow(f, math.nan, math.nan, math.nan, False, "bad frequency"))
            continue
        T_L = 1.0 / float(f)
        try:
            rates = RatePair(T_L=T_L, T_H=sc.rates.T_H, T=sc.rates.T)
        except ValueError as exc:
            rows.append(SweepRow(f, math.nan, math.nan, math.nan, False, str(exc)))
            continue
        try:
            bundle = synthesize(sc, rates=rates)
        except Exception as exc:
            rows.append(SweepRow(f, math.nan, math.nan, math.nan, False,
                                 f"synthesis: {exc}"))
            continue
        try:
            prop = propagate(sc, bundle)
            rows.append(SweepRow(f, bundle.sf.gamma, prop.precision.epsilon,
                                 prop.precision.u_bar_max, True))
        except PropagationInfeasibleError as exc:
            # epsilon is still well defined from the certificate and the
            # scenario's input-norm bound, even when a piece is empty
            st = sc.synthesis
            v0 = _v0_max(sc, bundle.sf)
            if st.ubar_max is not None:
                pr = compute_precision(bundle.sf, st.ubar_max, v0)
                eps, ub = pr.epsilon, pr.u_bar_max
            else:
                eps, ub = math.nan, math.nan
            which = f"piece {exc.piece}" if exc.piece is not None else "input set"
            rows.append(SweepRow(f, bundle.sf.gamma, eps, ub, False,
                                 f"empty {exc.which} set ({which})"))
    return rows

"""Layered multirate control of constrained linear systems.

Synthesis of tracking certificates with provable output precision,
propagation of lower-layer constraints into planner sets, and a two-rate
closed-loop engine with runtime monitors for every guarantee.
"""

from .errors import (
    AssumptionError,
    ConvergenceError,
    DimensionError,
    LayerconError,
    PlannerInfeasibleError,
    PropagationInfeasibleError,
    ScenarioError,
    StabilizabilityError,
    SynthesisInfeasibleError,
    UnboundedSetError,
)
from .linalg import expm, solve_discrete_lyapunov, solve_linear_lstsq, spectral_norm, spectral_radius
from .planner import Mission, MissionState, PlannerConfig, advance_mission, plan_step
from .polytopes import HPolytope, SafeRegion, max_norm_over, membership
from .propagation import (
    PlanningSets,
    build_planning_sets,
    check_propagation_conditions,
    tighten_input,
    tighten_output,
)
from .qp import FeasibilityResult, QpProblem, QpResult, solve_lp_feasibility, solve_qp
from .scenario import Scenario, bundled_path, dump_scenario, load_scenario
from .sdp import sdp_max_min_eig, sdp_min_gain
from .sim import EpsVerdict, InitPair, TraceLog, monitor_eps, run
from .simfunc import (
    LiftPair,
    Precision,
    SimFunction,
    SynthOptions,
    assemble,
    compute_precision,
    eval_controller,
    eval_V,
    optimal_R,
    solve_lift,
    synth_lyapunov,
    synth_sdp,
)
from .systems import CtSystem, DtSystem, RatePair, discretize_zoh
from .pipeline import simulate, sweep_frequencies, synthesize, propagate

__version__ = "0.1.0"

__all__ = [
    "AssumptionError", "ConvergenceError", "DimensionError", "LayerconError",
    "PlannerInfeasibleError", "PropagationInfeasibleError", "ScenarioError",
    "StabilizabilityError", "SynthesisInfeasibleError", "UnboundedSetError",
    "expm", "solve_discrete_lyapunov", "solve_linear_lstsq", "spectral_norm",
    "spectral_radius", "Mission", "MissionState", "PlannerConfig",
    "advance_mission", "plan_step", "HPolytope", "SafeRegion", "max_norm_over",
    "membership", "PlanningSets", "build_planning_sets",
    "check_propagation_conditions", "tighten_input", "tighten_output",
    "FeasibilityResult", "QpProblem", "QpResult", "solve_lp_feasibility",
    "solve_qp", "Scenario", "bundled_path", "dump_scenario", "load_scenario",
    "sdp_max_min_eig", "sdp_min_gain", "EpsVerdict", "InitPair", "TraceLog",
    "monitor_eps", "run", "LiftPair", "Precision", "SimFunction", "SynthOptions",
    "assemble", "compute_precision", "eval_controller", "eval_V", "optimal_R",
    "solve_lift", "synth_lyapunov", "synth_sdp", "CtSystem", "DtSystem",
    "RatePair", "discretize_zoh", "simulate", "sweep_frequencies", "synthesize",
    "propagate",
]

"""Exception hierarchy shared across the package.

Each error class maps to a stable CLI exit code (see cli.EXIT_CODES); library
users catch the classes directly.
"""


class LayerconError(Exception):
    """Base class for all package-specific errors."""


class DimensionError(LayerconError):
    """Matrix/vector dimensions are inconsistent with the declared shapes."""


class ConvergenceError(LayerconError):
    """An iterative numerical method failed to converge within its budget."""


class AssumptionError(LayerconError):
    """No lifting pair (P, Q) matches the two systems within tolerance."""


class StabilizabilityError(LayerconError):
    """The lower-layer system admits no stabilizing state feedback."""


class SynthesisInfeasibleError(LayerconError):
    """Controller synthesis found no feasible certificate for any contraction rate."""


class PropagationInfeasibleError(LayerconError):
    """A tightened planning set came out empty.

    Attributes
    ----------
    piece : int or None
        Index of the safe-region piece whose set is empty.
    which : str
        "state" or "input", naming the empty set.
    """

    def __init__(self, message, piece=None, which="state"):
        super().__init__(message)
        self.piece = piece
        self.which = which


class PlannerInfeasibleError(LayerconError):
    """The planner QP is infeasible or its initial state is out of bounds."""


class UnboundedSetError(LayerconError):
    """A polytope expected to be bounded has a recession direction."""


class ScenarioError(LayerconError):
    """Scenario file failed to parse or validate; message names the field."""

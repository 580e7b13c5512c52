"""Continuous- and discrete-time LTI system containers and exact ZOH discretization."""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError
from .linalg import as_matrix, expm

__all__ = ["CtSystem", "DtSystem", "RatePair", "discretize_zoh"]


@dataclass(frozen=True)
class CtSystem:
    """Continuous-time system  xdot = A x + B u,  y = C x."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray

    def __post_init__(self):
        A = as_matrix(self.A, "A", square=True)
        B = as_matrix(self.B, "B")
        C = as_matrix(self.C, "C")
        n = A.shape[0]
        if B.shape[0] != n:
            raise DimensionError(f"B has {B.shape[0]} rows, expected {n}")
        if C.shape[1] != n:
            raise DimensionError(f"C has {C.shape[1]} cols, expected {n}")
        if C.shape[0] > n:
            raise DimensionError(f"output dim {C.shape[0]} exceeds state dim {n}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "C", C)

    @property
    def nstate(self):
        return self.A.shape[0]

    @property
    def ninput(self):
        return self.B.shape[1]

    @property
    def noutput(self):
        return self.C.shape[0]


@dataclass(frozen=True)
class DtSystem:
    """Discrete-time system  x+ = Ad x + Bd u,  y = C x, at a fixed period."""

    Ad: np.ndarray
    Bd: np.ndarray
    C: np.ndarray
    period: float

    def __post_init__(self):
        Ad = as_matrix(self.Ad, "Ad", square=True)
        Bd = as_matrix(self.Bd, "Bd")
        C = as_matrix(self.C, "C")
        n = Ad.shape[0]
        if Bd.shape[0] != n or C.shape[1] != n:
            raise DimensionError("Ad/Bd/C dimensions inconsistent")
        if self.period <= 0:
            raise ValueError(f"period must be positive, got {self.period}")
        object.__setattr__(self, "Ad", Ad)
        object.__setattr__(self, "Bd", Bd)
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "period", float(self.period))

    @property
    def nstate(self):
        return self.Ad.shape[0]

    @property
    def ninput(self):
        return self.Bd.shape[1]

    @property
    def noutput(self):
        return self.C.shape[0]

    def step(self, x, u):
        """One-step update Ad x + Bd u."""
        x = np.asarray(x, dtype=float).ravel()
        u = np.asarray(u, dtype=float).ravel()
        if x.size != self.nstate or u.size != self.ninput:
            raise DimensionError(
                f"step expects state {self.nstate} / input {self.ninput}, "
                f"got {x.size} / {u.size}"
            )
        return self.Ad @ x + self.Bd @ u

    def output(self, x):
        x = np.asarray(x, dtype=float).ravel()
        if x.size != self.nstate:
            raise DimensionError(f"output expects state {self.nstate}, got {x.size}")
        return self.C @ x


def _is_integer_ratio(num, den, tol=1e-9):
    ratio = num / den
    return abs(ratio - round(ratio)) <= tol * max(1.0, abs(ratio)) and round(ratio) >= 1


@dataclass(frozen=True)
class RatePair:
    """Sampling periods of the two layers and the mission length.

    T_H/T_L and T/T_H must be positive integers (a 1e-9 relative tolerance
    absorbs floating-point periods).
    """

    T_L: float
    T_H: float
    T: float

    def __post_init__(self):
        if self.T_L <= 0 or self.T_H <= 0 or self.T <= 0:
            raise ValueError("all periods must be positive")
        if not _is_integer_ratio(self.T_H, self.T_L):
            raise ValueError(f"T_H/T_L = {self.T_H / self.T_L} is not a positive integer")
        if not _is_integer_ratio(self.T, self.T_H):
            raise ValueError(f"T/T_H = {self.T / self.T_H} is not a positive integer")

    @property
    def inner_steps(self):
        return round(self.T_H / self.T_L)

    @property
    def outer_steps(self):
        return round(self.T / self.T_H)

    @property
    def total_steps(self):
        return self.inner_steps * self.outer_steps


def discretize_zoh(sys, period):
    """Exact zero-order-hold discretization via the augmented exponential.

    exp([[A, B],[0, 0]] * period) carries (Ad, Bd) in its top blocks; this is
    exact even for singular A.
    """
    if period <= 0:
        raise ValueError(f"period must be positive, got {period}")
    n, m = sys.nstate, sys.ninput
    aug = np.zeros((n + m, n + m))
    aug[:n, :n] = sys.A
    aug[:n, n:] = sys.B
    E = expm(aug * period)
    return DtSystem(Ad=E[:n, :n], Bd=E[:n, n:], C=sys.C, period=float(period))

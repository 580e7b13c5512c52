"""Tracking-certificate synthesis for one system pair.

Produces the quadratic certificate V(xbar, x) = (x - P xbar)' M (x - P xbar)
together with the tracking controller u = R ubar + Q xbar + K (x - P xbar),
its contraction rate lam, and the input-to-error gain gamma.  Two synthesis
paths exist: a closed-form Lyapunov construction from an LQR gain, and a
two-stage semidefinite program.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    AssumptionError,
    DimensionError,
    StabilizabilityError,
    SynthesisInfeasibleError,
)
from .linalg import as_matrix, spectral_norm, spectral_radius, solve_discrete_lyapunov
from .sdp import sdp_max_min_eig, sdp_min_gain
from .systems import DtSystem

__all__ = [
    "LiftPair",
    "SimFunction",
    "Precision",
    "SynthOptions",
    "solve_lift",
    "synth_lyapunov",
    "synth_sdp",
    "optimal_R",
    "assemble",
    "eval_V",
    "eval_controller",
    "compute_precision",
]

_LIFT_TOL = 1e-6


@dataclass(frozen=True)
class LiftPair:
    """Matrices P, Q mapping higher-layer states into the lower layer.

    P matches outputs (C P = Cbar) and commutes with the dynamics up to the
    feedforward term B Q; the construction residuals are carried along.
    """

    P: np.ndarray
    Q: np.ndarray
    residual_cp: float
    residual_sylv: float

    def __post_init__(self):
        object.__setattr__(self, "P", as_matrix(self.P, "P"))
        object.__setattr__(self, "Q", as_matrix(self.Q, "Q"))
        if max(self.residual_cp, self.residual_sylv) > _LIFT_TOL:
            raise AssumptionError(
                f"lift residuals ({self.residual_cp:.2e}, {self.residual_sylv:.2e}) "
                f"exceed {_LIFT_TOL:g}"
            )


@dataclass(frozen=True)
class SimFunction:
    """Certificate bundle (P, Q, M, K, R, lam, gamma) for one system pair."""

    lift: LiftPair
    M: np.ndarray
    K: np.ndarray
    lam: float
    R: np.ndarray
    gamma: float
    lower: DtSystem
    higher: DtSystem
    method: str = "lyapunov"
    r_used_pinv: bool = False

    def __post_init__(self):
        object.__setattr__(self, "M", as_matrix(self.M, "M", square=True))
        object.__setattr__(self, "K", as_matrix(self.K, "K"))
        object.__setattr__(self, "R", as_matrix(self.R, "R"))
        if not (0.0 < self.lam < 0.5):
            raise ValueError(f"lambda must be in (0, 1/2), got {self.lam}")

    def m_sqrt(self):
        w, V = np.linalg.eigh(self.M)
        w = np.clip(w, 0.0, None)
        return (V * np.sqrt(w)) @ V.T

    def m_inv_sqrt(self, floor=1e-12):
        w, V = np.linalg.eigh(self.M)
        if w.min() < floor:
            raise ValueError(f"M eigenvalue {w.min():.3e} below floor {floor:g}")
        return (V / np.sqrt(w)) @ V.T

    def lmi_slacks(self):
        """(e7, e8): min eig of M - C'C and max eig of Acl'M Acl - M + 2 lam M."""
        C = self.lower.C
        e7 = float(np.linalg.eigvalsh(self.M - C.T @ C).min())
        Acl = self.lower.Ad + self.lower.Bd @ self.K
        G = Acl.T @ self.M @ Acl - self.M + 2.0 * self.lam * self.M
        e8 = float(np.linalg.eigvalsh(0.5 * (G + G.T)).max())
        return e7, e8

    def gamma_residual(self):
        """Mismatch between stored gamma and its defining formula."""
        D = self.lower.Bd @ self.R - self.lift.P @ self.higher.Bd
        g = math.sqrt(1.0 - self.lam) * spectral_norm(self.m_sqrt() @ D) / self.lam
        return abs(g - self.gamma)

    def validate(self, slack_tol=1e-8):
        e7, e8 = self.lmi_slacks()
        if e7 < -slack_tol:
            raise SynthesisInfeasibleError(f"output-bound LMI violated: slack {e7:.3e}")
        if e8 > slack_tol:
            raise SynthesisInfeasibleError(f"contraction LMI violated: slack {e8:.3e}")
        if self.gamma_residual() > 1e-9 * max(1.0, self.gamma):
            raise SynthesisInfeasibleError("gamma does not match its formula")
        return self


@dataclass(frozen=True)
class Precision:
    """Uniform tracking bound: epsilon = max(v0_max, gamma * u_bar_max)."""

    epsilon: float
    u_bar_max: float
    v0_max: float


@dataclass(frozen=True)
class SynthOptions:
    """Knobs for the SDP synthesis path.

    lambda_fixed pins the contraction rate; otherwise a golden-section search
    over the feasible range minimizes gamma.  gain_backoff in (0, 1] floors
    the second-stage least eigenvalue at that fraction of the stage-1
    optimum; backing off buys feedback-gain headroom, which loosens the
    input tightening downstream.
    """

    lambda_fixed: float = None
    gain_backoff: float = 0.999
    eps_pd: float = 1e-6
    lambda_bounds: tuple = (0.02, 0.48)
    grid_points: int = 12
    golden_tol: float = 2e-3


def solve_lift(lower, higher):
    """Solve C P = Cbar and P Abar = A P + B Q for the minimum-norm (P, Q).

    Raises AssumptionError when no solution exists within tolerance.
    """
    if lower.noutput != higher.noutput:
        raise DimensionError("systems must share the output dimension")
    if abs(lower.period - higher.period) > 1e-12 * max(lower.period, higher.period):
        raise ValueError("systems must share the sampling period")
    n, m = lower.nstate, lower.ninput
    nb = higher.nstate
    C, Cb = lower.C, higher.C
    A, B = lower.Ad, lower.Bd
    Ab = higher.Ad
    nP = n * nb
    # row-major vec:  vec(C P)   = (C  kron I) vec(P)
    #                 vec(P Ab)  = (I kron Ab') vec(P)
    top = np.hstack([np.kron(C, np.eye(nb)), np.zeros((Cb.size, m * nb))])
    bottom = np.hstack(
        [np.kron(np.eye(n), Ab.T) - np.kron(A, np.eye(nb)), -np.kron(B, np.eye(nb))]
    )
    lhs = np.vstack([top, bottom])
    rhs = np.concatenate([Cb.reshape(-1), np.zeros(n * nb)])
    sol, _, _, _ = np.linalg.lstsq(lhs, rhs, rcond=None)
    P = sol[:nP].reshape(n, nb)
    Q = sol[nP:].reshape(m, nb)
    res_cp = float(np.linalg.norm(C @ P - Cb))
    res_sylv = float(np.linalg.norm(P @ Ab - A @ P - B @ Q))
    if res_cp + res_sylv > _LIFT_TOL:
        raise AssumptionError(
            f"no lifting pair matches the systems: residuals "
            f"CP-Cbar={res_cp:.2e}, commutation={res_sylv:.2e}"
        )
    return LiftPair(P=P, Q=Q, residual_cp=res_cp, residual_sylv=res_sylv)


def _lqr_gain(A, B, max_iter=20000, tol=1e-13):
    """Unit-weight discrete LQR via Riccati fixed-point iteration."""
    n, m = A.shape[0], B.shape[1]
    P = np.eye(n)
    for _ in range(max_iter):
        BtP = B.T @ P
        gain = np.linalg.solve(np.eye(m) + BtP @ B, BtP @ A)
        Pn = np.eye(n) + A.T @ P @ (A - B @ gain)
        Pn = 0.5 * (Pn + Pn.T)
        if np.linalg.norm(Pn) > 1e12:
            raise StabilizabilityError("Riccati iteration diverged; system not stabilizable")
        if np.linalg.norm(Pn - P) <= tol * max(1.0, np.linalg.norm(P)):
            P = Pn
            break
        P = Pn
    else:
        raise StabilizabilityError("Riccati iteration did not converge")
    BtP = B.T @ P
    K = -np.linalg.solve(np.eye(m) + BtP @ B, BtP @ A)
    return K


def synth_lyapunov(lower, beta=0.9):
    """Closed-form certificate: LQR gain, then a discrete Lyapunov solve.

    lam = beta * (1 - rho(Acl)^2) / 2 is the near-maximal admissible rate;
    M = N + C'C where N solves the Lyapunov equation for the lam-scaled
    closed loop against A' C'C A + 1e-8 I, which dominates the required
    right-hand side because C'C >= 0.
    """
    if not (0.0 < beta < 1.0):
        raise ValueError(f"beta must be in (0, 1), got {beta}")
    A, B, C = lower.Ad, lower.Bd, lower.C
    K = _lqr_gain(A, B)
    Acl = A + B @ K
    rho = spectral_radius(Acl)
    if rho >= 1.0:
        raise StabilizabilityError(f"closed loop is not contractive (rho = {rho:.6g})")
    lam = beta * (1.0 - rho * rho) / 2.0
    Acl_lam = Acl / math.sqrt(1.0 - 2.0 * lam)
    Qlyap = Acl_lam.T @ C.T @ C @ Acl_lam + 1e-8 * np.eye(A.shape[0])
    N = solve_discrete_lyapunov(Acl_lam, Qlyap)
    M = N + C.T @ C
    return 0.5 * (M + M.T), K, lam


def optimal_R(lower, higher, lift, M):
    """Feedforward matrix minimizing the input-to-error gain.

    R = (B'MB)^{-1} B'M P Bbar; a rank-deficient B triggers a pseudo-inverse
    fallback, flagged in the second return value.
    """
    B = lower.Bd
    target = B.T @ M @ lift.P @ higher.Bd
    BtMB = B.T @ M @ B
    cond_ok = np.linalg.matrix_rank(BtMB, tol=1e-12 * max(1.0, np.linalg.norm(BtMB))) == BtMB.shape[0]
    if cond_ok:
        return np.linalg.solve(BtMB, target), False
    return np.linalg.pinv(BtMB) @ target, True


def _gamma(lower, higher, lift, M, R, lam):
    D = lower.Bd @ R - lift.P @ higher.Bd
    w, V = np.linalg.eigh(M)
    Msq = (V * np.sqrt(np.clip(w, 0.0, None))) @ V.T
    return math.sqrt(1.0 - lam) * spectral_norm(Msq @ D) / lam


def _sdp_certificate(lower, lam, options):
    """Two-stage solve at a fixed lam: max least-eig, then min gain at a floor."""
    A, B, C = lower.Ad, lower.Bd, lower.C
    stage1 = sdp_max_min_eig(C, A, B, lam, eps_pd=options.eps_pd)
    if stage1 is None:
        return None
    _, _, s_star = stage1
    floor = min(options.gain_backoff, 0.999) * s_star
    stage2 = sdp_min_gain(C, A, B, lam, max(floor, options.eps_pd),
                          eps_pd=options.eps_pd)
    if stage2 is None:
        return None
    Mt, Kt, _ = stage2
    M = np.linalg.inv(Mt)
    M = 0.5 * (M + M.T)
    K = Kt @ M
    return M, K


def synth_sdp(lower, higher=None, lift=None, options=None):
    """SDP synthesis of (M, K, lam).

    With options.lambda_fixed the rate is pinned; otherwise feasible rates
    are bracketed on a grid (feasibility is monotone-decreasing in lam) and
    a golden-section search minimizes gamma, which requires the higher
    system and the lifting pair.
    """
    options = options or SynthOptions()
    if options.lambda_fixed is not None:
        lam = float(options.lambda_fixed)
        cert = _sdp_certificate(lower, lam, options)
        if cert is None:
            raise SynthesisInfeasibleError(f"SDP infeasible at pinned lambda {lam}")
        M, K = cert
        return M, K, lam

    if higher is None or lift is None:
        raise ValueError("gamma-minimizing search needs the higher system and lift")

    def gamma_at(lam):
        cert = _sdp_certificate(lower, lam, options)
        if cert is None:
            return None, None
        M, K = cert
        R, _ = optimal_R(lower, higher, lift, M)
        return _gamma(lower, higher, lift, M, R, lam), (M, K)

    lo, hi = options.lambda_bounds
    grid = np.linspace(lo, hi, options.grid_points)
    evals = {}
    feasible = []
    for lam in grid:
        g, cert = gamma_at(float(lam))
        if g is not None:
            feasible.append(float(lam))
            evals[float(lam)] = (g, cert)
    if not feasible:
        raise SynthesisInfeasibleError("SDP synthesis infeasible for every lambda probed")
    best = min(feasible, key=lambda l: evals[l][0])
    i = feasible.index(best)
    a = feasible[max(0, i - 1)]
    b = feasible[min(len(feasible) - 1, i + 1)]
    phi = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = b - phi * (b - a)
    x2 = a + phi * (b - a)
    while b - a > options.golden_tol:
        for x in (x1, x2):
            if x not in evals:
                g, cert = gamma_at(x)
                evals[x] = (g if g is not None else np.inf, cert)
        if evals[x1][0] <= evals[x2][0]:
            b, x2 = x2, x1
            x1 = b - phi * (b - a)
        else:
            a, x1 = x1, x2
            x2 = a + phi * (b - a)
    lam = min((l for l in evals if evals[l][1] is not None), key=lambda l: evals[l][0])
    M, K = evals[lam][1]
    return M, K, lam


def assemble(lower, higher, method="lyapunov", beta=0.9, options=None):
    """Compose lift, gain synthesis, optimal feedforward, and gamma."""
    lift = solve_lift(lower, higher)
    if method == "lyapunov":
        M, K, lam = synth_lyapunov(lower, beta=beta)
    elif method == "sdp":
        M, K, lam = synth_sdp(lower, higher, lift, options)
    else:
        raise ValueError(f"unknown synthesis method {method!r}")
    R, used_pinv = optimal_R(lower, higher, lift, M)
    gamma = _gamma(lower, higher, lift, M, R, lam)
    sf = SimFunction(
        lift=lift, M=M, K=K, lam=lam, R=R, gamma=gamma,
        lower=lower, higher=higher, method=method, r_used_pinv=used_pinv,
    )
    return sf.validate()


def eval_V(sf, xbar, x):
    """Certificate value (x - P xbar)' M (x - P xbar)."""
    xbar = np.asarray(xbar, dtype=float).ravel()
    x = np.asarray(x, dtype=float).ravel()
    d = x - sf.lift.P @ xbar
    return float(d @ sf.M @ d)


def eval_controller(sf, ubar, xbar, x):
    """Tracking input R ubar + Q xbar + K (x - P xbar)."""
    ubar = np.asarray(ubar, dtype=float).ravel()
    xbar = np.asarray(xbar, dtype=float).ravel()
    x = np.asarray(x, dtype=float).ravel()
    return sf.R @ ubar + sf.lift.Q @ xbar + sf.K @ (x - sf.lift.P @ xbar)


def compute_precision(sf, u_bar_max, init_set_v0_max=0.0):
    """epsilon = max(v0_max, gamma * u_bar_max); v0_max is max sqrt(V) over I."""
    if u_bar_max <= 0:
        raise ValueError("u_bar_max must be positive")
    if init_set_v0_max < 0:
        raise ValueError("v0_max must be nonnegative")
    eps = max(init_set_v0_max, sf.gamma * u_bar_max)
    return Precision(epsilon=float(eps), u_bar_max=float(u_bar_max), v0_max=float(init_set_v0_max))

"""Dense convex quadratic programming and LP feasibility.

Both solvers are feasible-start log-barrier methods sized for the small
problems this package produces (tens of variables, low hundreds of rows).
The contract is the KKT residual, not the algorithm.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError
from .linalg import as_matrix

__all__ = ["QpProblem", "QpResult", "FeasibilityResult", "solve_qp", "solve_lp_feasibility"]

_R_CAP = 1.0e3      # cap on the Chebyshev radius (witness quality is irrelevant)
_X_BOX = 1.0e6      # stabilizing box on phase-1 iterates


@dataclass(frozen=True)
class QpProblem:
    """min 1/2 x'Hx + g'x  s.t.  Fineq x <= hineq,  Feq x = heq."""

    H: np.ndarray
    g: np.ndarray
    Fineq: np.ndarray
    hineq: np.ndarray
    Feq: np.ndarray = field(default=None)
    heq: np.ndarray = field(default=None)

    def __post_init__(self):
        H = as_matrix(self.H, "H", square=True)
        n = H.shape[0]
        sym_err = np.linalg.norm(H - H.T)
        if sym_err > 1e-10 * max(1.0, np.linalg.norm(H)):
            raise ValueError(f"H is not symmetric (error {sym_err:.2e})")
        g = np.asarray(self.g, dtype=float).ravel()
        if g.size != n:
            raise DimensionError(f"g has size {g.size}, expected {n}")
        F = as_matrix(self.Fineq, "Fineq") if np.size(self.Fineq) else np.zeros((0, n))
        h = np.asarray(self.hineq, dtype=float).ravel()
        if F.shape[1] != n or F.shape[0] != h.size:
            raise DimensionError("inequality dimensions inconsistent")
        object.__setattr__(self, "H", 0.5 * (H + H.T))
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "Fineq", F)
        object.__setattr__(self, "hineq", h)
        if self.Feq is not None and np.size(self.Feq):
            Fe = as_matrix(self.Feq, "Feq")
            he = np.asarray(self.heq, dtype=float).ravel()
            if Fe.shape[1] != n or Fe.shape[0] != he.size:
                raise DimensionError("equality dimensions inconsistent")
            object.__setattr__(self, "Feq", Fe)
            object.__setattr__(self, "heq", he)
        else:
            object.__setattr__(self, "Feq", None)
            object.__setattr__(self, "heq", None)

    @property
    def nvar(self):
        return self.H.shape[0]

    def objective(self, x):
        return float(0.5 * x @ self.H @ x + self.g @ x)


@dataclass(frozen=True)
class QpResult:
    x: np.ndarray
    status: str                  # optimal | infeasible | max_iter
    kkt_residual: float
    objective: float
    z_ineq: np.ndarray = None    # multipliers for Fineq x <= hineq


@dataclass(frozen=True)
class FeasibilityResult:
    feasible: bool
    witness: np.ndarray = None
    radius: float = float("-inf")


def _chebyshev(F, h):
    """Maximize r s.t. F x + ||F_j|| r <= h (rows with zero norm kept as-is).

    Returns (x, r).  r > 0 means x is strictly interior.  The radius is
    capped, and iterates are boxed, so the barrier subproblem is bounded.
    """
    n = F.shape[1]
    norms = np.linalg.norm(F, axis=1)
    # zero-norm rows are constant constraints: h_j >= 0 required, then vacuous
    zero_rows = norms <= 1e-13
    if np.any(zero_rows) and np.any(h[zero_rows] < 0):
        return np.zeros(n), -np.inf
    F, h, norms = F[~zero_rows], h[~zero_rows], norms[~zero_rows]
    # rows: [F | norms] (x, r) <= h ; r <= cap ; |x_i| <= box
    A = np.vstack(
        [
            np.hstack([F, norms[:, None]]),
            np.hstack([np.zeros((1, n)), np.ones((1, 1))]),
            np.hstack([np.eye(n), np.zeros((n, 1))]),
            np.hstack([-np.eye(n), np.zeros((n, 1))]),
        ]
    )
    b = np.concatenate([h, [_R_CAP], np.full(n, _X_BOX), np.full(n, _X_BOX)])
    x0 = np.zeros(n + 1)
    r0 = np.min(h / norms) if norms.size else _R_CAP
    r0 = min(r0, _R_CAP) - 1.0
    x0[n] = r0
    c = np.zeros(n + 1)
    c[n] = -1.0  # minimize -r
    x = _lp_barrier(A, b, c, x0)
    return x[:n], float(x[n])


def _lp_barrier(A, b, c, x0, gap_tol=1e-11):
    """Minimize c'x s.t. Ax <= b from strictly feasible x0 (log barrier)."""
    m = A.shape[0]
    x = x0.copy()
    s = b - A @ x
    if np.any(s <= 0):
        raise ValueError("phase-1 start not strictly feasible")
    tau = 1.0
    while m / tau > gap_tol:
        x = _barrier_newton(lambda v: tau * (c @ v), lambda v: tau * c,
                            lambda v: np.zeros((len(c), len(c))), A, b, x)
        tau *= 20.0
    return x


def _barrier_newton(f, grad_f, hess_f, A, b, x, max_iter=80, tol=1e-12):
    """Damped Newton on f(x) - sum log(b - Ax)."""
    for _ in range(max_iter):
        s = b - A @ x
        inv_s = 1.0 / s
        g = grad_f(x) + A.T @ inv_s
        H = hess_f(x) + A.T @ (inv_s[:, None] ** 2 * A)
        try:
            dx = np.linalg.solve(H + 1e-14 * np.eye(len(x)), -g)
        except np.linalg.LinAlgError:
            dx = np.linalg.lstsq(H + 1e-10 * np.eye(len(x)), -g, rcond=None)[0]
        dec = float(-g @ dx)
        if dec <= 0:
            dx = -g
            dec = float(g @ g)
        # step to stay strictly feasible
        Adx = A @ dx
        pos = Adx > 0
        t_max = 1.0 if not np.any(pos) else min(1.0, 0.99 * np.min(s[pos] / Adx[pos]))
        val0 = f(x) - np.sum(np.log(s))
        t = t_max
        for _ in range(60):
            xn = x + t * dx
            sn = b - A @ xn
            if np.all(sn > 0):
                valn = f(xn) - np.sum(np.log(sn))
                if valn <= val0 - 0.25 * t * dec:
                    break
            t *= 0.5
        else:
            return x
        x = xn
        if t * dec < tol:
            return x
    return x


def solve_lp_feasibility(Fineq, hineq):
    """Phase-1 LP: strictly interior witness via the Chebyshev-center LP.

    A polytope with nonempty interior yields a witness; sets that are empty
    (or thinner than ~1e-9 in every direction) report infeasible.
    """
    F = as_matrix(Fineq, "Fineq")
    h = np.asarray(hineq, dtype=float).ravel()
    if F.shape[0] != h.size:
        raise DimensionError("Fineq/hineq row mismatch")
    if F.shape[0] == 0:
        return FeasibilityResult(True, np.zeros(F.shape[1]), float(_R_CAP))
    x, r = _chebyshev(F, h)
    if r > 1e-9:
        return FeasibilityResult(True, x, r)
    return FeasibilityResult(False, None, r)


def _reduce_equalities(p):
    """Eliminate Feq x = heq by x = x_p + Z w.  Returns None if inconsistent."""
    n = p.nvar
    if p.Feq is None:
        return np.zeros(n), np.eye(n)
    xp, _, _, _ = np.linalg.lstsq(p.Feq, p.heq, rcond=None)
    scale = max(1.0, np.linalg.norm(p.heq))
    if np.linalg.norm(p.Feq @ xp - p.heq) > 1e-9 * scale:
        return None
    _, sv, Vt = np.linalg.svd(p.Feq)
    rank = int(np.sum(sv > 1e-12 * max(sv[0], 1.0))) if sv.size else 0
    Z = Vt[rank:].T  # orthonormal nullspace basis
    return xp, Z


def solve_qp(p, tol=1e-7, max_iter=200):
    """Solve a convex QP to the given KKT residual.

    Feasible-start interior point: a Chebyshev phase 1 finds a strictly
    interior point, then a log-barrier Newton path follows to the optimum.
    Deterministic given identical inputs.
    """
    xp, Z = _reduce_equalities(p) or (None, None)
    if xp is None:
        return QpResult(np.zeros(p.nvar), "infeasible", np.inf, np.nan)
    Hw = Z.T @ p.H @ Z
    gw = Z.T @ (p.g + p.H @ xp)
    Fw = p.Fineq @ Z
    hw = p.hineq - p.Fineq @ xp
    nw = Z.shape[1]

    if nw == 0:
        x = xp
        viol = float(np.max(p.Fineq @ x - p.hineq, initial=0.0))
        if viol > tol:
            return QpResult(x, "infeasible", np.inf, p.objective(x))
        return QpResult(x, "optimal", viol, p.objective(x), np.zeros(p.hineq.size))

    if Fw.shape[0] == 0:
        w, _, _, _ = np.linalg.lstsq(Hw, -gw, rcond=None)
        x = xp + Z @ w
        res = float(np.linalg.norm(Hw @ w + gw, np.inf))
        return QpResult(x, "optimal", res, p.objective(x), np.zeros(0))

    # drop numerically-zero rows (can arise from equality elimination)
    wnorms = np.linalg.norm(Fw, axis=1)
    drop = wnorms <= 1e-13
    if np.any(drop):
        if np.any(hw[drop] < -1e-9):
            return QpResult(xp, "infeasible", np.inf, np.nan)
        keep = ~drop
        Fw_act, hw_act = Fw[keep], hw[keep]
    else:
        keep = np.ones(Fw.shape[0], dtype=bool)
        Fw_act, hw_act = Fw, hw

    if Fw_act.shape[0] == 0:
        w, _, _, _ = np.linalg.lstsq(Hw, -gw, rcond=None)
        x = xp + Z @ w
        res = float(np.linalg.norm(Hw @ w + gw, np.inf))
        return QpResult(x, "optimal", res, p.objective(x), np.zeros(p.hineq.size))

    w0, r = _chebyshev(Fw_act, hw_act)
    if r <= 1e-11:
        return QpResult(xp + Z @ w0, "infeasible", np.inf, np.nan)

    m = Fw_act.shape[0]
    w = w0
    tau = 1.0
    tau_used = tau
    iters = 0
    status = "optimal"
    while m / tau > 0.1 * tol:
        w = _barrier_newton(
            lambda v, t=tau: t * (0.5 * v @ Hw @ v + gw @ v),
            lambda v, t=tau: t * (Hw @ v + gw),
            lambda v, t=tau: t * Hw,
            Fw_act, hw_act, w,
        )
        tau_used = tau
        tau *= 20.0
        iters += 1
        if iters > max_iter:
            status = "max_iter"
            break

    s = hw_act - Fw_act @ w
    z_act = 1.0 / (tau_used * s)
    z = np.zeros(p.hineq.size)
    z[keep] = z_act
    Fw, hw = Fw_act, hw_act
    x = xp + Z @ w
    stat = float(np.linalg.norm(Hw @ w + gw + Fw.T @ z_act, np.inf))
    viol = float(np.max(p.Fineq @ x - p.hineq, initial=0.0))
    comp = float(np.max(np.abs(z_act * s), initial=0.0))
    kkt = max(stat, viol, comp)
    if status == "optimal" and kkt > tol:
        status = "max_iter"
    return QpResult(x, status, kkt, p.objective(x), z)

"""Generic LMI solver and the controller-synthesis semidefinite programs.

The solver maximizes a linear objective over an intersection of LMI blocks
    F0_b + sum_i y_i F_{b,i}  >=  0
by log-det barrier path following with a shifted phase 1.  All iterates are
strictly feasible, so returned certificates satisfy their LMIs by
construction; callers still re-verify eigenvalue slacks.

Dimensions here are desk scale (blocks <= ~16, <= ~40 variables); dense
Cholesky factorizations per Newton step are the right tool.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

__all__ = ["LmiBlock", "solve_lmi", "sdp_max_min_eig", "sdp_min_gain"]

_Y_BOX = 1.0e7  # bounds iterates; solutions that hit it are rejected by callers


class LmiBlock:
    """One PSD constraint F0 + sum_i y_i * coeff[i] >= 0."""

    def __init__(self, F0, coeffs):
        self.F0 = np.asarray(F0, dtype=float)
        self.k = self.F0.shape[0]
        self.idx = np.array(sorted(coeffs), dtype=int)
        self.stack = np.stack([np.asarray(coeffs[i], dtype=float) for i in self.idx]) \
            if len(coeffs) else np.zeros((0, self.k, self.k))

    def eval(self, y):
        if self.idx.size == 0:
            return self.F0.copy()
        return self.F0 + np.tensordot(y[self.idx], self.stack, axes=1)

    def scaled(self, alpha):
        """Variable substitution y_i -> y'_i / alpha_i."""
        if self.idx.size == 0:
            return self
        out = LmiBlock.__new__(LmiBlock)
        out.F0 = self.F0
        out.k = self.k
        out.idx = self.idx
        out.stack = self.stack / alpha[self.idx][:, None, None]
        return out


def _chol(F):
    try:
        L = np.linalg.cholesky(F)
    except np.linalg.LinAlgError:
        return None
    if not np.all(np.isfinite(L)):
        return None
    return L


class _Work:
    """Problem split into matrix blocks (k >= 2) and batched 1x1 rows.

    Scalar LMI rows F0 + sum y_i F_i >= 0 become linear rows A y <= b with
    A = -[F_i], b = F0; one matmul then covers all of them per evaluation.
    """

    def __init__(self, blocks, nv):
        self.mats = [b for b in blocks if b.k >= 2]
        rows_A = []
        rows_b = []
        for b in blocks:
            if b.k >= 2:
                continue
            a = np.zeros(nv)
            a[b.idx] = -b.stack[:, 0, 0] if b.idx.size else 0.0
            rows_A.append(a)
            rows_b.append(float(b.F0[0, 0]))
        self.A = np.array(rows_A) if rows_A else np.zeros((0, nv))
        self.b = np.array(rows_b)
        self.m_total = sum(b.k for b in self.mats) + self.A.shape[0]

    def barrier_value(self, c, tau, y):
        v = -tau * float(c @ y)
        if self.A.shape[0]:
            s = self.b - self.A @ y
            if np.any(s <= 0):
                return None
            v -= float(np.sum(np.log(s)))
        for b in self.mats:
            L = _chol(b.eval(y))
            if L is None:
                return None
            v -= 2.0 * float(np.sum(np.log(np.diag(L))))
        return v


def _newton(work, c, tau, y, max_iter=60, tol=1e-9):
    """Minimize -tau*c'y - barrier(y) from strictly feasible y."""
    nv = len(c)
    for _ in range(max_iter):
        grad = -tau * np.asarray(c, dtype=float)
        H = np.zeros((nv, nv))
        if work.A.shape[0]:
            s = work.b - work.A @ y
            inv_s = 1.0 / s
            grad += work.A.T @ inv_s
            H += work.A.T @ (inv_s[:, None] ** 2 * work.A)
        for b in work.mats:
            if b.idx.size == 0:
                continue
            F = b.eval(y)
            L = _chol(F)
            if L is None:
                return y, False
            Li = solve_triangular(L, np.eye(b.k), lower=True)
            S = Li.T @ Li
            G = S @ b.stack  # (nloc, k, k)
            grad[b.idx] -= np.trace(G, axis1=1, axis2=2)
            Hloc = np.einsum("aij,bji->ab", G, G, optimize=True)
            H[np.ix_(b.idx, b.idx)] += Hloc
        try:
            dy = np.linalg.solve(H + 1e-13 * np.eye(nv), -grad)
        except np.linalg.LinAlgError:
            dy = np.linalg.lstsq(H + 1e-9 * np.eye(nv), -grad, rcond=None)[0]
        dec = float(-grad @ dy)
        if dec <= 0:
            dy = -grad
            dec = float(grad @ grad)
        f0 = work.barrier_value(c, tau, y)
        t = 1.0
        for _ in range(60):
            f1 = work.barrier_value(c, tau, y + t * dy)
            if f1 is not None and f1 <= f0 - 0.25 * t * dec:
                break
            t *= 0.5
        else:
            return y, True
        y = y + t * dy
        if t * dec < tol:
            return y, True
    return y, True


@dataclass(frozen=True)
class LmiSolution:
    y: np.ndarray
    status: str  # optimal | infeasible


def _boxed(blocks, nv):
    out = list(blocks)
    for i in range(nv):
        out.append(LmiBlock(np.array([[_Y_BOX]]), {i: -np.eye(1)}))
        out.append(LmiBlock(np.array([[_Y_BOX]]), {i: np.eye(1)}))
    return out


def _phase1(blocks, nv, y_init, margin=1e-8):
    """Find strictly feasible y, or None if min shift stays positive."""
    y0 = np.zeros(nv) if y_init is None else np.asarray(y_init, dtype=float).copy()
    lam_min = min(np.linalg.eigvalsh(b.eval(y0)).min() for b in blocks)
    if lam_min > margin:
        return y0
    t0 = max(0.0, -lam_min) + 1.0
    ext = []
    for b in blocks:
        coeffs = {int(i): b.stack[a] for a, i in enumerate(b.idx)}
        coeffs[nv] = np.eye(b.k)
        ext.append(LmiBlock(b.F0, coeffs))
    ext.append(LmiBlock(np.array([[t0 + 1.0]]), {nv: -np.eye(1)}))
    work = _Work(_boxed(ext, nv), nv + 1)
    c = np.zeros(nv + 1)
    c[nv] = -1.0
    y = np.concatenate([y0, [t0 * (1.0 + 1e-6) + 1e-6]])
    tau = 1.0
    while work.m_total / tau > 1e-9:
        y, _ = _newton(work, c, tau, y)
        if y[nv] < -margin:
            cand = y[:nv].copy()
            if min(np.linalg.eigvalsh(b.eval(cand)).min() for b in blocks) > 0:
                return cand
        tau *= 25.0
    return y[:nv].copy() if y[nv] < -margin else None


def solve_lmi(blocks, c, nvar, y_init=None, gap_tol=1e-8):
    """Maximize c'y subject to the LMI blocks.

    Variables are rescaled so every coefficient matrix has unit magnitude,
    which keeps the Newton systems well conditioned across the frequency
    range this package sweeps.
    """
    c = np.asarray(c, dtype=float)
    alpha = np.ones(nvar)
    for b in blocks:
        for a, i in enumerate(b.idx):
            alpha[i] = max(alpha[i], np.abs(b.stack[a]).max())
    sblocks = [b.scaled(alpha) for b in blocks]
    cs = c / alpha
    y0 = None if y_init is None else np.asarray(y_init, dtype=float) * alpha
    ys = _phase1(sblocks, nvar, y0)
    if ys is None:
        return LmiSolution(np.full(nvar, np.nan), "infeasible")
    work = _Work(_boxed(sblocks, nvar), nvar)
    obj_scale = max(1.0, abs(float(cs @ ys)))
    tau = max(1.0, work.m_total / obj_scale)
    while work.m_total / tau > gap_tol * obj_scale:
        ys, _ = _newton(work, cs, tau, ys)
        obj_scale = max(1.0, abs(float(cs @ ys)))
        tau *= 25.0
    ys, _ = _newton(work, cs, tau, ys)
    return LmiSolution(ys / alpha, "optimal")


# ---------------------------------------------------------------------------
# synthesis SDPs, in variables y = (vech Mt, vec Kt, scalar)
# ---------------------------------------------------------------------------

def _sym_basis(n):
    basis = []
    for i in range(n):
        for j in range(i, n):
            E = np.zeros((n, n))
            E[i, j] = 1.0
            E[j, i] = 1.0
            basis.append(E)
    return basis


def _pack_indices(n, m):
    nM = n * (n + 1) // 2
    nK = m * n
    return nM, nK, nM + nK  # last = index of the scalar variable


def _unpack(y, n, m):
    nM, nK, _ = _pack_indices(n, m)
    Mt = np.zeros((n, n))
    k = 0
    for i in range(n):
        for j in range(i, n):
            Mt[i, j] = y[k]
            Mt[j, i] = y[k]
            k += 1
    Kt = y[nM:nM + nK].reshape(m, n)
    return Mt, Kt


def _core_blocks(C, AL, BL, lam):
    """LMI blocks common to both synthesis problems (no scalar term)."""
    n, m = AL.shape[0], BL.shape[1]
    p = C.shape[0]
    SB = _sym_basis(n)
    nM, _, _ = _pack_indices(n, m)
    blocks = []
    # output-bound LMI: [[I, C Mt],[Mt C', Mt]] >= 0
    F0 = np.zeros((p + n, p + n))
    F0[:p, :p] = np.eye(p)
    coeffs = {}
    for k, E in enumerate(SB):
        F = np.zeros((p + n, p + n))
        F[:p, p:] = C @ E
        F[p:, :p] = (C @ E).T
        F[p:, p:] = E
        coeffs[k] = F
    blocks.append(LmiBlock(F0, coeffs))
    # contraction LMI: [[Mt, AL Mt + BL Kt],[., (1-2 lam) Mt]] >= 0
    coeffs = {}
    for k, E in enumerate(SB):
        F = np.zeros((2 * n, 2 * n))
        F[:n, :n] = E
        F[:n, n:] = AL @ E
        F[n:, :n] = (AL @ E).T
        F[n:, n:] = (1.0 - 2.0 * lam) * E
        coeffs[k] = F
    for a in range(m):
        for b in range(n):
            E = np.zeros((m, n))
            E[a, b] = 1.0
            F = np.zeros((2 * n, 2 * n))
            F[:n, n:] = BL @ E
            F[n:, :n] = (BL @ E).T
            coeffs[nM + a * n + b] = F
    blocks.append(LmiBlock(np.zeros((2 * n, 2 * n)), coeffs))
    return blocks, SB, nM


def _gain_block(n, m, nM, i_scalar, SB, fixed_cap=None):
    """[[c I, Kt],[Kt', Mt]] >= 0 with c either the scalar var or fixed."""
    F0 = np.zeros((m + n, m + n))
    coeffs = {}
    if fixed_cap is not None:
        F0[:m, :m] = fixed_cap * np.eye(m)
    else:
        F = np.zeros((m + n, m + n))
        F[:m, :m] = np.eye(m)
        coeffs[i_scalar] = F
    for k, E in enumerate(SB):
        F = np.zeros((m + n, m + n))
        F[m:, m:] = E
        coeffs[k] = F if k not in coeffs else coeffs[k] + F
    for a in range(m):
        for b in range(n):
            E = np.zeros((m, n))
            E[a, b] = 1.0
            F = np.zeros((m + n, m + n))
            F[:m, m:] = E
            F[m:, :m] = E.T
            coeffs[nM + a * n + b] = F
    return LmiBlock(F0, coeffs)


def _identity_guess(n, m, scalar):
    nM, nK, i_s = _pack_indices(n, m)
    y = np.zeros(nM + nK + 1)
    k = 0
    for i in range(n):
        for j in range(i, n):
            y[k] = 1.0 if i == j else 0.0
            k += 1
    y[i_s] = scalar
    return y


def sdp_max_min_eig(C_out, AL, BL, lam, eps_pd=1e-6, gain_cap=None):
    """Appendix-style synthesis SDP: maximize the least eigenvalue of Mt.

        max s   s.t.  s >= eps_pd,  Mt >= s I,
                      [[I, C Mt],[Mt C', Mt]] >= 0,
                      [[Mt, AL Mt + BL Kt],[., (1-2 lam) Mt]] >= 0,
                      (optional) Kt Mt^{-1} Kt' <= gain_cap^2 I.

    Returns (Mtilde, Ktilde, s) or None when infeasible.  lam must lie in
    (0, 1/2); eps_pd > 0 keeps the recovered M positive definite.
    """
    if not (0.0 < lam < 0.5):
        raise ValueError(f"lambda must be in (0, 1/2), got {lam}")
    if eps_pd <= 0:
        raise ValueError("eps_pd must be positive")
    AL = np.asarray(AL, dtype=float)
    BL = np.asarray(BL, dtype=float)
    C = np.atleast_2d(np.asarray(C_out, dtype=float))
    n, m = AL.shape[0], BL.shape[1]
    blocks, SB, nM = _core_blocks(C, AL, BL, lam)
    _, nK, i_s = _pack_indices(n, m)
    nv = nM + nK + 1
    # s >= eps_pd and Mt - s I >= 0
    blocks.append(LmiBlock(np.array([[-eps_pd]]), {i_s: np.eye(1)}))
    coeffs = {k: SB[k] for k in range(nM)}
    coeffs[i_s] = -np.eye(n)
    blocks.append(LmiBlock(np.zeros((n, n)), coeffs))
    if gain_cap is not None:
        blocks.append(_gain_block(n, m, nM, None, SB, fixed_cap=float(gain_cap) ** 2))
    c = np.zeros(nv)
    c[i_s] = 1.0
    sol = solve_lmi(blocks, c, nv, y_init=_identity_guess(n, m, eps_pd * 0.5))
    if sol.status != "optimal":
        return None
    Mt, Kt = _unpack(sol.y, n, m)
    s = float(sol.y[i_s])
    if s < eps_pd * 0.5 or np.linalg.eigvalsh(Mt).min() <= 0:
        return None
    return Mt, Kt, s


def sdp_min_gain(C_out, AL, BL, lam, s_floor, eps_pd=1e-6, warm_start=None):
    """Among certificates with Mt >= s_floor I, minimize ||Kt Mt^{-1/2}||.

    The gain bound is the epigraph LMI [[t I, Kt],[Kt', Mt]] >= 0; t is the
    squared spectral norm of K M^{-1/2}, the row scale of the input
    tightening.  Returns (Mtilde, Ktilde, gain) or None when infeasible.
    warm_start: optional strictly feasible (Mtilde, Ktilde) pair, typically
    the stage-1 solution.
    """
    if not (0.0 < lam < 0.5):
        raise ValueError(f"lambda must be in (0, 1/2), got {lam}")
    if s_floor <= 0:
        raise ValueError("s_floor must be positive")
    AL = np.asarray(AL, dtype=float)
    BL = np.asarray(BL, dtype=float)
    C = np.atleast_2d(np.asarray(C_out, dtype=float))
    n, m = AL.shape[0], BL.shape[1]
    blocks, SB, nM = _core_blocks(C, AL, BL, lam)
    _, nK, i_t = _pack_indices(n, m)
    nv = nM + nK + 1
    coeffs = {k: SB[k] for k in range(nM)}
    blocks.append(LmiBlock(-float(s_floor) * np.eye(n), coeffs))
    blocks.append(_gain_block(n, m, nM, i_t, SB))
    blocks.append(LmiBlock(np.array([[0.0]]), {i_t: np.eye(1)}))  # t >= 0
    c = np.zeros(nv)
    c[i_t] = -1.0
    y_init = None
    if warm_start is not None:
        Mt0, Kt0 = warm_start
        w, V = np.linalg.eigh(np.asarray(Mt0, dtype=float))
        if w.min() > 0:
            gain0 = np.linalg.norm(np.asarray(Kt0) @ ((V / np.sqrt(w)) @ V.T), 2)
            y_init = np.zeros(nv)
            k = 0
            for i in range(n):
                for j in range(i, n):
                    y_init[k] = Mt0[i, j]
                    k += 1
            y_init[nM:nM + nK] = np.asarray(Kt0, dtype=float).reshape(-1)
            y_init[i_t] = 1.1 * gain0 * gain0 + 1e-3
    sol = solve_lmi(blocks, c, nv, y_init=y_init)
    if sol.status != "optimal":
        return None
    Mt, Kt = _unpack(sol.y, n, m)
    if np.linalg.eigvalsh(Mt).min() <= 0:
        return None
    return Mt, Kt, float(np.sqrt(max(sol.y[i_t], 0.0)))

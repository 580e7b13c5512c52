"""Halfspace polytopes, safe regions, vertex enumeration, and norm maximization."""

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, UnboundedSetError
from .linalg import as_matrix
from .qp import _lp_barrier, solve_lp_feasibility

__all__ = ["HPolytope", "SafeRegion", "membership", "max_norm_over"]


@dataclass(frozen=True)
class HPolytope:
    """{z : F z <= f}.  Emptiness is a query, not an invariant."""

    F: np.ndarray
    f: np.ndarray

    def __post_init__(self):
        F = as_matrix(self.F, "F") if np.size(self.F) else np.zeros((0, 0))
        f = np.asarray(self.f, dtype=float).ravel()
        if F.shape[0] != f.size:
            raise DimensionError(f"F has {F.shape[0]} rows but f has {f.size}")
        object.__setattr__(self, "F", F)
        object.__setattr__(self, "f", f)

    @classmethod
    def from_box(cls, lo, hi):
        lo = np.asarray(lo, dtype=float).ravel()
        hi = np.asarray(hi, dtype=float).ravel()
        if lo.size != hi.size:
            raise DimensionError("box bounds differ in length")
        if np.any(lo > hi):
            raise ValueError("box has lo > hi")
        k = lo.size
        F = np.vstack([np.eye(k), -np.eye(k)])
        return cls(F=F, f=np.concatenate([hi, -lo]))

    @classmethod
    def empty_rows(cls, dim):
        """No constraints: all of R^dim."""
        return cls(F=np.zeros((0, dim)), f=np.zeros(0))

    @property
    def dim(self):
        return self.F.shape[1]

    @property
    def nrows(self):
        return self.F.shape[0]

    def slack(self, z):
        z = np.asarray(z, dtype=float).ravel()
        if self.nrows == 0:
            return np.array([np.inf])
        return self.f - self.F @ z

    def contains(self, z, tol=1e-12):
        return bool(np.min(self.slack(z)) >= -tol)

    def intersect(self, other):
        if other.nrows == 0:
            return self
        if self.nrows == 0:
            return other
        if self.dim != other.dim:
            raise DimensionError("cannot intersect polytopes of different dimension")
        return HPolytope(F=np.vstack([self.F, other.F]), f=np.concatenate([self.f, other.f]))

    def is_empty(self):
        if self.nrows == 0:
            return False
        return not solve_lp_feasibility(self.F, self.f).feasible

    def interior_point(self):
        res = solve_lp_feasibility(self.F, self.f)
        return res.witness if res.feasible else None

    def vertices(self, tol=1e-9):
        """All vertices by k-row intersections with feasibility filtering."""
        k, d = self.dim, self.nrows
        if d < k:
            raise UnboundedSetError("fewer rows than dimensions; polytope is unbounded")
        scale = max(1.0, float(np.max(np.abs(self.f), initial=0.0)))
        verts = []
        for rows in itertools.combinations(range(d), k):
            A = self.F[list(rows)]
            b = self.f[list(rows)]
            try:
                v = np.linalg.solve(A, b)
            except np.linalg.LinAlgError:
                continue
            if not np.all(np.isfinite(v)):
                continue
            if np.min(self.slack(v)) >= -tol * scale:
                verts.append(v)
        out = []
        for v in verts:
            if not any(np.linalg.norm(v - w) <= 1e-8 * max(1.0, np.linalg.norm(w)) for w in out):
                out.append(v)
        return np.array(out) if out else np.zeros((0, k))

    def is_bounded(self, big=1e5):
        """Probe all 2k axis directions; an optimizer escaping to the
        stabilizing box flags a recession direction."""
        start = self.interior_point()
        if start is None:
            return True  # empty sets are bounded
        k = self.dim
        box_F = np.vstack([np.eye(k), -np.eye(k)])
        box_f = np.full(2 * k, big)
        A = np.vstack([self.F, box_F])
        b = np.concatenate([self.f, box_f])
        if np.any(np.abs(start) >= big):
            return False
        for i in range(k):
            for sign in (1.0, -1.0):
                c = np.zeros(k)
                c[i] = -sign  # minimize -sign*z_i = maximize sign*z_i
                z = _lp_barrier(A, b, c, start.copy(), gap_tol=1e-6)
                if abs(z[i]) > 0.9 * big:
                    return False
        return True


@dataclass(frozen=True)
class SafeRegion:
    """Union of polytope pieces; membership means membership in any piece."""

    pieces: tuple

    def __post_init__(self):
        pieces = tuple(self.pieces)
        if not pieces:
            raise ValueError("safe region needs at least one piece")
        dims = {p.dim for p in pieces}
        if len(dims) != 1:
            raise DimensionError("pieces live in different dimensions")
        object.__setattr__(self, "pieces", pieces)

    @property
    def dim(self):
        return self.pieces[0].dim


def membership(region, z, tol=1e-12):
    """(inside, margin): margin is min-row slack, maximized over pieces."""
    if isinstance(region, HPolytope):
        m = float(np.min(region.slack(z)))
        return m >= -tol, m
    best = -np.inf
    for piece in region.pieces:
        best = max(best, float(np.min(piece.slack(z))))
    return best >= -tol, best


def max_norm_over(P, tol=1e-9):
    """Exact max Euclidean norm over a bounded polytope (attained at a vertex)."""
    if P.is_empty():
        raise ValueError("cannot maximize over an empty polytope")
    if not P.is_bounded():
        raise UnboundedSetError("polytope is unbounded; max norm undefined")
    V = P.vertices(tol=tol)
    if V.shape[0] == 0:
        raise UnboundedSetError("no vertices found; polytope may be degenerate")
    return float(np.max(np.linalg.norm(V, axis=1)))

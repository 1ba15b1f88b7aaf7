"""Zonotope algebra: construction, hulls, affine maps, membership, sampling.

A zonotope is the set  Z = (c | G) = { c + sum_i beta_i * g_i : beta_i in [-1,1] }
with center c in R^D and generators g_i in R^D stored as the rows of G.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linprog

#: Floor used inside the log of size_measure for zero-width dimensions.
SIZE_LOG_FLOOR = 1e-12

#: Default per-coordinate residual tolerance for point membership.
MEMBERSHIP_TOL = 1e-9


class ContainmentUndecidedError(RuntimeError):
    """The membership LP failed numerically; containment is unknown."""


def _as_matrix(generators, dim: int) -> np.ndarray:
    G = np.asarray(generators, dtype=float)
    if G.size == 0:
        return np.zeros((0, dim))
    if G.ndim == 1:
        G = G.reshape(1, -1)
    return G


@dataclass(frozen=True)
class Zonotope:
    """Immutable zonotope in G-representation.

    center: (D,) float array.
    generators: (n, D) float array, one generator per row; n = 0 encodes a point.
    """

    center: np.ndarray
    generators: np.ndarray

    def __init__(self, center, generators=None):
        c = np.asarray(center, dtype=float).reshape(-1)
        if c.size == 0:
            raise ValueError("zonotope center must have at least one dimension")
        G = _as_matrix(generators if generators is not None else [], c.size)
        if G.shape[1] != c.size:
            raise ValueError(
                f"generator length {G.shape[1]} does not match center length {c.size}"
            )
        if not np.all(np.isfinite(c)) or not np.all(np.isfinite(G)):
            raise ValueError("zonotope entries must be finite")
        c = c.copy()
        G = G.copy()
        c.flags.writeable = False
        G.flags.writeable = False
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "generators", G)

    @property
    def dim(self) -> int:
        return self.center.shape[0]

    @property
    def n_generators(self) -> int:
        return self.generators.shape[0]

    def radius(self) -> np.ndarray:
        """Per-dimension half-width sum(|g_i|) of the interval hull."""
        return np.abs(self.generators).sum(axis=0)

    def eval(self, beta) -> np.ndarray:
        """Point c + sum_i beta_i g_i for coefficients beta in [-1,1]^n."""
        beta = np.asarray(beta, dtype=float)
        if beta.shape[-1] != self.n_generators:
            raise ValueError("beta length does not match generator count")
        return self.center + beta @ self.generators

    def __repr__(self):
        return f"Zonotope(D={self.dim}, n={self.n_generators})"


@dataclass(frozen=True)
class IntervalHull:
    """Axis-aligned box [lower, upper], the tightest box containing a zonotope."""

    lower: np.ndarray
    upper: np.ndarray

    def __init__(self, lower, upper):
        lo = np.asarray(lower, dtype=float).reshape(-1).copy()
        up = np.asarray(upper, dtype=float).reshape(-1).copy()
        if lo.shape != up.shape:
            raise ValueError("bound shapes differ")
        if np.any(lo > up):
            raise ValueError("lower bound exceeds upper bound")
        lo.flags.writeable = False
        up.flags.writeable = False
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", up)

    def contains(self, p, tol: float = 0.0) -> bool:
        p = np.asarray(p, dtype=float)
        return bool(np.all(p >= self.lower - tol) and np.all(p <= self.upper + tol))


def interval_hull(z: Zonotope) -> IntervalHull:
    """Tightest axis-aligned box [c - sum|g_i|, c + sum|g_i|] around z."""
    r = z.radius()
    return IntervalHull(z.center - r, z.center + r)


def linear_transform(z: Zonotope, W, b) -> Zonotope:
    """Exact affine image (W c + b | G W^T) of a zonotope."""
    W = np.asarray(W, dtype=float)
    b = np.asarray(b, dtype=float).reshape(-1)
    if W.ndim != 2 or W.shape[1] != z.dim:
        raise ValueError(f"weight matrix must have {z.dim} columns")
    if b.shape[0] != W.shape[0]:
        raise ValueError("bias length does not match weight rows")
    return Zonotope(W @ z.center + b, z.generators @ W.T)


def project(z: Zonotope, dims) -> Zonotope:
    """Zero the center and all generator entries on the given dimensions."""
    dims = list(dims)
    if any(d < 0 or d >= z.dim for d in dims):
        raise IndexError(f"projection index out of range for D={z.dim}")
    if not dims:
        return z
    c = z.center.copy()
    G = z.generators.copy()
    c[dims] = 0.0
    G[:, dims] = 0.0
    return Zonotope(c, G)


def sample(z: Zonotope, count: int, rng_seed: int) -> np.ndarray:
    """Draw `count` points c + beta G with beta uniform on [-1,1]^n (seeded)."""
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = np.random.default_rng(rng_seed)
    beta = rng.uniform(-1.0, 1.0, size=(count, z.n_generators))
    return z.center + beta @ z.generators


def size_measure(z: Zonotope) -> float:
    """sum_d log((delta g)_d); zero widths contribute log(SIZE_LOG_FLOOR)."""
    r = np.maximum(z.radius(), SIZE_LOG_FLOOR)
    return float(np.log(r).sum())


def scaled_volume(z: Zonotope) -> float:
    """Geometric mean of the interval-hull side lengths, (prod_d 2 (dg)_d)^(1/D)."""
    sides = 2.0 * z.radius()
    if np.any(sides == 0.0):
        return 0.0
    return float(np.exp(np.log(sides).mean()))


def merge_union(zs) -> Zonotope:
    """Axis-aligned over-approximation of the union of the given zonotopes.

    Takes the envelope of the interval hulls and returns it as a box zonotope
    (l_low + g_ext | diag(g_ext)) with g_ext = (l_upp - l_low) / 2.
    """
    zs = list(zs)
    if not zs:
        raise ValueError("cannot merge an empty list of zonotopes")
    dim = zs[0].dim
    if any(z.dim != dim for z in zs):
        raise ValueError("zonotopes must share the same dimension")
    lows = np.array([z.center - z.radius() for z in zs])
    upps = np.array([z.center + z.radius() for z in zs])
    l_low = lows.min(axis=0)
    l_upp = upps.max(axis=0)
    g_ext = 0.5 * (l_upp - l_low)
    return Zonotope(l_low + g_ext, np.diag(g_ext))


def _membership_lp(z: Zonotope, p: np.ndarray, tol: float) -> linprog.LpOutcome:
    # Feasibility of |G^T beta - (p - c)|_inf <= tol with beta in [-1,1]^n,
    # written as two blocks of inequalities.
    n = z.n_generators
    At = z.generators.T                      # (D, n)
    r = p - z.center
    A = np.vstack([At, -At])
    b = np.concatenate([r + tol, -r + tol])
    lp = linprog.LinearProgram(
        objective=np.zeros(n),
        A=A,
        b=b,
        lower=-np.ones(n),
        upper=np.ones(n),
    )
    return linprog.solve(lp)


def contains_point(z: Zonotope, p, tol: float = MEMBERSHIP_TOL) -> bool:
    """LP membership test: is p within per-coordinate residual tol of z?

    Raises ContainmentUndecidedError if the LP solver fails numerically
    (distinct from an infeasibility certificate, which returns False).
    """
    p = np.asarray(p, dtype=float).reshape(-1)
    if p.shape[0] != z.dim:
        raise ValueError("point length does not match zonotope dimension")
    return bool(contains_points(z, p.reshape(1, -1), tol)[0])


def contains_points(z: Zonotope, pts, tol: float = MEMBERSHIP_TOL) -> np.ndarray:
    """Vectorized membership for an (N, D) array of points.

    Cheap certificates (interval-hull rejection, least-squares coefficient
    recovery) resolve most queries; the membership LP decides the rest.
    """
    pts = np.asarray(pts, dtype=float)
    if pts.ndim == 1:
        pts = pts.reshape(1, -1)
    if pts.shape[1] != z.dim:
        raise ValueError("point length does not match zonotope dimension")
    n_pts = pts.shape[0]
    out = np.zeros(n_pts, dtype=bool)

    r = z.radius()
    inside_hull = np.all(pts >= z.center - r - tol, axis=1) & np.all(
        pts <= z.center + r + tol, axis=1
    )
    if z.n_generators == 0:
        # Point zonotope: hull membership is exact.
        out[:] = inside_hull
        return out

    undecided = np.flatnonzero(inside_hull)
    if undecided.size:
        # Least-squares coefficients: an in-box solution with small residual
        # certifies membership; an unconstrained residual above tol*sqrt(D)
        # certifies non-membership (the box only shrinks the feasible set).
        Gt = z.generators.T                       # (D, n)
        pinv = np.linalg.pinv(Gt)
        rhs = pts[undecided] - z.center           # (m, D)
        beta = rhs @ pinv.T                       # (m, n)
        resid = beta @ Gt.T - rhs                 # (m, D)
        res_inf = np.abs(resid).max(axis=1)
        in_box = np.abs(beta).max(axis=1) <= 1.0 + 1e-12
        certified_in = in_box & (res_inf <= tol)
        certified_out = np.linalg.norm(resid, axis=1) > tol * np.sqrt(z.dim)
        out[undecided[certified_in]] = True
        undecided = undecided[~certified_in & ~certified_out]

    for idx in undecided:
        outcome = _membership_lp(z, pts[idx], tol)
        if outcome.status == linprog.OPTIMAL:
            out[idx] = True
        elif outcome.status == linprog.INFEASIBLE:
            out[idx] = False
        else:
            raise ContainmentUndecidedError(
                f"membership LP ended with status {outcome.status}"
            )
    return out

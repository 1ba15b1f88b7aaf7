"""Shared generators and independent oracles for the test suite."""

from itertools import combinations

import numpy as np

from reachzono import Network, Zonotope, contains_points
from reachzono.relu_reach import _quadrant, _under_lp
from reachzono import linprog


def random_zonotope(rng, max_dim=4, max_gens=5, scale=1.0, center_scale=1.0):
    """Random zonotope whose hull tends to straddle zero in some dimensions."""
    d = int(rng.integers(1, max_dim + 1))
    n = int(rng.integers(0, max_gens + 1))
    c = rng.normal(0.0, center_scale, d)
    G = rng.normal(0.0, scale, (n, d))
    return Zonotope(c, G)


def random_network(rng, widths, task="classification"):
    layers = []
    for w_in, w_out in zip(widths, widths[1:]):
        W = rng.normal(0.0, 1.0 / np.sqrt(w_in), (w_out, w_in))
        b = rng.normal(0.0, 0.3, w_out)
        layers.append((W, b))
    return Network(layers, task=task)


def corner_points(z):
    """All 2^n corner points c + sum(+-g_i); the hull extrema sit among them."""
    n = z.n_generators
    if n == 0:
        return z.center.reshape(1, -1)
    signs = ((np.arange(1 << n)[:, None] >> np.arange(n)) & 1) * 2.0 - 1.0
    return z.center + signs @ z.generators


def union_contains(zonotopes, points, tol=1e-9):
    """Membership of each point in the union of the given zonotopes."""
    points = np.asarray(points, dtype=float)
    ok = np.zeros(points.shape[0], dtype=bool)
    for z in zonotopes:
        todo = np.flatnonzero(~ok)
        if todo.size == 0:
            break
        ok[todo] = contains_points(z, points[todo], tol)
    return ok


def quadrant_codes(crossing):
    return [_quadrant(mask, tuple(crossing)) for mask in range(1 << len(crossing))]


def sign_matching_points(z, quad, count, rng, want_beta=False):
    """`count` points of z whose sign pattern matches the quadrant, or fewer
    only when the quadrant holds no point of z at all.

    Rejection sampling first; if the quadrant is rarely hit, tops up by
    shrinking fresh samples toward a feasible interior point along the
    segment (both endpoints' coefficients stay in the box, so the results
    remain points of z). With want_beta, also returns the coefficient
    vectors that generated the points.
    """
    d = z.dim
    neg = np.zeros(d, dtype=bool)
    if quad.dims:
        neg[list(quad.dims)] = True

    def matches(P):
        return np.all(P[:, ~neg] >= 0.0, axis=1) & np.all(P[:, neg] <= 0.0, axis=1)

    def pack(points, betas):
        return (points, betas) if want_beta else points

    beta = rng.uniform(-1.0, 1.0, (6 * count, z.n_generators))
    pts = z.center + beta @ z.generators
    hit = matches(pts)
    found, found_beta = pts[hit][:count], beta[hit][:count]
    if found.shape[0] >= count:
        return pack(found, found_beta)

    # An interior anchor for the quadrant: the center-shift coefficients
    # delta of the under-approximation program reach a point of S_k.
    out = linprog.solve(_under_lp(z, quad))
    if out.status != linprog.OPTIMAL:
        return pack(found, found_beta)  # quadrant provably empty
    beta0 = np.clip(out.solution[z.n_generators :], -1.0, 1.0)
    p0 = z.center + beta0 @ z.generators
    if not matches(p0.reshape(1, -1))[0]:
        return pack(found, found_beta)  # anchor on the boundary within fp noise
    need = count - found.shape[0]
    beta = rng.uniform(-1.0, 1.0, (need, z.n_generators))
    p1 = z.center + beta @ z.generators
    delta = p1 - p0
    t = np.ones(need)
    for dd in range(d):
        den = delta[:, dd]
        if neg[dd]:
            bad = den > 0
            bound = np.where(bad, (-p0[dd]) / np.where(bad, den, 1.0), np.inf)
        else:
            bad = den < 0
            bound = np.where(bad, p0[dd] / np.where(bad, -den, 1.0), np.inf)
        t = np.minimum(t, np.clip(bound, 0.0, 1.0))
    # Shrink away from the quadrant boundary until rounding noise is gone
    # (t -> 0 reproduces the feasible anchor, so this terminates).
    t *= 1.0 - 1e-9
    topped = p0 + t[:, None] * delta
    for _ in range(200):
        bad = ~matches(topped)
        if not bad.any():
            break
        t[bad] *= 0.9
        topped[bad] = p0 + t[bad, None] * delta[bad]
    assert matches(topped).all()
    topped_beta = beta0 + t[:, None] * (beta - beta0)
    return pack(np.vstack([found, topped]), np.vstack([found_beta, topped_beta]))


def enumerate_vertices_max(lp, feas_tol=1e-7):
    """Brute-force LP oracle: best objective over all basic feasible vertices.

    Intersects every choice of n active constraints (rows of A plus finite
    bound rows) and keeps feasible solutions. Requires a bounded feasible
    region (finite box bounds). Returns None when no vertex is feasible.
    """
    n = lp.n_vars
    rows = [lp.A]
    rhs = [lp.b]
    for j in range(n):
        if np.isfinite(lp.lower[j]):
            e = np.zeros(n)
            e[j] = -1.0
            rows.append(e.reshape(1, -1))
            rhs.append(np.array([-lp.lower[j]]))
        if np.isfinite(lp.upper[j]):
            e = np.zeros(n)
            e[j] = 1.0
            rows.append(e.reshape(1, -1))
            rhs.append(np.array([lp.upper[j]]))
    A = np.vstack(rows)
    b = np.concatenate(rhs)
    m = A.shape[0]
    if m < n:
        raise ValueError("vertex enumeration needs at least n constraints")

    combos = np.array(list(combinations(range(m), n)))
    mats = A[combos]                       # (K, n, n)
    rhss = b[combos]                       # (K, n)
    dets = np.linalg.det(mats)
    good = np.abs(dets) > 1e-10
    if not good.any():
        return None
    verts = np.linalg.solve(mats[good], rhss[good][..., None])[..., 0]
    feas = np.all(verts @ A.T <= b + feas_tol, axis=1)
    if not feas.any():
        return None
    return float((verts[feas] @ lp.objective).max())


def random_feasible_lp(rng, max_vars=6, max_rows=4):
    """Random bounded LP with a guaranteed interior point."""
    n = int(rng.integers(2, max_vars + 1))
    m = int(rng.integers(1, max_rows + 1))
    lo = rng.uniform(-3.0, 0.0, n)
    hi = lo + rng.uniform(0.5, 3.0, n)
    A = rng.uniform(-2.0, 2.0, (m, n))
    x0 = rng.uniform(lo, hi)
    b = A @ x0 + rng.uniform(0.1, 2.0, m)
    c = rng.uniform(-2.0, 2.0, n)
    return linprog.LinearProgram(c, A, b, lo, hi)

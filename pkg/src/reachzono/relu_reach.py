"""Approximating ReLU(Z) by sets of zonotopes and propagating them layer-wise.

The image of a zonotope under ReLU is generally non-convex. Dimensions whose
interval hull is entirely nonpositive are projected to zero exactly; each
remaining sign pattern (quadrant) over the crossing dimensions is approximated
by one zonotope, from the outside (analytic generator scaling) or from the
inside (a linear program over scaling factors and center shifts).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linprog
from .network import Network
from .zonotope import (
    Zonotope,
    interval_hull,
    linear_transform,
    merge_union,
    project,
    size_measure,
)

OVER = "over"
UNDER = "under"

#: Sentinel returned by count_quadrants instead of values above 2^62.
QUADRANT_SATURATED = 2**62

#: Hard cap on the zonotope count of a layer in budget-free propagation.
DEFAULT_ZONOTOPE_CEILING = 10**6


class ResourceLimitError(RuntimeError):
    """Propagation would exceed the configured zonotope ceiling."""


@dataclass(frozen=True)
class DimClassification:
    """Partition of dimensions by the sign behaviour of a zonotope.

    negative: hull entirely <= 0 (ReLU maps these to zero).
    positive: hull entirely >= 0 (ReLU is the identity).
    crossing: hull straddles zero, ascending order.
    """

    negative: tuple
    positive: tuple
    crossing: tuple


@dataclass(frozen=True)
class QuadrantCode:
    """One sign pattern over the crossing dimensions.

    mask: bitmask over the ascending crossing list, bit i set <=> the i-th
    crossing dimension is constrained nonpositive.
    dims: the nonpositive-constrained dimensions themselves.
    """

    mask: int
    dims: tuple


@dataclass(frozen=True)
class ReachSet:
    """Ordered set of zonotopes approximating a reachable set.

    direction is OVER or UNDER for the whole set; provenance holds one
    (parent index, quadrant mask) pair per zonotope, with -1 entries for
    synthesized members (interval-hull fallback, merged unions, the input).
    """

    zonotopes: tuple
    direction: str
    provenance: tuple

    def __post_init__(self):
        if self.direction not in (OVER, UNDER):
            raise ValueError(f"unknown direction {self.direction!r}")
        if len(self.zonotopes) != len(self.provenance):
            raise ValueError("provenance must match zonotope count")

    def __len__(self):
        return len(self.zonotopes)


@dataclass(frozen=True)
class Budget:
    """Caps on set growth: max_amp per ReLU application, max_zono per layer.

    None means unlimited; the global zonotope ceiling still applies.
    """

    max_amp: int | None = None
    max_zono: int | None = None

    def __post_init__(self):
        for name, v in (("max_amp", self.max_amp), ("max_zono", self.max_zono)):
            if v is not None and v < 1:
                raise ValueError(f"{name} must be >= 1")


UNLIMITED = Budget()


def classify_dims(z: Zonotope) -> DimClassification:
    """Partition dimensions through the interval hull of z.

    A dimension whose hull is [0, 0] counts as negative: ReLU maps it to
    zero either way, so projecting it is exact.
    """
    hull = interval_hull(z)
    negative, positive, crossing = [], [], []
    for d in range(z.dim):
        if hull.upper[d] <= 0.0:
            negative.append(d)
        elif hull.lower[d] >= 0.0:
            positive.append(d)
        else:
            crossing.append(d)
    return DimClassification(tuple(negative), tuple(positive), tuple(crossing))


def count_quadrants(z: Zonotope) -> int:
    """2^(number of crossing dimensions), saturated at QUADRANT_SATURATED."""
    k = len(classify_dims(z).crossing)
    if k >= 62:
        return QUADRANT_SATURATED
    return 1 << k


def _quadrant(mask: int, crossing: tuple) -> QuadrantCode:
    dims = tuple(d for i, d in enumerate(crossing) if mask >> i & 1)
    return QuadrantCode(mask, dims)


def _drop_zero_generators(z: Zonotope) -> Zonotope:
    keep = np.any(z.generators != 0.0, axis=1)
    if keep.all():
        return z
    return Zonotope(z.center, z.generators[keep])


def _overapprox_coefficients(z: Zonotope, neg_dims):
    """Per-generator scaling factors and center-shift signs.

    Walking from the extreme point of the hull, each generator j is scaled
    by the largest factor that cannot leave the quadrant along any
    dimension d; zero generator entries impose no constraint (factor 1).
    Returns (alpha, d_star, o, s) with alpha clamped to [0, 1].
    """
    G = z.generators
    n, D = G.shape
    absG = np.abs(G)
    dg = absG.sum(axis=0)
    upper = z.center + dg
    lower = z.center - dg
    neg = np.zeros(D, dtype=bool)
    if neg_dims:
        neg[list(neg_dims)] = True

    den = 2.0 * absG
    safe_den = np.where(den > 0.0, den, 1.0)
    t_plus = upper[None, :] - den        # c_d - 2|g_jd| + sum_i |g_id|
    t_minus = lower[None, :] + den
    a_plus = np.where((t_plus < 0.0) & (den > 0.0),
                      1.0 - np.abs(t_plus) / safe_den, 1.0)
    a_minus = np.where((t_minus > 0.0) & (den > 0.0),
                       1.0 - np.abs(t_minus) / safe_den, 1.0)
    a_jd = np.clip(np.where(neg[None, :], a_minus, a_plus), 0.0, 1.0)

    if n == 0:
        empty = np.zeros(0)
        return empty, np.zeros(0, dtype=int), empty, empty
    alpha = a_jd.min(axis=1)
    d_star = a_jd.argmin(axis=1)
    g_star = G[np.arange(n), d_star]
    o = np.where(g_star >= 0.0, 1.0, -1.0)
    s = np.where(neg[d_star], -1.0, 1.0)
    return alpha, d_star, o, s


def overapprox_quadrant(z: Zonotope, quad: QuadrantCode) -> Zonotope:
    """Zonotope containing every point of z with the quadrant's sign pattern.

    Scales each generator and shifts the center accordingly; expects z to be
    projected on its entirely-nonpositive dimensions already.
    """
    alpha, _, o, s = _overapprox_coefficients(z, quad.dims)
    shift = (s * (1.0 - alpha) * o) @ z.generators
    return _drop_zero_generators(
        Zonotope(z.center + shift, alpha[:, None] * z.generators)
    )


def _under_lp(z: Zonotope, quad: QuadrantCode) -> linprog.LinearProgram:
    """The under-approximation program over variables [alpha, delta]."""
    G = z.generators
    n, D = G.shape
    c = z.center
    neg = np.zeros(D, dtype=bool)
    if quad.dims:
        neg[list(quad.dims)] = True
    absG = np.abs(G)
    eye = np.eye(n)
    # Rows: |delta_i| <= 1 - alpha_i, then per-dimension sign constraints
    # on the scaled interval hull.
    A_sign = np.where(
        neg[:, None], np.hstack([absG.T, G.T]), np.hstack([absG.T, -G.T])
    )
    b_sign = np.where(neg, -c, c)
    A = np.vstack([np.hstack([eye, eye]), np.hstack([eye, -eye]), A_sign])
    b = np.concatenate([np.ones(n), np.ones(n), b_sign])
    return linprog.LinearProgram(
        objective=np.concatenate([np.ones(n), np.zeros(n)]),
        A=A,
        b=b,
        lower=np.concatenate([np.zeros(n), -np.ones(n)]),
        upper=np.ones(2 * n),
    )


def underapprox_quadrant(
    z: Zonotope, quad: QuadrantCode, tol: float = linprog.DEFAULT_TOL
) -> Zonotope | None:
    """Largest same-shape zonotope inside z restricted to the quadrant.

    Maximizes the sum of generator scalings alpha_i subject to the scaled
    set staying inside z (|delta_i| <= 1 - alpha_i for the center shift)
    and inside the quadrant (interval-hull sign constraints). Returns None
    when the quadrant holds no point of z (infeasible program) or when the
    solver fails - dropping a quadrant keeps the under-approximation sound.
    """
    G = z.generators
    n = G.shape[0]
    c = z.center
    neg = np.zeros(z.dim, dtype=bool)
    if quad.dims:
        neg[list(quad.dims)] = True

    if n == 0:
        ok = np.all(c[~neg] >= -tol) and np.all(c[neg] <= tol)
        return z if ok else None

    out = linprog.solve(_under_lp(z, quad), tol)
    if out.status != linprog.OPTIMAL:
        return None
    alpha = np.clip(out.solution[:n], 0.0, 1.0)
    delta = out.solution[n:]
    return _drop_zero_generators(
        Zonotope(c + delta @ G, alpha[:, None] * G)
    )


def _positive_box(z: Zonotope) -> Zonotope:
    """Interval hull restricted to its nonnegative part, as a box zonotope."""
    hull = interval_hull(z)
    lo = np.maximum(hull.lower, 0.0)
    hi = np.maximum(hull.upper, 0.0)
    radii = 0.5 * (hi - lo)
    return _drop_zero_generators(Zonotope(lo + radii, np.diag(radii)))


def rso_relu(z: Zonotope, max_amp: int | None = None) -> ReachSet:
    """Over-approximate ReLU(z) by a set of zonotopes.

    Projects the entirely-nonpositive dimensions, then either enumerates
    every crossing-sign quadrant (quadrant masks in ascending binary order)
    or, when the quadrant count exceeds max_amp, falls back to the single
    positive-restricted interval hull.
    """
    cls = classify_dims(z)
    zp = _drop_zero_generators(project(z, cls.negative))
    q = count_quadrants(z)
    limit = max_amp if max_amp is not None else DEFAULT_ZONOTOPE_CEILING
    if max_amp is not None and q > max_amp:
        return ReachSet((_positive_box(zp),), OVER, ((0, -1),))
    if q > limit:
        raise ResourceLimitError(
            f"ReLU image needs {q} quadrants, above the ceiling {limit}"
        )
    zono, prov = [], []
    for mask in range(q):
        quad = _quadrant(mask, cls.crossing)
        zhat = overapprox_quadrant(zp, quad)
        zono.append(_drop_zero_generators(project(zhat, quad.dims)))
        prov.append((0, mask))
    return ReachSet(tuple(zono), OVER, tuple(prov))


def rsu_relu(z: Zonotope, max_amp: int | None = None) -> ReachSet:
    """Under-approximate ReLU(z) by a set of zonotopes.

    Enumerates quadrants in the same deterministic order as rso_relu,
    keeping feasible ones and stopping once max_amp zonotopes are collected.
    """
    cls = classify_dims(z)
    zp = _drop_zero_generators(project(z, cls.negative))
    q = count_quadrants(z)
    if max_amp is None and q > DEFAULT_ZONOTOPE_CEILING:
        raise ResourceLimitError(
            f"ReLU image needs {q} quadrants, above the ceiling"
        )
    zono, prov = [], []
    for mask in range(q):
        quad = _quadrant(mask, cls.crossing)
        zhat = underapprox_quadrant(zp, quad)
        if zhat is None:
            continue
        zono.append(_drop_zero_generators(project(zhat, quad.dims)))
        prov.append((0, mask))
        if max_amp is not None and len(zono) >= max_amp:
            break
    return ReachSet(tuple(zono), UNDER, tuple(prov))


def _dedup_points(zono, prov):
    """Drop repeated generator-free zonotopes (identical centers)."""
    seen = set()
    out_z, out_p = [], []
    for z, p in zip(zono, prov):
        if z.n_generators == 0:
            key = z.center.tobytes()
            if key in seen:
                continue
            seen.add(key)
        out_z.append(z)
        out_p.append(p)
    return out_z, out_p


def _trim_to_budget(zono, prov, direction, max_zono):
    """Keep the max_zono-1 largest by size_measure; merge (Over) or drop
    (Under) the rest."""
    if max_zono is None or len(zono) <= max_zono:
        return zono, prov
    sizes = [size_measure(z) for z in zono]
    order = sorted(range(len(zono)), key=lambda i: (-sizes[i], i))
    keep = sorted(order[: max_zono - 1])
    rest = sorted(order[max_zono - 1 :])
    out_z = [zono[i] for i in keep]
    out_p = [prov[i] for i in keep]
    if direction == OVER:
        out_z.append(merge_union([zono[i] for i in rest]))
        out_p.append((-1, -1))
    return out_z, out_p


def propagate_limited(
    net: Network,
    input_zonotope: Zonotope,
    direction: str,
    budget: Budget = UNLIMITED,
    max_total: int | None = None,
) -> ReachSet:
    """Propagate a zonotope through the network under growth budgets.

    Applies the affine map of every layer and the ReLU approximation of all
    but the last; after each ReLU layer the set is deduplicated and, when it
    exceeds budget.max_zono, trimmed by size. Raises ResourceLimitError if
    a layer would exceed the global ceiling (never truncates silently).
    """
    if direction not in (OVER, UNDER):
        raise ValueError(f"unknown direction {direction!r}")
    if input_zonotope.dim != net.input_dim:
        raise ValueError(
            f"input dimension {input_zonotope.dim} does not match "
            f"network input width {net.input_dim}"
        )
    ceiling = DEFAULT_ZONOTOPE_CEILING if max_total is None else max_total
    relu = rso_relu if direction == OVER else rsu_relu

    zono = [input_zonotope]
    prov = [(-1, -1)]
    last = len(net.layers) - 1
    for li, layer in enumerate(net.layers):
        zono = [linear_transform(z, layer.weights, layer.bias) for z in zono]
        if li == last:
            break
        new_z, new_p = [], []
        for pi, z in enumerate(zono):
            q = count_quadrants(z)
            if direction == OVER and budget.max_amp is not None and q > budget.max_amp:
                expected = 1
            else:
                expected = min(q, budget.max_amp) if budget.max_amp else q
            if len(new_z) + expected > ceiling:
                raise ResourceLimitError(
                    f"layer {li} would exceed the zonotope ceiling ({ceiling})"
                )
            rs = relu(z, budget.max_amp)
            for zk, (_, quad_mask) in zip(rs.zonotopes, rs.provenance):
                new_z.append(zk)
                new_p.append((pi, quad_mask))
        zono, prov = _dedup_points(new_z, new_p)
        zono, prov = _trim_to_budget(zono, prov, direction, budget.max_zono)
    return ReachSet(tuple(zono), direction, tuple(prov))


def propagate(
    net: Network,
    input_zonotope: Zonotope,
    direction: str,
    max_total: int | None = None,
) -> ReachSet:
    """Budget-free propagation (the global zonotope ceiling still applies)."""
    return propagate_limited(net, input_zonotope, direction, UNLIMITED, max_total)

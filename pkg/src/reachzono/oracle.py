"""Brute-force and sampling baselines, independent of the set propagation.

These reproduce reachable-set quantities the slow way (corner enumeration,
forward sampling, exhaustive grids) and anchor the property tests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .network import Network, forward_batch
from .zonotope import Zonotope

#: Half of the sampled points sit on corners by default; interior samples
#: catch projection-boundary effects that pure vertex sampling misses.
DEFAULT_CORNER_FRACTION = 0.5

_MAX_CORNER_GENERATORS = 20
_MAX_GRID_DOF = 3


@dataclass(frozen=True)
class SampledSet:
    """Outputs of the network on points drawn from an input zonotope."""

    points: np.ndarray
    seed: int
    count: int


@dataclass(frozen=True)
class GridSearchResult:
    """Outcome of an exhaustive grid search for a label change.

    witness is an input point classified differently, or None when the grid
    found no change; coarse flags grids below 100 steps per axis, whose
    negative answers should not be trusted.
    """

    witness: np.ndarray | None
    resolution: int
    points_checked: int
    coarse: bool


def sample_reachable(
    net: Network,
    input_zonotope: Zonotope,
    count: int,
    seed: int,
    corner_fraction: float = DEFAULT_CORNER_FRACTION,
) -> SampledSet:
    """Forward a seeded mix of corner and interior samples of the input set."""
    if count < 1:
        raise ValueError("count must be >= 1")
    if not 0.0 <= corner_fraction <= 1.0:
        raise ValueError("corner_fraction must be in [0, 1]")
    z = input_zonotope
    if z.dim != net.input_dim:
        raise ValueError("input zonotope dimension does not match the network")
    rng = np.random.default_rng(seed)
    n_corner = int(round(count * corner_fraction))
    n = z.n_generators
    beta_corner = rng.integers(0, 2, size=(n_corner, n)) * 2.0 - 1.0
    beta_inner = rng.uniform(-1.0, 1.0, size=(count - n_corner, n))
    beta = np.vstack([beta_corner, beta_inner])
    X = z.center + beta @ z.generators
    return SampledSet(forward_batch(net, X), seed, count)


def brute_force_score(z: Zonotope, a: int, b: int) -> float:
    """min over all corner points of (p_a - p_b), by full enumeration.

    The margin is linear in the coefficients, so corners attain the minimum;
    guarded at 20 generators (2^20 corners).
    """
    n = z.n_generators
    if n > _MAX_CORNER_GENERATORS:
        raise ValueError(f"corner enumeration guarded at n <= {_MAX_CORNER_GENERATORS}")
    if a == b:
        raise ValueError("classes a and b must differ")
    diff = z.generators[:, a] - z.generators[:, b]
    base = z.center[a] - z.center[b]
    if n == 0:
        return float(base)
    signs = ((np.arange(1 << n)[:, None] >> np.arange(n)) & 1) * 2.0 - 1.0
    return float(base + (signs @ diff).min())


def grid_adversarial_search(
    net: Network, input_zonotope: Zonotope, a: int, resolution: int
) -> GridSearchResult:
    """Exhaustively classify a grid over the input set, looking for a label != a.

    Only effective (nonzero) generators span grid axes; guarded at 3 of them.
    """
    if resolution < 2:
        raise ValueError("resolution must be >= 2")
    z = input_zonotope
    G = z.generators[np.any(z.generators != 0.0, axis=1)]
    n = G.shape[0]
    if n > _MAX_GRID_DOF:
        raise ValueError(f"grid search guarded at {_MAX_GRID_DOF} effective generators")
    if n == 0:
        beta = np.zeros((1, 0))
    else:
        axis = np.linspace(-1.0, 1.0, resolution)
        grids = np.meshgrid(*([axis] * n), indexing="ij")
        beta = np.stack([g.ravel() for g in grids], axis=1)
    X = z.center + beta @ G
    labels = np.argmax(forward_batch(net, X), axis=1)
    hits = np.flatnonzero(labels != a)
    witness = X[hits[0]].copy() if hits.size else None
    return GridSearchResult(witness, resolution, X.shape[0], resolution < 100)

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from reachzono import (
    Zonotope,
    contains_point,
    contains_points,
    interval_hull,
    linear_transform,
    merge_union,
    project,
    sample,
    scaled_volume,
    size_measure,
)
from helpers import corner_points, random_zonotope, union_contains

EX1 = Zonotope([6.0, 1.0], [[3.0, 0.0], [2.0, 3.0], [0.0, 0.5]])


def small_zonotopes():
    return st.builds(
        lambda c, rows: Zonotope(c, np.array(rows).reshape(len(rows), len(c))),
        c=st.lists(st.floats(-5, 5, allow_nan=False), min_size=1, max_size=3),
        rows=st.lists(st.lists(st.floats(-3, 3), min_size=3, max_size=3), max_size=4),
    ).filter(lambda z: True)


class TestConstruction:
    def test_generator_length_mismatch(self):
        with pytest.raises(ValueError):
            Zonotope([1.0, 2.0], [[1.0, 0.0, 0.0]])

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            Zonotope([np.nan], [[1.0]])
        with pytest.raises(ValueError):
            Zonotope([0.0], [[np.inf]])

    def test_point_zonotope(self):
        z = Zonotope([4.0, -7.0])
        assert z.n_generators == 0
        h = interval_hull(z)
        assert np.array_equal(h.lower, [4.0, -7.0])
        assert np.array_equal(h.upper, [4.0, -7.0])

    def test_arrays_immutable(self):
        with pytest.raises(ValueError):
            EX1.center[0] = 0.0


class TestIntervalHull:
    def test_worked_example(self):
        h = interval_hull(EX1)
        assert np.allclose(h.lower, [1.0, -2.5])
        assert np.allclose(h.upper, [11.0, 4.5])

    def test_matches_corner_enumeration(self, rng):
        for _ in range(50):
            z = random_zonotope(rng)
            corners = corner_points(z)
            h = interval_hull(z)
            assert np.allclose(h.lower, corners.min(axis=0))
            assert np.allclose(h.upper, corners.max(axis=0))

    def test_bounds_are_attained_by_corners(self, rng):
        # The hull is tight: some corner reaches each bound per dimension.
        for _ in range(20):
            z = random_zonotope(rng, max_gens=6)
            corners = corner_points(z)
            h = interval_hull(z)
            for d in range(z.dim):
                assert np.isclose(corners[:, d].min(), h.lower[d])
                assert np.isclose(corners[:, d].max(), h.upper[d])


class TestLinearTransform:
    def test_identity(self):
        out = linear_transform(EX1, np.eye(2), np.zeros(2))
        assert np.array_equal(out.center, EX1.center)
        assert np.array_equal(out.generators, EX1.generators)

    def test_scalar(self):
        z = Zonotope([0.0], [[1.0]])
        out = linear_transform(z, [[2.0]], [1.0])
        assert np.array_equal(out.center, [1.0])
        assert np.array_equal(out.generators, [[2.0]])

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            linear_transform(EX1, np.eye(3), np.zeros(3))
        with pytest.raises(ValueError):
            linear_transform(EX1, np.eye(2), np.zeros(3))

    def test_commutes_with_point_evaluation(self, rng):
        for _ in range(30):
            z = random_zonotope(rng)
            m = int(rng.integers(1, 4))
            W = rng.normal(size=(m, z.dim))
            b = rng.normal(size=m)
            out = linear_transform(z, W, b)
            beta = rng.uniform(-1, 1, (100, z.n_generators))
            assert np.allclose(out.eval(beta), z.eval(beta) @ W.T + b)

    def test_sampled_points_stay_inside(self, rng):
        z = random_zonotope(rng, max_dim=3, max_gens=4)
        W = rng.normal(size=(2, z.dim))
        b = rng.normal(size=2)
        out = linear_transform(z, W, b)
        pts = sample(z, 1000, 5) @ W.T + b
        assert contains_points(out, pts, 1e-9).all()


class TestProject:
    def test_empty_set_is_identity(self):
        out = project(EX1, [])
        assert np.array_equal(out.center, EX1.center)
        assert np.array_equal(out.generators, EX1.generators)

    def test_all_dims_gives_origin(self):
        out = project(EX1, [0, 1])
        assert np.array_equal(out.center, [0.0, 0.0])
        assert not out.generators.any()
        assert out.n_generators == EX1.n_generators

    def test_worked_example_second_dim(self):
        out = project(EX1, [1])
        assert np.array_equal(out.center, [6.0, 0.0])
        assert np.array_equal(out.generators, [[3.0, 0.0], [2.0, 0.0], [0.0, 0.0]])

    def test_out_of_range(self):
        with pytest.raises(IndexError):
            project(EX1, [2])

    def test_idempotent_and_commutes_with_hull(self, rng):
        for _ in range(20):
            z = random_zonotope(rng)
            dims = [d for d in range(z.dim) if rng.random() < 0.5]
            once = project(z, dims)
            twice = project(once, dims)
            assert np.array_equal(once.center, twice.center)
            assert np.array_equal(once.generators, twice.generators)
            h_before = interval_hull(z)
            h_after = interval_hull(once)
            keep = [d for d in range(z.dim) if d not in dims]
            assert np.array_equal(h_before.lower[keep], h_after.lower[keep])
            assert np.array_equal(h_before.upper[keep], h_after.upper[keep])


class TestContainsPoint:
    def test_center_inside(self, rng):
        for _ in range(10):
            z = random_zonotope(rng)
            assert contains_point(z, z.center)

    def test_all_plus_corner_inside(self):
        assert contains_point(EX1, EX1.center + EX1.generators.sum(axis=0))

    def test_point_beyond_hull_outside(self):
        assert not contains_point(EX1, [12.0, 0.0])

    def test_interior_of_rotated_square(self):
        z = Zonotope([0.0, 0.0], [[1.0, 1.0], [1.0, -1.0]])
        assert contains_point(z, [1.5, 0.4])
        assert not contains_point(z, [1.5, 0.6])  # outside despite hull

    def test_tolerance_semantics(self):
        z = Zonotope([0.0], [[1.0]])
        assert contains_point(z, [1.0 + 5e-10], 1e-9)
        assert not contains_point(z, [1.0 + 1e-6], 1e-9)


class TestSample:
    def test_point_zonotope_constant(self):
        z = Zonotope([2.0, 3.0])
        pts = sample(z, 10, 0)
        assert np.array_equal(pts, np.tile([2.0, 3.0], (10, 1)))

    def test_deterministic_given_seed(self):
        a = sample(EX1, 50, 123)
        b = sample(EX1, 50, 123)
        assert np.array_equal(a, b)

    def test_samples_inside_hull_and_set(self, rng):
        z = random_zonotope(rng)
        pts = sample(z, 300, 9)
        h = interval_hull(z)
        assert np.all(pts >= h.lower - 1e-12) and np.all(pts <= h.upper + 1e-12)
        assert contains_points(z, pts, 1e-9).all()


class TestSizeMeasure:
    def test_unit_radius_is_zero(self):
        z = Zonotope([5.0, -3.0], [[1.0, 0.0], [0.0, 1.0]])
        assert size_measure(z) == pytest.approx(0.0)

    def test_worked_example(self):
        assert size_measure(EX1) == pytest.approx(np.log(5.0) + np.log(3.5))

    def test_scaling_all_generators(self, rng):
        for _ in range(10):
            z = random_zonotope(rng, max_gens=4)
            if z.n_generators == 0 or np.any(z.radius() == 0):
                continue
            doubled = Zonotope(z.center, 2.0 * z.generators)
            assert size_measure(doubled) == pytest.approx(
                size_measure(z) + z.dim * np.log(2.0)
            )

    def test_translation_invariant(self, rng):
        z = random_zonotope(rng)
        moved = Zonotope(z.center + 10.0, z.generators)
        assert size_measure(moved) == size_measure(z)

    def test_zero_width_floor_keeps_finite(self):
        z = Zonotope([0.0, 0.0], [[1.0, 0.0]])
        assert np.isfinite(size_measure(z))


class TestScaledVolume:
    def test_box_example(self):
        z = Zonotope([0.0, 0.0], [[1.0, 0.0], [0.0, 2.0]])
        assert scaled_volume(z) == pytest.approx(np.sqrt(8.0))

    @pytest.mark.parametrize("d", [1, 2, 5, 9])
    def test_unit_cube(self, d):
        z = Zonotope(np.zeros(d), 0.5 * np.eye(d))
        assert scaled_volume(z) == pytest.approx(1.0)

    def test_matches_direct_box_volume(self, rng):
        for _ in range(20):
            d = int(rng.integers(1, 5))
            radii = rng.uniform(0.1, 3.0, d)
            z = Zonotope(rng.normal(size=d), np.diag(radii))
            direct = np.prod(2.0 * radii) ** (1.0 / d)
            assert scaled_volume(z) == pytest.approx(direct)

    def test_flat_dimension_gives_zero(self):
        z = Zonotope([0.0, 0.0], [[1.0, 0.0]])
        assert scaled_volume(z) == 0.0


class TestMergeUnion:
    def test_single_zonotope_becomes_its_hull(self):
        u = merge_union([EX1])
        h = interval_hull(EX1)
        assert np.allclose(u.center, 0.5 * (h.lower + h.upper))
        assert np.allclose(np.abs(u.generators).sum(axis=0), 0.5 * (h.upper - h.lower))

    def test_two_points_span_box(self):
        p = Zonotope([0.0, 1.0])
        q = Zonotope([2.0, -1.0])
        u = merge_union([p, q])
        h = interval_hull(u)
        assert np.allclose(h.lower, [0.0, -1.0])
        assert np.allclose(h.upper, [2.0, 1.0])

    def test_empty_list_rejected(self):
        with pytest.raises(ValueError):
            merge_union([])

    def test_contains_every_member(self, rng):
        for _ in range(10):
            d = int(rng.integers(1, 4))
            zs = [
                Zonotope(rng.normal(size=d), rng.normal(size=(int(rng.integers(0, 4)), d)))
                for _ in range(int(rng.integers(1, 5)))
            ]
            u = merge_union(zs)
            for z in zs:
                pts = sample(z, 200, 3)
                assert contains_points(u, pts, 1e-9).all()
            # and the union is the hull envelope, no looser
            h = interval_hull(u)
            lows = np.array([interval_hull(z).lower for z in zs])
            upps = np.array([interval_hull(z).upper for z in zs])
            assert np.allclose(h.lower, lows.min(axis=0))
            assert np.allclose(h.upper, upps.max(axis=0))


@settings(max_examples=40, deadline=None)
@given(
    c=st.lists(st.floats(-5, 5), min_size=2, max_size=2),
    rows=st.lists(
        st.lists(st.floats(-3, 3), min_size=2, max_size=2), min_size=0, max_size=5
    ),
)
def test_hull_contains_every_corner(c, rows):
    z = Zonotope(c, np.array(rows).reshape(len(rows), 2))
    corners = corner_points(z)
    h = interval_hull(z)
    assert np.all(corners >= h.lower - 1e-9)
    assert np.all(corners <= h.upper + 1e-9)


@settings(max_examples=30, deadline=None)
@given(
    c=st.lists(st.floats(-3, 3), min_size=2, max_size=2),
    rows=st.lists(
        st.lists(st.floats(-2, 2), min_size=2, max_size=2), min_size=1, max_size=4
    ),
    beta=st.lists(st.floats(-1, 1), min_size=4, max_size=4),
)
def test_eval_point_is_member(c, rows, beta):
    z = Zonotope(c, np.array(rows).reshape(len(rows), 2))
    p = z.eval(np.array(beta[: z.n_generators]))
    assert contains_point(z, p, 1e-9)


def test_union_contains_helper_rejects_outsiders():
    zs = [Zonotope([0.0], [[1.0]]), Zonotope([5.0], [[0.5]])]
    pts = np.array([[0.5], [5.2], [3.0]])
    assert list(union_contains(zs, pts)) == [True, True, False]

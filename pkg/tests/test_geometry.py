"""Geometry: metric axioms, hull projection vs. dense-grid oracle,
convex-combination reduction."""

import itertools

import numpy as np
import pytest

from eulerinc.geometry import (HullRepresentation, MinNormPointError,
                               PointCloud, caratheodory_reduce, dedup_cloud,
                               dist_point_to_hull, hausdorff_finite,
                               hausdorff_hulls, minkowski_sum, scale_cloud)

TOL = 1e-9


# --- independent oracles -----------------------------------------------------

def brute_hausdorff(a, b):
    """Full double-loop pairwise scan, no vectorization."""
    a = np.atleast_2d(np.asarray(a, dtype=float).T).T
    d_ab = max(min(np.linalg.norm(x - y) for y in b) for x in a)
    d_ba = max(min(np.linalg.norm(x - y) for x in a) for y in b)
    return max(d_ab, d_ba)


def grid_hull_distance(p, support, steps=1000):
    """Distance to the hull by dense barycentric-grid sampling (<= 4 points).

    Returns (value, step): the grid minimum overshoots the true distance by
    at most ~step * diameter. ``steps`` counts subdivisions per barycentric
    coordinate and is throttled for 3- and 4-point supports to keep the
    enumeration finite.
    """
    support = np.asarray(support, dtype=float)
    p = np.asarray(p, dtype=float)
    k = support.shape[0]
    if k == 1:
        return np.linalg.norm(p - support[0]), 0.0
    steps = {2: steps, 3: min(steps, 300), 4: min(steps, 100)}[k]
    fractions = np.linspace(0.0, 1.0, steps + 1)
    best = np.inf
    for combo in itertools.product(fractions, repeat=k - 1):
        total = sum(combo)
        if total > 1.0 + 1e-12:
            continue
        w = np.append(combo, 1.0 - total)
        best = min(best, np.linalg.norm(p - w @ support))
    return best, 1.0 / steps


def random_cloud(rng, dim, max_points=20):
    n = rng.integers(1, max_points + 1)
    return PointCloud(rng.uniform(-2.0, 2.0, size=(n, dim)))


# --- Minkowski algebra -------------------------------------------------------

def test_minkowski_identity():
    c = PointCloud([[1.0, 2.0], [3.0, -1.0]])
    out = minkowski_sum([[0.0, 0.0]], c)
    assert np.allclose(np.sort(out.points, axis=0), np.sort(c.points, axis=0))


def test_minkowski_singletons():
    out = minkowski_sum([[1.0, 0.0]], [[0.0, 1.0]])
    assert out.points.shape == (1, 2)
    assert np.allclose(out.points[0], [1.0, 1.0])


def test_minkowski_1d_enumeration():
    out = minkowski_sum([0.0, 1.0], [0.0, 2.0])
    assert sorted(out.points.ravel()) == [0.0, 1.0, 2.0, 3.0]


def test_minkowski_dimension_mismatch():
    with pytest.raises(ValueError, match="dimension"):
        minkowski_sum([0.0, 1.0], [[0.0, 1.0]])


def test_scale_cloud():
    c = PointCloud([[1.0, 1.0]])
    assert np.allclose(scale_cloud(1.0, c).points, c.points)
    assert np.allclose(scale_cloud(2.0, c).points, [[2.0, 2.0]])
    assert sorted(scale_cloud(0.5, [0.0, 2.0]).points.ravel()) == [0.0, 1.0]
    with pytest.raises(ValueError):
        scale_cloud(0.0, c)
    with pytest.raises(ValueError):
        scale_cloud(-1.0, c)


# --- Hausdorff on finite clouds ----------------------------------------------

def test_hausdorff_identity():
    c = PointCloud([[0.0, 0.0], [1.0, 3.0]])
    assert hausdorff_finite(c, c) == 0.0


def test_hausdorff_singletons():
    assert hausdorff_finite([[0.0, 0.0]], [[1.0, 0.0]]) == 1.0


def test_hausdorff_1d_vs_brute():
    a, b = [0.0, 1.0], [0.0, 2.0]
    assert hausdorff_finite(a, b) == 1.0  # frozen from brute_hausdorff
    assert brute_hausdorff([[0.0], [1.0]], [[0.0], [2.0]]) == 1.0


def test_hausdorff_metric_axioms_random():
    rng = np.random.default_rng(42)
    for _ in range(60):
        dim = int(rng.integers(1, 4))
        a, b, c = (random_cloud(rng, dim) for _ in range(3))
        dab = hausdorff_finite(a, b)
        assert dab == hausdorff_finite(b, a)
        assert dab <= hausdorff_finite(a, c) + hausdorff_finite(c, b) + 1e-12
        assert dab == pytest.approx(brute_hausdorff(a.points, b.points), abs=1e-12)
        assert hausdorff_finite(a, a) == 0.0
        # zero distance iff equal as sets
        if dab <= 1e-12:
            assert hausdorff_finite(dedup_cloud(a), dedup_cloud(b)) <= 1e-12


def test_hausdorff_translation_and_scaling():
    rng = np.random.default_rng(7)
    for _ in range(30):
        dim = int(rng.integers(1, 4))
        a, b = random_cloud(rng, dim), random_cloud(rng, dim)
        v = rng.uniform(-1, 1, dim)
        shifted = hausdorff_finite(PointCloud(a.points + v), PointCloud(b.points + v))
        # translation only reassociates the subtraction; equal up to an ulp
        assert shifted == pytest.approx(hausdorff_finite(a, b), rel=1e-12)
        lam = float(rng.uniform(0.1, 3.0))
        scaled = hausdorff_finite(scale_cloud(lam, a), scale_cloud(lam, b))
        assert scaled == pytest.approx(lam * hausdorff_finite(a, b), rel=1e-12)


# --- hull projection ----------------------------------------------------------

def test_dist_vertex_is_zero():
    support = [[1.0, 0.0], [0.0, 1.0], [2.0, 2.0]]
    for v in support:
        assert dist_point_to_hull(v, support, TOL) <= TOL


def test_dist_to_segment():
    # frozen: dense sampling of the segment gives sqrt(2)/2
    oracle, _ = grid_hull_distance([0.0, 0.0], [[1.0, 0.0], [0.0, 1.0]])
    assert oracle == pytest.approx(0.7071067811865476, abs=1e-6)
    d = dist_point_to_hull([0.0, 0.0], [[1.0, 0.0], [0.0, 1.0]], TOL)
    assert d == pytest.approx(0.7071067811865476, abs=TOL)


def test_dist_interior_point():
    square = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]
    assert dist_point_to_hull([0.5, 0.25], square, TOL) <= TOL


def test_dist_vs_dense_grid_oracle():
    rng = np.random.default_rng(3)
    for _ in range(25):
        k = int(rng.integers(1, 5))
        support = rng.uniform(-1.5, 1.5, size=(k, 2))
        p = rng.uniform(-2.5, 2.5, size=2)
        fast = dist_point_to_hull(p, support, TOL)
        slow, step = grid_hull_distance(p, support, steps=1000)
        # the grid oracle overshoots by at most ~its resolution times diameter
        diam = max(np.linalg.norm(a - b) for a in support for b in support) if k > 1 else 0.0
        grid_gap = max(2.0 * step * diam, TOL)
        assert fast <= slow + TOL
        assert fast >= slow - grid_gap - TOL


def test_dist_convergence_error_carries_best():
    err = MinNormPointError("cap", best_value=1.25)
    assert err.best_value == 1.25


# --- Hausdorff between hulls ---------------------------------------------------

def test_hulls_identity():
    c = [[0.0, 0.0], [1.0, 0.0], [0.5, 1.0]]
    assert hausdorff_hulls(c, c, TOL) <= TOL


def test_hulls_1d_intervals():
    # co{0,1} = [0,1] vs co{0,3} = [0,3]: endpoint gap 2
    assert hausdorff_hulls([0.0, 1.0], [0.0, 3.0], TOL) == pytest.approx(2.0, abs=TOL)


def test_hulls_square_vs_centroid():
    square = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]
    d = hausdorff_hulls(square, [[0.5, 0.5]], TOL)
    assert d == pytest.approx(np.sqrt(2.0) / 2.0, abs=TOL)


def test_hull_contraction_random():
    rng = np.random.default_rng(11)
    for _ in range(40):
        dim = int(rng.integers(1, 4))
        a, b = random_cloud(rng, dim), random_cloud(rng, dim)
        assert hausdorff_hulls(a, b, TOL) <= hausdorff_finite(a, b) + TOL


# --- convex-combination reduction ----------------------------------------------

def test_caratheodory_small_input_unchanged():
    support = [[0.0, 0.0], [1.0, 0.0]]
    rep = caratheodory_reduce([0.5, 0.0], support, [0.5, 0.5])
    assert len(rep.support) <= 3
    assert np.linalg.norm(rep.point() - [0.5, 0.0]) <= 1e-9


def test_caratheodory_square():
    square = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]
    rep = caratheodory_reduce([0.5, 0.5], square, [0.25] * 4)
    assert len(rep.support) <= 3
    assert np.all(rep.weights >= 0)
    assert rep.weights.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.linalg.norm(rep.point() - [0.5, 0.5]) <= 1e-9


def test_caratheodory_1d():
    rep = caratheodory_reduce([0.5], [0.0, 0.5, 1.0], [0.25, 0.5, 0.25])
    assert len(rep.support) <= 2
    assert abs(rep.point()[0] - 0.5) <= 1e-9


def test_caratheodory_rejects_bad_weights():
    support = [[0.0, 0.0], [1.0, 0.0]]
    with pytest.raises(ValueError, match="simplex"):
        caratheodory_reduce([0.5, 0.0], support, [0.7, 0.7])
    with pytest.raises(ValueError, match="simplex"):
        caratheodory_reduce([0.5, 0.0], support, [1.5, -0.5])
    with pytest.raises(ValueError, match="reconstruct"):
        caratheodory_reduce([5.0, 5.0], support, [0.5, 0.5])


def test_caratheodory_random():
    rng = np.random.default_rng(23)
    for _ in range(50):
        dim = int(rng.integers(1, 4))
        n = int(rng.integers(dim + 2, 12))
        pts = rng.uniform(-2, 2, size=(n, dim))
        w = rng.dirichlet(np.ones(n))
        target = w @ pts
        rep = caratheodory_reduce(target, pts, w)
        assert len(rep.support) <= dim + 1
        assert np.all(rep.weights >= 0)
        assert rep.weights.sum() == pytest.approx(1.0, abs=1e-12)
        assert np.linalg.norm(rep.point() - target) <= 1e-9


def test_hull_representation_validation():
    support = PointCloud([[0.0], [1.0]])
    with pytest.raises(ValueError):
        HullRepresentation(support, np.array([0.8, 0.8]))
    rep = HullRepresentation(support, np.array([0.25, 0.75]))
    assert rep.point()[0] == pytest.approx(0.75)


def test_cloud_validation():
    with pytest.raises(ValueError):
        PointCloud(np.zeros((0, 2)))
    with pytest.raises(ValueError):
        PointCloud([[np.inf, 0.0]])

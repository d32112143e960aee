import numpy as np
import pytest

from vtreg.errors import EmptyCloud
from vtreg.spatial import SpatialIndex, hausdorff


def brute_nearest(points, q):
    """Linear-scan oracle with the lowest-index tie rule."""
    d2 = ((points - q) ** 2).sum(axis=1)
    best = int(np.argmin(d2))  # argmin returns the first minimum
    return best, float(np.sqrt(d2[best]))


def brute_hausdorff(a, b):
    """O(n*m) oracle working in squared distances, rooted once."""
    d2 = ((a[:, None, :] - b[None, :, :]) ** 2).sum(axis=2)
    return float(np.sqrt(max(d2.min(axis=1).max(), d2.min(axis=0).max())))


def test_nearest_matches_linear_scan():
    rng = np.random.default_rng(0)
    for _ in range(30):
        pts = rng.normal(size=(rng.integers(1, 40), 3)) * 10.0
        index = SpatialIndex(pts)
        for _ in range(10):
            q = rng.normal(size=3) * 10.0
            got_i, got_d = index.nearest(q)
            want_i, want_d = brute_nearest(pts, q)
            assert got_i == want_i
            assert got_d == want_d


def test_nearest_tie_goes_to_lowest_index():
    # The query sits exactly midway, and a duplicate pair doubles the tie.
    pts = np.array([[2.0, 0.0, 0.0], [0.0, 0.0, 0.0], [2.0, 0.0, 0.0]])
    i, d = SpatialIndex(pts).nearest([1.0, 0.0, 0.0])
    assert i == 0
    assert d == 1.0
    dup = np.array([[5.0, 5.0, 5.0], [5.0, 5.0, 5.0]])
    i, d = SpatialIndex(dup).nearest([5.0, 5.0, 4.0])
    assert i == 0
    assert d == 1.0


def test_batch_query_matches_single():
    rng = np.random.default_rng(1)
    pts = rng.normal(size=(50, 3))
    index = SpatialIndex(pts)
    queries = rng.normal(size=(20, 3))
    dist, idx = index.query(queries)
    for k, q in enumerate(queries):
        _, want_d = brute_nearest(pts, q)
        assert abs(dist[k] - want_d) < 1e-12
        assert ((pts[idx[k]] - q) ** 2).sum() == want_d ** 2 or dist[k] == want_d


def test_min_squared_distances_bit_equal_to_brute_force():
    rng = np.random.default_rng(2)
    for _ in range(20):
        pts = rng.normal(size=(rng.integers(1, 60), 3)) * 5.0
        queries = rng.normal(size=(rng.integers(1, 40), 3)) * 5.0
        got = SpatialIndex(pts).min_squared_distances(queries)
        want = ((queries[:, None, :] - pts[None, :, :]) ** 2).sum(axis=2).min(axis=1)
        assert np.array_equal(got, want)


def test_query_knn_sorted():
    rng = np.random.default_rng(3)
    pts = rng.normal(size=(30, 3))
    dist, idx = SpatialIndex(pts).query_knn(pts, k=4)
    assert dist.shape == (30, 4)
    assert (np.diff(dist, axis=1) >= 0).all()
    # Each point is its own nearest neighbor at distance zero.
    assert np.array_equal(idx[:, 0], np.arange(30))


def test_empty_index_rejected():
    with pytest.raises(EmptyCloud):
        SpatialIndex(np.empty((0, 3)))


def test_hausdorff_matches_brute_force():
    rng = np.random.default_rng(4)
    for _ in range(60):
        a = rng.normal(size=(rng.integers(1, 50), 3)) * rng.uniform(0.5, 20.0)
        b = rng.normal(size=(rng.integers(1, 50), 3)) * rng.uniform(0.5, 20.0)
        assert hausdorff(a, b) == brute_hausdorff(a, b)


def test_hausdorff_basic_properties():
    rng = np.random.default_rng(5)
    a = rng.normal(size=(25, 3))
    b = rng.normal(size=(35, 3))
    assert hausdorff(a, a) == 0.0
    assert hausdorff(a, b) == hausdorff(b, a)
    # A translated copy is off by exactly the step length: the extreme point
    # along the step direction has no closer partner than its own copy.
    step = np.array([3.0, -4.0, 12.0])
    assert abs(hausdorff(a, a + step) - np.linalg.norm(step)) < 1e-12


def test_hausdorff_rejects_empty():
    pts = np.zeros((3, 3))
    with pytest.raises(EmptyCloud):
        hausdorff(pts, np.empty((0, 3)))
    with pytest.raises(EmptyCloud):
        hausdorff(np.empty((0, 3)), pts)

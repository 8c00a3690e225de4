import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from prinsurf.core import DegeneracyError, PointCloud3
from prinsurf.init_pca import center_points, normalize_unit_square, pca_scores
from prinsurf.simgen import SimCase, generate_case


def test_center_two_points():
    cc = center_points(PointCloud3([[1, 1, 1], [3, 3, 3]]))
    np.testing.assert_allclose(cc.centroid, [2, 2, 2])
    np.testing.assert_allclose(cc.centered, [[-1, -1, -1], [1, 1, 1]])


def test_center_is_idempotent():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(50, 3))
    X -= X.mean(axis=0)
    cc = center_points(PointCloud3(X))
    np.testing.assert_allclose(cc.centroid, 0, atol=1e-15)
    np.testing.assert_allclose(cc.centered, X, atol=1e-15)


def test_center_case3_column_means():
    cloud, _ = generate_case(SimCase(3, 6000, 1000, seed=3))
    cc = center_points(cloud)
    scale = np.abs(cloud.points).max()
    # independent recomputation of the means with math.fsum
    import math

    for k in range(3):
        assert abs(math.fsum(cc.centered[:, k]) / cloud.n) < 1e-10 * scale


def test_planar_cloud():
    rng = np.random.default_rng(1)
    pts = np.column_stack([rng.normal(0, 3, 200), rng.normal(0, 1, 200), np.zeros(200)])
    s = pca_scores(center_points(PointCloud3(pts)))
    assert s.singular_values[2] < 1e-10 * s.singular_values[0]
    assert abs(abs(s.axes[0, 0]) - 1) < 1e-2


def test_collinear_is_degenerate():
    t = np.linspace(-1, 1, 30)
    with pytest.raises(DegeneracyError):
        pca_scores(center_points(PointCloud3(np.column_stack([t, t, t]))))


def test_reconstruction_random_cloud():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(1000, 3)) * [3, 2, 1]
    cc = center_points(PointCloud3(X))
    U, s, Vt = np.linalg.svd(cc.centered, full_matrices=False)
    assert np.linalg.norm(U * s @ Vt - cc.centered) / np.linalg.norm(cc.centered) < 1e-8
    sc = pca_scores(cc)
    assert np.all(np.diff(sc.singular_values) <= 0)
    # scores equal the projection on the (sign-fixed) axes
    np.testing.assert_allclose(sc.scores, cc.centered @ sc.axes.T, atol=1e-10)
    gram = sc.scores.T @ sc.scores
    assert abs(gram[0, 1]) < 1e-8 * np.sqrt(gram[0, 0] * gram[1, 1])


def test_sign_convention():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(100, 3)) * [3, 2, 1]
    a = pca_scores(center_points(PointCloud3(X))).scores
    b = pca_scores(center_points(PointCloud3(-X))).scores
    for S in (a, b):
        for k in range(2):
            j = np.argmax(np.abs(S[:, k]))
            assert S[j, k] > 0
    np.testing.assert_allclose(np.abs(a), np.abs(b), atol=1e-10)


def test_row_permutation_equivariance():
    rng = np.random.default_rng(4)
    X = rng.normal(size=(80, 3)) * [3, 2, 1]
    perm = rng.permutation(80)
    a = pca_scores(center_points(PointCloud3(X))).scores
    b = pca_scores(center_points(PointCloud3(X[perm]))).scores
    np.testing.assert_allclose(a[perm], b, atol=1e-10)


def test_normalize_min_max():
    T = normalize_unit_square(np.array([[2.0, 0.0], [4.0, 1.0], [6.0, 0.5]]))
    np.testing.assert_allclose(T.coords[:, 0], [0, 0.5, 1])
    np.testing.assert_allclose(T.coords[:, 1], [0, 1, 0.5])


def test_normalize_constant_column():
    with pytest.raises(DegeneracyError):
        normalize_unit_square(np.array([[1.0, 0.0], [1.0, 1.0], [1.0, 2.0]]))


@settings(max_examples=50, deadline=None)
@given(
    arrays(
        np.float64,
        st.tuples(st.integers(3, 40), st.just(2)),
        elements=st.floats(-1e3, 1e3, allow_nan=False),
    )
)
def test_normalize_idempotent(S):
    span = S.max(axis=0) - S.min(axis=0)
    if np.any(span < 1e-6):
        return
    once = normalize_unit_square(S).coords
    twice = normalize_unit_square(once).coords
    assert once.min() >= 0 and once.max() <= 1
    np.testing.assert_allclose(once.min(axis=0), 0)
    np.testing.assert_allclose(once.max(axis=0), 1)
    np.testing.assert_allclose(twice, once, atol=1e-12)

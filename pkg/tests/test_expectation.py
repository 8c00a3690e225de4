import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from prinsurf.core import FitConfig, Param2
from prinsurf.expectation import (
    GridIndex,
    NeighborSet,
    find_neighbors,
    kernel_weights,
    local_average_all,
)
from prinsurf.simgen import SimCase, generate_case


def brute_neighbors(T, i, r):
    out = []
    for j in range(len(T)):
        dx = T[j][0] - T[i][0]
        dy = T[j][1] - T[i][1]
        if dx * dx + dy * dy <= r * r:
            out.append(j)
    return out


def brute_average(X, T, i, r, h):
    nb = brute_neighbors(T, i, r)
    w = [math.exp(-((T[j][0] - T[i][0]) ** 2 + (T[j][1] - T[i][1]) ** 2) / h) for j in nb]
    s = math.fsum(w)
    return [math.fsum(w[k] * X[j][d] for k, j in enumerate(nb)) / s for d in range(3)]


def test_far_point_excluded():
    T = Param2([[0, 0], [1, 1]])
    assert find_neighbors(T, 0, 0.5).indices.tolist() == [0]


def test_both_within_radius():
    T = Param2([[0, 0], [0, 0.3], [0, 0.6]])
    assert find_neighbors(T, 1, 0.35).indices.tolist() == [0, 1, 2]


def test_neighbors_match_brute_force():
    rng = np.random.default_rng(0)
    T = rng.uniform(size=(1000, 2))
    P = Param2(T)
    idx = GridIndex(T, 0.15)
    for i in range(1000):
        assert find_neighbors(P, i, 0.15, idx).indices.tolist() == brute_neighbors(T, i, 0.15)


def test_boundary_distance_is_inclusive():
    T = Param2([[0.0, 0.0], [0.25, 0.0], [0.5, 0.0]])
    assert find_neighbors(T, 0, 0.25).indices.tolist() == [0, 1]


def test_single_neighbor_weight_one():
    T = Param2([[0.2, 0.2], [0.9, 0.9]])
    w = kernel_weights(T, 0, NeighborSet(np.array([0]), 0), 0.01)
    assert w.weights.tolist() == [1.0]


def test_equidistant_neighbors_share_weight():
    T = Param2([[0.5, 0.5], [0.6, 0.5], [0.5, 0.4]])
    w = kernel_weights(T, 0, find_neighbors(T, 0, 0.2), 0.01)
    assert w.weights[1] == pytest.approx(w.weights[2], rel=1e-14)
    assert w.weights[0] > w.weights[1]


def test_weights_against_formula():
    T = Param2([[0, 0], [0.1, 0], [0, 0.2]])
    w = kernel_weights(T, 0, NeighborSet(np.array([0, 1, 2]), 0), 0.01)
    # 1, e^-1, e^-4 normalized, evaluated independently
    expected = [0.7213991842739687, 0.26538792877224193, 0.013212886953789414]
    np.testing.assert_allclose(w.weights, expected, rtol=1e-12)
    assert w.dense().sum() == pytest.approx(1.0, abs=1e-12)


def test_tiny_bandwidth_does_not_underflow():
    T = Param2([[0, 0], [0.1, 0], [0, 0.2]])
    w = kernel_weights(T, 1, NeighborSet(np.array([0, 1, 2]), 1), 1e-8)
    assert np.isfinite(w.weights).all()
    assert w.weights[1] == 1.0


def test_identical_points_average_to_themselves():
    rng = np.random.default_rng(1)
    X = np.tile([1.0, -2.0, 3.0], (50, 1))
    T = Param2(rng.uniform(size=(50, 2)))
    np.testing.assert_allclose(local_average_all(X, T, FitConfig()), X, rtol=1e-15)


def test_small_bandwidth_limit_returns_self():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(60, 3))
    T = Param2(rng.uniform(size=(60, 2)))
    out = local_average_all(X, T, FitConfig(h=1e-9))
    np.testing.assert_allclose(out, X, atol=1e-12)


def test_isolated_point_uses_k_nearest():
    T = np.vstack([[[0.0, 0.0]], np.random.default_rng(3).uniform(0.6, 1.0, size=(20, 2))])
    X = np.arange(63, dtype=float).reshape(21, 3)
    cfg = FitConfig(r=0.1, h=10.0, k_fallback=4)
    out = local_average_all(X, Param2(T), cfg)
    d = np.hypot(T[:, 0], T[:, 1])
    nearest = np.argsort(d)[:4]
    w = np.exp(-d[nearest] ** 2 / 10.0)
    np.testing.assert_allclose(out[0], (w / w.sum()) @ X[nearest], rtol=1e-12)


def test_case1_local_averages_match_oracle():
    cloud, _ = generate_case(SimCase(1, 6000, 1000, seed=11))
    from prinsurf.init_pca import initial_params

    cc, T = initial_params(cloud)
    cfg = FitConfig()
    out = local_average_all(cc.centered, T, cfg)
    X = cc.centered.tolist()
    Tl = T.coords.tolist()
    for i in range(0, 1000, 7):
        np.testing.assert_allclose(out[i], brute_average(X, Tl, i, cfg.r, cfg.h), rtol=1e-10, atol=1e-12)
    # every average is a convex combination of points within radius ~1.6 of the axis
    assert np.hypot(out[:, 0], out[:, 1]).max() < 1.0 + 4 * 0.15


def test_scalars_averaged_with_same_weights():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(100, 3))
    s = rng.uniform(size=100)
    T = Param2(rng.uniform(size=(100, 2)))
    Xlm, slm = local_average_all(X, T, FitConfig(), scalars=s)
    X2 = np.column_stack([s, s, s])
    np.testing.assert_allclose(local_average_all(X2, T, FitConfig())[:, 0], slm, rtol=1e-13)
    np.testing.assert_allclose(local_average_all(X, T, FitConfig()), Xlm)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(5, 80))
def test_convexity_and_equivariance(seed, n):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, 3))
    T = rng.uniform(size=(n, 2))
    cfg = FitConfig(r=0.3, h=0.02)
    out = local_average_all(X, Param2(T), cfg)
    lo, hi = X.min(axis=0), X.max(axis=0)
    assert np.all(out >= lo - 1e-12) and np.all(out <= hi + 1e-12)
    perm = rng.permutation(n)
    out_p = local_average_all(X[perm], Param2(T[perm]), cfg)
    np.testing.assert_allclose(out_p, out[perm], rtol=1e-12, atol=1e-14)


def test_large_bandwidth_gives_plain_mean():
    rng = np.random.default_rng(6)
    X = rng.normal(size=(200, 3))
    T = rng.uniform(size=(200, 2))
    out = local_average_all(X, Param2(T), FitConfig(r=0.2, h=1e9))
    for i in (0, 50, 199):
        nb = brute_neighbors(T, i, 0.2)
        np.testing.assert_allclose(out[i], X[nb].mean(axis=0), rtol=1e-7, atol=1e-9)

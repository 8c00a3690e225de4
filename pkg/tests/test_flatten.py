import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from prinsurf.core import EmptyMapError, FitConfig, Param2, ScalarMap2D
from prinsurf.fitloop import fit_principal_surface
from prinsurf.flatten import FlattenConfig, flatten_scalar_field, image_to_map, map_to_image
from prinsurf.simgen import SimCase, generate_case


def oracle_cell(T, s, c, r, h):
    num, den = [], []
    for (t1, t2), v in zip(T, s):
        d2 = (t1 - c[0]) ** 2 + (t2 - c[1]) ** 2
        if d2 <= r * r:
            w = math.exp(-d2 / h)
            num.append(w * v)
            den.append(w)
    return len(den), (math.fsum(num) / math.fsum(den) if den else None)


@pytest.fixture(scope="module")
def projected_case3():
    cloud, _ = generate_case(SimCase(3, 6000, 1000, seed=7))
    res = fit_principal_surface(cloud, FitConfig(seed=7))
    return res.params


def uniform_params(n, seed):
    return Param2(np.random.default_rng(seed).uniform(size=(n, 2)))


def test_default_grid_is_100():
    assert FlattenConfig().g == 100
    assert FlattenConfig().smooth_r == FitConfig().r
    assert FlattenConfig().smooth_h == FitConfig().h


def test_constant_scalar_gives_constant_map():
    T = uniform_params(2000, 0)
    m = flatten_scalar_field(T, np.full(2000, 0.5), FlattenConfig(g=30))
    assert m.mask.all()
    np.testing.assert_allclose(m.values[m.mask], 0.5, rtol=1e-14)


def test_left_half_support_masks_right_cells():
    T = np.random.default_rng(1).uniform(size=(1500, 2))
    T[:, 0] *= 0.5
    cfg = FlattenConfig(g=40)
    m = flatten_scalar_field(Param2(T), np.ones(1500), cfg)
    centers = (np.arange(40) + 0.5) / 40
    assert not m.mask[centers > 0.5 + cfg.smooth_r].any()
    assert m.mask[centers < 0.5].all()


def test_t1_ramp_against_oracle(projected_case3):
    T = projected_case3.coords
    s = T[:, 0].copy()
    cfg = FlattenConfig()
    m = flatten_scalar_field(projected_case3, s, cfg)
    assert m.values.shape == (100, 100)
    centers = (np.arange(100) + 0.5) / 100
    Tl, sl = T.tolist(), s.tolist()
    worst = 0.0
    for a in range(0, 100, 3):
        for b in range(0, 100, 3):
            count, v = oracle_cell(Tl, sl, (centers[a], centers[b]), cfg.smooth_r, cfg.smooth_h)
            assert m.mask[a, b] == (count >= cfg.min_support)
            if m.mask[a, b]:
                assert m.values[a, b] == pytest.approx(v, rel=1e-12, abs=1e-14)
    for a in range(100):
        row = m.values[a][m.mask[a]]
        if len(row):
            worst = max(worst, np.abs(row - centers[a]).max())
    assert worst < 0.05


def test_map_to_image_ordering():
    v = np.array([[1.0, 2.0], [3.0, 4.0]])  # v[a, b] at t1 index a, t2 index b
    img = map_to_image(ScalarMap2D(v, np.ones((2, 2), dtype=bool)))
    # top row is the larger t2, left column the smaller t1
    np.testing.assert_array_equal(img, [[2.0, 4.0], [1.0, 3.0]])
    assert img.ravel().tolist() == [2.0, 4.0, 1.0, 3.0]


def test_fully_masked_image_is_sentinel():
    img = map_to_image(ScalarMap2D(np.zeros((3, 3)), np.zeros((3, 3), dtype=bool)))
    assert np.isnan(img).all()


def test_image_round_trip():
    rng = np.random.default_rng(2)
    v = rng.uniform(size=(7, 7))
    mask = rng.uniform(size=(7, 7)) > 0.3
    m = ScalarMap2D(np.where(mask, v, 0.0), mask)
    back = image_to_map(map_to_image(m))
    np.testing.assert_array_equal(back.mask, m.mask)
    np.testing.assert_array_equal(back.values[mask], m.values[mask])


def test_all_masked_is_error():
    T = Param2(np.full((5, 2), 0.5))
    with pytest.raises(EmptyMapError):
        flatten_scalar_field(T, np.ones(5), FlattenConfig(g=10, min_support=6))


def test_length_mismatch():
    from prinsurf.core import ShapeError

    with pytest.raises(ShapeError):
        flatten_scalar_field(uniform_params(10, 3), np.ones(9))


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(20, 300))
def test_range_preservation(seed, n):
    rng = np.random.default_rng(seed)
    T = Param2(rng.uniform(size=(n, 2)))
    s = rng.normal(size=n)
    m = flatten_scalar_field(T, s, FlattenConfig(g=12, min_support=1))
    vals = m.values[m.mask]
    assert vals.min() >= s.min() - 1e-12 and vals.max() <= s.max() + 1e-12


def test_mask_monotone_in_min_support():
    T = uniform_params(200, 4)
    s = np.random.default_rng(5).uniform(size=200)
    masks = [flatten_scalar_field(T, s, FlattenConfig(g=25, min_support=k)).mask for k in (1, 3, 8, 20)]
    for lo, hi in zip(masks, masks[1:]):
        assert not (hi & ~lo).any()
    assert masks[-1].sum() < masks[0].sum()


def test_variance_decreases_with_radius():
    T = uniform_params(1500, 6)
    s = np.sin(8 * T.coords[:, 0]) + np.random.default_rng(7).normal(0, 0.2, 1500)
    variances = []
    for r in (0.1, 0.2, 0.4):
        m = flatten_scalar_field(T, s, FlattenConfig(g=30, smooth_r=r, smooth_h=(r / 2) ** 2))
        variances.append(m.values[m.mask].var())
    assert variances[0] > variances[1] > variances[2]

"""Synthetic point clouds for the four benchmark surfaces, with ground truth.

Case 1  open-seam cylinder of radius 1, multiplicative normal radial noise
Case 2  negated, scaled Himmelblau surface with normal height noise
Case 3  flat strip that bends over into a half circle ("carpet")
Case 4  a stretched digit "5" profile
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.spatial import cKDTree

from .core import PointCloud3, SurfaceModel
from .tps import eval_surface

CASE_IDS = (1, 2, 3, 4)


@dataclass(frozen=True)
class SimCase:
    case_id: int
    i_total: int = 6000
    sample: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.case_id not in CASE_IDS:
            raise ValueError(f"case_id must be one of {CASE_IDS}, got {self.case_id}")
        if not 0 < self.sample <= self.i_total:
            raise ValueError("need 0 < sample <= i_total")


@dataclass(frozen=True)
class GroundTruth:
    truth_fn: Callable[[np.ndarray], np.ndarray]
    dense_truth: np.ndarray


def cylinder_point(theta, eps, z):
    theta, eps, z = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (theta, eps, z)))
    return np.stack([np.cos(theta) * (1 + eps), np.sin(theta) * (1 + eps), z], axis=-1)


def himmelblau(z1, z2):
    return (z1**2 + z2 - 11) ** 2 + (z1 + z2**2 - 7) ** 2


def himmelblau_point(z1, z2, eps):
    z1, z2, eps = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (z1, z2, eps)))
    return np.stack([z1, z2, -(himmelblau(z1, z2) + eps) / 100.0], axis=-1)


def carpet_profile(u):
    """Case-3 cross-section at arclength u in [0, 2 + pi]: a flat run of
    length 2 followed by a half circle of radius 1 centred at (2, -1)."""
    u = np.asarray(u, dtype=float)
    theta = np.pi / 2 - (u - 2.0)
    flat = u <= 2.0
    return np.stack(
        [np.where(flat, u, np.cos(theta) + 2.0), np.where(flat, 0.0, -1.0 + np.sin(theta))],
        axis=-1,
    )


# Case-4 segment boundaries in twentieths of I: 3/10, 1.5/10, 1.5/10, 2.5/10, 1.5/10
_DIGIT_BOUNDS = (0, 6, 9, 12, 17, 20)
_DIGIT_LENGTHS = (1.0, 1.0, 0.5, np.pi / 2, 0.5)


def digit_profile(u):
    """Case-4 cross-section at arclength u along the "5" stroke, drawn as one
    continuous pen path starting at the free end of the top bar."""
    u = np.asarray(u, dtype=float)
    ends = np.cumsum(_DIGIT_LENGTHS)
    seg = np.searchsorted(ends, u, side="left").clip(0, 4)
    s = u - np.concatenate([[0.0], ends])[seg]
    theta = np.pi / 2 - 2.0 * s  # arc of radius 0.5 runs from (0.5, -1) to (0.5, -2)
    z1 = np.select(
        [seg == 0, seg == 1, seg == 2, seg == 3, seg == 4],
        [1.0 - s, np.zeros_like(s), s, 0.5 + 0.5 * np.cos(theta), 0.5 - s],
    )
    z3 = np.select(
        [seg == 0, seg == 1, seg == 2, seg == 3, seg == 4],
        [np.zeros_like(s), -s, -np.ones_like(s), -1.5 + 0.5 * np.sin(theta), -2 * np.ones_like(s)],
    )
    return np.stack([z1, z3], axis=-1)


def _segment_bounds(n: int, twentieths) -> list[int]:
    return [n * k // 20 for k in twentieths]


def draw_case(case_id: int, n: int, rng: np.random.Generator):
    """Draw `n` points of a case in generation order.

    Returns ``(clean, noisy, segment)``: the noiseless surface points, the
    observed points and a per-point segment label (0 for single-piece cases).
    """
    seg = np.zeros(n, dtype=int)
    if case_id == 1:
        theta = rng.uniform(0.0, 2 * np.pi - 0.5, n)
        eps = rng.normal(0.0, 0.15, n)
        z = rng.uniform(-3.0, 3.0, n)
        return cylinder_point(theta, 0.0, z), cylinder_point(theta, eps, z), seg
    if case_id == 2:
        z1 = rng.uniform(-5.0, 5.0, n)
        z2 = rng.uniform(-5.0, 5.0, n)
        eps = rng.normal(0.0, 50.0, n)
        return himmelblau_point(z1, z2, 0.0), himmelblau_point(z1, z2, eps), seg
    if case_id == 3:
        half = n // 2
        seg[half:] = 1
        z1 = np.empty(n)
        z3 = np.empty(n)
        z1[:half] = rng.uniform(0.0, 2.0, half)
        z3[:half] = 0.0
        theta = rng.uniform(-np.pi / 2, np.pi / 2, n - half)
        z1[half:] = np.cos(theta) + 2.0
        z3[half:] = -1.0 + np.sin(theta)
        z2 = rng.uniform(0.0, 10.0, n)
        eps = rng.uniform(-0.4, 0.4, n)
        clean = np.column_stack([z1, z2, z3])
        return clean, clean + np.column_stack([0 * eps, 0 * eps, eps]), seg
    if case_id == 4:
        b = _segment_bounds(n, _DIGIT_BOUNDS)
        z1 = np.empty(n)
        z3 = np.empty(n)
        for k in range(5):
            lo, hi = b[k], b[k + 1]
            seg[lo:hi] = k
            m = hi - lo
            if k == 0:
                z1[lo:hi] = rng.uniform(0.0, 1.0, m)
                z3[lo:hi] = 0.0
            elif k == 1:
                z1[lo:hi] = 0.0
                z3[lo:hi] = rng.uniform(-1.0, 0.0, m)
            elif k == 2:
                z1[lo:hi] = rng.uniform(0.0, 0.5, m)
                z3[lo:hi] = -1.0
            elif k == 3:
                theta = rng.uniform(-np.pi / 2, np.pi / 2, m)
                z1[lo:hi] = 0.5 + 0.5 * np.cos(theta)
                z3[lo:hi] = -1.5 + 0.5 * np.sin(theta)
            else:
                z1[lo:hi] = rng.uniform(0.0, 0.5, m)
                z3[lo:hi] = -2.0
        z2 = rng.uniform(0.0, 5.0, n)
        eps = rng.uniform(-0.15, 0.15, n)
        clean = np.column_stack([z1, z2, z3])
        noisy = np.column_stack([z1 + eps, z2, z3 + eps])
        return clean, noisy, seg
    raise ValueError(f"unknown case {case_id}")


def _profile_sheet(profile, length: float, width: tuple, nu: int, nv: int) -> np.ndarray:
    u = np.linspace(0.0, length, nu)
    v = np.linspace(width[0], width[1], nv)
    prof = profile(u)
    U, V = np.meshgrid(np.arange(nu), v, indexing="ij")
    return np.column_stack([prof[U.ravel(), 0], V.ravel(), prof[U.ravel(), 1]])


def ground_truth(case_id: int, density: int = 1) -> GroundTruth:
    """Noiseless surface for a case; `density` scales the dense sampling
    (1 gives at least 1e4 points, spacing <= 0.025 in latent units)."""
    k = max(1, int(density))
    if case_id == 1:
        fn = lambda lat: cylinder_point(lat[..., 0], 0.0, lat[..., 1])  # noqa: E731
        th = np.linspace(0.0, 2 * np.pi - 0.5, 240 * k)
        z = np.linspace(-3.0, 3.0, 240 * k)
        A, B = np.meshgrid(th, z, indexing="ij")
        dense = cylinder_point(A.ravel(), 0.0, B.ravel())
    elif case_id == 2:
        fn = lambda lat: himmelblau_point(lat[..., 0], lat[..., 1], 0.0)  # noqa: E731
        g = np.linspace(-5.0, 5.0, 401 * k)
        A, B = np.meshgrid(g, g, indexing="ij")
        dense = himmelblau_point(A.ravel(), B.ravel(), 0.0)
    elif case_id == 3:
        def fn(lat):
            p = carpet_profile(lat[..., 0])
            return np.stack([p[..., 0], lat[..., 1], p[..., 1]], axis=-1)
        dense = _profile_sheet(carpet_profile, 2 + np.pi, (0.0, 10.0), 210 * k, 400 * k)
    elif case_id == 4:
        def fn(lat):
            p = digit_profile(lat[..., 0])
            return np.stack([p[..., 0], lat[..., 1], p[..., 1]], axis=-1)
        length = float(sum(_DIGIT_LENGTHS))
        dense = _profile_sheet(digit_profile, length, (0.0, 5.0), 220 * k, 200 * k)
    else:
        raise ValueError(f"unknown case {case_id}")
    return GroundTruth(fn, dense)


def generate_case(case: SimCase) -> tuple[PointCloud3, GroundTruth]:
    rng = np.random.default_rng(case.seed)
    _, noisy, _ = draw_case(case.case_id, case.i_total, rng)
    keep = np.sort(rng.choice(case.i_total, size=case.sample, replace=False))
    return PointCloud3(noisy[keep]), ground_truth(case.case_id)


def rmse_to_truth(
    model: SurfaceModel,
    truth: GroundTruth,
    n_eval: int = 100,
    border: float = 0.05,
    offset: Optional[np.ndarray] = None,
) -> float:
    """Root mean square distance from the surface, sampled on an
    n_eval x n_eval lattice over [border, 1 - border]^2, to the nearest dense
    ground-truth point.  `offset` is added to surface points first (use the
    fit centroid for models in centred coordinates)."""
    if n_eval < 100:
        raise ValueError("n_eval must be >= 100")
    g = np.linspace(border, 1.0 - border, n_eval)
    A, B = np.meshgrid(g, g, indexing="ij")
    pts = eval_surface(model, np.column_stack([A.ravel(), B.ravel()]))
    if offset is not None:
        pts = pts + np.asarray(offset, dtype=float)
    d, _ = cKDTree(truth.dense_truth).query(pts)
    return float(np.sqrt(np.mean(d * d)))

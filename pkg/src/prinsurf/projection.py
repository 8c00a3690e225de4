"""Nearest-surface-point parametrization by exhaustive lattice search."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Param2, PointCloud3, SurfaceModel
from .tps import eval_surface_grid, lattice_nodes

# caps the (points x nodes) distance block held in memory at once
_BLOCK = 2_000_000


@dataclass(frozen=True)
class ProjectionResult:
    t_star: np.ndarray
    distance: float
    on_boundary: bool
    node: int


def _sq_dist(X: np.ndarray, F: np.ndarray) -> np.ndarray:
    # explicit per-coordinate sum keeps the float result independent of layout
    d0 = X[:, 0, None] - F[None, :, 0]
    d1 = X[:, 1, None] - F[None, :, 1]
    d2 = X[:, 2, None] - F[None, :, 2]
    return d0 * d0 + d1 * d1 + d2 * d2


def _argmin_last(d: np.ndarray) -> np.ndarray:
    """Per-row index of the minimum, taking the largest index on ties."""
    m = d.shape[1]
    return m - 1 - np.argmin(d[:, ::-1], axis=1)


def _flatten_grid(surface_grid: np.ndarray) -> np.ndarray:
    g = np.asarray(surface_grid, dtype=float)
    return g.reshape(-1, 3) if g.ndim == 3 else g


def _boundary(nodes: np.ndarray) -> np.ndarray:
    return ((nodes == 0.0) | (nodes == 1.0)).any(axis=1)


def project_point(x, surface_grid: np.ndarray, nodes: np.ndarray) -> ProjectionResult:
    """Closest lattice node to `x` on the surface.

    `nodes` must be ordered lexicographically by (t1, t2) and row-aligned with
    the flattened `surface_grid`; ties go to the last (largest) node.
    """
    F = _flatten_grid(surface_grid)
    x = np.asarray(x, dtype=float).reshape(1, 3)
    d = _sq_dist(x, F)
    j = int(_argmin_last(d)[0])
    t = np.asarray(nodes[j], dtype=float)
    return ProjectionResult(t, float(np.sqrt(d[0, j])), bool(_boundary(t[None])[0]), j)


def project_many(points: np.ndarray, surface_grid: np.ndarray, nodes: np.ndarray):
    """Vectorized project_point; returns (node index, distance) arrays."""
    F = _flatten_grid(surface_grid)
    X = np.asarray(points, dtype=float)
    step = max(1, _BLOCK // max(1, len(F)))
    idx = np.empty(len(X), dtype=np.int64)
    dist = np.empty(len(X))
    for s in range(0, len(X), step):
        d = _sq_dist(X[s : s + step], F)
        j = _argmin_last(d)
        idx[s : s + step] = j
        dist[s : s + step] = np.sqrt(d[np.arange(len(j)), j])
    return idx, dist


def project_all(cloud, model: SurfaceModel, n_grid: int):
    """Project every point; returns (Param2, distances, boundary_fraction)."""
    X = cloud.points if isinstance(cloud, PointCloud3) else np.asarray(cloud, dtype=float)
    nodes = lattice_nodes(n_grid)
    grid = eval_surface_grid(model, n_grid)
    idx, dist = project_many(X, grid, nodes)
    T = nodes[idx]
    return Param2(T), dist, float(_boundary(T).mean())

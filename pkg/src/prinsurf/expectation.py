"""Kernel-weighted local averaging over parametrization-space neighbourhoods."""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import FitConfig, Param2


class GridIndex:
    """Uniform-cell spatial hash over 2D points for exact radius queries.

    Cells are slightly wider than the supported query radius, so every point
    within `radius` of a query lies in the query's cell or one of its eight
    neighbours even after rounding in the cell-key computation.
    """

    def __init__(self, coords: np.ndarray, radius: float):
        self.coords = np.asarray(coords, dtype=float)
        self.radius = float(radius)
        self.cell = self.radius * (1.0 + 1e-6)
        keys = np.floor(self.coords / self.cell).astype(np.int64)
        buckets = defaultdict(list)
        for i, (a, b) in enumerate(keys.tolist()):
            buckets[(a, b)].append(i)
        self._buckets = {k: np.array(v, dtype=np.int64) for k, v in buckets.items()}

    def candidates(self, q) -> np.ndarray:
        a = int(np.floor(q[0] / self.cell))
        b = int(np.floor(q[1] / self.cell))
        parts = [
            self._buckets[k]
            for k in ((a + da, b + db) for da in (-1, 0, 1) for db in (-1, 0, 1))
            if k in self._buckets
        ]
        if not parts:
            return np.empty(0, dtype=np.int64)
        return np.concatenate(parts)

    def query(self, q, r: float) -> np.ndarray:
        """Sorted indices of points within Euclidean distance `r` of `q`."""
        if r > self.radius:
            raise ValueError("query radius exceeds the index cell size")
        c = self.candidates(q)
        d = self.coords[c] - np.asarray(q, dtype=float)
        inside = c[d[:, 0] ** 2 + d[:, 1] ** 2 <= r * r]
        inside.sort()
        return inside


@dataclass(frozen=True)
class NeighborSet:
    indices: np.ndarray
    center_index: int


@dataclass(frozen=True)
class WeightVector:
    """Normalized kernel weights, nonzero only on ``indices``."""

    indices: np.ndarray
    weights: np.ndarray
    n: int

    def dense(self) -> np.ndarray:
        w = np.zeros(self.n)
        w[self.indices] = self.weights
        return w


def find_neighbors(
    params: Param2, i: int, r: float, index: Optional[GridIndex] = None
) -> NeighborSet:
    if not r > 0:
        raise ValueError("radius must be > 0")
    T = params.coords
    if index is None:
        index = GridIndex(T, r)
    return NeighborSet(index.query(T[i], r), int(i))


def gaussian_weights(sq_dist: np.ndarray, h: float) -> np.ndarray:
    """exp(-d^2/h) normalized to sum 1, shifted by the largest exponent."""
    e = -np.asarray(sq_dist, dtype=float) / h
    w = np.exp(e - e.max())
    return w / w.sum()


def kernel_weights(params: Param2, i: int, nbrs: NeighborSet, h: float) -> WeightVector:
    if not h > 0:
        raise ValueError("bandwidth must be > 0")
    idx = np.asarray(nbrs.indices)
    if idx.size == 0:
        raise ValueError("empty neighbour set")
    T = params.coords
    d = T[idx] - T[i]
    w = gaussian_weights(d[:, 0] ** 2 + d[:, 1] ** 2, h)
    return WeightVector(idx, w, params.n)


def nearest_k(coords: np.ndarray, q, k: int) -> np.ndarray:
    d = coords - np.asarray(q, dtype=float)
    d2 = d[:, 0] ** 2 + d[:, 1] ** 2
    order = np.argsort(d2, kind="stable")[:k]
    return np.sort(order)


def neighborhoods(params: Param2, r: float, k_fallback: int) -> list[np.ndarray]:
    """Neighbour index arrays for every point, with the k-nearest fallback
    applied to points whose radius neighbourhood is only themselves."""
    T = params.coords
    index = GridIndex(T, r)
    out = []
    for i in range(T.shape[0]):
        nb = index.query(T[i], r)
        if nb.size <= 1:
            nb = nearest_k(T, T[i], k_fallback)
        out.append(nb)
    return out


def local_average_all(
    points: np.ndarray,
    params: Param2,
    cfg: FitConfig,
    scalars: Optional[np.ndarray] = None,
):
    """Row i of the result is the kernel-weighted mean of the 3D points whose
    parametrizations lie within ``cfg.r`` of point i's.

    Returns the I x 3 matrix of local averages, or a pair
    ``(averages, averaged_scalars)`` when `scalars` is given.
    """
    X = np.asarray(points, dtype=float)
    T = params.coords
    if X.shape[0] != T.shape[0]:
        raise ValueError("points and parametrization differ in length")
    Xlm = np.empty_like(X)
    slm = None if scalars is None else np.empty(X.shape[0])
    for i, nb in enumerate(neighborhoods(params, cfg.r, cfg.k_fallback)):
        d = T[nb] - T[i]
        w = gaussian_weights(d[:, 0] ** 2 + d[:, 1] ** 2, cfg.h)
        Xlm[i] = w @ X[nb]
        if slm is not None:
            slm[i] = w @ scalars[nb]
    if slm is None:
        return Xlm
    return Xlm, slm

"""Flattened 2D scalar maps: kernel smoothing of per-point scalars over the
parametrization, sampled at the cell centres of a regular grid."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import EmptyMapError, FitConfig, Param2, ScalarMap2D, ShapeError
from .expectation import GridIndex, gaussian_weights

# raster value for cells without data support
SENTINEL = np.nan


@dataclass(frozen=True)
class FlattenConfig:
    g: int = 100
    smooth_r: float = FitConfig.r
    smooth_h: float = FitConfig.h
    min_support: int = 3

    def __post_init__(self):
        if self.g < 2:
            raise ValueError("g must be >= 2")
        if not self.smooth_r > 0:
            raise ValueError("smooth_r must be > 0")
        if not self.smooth_h > 0:
            raise ValueError("smooth_h must be > 0")
        if self.min_support < 1:
            raise ValueError("min_support must be >= 1")


def flatten_scalar_field(params: Param2, scalars, cfg: FlattenConfig = FlattenConfig()) -> ScalarMap2D:
    T = params.coords
    s = np.asarray(scalars, dtype=float).reshape(-1)
    if len(s) != len(T):
        raise ShapeError(f"{len(s)} scalars for {len(T)} parametrization points")
    if not np.isfinite(s).all():
        raise ValueError("scalars must be finite")
    g = cfg.g
    centers = (np.arange(g) + 0.5) / g
    index = GridIndex(T, cfg.smooth_r)
    values = np.zeros((g, g))
    mask = np.zeros((g, g), dtype=bool)
    for a in range(g):
        for b in range(g):
            c = (centers[a], centers[b])
            nb = index.query(c, cfg.smooth_r)
            if len(nb) < cfg.min_support:
                continue
            d = T[nb] - c
            w = gaussian_weights(d[:, 0] ** 2 + d[:, 1] ** 2, cfg.smooth_h)
            values[a, b] = w @ s[nb]
            mask[a, b] = True
    if not mask.any():
        raise EmptyMapError("no grid cell has enough supporting points")
    return ScalarMap2D(values, mask)


def map_to_image(smap: ScalarMap2D) -> np.ndarray:
    """G x G raster, row 0 = largest t2, column 0 = smallest t1; masked cells
    hold NaN."""
    img = np.where(smap.mask, smap.values, SENTINEL)
    return img.T[::-1].copy()


def image_to_map(img: np.ndarray) -> ScalarMap2D:
    """Inverse of `map_to_image`: NaN entries become masked cells."""
    img = np.asarray(img, dtype=float)
    v = img[::-1].T
    mask = ~np.isnan(v)
    return ScalarMap2D(np.where(mask, v, 0.0), mask)

"""Shared data types, configuration records and error classes.

Every record here is a frozen dataclass holding numpy arrays.  Arrays are
marked read-only on construction so a value can be shared between workers
without defensive copies.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np


class PrinSurfError(Exception):
    """Base class for all errors raised by this package."""


class DataError(PrinSurfError):
    """Input data violates a structural requirement."""


class ShapeError(DataError):
    pass


class SizeError(DataError):
    pass


class ParseError(DataError):
    pass


class NumericalError(PrinSurfError):
    """A numerical stage could not produce a well-defined result."""


class DegeneracyError(NumericalError):
    pass


class ConditioningError(NumericalError):
    pass


class CollapseError(NumericalError):
    pass


class FitError(NumericalError):
    pass


class EmptyMapError(NumericalError):
    pass


def _frozen(a, dtype=float) -> np.ndarray:
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class PointCloud3:
    points: np.ndarray
    scalars: Optional[np.ndarray] = None

    def __post_init__(self):
        pts = _frozen(self.points)
        if pts.ndim != 2 or pts.shape[1] != 3:
            raise ShapeError(f"points must be an I x 3 matrix, got shape {pts.shape}")
        object.__setattr__(self, "points", pts)
        if self.scalars is not None:
            object.__setattr__(self, "scalars", _frozen(self.scalars).reshape(-1))

    @property
    def n(self) -> int:
        return self.points.shape[0]

    def subset(self, idx) -> "PointCloud3":
        idx = np.asarray(idx)
        sc = None if self.scalars is None else self.scalars[idx]
        return PointCloud3(self.points[idx], sc)


def validate_cloud(cloud: PointCloud3) -> PointCloud3:
    """Return `cloud` unchanged if it is usable for fitting, else raise."""
    pts = cloud.points
    if pts.shape[0] < 3:
        raise SizeError(f"need at least 3 points, got {pts.shape[0]}")
    bad = ~np.isfinite(pts).all(axis=1)
    if bad.any():
        row = int(np.flatnonzero(bad)[0])
        raise DataError(f"non-finite coordinate in row {row}: {pts[row].tolist()}")
    if cloud.scalars is not None:
        if cloud.scalars.shape[0] != pts.shape[0]:
            raise ShapeError(
                f"{cloud.scalars.shape[0]} scalars for {pts.shape[0]} points"
            )
    return cloud


def check_unit_square(coords: np.ndarray) -> None:
    if coords.ndim != 2 or coords.shape[1] != 2:
        raise ShapeError(f"parametrization must be I x 2, got shape {coords.shape}")
    if not (np.all(coords >= 0.0) and np.all(coords <= 1.0)):
        raise DataError("parametrization leaves the unit square")


@dataclass(frozen=True)
class Param2:
    """Parametrization coordinates in [0, 1]^2, row-paired with a cloud."""

    coords: np.ndarray

    def __post_init__(self):
        c = _frozen(self.coords)
        check_unit_square(c)
        object.__setattr__(self, "coords", c)

    @property
    def n(self) -> int:
        return self.coords.shape[0]


@dataclass(frozen=True)
class SurfaceModel:
    """Three thin-plate splines sharing one knot set, mapping [0,1]^2 to R^3.

    ``delta`` is K x 3 (radial coefficients, one column per output
    coordinate) and ``beta`` is 3 x 3 (rows: intercept, t1, t2).
    """

    knots: np.ndarray
    delta: np.ndarray
    beta: np.ndarray
    lam: float

    def __post_init__(self):
        object.__setattr__(self, "knots", _frozen(self.knots))
        object.__setattr__(self, "delta", _frozen(self.delta))
        object.__setattr__(self, "beta", _frozen(self.beta))
        object.__setattr__(self, "lam", float(self.lam))
        if self.lam < 0:
            raise ValueError("smoothing parameter must be >= 0")

    def shifted(self, offset) -> "SurfaceModel":
        """Same surface translated by `offset` (added to the intercepts)."""
        beta = np.array(self.beta)
        beta[0] += np.asarray(offset, dtype=float)
        return SurfaceModel(self.knots, self.delta, beta, self.lam)


LambdaPolicy = Union[float, str]


@dataclass(frozen=True)
class FitConfig:
    # radius and bandwidth calibrated on the carpet grid/iteration trend;
    # h keeps the (r / 2)^2 relation
    r: float = 0.2
    h: float = 0.01
    n_grid: int = 50
    n_knots: int = 300
    # a float fixes the smoothing parameter; "gcv" searches lambda_grid
    lambda_policy: LambdaPolicy = "gcv"
    lambda_grid: tuple = tuple(np.logspace(-6, 2, 20).tolist())
    max_iter: int = 50
    thres: float = 1e-4
    k_fallback: int = 10
    seed: int = 0
    subsample: Optional[int] = None

    def __post_init__(self):
        if not self.r > 0:
            raise ValueError("r must be > 0")
        if not self.h > 0:
            raise ValueError("h must be > 0")
        if self.n_grid < 2:
            raise ValueError("n_grid must be >= 2")
        if self.n_knots < 10:
            raise ValueError("n_knots must be >= 10")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if not self.thres > 0:
            raise ValueError("thres must be > 0")
        if self.k_fallback < 1:
            raise ValueError("k_fallback must be >= 1")
        if isinstance(self.lambda_policy, str):
            if self.lambda_policy != "gcv":
                raise ValueError(f"unknown lambda policy {self.lambda_policy!r}")
        elif self.lambda_policy < 0:
            raise ValueError("fixed lambda must be >= 0")
        if self.subsample is not None and self.subsample < 3:
            raise ValueError("subsample must be >= 3")


@dataclass(frozen=True)
class FitReport:
    iterations_used: int
    err_trace: tuple
    converged: bool
    final_err: float
    thres: float
    boundary_fraction: float = 0.0
    lam: float = 0.0

    def __post_init__(self):
        if len(self.err_trace) != self.iterations_used:
            raise ValueError("err_trace length must equal iterations_used")
        if self.converged != (self.final_err <= self.thres):
            raise ValueError("converged flag disagrees with final_err and thres")


@dataclass(frozen=True)
class ScalarMap2D:
    """G x G grid of cell-centre values; ``values[a, b]`` sits at
    ``t1 = (a + 0.5) / G``, ``t2 = (b + 0.5) / G``."""

    values: np.ndarray
    mask: np.ndarray

    def __post_init__(self):
        v = _frozen(self.values)
        m = _frozen(self.mask, dtype=bool)
        if v.ndim != 2 or v.shape[0] != v.shape[1] or v.shape[0] < 2:
            raise ShapeError(f"map must be G x G with G >= 2, got {v.shape}")
        if m.shape != v.shape:
            raise ShapeError("mask shape differs from values shape")
        if not np.isfinite(v[m]).all():
            raise DataError("non-finite value in an unmasked cell")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "mask", m)

    @property
    def g(self) -> int:
        return self.values.shape[0]

    def cell_centers(self) -> np.ndarray:
        c = (np.arange(self.g) + 0.5) / self.g
        return c

"""The principal surface iteration: local averaging, spline smoothing and
projection, repeated until the parametrization stops moving."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import (
    CollapseError,
    DegeneracyError,
    FitConfig,
    FitReport,
    NumericalError,
    Param2,
    PointCloud3,
    ShapeError,
    SurfaceModel,
    validate_cloud,
)
from .expectation import local_average_all
from .init_pca import center_points, normalize_unit_square, pca_scores
from .projection import project_all
from .tps import eval_surface, fit_tps, select_knots

log = logging.getLogger(__name__)

COLLAPSE_RANGE = 1e-6


@dataclass(frozen=True)
class FitResult:
    """Outcome of a fit.

    ``model`` lives in centred coordinates (add ``centroid`` to get back to
    the input frame, see `uncentered_model`).  ``params`` and ``distances``
    cover every input point, including held-out ones when the fit used a
    subsample, and are the lattice projections onto ``model``.
    """

    model: SurfaceModel
    params: Param2
    report: FitReport
    centroid: np.ndarray
    distances: np.ndarray
    fit_index: np.ndarray
    self_consistency: float
    surface_update: float

    def uncentered_model(self) -> SurfaceModel:
        return self.model.shifted(self.centroid)


def convergence_error(t_old, t_new) -> float:
    """Mean over points of the squared parametrization change."""
    a = t_old.coords if isinstance(t_old, Param2) else np.asarray(t_old, dtype=float)
    b = t_new.coords if isinstance(t_new, Param2) else np.asarray(t_new, dtype=float)
    if a.shape != b.shape:
        raise ShapeError(f"parametrizations differ in shape: {a.shape} vs {b.shape}")
    d = a - b
    return float(np.sum(d * d) / a.shape[0])


def renormalize(params: Param2) -> Param2:
    try:
        return normalize_unit_square(params.coords, min_range=COLLAPSE_RANGE)
    except DegeneracyError as exc:
        raise CollapseError(f"parametrization collapsed: {exc}") from None


def subsample_index(n: int, size: Optional[int], seed: int) -> np.ndarray:
    if size is None or size >= n:
        return np.arange(n)
    rng = np.random.default_rng(seed)
    return np.sort(rng.choice(n, size=size, replace=False))


def _smooth(params: Param2, targets: np.ndarray, cfg: FitConfig) -> SurfaceModel:
    knots = select_knots(params, min(params.n, cfg.n_knots), cfg.seed)
    return fit_tps(params, targets, knots, cfg.lambda_policy, cfg.lambda_grid)


def self_consistency_gap(X: np.ndarray, params: Param2, model: SurfaceModel, cfg: FitConfig) -> float:
    """Mean distance between local averages at `params` and the surface there."""
    Xlm = local_average_all(X, params, cfg)
    return float(np.linalg.norm(Xlm - eval_surface(model, params.coords), axis=1).mean())


def fit_principal_surface(cloud: PointCloud3, cfg: FitConfig = FitConfig()) -> FitResult:
    validate_cloud(cloud)
    fit_idx = subsample_index(cloud.n, cfg.subsample, cfg.seed)
    sub = cloud.subset(fit_idx)
    cc = center_points(sub)
    X = cc.centered
    T = normalize_unit_square(pca_scores(cc).scores)

    err_trace = []
    model = prev_model = None
    err = np.inf
    bfrac = 0.0
    for it in range(1, cfg.max_iter + 1):
        try:
            Xlm = local_average_all(X, T, cfg)
            prev_model, model = model, _smooth(T, Xlm, cfg)
            T_proj, _, bfrac = project_all(X, model, cfg.n_grid)
            T_new = renormalize(T_proj)
        except NumericalError as exc:
            raise type(exc)(f"iteration {it}: {exc}") from exc
        err = convergence_error(T, T_new)
        err_trace.append(err)
        log.debug("iteration %d: err=%.3g lambda=%.3g boundary=%.3f", it, err, model.lam, bfrac)
        T = T_new
        if err <= cfg.thres:
            break

    # final parametrization: projections onto the returned surface, all points
    all_X = cloud.points - cc.centroid
    params, dist, _ = project_all(all_X, model, cfg.n_grid)
    fit_params = Param2(params.coords[fit_idx])
    gap = self_consistency_gap(X, fit_params, model, cfg)
    if prev_model is None:
        update = float("nan")
    else:
        step = eval_surface(model, fit_params.coords) - eval_surface(prev_model, fit_params.coords)
        update = float(np.linalg.norm(step, axis=1).mean())

    report = FitReport(
        iterations_used=len(err_trace),
        err_trace=tuple(err_trace),
        converged=bool(err <= cfg.thres),
        final_err=float(err),
        thres=cfg.thres,
        boundary_fraction=bfrac,
        lam=model.lam,
    )
    return FitResult(
        model=model,
        params=params,
        report=report,
        centroid=cc.centroid,
        distances=dist,
        fit_index=fit_idx,
        self_consistency=gap,
        surface_update=update,
    )

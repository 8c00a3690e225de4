"""Penalized thin-plate spline regression from [0,1]^2 to R^3.

For knots k_1..k_K each output coordinate is modelled as

    f(t) = sum_b delta_b * eta(|t - k_b|) + beta_0 + beta_1 t1 + beta_2 t2,
    eta(rho) = rho^2 log(rho),

and the coefficients minimize ``|y - E delta - P beta|^2 + lam * delta' Omega delta``
subject to ``P_knots' delta = 0``.  The side condition is removed by writing
``delta = Z gamma`` with Z an orthonormal basis of the null space of
``P_knots'``.  A QR factorization of the reduced design followed by one
symmetric eigendecomposition then gives the fit, the residual sum of
squares and the effective degrees of freedom for every lam in closed form,
so a GCV search costs one factorization.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import linalg

from .core import (
    ConditioningError,
    DegeneracyError,
    FitError,
    Param2,
    SurfaceModel,
)

PIVOT_RTOL = 1e-12


def eta_sq(sq_dist: np.ndarray) -> np.ndarray:
    """Radial basis as a function of squared distance; eta(0) is exactly 0."""
    s = np.asarray(sq_dist, dtype=float)
    out = np.zeros_like(s)
    pos = s > 0
    out[pos] = 0.5 * s[pos] * np.log(s[pos])
    return out


def eta(rho) -> np.ndarray:
    rho = np.asarray(rho, dtype=float)
    return eta_sq(rho * rho)


def radial_matrix(sites: np.ndarray, knots: np.ndarray) -> np.ndarray:
    d0 = sites[:, 0, None] - knots[None, :, 0]
    d1 = sites[:, 1, None] - knots[None, :, 1]
    return eta_sq(d0 * d0 + d1 * d1)


def affine_matrix(sites: np.ndarray) -> np.ndarray:
    return np.column_stack([np.ones(len(sites)), sites[:, 0], sites[:, 1]])


def select_knots(params, n_knots: int, seed: int) -> np.ndarray:
    """Distinct parametrization locations, uniformly subsampled (without
    replacement, seed-deterministic) when there are more than `n_knots`."""
    if n_knots < 10:
        raise ValueError("n_knots must be >= 10")
    T = params.coords if isinstance(params, Param2) else np.asarray(params, dtype=float)
    uniq = np.unique(T, axis=0)
    if len(uniq) < 10:
        raise DegeneracyError(f"only {len(uniq)} distinct parametrization locations")
    if len(uniq) <= n_knots:
        return uniq
    rng = np.random.default_rng(seed)
    pick = np.sort(rng.choice(len(uniq), size=n_knots, replace=False))
    return uniq[pick]


@dataclass(frozen=True)
class TpsSolution:
    delta: np.ndarray
    beta: np.ndarray
    fitted: np.ndarray
    rss: float
    edf: float
    penalty: np.ndarray
    lam: float


class TpsSolver:
    """Factorized smoothing system for one (sites, knots) pair."""

    def __init__(self, sites: np.ndarray, knots: np.ndarray):
        sites = np.asarray(sites, dtype=float)
        knots = np.asarray(knots, dtype=float)
        n, k = len(sites), len(knots)
        if n < k:
            raise DegeneracyError(f"{k} knots for only {n} data sites")
        Pk = affine_matrix(knots)
        Qk, Rk = linalg.qr(Pk)
        rk = np.abs(np.diag(Rk))
        if rk.min() <= 1e-10 * rk.max():
            raise DegeneracyError("knots are collinear; the affine part is not identifiable")
        self.Z = Qk[:, 3:]
        self.knots = knots
        self.omega = radial_matrix(knots, knots)
        self.omega = 0.5 * (self.omega + self.omega.T)
        E = radial_matrix(sites, knots)
        X = np.hstack([E @ self.Z, affine_matrix(sites)])
        Q, R = linalg.qr(X, mode="economic")
        piv = np.abs(np.diag(R))
        if piv.min() <= PIVOT_RTOL * piv.max():
            raise ConditioningError(
                f"smoothing system is singular: smallest pivot {piv.min():.3e} "
                f"(largest {piv.max():.3e})"
            )
        self.Q = Q
        self.Rinv = linalg.solve_triangular(R, np.eye(k))
        S = np.zeros((k, k))
        S[: k - 3, : k - 3] = self.Z.T @ self.omega @ self.Z
        M = self.Rinv.T @ S @ self.Rinv
        D, U = linalg.eigh(0.5 * (M + M.T))
        self.D = np.clip(D, 0.0, None)
        self.U = U
        self.n = n

    def solve(self, Y: np.ndarray, lam: float) -> TpsSolution:
        Y = np.asarray(Y, dtype=float)
        if lam < 0:
            raise ValueError("smoothing parameter must be >= 0")
        qy = self.Q.T @ Y
        uy = self.U.T @ qy
        f = 1.0 / (1.0 + lam * self.D)
        fu = f[:, None] * uy
        coef = self.Rinv @ (self.U @ fu)
        fitted = self.Q @ (self.U @ fu)
        resid = Y - fitted
        k = len(self.knots)
        delta = self.Z @ coef[: k - 3]
        penalty = np.einsum("kd,kl,ld->d", delta, self.omega, delta)
        return TpsSolution(
            delta=delta,
            beta=coef[k - 3 :],
            fitted=fitted,
            rss=float(np.sum(resid * resid)),
            edf=float(f.sum()),
            penalty=penalty,
            lam=float(lam),
        )

    def gcv_scores(self, Y: np.ndarray, grid: Sequence[float]) -> np.ndarray:
        """n * RSS / (n - edf)^2 per lam, RSS pooled over output columns.

        Entries are inf where the denominator vanishes (interpolation).
        """
        Y = np.asarray(Y, dtype=float)
        qy = self.Q.T @ Y
        uy = self.U.T @ qy
        base = Y - self.Q @ qy
        rss0 = float(np.sum(base * base))
        out = np.empty(len(grid))
        for j, lam in enumerate(grid):
            f = 1.0 / (1.0 + lam * self.D)
            rss = rss0 + float(np.sum(((1.0 - f)[:, None] * uy) ** 2))
            dof = self.n - f.sum()
            out[j] = self.n * rss / dof**2 if dof > 1e-9 * self.n else np.inf
        return out


def fit_tps(
    params,
    targets: np.ndarray,
    knots: np.ndarray,
    lambda_policy="gcv",
    lambda_grid: Sequence[float] = tuple(np.logspace(-6, 2, 20)),
) -> SurfaceModel:
    """Fit the three coordinate splines with one shared smoothing parameter.

    `lambda_policy` is either a fixed non-negative float or ``"gcv"``.
    """
    T = params.coords if isinstance(params, Param2) else np.asarray(params, dtype=float)
    Y = np.asarray(targets, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    if len(Y) != len(T):
        raise ValueError("targets and parametrization differ in length")
    solver = TpsSolver(T, knots)
    if isinstance(lambda_policy, str):
        if lambda_policy != "gcv":
            raise ValueError(f"unknown lambda policy {lambda_policy!r}")
        scores = solver.gcv_scores(Y, lambda_grid)
        if not np.isfinite(scores).any():
            raise FitError("GCV score undefined at every grid value")
        lam = float(lambda_grid[int(np.argmin(scores))])
    else:
        lam = float(lambda_policy)
    sol = solver.solve(Y, lam)
    return SurfaceModel(solver.knots, sol.delta, sol.beta, lam)


def eval_surface(model: SurfaceModel, t) -> np.ndarray:
    """Evaluate the surface at one point (shape (2,)) or many (shape (M, 2))."""
    t = np.asarray(t, dtype=float)
    single = t.ndim == 1
    T = np.atleast_2d(t)
    out = radial_matrix(T, model.knots) @ model.delta + affine_matrix(T) @ model.beta
    return out[0] if single else out


def lattice(n_grid: int) -> np.ndarray:
    if n_grid < 2:
        raise ValueError("n_grid must be >= 2")
    return np.linspace(0.0, 1.0, n_grid)


def lattice_nodes(n_grid: int) -> np.ndarray:
    """(n_grid^2, 2) nodes ordered lexicographically by (t1, t2)."""
    g = lattice(n_grid)
    a, b = np.meshgrid(g, g, indexing="ij")
    return np.column_stack([a.ravel(), b.ravel()])


def eval_surface_grid(model: SurfaceModel, n_grid: int) -> np.ndarray:
    """Array of shape (n_grid, n_grid, 3); entry [a, b] is f(g[a], g[b])."""
    return eval_surface(model, lattice_nodes(n_grid)).reshape(n_grid, n_grid, -1)

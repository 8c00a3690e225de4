"""Initial parametrization from the first two principal component scores."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DataError, DegeneracyError, Param2, PointCloud3, validate_cloud


@dataclass(frozen=True)
class CenteredCloud:
    centered: np.ndarray
    centroid: np.ndarray


@dataclass(frozen=True)
class ScoreInit:
    scores: np.ndarray
    singular_values: np.ndarray
    # right singular vectors as rows, sign-matched to the scores
    axes: np.ndarray


def center_points(cloud: PointCloud3) -> CenteredCloud:
    # the I >= 3 rule belongs to fitting; centring itself only needs finite rows
    if cloud.n >= 3:
        validate_cloud(cloud)
    elif not np.isfinite(cloud.points).all():
        raise DataError("non-finite coordinate in point cloud")
    centroid = cloud.points.mean(axis=0)
    return CenteredCloud(cloud.points - centroid, centroid)


def pca_scores(centered: CenteredCloud) -> ScoreInit:
    """Thin SVD of the centred I x 3 matrix; returns the first two columns
    of U * Sigma.

    Each score column is sign-fixed so that its largest-magnitude entry is
    positive (first occurrence on exact ties).
    """
    X = np.asarray(centered.centered, dtype=float)
    if X.shape[0] < 3:
        raise DegeneracyError("need at least 3 points for a 2D principal subspace")
    U, s, Vt = np.linalg.svd(X, full_matrices=False)
    scale = s[0] if s[0] > 0 else 1.0
    if s[0] == 0 or s[1] <= 1e-10 * scale:
        raise DegeneracyError(
            "point cloud has rank < 2 (all points coincide or are collinear); "
            "add jitter or reject the input"
        )
    scores = U[:, :2] * s[:2]
    axes = Vt[:2].copy()
    for k in range(2):
        j = int(np.argmax(np.abs(scores[:, k])))
        if scores[j, k] < 0:
            scores[:, k] *= -1
            axes[k] *= -1
    return ScoreInit(scores, s, axes)


def normalize_unit_square(scores: np.ndarray, min_range: float = 0.0) -> Param2:
    """Min-max scale each column of an I x 2 matrix onto [0, 1].

    A column whose range is <= `min_range` raises DegeneracyError.
    """
    S = np.asarray(scores, dtype=float)
    lo = S.min(axis=0)
    span = S.max(axis=0) - lo
    for k in range(S.shape[1]):
        if not span[k] > min_range:
            raise DegeneracyError(f"score column {k} has range {span[k]:.3g}")
    T = (S - lo) / span
    # guard the [0, 1] invariant against last-bit rounding
    np.clip(T, 0.0, 1.0, out=T)
    return Param2(T)


def initial_params(cloud: PointCloud3) -> tuple[CenteredCloud, Param2]:
    cc = center_points(cloud)
    return cc, normalize_unit_square(pca_scores(cc).scores)

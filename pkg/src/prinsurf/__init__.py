"""Principal surface fitting for 3D point clouds and flattening of
per-point scalar fields onto 2D maps."""
from .core import (
    CollapseError,
    ConditioningError,
    DataError,
    DegeneracyError,
    EmptyMapError,
    FitConfig,
    FitError,
    FitReport,
    NumericalError,
    Param2,
    ParseError,
    PointCloud3,
    PrinSurfError,
    ScalarMap2D,
    ShapeError,
    SizeError,
    SurfaceModel,
    validate_cloud,
)
from .fitloop import FitResult, convergence_error, fit_principal_surface
from .tps import eval_surface, eval_surface_grid, fit_tps

__version__ = "0.1.0"

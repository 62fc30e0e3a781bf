"""Quasi-developable ruled strips between two B-spline curves.

The mapping ``sigma`` that pairs the parameters of the two boundary curves
is a monotone B-spline optimized for developability; the resulting strip
converts exactly into a degree ``1 x p*d`` B-spline surface.
"""

from .conversion import BSplineSurface, convert
from .energy import ObjectiveConfig, WarpProfile, warp_profile
from .estimator import DevelopableStrip
from .exceptions import (ConversionError, DegenerateGeometryError, DevstripError,
                         DomainError, FittingError, InputError,
                         KnotMultiplicityError, MappingRangeError, OptimizationError)
from .mapping import DiscreteMapping, MappingFunction, init_identity
from .optimizer import (LbfgsConfig, OptimizationReport, minimize, solve_continuous,
                        solve_discrete)
from .preprocess import (ExtensionRequest, SimilarityTransform, extend_curve,
                         fit_polyline, make_compatible, unit_box_scale)
from .splines import BezierSegment, BSplineCurve, KnotVector
from .surface import RuledStrip

__version__ = "0.1.0"

__all__ = [
    "BSplineCurve", "BSplineSurface", "BezierSegment", "ConversionError",
    "DegenerateGeometryError", "DevelopableStrip", "DevstripError", "DiscreteMapping",
    "DomainError", "ExtensionRequest", "FittingError", "InputError", "KnotMultiplicityError",
    "KnotVector", "LbfgsConfig", "MappingFunction", "MappingRangeError", "ObjectiveConfig",
    "OptimizationError", "OptimizationReport", "RuledStrip", "SimilarityTransform",
    "WarpProfile", "convert", "extend_curve", "fit_polyline", "init_identity",
    "make_compatible", "minimize", "solve_continuous", "solve_discrete",
    "unit_box_scale", "warp_profile",
]

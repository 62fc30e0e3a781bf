"""Estimator facade over the preprocess / optimize / convert pipeline."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .conversion import convert
from .energy import ObjectiveConfig, uniform_samples
from .exceptions import DomainError, InputError
from .mapping import init_identity
from .optimizer import LbfgsConfig, solve_continuous, solve_discrete
from .preprocess import (SimilarityTransform, extend_curve, make_compatible,
                         unit_box_scale)
from .surface import RuledStrip
from .validation import (check_choice, check_curve_pair, check_extension,
                         check_float, check_int)

MODES = ("continuous", "discrete")
INTERPOLATIONS = ("cubic", "linear")


def _compose_interval(outer, inner):
    """Interval ``inner`` of a curve that was later reparametrized onto ``outer``."""
    lo, hi = outer
    return lo + (hi - lo) * inner[0], lo + (hi - lo) * inner[1]


class DevelopableStrip(BaseEstimator):
    """Quasi-developable ruled strip between two boundary curves.

    ``fit`` takes the pair ``(c1, c2)`` (curves or ``{degree, knots,
    points}`` dicts), applies the requested extensions, makes the curves
    compatible, scales them into the unit box and optimizes the mapping
    ``sigma``. Results are reported in the input coordinates.

    Parameters
    ----------
    map_degree : int, default 2
        Degree of the mapping function (1 to 3).
    n_coeffs : int, default 50
        Number of mapping coefficients.
    n_samples : int, default 100
        Number of sample rulings in the objective.
    lambda1, lambda2 : float, default 100 and 1
        Weights of the developability and normal-length terms.
    endpoint_weight : float, default 0
        Weight of the penalty pulling ``sigma(0)`` to 0 and ``sigma(1)`` to 1.
    mode : {"continuous", "discrete"}
        Optimize a B-spline mapping, or one target per sample.
    max_iter, memory, tol
        Optimizer iteration cap, L-BFGS history and gradient tolerance.
    scale : bool, default True
        Run the optimization in unit-box coordinates.
    extend : sequence, default ()
        Extension requests ``(curve, end, point)`` applied before anything
        else.
    interpolation : {"cubic", "linear"}
        How a discrete result is turned into a mapping function.

    Attributes
    ----------
    sigma_ : MappingFunction
    discrete_mapping_ : DiscreteMapping or None
    normals_ : ndarray
        Normal variables at the sample rulings (unit-box coordinates).
    report_ : OptimizationReport
    transform_ : SimilarityTransform
    curves_ : tuple
        Boundary curves after extension and compatibility, input coordinates.
    strip_ : RuledStrip
    original_intervals_ : dict
        Parameter interval of each input curve inside its processed curve.
    """

    def __init__(self, map_degree=2, n_coeffs=50, n_samples=100, lambda1=100.0,
                 lambda2=1.0, endpoint_weight=0.0, mode="continuous", max_iter=200,
                 memory=10, tol=1e-8, scale=True, extend=(), interpolation="cubic"):
        self.map_degree = map_degree
        self.n_coeffs = n_coeffs
        self.n_samples = n_samples
        self.lambda1 = lambda1
        self.lambda2 = lambda2
        self.endpoint_weight = endpoint_weight
        self.mode = mode
        self.max_iter = max_iter
        self.memory = memory
        self.tol = tol
        self.scale = scale
        self.extend = extend
        self.interpolation = interpolation

    def _validate_params(self):
        degree = check_int(self.map_degree, "map_degree", minimum=1, maximum=3)
        check_int(self.n_coeffs, "n_coeffs", minimum=degree + 1)
        check_int(self.n_samples, "n_samples", minimum=2)
        check_float(self.lambda1, "lambda1", minimum=0.0)
        check_float(self.lambda2, "lambda2", minimum=0.0)
        check_float(self.endpoint_weight, "endpoint_weight", minimum=0.0)
        check_choice(self.mode, "mode", MODES)
        check_int(self.max_iter, "max_iter", minimum=0)
        check_int(self.memory, "memory", minimum=1)
        if check_float(self.tol, "tol") <= 0.0:
            raise InputError("tol", "must be positive")
        check_choice(self.interpolation, "interpolation", INTERPOLATIONS)
        return [check_extension(r, f"extend[{i}]") for i, r in enumerate(self.extend or ())]

    def _preprocess(self, X):
        requests = self._validate_params()
        c1, c2 = check_curve_pair(X)
        curves = {"c1": c1, "c2": c2}
        intervals = {"c1": (0.0, 1.0), "c2": (0.0, 1.0)}
        for req in requests:
            curves[req.which_curve], iv = extend_curve(curves[req.which_curve], req)
            intervals[req.which_curve] = _compose_interval(iv, intervals[req.which_curve])
        c1, c2 = make_compatible(curves["c1"], curves["c2"])
        return c1, c2, intervals

    def fit(self, X, y=None, callback=None):
        """Optimize the mapping for the curve pair ``X``.

        ``callback``, when given, receives the mapping (continuous mode) or
        discrete mapping of every accepted iterate.
        """
        c1, c2, intervals = self._preprocess(X)
        if self.scale:
            s1, s2, tf = unit_box_scale(c1, c2)
        else:
            s1, s2, tf = c1, c2, SimilarityTransform.identity()
        t = uniform_samples(self.n_samples)
        cfg_obj = ObjectiveConfig(self.lambda1, self.lambda2, self.endpoint_weight, t)
        cfg_opt = LbfgsConfig(memory=self.memory, max_iterations=self.max_iter,
                              gradient_tolerance=self.tol)
        if self.mode == "continuous":
            m0 = init_identity(self.map_degree, self.n_coeffs)
            sigma, N, report = solve_continuous(s1, s2, m0, cfg_obj, cfg_opt,
                                                callback=callback)
            self.discrete_mapping_ = None
        else:
            dm, N, report = solve_discrete(s1, s2, t, cfg_opt, cfg_obj, callback=callback)
            sigma = dm.to_mapping_function(self.interpolation)
            self.discrete_mapping_ = dm
        self.sigma_ = sigma
        self.normals_ = N
        self.report_ = report
        self.transform_ = tf
        self.curves_ = (c1, c2)
        self.strip_ = RuledStrip(c1, c2, sigma)
        self.original_intervals_ = intervals
        self.n_iter_ = report.iterations
        self.converged_ = report.converged
        return self

    def predict(self, t):
        """``sigma(t)``."""
        check_is_fitted(self, "sigma_")
        return self.sigma_(np.asarray(t, dtype=float))

    def transform(self, X):
        """Strip points at parameter pairs ``X[:, 0] = s``, ``X[:, 1] = t``."""
        check_is_fitted(self, "strip_")
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != 2:
            raise InputError("X", "expected an (m, 2) array of (s, t) pairs")
        return self.strip_.eval(X[:, 0], X[:, 1])

    def warp_profile(self, sample_count=None, warn=True):
        check_is_fitted(self, "strip_")
        return self.strip_.warp_profile(sample_count or self.n_samples, warn=warn)

    def score(self, X=None, y=None):
        """Negative average warp angle (degrees) at the sample rulings."""
        return -self.warp_profile(warn=False).beta_ave

    def to_bspline_surface(self, knot_mode="uniform"):
        """Exact degree ``1 x p*d`` B-spline surface of the fitted strip."""
        check_is_fitted(self, "strip_")
        return convert(self.strip_, knot_mode)

    def trim_interval(self):
        """Smallest ``t`` range whose rulings cover both original curves."""
        check_is_fitted(self, "strip_")
        (a1, b1), (a2, b2) = self.original_intervals_["c1"], self.original_intervals_["c2"]
        T0, T1 = self.sigma_.range
        # where sigma never reaches an original end of C2, keep every ruling
        lo = 0.0 if a2 <= T0 else min(a1, self.sigma_.inverse(a2))
        hi = 1.0 if b2 >= T1 else max(b1, self.sigma_.inverse(b2))
        return float(lo), float(hi)

    def trimmed_strip(self):
        """The strip cut back to :meth:`trim_interval` and reparametrized."""
        lo, hi = self.trim_interval()
        if not hi > lo:
            raise DomainError(f"empty trimming interval [{lo}, {hi}]")
        return self.strip_.trim_to_original(lo, hi)

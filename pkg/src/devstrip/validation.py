"""Checks for user-facing inputs.

Every failure raises :class:`~devstrip.exceptions.InputError` whose
message starts with the dotted name of the offending field, so command-line
users can locate the problem in their JSON.
"""

from __future__ import annotations

import numbers

import numpy as np

from .exceptions import DevstripError, InputError
from .mapping import MappingFunction
from .splines import BSplineCurve, KnotVector


def check_int(value, field, minimum=None, maximum=None):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise InputError(field, f"expected an integer, got {value!r}")
    value = int(value)
    if minimum is not None and value < minimum:
        raise InputError(field, f"must be at least {minimum}, got {value}")
    if maximum is not None and value > maximum:
        raise InputError(field, f"must be at most {maximum}, got {value}")
    return value


def check_float(value, field, minimum=None):
    if isinstance(value, bool) or not isinstance(value, numbers.Real):
        raise InputError(field, f"expected a number, got {value!r}")
    value = float(value)
    if not np.isfinite(value):
        raise InputError(field, "must be finite")
    if minimum is not None and value < minimum:
        raise InputError(field, f"must be at least {minimum}, got {value}")
    return value


def check_choice(value, field, choices):
    if value not in choices:
        raise InputError(field, f"must be one of {', '.join(map(str, choices))}; got {value!r}")
    return value


def check_points(value, field, min_count=1):
    """``(m, 3)`` float array of finite points."""
    try:
        P = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        raise InputError(field, "expected a list of [x, y, z] points") from None
    if P.ndim != 2 or P.shape[1] != 3:
        raise InputError(field, "expected a list of [x, y, z] points")
    if P.shape[0] < min_count:
        raise InputError(field, f"need at least {min_count} points, got {P.shape[0]}")
    if not np.all(np.isfinite(P)):
        raise InputError(field, "points must be finite")
    return P


def _require(obj, field, keys):
    if not isinstance(obj, dict):
        raise InputError(field, f"expected an object with keys {', '.join(keys)}")
    for k in keys:
        if k not in obj:
            raise InputError(f"{field}.{k}", "missing")


def _knots(obj, field, degree):
    try:
        return KnotVector(degree, np.asarray(obj["knots"], dtype=float))
    except (TypeError, ValueError) as exc:
        raise InputError(f"{field}.knots", str(exc)) from None


def check_curve(obj, field="curve"):
    """Curve from ``{degree, knots, points}`` (or pass a curve through)."""
    if isinstance(obj, BSplineCurve):
        if obj.dim != 3:
            raise InputError(field, f"expected a 3-D curve, got dimension {obj.dim}")
        return obj
    _require(obj, field, ("degree", "knots", "points"))
    degree = check_int(obj["degree"], f"{field}.degree", minimum=1)
    kv = _knots(obj, field, degree)
    P = check_points(obj["points"], f"{field}.points", min_count=degree + 1)
    if P.shape[0] != kv.n_basis:
        raise InputError(f"{field}.points",
                         f"{P.shape[0]} points do not match {kv.n_basis} basis functions")
    return BSplineCurve(kv, P)


def check_curve_pair(X, field="curves"):
    """``(c1, c2)`` from a pair of curves/dicts or a ``{"c1", "c2"}`` dict."""
    if isinstance(X, dict):
        _require(X, field, ("c1", "c2"))
        X = (X["c1"], X["c2"])
    try:
        c1, c2 = X
    except (TypeError, ValueError):
        raise InputError(field, "expected exactly two curves") from None
    return check_curve(c1, "c1"), check_curve(c2, "c2")


def check_mapping(obj, field="mapping"):
    """Mapping from ``{degree, knots, epsilons}``."""
    if isinstance(obj, MappingFunction):
        return obj
    _require(obj, field, ("degree", "knots", "epsilons"))
    degree = check_int(obj["degree"], f"{field}.degree", minimum=1)
    kv = _knots(obj, field, degree)
    try:
        eps = np.asarray(obj["epsilons"], dtype=float).ravel()
    except (TypeError, ValueError):
        raise InputError(f"{field}.epsilons", "expected a list of numbers") from None
    try:
        return MappingFunction(kv, eps)
    except DevstripError as exc:
        raise InputError(f"{field}.epsilons", str(exc)) from None


def check_extension(value, field="extend"):
    """``ExtensionRequest`` from a request, a tuple or a dict."""
    from .preprocess import ExtensionRequest

    if isinstance(value, ExtensionRequest):
        return value
    if isinstance(value, dict):
        _require(value, field, ("which_curve", "which_end", "target_point"))
        value = (value["which_curve"], value["which_end"], value["target_point"])
    try:
        curve, end, point = value
    except (TypeError, ValueError):
        raise InputError(field, "expected (curve, end, point)") from None
    check_choice(curve, f"{field}.which_curve", ("c1", "c2"))
    check_choice(end, f"{field}.which_end", ("start", "end"))
    P = check_points([point], f"{field}.target_point")
    return ExtensionRequest(curve, end, tuple(P[0].tolist()))

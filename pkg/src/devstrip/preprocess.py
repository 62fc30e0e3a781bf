"""Input conditioning for boundary curve pairs."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .exceptions import DegenerateGeometryError, DomainError, FittingError
from .splines import (BSplineCurve, KnotVector, basis_matrix,
                      extract_bezier_segments, raise_multiplicity)

_GAUSS_NODES, _GAUSS_WEIGHTS = np.polynomial.legendre.leggauss(16)


def make_compatible(c1, c2):
    """Both curves at the higher degree on the union of their knot vectors.

    Multiplicities in the union are the larger of the two after degree
    elevation. Traces are unchanged.
    """
    p = max(c1.degree, c2.degree)
    a, b = c1.elevate_degree(p), c2.elevate_degree(p)
    values = np.union1d(a.knots.interior(), b.knots.interior())
    for u in values:
        m = max(a.knots.multiplicity(u), b.knots.multiplicity(u))
        a = raise_multiplicity(a, u, m)
        b = raise_multiplicity(b, u, m)
    return a, b


def curve_length(c):
    """Arc length by 16-point Gauss-Legendre quadrature on every span."""
    total = 0.0
    for seg in extract_bezier_segments(c):
        a, b = seg.source_interval
        x = a + 0.5 * (_GAUSS_NODES + 1.0) * (b - a)
        d = c.derivatives(x, 1)[1]
        total += 0.5 * (b - a) * float(_GAUSS_WEIGHTS @ np.linalg.norm(d, axis=1))
    return total


def _blossom(ctrl, args):
    """Blossom of a Bezier polynomial at local arguments ``args``."""
    P = np.array(ctrl, dtype=float)
    for u in args:
        P = (1.0 - u) * P[:-1] + u * P[1:]
    return P[0]


@dataclass(frozen=True)
class ExtensionRequest:
    """Extend curve ``which_curve`` ("c1" or "c2") at ``which_end``
    ("start" or "end") so that it passes through ``target_point``."""

    which_curve: str
    which_end: str
    target_point: tuple

    def __post_init__(self):
        if self.which_curve not in ("c1", "c2"):
            raise DomainError(f"which_curve must be 'c1' or 'c2', got {self.which_curve!r}")
        if self.which_end not in ("start", "end"):
            raise DomainError(f"which_end must be 'start' or 'end', got {self.which_end!r}")
        q = np.asarray(self.target_point, dtype=float)
        if q.shape != (3,) or not np.all(np.isfinite(q)):
            raise DomainError("target_point must be three finite numbers")
        object.__setattr__(self, "target_point", tuple(q.tolist()))


def _extend_end(c, target):
    p = c.degree
    length = curve_length(c)
    end = c.control_points[-1]
    chord = float(np.linalg.norm(target - end))
    if chord == 0.0:
        raise DomainError("target point coincides with the curve end")
    if length == 0.0:
        raise DegenerateGeometryError("cannot extend a curve of zero length")
    delta = chord / length
    last = extract_bezier_segments(c)[-1]
    a, _ = last.source_interval
    span = 1.0 - a
    # unclamped right end: knots 1 (simple) then 1 + delta repeated
    U = c.knots.knots
    V = np.concatenate([U[: U.size - p - 1], [1.0], [1.0 + delta] * (p + 1)])
    n_new = V.size - p - 1
    P = np.empty((n_new, c.dim))
    keep = c.knots.n_basis - p
    P[:keep] = c.control_points[:keep]
    for i in range(keep, n_new - 1):
        window = (V[i + 1: i + p + 1] - a) / span
        P[i] = _blossom(last.control_points, window)
    P[-1] = target
    V = V / (1.0 + delta)
    V[-p - 1:] = 1.0
    return BSplineCurve(KnotVector(p, V), P), (0.0, 1.0 / (1.0 + delta))


def extend_curve(c, req):
    """Extend ``c`` through ``req.target_point`` with C^(p-1) continuity.

    The parameter range grows in proportion to the chord from the current
    end to the target over the curve length, and the whole curve is then
    reparametrized onto [0, 1].

    Returns
    -------
    curve : BSplineCurve
    original_interval : tuple
        Parameter interval of the extended curve that traces ``c``.
    """
    target = np.asarray(req.target_point, dtype=float)
    if c.dim != target.size:
        raise DomainError(f"target has {target.size} coordinates, curve has {c.dim}")
    if c.degree < 1:
        raise DomainError("extension needs degree >= 1")
    if req.which_end == "end":
        return _extend_end(c, target)
    ext, (lo, hi) = _extend_end(c.reversed(), target)
    return ext.reversed(), (1.0 - hi, 1.0 - lo)


class PolylineFit(NamedTuple):
    curve: BSplineCurve
    max_residual: float
    params: np.ndarray


def chord_length_params(points):
    d = np.linalg.norm(np.diff(points, axis=0), axis=1)
    if np.any(d == 0.0):
        raise DomainError("consecutive polyline points must be distinct")
    s = np.concatenate([[0.0], np.cumsum(d)])
    s /= s[-1]
    s[-1] = 1.0
    return s


def averaging_knots(params, degree, n_ctrl):
    """Clamped knots that place every span over some data parameters."""
    u = np.asarray(params, dtype=float)
    m = u.size - 1
    n = n_ctrl - 1
    p = degree
    if n == m:
        inner = [u[j: j + p].mean() for j in range(1, n - p + 1)]
    else:
        d = (m + 1) / (n - p + 1)
        inner = []
        for j in range(1, n - p + 1):
            i = int(j * d)
            a = j * d - i
            inner.append((1.0 - a) * u[i - 1] + a * u[i])
    return np.concatenate([[0.0] * (p + 1), inner, [1.0] * (p + 1)])


def fit_polyline(points, degree=3, n_ctrl=None, params=None, knots=None):
    """Least-squares B-spline through ordered points with fixed endpoints.

    Parameters
    ----------
    points : array_like, shape (m + 1, dim)
    degree : int
    n_ctrl : int, optional
        Number of control points; defaults to ``min(len(points), 50)``.
    params : array_like, optional
        Data parameters; chord length by default.
    knots : array_like, optional
        Full clamped knot vector; averaging knots by default.

    Raises
    ------
    FittingError
        When the collocation matrix is rank deficient.
    """
    Q = np.asarray(points, dtype=float)
    if Q.ndim != 2 or Q.shape[0] < 2:
        raise DomainError("points must be an (m, dim) array with m >= 2")
    n_pts = Q.shape[0]
    p = int(degree)
    n_ctrl = min(n_pts, 50) if n_ctrl is None else int(n_ctrl)
    if p < 1:
        raise DomainError("degree must be at least 1")
    if not p + 1 <= n_ctrl <= n_pts:
        raise DomainError(
            f"n_ctrl must lie in [{p + 1}, {n_pts}] for degree {p}, got {n_ctrl}")
    u = chord_length_params(Q) if params is None else np.asarray(params, dtype=float)
    if u.shape != (n_pts,) or u[0] != 0.0 or u[-1] != 1.0 or np.any(np.diff(u) < 0):
        raise DomainError("params must increase from 0 to 1, one per point")
    kv = KnotVector(p, averaging_knots(u, p, n_ctrl) if knots is None else knots)
    if kv.n_basis != n_ctrl:
        raise DomainError(f"knot vector has {kv.n_basis} basis functions, expected {n_ctrl}")
    N = basis_matrix(kv, u)[0]
    P = np.empty((n_ctrl, Q.shape[1]))
    P[0], P[-1] = Q[0], Q[-1]
    if n_ctrl > 2:
        A = N[1:-1, 1:-1]
        R = Q[1:-1] - np.outer(N[1:-1, 0], Q[0]) - np.outer(N[1:-1, -1], Q[-1])
        sol, _, rank, _ = np.linalg.lstsq(A, R, rcond=None)
        if rank < n_ctrl - 2:
            raise FittingError(
                f"collocation matrix has rank {rank}, need {n_ctrl - 2}; "
                f"too few data points in some knot span")
        P[1:-1] = sol
    curve = BSplineCurve(kv, P)
    resid = float(np.max(np.linalg.norm(curve(u) - Q, axis=1)))
    return PolylineFit(curve, resid, u)


@dataclass(frozen=True)
class SimilarityTransform:
    """``x -> (x - offset) * scale``."""

    offset: tuple
    scale: float

    def apply(self, x):
        return (np.asarray(x, dtype=float) - np.asarray(self.offset)) * self.scale

    def invert(self, x):
        return np.asarray(x, dtype=float) / self.scale + np.asarray(self.offset)

    def apply_curve(self, c):
        return BSplineCurve(c.knots, self.apply(c.control_points))

    def invert_curve(self, c):
        return BSplineCurve(c.knots, self.invert(c.control_points))

    def to_dict(self):
        return {"offset": list(self.offset), "scale": self.scale}

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(float(v) for v in d["offset"]), float(d["scale"]))

    @classmethod
    def identity(cls, dim=3):
        return cls((0.0,) * dim, 1.0)


def unit_box_scale(c1, c2):
    """Translate and uniformly scale both curves into [0, 1]^3.

    The joint bounding box of the control points is moved to the origin and
    its longest side scaled to 1. Returns ``(c1', c2', transform)``.
    """
    P = np.vstack([c1.control_points, c2.control_points])
    lo = P.min(axis=0)
    extent = float((P.max(axis=0) - lo).max())
    if not extent > 0.0:
        raise DegenerateGeometryError("control points have zero extent")
    tf = SimilarityTransform(tuple(lo.tolist()), 1.0 / extent)
    return tf.apply_curve(c1), tf.apply_curve(c2), tf

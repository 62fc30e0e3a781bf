"""Deterministic curve pairs used by the tests, the acceptance suite and
the CLI examples.

* :func:`cylinder_pair` lies on the cylinder ``y = x**2``; the rulings are
  vertical and the exact mapping is ``sigma(t) = t**2``.
* :func:`cylinder_family_pair` lies on the same cylinder but the second
  curve is reparametrized by an oscillating cubic spline ``x(T)``, so the
  exact mapping ``x^-1`` is not a polynomial.
* :func:`fold_pair` and :func:`helix_pair` are close to (but not exactly
  on) a generalized cone and the tangent developable of a helix. The
  second curve runs at a non-uniform speed, so ``sigma(t) = t`` pairs
  points far from the developable rulings.
* :func:`fig5_setup` reproduces the knot layout of the worked conversion
  example: two cubic curves with knots ``[0,0,0,0,.5,1,1,1,1]`` and a
  quadratic mapping with ten coefficients.
"""

from __future__ import annotations

import numpy as np

from .mapping import MappingFunction
from .preprocess import fit_polyline
from .splines import (BSplineCurve, KnotVector, bernstein_to_power,
                      extract_bezier_segments, power_to_bernstein)


def _bezier_from_power(coeffs):
    coeffs = np.asarray(coeffs, dtype=float)
    D = coeffs.shape[0] - 1
    return BSplineCurve(KnotVector.bezier(D), power_to_bernstein(coeffs, D))


def cylinder_pair():
    """``C1(t) = (t^2, t^4, 0)`` (degree 4) and ``C2(T) = (T, T^2, 1)`` (degree 2)."""
    c1 = _bezier_from_power([[0, 0, 0], [0, 0, 0], [1, 0, 0], [0, 0, 0], [0, 1, 0]])
    c2 = _bezier_from_power([[0, 0, 1], [1, 0, 0], [0, 1, 0]])
    return c1, c2


def cylinder_truth(t):
    return np.asarray(t, dtype=float) ** 2


def _oscillating_speed(n_coeffs=16, ratio=6.0):
    """Monotone cubic spline ``x(T)`` on [0, 1] with alternating slopes."""
    kv = KnotVector.uniform(3, n_coeffs)
    inc = np.where(np.arange(n_coeffs - 1) % 2 == 0, 1.0, ratio)
    b = np.concatenate([[0.0], np.cumsum(inc)])
    return BSplineCurve(kv, b / b[-1])


def cylinder_family_pair():
    """``C1(t) = (t, t^2, 0)`` and ``C2(T) = (x(T), x(T)^2, 1)``.

    ``C2`` is assembled exactly from the Bezier pieces of ``x``: each piece
    of ``x^2`` is the square of a cubic, stored with full-multiplicity
    knots at degree 6.
    """
    x = _oscillating_speed()
    c1 = _bezier_from_power([[0, 0, 0], [1, 0, 0], [0, 1, 0]])
    pieces, breaks = [], [0.0]
    for seg in extract_bezier_segments(x):
        px = bernstein_to_power(seg.control_points[:, 0])
        py = np.convolve(px, px)
        pz = np.zeros(7)
        pz[0] = 1.0
        P = np.stack([np.r_[px, np.zeros(3)], py, pz], axis=1)
        pieces.append(power_to_bernstein(P, 6))
        breaks.append(seg.source_interval[1])
    pts = np.vstack([pieces[0]] + [pc[1:] for pc in pieces[1:]])
    knots = np.concatenate([[0.0] * 7, np.repeat(breaks[1:-1], 6), [1.0] * 7])
    return c1, BSplineCurve(KnotVector(6, knots), pts)


def cylinder_family_truth(t):
    """Exact mapping ``x^-1(t)`` of :func:`cylinder_family_pair`."""
    x = _oscillating_speed()
    T = np.linspace(0.0, 1.0, 20001)
    return np.interp(t, x(T)[:, 0], T)


def _fit(points, params, n_ctrl=30):
    # fit at the construction parameters so the parametrization survives
    return fit_polyline(points, 3, n_ctrl, params=params).curve


def fold_pair(n_points=400, reparam=0.095, bump=0.1, amplitude=0.9):
    """Near-developable pair on a generalized cone with apex ``(0, 0, -1)``.

    The directrix is an S-shaped planar curve; the second curve sits
    farther along the rulings with a slowly varying ruling length, a small
    bump off the cone, and a non-uniform parametrization. ``amplitude``
    sets how far the directrix swings sideways.
    """
    u = np.linspace(0.0, 1.0, n_points)
    apex = np.array([0.0, 0.0, -1.0])

    def directrix(s):
        return np.stack([2.0 * s, amplitude * np.sin(2.0 * np.pi * s), np.zeros_like(s)], axis=1)

    c1_pts = apex + 1.0 * (directrix(u) - apex)
    w = u + reparam * np.sin(np.pi * u) * np.cos(0.5 * np.pi * u)
    lam = 1.6 + 0.15 * np.sin(np.pi * w)
    c2_pts = apex + lam[:, None] * (directrix(w) - apex)
    c2_pts[:, 2] += bump * np.sin(2.0 * np.pi * w) ** 2
    return _fit(c1_pts, u), _fit(c2_pts, u)


def helix_pair(n_points=400, reparam=0.12, bump=0.1, freq=2.0):
    """Near-developable pair on the tangent developable of a helix.

    The second curve is lifted by ``bump * sin(freq * pi * w)**2`` along
    ``z``; the lift vanishes to second order at both ends.
    """
    u = np.linspace(0.0, 1.0, n_points)

    def helix(s):
        a = np.pi * s
        return (np.stack([np.cos(a), np.sin(a), 0.4 * a], axis=1),
                np.stack([-np.sin(a), np.cos(a), np.full_like(a, 0.4)], axis=1))

    h, dh = helix(u)
    c1_pts = h + (0.8 + 0.1 * u)[:, None] * dh
    w = u + reparam * np.sin(np.pi * u)
    h2, dh2 = helix(w)
    c2_pts = h2 + (2.0 + 0.1 * w)[:, None] * dh2
    c2_pts[:, 2] += bump * np.sin(freq * np.pi * w) ** 2
    return _fit(c1_pts, u), _fit(c2_pts, u)


FIG5_CURVE_KNOTS = (0.0, 0.0, 0.0, 0.0, 0.5, 1.0, 1.0, 1.0, 1.0)
FIG5_MAP_KNOTS = (0.0, 0.0, 0.0, 1 / 6, 5 / 18, 7 / 18, 0.5, 11 / 18, 13 / 18,
                  5 / 6, 1.0, 1.0, 1.0)


def fig5_setup():
    """Cubic curves on ``[0,0,0,0,.5,1,1,1,1]`` and a quadratic mapping.

    The mapping is ``sigma(t) = t^1.3`` sampled on the Greville abscissae,
    so ``sigma^-1(0.5)`` is not one of its knots.
    """
    kv = KnotVector(3, FIG5_CURVE_KNOTS)
    c1 = BSplineCurve(kv, [[0.0, 0.0, 0.0], [0.3, 0.4, 0.0], [0.5, -0.1, 0.1],
                           [0.8, 0.2, 0.0], [1.0, 0.0, 0.0]])
    c2 = BSplineCurve(kv, [[0.0, 0.1, 1.0], [0.2, 0.5, 1.1], [0.55, 0.0, 0.9],
                           [0.75, 0.3, 1.0], [1.05, 0.1, 1.0]])
    mk = KnotVector(2, FIG5_MAP_KNOTS)
    sigma = MappingFunction.from_betas(mk, mk.greville() ** 1.3)
    return c1, c2, sigma

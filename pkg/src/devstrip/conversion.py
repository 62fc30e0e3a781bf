"""Exact conversion of a ruled strip into a degree ``1 x p*d`` B-spline surface.

The strip ``(1 - s) C1(t) + s C2(sigma(t))`` is piecewise polynomial in
``t`` once the parameter line is cut at every breakpoint of ``C1``, of
``sigma``, and at every preimage ``sigma^-1(u)`` of a knot ``u`` of ``C2``.
On each such piece ``C2(sigma(t))`` is a polynomial of degree ``p * d``,
obtained by composing power-basis forms. ``C1`` is degree-elevated to
match, and the pieces are assembled with interior knot multiplicity
``p * d``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import ConversionError, DomainError
from .mapping import MappingFunction
from .splines import (KNOT_TOL, BezierSegment, KnotVector, basis_matrix,
                      bernstein_to_power, compose_polynomials,
                      extract_bezier_segments, power_to_bernstein, refine)

#: sigma(b) - sigma(a) at or below this marks a flat piece.
FLAT_TOL = 1e-14


@dataclass(frozen=True, eq=False)
class BSplineSurface:
    """Tensor-product B-spline surface.

    ``control_net[k, i]`` is the control point for basis ``N_k`` in ``s``
    and ``N_i`` in ``t``.

    ``source_breaks`` (optional) lists the strip parameters ``v_j`` of the
    piece boundaries, so :meth:`source_parameter` can map the surface's
    ``t`` back to the strip's.
    """

    knots_s: KnotVector
    knots_t: KnotVector
    control_net: np.ndarray
    source_breaks: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        P = np.array(self.control_net, dtype=float)
        if P.shape[:2] != (self.knots_s.n_basis, self.knots_t.n_basis):
            raise DomainError(
                f"control net shape {P.shape[:2]} does not match knot vectors "
                f"({self.knots_s.n_basis}, {self.knots_t.n_basis})")
        P.setflags(write=False)
        object.__setattr__(self, "control_net", P)

    @property
    def degree_s(self):
        return self.knots_s.degree

    @property
    def degree_t(self):
        return self.knots_t.degree

    @property
    def n_pieces(self):
        return self.knots_t.interior().size + 1

    def eval(self, s, t):
        """Points at paired parameters (``s`` and ``t`` broadcast)."""
        s_b, t_b = np.broadcast_arrays(np.asarray(s, dtype=float),
                                       np.asarray(t, dtype=float))
        ss, tt = np.atleast_1d(s_b).ravel(), np.atleast_1d(t_b).ravel()
        Bs = basis_matrix(self.knots_s, ss)[0]
        Bt = basis_matrix(self.knots_t, tt)[0]
        out = np.einsum("mk,mi,kid->md", Bs, Bt, self.control_net)
        return out.reshape(np.shape(t_b) + (self.control_net.shape[-1],))

    __call__ = eval

    def eval_grid(self, s, t):
        """Points on the grid ``s x t``, shape ``(len(s), len(t), 3)``."""
        Bs = basis_matrix(self.knots_s, np.atleast_1d(s))[0]
        Bt = basis_matrix(self.knots_t, np.atleast_1d(t))[0]
        return np.einsum("ak,bi,kid->abd", Bs, Bt, self.control_net)

    def source_parameter(self, t):
        """Strip parameter corresponding to surface parameter ``t``.

        Piece ``j`` covers ``[w_j, w_{j+1}]`` on the surface and
        ``[v_j, v_{j+1}]`` on the strip, related affinely.
        """
        if self.source_breaks is None:
            raise DomainError("surface carries no source breakpoints")
        w = np.concatenate([[0.0], np.unique(self.knots_t.interior()), [1.0]])
        return np.interp(t, w, self.source_breaks)

    def to_dict(self):
        d = {"degree_s": self.degree_s, "degree_t": self.degree_t,
             "knots_s": self.knots_s.knots.tolist(),
             "knots_t": self.knots_t.knots.tolist(),
             "control_net": self.control_net.tolist()}
        if self.source_breaks is not None:
            d["source_breaks"] = np.asarray(self.source_breaks).tolist()
        return d

    @classmethod
    def from_dict(cls, d):
        breaks = d.get("source_breaks")
        return cls(KnotVector(int(d["degree_s"]), d["knots_s"]),
                   KnotVector(int(d["degree_t"]), d["knots_t"]),
                   np.asarray(d["control_net"], dtype=float),
                   None if breaks is None else np.asarray(breaks, dtype=float))


@dataclass(frozen=True, eq=False)
class AlignedKnotTriple:
    """Refined objects after knot alignment.

    ``breaks`` are the distinct breakpoints ``v_j`` of the refined mapping
    (including 0 and 1) and ``images`` the values ``sigma(v_j)``.
    """

    c1: object
    c2: object
    sigma: object
    breaks: np.ndarray
    images: np.ndarray

    @property
    def correspondence(self):
        return list(zip(self.breaks.tolist(), self.images.tolist()))

    @property
    def gamma_sigma(self):
        return self.sigma.knots

    @property
    def gamma1(self):
        return self.c1.knots

    @property
    def gamma2(self):
        return self.c2.knots


def _merge(values, tol=KNOT_TOL):
    """Sorted values with near-duplicates collapsed onto the first one."""
    out = []
    for v in sorted(values):
        if not out or v - out[-1] > tol:
            out.append(v)
    return out


def step1_align_knots(c1, c2, sigma):
    """Refine ``C1``, ``C2`` and ``sigma`` to a common piece structure.

    Raises
    ------
    ConversionError
        When a knot of ``C2`` is hit by a flat stretch of ``sigma`` (its
        preimage is an interval rather than a point).
    """
    T0, T1 = sigma.range
    base = list(sigma.knots.interior()) + list(c1.knots.interior())
    for u in np.unique(c2.knots.interior()):
        if T0 + KNOT_TOL < u < T1 - KNOT_TOL:
            v, strict = sigma.inverse(u, full_output=True)
            if not strict:
                raise ConversionError(
                    f"mapping is flat at the preimage of knot {u!r}", interval=(v, v))
            base.append(v)
    inner = [v for v in _merge(base) if KNOT_TOL < v < 1.0 - KNOT_TOL]
    sig_ref = sigma.to_scalar_spline().refine(inner)
    sigma_ref = MappingFunction.from_betas(
        sig_ref.knots, np.maximum.accumulate(sig_ref.control_points[:, 0]))
    # refinement snaps near-coincident values onto existing knots; take the
    # breakpoints from the refined mapping so all three objects agree
    inner = sigma_ref.knots.interior()
    breaks = np.concatenate([[0.0], inner, [1.0]])
    c1_ref = refine(c1, inner)
    images = sigma(breaks)
    c2_ref = refine(c2, [T for T in images[1:-1] if 0.0 < T < 1.0])
    return AlignedKnotTriple(c1_ref, c2_ref, sigma_ref, breaks, np.asarray(images))


def step3_reparametrize_segment(c2_seg, sigma_seg):
    """Compose a ``C2`` piece with a normalized ``sigma`` piece.

    ``c2_seg`` is the degree-``p`` Bezier form of ``C2`` over
    ``[sigma(a), sigma(b)]`` and ``sigma_seg`` the degree-``d`` Bezier form
    of ``sigma`` over ``[a, b]``. The result is ``C2(sigma(t))`` on
    ``[a, b]`` as a degree ``p * d`` Bezier segment.
    """
    y = sigma_seg.control_points[:, 0]
    lo, hi = y[0], y[-1]
    if not hi - lo > FLAT_TOL:
        raise ConversionError(
            f"mapping is flat on [{sigma_seg.source_interval[0]}, "
            f"{sigma_seg.source_interval[1]}]", interval=sigma_seg.source_interval)
    inner = bernstein_to_power((y - lo) / (hi - lo))
    outer = c2_seg.to_power()
    D = c2_seg.degree * sigma_seg.degree
    comp = compose_polynomials(outer, inner)
    return BezierSegment(power_to_bernstein(comp, D), sigma_seg.source_interval)


def step4_elevate_segment(c1_seg, target_degree):
    """Degree elevation of a ``C1`` piece through the power basis."""
    return c1_seg.elevate(target_degree)


def _c2_piece(c2, segs, breaks, lo, hi):
    """Bezier form of ``C2`` over ``[lo, hi]`` (may leave [0, 1])."""
    mid = 0.5 * (lo + hi)
    j = int(np.clip(np.searchsorted(breaks, mid, side="right") - 1, 0, len(segs) - 1))
    seg = segs[j]
    a, b = seg.source_interval
    return seg.restrict((lo - a) / (b - a), (hi - a) / (b - a))


def assemble(c1_pieces, c2_pieces, knot_mode="uniform", breaks=None):
    """Join matching pieces into a ``1 x D`` B-spline surface.

    ``knot_mode`` ``"uniform"`` spaces the pieces evenly in ``t``;
    ``"span"`` uses ``breaks`` so the surface parameter equals the strip's.
    """
    if len(c1_pieces) != len(c2_pieces) or not c1_pieces:
        raise DomainError(
            f"piece counts differ: {len(c1_pieces)} vs {len(c2_pieces)}")
    D = c1_pieces[0].degree
    if any(p.degree != D for p in list(c1_pieces) + list(c2_pieces)):
        raise DomainError("all pieces must share one degree")
    n = len(c1_pieces)
    if knot_mode == "uniform":
        w = np.linspace(0.0, 1.0, n + 1)
    elif knot_mode == "span":
        if breaks is None or len(breaks) != n + 1:
            raise DomainError("span mode needs one breakpoint per piece boundary")
        w = np.asarray(breaks, dtype=float)
    else:
        raise DomainError(f"unknown knot mode {knot_mode!r}")

    def row(pieces):
        pts = [pieces[0].control_points]
        pts += [p.control_points[1:] for p in pieces[1:]]
        return np.vstack(pts)

    net = np.stack([row(c1_pieces), row(c2_pieces)])
    knots_t = np.concatenate([[0.0] * (D + 1), np.repeat(w[1:-1], D), [1.0] * (D + 1)])
    src = None if breaks is None else np.asarray(breaks, dtype=float)
    return BSplineSurface(KnotVector(1, [0.0, 0.0, 1.0, 1.0]),
                          KnotVector(D, knots_t), net, src)


def convert(strip, knot_mode="uniform"):
    """Algorithm steps 1 to 5 on a :class:`~devstrip.surface.RuledStrip`."""
    c1, c2, sigma = strip.c1, strip.c2, strip.sigma
    if c1.degree != c2.degree:
        raise DomainError("boundary curves must share a degree; make them compatible first")
    aligned = step1_align_knots(c1, c2, sigma)
    p, d = c1.degree, sigma.degree
    D = p * d
    sig_segs = extract_bezier_segments(aligned.sigma.to_scalar_spline())
    c1_segs = extract_bezier_segments(aligned.c1)
    c2_segs = extract_bezier_segments(aligned.c2)
    c2_breaks = np.array([s.source_interval[0] for s in c2_segs] + [1.0])
    if len(sig_segs) != len(c1_segs):
        raise ConversionError("refined C1 and mapping disagree on piece count",
                              interval=(0.0, 1.0))
    top, bottom = [], []
    for s_seg, c1_seg in zip(sig_segs, c1_segs):
        y = s_seg.control_points[:, 0]
        if not y[-1] - y[0] > FLAT_TOL:
            raise ConversionError(
                f"mapping is flat on [{s_seg.source_interval[0]}, "
                f"{s_seg.source_interval[1]}]", interval=s_seg.source_interval)
        piece2 = _c2_piece(aligned.c2, c2_segs, c2_breaks, y[0], y[-1])
        bottom.append(step3_reparametrize_segment(piece2, s_seg))
        top.append(step4_elevate_segment(c1_seg, D))
    return assemble(top, bottom, knot_mode, aligned.breaks)

"""B-spline and Bezier algebra on clamped knot vectors over [0, 1].

Everything here is a pure function of immutable inputs. Control points are
stored as ``(n, dim)`` float arrays, so the same code serves spatial curves
(``dim == 3``) and scalar functions (``dim == 1``).

Evaluation uses the triangular scheme for basis functions and their
derivatives; knot insertion is Boehm's algorithm; whole-curve degree
elevation follows the Bezier-decompose / elevate / remove-knots scheme.
Power <-> Bernstein conversions use exact integer binomials.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from .exceptions import DomainError, KnotMultiplicityError

#: Two knots closer than this are treated as the same knot.
KNOT_TOL = 1e-9
#: Parameters this far outside [0, 1] are snapped back instead of rejected.
PARAM_SLACK = 1e-12
#: Largest composed degree the power-basis route is documented for.
MAX_COMPOSED_DEGREE = 15


def _readonly(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class KnotVector:
    """Clamped, nondecreasing knot sequence on [0, 1].

    Parameters
    ----------
    degree : int
        Polynomial degree of the associated basis.
    knots : array_like
        Full knot sequence, ``degree + 1`` zeros first and ``degree + 1``
        ones last.
    """

    degree: int
    knots: np.ndarray

    def __post_init__(self):
        p = int(self.degree)
        k = _readonly(self.knots)
        object.__setattr__(self, "degree", p)
        object.__setattr__(self, "knots", k)
        if p < 0:
            raise DomainError("degree must be nonnegative")
        if k.ndim != 1 or k.size < 2 * p + 2:
            raise DomainError(f"need at least {2 * p + 2} knots for degree {p}")
        if np.any(np.diff(k) < 0):
            raise DomainError("knots must be nondecreasing")
        if np.any(k[: p + 1] != 0.0) or np.any(k[-p - 1:] != 1.0):
            raise DomainError("knot vector must be clamped to [0, 1]")
        interior = k[p + 1: k.size - p - 1]
        if interior.size and (interior[0] <= 0.0 or interior[-1] >= 1.0):
            raise DomainError("end knots must have multiplicity degree + 1")
        for u in np.unique(interior):
            if np.count_nonzero(interior == u) > p:
                raise KnotMultiplicityError(
                    f"interior knot {u!r} exceeds multiplicity {p}")

    @classmethod
    def uniform(cls, degree, n_basis):
        """Clamped knot vector with uniformly spaced interior knots."""
        if n_basis < degree + 1:
            raise DomainError(
                f"degree {degree} needs at least {degree + 1} basis functions")
        n_int = n_basis - degree - 1
        interior = np.arange(1, n_int + 1) / (n_int + 1)
        return cls(degree, np.concatenate(
            [np.zeros(degree + 1), interior, np.ones(degree + 1)]))

    @classmethod
    def bezier(cls, degree):
        return cls(degree, np.r_[np.zeros(degree + 1), np.ones(degree + 1)])

    @property
    def n_basis(self):
        return self.knots.size - self.degree - 1

    def interior(self):
        """Distinct interior knot values."""
        p = self.degree
        return np.unique(self.knots[p + 1: self.knots.size - p - 1])

    def multiplicity(self, u):
        return int(np.count_nonzero(np.abs(self.knots - u) <= KNOT_TOL))

    def greville(self):
        """Knot averages; the coefficients that reproduce ``f(t) = t``."""
        p = self.degree
        if p == 0:
            return 0.5 * (self.knots[:-1] + self.knots[1:])
        idx = np.arange(self.n_basis)[:, None] + np.arange(1, p + 1)
        return self.knots[idx].mean(axis=1)

    def __eq__(self, other):
        if not isinstance(other, KnotVector):
            return NotImplemented
        return (self.degree == other.degree
                and self.knots.shape == other.knots.shape
                and bool(np.all(np.abs(self.knots - other.knots) <= KNOT_TOL)))

    def __hash__(self):
        return hash((self.degree, self.knots.size))

    def __repr__(self):
        return f"KnotVector(degree={self.degree}, knots={self.knots.tolist()})"


# ---------------------------------------------------------------------------
# Low level evaluation on raw arrays
# ---------------------------------------------------------------------------

def _spans(knots, degree, t):
    """Vectorized span lookup; parameters outside the knot range use the
    first or last nondegenerate span (polynomial extrapolation)."""
    n = knots.size - degree - 2
    s = np.searchsorted(knots, t, side="right") - 1
    return np.clip(s, degree, n)


def _basis_ders(knots, degree, spans, t, nder):
    """Nonzero basis functions and derivatives up to ``nder``.

    Returns an array of shape ``(len(t), nder + 1, degree + 1)``; entry
    ``[m, k, r]`` is the k-th derivative of basis ``spans[m] - degree + r``.
    """
    p = degree
    t = np.asarray(t, dtype=float)
    m = t.size
    ndu = np.zeros((m, p + 1, p + 1))
    ndu[:, 0, 0] = 1.0
    left = np.zeros((m, p + 1))
    right = np.zeros((m, p + 1))
    for j in range(1, p + 1):
        left[:, j] = t - knots[spans + 1 - j]
        right[:, j] = knots[spans + j] - t
        saved = np.zeros(m)
        for r in range(j):
            ndu[:, j, r] = right[:, r + 1] + left[:, j - r]
            temp = ndu[:, r, j - 1] / ndu[:, j, r]
            ndu[:, r, j] = saved + right[:, r + 1] * temp
            saved = left[:, j - r] * temp
        ndu[:, j, j] = saved

    ders = np.zeros((m, nder + 1, p + 1))
    ders[:, 0, :] = ndu[:, :, p]
    top = min(nder, p)
    a = np.zeros((m, 2, p + 1))
    for r in range(p + 1):
        s1, s2 = 0, 1
        a[:] = 0.0
        a[:, 0, 0] = 1.0
        for k in range(1, top + 1):
            d = np.zeros(m)
            rk, pk = r - k, p - k
            if r >= k:
                a[:, s2, 0] = a[:, s1, 0] / ndu[:, pk + 1, rk]
                d += a[:, s2, 0] * ndu[:, rk, pk]
            j1 = 1 if rk >= -1 else -rk
            j2 = k - 1 if r - 1 <= pk else p - r
            for j in range(j1, j2 + 1):
                a[:, s2, j] = (a[:, s1, j] - a[:, s1, j - 1]) / ndu[:, pk + 1, rk + j]
                d += a[:, s2, j] * ndu[:, rk + j, pk]
            if r <= pk:
                a[:, s2, k] = -a[:, s1, k - 1] / ndu[:, pk + 1, r]
                d += a[:, s2, k] * ndu[:, r, pk]
            ders[:, k, r] = d
            s1, s2 = s2, s1
    fac = p
    for k in range(1, top + 1):
        ders[:, k, :] *= fac
        fac *= p - k
    return ders


def _check_params(t, extrapolate):
    t = np.asarray(t, dtype=float)
    if not np.all(np.isfinite(t)):
        raise DomainError("parameter values must be finite")
    if extrapolate:
        return t
    if np.any(t < -PARAM_SLACK) or np.any(t > 1.0 + PARAM_SLACK):
        bad = t[(t < -PARAM_SLACK) | (t > 1.0 + PARAM_SLACK)].ravel()[0]
        raise DomainError(f"parameter {bad!r} outside [0, 1]")
    return np.clip(t, 0.0, 1.0)


def basis_matrix(kv, t, nder=0, extrapolate=False):
    """Dense collocation matrices of the basis and its derivatives.

    Returns an array of shape ``(nder + 1, len(t), kv.n_basis)``.
    """
    t = np.atleast_1d(_check_params(t, extrapolate))
    p = kv.degree
    spans = _spans(kv.knots, p, t)
    ders = _basis_ders(kv.knots, p, spans, t, nder)
    out = np.zeros((nder + 1, t.size, kv.n_basis))
    rows = np.arange(t.size)[:, None]
    cols = spans[:, None] - p + np.arange(p + 1)
    for k in range(nder + 1):
        out[k, rows, cols] = ders[:, k, :]
    return out


def _eval_raw(knots, degree, ctrl, t, nder):
    spans = _spans(knots, degree, t)
    ders = _basis_ders(knots, degree, spans, t, nder)
    idx = spans[:, None] - degree + np.arange(degree + 1)
    # (m, p+1, dim) gathered control points
    pts = ctrl[idx]
    return np.einsum("mkr,mrd->kmd", ders, pts)


# ---------------------------------------------------------------------------
# Public point-wise operations
# ---------------------------------------------------------------------------

def find_span(kv, t):
    """Index ``i`` with ``knots[i] <= t < knots[i + 1]``.

    ``t == 1`` maps to the last nondegenerate span.
    """
    t = float(_check_params(t, False))
    return int(_spans(kv.knots, kv.degree, np.array([t]))[0])


def basis_functions(kv, t, span=None):
    """The ``degree + 1`` nonzero basis values at ``t``."""
    t = float(_check_params(t, False))
    if span is None:
        span = find_span(kv, t)
    return _basis_ders(kv.knots, kv.degree, np.array([span]), np.array([t]), 0)[0, 0]


@dataclass(frozen=True, eq=False)
class BSplineCurve:
    """Nonrational B-spline curve on a clamped knot vector.

    Parameters
    ----------
    knots : KnotVector
    control_points : array_like, shape (n, dim)
        One row per basis function. A 1-D array is read as scalar data.
    """

    knots: KnotVector
    control_points: np.ndarray

    def __post_init__(self):
        P = np.array(self.control_points, dtype=float)
        if P.ndim == 1:
            P = P[:, None]
        if P.ndim != 2:
            raise DomainError("control_points must be a 2-D array")
        if P.shape[0] != self.knots.n_basis:
            raise DomainError(
                f"{P.shape[0]} control points do not match {self.knots.n_basis} "
                f"basis functions of the knot vector")
        if not np.all(np.isfinite(P)):
            raise DomainError("control points must be finite")
        P.setflags(write=False)
        object.__setattr__(self, "control_points", P)

    @classmethod
    def from_arrays(cls, degree, knots, points):
        return cls(KnotVector(degree, knots), points)

    @property
    def degree(self):
        return self.knots.degree

    @property
    def dim(self):
        return self.control_points.shape[1]

    def __call__(self, t, extrapolate=False):
        return self.derivatives(t, 0, extrapolate)[0]

    def derivatives(self, t, order, extrapolate=False):
        """Curve and derivatives up to ``order``.

        Returns shape ``(order + 1, len(t), dim)`` for array input and
        ``(order + 1, dim)`` for scalar input.
        """
        scalar = np.ndim(t) == 0
        tt = np.atleast_1d(_check_params(t, extrapolate)).astype(float)
        out = _eval_raw(self.knots.knots, self.degree, self.control_points, tt, order)
        return out[:, 0] if scalar else out

    def insert_knot(self, u, times=1):
        return insert_knot(self, u, times)

    def refine(self, values):
        return refine(self, values)

    def elevate_degree(self, target_degree):
        return elevate_degree(self, target_degree)

    def bezier_segments(self):
        return extract_bezier_segments(self)

    def reversed(self):
        """Same trace traversed from ``t = 1`` to ``t = 0``."""
        k = 1.0 - self.knots.knots[::-1]
        return BSplineCurve(KnotVector(self.degree, k), self.control_points[::-1])

    def subcurve(self, a, b):
        """Restriction to ``[a, b]``, reparametrized onto [0, 1]."""
        return subcurve(self, a, b)

    def to_dict(self):
        return {"degree": self.degree, "knots": self.knots.knots.tolist(),
                "points": self.control_points.tolist()}

    def __repr__(self):
        return (f"BSplineCurve(degree={self.degree}, n_ctrl={self.knots.n_basis}, "
                f"dim={self.dim})")


def eval_curve(c, t):
    return c(t)


def eval_derivatives(c, t, k):
    return c.derivatives(t, k)


# ---------------------------------------------------------------------------
# Knot insertion / refinement
# ---------------------------------------------------------------------------

def _insert_raw(knots, degree, ctrl, u, times):
    """Boehm insertion on raw arrays; works for unclamped knots too."""
    p = degree
    U = knots
    n = ctrl.shape[0] - 1
    k = int(np.searchsorted(U, u, side="right") - 1)
    k = min(max(k, p), n)
    s = int(np.count_nonzero(U == u))
    r = times
    Q = np.empty((n + 1 + r, ctrl.shape[1]))
    UQ = np.empty(U.size + r)
    UQ[: k + 1] = U[: k + 1]
    UQ[k + 1: k + 1 + r] = u
    UQ[k + 1 + r:] = U[k + 1:]
    Q[: k - p + 1] = ctrl[: k - p + 1]
    Q[k - s + r: n + r + 1] = ctrl[k - s: n + 1]
    R = ctrl[k - p: k - s + 1].copy()
    L = k - p
    for j in range(1, r + 1):
        L = k - p + j
        for i in range(p - j - s + 1):
            alpha = (u - U[L + i]) / (U[i + k + 1] - U[L + i])
            R[i] = alpha * R[i + 1] + (1.0 - alpha) * R[i]
        Q[L] = R[0]
        Q[k + r - j - s] = R[p - j - s]
    for i in range(L + 1, k - s):
        Q[i] = R[i - L]
    return UQ, Q


def _snap(kv, u):
    """Snap ``u`` onto an existing knot within KNOT_TOL."""
    near = np.abs(kv.knots - u) <= KNOT_TOL
    return float(kv.knots[near][0]) if near.any() else float(u)


def insert_knot(c, u, times=1):
    """Insert ``u`` into ``c`` ``times`` times without moving the curve."""
    if times < 0:
        raise DomainError("times must be nonnegative")
    if not 0.0 < u < 1.0:
        if times == 0:
            return c
        raise DomainError(f"can only insert interior knots, got {u!r}")
    if times == 0:
        return c
    u = _snap(c.knots, u)
    p = c.degree
    have = int(np.count_nonzero(c.knots.knots == u))
    if have + times > p:
        raise KnotMultiplicityError(
            f"knot {u!r} already has multiplicity {have}; inserting {times} more "
            f"exceeds degree {p}")
    UQ, Q = _insert_raw(c.knots.knots, p, c.control_points, u, times)
    return BSplineCurve(KnotVector(p, UQ), Q)


def refine(c, values):
    """Insert each value once, skipping values already present."""
    out = c
    for u in sorted(float(v) for v in values):
        if 0.0 < u < 1.0 and out.knots.multiplicity(u) == 0:
            out = insert_knot(out, u, 1)
    return out


def raise_multiplicity(c, u, target):
    """Insert ``u`` until it has multiplicity ``target`` (no-op if already)."""
    u = _snap(c.knots, u)
    have = int(np.count_nonzero(c.knots.knots == u))
    return insert_knot(c, u, target - have) if target > have else c


def subcurve(c, a, b):
    if not 0.0 <= a < b <= 1.0:
        raise DomainError(f"invalid interval [{a}, {b}]")
    p = c.degree
    sub = c
    for u in (a, b):
        if 0.0 < u < 1.0:
            sub = raise_multiplicity(sub, u, p)
    U = sub.knots.knots
    a, b = _snap(sub.knots, a), _snap(sub.knots, b)
    knots = np.concatenate([[a] * (p + 1), U[(U > a) & (U < b)], [b] * (p + 1)])
    # at a knot of multiplicity p the curve interpolates the preceding point
    start = 0 if a == 0.0 else int(np.searchsorted(U, a, side="left")) - 1
    P = sub.control_points[start: start + knots.size - p - 1]
    knots = (knots - a) / (b - a)
    knots[: p + 1] = 0.0
    knots[-p - 1:] = 1.0
    return BSplineCurve(KnotVector(p, knots), P)


# ---------------------------------------------------------------------------
# Bezier segments and basis conversion
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class BezierSegment:
    """Polynomial piece in Bernstein form.

    ``source_interval`` records the parameter interval ``[a, b]`` of the
    curve it came from; local parameter ``u`` corresponds to ``a + u (b - a)``.
    """

    control_points: np.ndarray
    source_interval: tuple = (0.0, 1.0)

    def __post_init__(self):
        P = np.array(self.control_points, dtype=float)
        if P.ndim == 1:
            P = P[:, None]
        P.setflags(write=False)
        object.__setattr__(self, "control_points", P)
        a, b = self.source_interval
        object.__setattr__(self, "source_interval", (float(a), float(b)))

    @property
    def degree(self):
        return self.control_points.shape[0] - 1

    def __call__(self, u):
        """De Casteljau evaluation; ``u`` may be a scalar or an array."""
        scalar = np.ndim(u) == 0
        u = np.atleast_1d(np.asarray(u, dtype=float))[:, None, None]
        pts = np.broadcast_to(self.control_points, (u.shape[0],) + self.control_points.shape)
        pts = pts.copy()
        for r in range(1, self.degree + 1):
            pts = (1.0 - u) * pts[:, :-1] + u * pts[:, 1:]
        out = pts[:, 0]
        return out[0] if scalar else out

    def to_power(self):
        return bernstein_to_power(self.control_points)

    def elevate(self, target_degree):
        """Degree elevation through the power basis."""
        if target_degree < self.degree:
            raise DomainError("cannot lower the degree of a Bezier segment")
        return BezierSegment(power_to_bernstein(self.to_power(), target_degree),
                             self.source_interval)

    def split(self, u):
        """De Casteljau subdivision at local parameter ``u``."""
        P = self.control_points.copy()
        left, right = [P[0].copy()], [P[-1].copy()]
        for _ in range(self.degree):
            P = (1.0 - u) * P[:-1] + u * P[1:]
            left.append(P[0].copy())
            right.append(P[-1].copy())
        a, b = self.source_interval
        m = a + u * (b - a)
        return (BezierSegment(np.array(left), (a, m)),
                BezierSegment(np.array(right[::-1]), (m, b)))

    def restrict(self, lo, hi):
        """Same polynomial re-expressed over local ``[lo, hi]``.

        ``lo`` and ``hi`` may lie outside [0, 1]; the result is then the
        polynomial continuation of the segment.
        """
        if hi <= lo:
            raise DomainError("empty restriction interval")
        if lo == 0.0 and hi == 1.0:
            return self
        seg = self
        if hi != 1.0:
            seg = seg.split(hi)[0]
        if lo != 0.0:
            seg = seg.split(lo / hi)[1]
        a, b = self.source_interval
        return BezierSegment(seg.control_points, (a + lo * (b - a), a + hi * (b - a)))


def extract_bezier_segments(c):
    """Split ``c`` into one Bezier segment per nondegenerate knot span."""
    p = c.degree
    full = c
    for u in c.knots.interior():
        full = raise_multiplicity(full, u, p)
    breaks = np.concatenate([[0.0], full.knots.interior(), [1.0]])
    P = full.control_points
    return [BezierSegment(P[j * p: j * p + p + 1], (breaks[j], breaks[j + 1]))
            for j in range(breaks.size - 1)]


def bernstein_to_power_matrix(D):
    """Matrix ``M`` with ``power = M @ bernstein`` for degree ``D``."""
    M = np.zeros((D + 1, D + 1))
    for k in range(D + 1):
        for i in range(k + 1):
            M[k, i] = (-1) ** (k - i) * comb(D, i) * comb(D - i, k - i)
    return M


def power_to_bernstein_matrix(D):
    """Matrix with entries ``C(i, k) / C(D, k)`` (zero for ``i < k``)."""
    M = np.zeros((D + 1, D + 1))
    for i in range(D + 1):
        for k in range(i + 1):
            M[i, k] = comb(i, k) / comb(D, k)
    return M


def _as_coeffs(c):
    c = np.asarray(c, dtype=float)
    return (c[:, None], True) if c.ndim == 1 else (c, False)


def power_to_bernstein(coeffs, D):
    """Bernstein coefficients of degree ``D`` for ascending power coefficients."""
    c, flat = _as_coeffs(coeffs)
    deg = c.shape[0] - 1
    if deg > D:
        if np.any(c[D + 1:] != 0.0):
            raise DomainError(f"polynomial of degree {deg} does not fit degree {D}")
        c = c[: D + 1]
    c = np.vstack([c, np.zeros((D + 1 - c.shape[0], c.shape[1]))])
    out = power_to_bernstein_matrix(D) @ c
    return out[:, 0] if flat else out


def bernstein_to_power(coeffs):
    c, flat = _as_coeffs(coeffs)
    out = bernstein_to_power_matrix(c.shape[0] - 1) @ c
    return out[:, 0] if flat else out


def polyval(coeffs, t):
    """Evaluate ascending power coefficients by Horner's rule."""
    c, flat = _as_coeffs(coeffs)
    t = np.asarray(t, dtype=float)
    r = np.zeros(t.shape + (c.shape[1],))
    for a in c[::-1]:
        r = r * t[..., None] + a
    return r[..., 0] if flat else r


def compose_polynomials(outer, inner):
    """Power coefficients of ``outer(inner(t))``.

    ``outer`` may be vector valued (shape ``(p + 1, dim)``); ``inner`` is
    scalar. Accumulation runs in extended precision.
    """
    o, flat = _as_coeffs(outer)
    q = np.asarray(inner, dtype=np.longdouble).ravel()
    p = o.shape[0] - 1
    d = q.size - 1
    if p * d > MAX_COMPOSED_DEGREE:
        raise DomainError(
            f"composed degree {p * d} exceeds supported bound {MAX_COMPOSED_DEGREE}")
    o = o.astype(np.longdouble)
    res = np.zeros((p * d + 1, o.shape[1]), dtype=np.longdouble)
    acc = o[p][None, :].copy()
    for a in o[p - 1:: -1] if p > 0 else []:
        prod = np.stack([np.convolve(acc[:, j], q) for j in range(o.shape[1])], axis=1)
        prod[0] += a
        acc = prod
    res[: acc.shape[0]] = acc
    res = res.astype(float)
    return res[:, 0] if flat else res


# ---------------------------------------------------------------------------
# Degree elevation
# ---------------------------------------------------------------------------

def elevate_degree(c, target_degree):
    """Raise the degree of ``c`` to ``target_degree``; the trace is unchanged.

    Interior knot multiplicities grow by the degree increase, preserving the
    continuity at every knot.
    """
    p = c.degree
    t = int(target_degree) - p
    if t < 0:
        raise DomainError(
            f"target degree {target_degree} is below current degree {p}")
    if t == 0:
        return c
    U = c.knots.knots
    Pw = c.control_points
    n = Pw.shape[0] - 1
    m = n + p + 1
    ph = p + t
    ph2 = ph // 2
    dim = Pw.shape[1]

    bezalfs = np.zeros((ph + 1, p + 1))
    bezalfs[0, 0] = bezalfs[ph, p] = 1.0
    for i in range(1, ph2 + 1):
        inv = 1.0 / comb(ph, i)
        for j in range(max(0, i - t), min(p, i) + 1):
            bezalfs[i, j] = inv * comb(p, j) * comb(t, i - j)
    for i in range(ph2 + 1, ph):
        for j in range(max(0, i - t), min(p, i) + 1):
            bezalfs[i, j] = bezalfs[ph - i, p - j]

    n_distinct = np.unique(U).size
    cap = Pw.shape[0] + (n_distinct - 1) * t + t + 1
    Qw = np.zeros((cap, dim))
    Uh = np.zeros(cap + ph + 1)
    bpts = np.zeros((p + 1, dim))
    ebpts = np.zeros((ph + 1, dim))
    next_bpts = np.zeros((max(p - 1, 1), dim))
    alfs = np.zeros(max(p - 1, 1))

    mh = ph
    kind = ph + 1
    r = -1
    a = p
    b = p + 1
    cind = 1
    ua = U[0]
    Qw[0] = Pw[0]
    Uh[: ph + 1] = ua
    bpts[:] = Pw[: p + 1]
    while b < m:
        i = b
        while b < m and U[b] == U[b + 1]:
            b += 1
        mul = b - i + 1
        mh = mh + mul + t
        ub = U[b]
        oldr = r
        r = p - mul
        lbz = (oldr + 2) // 2 if oldr > 0 else 1
        rbz = ph - (r + 1) // 2 if r > 0 else ph
        if r > 0:
            numer = ub - ua
            for k in range(p, mul, -1):
                alfs[k - mul - 1] = numer / (U[a + k] - ua)
            for j in range(1, r + 1):
                save = r - j
                s = mul + j
                for k in range(p, s - 1, -1):
                    bpts[k] = alfs[k - s] * bpts[k] + (1.0 - alfs[k - s]) * bpts[k - 1]
                next_bpts[save] = bpts[p]
        for i in range(lbz, ph + 1):
            ebpts[i] = 0.0
            for j in range(max(0, i - t), min(p, i) + 1):
                ebpts[i] += bezalfs[i, j] * bpts[j]
        if oldr > 1:
            first = kind - 2
            last = kind
            den = ub - ua
            bet = (ub - Uh[kind - 1]) / den
            for tr in range(1, oldr):
                i = first
                j = last
                kj = j - kind + 1
                while j - i > tr:
                    if i < cind:
                        alf = (ub - Uh[i]) / (ua - Uh[i])
                        Qw[i] = alf * Qw[i] + (1.0 - alf) * Qw[i - 1]
                    if j >= lbz:
                        if j - tr <= kind - ph + oldr:
                            gam = (ub - Uh[j - tr]) / den
                            ebpts[kj] = gam * ebpts[kj] + (1.0 - gam) * ebpts[kj + 1]
                        else:
                            ebpts[kj] = bet * ebpts[kj] + (1.0 - bet) * ebpts[kj + 1]
                    i += 1
                    j -= 1
                    kj -= 1
                first -= 1
                last += 1
        if a != p:
            for _ in range(ph - oldr):
                Uh[kind] = ua
                kind += 1
        for j in range(lbz, rbz + 1):
            Qw[cind] = ebpts[j]
            cind += 1
        if b < m:
            bpts[:r] = next_bpts[:r]
            for j in range(r, p + 1):
                bpts[j] = Pw[b - p + j]
            a = b
            b += 1
            ua = ub
        else:
            Uh[kind: kind + ph + 1] = ub
    nh = mh - ph - 1
    return BSplineCurve(KnotVector(ph, Uh[: nh + ph + 2]), Qw[: nh + 1])

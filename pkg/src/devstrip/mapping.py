"""Monotone parametrization mapping functions.

A :class:`MappingFunction` is a scalar B-spline whose coefficients are the
running sums of squared shape parameters, ``beta_i = eps_0**2 + ... +
eps_i**2``. Coefficients are therefore nondecreasing for every parameter
vector, which makes the function nondecreasing without any constraint in
the optimizer.

:class:`DiscreteMapping` applies the same squared-increment trick to a
finite list of target parameters.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .exceptions import DomainError, MappingRangeError
from .splines import BSplineCurve, KnotVector, basis_matrix

INVERSE_TOL = 1e-12
INVERSE_MAX_ITER = 100


def betas_from_epsilons(eps):
    return np.cumsum(np.square(np.asarray(eps, dtype=float)))


def epsilons_from_betas(betas):
    """Inverse of :func:`betas_from_epsilons` for nondecreasing ``betas``."""
    b = np.asarray(betas, dtype=float)
    inc = np.diff(b, prepend=0.0)
    if np.any(inc < -1e-15):
        raise DomainError("coefficients must be nonnegative and nondecreasing")
    return np.sqrt(np.maximum(inc, 0.0))


@dataclass(frozen=True, eq=False)
class MappingFunction:
    """Nondecreasing scalar B-spline ``sigma(t)`` on [0, 1].

    Parameters
    ----------
    knots : KnotVector
        Clamped knot vector of degree ``d``.
    epsilons : array_like
        One shape parameter per basis function.
    """

    knots: KnotVector
    epsilons: np.ndarray = field(repr=False)

    def __post_init__(self):
        eps = np.array(self.epsilons, dtype=float).ravel()
        if eps.size != self.knots.n_basis:
            raise DomainError(
                f"expected {self.knots.n_basis} shape parameters, got {eps.size}")
        if not np.all(np.isfinite(eps)):
            raise DomainError("shape parameters must be finite")
        eps.setflags(write=False)
        object.__setattr__(self, "epsilons", eps)

    @classmethod
    def from_betas(cls, knots, betas):
        return cls(knots, epsilons_from_betas(betas))

    @property
    def degree(self):
        return self.knots.degree

    @property
    def n_coeffs(self):
        return self.knots.n_basis

    @cached_property
    def betas(self):
        b = betas_from_epsilons(self.epsilons)
        b.setflags(write=False)
        return b

    def __call__(self, t):
        return self.eval(t)

    def eval(self, t):
        B = basis_matrix(self.knots, t)[0]
        out = B @ self.betas
        return float(out[0]) if np.ndim(t) == 0 else out

    def eval_prime(self, t):
        B = basis_matrix(self.knots, t, nder=1)[1]
        out = B @ self.betas
        return float(out[0]) if np.ndim(t) == 0 else out

    def derivatives(self, t, order):
        """Shape ``(order + 1, len(t))`` array of sigma and its derivatives."""
        return basis_matrix(self.knots, np.atleast_1d(t), nder=order) @ self.betas

    @property
    def range(self):
        """``(sigma(0), sigma(1))``; clamped ends interpolate the outer betas."""
        return float(self.betas[0]), float(self.betas[-1])

    def inverse(self, T, full_output=False):
        """Smallest ``t`` in [0, 1] with ``sigma(t) == T``.

        Bisection brackets the leftmost preimage; Newton steps using
        ``sigma'`` polish it when the function is strictly increasing there.

        Parameters
        ----------
        T : float
        full_output : bool, optional
            Also return a flag that is False when ``T`` sits on a flat
            plateau of ``sigma`` (so the preimage is not unique).

        Returns
        -------
        t : float
        strict : bool
            Only when ``full_output`` is True.
        """
        lo_val, hi_val = self.range
        T = float(T)
        if not lo_val - INVERSE_TOL <= T <= hi_val + INVERSE_TOL:
            raise MappingRangeError(
                f"value {T!r} outside mapping range [{lo_val}, {hi_val}]")
        lo, hi = 0.0, 1.0
        if T <= lo_val:
            t = 0.0
        else:
            for _ in range(INVERSE_MAX_ITER):
                mid = 0.5 * (lo + hi)
                if self.eval(mid) < T:
                    lo = mid
                else:
                    hi = mid
                if hi - lo <= 1e-15:
                    break
            t = hi
            for _ in range(5):
                r = self.eval(t) - T
                if abs(r) <= INVERSE_TOL:
                    break
                slope = self.eval_prime(t)
                if slope <= 0.0:
                    break
                step = t - r / slope
                if not lo <= step <= 1.0:
                    break
                t = step
        if not full_output:
            return t
        probe = min(t + 1e-7, 1.0)
        strict = self.eval_prime(t) > 0.0 or self.eval(probe) > T + 1e-14
        return t, bool(strict)

    def to_scalar_spline(self):
        """Plain scalar B-spline with the explicit coefficients ``betas``."""
        return BSplineCurve(self.knots, self.betas[:, None])

    def restrict(self, t_lo, t_hi):
        """Mapping of the sub-interval, rescaled to [0, 1] in both variables.

        Returns ``(sigma_sub, (T_lo, T_hi))`` with
        ``sigma_sub(u) = (sigma(t_lo + u (t_hi - t_lo)) - T_lo) / (T_hi - T_lo)``.
        """
        sub = self.to_scalar_spline().subcurve(t_lo, t_hi)
        b = sub.control_points[:, 0]
        T_lo, T_hi = float(b[0]), float(b[-1])
        if T_hi <= T_lo:
            raise DomainError("mapping is constant on the requested interval")
        b = np.maximum.accumulate((b - T_lo) / (T_hi - T_lo))
        return MappingFunction.from_betas(sub.knots, b), (T_lo, T_hi)

    def to_dict(self):
        return {"degree": self.degree, "knots": self.knots.knots.tolist(),
                "epsilons": self.epsilons.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(KnotVector(int(d["degree"]), d["knots"]), d["epsilons"])


def init_identity(degree=2, n_coeffs=50, knots=None):
    """Mapping that reproduces ``sigma(t) = t``.

    Coefficients are the Greville abscissae, which reproduce linear
    functions exactly; shape parameters are square roots of their
    successive differences.
    """
    if knots is None:
        if n_coeffs < degree + 1:
            raise DomainError(
                f"degree {degree} needs at least {degree + 1} coefficients")
        knots = KnotVector.uniform(degree, n_coeffs)
    if degree < 1 and knots.degree < 1:
        raise DomainError("identity needs degree >= 1")
    return MappingFunction.from_betas(knots, knots.greville())


@dataclass(frozen=True, eq=False)
class DiscreteMapping:
    """Target parameters ``T_i = alpha_0**2 + ... + alpha_i**2`` paired with
    fixed sample parameters ``t_i``."""

    t_samples: np.ndarray
    alphas: np.ndarray

    def __post_init__(self):
        t = np.array(self.t_samples, dtype=float).ravel()
        a = np.array(self.alphas, dtype=float).ravel()
        if t.size != a.size:
            raise DomainError("need one alpha per sample parameter")
        if np.any(np.diff(t) < 0):
            raise DomainError("sample parameters must be nondecreasing")
        t.setflags(write=False)
        a.setflags(write=False)
        object.__setattr__(self, "t_samples", t)
        object.__setattr__(self, "alphas", a)

    @property
    def targets(self):
        return np.cumsum(np.square(self.alphas))

    @classmethod
    def identity(cls, t_samples):
        t = np.asarray(t_samples, dtype=float)
        return cls(t, np.sqrt(np.diff(t, prepend=0.0)))

    def to_mapping_function(self, method="cubic"):
        """Continuous nondecreasing mapping through every ``(t_i, T_i)``.

        ``"linear"`` gives the degree-1 B-spline with a knot at each sample.
        ``"cubic"`` gives a C1 piecewise cubic: PCHIP slopes, shrunk where
        needed so that each piece has nondecreasing Bezier ordinates, stored
        as a degree-3 B-spline with double interior knots. Samples must
        start at 0 and end at 1.
        """
        t, T = self.t_samples, self.targets
        if t.size < 2 or t[0] != 0.0 or t[-1] != 1.0 or np.any(np.diff(t) <= 0):
            raise DomainError(
                "interpolation needs strictly increasing samples from 0 to 1")
        if method == "linear":
            kv = KnotVector(1, np.concatenate([[0.0], t, [1.0]]))
            return MappingFunction.from_betas(kv, T)
        if method != "cubic":
            raise DomainError(f"unknown interpolation method {method!r}")
        from scipy.interpolate import PchipInterpolator

        h = np.diff(t)
        delta = np.diff(T) / h
        m = PchipInterpolator(t, T).derivative()(t)
        m = np.maximum(m, 0.0)
        # Bezier ordinates T_k + h m_k / 3 <= T_{k+1} - h m_{k+1} / 3
        # hold when m_k + m_{k+1} <= 3 delta_k
        lim = np.full(t.size, np.inf)
        for k in range(h.size):
            tot = m[k] + m[k + 1]
            if tot > 3.0 * delta[k]:
                f = 3.0 * delta[k] / tot
                lim[k] = min(lim[k], f)
                lim[k + 1] = min(lim[k + 1], f)
        m = m * np.minimum(lim, 1.0)
        betas = [T[0]]
        for k in range(h.size):
            betas += [T[k] + h[k] * m[k] / 3.0, T[k + 1] - h[k] * m[k + 1] / 3.0, T[k + 1]]
        betas = np.array(betas)
        # drop the duplicated junction ordinates of the C0 Bezier chain: a
        # C1 join lets the double knot absorb them
        keep = np.ones(betas.size, dtype=bool)
        keep[3:-1:3] = False
        kv = KnotVector(3, np.concatenate([[0.0] * 4, np.repeat(t[1:-1], 2), [1.0] * 4]))
        return MappingFunction.from_betas(kv, np.maximum.accumulate(betas[keep]))

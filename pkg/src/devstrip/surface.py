"""The ruled strip ``S(s, t) = (1 - s) C1(t) + s C2(sigma(t))``."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .energy import warp_profile_from
from .exceptions import DegenerateGeometryError, DomainError
from .splines import PARAM_SLACK

_NORMAL_TOL = 1e-14


def _unit_params(x, name):
    x = np.asarray(x, dtype=float)
    if np.any(x < -PARAM_SLACK) or np.any(x > 1.0 + PARAM_SLACK):
        raise DomainError(f"{name} outside [0, 1]")
    return np.clip(x, 0.0, 1.0)


@dataclass(frozen=True)
class Mesh:
    """Quad grid of a tessellated strip.

    ``vertices`` has shape ``(nu * nv, 3)`` with vertex ``(i, j)`` (``i``
    along ``s``, ``j`` along ``t``) at row ``i * nv + j``. ``warp`` holds
    the warp angle of the ruling through each vertex, in degrees.
    """

    vertices: np.ndarray
    quads: np.ndarray
    warp: np.ndarray
    nu: int
    nv: int


@dataclass(frozen=True, eq=False)
class RuledStrip:
    """Ruled surface spanned by two curves and a mapping function.

    ``c2`` is evaluated with polynomial extrapolation where ``sigma``
    leaves [0, 1], matching the objective used to optimize ``sigma``.
    """

    c1: object
    c2: object
    sigma: object

    def _ends(self, t):
        T = np.atleast_1d(self.sigma(t))
        return self.c1(t), self.c2(T, extrapolate=True)

    def eval(self, s, t):
        """Points ``S(s, t)``; ``s`` and ``t`` broadcast against each other."""
        s = _unit_params(s, "s")
        t = _unit_params(t, "t")
        s_b, t_b = np.broadcast_arrays(s, t)
        flat_t = np.atleast_1d(t_b).ravel()
        P0, P1 = self._ends(flat_t)
        sv = np.atleast_1d(s_b).ravel()[:, None]
        out = (1.0 - sv) * P0 + sv * P1
        return out.reshape(np.shape(t_b) + (3,))

    __call__ = eval

    def tangents(self, s, t):
        """``(dS/ds, dS/dt)`` at broadcast parameters."""
        s = _unit_params(s, "s")
        t = _unit_params(t, "t")
        s_b, t_b = np.broadcast_arrays(s, t)
        tt = np.atleast_1d(t_b).ravel()
        sv = np.atleast_1d(s_b).ravel()[:, None]
        d1 = self.c1.derivatives(tt, 1)
        T = np.atleast_1d(self.sigma(tt))
        dT = np.atleast_1d(self.sigma.eval_prime(tt))
        d2 = self.c2.derivatives(T, 1, extrapolate=True)
        Ss = d2[0] - d1[0]
        St = (1.0 - sv) * d1[1] + sv * dT[:, None] * d2[1]
        shape = np.shape(t_b) + (3,)
        return Ss.reshape(shape), St.reshape(shape)

    def normal(self, s, t):
        """Unit normal ``dS/ds x dS/dt``.

        Raises
        ------
        DegenerateGeometryError
            Where the tangents are parallel or vanish.
        """
        Ss, St = self.tangents(s, t)
        n = np.cross(Ss, St)
        length = np.linalg.norm(n, axis=-1)
        scale = np.linalg.norm(Ss, axis=-1) * np.linalg.norm(St, axis=-1)
        bad = length <= _NORMAL_TOL * (1.0 + scale)
        if np.any(bad):
            raise DegenerateGeometryError(
                f"surface normal undefined at {int(np.count_nonzero(bad))} point(s)")
        return n / length[..., None]

    def warp_profile(self, sample_count=100, t=None, warn=True):
        """Warp angles of the rulings at ``t`` (default: uniform samples)."""
        if t is None:
            t = np.linspace(0.0, 1.0, int(sample_count))
        t = _unit_params(np.atleast_1d(t), "t")
        return warp_profile_from(self.c1, self.c2, t, self.sigma(t),
                                 self.sigma.eval_prime(t), warn=warn)

    def tessellate(self, nu, nv):
        """Grid mesh with ``nu`` vertices across and ``nv`` along the strip."""
        nu, nv = int(nu), int(nv)
        if nu < 2 or nv < 2:
            raise DomainError("tessellation needs nu >= 2 and nv >= 2")
        s = np.linspace(0.0, 1.0, nu)
        t = np.linspace(0.0, 1.0, nv)
        V = self.eval(s[:, None], t[None, :]).reshape(-1, 3)
        prof = self.warp_profile(t=t, warn=False)
        warp = np.tile(prof.angles, nu)
        i, j = np.meshgrid(np.arange(nu - 1), np.arange(nv - 1), indexing="ij")
        a = (i * nv + j).ravel()
        quads = np.stack([a, a + nv, a + nv + 1, a + 1], axis=1)
        return Mesh(V, quads, warp, nu, nv)

    def trim_to_original(self, t_lo, t_hi):
        """Strip restricted to ``t`` in ``[t_lo, t_hi]``, reparametrized to [0, 1].

        ``sigma`` must map the interval into [0, 1] so that the second
        curve can be cut at ``sigma(t_lo)`` and ``sigma(t_hi)``.
        """
        t_lo, t_hi = float(t_lo), float(t_hi)
        if not 0.0 <= t_lo < t_hi <= 1.0:
            raise DomainError(f"invalid trimming interval [{t_lo}, {t_hi}]")
        if t_lo == 0.0 and t_hi == 1.0:
            return self
        sig, (T_lo, T_hi) = self.sigma.restrict(t_lo, t_hi)
        if -PARAM_SLACK <= T_lo < 0.0:
            T_lo = 0.0
        if 1.0 < T_hi <= 1.0 + PARAM_SLACK:
            T_hi = 1.0
        if not 0.0 <= T_lo < T_hi <= 1.0:
            raise DomainError(
                f"mapping sends [{t_lo}, {t_hi}] to [{T_lo}, {T_hi}], outside the "
                f"second curve's domain")
        return RuledStrip(self.c1.subcurve(t_lo, t_hi),
                          self.c2.subcurve(T_lo, T_hi), sig)

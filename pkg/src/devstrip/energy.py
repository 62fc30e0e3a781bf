"""Developability measures and the optimization objective.

For a ruling from ``C1(t)`` to ``C2(T)`` write ``L = C1(t) - C2(T)``. The
ruling is developable when ``L``, ``C1'(t)`` and ``C2'(T)`` are coplanar.
The optimizer instead drives a per-sample normal variable ``N_i`` to be
orthogonal to all three vectors::

    F = lambda1 * sum_i [(N_i.C1')^2 + (N_i.C2')^2 + (N_i.L)^2]
      + lambda2 * sum_i (|N_i|^2 - 1)^2
      + endpoint_weight * (sigma(0)^2 + (sigma(1) - 1)^2)

``C2'`` is the derivative of ``C2`` with respect to its own parameter.
Flat variable layout: mapping parameters first, then the normals as
``(K + 1, 3)`` rows flattened in C order.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DomainError
from .splines import basis_matrix

#: Rulings shorter than this are treated as degenerate (touching curves).
DEGENERATE_RULING = 1e-12
_DEGENERATE_NORMAL = 1e-14


def uniform_samples(n):
    return np.linspace(0.0, 1.0, int(n))


@dataclass(frozen=True)
class ObjectiveConfig:
    """Weights and sample parameters of the objective.

    Defaults follow the values used throughout the experiments: weight 100
    on the developability term, 1 on the normal regularizer, 100 uniform
    samples, and no endpoint term (1000 is the usual weight when enabled).
    """

    lambda1: float = 100.0
    lambda2: float = 1.0
    endpoint_weight: float = 0.0
    sample_params: np.ndarray = field(default_factory=lambda: uniform_samples(100))

    def __post_init__(self):
        t = np.array(self.sample_params, dtype=float).ravel()
        if min(self.lambda1, self.lambda2, self.endpoint_weight) < 0:
            raise DomainError("objective weights must be nonnegative")
        if t.size == 0 or np.any(np.diff(t) < 0) or t[0] < 0 or t[-1] > 1:
            raise DomainError("sample parameters must be nondecreasing in [0, 1]")
        t.setflags(write=False)
        object.__setattr__(self, "sample_params", t)

    @property
    def n_samples(self):
        return self.sample_params.size


def _ruling_terms(c1, c2, t, T):
    """C1, C1', C2, C2', C2'' and the ruling vector at paired parameters."""
    d1 = c1.derivatives(np.atleast_1d(t), 1)
    d2 = c2.derivatives(np.atleast_1d(T), 2, extrapolate=True)
    L = d1[0] - d2[0]
    return d1[1], d2[1], d2[2], L


def _as_mapping_values(m, t):
    return np.atleast_1d(m(t) if callable(m) else m)


def e1_determinant(c1, c2, m, t):
    """Signed ``det(C1(t) - C2(sigma(t)), C1'(t), C2'(sigma(t)))``."""
    scalar = np.ndim(t) == 0
    t = np.atleast_1d(np.asarray(t, dtype=float))
    T = _as_mapping_values(m, t)
    A, B, _, L = _ruling_terms(c1, c2, t, T)
    det = np.einsum("ij,ij->i", L, np.cross(A, B))
    return float(det[0]) if scalar else det


def e2_residuals(c1, c2, m, t, N):
    """The three dot products ``(N.C1'(t), N.C2'(sigma(t)), N.L(t))``.

    The squared sum of the result is the per-ruling developability term.
    Vectorized over ``t`` when ``N`` has one row per parameter.
    """
    scalar = np.ndim(t) == 0
    t = np.atleast_1d(np.asarray(t, dtype=float))
    N = np.atleast_2d(np.asarray(N, dtype=float))
    T = _as_mapping_values(m, t)
    A, B, _, L = _ruling_terms(c1, c2, t, T)
    r = np.stack([np.einsum("ij,ij->i", N, A),
                  np.einsum("ij,ij->i", N, B),
                  np.einsum("ij,ij->i", N, L)], axis=1)
    return r[0] if scalar else r


def initial_normals(c1, c2, t, T):
    """Unit normals ``C1' x L`` (falling back to ``C2' x L``, then to any
    direction orthogonal to ``L``) at each sample ruling."""
    A, B, _, L = _ruling_terms(c1, c2, t, T)
    N = np.cross(A, L)
    nrm = np.linalg.norm(N, axis=1)
    weak = nrm <= 1e-10 * (1.0 + np.linalg.norm(L, axis=1))
    if np.any(weak):
        N[weak] = np.cross(B[weak], L[weak])
        nrm = np.linalg.norm(N, axis=1)
        weak = nrm <= 1e-10 * (1.0 + np.linalg.norm(L, axis=1))
    for i in np.flatnonzero(weak):
        axis = np.eye(3)[np.argmin(np.abs(L[i]))]
        N[i] = np.cross(L[i], axis) if np.linalg.norm(L[i]) > 0 else axis
    return N / np.linalg.norm(N, axis=1)[:, None]


class DevelopabilityObjective:
    """Developability energy as a function of paired parameters ``T_i``.

    Subclasses define how ``T`` depends on the free mapping parameters.
    ``value_and_grad`` takes the flat variable vector and returns
    ``(f, grad)``.
    """

    def __init__(self, c1, c2, config):
        self.c1 = c1
        self.c2 = c2
        self.config = config
        self.t = config.sample_params
        d1 = c1.derivatives(self.t, 1)
        self._C1 = d1[0]
        self._C1p = d1[1]
        self.n_map = 0

    @property
    def n_samples(self):
        return self.t.size

    def split(self, x):
        x = np.asarray(x, dtype=float)
        return x[: self.n_map], x[self.n_map:].reshape(self.n_samples, 3)

    def pack(self, params, normals):
        return np.concatenate([np.ravel(params), np.ravel(normals)])

    def sample_terms(self, T, N):
        """Per-sample developability value plus gradients w.r.t. ``T`` and ``N``.

        Rulings of (near) zero length drop the ``N.L`` term.
        """
        d2 = self.c2.derivatives(T, 2, extrapolate=True)
        A, B, B2 = self._C1p, d2[1], d2[2]
        L = self._C1 - d2[0]
        live = np.linalg.norm(L, axis=1) > DEGENERATE_RULING
        r1 = np.einsum("ij,ij->i", N, A)
        r2 = np.einsum("ij,ij->i", N, B)
        r3 = np.einsum("ij,ij->i", N, L) * live
        e2 = r1 * r1 + r2 * r2 + r3 * r3
        gN = 2.0 * (r1[:, None] * A + r2[:, None] * B + r3[:, None] * L)
        # dL/dT = -C2'
        gT = 2.0 * (r2 * np.einsum("ij,ij->i", N, B2) - r3 * r2)
        return e2, gT, gN, ~live

    def evaluate(self, T, N):
        """Objective value and gradients w.r.t. ``T`` and ``N`` (no endpoint term)."""
        lam1, lam2 = self.config.lambda1, self.config.lambda2
        e2, gT, gN, _ = self.sample_terms(T, N)
        sq = np.einsum("ij,ij->i", N, N) - 1.0
        f = lam1 * np.sum(e2) + lam2 * np.sum(sq * sq)
        grad_N = lam1 * gN + lam2 * 4.0 * sq[:, None] * N
        return f, lam1 * gT, grad_N

    def __call__(self, x):
        return self.value_and_grad(x)[0]

    def _square_jacobian(self):
        """Dense ``dT / d(params**2)``, shape ``(K + 1, n_map)``."""
        raise NotImplementedError

    def _endpoint_square_jacobian(self):
        """Rows ``d sigma(0) / d(params**2)`` and ``d sigma(1) / d(params**2)``."""
        E = np.zeros((2, self.n_map))
        E[0, 0] = 1.0
        E[1] = 1.0
        return E

    def _mapping_jacobian(self, params):
        return self._square_jacobian() * (2.0 * params)

    def _endpoint_jacobian(self, params):
        return self._endpoint_square_jacobian() * (2.0 * params)

    def preconditioner(self, x, ridge=1e-6):
        """Inverse Gauss-Newton Hessian at ``x`` as a linear operator.

        The Gauss-Newton matrix has a dense block for the mapping
        parameters, a 3x3 block per normal variable, and a coupling between
        each normal and its own ``T_i``. The normal blocks are eliminated
        through the Schur complement, so applying the inverse costs one
        dense solve of size ``n_map`` plus batched 3x3 solves. A relative
        ``ridge`` keeps every block positive definite. Returns
        ``v -> M v``.
        """
        params, N = self.split(x)
        T = self.mapping_values(params)
        lam1, lam2 = self.config.lambda1, self.config.lambda2
        d2 = self.c2.derivatives(T, 2, extrapolate=True)
        A, B, B2 = self._C1p, d2[1], d2[2]
        L = self._C1 - d2[0]
        nB = np.einsum("ij,ij->i", N, B)
        nB2 = np.einsum("ij,ij->i", N, B2)
        # residual r = (N.A, N.B, N.L): dr/dT = (0, N.C2'', -N.C2')
        hT = 2.0 * lam1 * (nB2 * nB2 + nB * nB)
        cross = 2.0 * lam1 * (nB2[:, None] * B - nB[:, None] * L)

        outer = lambda V: V[:, :, None] * V[:, None, :]  # noqa: E731
        HN = 2.0 * lam1 * (outer(A) + outer(B) + outer(L)) + 8.0 * lam2 * outer(N)
        tr = np.trace(HN, axis1=1, axis2=2)
        HN += (ridge * tr + 1e-12)[:, None, None] * np.eye(3)
        M_N = np.linalg.inv(HN)
        Mc = np.einsum("kij,kj->ki", M_N, cross)
        h_eff = np.maximum(hT - np.einsum("ij,ij->i", cross, Mc), 0.0)

        J = self._mapping_jacobian(params)
        S = J.T @ (h_eff[:, None] * J)
        # exact curvature of the squared parametrization, 2 df/d(params**2);
        # it keeps coordinates pinned at zero (flat stretches) well scaled
        _, gT, _ = self.evaluate(T, N)
        dsq = self._square_jacobian().T @ gT
        w = self.config.endpoint_weight
        if w:
            E = self._endpoint_jacobian(params)
            S += 2.0 * w * E.T @ E
            q = np.cumsum(params * params)
            ends = np.array([q[0], q[-1] - 1.0])
            dsq += 2.0 * w * self._endpoint_square_jacobian().T @ ends
        S[np.diag_indices_from(S)] += 2.0 * np.maximum(dsq, 0.0)
        S += ridge * (np.trace(S) / S.shape[0] + 1e-12) * np.eye(S.shape[0])
        S_inv = np.linalg.inv(S)
        S_inv = 0.5 * (S_inv + S_inv.T)
        n_map = self.n_map

        def apply(v):
            v_map, v_N = v[:n_map], v[n_map:].reshape(-1, 3)
            z_N = np.einsum("kij,kj->ki", M_N, v_N)
            u = S_inv @ (v_map - J.T @ np.einsum("ij,ij->i", cross, z_N))
            out_N = z_N - Mc * (J @ u)[:, None]
            return np.concatenate([u, out_N.ravel()])
        return apply


class ContinuousObjective(DevelopabilityObjective):
    """Objective over the shape parameters of a B-spline mapping function."""

    def __init__(self, c1, c2, map_knots, config):
        super().__init__(c1, c2, config)
        self.map_knots = map_knots
        self.n_map = map_knots.n_basis
        self._B = basis_matrix(map_knots, self.t)[0]
        # d beta_k / d eps_j^2 = 1 for k >= j: tail sums of the basis
        self._tail = np.cumsum(self._B[:, ::-1], axis=1)[:, ::-1]

    def mapping_values(self, eps):
        return self._B @ np.cumsum(np.square(eps))

    def _square_jacobian(self):
        return self._tail

    def value_and_grad(self, x):
        eps, N = self.split(x)
        betas = np.cumsum(eps * eps)
        T = self._B @ betas
        f, gT, gN = self.evaluate(T, N)
        g_eps = 2.0 * eps * (self._tail.T @ gT)
        w = self.config.endpoint_weight
        if w:
            lo, hi = betas[0], betas[-1] - 1.0
            f += w * (lo * lo + hi * hi)
            g_eps[0] += w * 2.0 * lo * 2.0 * eps[0]
            g_eps += w * 2.0 * hi * 2.0 * eps
        return f, np.concatenate([g_eps, gN.ravel()])


class DiscreteObjective(DevelopabilityObjective):
    """Objective over ``alpha`` with ``T_i = alpha_0^2 + ... + alpha_i^2``."""

    def __init__(self, c1, c2, config):
        super().__init__(c1, c2, config)
        self.n_map = self.n_samples

    def mapping_values(self, alphas):
        return np.cumsum(np.square(alphas))

    def _square_jacobian(self):
        return np.tril(np.ones((self.n_map, self.n_map)))

    def value_and_grad(self, x):
        alphas, N = self.split(x)
        T = np.cumsum(alphas * alphas)
        f, gT, gN = self.evaluate(T, N)
        g_a = 2.0 * alphas * np.cumsum(gT[::-1])[::-1]
        w = self.config.endpoint_weight
        if w:
            lo, hi = T[0], T[-1] - 1.0
            f += w * (lo * lo + hi * hi)
            g_a[0] += w * 4.0 * lo * alphas[0]
            g_a += w * 4.0 * hi * alphas
        return f, np.concatenate([g_a, gN.ravel()])


def _check_normals(N, cfg):
    N = np.asarray(N, dtype=float)
    if N.shape != (cfg.n_samples, 3):
        raise DomainError(
            f"expected {cfg.n_samples} normal variables, got array of shape {N.shape}")
    return N


def objective(c1, c2, m, N, cfg):
    """Weighted objective for mapping ``m`` and normal variables ``N``."""
    N = _check_normals(N, cfg)
    obj = ContinuousObjective(c1, c2, m.knots, cfg)
    return float(obj.value_and_grad(obj.pack(m.epsilons, N))[0])


def gradient(c1, c2, m, N, cfg):
    """Analytic gradient over ``(eps_0..eps_n, N_0..N_K)`` (flat)."""
    N = _check_normals(N, cfg)
    obj = ContinuousObjective(c1, c2, m.knots, cfg)
    return obj.value_and_grad(obj.pack(m.epsilons, N))[1]


# ---------------------------------------------------------------------------
# Warp angles
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WarpProfile:
    """Warp angles (degrees) at sample rulings.

    ``valid`` marks samples whose end normals are defined; statistics use
    only those.
    """

    t: np.ndarray
    angles: np.ndarray
    valid: np.ndarray

    @property
    def beta_max(self):
        a = self.angles[self.valid]
        return float(a.max()) if a.size else float("nan")

    @property
    def beta_ave(self):
        a = self.angles[self.valid]
        return float(a.mean()) if a.size else float("nan")


def warp_angles(c1, c2, t, T, dT=None):
    """Angle between surface normals at both ends of each ruling.

    Normals follow ``dS/ds x dS/dt``. ``dT`` is ``sigma'(t)``; when omitted
    the mapping is taken as increasing, which fixes the normal direction at
    the second curve.

    Returns
    -------
    angles : ndarray
        Degrees in [0, 180]; NaN where a normal vanishes.
    valid : ndarray of bool
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    T = np.atleast_1d(np.asarray(T, dtype=float))
    A, B, _, L = _ruling_terms(c1, c2, t, T)
    if dT is not None:
        B = B * np.atleast_1d(dT)[:, None]
    Ss = -L
    n0 = np.cross(Ss, A)
    n1 = np.cross(Ss, B)
    l0 = np.linalg.norm(n0, axis=1)
    l1 = np.linalg.norm(n1, axis=1)
    scale = np.linalg.norm(Ss, axis=1) * np.maximum(
        np.linalg.norm(A, axis=1), np.linalg.norm(B, axis=1))
    valid = (l0 > _DEGENERATE_NORMAL * (1 + scale)) & (l1 > _DEGENERATE_NORMAL * (1 + scale))
    # atan2 keeps full relative precision for tiny angles, where arccos of a
    # dot product bottoms out near 1e-6 degrees
    u0 = n0 / np.where(l0 > 0, l0, 1.0)[:, None]
    u1 = n1 / np.where(l1 > 0, l1, 1.0)[:, None]
    ang = np.degrees(np.arctan2(np.linalg.norm(np.cross(u0, u1), axis=1),
                                np.einsum("ij,ij->i", u0, u1)))
    ang[~valid] = np.nan
    return ang, valid


def warp_profile_from(c1, c2, t, T, dT=None, warn=True):
    ang, valid = warp_angles(c1, c2, t, T, dT)
    if warn and not valid.all():
        warnings.warn(
            f"{np.count_nonzero(~valid)} degenerate ruling(s) excluded from warp "
            f"statistics", RuntimeWarning, stacklevel=2)
    return WarpProfile(np.atleast_1d(np.asarray(t, dtype=float)), ang, valid)


def warp_profile(strip, sample_count=100, warn=True):
    """Warp profile of a ruled strip at ``sample_count`` uniform rulings."""
    if sample_count < 2:
        raise DomainError("need at least two sample rulings")
    t = uniform_samples(sample_count)
    return warp_profile_from(strip.c1, strip.c2, t, strip.sigma(t),
                             strip.sigma.eval_prime(t), warn=warn)

"""L-BFGS minimization and the two mapping solvers.

:func:`minimize` is a limited-memory BFGS driver with a strong-Wolfe line
search (bracketing plus cubic-interpolation zoom). An optional
preconditioner replaces the identity as the initial inverse Hessian of the
two-loop recursion. It is deterministic: the same inputs produce the same
iterates bit for bit.

:func:`solve_continuous` optimizes the shape parameters of a B-spline
mapping function together with per-sample normal variables;
:func:`solve_discrete` optimizes one target parameter per sample. Both use
the Gauss-Newton preconditioner of the objective by default; with the
default refresh period of one iteration the curvature memory never fills,
so each step is a line-searched Gauss-Newton step. Raise
``preconditioner_refresh`` or pass ``precondition=False`` for classical
L-BFGS behavior.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .energy import (ContinuousObjective, DiscreteObjective, ObjectiveConfig,
                     initial_normals, warp_angles)
from .exceptions import DomainError, OptimizationError
from .mapping import DiscreteMapping, MappingFunction


@dataclass(frozen=True)
class LbfgsConfig:
    """Settings for :func:`minimize`.

    The run stops when the sup-norm of the gradient drops below
    ``gradient_tolerance``, or when the relative objective decrease stays
    below ``plateau_tolerance`` for ``plateau_window`` consecutive
    iterations, or after ``max_iterations`` accepted steps. When a
    preconditioner factory is supplied it is rebuilt at the current iterate
    every ``preconditioner_refresh`` iterations (the curvature memory is
    cleared at the same time).
    """

    memory: int = 10
    max_iterations: int = 200
    gradient_tolerance: float = 1e-8
    plateau_tolerance: float = 1e-12
    plateau_window: int = 3
    c1: float = 1e-4
    c2: float = 0.9
    max_line_search: int = 40
    preconditioner_refresh: int = 1

    def __post_init__(self):
        if not 0.0 < self.c1 < self.c2 < 1.0:
            raise DomainError("line search needs 0 < c1 < c2 < 1")
        if self.memory < 1:
            raise DomainError("memory must be at least 1")
        if self.max_iterations < 0:
            raise DomainError("max_iterations must be nonnegative")
        if self.preconditioner_refresh < 1:
            raise DomainError("preconditioner_refresh must be at least 1")


@dataclass
class OptimizationReport:
    """Per-iteration record of a run.

    Index 0 of every trace is the starting point.
    """

    iterations: int = 0
    objective_trace: list = field(default_factory=list)
    beta_ave_trace: list = field(default_factory=list)
    time_trace: list = field(default_factory=list)
    wall_time_seconds: float = 0.0
    converged: bool = False
    status: str = ""
    gradient_norm: float = float("nan")
    evaluations: int = 0


class _LineSearchFailure(Exception):
    pass


def _cubic_min(a, fa, ga, b, fb, gb):
    """Minimizer of the cubic interpolating two points and slopes, or None."""
    d1 = ga + gb - 3.0 * (fa - fb) / (a - b)
    disc = d1 * d1 - ga * gb
    if disc < 0.0:
        return None
    d2 = np.copysign(np.sqrt(disc), b - a)
    den = gb - ga + 2.0 * d2
    if den == 0.0:
        return None
    x = b - (b - a) * (gb + d2 - d1) / den
    return x if np.isfinite(x) else None


def _strong_wolfe(phi, f0, d0, alpha, cfg):
    """Step length satisfying the strong Wolfe conditions.

    ``phi(alpha)`` returns ``(f, slope, payload)``.
    """
    c1, c2 = cfg.c1, cfg.c2

    def zoom(lo, hi, n_left):
        a_lo, f_lo, g_lo, p_lo = lo
        a_hi, f_hi, g_hi = hi
        for _ in range(n_left):
            width = a_hi - a_lo
            a = _cubic_min(a_lo, f_lo, g_lo, a_hi, f_hi, g_hi)
            lo_b, hi_b = sorted((a_lo + 0.1 * width, a_hi - 0.1 * width))
            if a is None or not lo_b <= a <= hi_b:
                a = a_lo + 0.5 * width
            f, g, p = phi(a)
            if f > f0 + c1 * a * d0 or f >= f_lo:
                a_hi, f_hi, g_hi = a, f, g
            else:
                if abs(g) <= -c2 * d0:
                    return a, f, p
                if g * (a_hi - a_lo) >= 0.0:
                    a_hi, f_hi, g_hi = a_lo, f_lo, g_lo
                a_lo, f_lo, g_lo, p_lo = a, f, g, p
            if abs(a_hi - a_lo) <= 1e-16 * max(1.0, abs(a_lo)):
                break
        if p_lo is not None and f_lo < f0:
            # sufficient decrease holds at a_lo even if curvature does not
            return a_lo, f_lo, p_lo
        raise _LineSearchFailure

    a_prev, f_prev, g_prev, p_prev = 0.0, f0, d0, None
    for i in range(cfg.max_line_search):
        f, g, p = phi(alpha)
        if f > f0 + c1 * alpha * d0 or (i > 0 and f >= f_prev):
            return zoom((a_prev, f_prev, g_prev, p_prev), (alpha, f, g),
                        cfg.max_line_search - i)
        if abs(g) <= -c2 * d0:
            return alpha, f, p
        if g >= 0.0:
            return zoom((alpha, f, g, p), (a_prev, f_prev, g_prev),
                        cfg.max_line_search - i)
        a_prev, f_prev, g_prev, p_prev = alpha, f, g, p
        alpha *= 2.0
    raise _LineSearchFailure


def _two_loop(g, S, Y, rho, precond):
    q = g.copy()
    alphas = []
    for s, y, r in zip(reversed(S), reversed(Y), reversed(rho)):
        a = r * (s @ q)
        alphas.append(a)
        q -= a * y
    if precond is None:
        if S:
            q *= (S[-1] @ Y[-1]) / (Y[-1] @ Y[-1])
    else:
        q = precond(q)
        if S:
            My = precond(Y[-1])
            q *= (S[-1] @ Y[-1]) / (Y[-1] @ My)
    for (s, y, r), a in zip(zip(S, Y, rho), reversed(alphas)):
        b = r * (y @ q)
        q += (a - b) * s
    return -q


def minimize(fun, x0, config=None, monitor=None, callback=None, preconditioner=None):
    """Minimize ``fun`` with L-BFGS.

    Parameters
    ----------
    fun : callable
        ``fun(x) -> (f, grad)``.
    x0 : array_like
    config : LbfgsConfig, optional
    monitor : callable, optional
        ``monitor(x) -> float`` recorded in ``report.beta_ave_trace`` for the
        start point and every accepted iterate.
    callback : callable, optional
        Called as ``callback(x)`` after every accepted iterate.
    preconditioner : callable, optional
        Factory ``preconditioner(x) -> (v -> M v)`` returning a symmetric
        positive definite operator used as the initial inverse Hessian of
        the two-loop recursion (scaled by ``s.y / y.My``). Identity when
        omitted.

    Returns
    -------
    x : ndarray
        Best iterate.
    report : OptimizationReport

    Raises
    ------
    OptimizationError
        If the objective or gradient is not finite at an evaluated point.
    """
    cfg = config or LbfgsConfig()
    report = OptimizationReport()
    t_start = time.perf_counter()
    x = np.array(x0, dtype=float)
    if not np.all(np.isfinite(x)):
        raise OptimizationError("starting point is not finite")

    def evaluate(z):
        f, g = fun(z)
        report.evaluations += 1
        f = float(f)
        g = np.asarray(g, dtype=float)
        if not np.isfinite(f) or not np.all(np.isfinite(g)):
            raise OptimizationError(
                f"non-finite objective or gradient at evaluation {report.evaluations} "
                f"(f={f!r}, |x|={np.linalg.norm(z):.6g})")
        return f, g

    f, g = evaluate(x)

    def record(z, fz):
        report.objective_trace.append(fz)
        report.time_trace.append(time.perf_counter() - t_start)
        if monitor is not None:
            report.beta_ave_trace.append(float(monitor(z)))

    record(x, f)
    S, Y, rho = [], [], []
    small_steps = 0
    status = "max_iterations"
    precond = None
    for it in range(cfg.max_iterations):
        if np.max(np.abs(g)) <= cfg.gradient_tolerance:
            status = "gradient"
            break
        if preconditioner is not None and it % cfg.preconditioner_refresh == 0:
            precond = preconditioner(x)
            S, Y, rho = [], [], []
        d = _two_loop(g, S, Y, rho, precond)
        d0 = g @ d
        if not d0 < 0.0:
            S, Y, rho = [], [], []
            d = -g
            d0 = g @ d
        if S or preconditioner is not None:
            alpha = 1.0
        else:
            alpha = min(1.0, 1.0 / np.linalg.norm(g))

        def phi(a, x=x, d=d):
            z = x + a * d
            fz, gz = evaluate(z)
            return fz, gz @ d, (z, fz, gz)

        try:
            _, _, (x_new, f_new, g_new) = _strong_wolfe(phi, f, d0, alpha, cfg)
        except _LineSearchFailure:
            if S:
                S, Y, rho = [], [], []
                continue
            status = "line_search"
            break
        s, y = x_new - x, g_new - g
        sy = s @ y
        if sy > 1e-12 * np.linalg.norm(s) * np.linalg.norm(y):
            S.append(s)
            Y.append(y)
            rho.append(1.0 / sy)
            if len(S) > cfg.memory:
                S.pop(0)
                Y.pop(0)
                rho.pop(0)
        decrease = (f - f_new) / max(abs(f), 1e-300)
        x, f, g = x_new, f_new, g_new
        report.iterations += 1
        record(x, f)
        if callback is not None:
            callback(x)
        small_steps = small_steps + 1 if decrease <= cfg.plateau_tolerance else 0
        if small_steps >= cfg.plateau_window:
            status = "plateau"
            break
    else:
        if np.max(np.abs(g)) <= cfg.gradient_tolerance:
            status = "gradient"
    report.status = status
    report.converged = status in ("gradient", "plateau")
    report.gradient_norm = float(np.max(np.abs(g)))
    report.wall_time_seconds = time.perf_counter() - t_start
    return x, report


def _warp_monitor(c1, c2, t, mapping_values, n_map):
    def monitor(x):
        T = mapping_values(x[:n_map])
        ang, valid = warp_angles(c1, c2, t, T)
        return float(ang[valid].mean()) if valid.any() else float("nan")
    return monitor


def solve_continuous(c1, c2, m0, cfg_obj=None, cfg_opt=None, normals0=None,
                     callback=None, precondition=True):
    """Optimize a B-spline mapping function for developability.

    Parameters
    ----------
    c1, c2 : BSplineCurve
        Boundary curves, already compatible and scaled to the unit box.
    m0 : MappingFunction
        Starting mapping; its knot vector is kept.
    cfg_obj : ObjectiveConfig, optional
    cfg_opt : LbfgsConfig, optional
    normals0 : array_like, optional
        Starting normal variables; by default the unit normals of
        ``C1' x L`` at the starting rulings.
    callback : callable, optional
        ``callback(mapping)`` with the MappingFunction of every accepted
        iterate.

    Returns
    -------
    mapping : MappingFunction
    normals : ndarray, shape (K + 1, 3)
    report : OptimizationReport
    """
    cfg_obj = cfg_obj or ObjectiveConfig()
    obj = ContinuousObjective(c1, c2, m0.knots, cfg_obj)
    t = cfg_obj.sample_params
    if normals0 is None:
        normals0 = initial_normals(c1, c2, t, obj.mapping_values(m0.epsilons))
    x0 = obj.pack(m0.epsilons, normals0)
    cb = None
    if callback is not None:
        def cb(x):
            callback(MappingFunction(m0.knots, x[: obj.n_map]))
    x, report = minimize(obj.value_and_grad, x0, cfg_opt,
                         monitor=_warp_monitor(c1, c2, t, obj.mapping_values, obj.n_map),
                         callback=cb,
                         preconditioner=obj.preconditioner if precondition else None)
    eps, N = obj.split(x)
    return MappingFunction(m0.knots, eps), N, report


def solve_discrete(c1, c2, t_samples, cfg_opt=None, cfg_obj=None, start=None,
                   callback=None, precondition=True):
    """Optimize one target parameter per sample (the discrete mapping).

    Returns
    -------
    mapping : DiscreteMapping
    normals : ndarray
    report : OptimizationReport
    """
    t = np.asarray(t_samples, dtype=float)
    if np.any(np.diff(t) < 0):
        raise DomainError("sample parameters must be nondecreasing")
    base = cfg_obj or ObjectiveConfig()
    cfg_obj = ObjectiveConfig(base.lambda1, base.lambda2, base.endpoint_weight, t)
    obj = DiscreteObjective(c1, c2, cfg_obj)
    start = start or DiscreteMapping.identity(t)
    N0 = initial_normals(c1, c2, t, start.targets)
    cb = None
    if callback is not None:
        def cb(x):
            callback(DiscreteMapping(t, x[: obj.n_map]))
    x0 = obj.pack(start.alphas, N0)
    x, report = minimize(obj.value_and_grad, x0, cfg_opt,
                         monitor=_warp_monitor(c1, c2, t, obj.mapping_values, obj.n_map),
                         callback=cb,
                         preconditioner=obj.preconditioner if precondition else None)
    alphas, N = obj.split(x)
    return DiscreteMapping(t, alphas), N, report

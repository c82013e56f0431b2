"""Green's function, Dirichlet kernel and boundary-value solver.

Everything here is expressed through the self-similar profile Lambda of
:mod:`smolkin.lambda_series`:

* ``green_g(V, V0) = C* V0^(sigma-8/3) Lambda((V0-V)/V0)`` for V < V0,
* ``dirichlet_k`` is the jump-weighted average of ``green_g`` over the
  exterior landing point,
* ``bvp_solve`` assembles the interior solution of -K_inf u = g on (0, Vbar)
  with u = Psi beyond Vbar.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import lambda_series as ls
from . import mellin
from .errors import DomainError
from .specfun import QuadratureSpec, SigmaParams, as_params, integrate_singular

__all__ = [
    "GreensContext",
    "BVProblem",
    "BVPSolution",
    "make_context",
    "q_weight",
    "c_star",
    "green_g",
    "p_alpha",
    "dirichlet_k",
    "dirichlet_k_direct",
    "dirichlet_k_limit",
    "green_apply",
    "exit_source",
    "bvp_solve",
]

C = (1.0, 2.0, 1.0)
_TIGHT = QuadratureSpec(abs_tol=1e-14, rel_tol=1e-11, max_subdivisions=20000)


# ------------------------------------------------------------------ Q and C*


def _q_small(w: float, s: float, spec: QuadratureSpec) -> float:
    # w^(s-2)/(s-1) - int_0^w (w-u+1)^-s u^(s-2) du, integrated in u = w - z so
    # the singular factor is evaluated exactly
    spec = QuadratureSpec(
        abs_tol=spec.abs_tol, rel_tol=spec.rel_tol, left_exponent=2.0 - s, max_subdivisions=spec.max_subdivisions
    )
    val = integrate_singular(lambda u: (w - u + 1.0) ** (-s) * u ** (s - 2.0), 0.0, w, spec).value
    return w ** (s - 2.0) / (s - 1.0) - val


def _q_large(w: float, s: float, spec: QuadratureSpec) -> float:
    # Q(w) = q(1/w)/w.  Both O(1) pieces of q cancel as y = 1/w -> 0; using
    # int_0^1 x^-s [(1-x)^(s-2) - 1] dx = 1/(s-1) the cancellation is removed:
    # q(y) = [(1+y)^(1-s) - 1]/(s-1) - int_0^1 [(x+y)^-s - x^-s] [(1-x)^(s-2) - 1] dx
    y = 1.0 / w

    def f(x):
        return x ** (-s) * np.expm1(-s * np.log1p(y / x)) * np.expm1((s - 2.0) * np.log1p(-x))

    def f_log(t):
        x = np.exp(t)
        return f(x) * x

    def f_mirror(u):
        x = 1.0 - u
        return x ** (-s) * np.expm1(-s * np.log1p(y / x)) * np.expm1((s - 2.0) * np.log(u))

    # [0, cut] resolves the scale y, [cut, 1/2] runs over decades and is done
    # in log x, [1/2, 1] carries the (1-x)^(s-2) singularity and is done in 1-x
    cut = min(0.25, 50.0 * y)
    base = dict(abs_tol=spec.abs_tol * y ** (2.0 - s), rel_tol=spec.rel_tol, max_subdivisions=spec.max_subdivisions)
    head = integrate_singular(f, 0.0, cut, QuadratureSpec(left_exponent=s - 1.0, **base)).value
    mid = integrate_singular(f_log, math.log(cut), math.log(0.5), QuadratureSpec(**base)).value
    body = integrate_singular(f_mirror, 0.0, 0.5, QuadratureSpec(left_exponent=2.0 - s, **base)).value
    head += mid
    q = math.expm1((1.0 - s) * math.log1p(y)) / (s - 1.0) - head - body
    return q / w


def q_weight(w, sigma, spec: QuadratureSpec | None = None):
    """The positive weight Q(w) whose integral normalizes the Green's function."""
    s = as_params(sigma).require_core().sigma
    spec = spec or _TIGHT
    arr = np.atleast_1d(np.asarray(w, dtype=float))
    if np.any(arr <= 0):
        raise DomainError("Q is defined for w > 0")
    out = np.array([_q_small(x, s, spec) if x <= 1.0 else _q_large(x, s, spec) for x in arr])
    return out.item() if np.ndim(w) == 0 else out


def c_star(sigma, rel_tol: float = 1e-10) -> tuple[float, float]:
    """Normalization C* = 1/int_0^inf Q and the integral itself.

    ``rel_tol`` sets the resolution of both the inner and the outer
    quadratures, so two calls with different values give independent
    estimates.
    """
    s = as_params(sigma).require_core().sigma
    r_in = max(rel_tol * 1e-1, 1e-11)
    inner = QuadratureSpec(abs_tol=r_in * 1e-2, rel_tol=r_in, max_subdivisions=20000)
    head = integrate_singular(
        lambda w: q_weight(w, s, inner),
        0.0,
        1.0,
        QuadratureSpec(abs_tol=rel_tol * 1e-2, rel_tol=rel_tol, left_exponent=2.0 - s),
    )
    tail = integrate_singular(
        lambda w: q_weight(w, s, inner),
        1.0,
        math.inf,
        QuadratureSpec(abs_tol=rel_tol * 1e-2, rel_tol=rel_tol, tail_exponent=3.0 - s),
    )
    total = head.value + tail.value
    return 1.0 / total, total


# ----------------------------------------------------------------- contexts


@dataclass
class GreensContext:
    params: SigmaParams
    series: ls.LambdaSeries
    c_star: float
    q_integral: float

    @property
    def sigma(self) -> float:
        return self.params.sigma

    def lam(self, xi):
        return ls.eval_lambda(self.series, xi, rel_tol=1e-3)


def make_context(sigma, K: int = 200, quadrature: bool = False) -> GreensContext:
    """Build the shared context.

    By default C* is taken from its closed form (sigma-1) sin(pi(sigma-1))/pi,
    which the Laplace transform of Q at the origin produces; pass
    ``quadrature=True`` to integrate Q numerically instead.
    """
    p = as_params(sigma).require_core()
    series = ls.build(p, K)
    if quadrature:
        cs, qi = c_star(p)
    else:
        cs = mellin.k_bar(p)
        qi = 1.0 / cs
    return GreensContext(p, series, cs, qi)


# ------------------------------------------------------------ Green and K


def green_g(V, V0, ctx: GreensContext):
    """Fundamental solution of -K_inf with pole at V0; zero for V >= V0."""
    v = np.asarray(V, dtype=float)
    v0 = np.asarray(V0, dtype=float)
    v, v0 = np.broadcast_arrays(np.atleast_1d(v), np.atleast_1d(v0))
    if np.any(v <= 0) or np.any(v0 <= 0):
        raise DomainError("green_g needs V > 0 and V0 > 0")
    out = np.zeros(v.shape)
    inside = v < v0
    if np.any(inside):
        xi = (v0[inside] - v[inside]) / v0[inside]
        out[inside] = ctx.c_star * v0[inside] ** (ctx.sigma - 8.0 / 3.0) * np.asarray(ctx.lam(xi))
    return out.item() if np.ndim(V) == 0 and np.ndim(V0) == 0 else out


def _k_integrand_parts(ctx: GreensContext, theta: float, alphas, weights):
    def f(z, x):
        lam = np.asarray(ctx.lam(z))
        acc = np.zeros_like(z)
        for a, c in zip(alphas, weights):
            acc = acc + c * theta**a * x ** (-a)
        return lam * acc

    return f


def _p_combo(theta: float, zeta_gap: float, ctx: GreensContext, alphas, weights, spec: QuadratureSpec) -> float:
    # zeta_gap = zeta - 1 is passed separately so that landing points close to
    # the boundary keep full relative precision
    s = ctx.sigma
    top = 1.0 - theta
    zeta = 1.0 + zeta_gap
    f = _k_integrand_parts(ctx, theta, alphas, weights)
    mid = 0.5 * top

    def g_left(z):
        # x = zeta (1 - z) - theta without cancellation
        return f(z, zeta_gap * (1.0 - z) + (top - z))

    left = integrate_singular(
        g_left,
        0.0,
        mid,
        QuadratureSpec(abs_tol=spec.abs_tol, rel_tol=spec.rel_tol, left_exponent=2.0 - s,
                       max_subdivisions=spec.max_subdivisions),
    ).value
    # near z = 1 - theta the factor x^-alpha peaks on the scale theta(zeta-1);
    # integrate in t = log x there
    x_lo = theta * zeta_gap
    x_hi = zeta_gap * (1.0 - mid) + (top - mid)

    def g_right(t):
        x = np.exp(t)
        z = 1.0 - (x + theta) / zeta
        return f(z, x) * x / zeta

    right = integrate_singular(
        g_right, math.log(x_lo), math.log(x_hi),
        QuadratureSpec(abs_tol=spec.abs_tol, rel_tol=spec.rel_tol, max_subdivisions=spec.max_subdivisions),
    ).value
    return left + right


def p_alpha(theta: float, zeta: float, alpha: float, ctx: GreensContext, spec: QuadratureSpec | None = None) -> float:
    """theta^alpha * int_0^(1-theta) Lambda(z) (zeta(1-z) - theta)^-alpha dz."""
    if not (0.0 < theta < 1.0 and zeta > 1.0 and alpha > 1.0):
        if 0.0 < zeta and theta >= 1.0 and alpha > 1.0:
            return 0.0
        raise DomainError("p_alpha needs 0 < theta < 1 < zeta and alpha > 1")
    return _p_combo(theta, zeta - 1.0, ctx, (alpha,), (1.0,), spec or QuadratureSpec(abs_tol=1e-13, rel_tol=1e-10))


def dirichlet_k(V: float, eta: float, v_bar: float, ctx: GreensContext, spec: QuadratureSpec | None = None,
                gap: float | None = None) -> float:
    """Exit kernel: density of landing at eta > v_bar when started from V.

    ``gap`` may carry eta - v_bar exactly when eta is very close to v_bar.
    """
    if gap is None:
        gap = eta - v_bar
    if not (V > 0 and gap > 0 and v_bar > 0):
        raise DomainError("dirichlet_k needs V > 0 and eta > v_bar > 0")
    if V >= v_bar:
        return 0.0
    s = ctx.sigma
    theta = V / v_bar
    alphas = tuple(s - j / 3.0 for j in range(3))
    val = _p_combo(theta, gap / v_bar, ctx, alphas, C, spec or QuadratureSpec(abs_tol=1e-13, rel_tol=1e-10))
    return ctx.c_star / v_bar * val / theta


def dirichlet_k_direct(V: float, eta: float, v_bar: float, ctx: GreensContext) -> float:
    """The exit kernel from its definition as an integral of green_g (oracle)."""
    if V >= v_bar:
        return 0.0
    s = ctx.sigma

    def f(v0):
        d = eta - v0
        return np.asarray(green_g(V, v0, ctx)) * d ** (-s) * (v0 ** (1 / 3) + d ** (1 / 3)) ** 2

    spec = QuadratureSpec(abs_tol=1e-13, rel_tol=1e-10, left_exponent=2.0 - s, max_subdivisions=20000)
    return integrate_singular(f, V, v_bar, spec).value


def dirichlet_k_limit(eta: float, v_bar: float, ctx: GreensContext) -> float:
    """Limit of dirichlet_k as V -> 0+ (closed form through Lambda(1-))."""
    s = ctx.sigma
    zeta = eta / v_bar
    lam1 = 1.0 / (mellin.k_bar(s) * mellin.m_prime_zero(s))
    total = 0.0
    for j in range(3):
        a = s - j / 3.0
        total += C[j] / ((a - 1.0) * zeta * (zeta - 1.0) ** (a - 1.0))
    return ctx.c_star / v_bar * lam1 * total


# -------------------------------------------------------------- BVP solver


@dataclass(frozen=True)
class BVProblem:
    """Interior source ``g`` on (0, v_bar) and exterior data ``psi`` on [v_bar, inf).

    Both callables must accept numpy arrays.  ``psi_limit`` is the value of
    psi at infinity (needed for the far tail of the exit integral).
    """

    v_bar: float
    g: Callable | None = None
    psi: Callable | None = None
    psi_limit: float | None = None

    def __post_init__(self):
        if not self.v_bar > 0:
            raise DomainError("v_bar must be positive")
        probe = np.geomspace(1e-6, 1.0, 64) * self.v_bar
        if self.g is not None and not np.all(np.isfinite(self.g(probe * 0.999))):
            raise DomainError("g must be finite on (0, v_bar)")
        if self.psi is not None:
            out = np.linspace(1.0, 100.0, 64) * self.v_bar
            if not np.all(np.isfinite(self.psi(out))):
                raise DomainError("psi must be finite on [v_bar, inf)")


def _graded_rule(p: float, levels: int = 16, order: int = 12) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on (0, 1) for integrands behaving like t^-p (times
    fractional powers) at 0: t = s^q with q = 1/(1-p), Gauss panels in s
    refined geometrically towards 0."""
    q = 1.0 / (1.0 - p)
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.concatenate([[0.0], 2.0 ** -np.arange(levels, -1, -1)])
    lo, hi = edges[:-1], edges[1:]
    s = (0.5 * (lo + hi)[:, None] + 0.5 * (hi - lo)[:, None] * x[None, :]).ravel()
    ws = (0.5 * (hi - lo)[:, None] * w[None, :]).ravel()
    return s**q, ws * q * s ** (q - 1.0)


def green_apply(V, source: Callable, v_bar: float, ctx: GreensContext, source_exponent: float = 0.0,
                tol: float | None = None, pass_gap: bool = False):
    """int_V^v_bar G(V, V0) source(V0) dV0 for each V in (0, v_bar).

    ``source_exponent`` p declares source(V0) ~ (v_bar - V0)^-p at v_bar;
    with ``pass_gap`` the source is called as source(V0, v_bar - V0) with the
    gap computed without cancellation.  Computed in the rescaled variable
    xi = (V0 - V)/V0, split at the midpoint: the lower half carries the
    xi^(sigma-2) edge of the Green's function, the upper half (written in the
    distance d to the boundary) the singularity of the source.

    With ``tol`` None a fixed graded Gauss rule is used for all V at once,
    which is smooth in V (differences of the result are accurate); a float
    ``tol`` switches to adaptive quadrature per point.
    """
    s = ctx.sigma
    vv = np.atleast_1d(np.asarray(V, dtype=float))
    out = np.zeros(vv.shape)
    inside = vv < v_bar
    if not np.any(inside):
        return out.item() if np.ndim(V) == 0 else out
    v = vv[inside]
    top = 1.0 - v / v_bar
    half = 0.5 * top

    def weight(vrow, xi, gap):
        v0 = np.minimum(vrow / (1.0 - xi), v_bar)
        val = source(v0, gap) if pass_gap else source(v0)
        return np.asarray(ctx.lam(xi)) * (1.0 - xi) ** (2.0 / 3.0 - s) * np.asarray(val)

    if tol is None:
        t1, w1 = _graded_rule(2.0 - s)
        t2, w2 = _graded_rule(source_exponent)
        xi = half[:, None] * t1[None, :]
        d = half[:, None] * t2[None, :]
        xi_all = np.concatenate([xi, top[:, None] - d], axis=1)
        gap_all = np.concatenate([v_bar * (top[:, None] - xi), v_bar * d], axis=1) / (1.0 - xi_all)
        vrow = np.broadcast_to(v[:, None], xi_all.shape)
        vals = weight(vrow.ravel(), xi_all.ravel(), gap_all.ravel()).reshape(xi_all.shape)
        n1 = len(t1)
        res = half * (vals[:, :n1] @ w1 + vals[:, n1:] @ w2)
    else:
        res = np.empty(len(v))
        base = dict(abs_tol=tol * 1e-2, rel_tol=tol, max_subdivisions=20000)
        for i, (vi, ti) in enumerate(zip(v, top)):
            hi = 0.5 * ti

            def near_zero(xi, _v=vi, _t=ti):
                return weight(_v, xi, v_bar * (_t - xi) / (1.0 - xi))

            def near_top(d, _v=vi, _t=ti):
                # d = top - xi is the exact distance to the boundary
                xi = _t - d
                return weight(_v, xi, v_bar * d / (1.0 - xi))

            a = integrate_singular(near_zero, 0.0, hi, QuadratureSpec(left_exponent=2.0 - s, **base)).value
            b = integrate_singular(near_top, 0.0, hi, QuadratureSpec(left_exponent=source_exponent, **base)).value
            res[i] = a + b
    out[inside] = ctx.c_star * v ** (s - 5.0 / 3.0) * res
    return out.item() if np.ndim(V) == 0 else out


def _exit_nodes(order: int = 10):
    x, w = np.polynomial.legendre.leggauss(order)
    return 0.5 * (x + 1.0), 0.5 * w


def exit_source(V0, psi: Callable, v_bar: float, sigma: float, psi_limit: float | None = None, gap=None):
    """Jump rate from V0 < v_bar into [v_bar, inf), weighted by psi at the landing point.

    h(V0) = int_{v_bar - V0}^inf y^-sigma (V0^(1/3) + y^(1/3))^2 psi(V0 + y) dy.
    Integrated in log y up to a far cut-off, beyond which psi is replaced by
    its limit and the remainder is summed in closed form.
    """
    v0 = np.atleast_1d(np.asarray(V0, dtype=float))
    c = v_bar - v0 if gap is None else np.atleast_1d(np.asarray(gap, dtype=float))
    if np.any(c <= 0):
        raise DomainError("exit_source needs V0 < v_bar")
    t, w = _exit_nodes()
    far = 1e6 * max(1.0, v_bar)
    s = s_(sigma)
    cbrt0 = np.cbrt(v0)
    span = np.log(far / c)
    n_pan = 16
    # the same number of panels in log(y/c) on [0, span] for every V0
    edges = np.linspace(0.0, 1.0, n_pan + 1)
    unit = (edges[:-1, None] + np.diff(edges)[:, None] * t[None, :]).ravel()
    uw = (np.diff(edges)[:, None] * w[None, :]).ravel()
    sn = span[:, None] * unit[None, :]
    y = c[:, None] * np.exp(sn)
    f = y ** (1.0 - s) * (cbrt0[:, None] + np.cbrt(y)) ** 2 * psi(v0[:, None] + y)
    out = (f * span[:, None]) @ uw
    lim = psi_limit if psi_limit is not None else float(np.asarray(psi(np.array([1e3 * far])))[0])
    tail = (cbrt0**2 * far ** (1.0 - s) / (s - 1.0)
            + 2.0 * cbrt0 * far ** (4.0 / 3.0 - s) / (s - 4.0 / 3.0)
            + far ** (5.0 / 3.0 - s) / (s - 5.0 / 3.0))
    out = out + lim * tail
    return out.item() if np.ndim(V0) == 0 else out


def s_(sigma) -> float:
    return as_params(sigma).sigma


@dataclass
class BVPSolution:
    """Interior solution of the Dirichlet problem, callable on (0, inf).

    Values beyond v_bar return the exterior data, so the object can be fed to
    :func:`smolkin.resolvent.apply_generator`.
    """

    problem: BVProblem
    ctx: GreensContext
    grid: np.ndarray
    values: np.ndarray
    tol: float | None = None

    @property
    def cap(self) -> float:
        return self.problem.v_bar

    def tail(self, x):
        x = np.asarray(x, dtype=float)
        return self.problem.psi(x) if self.problem.psi is not None else np.zeros_like(x)

    def interior(self, V):
        return _solve_points(self.problem, self.ctx, V, self.tol)

    def __call__(self, V):
        v = np.atleast_1d(np.asarray(V, dtype=float))
        out = np.empty(v.shape)
        inside = v < self.cap
        if np.any(inside):
            out[inside] = self.interior(v[inside])
        if np.any(~inside):
            out[~inside] = self.tail(v[~inside])
        return out.item() if np.ndim(V) == 0 else out


def _solve_points(problem: BVProblem, ctx: GreensContext, V, tol: float | None):
    v = np.atleast_1d(np.asarray(V, dtype=float))
    out = np.zeros(v.shape)
    s = ctx.sigma
    vb = problem.v_bar
    if problem.g is not None:
        out = out + green_apply(v, problem.g, vb, ctx, 0.0, tol)
    if problem.psi is not None:
        psi = problem.psi

        def h(x, gap):
            return exit_source(x, psi, vb, s, problem.psi_limit, gap)

        # the exit rate blows up like (v_bar - V0)^(1 - sigma) at the boundary
        out = out + green_apply(v, h, vb, ctx, s - 1.0, tol, pass_gap=True)
    return out


def bvp_solve(problem: BVProblem, ctx: GreensContext, grid=None, tol: float | None = None) -> BVPSolution:
    """Solve -K_inf u = g on (0, v_bar), u = psi on [v_bar, inf).

    The exterior contribution is the Green's function applied to the exit
    source (the order of the two integrals in the kernel representation is
    exchanged), which is cheaper than integrating ``dirichlet_k`` and equal
    to it; :func:`dirichlet_k` remains available for direct evaluation.
    """
    if grid is None:
        grid = np.linspace(0.05, 0.95, 19) * problem.v_bar
    grid = np.asarray(grid, dtype=float)
    if np.any(grid <= 0) or np.any(grid >= problem.v_bar):
        raise DomainError("grid must lie inside (0, v_bar)")
    vals = _solve_points(problem, ctx, grid, tol)
    return BVPSolution(problem, ctx, grid, vals, tol)

"""Jump generators on piecewise-linear functions, resolvents and adjoint flow.

A generator acts as

    (Omega phi)(V) = int_0^inf k(v) (V^(1/3) + v^(1/3))^2 [phi(V+v) - phi(V)] dv

with rate density k(v) one of: the pure power v^-sigma, its regularization
(v+eps)^-sigma, an integrable scatterer law G, or the rescaled law
T^(sigma mu) G(T^mu v).

On a grid function (nodes x_0 < ... < x_N = M, linear in between, constant
beyond M) the integral is done exactly cell by cell, so Omega becomes a
matrix with non-negative off-diagonal entries and zero row sums.  The jump
only looks upwards, which makes the matrix upper triangular: resolvents are
solved by back substitution from the cap downwards.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError, NumericError
from .laws import ScattererLaw
from .specfun import QuadratureSpec, integrate_singular

__all__ = [
    "GridFunction",
    "GeneratorSpec",
    "PregeneratorReport",
    "geometric_nodes",
    "generator_matrix",
    "apply_generator",
    "resolvent_solve",
    "extrapolate_epsilon",
    "pregenerator_check",
    "adjoint_evolve",
    "omega_apply",
]

C = (1.0, 2.0, 1.0)
_GL_X, _GL_W = np.polynomial.legendre.leggauss(10)
_GL_T = 0.5 * (_GL_X + 1.0)
_GL_W = 0.5 * _GL_W


# ------------------------------------------------------------ grid functions


@dataclass(frozen=True)
class GridFunction:
    """Piecewise-linear function on ``nodes``, equal to ``tail_value`` beyond the cap."""

    nodes: np.ndarray
    values: np.ndarray
    tail_value: float

    def __post_init__(self):
        x = np.asarray(self.nodes, dtype=float)
        y = np.asarray(self.values, dtype=float)
        if x.ndim != 1 or x.shape != y.shape or len(x) < 2:
            raise DomainError("nodes and values must be 1-d arrays of equal length >= 2")
        if x[0] < 0 or np.any(np.diff(x) <= 0):
            raise DomainError("nodes must be non-negative and strictly increasing")
        if not np.all(np.isfinite(y)):
            raise DomainError("values must be finite")
        if y[-1] != self.tail_value:
            raise DomainError("the value at the cap must equal tail_value")
        object.__setattr__(self, "nodes", x)
        object.__setattr__(self, "values", y)

    @property
    def cap(self) -> float:
        return float(self.nodes[-1])

    @classmethod
    def from_function(cls, f: Callable, nodes) -> "GridFunction":
        x = np.asarray(nodes, dtype=float)
        y = np.asarray(f(x), dtype=float)
        return cls(x, y, float(y[-1]))

    def tail(self, x):
        return np.full(np.shape(x), self.tail_value)

    def __call__(self, V):
        v = np.asarray(V, dtype=float)
        out = np.interp(v, self.nodes, self.values, right=self.tail_value)
        return out.item() if out.ndim == 0 else out

    def slope(self, V):
        # right-sided slope
        idx = np.clip(np.searchsorted(self.nodes, V, side="right") - 1, 0, len(self.nodes) - 2)
        x, y = self.nodes, self.values
        return (y[idx + 1] - y[idx]) / (x[idx + 1] - x[idx])


def geometric_nodes(lo: float = 1e-4, cap: float = 10.0, n: int = 400, include_zero: bool = False) -> np.ndarray:
    """Geometric nodes from ``lo`` to ``cap`` (optionally preceded by 0)."""
    if not 0 < lo < cap:
        raise DomainError("need 0 < lo < cap")
    x = np.geomspace(lo, cap, n)
    x[-1] = cap
    return np.concatenate([[0.0], x]) if include_zero else x


# ----------------------------------------------------------- generator spec


@dataclass(frozen=True)
class GeneratorSpec:
    """Rate density of a jump generator.

    Use the constructors :meth:`power`, :meth:`regularized`, :meth:`from_law`
    and :meth:`rescaled`.  Internally every density is ``amp * G(scale_in * v)``
    for a base law G, or the pure power.
    """

    kind: str
    sigma: float
    epsilon: float = 0.0
    law: ScattererLaw | None = None
    T: float = 1.0
    _base: ScattererLaw | None = field(default=None, repr=False, compare=False)
    _amp: float = field(default=1.0, repr=False, compare=False)
    _k: float = field(default=1.0, repr=False, compare=False)

    @classmethod
    def power(cls, sigma: float) -> "GeneratorSpec":
        """Pure v^-sigma (the unregularized limit generator)."""
        if not sigma > 5.0 / 3.0:
            raise DomainError("sigma must exceed 5/3")
        return cls("power", float(sigma))

    @classmethod
    def regularized(cls, sigma: float, epsilon: float = 1e-3) -> "GeneratorSpec":
        if not epsilon > 0:
            raise DomainError("epsilon must be positive for the regularized generator")
        from .laws import shifted_power

        s = float(sigma)
        return cls("regularized", s, epsilon=float(epsilon), _base=shifted_power(s),
                   _amp=epsilon ** (-s), _k=1.0 / epsilon)

    @classmethod
    def from_law(cls, law: ScattererLaw) -> "GeneratorSpec":
        return cls("law", law.sigma, law=law, _base=law)

    @classmethod
    def rescaled(cls, T: float, law: ScattererLaw) -> "GeneratorSpec":
        if not T >= 1.0:
            raise DomainError("rescaling time T must be >= 1")
        s = law.sigma
        mu = 1.0 / (s - 5.0 / 3.0)
        return cls("rescaled", s, law=law, T=float(T), _base=law, _amp=T ** (s * mu), _k=T**mu)

    @property
    def integrable(self) -> bool:
        return self.kind in ("law", "rescaled")

    @property
    def scale(self) -> float:
        """Length scale below which the density departs from a power (0 for the pure power)."""
        if self.kind == "power":
            return 0.0
        return self._base.scale / self._k

    @property
    def breakpoint(self) -> float | None:
        if self._base is not None and self._base.variant == "truncated_power":
            return self._base.v_min / self._k
        return None

    def density(self, v):
        v = np.asarray(v, dtype=float)
        if self.kind == "power":
            with np.errstate(divide="ignore"):
                return v ** (-self.sigma)
        return self._amp * self._base.density(self._k * v)

    def lower_moment(self, p: float, c):
        """int_0^c k(v) v^p dv."""
        c = np.asarray(c, dtype=float)
        if self.kind == "power":
            q = p + 1.0 - self.sigma
            if q <= 0:
                raise DomainError("lower moment diverges for the pure power")
            return c**q / q
        return self._amp * self._k ** (-1.0 - p) * self._base.lower_moment(p, self._k * c)

    def upper_moment(self, p: float, c):
        """int_c^inf k(v) v^p dv."""
        c = np.asarray(c, dtype=float)
        if self.kind == "power":
            return c ** (p + 1.0 - self.sigma) / (self.sigma - p - 1.0)
        return self._amp * self._k ** (-1.0 - p) * self._base.upper_moment(p, self._k * c)

    def rate_above(self, V, c):
        """int_c^inf k(v) (V^(1/3) + v^(1/3))^2 dv."""
        V = np.asarray(V, dtype=float)
        cb = np.cbrt(V)
        return sum(C[j] * cb ** (2 - j) * self.upper_moment(j / 3.0, c) for j in range(3))

    def weighted_lower(self, V, p: float, c):
        """int_0^c k(v) (V^(1/3) + v^(1/3))^2 v^p dv (p >= 1 for the pure power)."""
        V = np.asarray(V, dtype=float)
        cb = np.cbrt(V)
        return sum(C[j] * cb ** (2 - j) * self.lower_moment(p + j / 3.0, c) for j in range(3))


# ---------------------------------------------------------- cell integrals


def _kernel(V, v, spec: GeneratorSpec):
    return spec.density(v) * (np.cbrt(V) + np.cbrt(v)) ** 2


def _gl_piece(V, lo, hi, spec: GeneratorSpec, s: float):
    """(int k, int k (v-lo)) over [lo, hi] with lo > 0, in the variable log(v + s)."""
    a = np.log(lo + s)
    b = np.log(hi + s)
    w = a[..., None] + (b - a)[..., None] * _GL_T
    ew = np.exp(w)
    v = ew - s
    jac = (b - a)[..., None] * ew
    f = _kernel(V[..., None], v, spec) * jac
    j0 = f @ _GL_W
    j1 = (f * (v - lo[..., None])) @ _GL_W
    return j0, j1


def _cell_integrals(V, lo, hi, spec: GeneratorSpec):
    """For cells [lo, hi] of the jump variable (lo > 0) return int k and int k (v-lo).

    Cells are split at the scale of the density and at a density jump.
    """
    V, lo, hi = np.broadcast_arrays(np.asarray(V, float), np.asarray(lo, float), np.asarray(hi, float))
    s = spec.scale
    cuts = [c for c in (s if s > 0 else None, spec.breakpoint) if c is not None]
    edges = [lo]
    for c in sorted(cuts):
        edges.append(np.clip(c, lo, hi))
    edges.append(hi)
    j0 = np.zeros(lo.shape)
    j1 = np.zeros(lo.shape)
    for a, b in zip(edges[:-1], edges[1:]):
        live = b > a
        if not np.any(live):
            continue
        p0, p1 = _gl_piece(V[live], a[live], b[live], spec, s)
        j0[live] += p0
        # int k (v - lo) = int k (v - a) + (a - lo) int k
        j1[live] += p1 + (a[live] - lo[live]) * p0
    return j0, j1


def _operator_rows(Vs, nodes, spec: GeneratorSpec, chunk: int = 64) -> np.ndarray:
    """Dense rows W with (Omega phi)(V) = W @ phi_values for piecewise-linear phi."""
    x = np.asarray(nodes, dtype=float)
    Vs = np.atleast_1d(np.asarray(Vs, dtype=float))
    n = len(x)
    W = np.zeros((len(Vs), n))
    M = x[-1]
    for start in range(0, len(Vs), chunk):
        block = Vs[start:start + chunk]
        for r, V in enumerate(block):
            row = W[start + r]
            if V >= M:
                continue
            if V == 0.0 and not spec.integrable:
                raise DomainError("V = 0 needs an integrable law")
            m = int(np.clip(np.searchsorted(x, V, side="right") - 1, 0, n - 2))
            h_m = x[m + 1] - x[m]
            lam_v = (V - x[m]) / h_m
            # first (partial) cell: phi(V+v) - phi(V) = slope * v exactly
            h_first = x[m + 1] - V
            j1 = float(spec.weighted_lower(V, 1.0, h_first))
            row[m + 1] += j1 / h_m
            row[m] -= j1 / h_m
            # later cells [x_k, x_{k+1}], k = m+1 .. n-2
            if m + 1 <= n - 2:
                k = np.arange(m + 1, n - 1)
                lo = x[k] - V
                hi = x[k + 1] - V
                c0, c1 = _cell_integrals(np.full(lo.shape, V), lo, hi, spec)
                jl = c1 / (hi - lo)
                np.add.at(row, k, c0 - jl)
                np.add.at(row, k + 1, jl)
                total = c0.sum()
            else:
                total = 0.0
            tail = float(spec.rate_above(V, M - V))
            row[n - 1] += tail
            total += tail
            # - phi(V) times the mass of all cells after the first
            row[m] -= total * (1.0 - lam_v)
            row[m + 1] -= total * lam_v
    return W


def generator_matrix(nodes, spec: GeneratorSpec) -> np.ndarray:
    """Off-diagonal rates A[i, k] (k > i) of the discretized generator on the nodes.

    The generator is (A - diag(A.sum(1))); the last row is zero (constant beyond the cap).
    """
    x = np.asarray(nodes, dtype=float)
    W = _operator_rows(x[:-1], x, spec)
    A = np.zeros((len(x), len(x)))
    A[:-1] = W
    np.fill_diagonal(A, 0.0)
    if np.any(np.tril(A) != 0):
        raise NumericError("generator matrix is not strictly upper triangular")
    if np.any(A < -1e-12 * np.abs(A).max()):
        raise NumericError("negative jump weight in generator matrix")
    return np.maximum(A, 0.0)


def omega_apply(A: np.ndarray, p: np.ndarray) -> np.ndarray:
    """Discrete generator sum_k A[i, k] (p_k - p_i); exactly zero on constants."""
    return np.einsum("ik,ik->i", A, p[None, :] - p[:, None])


# ---------------------------------------------------------------- apply


def apply_generator(phi, V, spec: GeneratorSpec):
    """(Omega phi)(V) for a :class:`GridFunction` or a smooth callable.

    Callables need attributes ``cap`` and ``tail(x)`` (values beyond the cap);
    an optional ``tail_value`` enables the closed-form tail.  For callables
    the jump integral near v = 0 uses a second-order Taylor expansion with
    finite-difference derivatives, the rest adaptive quadrature.
    """
    Vs = np.atleast_1d(np.asarray(V, dtype=float))
    if np.any(Vs < 0):
        raise DomainError("V must be non-negative")
    if np.any(Vs == 0) and not spec.integrable:
        raise DomainError("the jump integral diverges at V = 0 for a non-integrable density")
    if isinstance(phi, GridFunction):
        out = _operator_rows(Vs, phi.nodes, spec) @ phi.values
    else:
        out = np.array([_apply_callable(phi, v, spec) for v in Vs])
    return out.item() if np.ndim(V) == 0 else out


def _apply_callable(phi, V: float, spec: GeneratorSpec, rel_tol: float = 1e-9) -> float:
    cap = float(phi.cap)
    if V >= cap:
        return 0.0
    f0 = float(phi(V))
    h0 = 1e-3 * min(V, cap - V) if V > 0 else 1e-3 * cap
    d = h0
    if V > 2 * d:
        pts = np.array([V - 2 * d, V - d, V + d, V + 2 * d])
        fm2, fm1, fp1, fp2 = np.asarray(phi(pts), dtype=float)
        d1 = (-fp2 + 8 * fp1 - 8 * fm1 + fm2) / (12 * d)
        d2 = (-fp2 + 16 * fp1 - 30 * f0 + 16 * fm1 - fm2) / (12 * d * d)
    else:
        pts = np.array([V + d, V + 2 * d, V + 3 * d, V + 4 * d])
        f1, f2, f3, f4 = np.asarray(phi(pts), dtype=float)
        d1 = (-25 * f0 + 48 * f1 - 36 * f2 + 16 * f3 - 3 * f4) / (12 * d)
        d2 = (35 * f0 - 104 * f1 + 114 * f2 - 56 * f3 + 11 * f4) / (12 * d * d)
    near = d1 * float(spec.weighted_lower(V, 1.0, h0)) + 0.5 * d2 * float(spec.weighted_lower(V, 2.0, h0))

    def body(v):
        return _kernel(V, v, spec) * (np.asarray(phi(V + v), dtype=float) - f0)

    qs = QuadratureSpec(abs_tol=1e-12, rel_tol=rel_tol, max_subdivisions=20000)
    pieces = [h0]
    for c in (spec.scale, spec.breakpoint):
        if c and h0 < c < cap - V:
            pieces.append(c)
    pieces.append(cap - V)
    pieces = sorted(pieces)
    mid = sum(integrate_singular(body, a, b, qs).value for a, b in zip(pieces[:-1], pieces[1:]))

    tv = getattr(phi, "tail_value", None)
    if tv is not None:
        far = (tv - f0) * float(spec.rate_above(V, cap - V))
    else:
        def tail(v):
            return _kernel(V, v, spec) * (np.asarray(phi.tail(V + v), dtype=float) - f0)

        far = integrate_singular(tail, cap - V, math.inf, qs, tail_exponent=spec.sigma - 2.0 / 3.0).value
    return near + mid + far


# ------------------------------------------------------------- resolvent


def resolvent_solve(g: GridFunction, lam: float, spec: GeneratorSpec, A: np.ndarray | None = None) -> GridFunction:
    """Solve (I - lam Omega) phi = g on the nodes of ``g``.

    Row i only couples to nodes above it, so phi is obtained exactly by back
    substitution from the cap, where phi = g(M).  Each value is a convex
    combination of g at that node and phi above it, which gives the maximum
    and minimum principles without any iteration.
    """
    if not lam > 0:
        raise DomainError("lambda must be positive")
    if A is None:
        A = generator_matrix(g.nodes, spec)
    n = len(g.nodes)
    gv = g.values
    phi = np.empty(n)
    phi[-1] = g.tail_value
    rates = A.sum(axis=1)
    for i in range(n - 2, -1, -1):
        row = A[i, i + 1:]
        num = lam * float(row @ (phi[i + 1:] - gv[i]))
        phi[i] = gv[i] + num / (1.0 + lam * rates[i])
    return GridFunction(g.nodes, phi, g.tail_value)


def extrapolate_epsilon(values: Sequence[np.ndarray], eps: Sequence[float], rate: float) -> np.ndarray:
    """Richardson extrapolation to eps -> 0 assuming error ~ c eps^rate (pairwise, last two)."""
    if len(values) != len(eps) or len(values) < 2:
        raise DomainError("need at least two solutions with their epsilons")
    v1, v2 = np.asarray(values[-2]), np.asarray(values[-1])
    r = (eps[-2] / eps[-1]) ** rate
    return (r * v2 - v1) / (r - 1.0)


# ------------------------------------------------------- pregenerator check


@dataclass
class PregeneratorReport:
    omega_one_max: float
    samples: int
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def pregenerator_check(spec: GeneratorSpec, samples: Sequence[GridFunction], lam: float = 1.0,
                       tol: float = 1e-12) -> PregeneratorReport:
    """Check Omega 1 = 0 and the minimum principle on sample functions.

    For each sample g: at every grid minimizer of g, Omega g >= 0; and the
    resolvent phi = (I - lam Omega)^-1 g satisfies min g <= phi <= max g.
    Violations are reported as (sample index, V, description, amount).
    """
    violations = []
    omega_one = 0.0
    cache: dict = {}
    for idx, g in enumerate(samples):
        key = (g.nodes.tobytes(),)
        if key not in cache:
            cache[key] = generator_matrix(g.nodes, spec)
        A = cache[key]
        o1 = omega_apply(A, np.ones(len(g.nodes)))
        omega_one = max(omega_one, float(np.abs(o1).max()))
        scale = max(1.0, float(np.abs(g.values).max()))
        og = omega_apply(A, g.values)
        gmin = g.values.min()
        for i in np.flatnonzero(g.values == gmin):
            if og[i] < -tol * scale * max(1.0, A[i].sum()):
                violations.append((idx, float(g.nodes[i]), "Omega g < 0 at a minimum", float(og[i])))
        phi = resolvent_solve(g, lam, spec, A)
        lo = phi.values.min() - gmin
        hi = g.values.max() - phi.values.max()
        if lo < -tol * scale:
            i = int(np.argmin(phi.values))
            violations.append((idx, float(g.nodes[i]), "resolvent undershoots min g", float(lo)))
        if hi < -tol * scale:
            i = int(np.argmax(phi.values))
            violations.append((idx, float(g.nodes[i]), "resolvent overshoots max g", float(hi)))
    return PregeneratorReport(omega_one, len(samples), violations)


# ---------------------------------------------------------- adjoint flow


def adjoint_evolve(phi0: GridFunction, t_grid, spec: GeneratorSpec, safety: float = 0.5) -> list[GridFunction]:
    """Backward-equation flow d phi/dt = Omega phi for an integrable law.

    Three-stage strong-stability-preserving Runge-Kutta with step at most
    ``safety`` / (largest total jump rate); every stage is a convex
    combination of forward-Euler steps, so constants are kept exactly and
    values stay within [min phi0, max phi0].
    """
    if not spec.integrable:
        raise DomainError("adjoint evolution needs an integrable law (kind law or rescaled)")
    ts = np.asarray(t_grid, dtype=float)
    if np.any(np.diff(ts) < 0) or np.any(ts < 0):
        raise DomainError("t_grid must be non-negative and non-decreasing")
    A = generator_matrix(phi0.nodes, spec)
    rate = float(A.sum(axis=1).max())
    if rate <= 0:
        return [phi0 for _ in ts]
    dt_max = safety / rate

    def omega(p):
        return omega_apply(A, p)

    out = []
    phi = phi0.values.copy()
    t = 0.0
    for target in ts:
        while t < target:
            dt = min(dt_max, target - t)
            if dt <= 1e-15 * max(1.0, target):
                t = target
                break
            p1 = phi + dt * omega(phi)
            p2 = 0.75 * phi + 0.25 * (p1 + dt * omega(p1))
            phi = phi / 3.0 + 2.0 / 3.0 * (p2 + dt * omega(p2))
            t += dt
        out.append(GridFunction(phi0.nodes, phi.copy(), float(phi[-1])))
    return out

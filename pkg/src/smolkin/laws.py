"""Scatterer volume laws G(v) with power tail v^-sigma.

Each law exposes the partial moments the simulator and the generator
discretization need:

    moment(p)          = int_0^inf G(v) v^p dv
    upper_moment(p, c) = int_c^inf G(v) v^p dv
    lower_moment(p, c) = int_0^c   G(v) v^p dv

and conditional samplers for the jump components v^(j/3) G(v) on (c, inf).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special as sps

from .errors import DomainError, NumericError
from .specfun import beta as beta_fn

__all__ = ["ScattererLaw", "shifted_power", "truncated_power", "tabulated"]

_TRUNC_GL = np.polynomial.legendre.leggauss(24)


@dataclass(frozen=True)
class ScattererLaw:
    """Density G of scatterer volumes.

    ``variant`` is ``"shifted_power"`` for (1+v)^-sigma, ``"truncated_power"``
    for v^-sigma on [v_min, inf) and ``"tabulated"`` for a piecewise-linear
    table on [0, v_n] continued by v^-sigma.
    """

    variant: str
    sigma: float
    v_min: float = 0.0
    table_v: tuple = ()
    table_g: tuple = ()
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        s = self.sigma
        if not (math.isfinite(s) and s > 5.0 / 3.0):
            raise DomainError(f"scatterer laws need sigma > 5/3 for finite moments, got {s}")
        if self.variant == "truncated_power":
            if not self.v_min > 0:
                raise DomainError("truncated_power needs v_min > 0")
        elif self.variant == "tabulated":
            v = np.asarray(self.table_v, dtype=float)
            g = np.asarray(self.table_g, dtype=float)
            if v.ndim != 1 or len(v) < 2 or v.shape != g.shape:
                raise DomainError("tabulated law needs matching 1-d tables of length >= 2")
            if v[0] != 0.0 or np.any(np.diff(v) <= 0):
                raise DomainError("table abscissae must start at 0 and increase")
            if np.any(g < 0) or not np.all(np.isfinite(g)):
                raise DomainError("table densities must be finite and non-negative")
            if abs(g[-1] * v[-1] ** s - 1.0) > 0.01:
                raise DomainError("table must join the tail v^-sigma (v^sigma G -> 1) within 1%")
        elif self.variant != "shifted_power":
            raise DomainError(f"unknown law variant {self.variant!r}")

    # ------------------------------------------------------------ density

    @property
    def scale(self) -> float:
        """Length below which the density is not yet power-like."""
        if self.variant == "shifted_power":
            return 1.0
        if self.variant == "truncated_power":
            return self.v_min
        return float(self.table_v[-1])

    @property
    def breakpoints(self) -> tuple:
        if self.variant == "truncated_power":
            return (self.v_min,)
        if self.variant == "tabulated":
            return tuple(float(x) for x in self.table_v[1:])
        return ()

    def density(self, v):
        v = np.asarray(v, dtype=float)
        s = self.sigma
        if self.variant == "shifted_power":
            return (1.0 + v) ** (-s)
        if self.variant == "truncated_power":
            with np.errstate(divide="ignore"):
                return np.where(v >= self.v_min, np.abs(v) ** (-s), 0.0)
        tv = np.asarray(self.table_v)
        tg = np.asarray(self.table_g)
        with np.errstate(divide="ignore"):
            tail = np.abs(v) ** (-s) * tg[-1] * tv[-1] ** s
        return np.where(v <= tv[-1], np.interp(v, tv, tg), tail)

    # ------------------------------------------------------------ moments

    def moment(self, p: float) -> float:
        if p + 1.0 >= self.sigma:
            raise DomainError(f"moment of order {p} diverges for sigma = {self.sigma}")
        if self.variant == "shifted_power":
            return float(beta_fn(p + 1.0, self.sigma - p - 1.0))
        if self.variant == "truncated_power":
            return self.v_min ** (p + 1.0 - self.sigma) / (self.sigma - p - 1.0)
        end = float(self.table_v[-1])
        return float(self._table_lower(p, end)[0]) + float(self._table_tail(p, end))

    def upper_moment(self, p: float, c):
        """int_c^inf G(v) v^p dv, vectorized in c."""
        s = self.sigma
        if p + 1.0 >= s:
            raise DomainError(f"upper moment of order {p} diverges for sigma = {s}")
        c = np.asarray(c, dtype=float)
        if self.variant == "shifted_power":
            x = c / (1.0 + c)
            y = 1.0 / (1.0 + c)
            a, b = p + 1.0, s - p - 1.0
            # for large c, x rounds to 1; expand in y = 1/(1+c) instead
            with np.errstate(divide="ignore", invalid="ignore"):
                far = y**b / b * sps.hyp2f1(b, -p, b + 1.0, y)
            return np.where(c > 1.0, far, float(beta_fn(a, b)) * sps.betaincc(a, b, x))
        if self.variant == "truncated_power":
            return np.maximum(c, self.v_min) ** (p + 1.0 - s) / (s - p - 1.0)
        end = float(self.table_v[-1])
        cc = np.atleast_1d(c)
        out = np.where(
            cc >= end,
            self._table_tail(p, np.maximum(cc, end)),
            self.moment(p) - self._table_lower(p, np.minimum(cc, end)),
        )
        return out.reshape(c.shape) if c.ndim else float(out[0])

    def lower_moment(self, p: float, c):
        """int_0^c G(v) v^p dv, vectorized in c; any p > -1."""
        s = self.sigma
        c = np.asarray(c, dtype=float)
        if self.variant == "shifted_power":
            return _shifted_lower(p, s, c)
        if self.variant == "truncated_power":
            m = self.v_min
            q = p + 1.0 - s
            cc = np.maximum(c, m)
            return (cc**q - m**q) / q
        end = float(self.table_v[-1])
        cc = np.atleast_1d(c)
        inner = self._table_lower(p, np.minimum(cc, end))
        tv, tg = self.table_v, self.table_g
        amp = tg[-1] * tv[-1] ** s
        q = p + 1.0 - s
        outer = np.where(cc > end, amp * (np.maximum(cc, end) ** q - end**q) / q, 0.0)
        out = inner + outer
        return out.reshape(c.shape) if c.ndim else float(out[0])

    # -------------------------------------------------------- table support

    def _table_tail(self, p, c):
        tv, tg = self.table_v, self.table_g
        amp = tg[-1] * tv[-1] ** self.sigma
        return amp * np.asarray(c, dtype=float) ** (p + 1.0 - self.sigma) / (self.sigma - p - 1.0)

    def _table_cells(self, p):
        key = ("cells", p)
        if key not in self._cache:
            tv = np.asarray(self.table_v, dtype=float)
            cell = _cell_rule(self.density, p, tv[:-1], tv[1:])
            self._cache[key] = np.concatenate([[0.0], np.cumsum(cell)])
        return self._cache[key]

    def _table_lower(self, p, c):
        # cumulative over whole cells plus a Gauss rule on the partial cell
        tv = np.asarray(self.table_v, dtype=float)
        cum = self._table_cells(p)
        cc = np.atleast_1d(np.asarray(c, dtype=float))
        idx = np.clip(np.searchsorted(tv, cc, side="right") - 1, 0, len(tv) - 2)
        lo = tv[idx]
        return cum[idx] + _cell_rule(self.density, p, lo, cc)

    # ----------------------------------------------------------- sampling

    def sample_above(self, j: int, c, draw) -> np.ndarray:
        """Sample v > c with density proportional to v^(j/3) G(v).

        ``draw(attempt, idx)`` must return two arrays of fresh uniforms
        (proposal, acceptance) for the pending positions ``idx`` of ``c``;
        the counter-based streams make every attempt reproducible.
        """
        s = self.sigma
        c = np.asarray(c, dtype=float)
        a = s - 1.0 - j / 3.0
        if self.variant == "truncated_power":
            u = draw(0, np.arange(c.size))[0].reshape(c.shape)
            return np.maximum(c, self.v_min) * u ** (-1.0 / a)
        if self.variant == "shifted_power":
            c = c.ravel()
            out = np.empty(c.shape)
            pending = np.arange(c.size)
            attempt = 0
            while pending.size:
                u, acc = draw(attempt, pending)
                v = (1.0 + c[pending]) * u ** (-1.0 / a) - 1.0
                # target / envelope = (v / (1+v))^(j/3) <= 1
                ok = acc <= (v / (1.0 + v)) ** (j / 3.0) if j else np.ones(v.shape, bool)
                out[pending[ok]] = v[ok]
                pending = pending[~ok]
                attempt += 1
                if attempt > 200:
                    raise NumericError("rejection sampler failed to accept in 200 attempts")
            return out
        return self._table_sample(j, c, draw(0, np.arange(c.size))[0].reshape(c.shape))

    def _table_sample(self, j, c, u):
        p = j / 3.0
        end = float(self.table_v[-1])
        key = ("inv", j)
        if key not in self._cache:
            grid = np.concatenate([np.linspace(0.0, end, 4097)])
            cum = self._table_lower(p, grid)
            self._cache[key] = (grid, cum)
        grid, cum = self._cache[key]
        total = self.moment(p)
        mass_above_c = np.asarray(self.upper_moment(p, c), dtype=float)
        # target cumulative (from 0) of the conditional draw
        target = total - mass_above_c * u
        below = target < cum[-1]
        out = np.empty(c.shape)
        out[below] = np.interp(target[below], cum, grid)
        tail_u = (total - target[~below]) / self._table_tail(p, end)
        out[~below] = end * tail_u ** (-1.0 / (self.sigma - 1.0 - p))
        return np.maximum(out, c)


def _cell_rule(density, p, lo, hi):
    # Gauss rule per cell; cells starting at 0 use v = lo + (hi-lo) t^3 so
    # that fractional powers of v become polynomial in t
    x, w = _TRUNC_GL
    t = 0.5 * (x + 1.0)
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    h = (hi - lo)[:, None]
    at_zero = (lo == 0.0)[:, None]
    nodes = np.where(at_zero, h * t**3, lo[:, None] + h * t)
    jac = np.where(at_zero, 3.0 * h * t**2, h)
    return (density(nodes) * nodes**p * jac) @ (0.5 * w)


def _shifted_lower(p: float, s: float, c: np.ndarray) -> np.ndarray:
    # int_0^c (1+v)^-s v^p dv.  Up to c = 1 in x = v/(1+v); beyond, in
    # y = 1/(1+v) the integrand is y^(b-1) (1-y)^p with b = s-p-1, expanded
    # term by term so that b + k = 0 (a logarithm) needs no special case
    c = np.asarray(c, dtype=float)
    x = np.minimum(c, 1.0) / (1.0 + np.minimum(c, 1.0))
    near = x ** (p + 1.0) / (p + 1.0) * sps.hyp2f1(p + 1.0, p + 2.0 - s, p + 2.0, x)
    if not np.any(c > 1.0):
        return near
    shape = c.shape
    near = np.ravel(near)
    c = np.ravel(c)
    y = 1.0 / (1.0 + np.maximum(c, 1.0))
    b = s - p - 1.0
    k = np.arange(_Y_TERMS)
    coef = sps.binom(p, k) * (-1.0) ** k
    e = (b + k)[:, None]
    log_ratio = np.log(0.5 / y)[None, :]
    # (0.5^e - y^e) / e, written with expm1 near e = 0
    small = np.abs(e) < 0.5
    safe_e = np.where(e == 0, 1.0, e)
    with np.errstate(over="ignore", under="ignore", invalid="ignore"):
        direct = (0.5**e - y[None, :] ** e) / safe_e
        close = np.where(e == 0, log_ratio, y[None, :] ** e * np.expm1(np.where(small, e, 0.0) * log_ratio) / safe_e)
    piece = np.where(small, close, direct)
    far = near + coef @ piece
    return np.where(c > 1.0, far, near).reshape(shape)


_Y_TERMS = 64


def shifted_power(sigma: float) -> ScattererLaw:
    return ScattererLaw("shifted_power", float(sigma))


def truncated_power(sigma: float, v_min: float = 1.0) -> ScattererLaw:
    return ScattererLaw("truncated_power", float(sigma), v_min=float(v_min))


def tabulated(sigma: float, v, g) -> ScattererLaw:
    return ScattererLaw("tabulated", float(sigma), table_v=tuple(map(float, v)), table_g=tuple(map(float, g)))

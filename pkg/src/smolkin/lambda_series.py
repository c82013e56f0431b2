"""Frobenius-type series for the rescaled fundamental solution.

The profile is written as

    Lambda(xi) = sum_{j=0..2} sum_{m>=0} a[m][j] xi^(sigma - 2 + j/3 + m)

with a[0][0] = 1.  The coefficients follow from matching powers of xi in
the nonlocal equation, one fractional block of order sigma - 1 and two of
orders sigma - 4/3 and sigma - 5/3 weighted by the Taylor series of
2(1-xi)^(-1/3) and (1-xi)^(-2/3).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, NumericError, TailError
from .specfun import QuadratureSpec, SigmaParams, as_params, integrate_singular, omega

__all__ = [
    "TaylorF",
    "LambdaSeries",
    "f_taylor",
    "build",
    "eval_lambda",
    "eval_profile",
    "h_eval",
    "residual",
    "frac_diff",
]

SERIES_SWITCH = 0.9


@dataclass(frozen=True)
class TaylorF:
    """Taylor coefficients of c_l (1 - xi)^(-l/3) with c_1 = 2, c_2 = 1."""

    l: int
    coeffs: np.ndarray


def f_taylor(l: int, K: int) -> TaylorF:
    if l not in (1, 2):
        raise DomainError(f"l must be 1 or 2, got {l}")
    if K < 0:
        raise DomainError("K must be non-negative")
    b = np.empty(K + 1)
    b[0] = 2.0 if l == 1 else 1.0
    for k in range(1, K + 1):
        b[k] = b[k - 1] * (l / 3.0 + k - 1) / k
    return TaylorF(l, b)


@dataclass(frozen=True)
class LambdaSeries:
    """Coefficient table and growth certificate of the series.

    ``coeffs[m, j]`` multiplies xi^(sigma - 2 + j/3 + m).  ``growth_rate``
    is max(1 + delta, observed geometric rate over the last quarter of the
    table).  ``growth_constant`` is the smallest C with
    max_j |a[k][j]| <= C growth_rate^k over the whole table and
    ``tail_constant`` the same fitted on the upper half only; the truncation
    estimate uses the latter.
    """

    sigma: float
    order: int
    coeffs: np.ndarray
    delta: float
    growth_constant: float
    tail_constant: float
    growth_rate: float = 1.05
    coeff_error: np.ndarray | None = field(default=None, repr=False, compare=False)
    switch: float = SERIES_SWITCH
    _mellin: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def exponents(self) -> np.ndarray:
        m = np.arange(self.order + 1)[:, None]
        j = np.arange(3)[None, :]
        return self.sigma - 2.0 + j / 3.0 + m

    def tail_bound(self, xi) -> np.ndarray:
        """Truncation plus rounding error bound, relative to xi^(sigma-2)."""
        xi = np.asarray(xi, dtype=float)
        r = self.growth_rate * xi
        with np.errstate(divide="ignore"):
            out = 3.0 * self.tail_constant * r ** (self.order + 1) / (1.0 - r)
        return np.where(r < 1.0, out, np.inf) + self.rounding_bound(xi)

    def rounding_bound(self, xi) -> np.ndarray:
        # rounding carried by the coefficients themselves plus the summation;
        # dominant below sigma ~ 1.8 where early coefficients are large
        xi = np.asarray(xi, dtype=float)
        w = 16.0 * np.finfo(float).eps * np.abs(self.coeffs)
        if self.coeff_error is not None:
            w = w + self.coeff_error
        out = np.zeros_like(xi)
        for j in range(3):
            poly = np.zeros_like(xi)
            for m in range(self.order, -1, -1):
                poly = poly * xi + w[m, j]
            out = out + xi ** (j / 3.0) * poly
        return out


def build(params, K: int = 200, delta: float = 0.05) -> LambdaSeries:
    """Fill the coefficient table by the triangular recursion.

    Order: k ascending, and within each k the fractional index s = 0, 1, 2.
    Each a[k][s] depends on a[m][j] with m < k and on a[k][j] with j < s only.
    """
    p = as_params(params).require_core()
    s_ = p.sigma
    if K < 0:
        raise DomainError("K must be non-negative")
    if not 0.0 < delta < 1.0:
        raise DomainError("delta must lie in (0, 1)")

    b = {1: f_taylor(1, K).coeffs, 2: f_taylor(2, K).coeffs}
    om = np.empty((3, 3, K + 1))
    for l in range(3):
        for j in range(3):
            for m in range(K + 1):
                om[l, j, m] = omega(l, j, m, p)

    a = np.zeros((K + 1, 3))
    err = np.zeros((K + 1, 3))  # first-order rounding envelope of a
    eps = np.finfo(float).eps
    a[0, 0] = 1.0
    # pairs (l, j) grouped by the residue class rho of j + l and the carry tau
    groups: dict[int, list[tuple[int, int, int]]] = {0: [], 1: [], 2: []}
    for l in (1, 2):
        for j in range(3):
            groups[(j + l) % 3].append((l, j, (j + l) // 3))

    for k in range(K + 1):
        for s in range(3):
            if k == 0 and s == 0:
                continue
            terms = []
            carried = 0.0
            for l, j, tau in groups[s]:
                top = k - tau
                if top < 0:
                    continue
                bl = b[l]
                for m in range(top + 1):
                    # a[k][j] for j >= s is still zero at this point, which
                    # is exactly the restriction to already-known entries
                    terms.append(bl[top - m] * om[l, j, m] * a[m, j])
                    carried += abs(bl[top - m] * om[l, j, m]) * err[m, j]
            a[k, s] = -math.fsum(terms) / om[0, s, k]
            mag = math.fsum(abs(t) for t in terms)
            err[k, s] = (4.0 * eps * mag + carried) / abs(om[0, s, k]) + eps * abs(a[k, s])
        if not np.all(np.isfinite(a[k])):
            raise NumericError(f"coefficient row a[{k}] overflowed")

    rows = np.max(np.abs(a), axis=1)
    rate = 1.0 + delta
    q = (3 * K) // 4
    if K >= 8 and rows[q] > 0 and rows[K] > 0:
        rate = max(rate, math.exp(math.log(rows[K] / rows[q]) / (K - q)))
    scaled = rows / rate ** np.arange(K + 1)
    growth = float(scaled.max())
    tail = float(scaled[K // 2 :].max()) if K >= 2 else growth
    return LambdaSeries(s_, K, a, delta, growth, tail, rate, coeff_error=err)


def _series_sum(series: LambdaSeries, xi: np.ndarray) -> np.ndarray:
    # Lambda = xi^(sigma-2) * sum_j xi^(j/3) P_j(xi), Horner per family
    a = series.coeffs
    out = np.zeros_like(xi)
    for j in range(3):
        poly = np.zeros_like(xi)
        for m in range(series.order, -1, -1):
            poly = poly * xi + a[m, j]
        out = out + xi ** (j / 3.0) * poly
    return out * xi ** (series.sigma - 2.0)


def _mellin_route(series: LambdaSeries, xi: np.ndarray) -> np.ndarray:
    from . import mellin

    st = series._mellin.get("structure")
    if st is None:
        st = mellin.build_structure(series.sigma, n_max=0)
        series._mellin["structure"] = st
    return np.asarray(mellin.g_eval(1.0 - xi, None, st)) / st.k_bar


def eval_lambda(series: LambdaSeries, xi, rel_tol: float = 1e-3):
    """Evaluate the profile at ``xi`` in (0, 1).

    Points above the series switch are delegated to the contour
    representation; points below it use the truncated series and raise
    :class:`TailError` if the certified tail exceeds ``rel_tol``.
    """
    x = np.asarray(xi, dtype=float)
    flat = np.atleast_1d(x).ravel()
    if np.any((flat <= 0) | (flat >= 1)):
        raise DomainError("xi must lie in (0, 1)")
    out = np.empty_like(flat)
    lo = flat <= series.switch
    if np.any(lo):
        xl = flat[lo]
        tb = series.tail_bound(xl)
        if np.any(tb > rel_tol):
            worst = xl[np.argmax(tb)]
            need = _required_order(series, worst, rel_tol)
            hint = f"need K >= {need}" if need >= 0 else "no order suffices at this xi"
            raise TailError(f"series tail at xi={worst:g} exceeds {rel_tol:g}; {hint}", need)
        out[lo] = _series_sum(series, xl)
    if np.any(~lo):
        out[~lo] = _mellin_route(series, flat[~lo])
    out = out.reshape(x.shape)
    return out.item() if x.ndim == 0 else out


def _required_order(series: LambdaSeries, xi: float, rel_tol: float) -> int:
    r = series.growth_rate * xi
    room = rel_tol - float(series.rounding_bound(xi))
    if r >= 1.0 or room <= 0.0:
        return -1
    need = math.log(room * (1.0 - r) / (3.0 * series.tail_constant)) / math.log(r) - 1.0
    return int(math.ceil(need))


def eval_profile(series: LambdaSeries, xi, rel_tol: float = 1e-3) -> tuple[np.ndarray, np.ndarray]:
    """Profile values that never raise on the tail check.

    Points where the series error bound is within ``rel_tol`` use the
    series; the rest use the contour.  Returns ``(values, from_series)``.
    """
    x = np.atleast_1d(np.asarray(xi, dtype=float))
    if np.any((x <= 0) | (x >= 1)):
        raise DomainError("xi must lie in (0, 1)")
    use = (x <= series.switch) & (series.tail_bound(x) <= rel_tol)
    out = np.empty_like(x)
    if np.any(use):
        out[use] = _series_sum(series, x[use])
    if np.any(~use):
        out[~use] = _mellin_route(series, x[~use])
    return out, use


def h_eval(series: LambdaSeries, xi, rel_tol: float = 1e-3):
    """Remainder Lambda(xi) - xi^(sigma-2), computed without cancellation."""
    x = np.asarray(xi, dtype=float)
    flat = np.atleast_1d(x).ravel()
    lam_part = np.empty_like(flat)
    lo = flat <= series.switch
    if np.any(lo):
        sub = series.coeffs.copy()
        sub[0, 0] = 0.0
        lam_part[lo] = _series_sum(
            LambdaSeries(series.sigma, series.order, sub, series.delta, series.growth_constant, series.tail_constant,
                         series.growth_rate, series.coeff_error),
            flat[lo],
        )
        eval_lambda(series, flat[lo], rel_tol)  # tail check only
    if np.any(~lo):
        lam_part[~lo] = np.asarray(eval_lambda(series, flat[~lo], rel_tol)) - flat[~lo] ** (series.sigma - 2.0)
    out = lam_part.reshape(x.shape)
    return out.item() if x.ndim == 0 else out


def _series_diff(series: LambdaSeries, xi: float, eta: np.ndarray) -> np.ndarray:
    """Lambda(xi - eta) - Lambda(xi) summed term by term via expm1."""
    beta = series.exponents.ravel()
    a = series.coeffs.ravel()
    w = np.log1p(-eta / xi)
    terms = np.expm1(np.outer(w, beta)) * (a * xi**beta)[None, :]
    return terms.sum(axis=1)


def frac_diff(series: LambdaSeries, alpha: float, xi: float, spec: QuadratureSpec | None = None) -> float:
    """One-sided fractional difference of order ``alpha`` of the profile at ``xi``.

    The integrand eta^-(alpha+1) [Lambda(xi-eta) - Lambda(xi)] behaves like
    eta^-alpha at 0 and like (xi-eta)^(sigma-2) at xi; both are declared to
    the quadrature.
    """
    spec = spec or QuadratureSpec(abs_tol=1e-14, rel_tol=1e-11)
    spec = QuadratureSpec(
        abs_tol=spec.abs_tol,
        rel_tol=spec.rel_tol,
        left_exponent=alpha,
        right_exponent=2.0 - series.sigma,
        max_subdivisions=spec.max_subdivisions,
    )

    def integrand(eta):
        return eta ** (-(alpha + 1.0)) * _series_diff(series, xi, eta)

    return integrate_singular(integrand, 0.0, xi, spec).value


def residual(series: LambdaSeries, xi: float, spec: QuadratureSpec | None = None) -> float:
    """Value of the nonlocal operator applied to the truncated series at ``xi``."""
    if not 0.0 < xi <= series.switch:
        raise DomainError(f"residual is available for 0 < xi <= {series.switch}")
    s = series.sigma
    lam = eval_lambda(series, xi)
    weights = {0: -1.0, 1: -2.0 * (1.0 - xi) ** (-1.0 / 3.0), 2: -((1.0 - xi) ** (-2.0 / 3.0))}
    parts = []
    for l in range(3):
        alpha = s - 1.0 - l / 3.0
        d = frac_diff(series, alpha, xi, spec)
        parts.append(weights[l] * (d - xi ** (-alpha) * lam / alpha))
    return math.fsum(parts)

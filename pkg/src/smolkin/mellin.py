"""Mellin symbol of the limiting generator and contour inversion.

The symbol is

    M(z) = z / Gamma(1-z) * sum_j c_j A_j Gamma(b_j - z),
    A_j = Gamma(2 + j/3 - sigma) / (sigma - j/3 - 1),  b_j = sigma - 1 - j/3,

with (c_0, c_1, c_2) = (1, 2, 1).  Its reciprocal is inverted along a
wedge-shaped contour to produce the boundary profile
``g_fun(V) = K_bar * Lambda(1 - V)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BracketError, DomainError, PoleError, TailError
from .specfun import (
    QuadratureSpec,
    SigmaParams,
    as_params,
    gamma,
    integrate_singular,
    loggamma,
    rgamma,
)

__all__ = [
    "ContourSpec",
    "MellinZero",
    "MellinStructure",
    "m_eval",
    "m_direct",
    "m_prime_zero",
    "k_bar",
    "poles",
    "analytic_factor",
    "residue",
    "find_zeros",
    "build_structure",
    "g_eval",
    "g_residue_series",
    "lambda_at_one",
]

C = (1.0, 2.0, 1.0)


def _coeffs(sigma: float):
    a = np.array([gamma(2.0 + j / 3.0 - sigma) / (sigma - j / 3.0 - 1.0) for j in range(3)])
    b = np.array([sigma - 1.0 - j / 3.0 for j in range(3)])
    return a * np.array(C), b


def _check_poles(z, b):
    zr = np.asarray(z)
    if np.iscomplexobj(zr) and np.any(zr.imag != 0):
        mask = zr.imag == 0
        zr = zr.real[mask]
    else:
        zr = np.real(zr)
    for j in range(3):
        n = zr - b[j]
        hit = (n >= 0) & (n == np.round(n))
        if np.any(hit):
            bad = float(np.asarray(zr)[hit].ravel()[0])
            raise PoleError(f"M has a pole at z_(j={j}, n={int(round(bad - b[j]))}) = {bad:g}", bad)


def _gamma_ratio(num, den):
    """Gamma(num)/Gamma(den) for complex arrays, stable for large |Im|."""
    num = np.asarray(num, dtype=complex)
    den = np.asarray(den, dtype=complex)
    out = np.empty(np.broadcast(num, den).shape, dtype=complex)
    num, den = np.broadcast_arrays(num, den)
    near = np.abs(num.imag) < 1.0
    if np.any(near):
        out[near] = np.asarray(gamma(num[near])) * np.asarray(rgamma(den[near]))
    far = ~near
    if np.any(far):
        out[far] = np.exp(loggamma(num[far]) - loggamma(den[far]))
    return out


def m_eval(z, sigma):
    """The Mellin symbol M(z) for real or complex ``z`` (scalar or array)."""
    s = as_params(sigma).require_core().sigma
    a, b = _coeffs(s)
    arr = np.asarray(z)
    _check_poles(arr, b)
    if not np.iscomplexobj(arr):
        x = np.atleast_1d(arr.astype(float))
        total = np.zeros_like(x)
        for j in range(3):
            total = total + a[j] * np.asarray(gamma(b[j] - x)) * np.asarray(rgamma(1.0 - x))
        out = x * total
        return out.item() if arr.ndim == 0 else out.reshape(arr.shape)
    zc = np.atleast_1d(arr.astype(complex))
    total = np.zeros_like(zc)
    for j in range(3):
        total = total + a[j] * _gamma_ratio(b[j] - zc, 1.0 - zc)
    out = zc * total
    return out.item() if arr.ndim == 0 else out.reshape(arr.shape)


def m_direct(z: complex, sigma, spec: QuadratureSpec | None = None) -> complex:
    """M(z) for Re z < 0 from its defining integral (verification oracle)."""
    s = as_params(sigma).require_core().sigma
    z = complex(z)
    if z.real >= 0:
        raise DomainError("the defining integral converges only for Re z < 0")
    total = 0.0 + 0.0j
    for j in range(3):
        p = s - j / 3.0

        def f(eta, _p=p):
            return np.expm1(z * np.log1p(eta)) * eta ** (-_p)

        q = spec or QuadratureSpec(abs_tol=1e-13, rel_tol=1e-11)
        q = QuadratureSpec(
            abs_tol=q.abs_tol, rel_tol=q.rel_tol, left_exponent=p - 1.0, tail_exponent=p, max_subdivisions=20000
        )
        total += C[j] * integrate_singular(f, 0.0, math.inf, q).value
    return total


def m_prime_zero(sigma) -> float:
    s = as_params(sigma).require_core().sigma
    a, b = _coeffs(s)
    return float(sum(a[j] * gamma(b[j]) for j in range(3)))


def k_bar(sigma) -> float:
    s = as_params(sigma).require_core().sigma
    return (s - 1.0) * math.sin(math.pi * (s - 1.0)) / math.pi


def poles(sigma, n_max: int) -> list[tuple[int, int, float]]:
    """Poles (j, n, z_jn) of M for n <= n_max, sorted by position."""
    s = as_params(sigma).require_core().sigma
    out = [(j, n, s - 1.0 - j / 3.0 + n) for n in range(n_max + 1) for j in range(3)]
    return sorted(out, key=lambda t: t[2])


def analytic_factor(z, sigma):
    """Q(z) = sum_j c_j A_j Gamma(b_j - z) / Gamma(b_0 - z) for real z.

    Only the j = 1, 2 poles survive; the j = 0 term is the constant A_0.
    """
    s = as_params(sigma).require_core().sigma
    a, b = _coeffs(s)
    x = np.asarray(z, dtype=float)
    total = np.full(np.atleast_1d(x).shape, a[0])
    xx = np.atleast_1d(x)
    for j in (1, 2):
        total = total + a[j] * np.asarray(gamma(b[j] - xx)) * np.asarray(rgamma(b[0] - xx))
    return total.item() if x.ndim == 0 else total.reshape(x.shape)


def residue(sigma, j: int, n: int) -> float:
    """Residue of the analytic factor at its pole z_(j,n), j in {1, 2}."""
    s = as_params(sigma).require_core().sigma
    if j not in (1, 2):
        raise DomainError("the analytic factor has poles only for j = 1, 2")
    pref = C[j] * gamma(2.0 + j / 3.0 - s) / (math.pi * (s - j / 3.0 - 1.0))
    ratio = math.exp(math.lgamma(1.0 - j / 3.0 + n) - math.lgamma(1.0 + n))
    return -pref * ratio * math.sin(math.pi * j / 3.0)


@dataclass(frozen=True)
class MellinZero:
    family: int
    n: int
    lo: float
    hi: float
    root: float
    asymptotic: float


def _m_derivative(z: float, sigma: float, h: float = 1e-30) -> float:
    # complex step: M is real on the real axis and analytic away from its poles
    return float(np.imag(m_eval(complex(z, h), sigma)) / h)


def _asymptotic_zero(s: float, family: int, n: int) -> float:
    # the root of family 1 sits just right of the j=2 pole z_(2,n) and the
    # root of family 2 just right of the j=1 pole z_(1,n)
    jp = 2 if family == 1 else 1
    zp = s - 1.0 - jp / 3.0 + n
    c0 = gamma(2.0 - s) / (s - 1.0)
    return zp - residue(s, jp, n) / c0


def find_zeros(sigma, n_max: int, samples: int = 400) -> list[MellinZero]:
    """Real zeros of M for families 0, 1, 2 and n = 0..n_max."""
    s = as_params(sigma).require_core().sigma
    if n_max < 0:
        raise DomainError("n_max must be non-negative")
    out: list[MellinZero] = []
    for n in range(n_max + 1):
        out.append(MellinZero(0, n, float(n), float(n), float(n), float(n)))
        for family in (1, 2):
            if family == 1:
                lo, hi = s - 5.0 / 3.0 + n, s - 4.0 / 3.0 + n
            else:
                lo, hi = s - 4.0 / 3.0 + n, s - 2.0 / 3.0 + n
            root = _bracketed_root(s, lo, hi, samples)
            out.append(MellinZero(family, n, lo, hi, root, _asymptotic_zero(s, family, n)))
    return out


def _bracketed_root(s: float, lo: float, hi: float, samples: int) -> float:
    w = hi - lo
    # Chebyshev-like clustering toward both poles at the bracket ends
    t = 0.5 - 0.5 * np.cos(np.pi * (np.arange(1, samples) / samples))
    xs = lo + w * t
    q = np.asarray(analytic_factor(xs, s))
    sg = np.sign(q)
    changes = np.nonzero(sg[:-1] * sg[1:] < 0)[0]
    if len(changes) != 1:
        raise BracketError(f"expected one sign change of Q in ({lo:.6g}, {hi:.6g}), found {len(changes)}")
    a, b = xs[changes[0]], xs[changes[0] + 1]
    fa = analytic_factor(a, s)
    for _ in range(200):
        m = 0.5 * (a + b)
        fm = analytic_factor(m, s)
        if fm == 0 or b - a < 1e-15 * max(1.0, abs(m)):
            break
        if np.sign(fm) == np.sign(fa):
            a, fa = m, fm
        else:
            b = m
    x = 0.5 * (a + b)
    # Newton polish on M itself, kept inside the bracket
    for _ in range(8):
        mv = m_eval(x, s)
        d = _m_derivative(x, s)
        if d == 0:
            break
        step = mv / d
        xn = x - step
        if not lo < xn < hi:
            break
        x = xn
        if abs(step) < 1e-16 * max(1.0, abs(x)):
            break
    return float(x)


@dataclass(frozen=True)
class ContourSpec:
    """Wedge contour: two rays leaving ``vertex`` at angles +-half_angle.

    ``r_max=None`` picks the radial cut-off from the decay of V^z.  ``nodes``
    is the Gauss-Legendre order per panel.
    """

    vertex: float = -1.0
    half_angle: float = math.pi / 4.0
    r_max: float | None = None
    nodes: int = 16

    def __post_init__(self):
        if not self.vertex < 0:
            raise DomainError("the contour vertex must lie left of the zero at z = 0")
        if not 0.0 < self.half_angle < math.pi / 2.0:
            raise DomainError("half_angle must lie in (0, pi/2)")
        if self.nodes < 2:
            raise DomainError("need at least two nodes per panel")


@dataclass
class MellinStructure:
    sigma: float
    m_prime_zero: float
    k_bar: float
    poles: list
    zeros: list
    _cache: dict = field(default_factory=dict, repr=False)


def build_structure(sigma, n_max: int = 10) -> MellinStructure:
    s = as_params(sigma).require_core().sigma
    return MellinStructure(
        sigma=s,
        m_prime_zero=m_prime_zero(s),
        k_bar=k_bar(s),
        poles=poles(s, n_max),
        zeros=find_zeros(s, n_max),
    )


def lambda_at_one(M: MellinStructure) -> float:
    return 1.0 / (M.k_bar * M.m_prime_zero)


_TAIL_LOG = math.log(1e-14)


def _ray_nodes(vertex: float, alpha: float, r_max: float, w_max: float, order: int):
    """Panel nodes and weights along [0, r_max], graded toward the vertex."""
    x, w = np.polynomial.legendre.leggauss(order)
    near = 0.5 * abs(vertex) * math.sin(alpha)
    edges = [0.0]
    r = 0.0
    while r < r_max:
        width = min(w_max, max(near, 0.3 * math.sin(alpha) * r))
        r = min(r_max, r + width)
        edges.append(r)
    e = np.array(edges)
    lo, hi = e[:-1], e[1:]
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def _contour_group(logv: np.ndarray, spec: ContourSpec, M: MellinStructure, vertex: float, r_max, w_max):
    alpha = spec.half_angle
    key = (vertex, alpha, r_max, w_max, spec.nodes)
    cached = M._cache.get(key)
    if cached is None:
        r, w = _ray_nodes(vertex, alpha, r_max, w_max, spec.nodes)
        up = vertex + r * np.exp(1j * alpha)
        dn = vertex + r * np.exp(-1j * alpha)
        wu = w * np.exp(1j * alpha) / np.asarray(m_eval(up, M.sigma))
        wd = w * np.exp(-1j * alpha) / np.asarray(m_eval(dn, M.sigma))
        cached = (up, dn, wu, wd)
        if len(M._cache) > 64:
            M._cache.clear()
        M._cache[key] = cached
    up, dn, wu, wd = cached
    # traverse the lower ray inward, then the upper ray outward
    integral = np.exp(np.outer(logv, up)) @ wu - np.exp(np.outer(logv, dn)) @ wd
    return -integral / (2j * math.pi)


def g_eval(V, spec: ContourSpec | None, M: MellinStructure, return_imag: bool = False):
    """Contour inversion of 1/M at ``V`` (scalar or array, V > 0, V != 1).

    For V > 1 the wedge is mirrored to open to the left, where the integrand
    decays and has no singularities, so the result is a numerical zero.
    """
    spec = spec or ContourSpec()
    v = np.atleast_1d(np.asarray(V, dtype=float))
    if np.any(v <= 0) or np.any(v == 1.0):
        raise DomainError("g_eval needs V > 0 and V != 1")
    out = np.zeros(v.shape, dtype=complex)
    logv = np.log(v)
    below = v < 1.0
    if np.any(below):
        lv = logv[below]
        res = np.empty(lv.shape, dtype=complex)
        mag = -lv
        bins = np.floor(np.log2(mag)).astype(int)
        for bval in np.unique(bins):
            sel = bins == bval
            lo_mag = 2.0**bval
            vertex = max(spec.vertex, -1.0 / lo_mag)
            cosa = math.cos(spec.half_angle)
            need = (-_TAIL_LOG + abs(vertex) * 2.0 * lo_mag) / (cosa * lo_mag)
            if spec.r_max is None:
                r_max = max(50.0, need)
            else:
                r_max = spec.r_max
                tail = math.exp(-(r_max * cosa - abs(vertex)) * lo_mag)
                if r_max < need and tail > 1e-10:
                    raise TailError(f"r_max={r_max:g} leaves a tail of {tail:.2e} at V={math.exp(-lo_mag):.6g}", need)
            # resolve the oscillation of V^z along the rays
            w_max = min(8.0, 2.0 / (math.sin(spec.half_angle) * 2.0 ** (bval + 1)))
            res[sel] = _contour_group(lv[sel], spec, M, vertex, float(np.ceil(r_max)), w_max)
        out[below] = res
    above = ~below
    if np.any(above):
        out[above] = _mirrored(logv[above], spec, M)
    real = out.real
    if return_imag:
        return (real.item() if np.ndim(V) == 0 else real), float(np.max(np.abs(out.imag)))
    return real.item() if np.ndim(V) == 0 else real


def _mirrored(logv: np.ndarray, spec: ContourSpec, M: MellinStructure):
    alpha = math.pi - spec.half_angle
    res = np.empty(logv.shape, dtype=complex)
    for i, lv in enumerate(logv):
        r_max = max(50.0, (-_TAIL_LOG) / (math.cos(spec.half_angle) * lv))
        w_max = min(8.0, 2.0 / (math.sin(spec.half_angle) * lv))
        r, w = _ray_nodes(spec.vertex, alpha, r_max, w_max, spec.nodes)
        up = spec.vertex + r * np.exp(1j * alpha)
        dn = spec.vertex + r * np.exp(-1j * alpha)
        iu = np.exp(lv * up) * np.exp(1j * alpha) / np.asarray(m_eval(up, M.sigma))
        idn = np.exp(lv * dn) * np.exp(-1j * alpha) / np.asarray(m_eval(dn, M.sigma))
        res[i] = -(iu @ w - idn @ w) / (2j * math.pi)
    return res


def g_residue_series(V, M: MellinStructure, n_terms: int = 60):
    """Sum of residues of V^z/M(z) at the real zeros (converges for 0 < V < 1).

    An independent route to the contour integral, fast for small V.
    """
    v = np.atleast_1d(np.asarray(V, dtype=float))
    if np.any((v <= 0) | (v >= 1)):
        raise DomainError("the residue expansion needs 0 < V < 1")
    key = ("residues", n_terms)
    cached = M._cache.get(key)
    if cached is None:
        zs = find_zeros(M.sigma, n_terms)
        roots = np.array([z.root for z in zs])
        deriv = np.array([_m_derivative(r, M.sigma) if r != 0 else M.m_prime_zero for r in roots])
        cached = (roots, deriv)
        M._cache[key] = cached
    roots, deriv = cached
    out = np.exp(np.outer(np.log(v), roots)) @ (1.0 / deriv)
    return out.item() if np.ndim(V) == 0 else out

"""The twelve end-to-end acceptance checks, shared by ``smolkin validate`` and the test suite.

Each check returns a :class:`CheckResult`.  Thresholds are the stated ones;
nothing here is tuned to make a check pass.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np

from . import kernel as K
from . import lambda_series as ls
from . import mellin as ml
from . import resolvent as R
from . import simulator as S
from .specfun import QuadratureSpec, integrate_singular, phi

SIGMA_GRID = (1.70, 1.75, 1.80, 1.85, 1.90, 1.95)


@dataclass
class CheckResult:
    number: int
    title: str
    passed: bool
    details: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        info = ", ".join(f"{k}={_fmt(v)}" for k, v in self.details.items())
        return f"[{flag}] {self.number:2d} {self.title} ({self.seconds:.1f} s): {info}"


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.3g}"
    return str(v)


# ------------------------------------------------------------------ 1 - 8


def check_phi_identity() -> CheckResult:
    closed = 0.0
    quad = 0.0
    for s in SIGMA_GRID:
        closed = max(closed, abs((s - 1.0) * phi(s - 1.0, s - 2.0) - 1.0))

        def f(x, s=s):
            return x ** (-s) * np.expm1((s - 2.0) * np.log1p(-x))

        spec = QuadratureSpec(abs_tol=1e-14, rel_tol=1e-11, left_exponent=s - 1.0, right_exponent=2.0 - s)
        quad = max(quad, abs((s - 1.0) * integrate_singular(f, 0.0, 1.0, spec).value - 1.0))
    return CheckResult(1, "Phi identity", closed < 1e-10 and quad < 1e-6,
                       {"closed_form_err": closed, "quadrature_err": quad})


@lru_cache(maxsize=None)
def _series(sigma: float, K_: int = 200) -> ls.LambdaSeries:
    return ls.build(sigma, K_)


@lru_cache(maxsize=None)
def _structure(sigma: float, n_max: int) -> ml.MellinStructure:
    return ml.build_structure(sigma, n_max)


def check_series_bounds() -> CheckResult:
    grid = np.geomspace(1e-4, 0.99, 200)
    worst_ratio = 0.0
    min_val = math.inf
    asym = {}
    contour_points = {}
    for s in SIGMA_GRID:
        lam, use = ls.eval_profile(_series(s), grid)
        contour_points[s] = int((~use).sum())
        min_val = min(min_val, float(lam.min()))
        worst_ratio = max(worst_ratio, float(np.max(lam / grid ** (s - 2.0))))
        xi = 1e-4
        asym[s] = abs(ls.eval_lambda(_series(s), xi) * xi ** (2.0 - s) - 1.0)
    bounds_ok = min_val > 0 and worst_ratio <= 1.0
    asym_ok = max(asym.values()) < 1e-2
    return CheckResult(2, "Series bounds", bounds_ok and asym_ok,
                       {"min_lambda": min_val, "max_lambda_over_bound": worst_ratio,
                        "asymptotic_err_max": max(asym.values()),
                        "asymptotic_err_by_sigma": {k: round(v, 4) for k, v in asym.items()},
                        "contour_points_by_sigma": contour_points})


def check_residual() -> CheckResult:
    s = 1.8
    ser = _series(s)
    worst = 0.0
    for xi in np.linspace(0.05, 0.9, 12):
        worst = max(worst, abs(ls.residual(ser, float(xi))) / xi ** (s - 2.0))
    return CheckResult(3, "Residual of the nonlocal equation", worst <= 1e-4, {"max_scaled_residual": worst})


def check_two_routes() -> CheckResult:
    s = 1.8
    ser = _series(s)
    st = _structure(s, 10)
    xi = np.linspace(0.05, 0.9, 18)
    series_vals = ls._series_sum(ser, xi)
    contour_vals = np.asarray(ml.g_eval(1.0 - xi, None, st)) / st.k_bar
    gap = float(np.max(np.abs(series_vals / contour_vals - 1.0)))
    edge = ml.lambda_at_one(st)
    near = float(ls.eval_lambda(ser, 0.98))
    edge_gap = abs(near - edge) / edge
    # how close to the edge one must go before the 2% band is reached
    closer = {f"1-{d:g}": abs(float(ls.eval_lambda(ser, 1.0 - d)) / edge - 1.0) for d in (1e-3, 1e-4, 1e-6)}
    return CheckResult(4, "Two-route agreement", gap < 1e-3 and edge_gap < 2e-2,
                       {"max_rel_gap": gap, "edge_rel_gap_at_0.98": edge_gap, "lambda_at_one": edge,
                        "edge_rel_gap_closer": {k: round(v, 4) for k, v in closer.items()}})


def check_mellin_structure() -> CheckResult:
    s = 1.8
    zs = ml.find_zeros(s, 10)  # raises if a bracket has no or several sign changes
    fam = {(z.family, z.n): z for z in zs}
    resid = max(abs(ml.m_eval(fam[(j, n)].root, s)) for j in (1, 2) for n in range(11))
    inter = True
    for n in range(11):
        z2n = s - 1.0 - 2.0 / 3.0 + n
        z1n = s - 1.0 - 1.0 / 3.0 + n
        z2n1 = z2n + 1.0
        inter &= z2n < fam[(1, n)].root < z1n < fam[(2, n)].root < z2n1
    asym = max(abs(fam[(j, 10)].root - fam[(j, 10)].asymptotic) / (fam[(j, 10)].hi - fam[(j, 10)].lo)
               for j in (1, 2))
    return CheckResult(5, "Mellin structure", resid < 1e-10 and inter and asym < 0.1,
                       {"max_abs_M_at_roots": float(abs(resid)), "interlacing": bool(inter),
                        "asymptotic_rel_to_bracket": asym})


def check_q_and_cstar() -> CheckResult:
    s = 1.8
    w = np.geomspace(1e-3, 1e3, 61)
    q = K.q_weight(w, s)
    positive = bool(np.all(q > 0))
    small = w <= 1.0
    bd_small = bool(np.all(q[small] <= w[small] ** (s - 2.0) / (s - 1.0)))
    eps = 0.1
    large = w >= 1.0
    prod = q[large] * w[large] ** (3.0 - s - eps)
    calib = w[large] <= 30.0
    c_bar = float(prod[calib].max())
    bd_large = bool(np.all(prod <= c_bar))
    _, q_fine = K.c_star(s, 1e-10)
    _, q_coarse = K.c_star(s, 1e-8)
    identity = abs(ml.k_bar(s) * q_fine - 1.0)
    resolution = abs(q_fine - q_coarse)
    ok = positive and bd_small and bd_large and identity < 1e-8 and resolution < 1e-6
    return CheckResult(6, "Q and C*", ok,
                       {"Q_positive": positive, "bound_w_le_1": bd_small, "bound_w_ge_1": bd_large,
                        "fitted_C": c_bar, "closed_form_x_integral_err": identity,
                        "two_resolution_gap": resolution})


def check_bvp() -> CheckResult:
    s = 1.8
    ctx = K.make_context(s)
    spec = R.GeneratorSpec.power(s)
    Vs = np.linspace(0.1, 0.9, 9)
    p1 = K.BVProblem(1.0, g=lambda x: np.ones_like(np.asarray(x, dtype=float)))
    u1 = K.bvp_solve(p1, ctx, Vs)
    r1 = np.abs(-np.asarray(R.apply_generator(u1, Vs, spec)) - 1.0).max()
    psi = _bump_psi
    p2 = K.BVProblem(1.0, psi=psi, psi_limit=0.0)
    u2 = K.bvp_solve(p2, ctx, Vs)
    r2 = np.abs(np.asarray(R.apply_generator(u2, Vs, spec))).max()
    nonneg = bool(np.all(u2.values >= 0))
    return CheckResult(7, "BVP solver", r1 < 1e-3 and r2 < 1e-3 and nonneg,
                       {"residual_source": float(r1), "residual_boundary": float(r2), "u_nonnegative": nonneg})


def _bump_psi(x):
    x = np.asarray(x, dtype=float)
    return 1.0 / (1.0 + (x - 1.0) ** 2)


def random_smooth(rng: np.random.Generator, n_bumps: int = 4, cap: float = 10.0) -> Callable:
    centers = rng.uniform(0.0, cap, n_bumps)
    widths = rng.uniform(0.05, 2.0, n_bumps)
    amps = rng.normal(0.0, 1.0, n_bumps)
    offset = rng.normal()

    def g(x):
        x = np.minimum(np.asarray(x, dtype=float), cap)
        return offset + np.sum(amps[:, None] * np.exp(-((x[None, :] - centers[:, None]) / widths[:, None]) ** 2), axis=0)

    return g


def check_resolvent() -> CheckResult:
    s = 1.8
    nodes = R.geometric_nodes(1e-4, 10.0, 400)
    reg = R.GeneratorSpec.regularized(s, 1e-3)
    A = R.generator_matrix(nodes, reg)
    c = 0.7321
    const = R.GridFunction(nodes, np.full(len(nodes), c), c)
    phic = R.resolvent_solve(const, 1.0, reg, A)
    const_exact = bool(np.all(phic.values == c))
    rng = np.random.default_rng(20240601)
    markov = True
    beyond = True
    for _ in range(20):
        g = R.GridFunction.from_function(random_smooth(rng), nodes)
        ph = R.resolvent_solve(g, float(rng.uniform(0.1, 5.0)), reg, A)
        markov &= ph.values.max() <= g.values.max() and ph.values.min() >= g.values.min()
        markov &= np.abs(ph.values).max() <= np.abs(g.values).max()
        beyond &= bool(np.all(ph(np.array([10.0, 12.0, 1e3])) == g.tail_value))
    # consistency with the kernel representation, pure power density
    ctx = K.make_context(s)
    spec = R.GeneratorSpec.power(s)
    lam = 1.0

    def g_f(x):
        return np.exp(-((np.asarray(x, dtype=float) - 0.5) ** 2) / 0.02)

    fine = R.geometric_nodes(1e-4, 10.0, 800)
    g = R.GridFunction.from_function(g_f, fine)
    ph = R.resolvent_solve(g, lam, spec)
    Vt = np.linspace(0.1, 0.9, 9)
    u1 = K.green_apply(Vt, lambda v: (g_f(v) - ph(v)) / lam, 1.0, ctx, 0.0, 1e-9)
    u2 = K.green_apply(Vt, lambda x, gap: K.exit_source(x, ph, 1.0, s, ph.tail_value, gap),
                       1.0, ctx, s - 1.0, 1e-9, pass_gap=True)
    route = float(np.abs(u1 + u2 - ph(Vt)).max())
    ok = const_exact and markov and beyond and route < 1e-3
    return CheckResult(8, "Resolvent and Markov properties", bool(ok),
                       {"constants_exact": const_exact, "markov_20_random": bool(markov),
                        "constant_beyond_cap": bool(beyond), "route_sup_err": route})


# ----------------------------------------------------------------- 9 - 12

DUALITY_LAW = dict(sigma=2.5, v_min=5.0)
DUALITY_CAP = 1e3
DUALITY_FUNCS = {
    "linear": lambda x: x,
    "square": lambda x: x * x,
    "sine": lambda x: np.sin(0.5 * np.pi * x),
    "cubic": lambda x: 1.0 - (1.0 - x) ** 3,
    "saturating": lambda x: 1.0 - np.exp(-8.0 * x),
}


def check_duality(N: int = 200_000, t: float = 10.0, seed: int = 4242) -> CheckResult:
    law = S.truncated_power(DUALITY_LAW["sigma"], DUALITY_LAW["v_min"])
    M = DUALITY_CAP
    ens = S.ensemble(N, 0.0, [t], law, seed, stop_above=M)
    spec = R.GeneratorSpec.from_law(law)
    # cells shorter than v_min: no jump ends inside the first cell
    nodes = np.linspace(0.0, M, int(M / (0.25 * law.v_min)) + 1)
    worst_z = 0.0
    worst_rel = 0.0
    rows = {}
    for name, f in DUALITY_FUNCS.items():
        phi0 = R.GridFunction.from_function(lambda v, f=f: f(np.minimum(v, M) / M), nodes)
        ode = R.adjoint_evolve(phi0, [t], spec)[0].values[0]
        x = f(np.minimum(ens.volumes[:, 0], M) / M)
        mc = float(x.mean())
        se = float(x.std(ddof=1) / math.sqrt(x.size))
        z = abs(mc - ode) / se
        rel = abs(mc - ode) / abs(ode)
        rows[name] = (round(mc, 6), round(float(ode), 6), round(float(z), 2))
        worst_z = max(worst_z, z)
        worst_rel = max(worst_rel, rel)
    return CheckResult(9, "Duality", worst_z <= 3.0 and worst_rel <= 0.01,
                       {"max_z": worst_z, "max_rel": worst_rel, "mc_ode_z": rows})


SCALING_CHECKPOINTS = (1e2, 2.5e2, 1e3, 2.5e3, 4e3, 1e4)
HYBRID = dict(small_jump_fraction=0.01, drift_step=0.02)


@lru_cache(maxsize=None)
def shared_ensemble(sigma: float, variant: str, N: int, seed: int,
                    checkpoints: tuple = SCALING_CHECKPOINTS) -> S.TrajectoryEnsemble:
    law = S.shifted_power(sigma) if variant == "shifted" else S.truncated_power(sigma, 1.0)
    return S.ensemble(N, 0.0, list(checkpoints), law, seed, **HYBRID)


def _subset(ens: S.TrajectoryEnsemble, times) -> S.TrajectoryEnsemble:
    idx = [int(np.flatnonzero(np.isclose(ens.checkpoints, t))[0]) for t in times]
    return S.TrajectoryEnsemble(ens.master_seed, ens.law, ens.V0, ens.checkpoints[idx], ens.volumes[:, idx],
                                ens.small_jump_fraction, ens.drift_step)


def check_scaling(N: int = 100_000) -> CheckResult:
    core = _subset(shared_ensemble(1.9, "shifted", N, 1901), (1e2, 1e3, 1e4))
    slope, err = S.scaling_exponent(core)
    mu = 1.0 / (1.9 - 5.0 / 3.0)
    heur = shared_ensemble(2.5, "shifted", N, 2501, (1e2, 1e3, 1e4))
    slope2, err2 = S.scaling_exponent(heur)
    ok = abs(slope / mu - 1.0) < 0.1 and abs(slope2 / 3.0 - 1.0) < 0.1
    return CheckResult(10, "Scaling law", ok,
                       {"slope_1.9": slope, "stderr_1.9": err, "mu": mu, "slope_2.5": slope2, "stderr_2.5": err2})


def check_stabilization(N: int = 100_000) -> CheckResult:
    a = shared_ensemble(1.9, "shifted", N, 1901)
    b = shared_ensemble(1.9, "truncated", N, 1902)
    pairs = {}
    for t1, t2 in ((1e3, 4e3), (2.5e3, 1e4)):
        pairs[f"{t1:g}->{t2:g}"] = S.ks_distance(S.profile(a, t1), S.profile(a, t2))
    cross = S.ks_distance(S.profile(a, 1e4), S.profile(b, 1e4))
    masses = [S.profile(e, t) for e in (a, b) for t in e.checkpoints]
    mass_exact = all(p.counts.sum() == p.samples.size == e.N for p, e in zip(masses, [a] * 6 + [b] * 6))
    ok = max(pairs.values()) < 0.05 and cross < 0.08 and mass_exact
    return CheckResult(11, "Self-similar stabilization", ok,
                       {"ks_t_4t": {k: round(v, 4) for k, v in pairs.items()}, "ks_cross_law": cross,
                        "mass_exact": mass_exact})


def check_moments(N: int = 100_000) -> CheckResult:
    a = shared_ensemble(1.9, "shifted", N, 1901)
    rep = S.moments(a, 0.1, 0.5, burn_in=1)
    ok = rep.bounded and rep.no_drift
    return CheckResult(12, "Moment invariant region", ok,
                       {"bounded": rep.bounded, "drift_sigmas": tuple(round(d, 2) for d in rep.drift_sigmas),
                        "bound": tuple(round(float(x), 5) for x in rep.bound)})


CHECKS: dict[int, Callable[[], CheckResult]] = {
    1: check_phi_identity,
    2: check_series_bounds,
    3: check_residual,
    4: check_two_routes,
    5: check_mellin_structure,
    6: check_q_and_cstar,
    7: check_bvp,
    8: check_resolvent,
    9: check_duality,
    10: check_scaling,
    11: check_stabilization,
    12: check_moments,
}

SUITES = {
    "identities": (1, 5, 6),
    "analysis": (1, 2, 3, 4, 5, 6, 7, 8),
    "monte-carlo": (9, 10, 11, 12),
    "all": tuple(range(1, 13)),
}


def run(number: int) -> CheckResult:
    t0 = time.perf_counter()
    res = CHECKS[number]()
    res.seconds = time.perf_counter() - t0
    return res

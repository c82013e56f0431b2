"""Monte Carlo for the tagged particle: V jumps by v at rate G(v)(V^(1/3)+v^(1/3))^2.

The engine advances many trajectories in lockstep.  Each trajectory draws
from its own counter-based stream (see :mod:`smolkin.rng`), so results do
not depend on how trajectories are batched.

With ``small_jump_fraction = 0`` the simulation is exact: exponential
holding times at the current total rate, then one jump.  For long runs the
number of jumps explodes (it grows like t^(1 + 2 mu / 3)), almost all of
them tiny compared with V.  A positive fraction eps switches to a hybrid
scheme once eps V exceeds the scale of the law: jumps larger than c = eps V
stay exact, while the many jumps below c are replaced by a Gamma increment
with the same mean and variance over the time step, and the step is kept
short enough that V changes by at most ``drift_step`` relatively.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import special as sps
from scipy import stats

from . import rng
from .errors import DomainError, EventCapError
from .laws import ScattererLaw, shifted_power, tabulated, truncated_power

__all__ = [
    "ScattererLaw",
    "shifted_power",
    "truncated_power",
    "tabulated",
    "FrozenClock",
    "Trajectory",
    "TrajectoryEnsemble",
    "EmpiricalProfile",
    "MomentReport",
    "total_rate",
    "sample_jump",
    "simulate",
    "ensemble",
    "scaling_exponent",
    "profile",
    "ks_distance",
    "moments",
]

C = (1.0, 2.0, 1.0)


@dataclass(frozen=True)
class FrozenClock:
    """Degenerate dynamics for checks: constant rate, jumps of size zero."""

    rate: float

    def __post_init__(self):
        if not self.rate > 0:
            raise DomainError("rate must be positive")


# ------------------------------------------------------------------ rates


def _check_law(law):
    if isinstance(law, FrozenClock):
        return
    if not isinstance(law, ScattererLaw):
        raise DomainError("law must be a ScattererLaw or FrozenClock")


def total_rate(V, law: ScattererLaw):
    """R(V) = V^(2/3) I_0 + 2 V^(1/3) I_1 + I_2 with I_j the j/3-moments of G."""
    _check_law(law)
    V = np.asarray(V, dtype=float)
    if np.any(V < 0):
        raise DomainError("V must be non-negative")
    if isinstance(law, FrozenClock):
        return np.full(V.shape, law.rate) if V.ndim else law.rate
    cb = np.cbrt(V)
    out = sum(C[j] * cb ** (2 - j) * law.moment(j / 3.0) for j in range(3))
    return out


class _MomentTable:
    """Partial moments for c >= c_min, tabulated on a uniform grid in log c.

    Rows 0-2 hold log upper(j/3, c); rows 3-5 and 6-8 hold log lower(1+j/3, c)
    and log lower(2+j/3, c).  Lookups are a single gather plus a linear blend.
    """

    def __init__(self, law: ScattererLaw, c_min: float, c_max: float = 1e60, n: int = 12000):
        self.law = law
        self.closed = law.variant == "truncated_power"
        if self.closed:
            return
        self.l0 = math.log(c_min)
        self.dl = (math.log(c_max) - self.l0) / (n - 1)
        c = np.exp(self.l0 + self.dl * np.arange(n))
        rows = [law.upper_moment(j / 3.0, c) for j in range(3)]
        rows += [law.lower_moment(m + j / 3.0, c) for m in (1, 2) for j in range(3)]
        self.table = np.log(np.array(rows))
        self.n = n

    def lookup(self, c):
        """Array of shape (9, len(c)) with the moments listed above."""
        if self.closed:
            law = self.law
            rows = [law.upper_moment(j / 3.0, c) for j in range(3)]
            rows += [law.lower_moment(m + j / 3.0, c) for m in (1, 2) for j in range(3)]
            return np.array(rows)
        x = (np.log(c) - self.l0) / self.dl
        i = np.clip(x.astype(np.int64), 0, self.n - 2)
        f = x - i
        return np.exp(self.table[:, i] * (1.0 - f) + self.table[:, i + 1] * f)


# --------------------------------------------------------------- sampling


def sample_jump(V, law: ScattererLaw, stream: tuple[int, int] | int = 0, size: int | None = None,
                above: float | np.ndarray = 0.0) -> np.ndarray:
    """Draw jump sizes at volume V (density proportional to G(v)(V^(1/3)+v^(1/3))^2 on v > above).

    ``stream`` is a seed (or (seed, lane)) of the counter-based generator; the
    i-th sample uses counter i.  Returns ``size`` samples (V broadcast).
    """
    _check_law(law)
    key0, key1 = stream if isinstance(stream, tuple) else (stream, 0)
    V = np.asarray(V, dtype=float)
    n = size if size is not None else max(1, V.size)
    V = np.broadcast_to(V, (n,)).astype(float)
    c = np.broadcast_to(np.asarray(above, dtype=float), (n,)).astype(float)
    if isinstance(law, FrozenClock):
        return np.zeros(n)
    counters = np.arange(n, dtype=np.uint64)
    u = rng.uniforms(np.uint64(key0), np.uint64(key1), counters, 0)
    return _sample_jumps(V, c, law, u[:, 1], u[:, 2], u[:, 3], np.uint64(key0), np.uint64(key1), counters,
                         _upper_weights(V, c, law, None))


def _upper_weights(V, c, law, up=None, I=None):
    """Rates of the three exact-jump components; ``up`` holds upper moments where c > 0."""
    cb = np.cbrt(V)
    I = I if I is not None else [law.moment(j / 3.0) for j in range(3)]
    pos = c > 0
    any_pos = bool(np.any(pos))
    cols = []
    for j in range(3):
        u = np.full(V.shape, I[j])
        if any_pos:
            u[pos] = law.upper_moment(j / 3.0, c[pos]) if up is None else up[j]
        cols.append(C[j] * cb ** (2 - j) * u)
    return np.stack(cols, axis=1)


def _sample_jumps(V, c, law, u_comp, u_prop, u_acc, key0, key1, counters, weights):
    """Component choice then conditional sampling, all from counter-based uniforms."""
    cum = np.cumsum(weights, axis=1)
    pick = u_comp * cum[:, -1]
    comp = (pick > cum[:, 0]).astype(int) + (pick > cum[:, 1]).astype(int)
    out = np.empty(V.shape)
    for j in range(3):
        sel = np.flatnonzero(comp == j)
        if sel.size == 0:
            continue
        k0 = key0[sel] if np.ndim(key0) else key0
        k1 = key1[sel] if np.ndim(key1) else key1
        ctr = counters[sel]

        def draw(attempt, idx, _k0=k0, _k1=k1, _ctr=ctr, _sel=sel):
            if attempt == 0:
                return u_prop[_sel][idx], u_acc[_sel][idx]
            kk0 = _k0[idx] if np.ndim(_k0) else _k0
            kk1 = _k1[idx] if np.ndim(_k1) else _k1
            extra = rng.uniforms(kk0, kk1, _ctr[idx], np.uint64(attempt))
            return extra[:, 0], extra[:, 1]

        out[sel] = law.sample_above(j, c[sel], draw)
    return out


# ------------------------------------------------------------ trajectories


@dataclass
class Trajectory:
    """One path: event times and volumes after each event (first entry is the start)."""

    seed: int
    times: np.ndarray
    volumes: np.ndarray
    t_end: float
    v_end: float

    def __post_init__(self):
        if len(self.times) > 1:
            if np.any(np.diff(self.times) <= 0):
                raise AssertionError("event times must increase strictly")
            if np.any(np.diff(self.volumes) < 0):
                raise AssertionError("volumes must not decrease")

    @property
    def events(self):
        return list(zip(self.times.tolist(), self.volumes.tolist()))


@dataclass
class TrajectoryEnsemble:
    """Snapshots V(t_k) of N trajectories at the checkpoint times."""

    master_seed: int
    law: object
    V0: float
    checkpoints: np.ndarray
    volumes: np.ndarray  # shape (N, len(checkpoints))
    small_jump_fraction: float
    drift_step: float
    steps: int = 0

    @property
    def N(self) -> int:
        return self.volumes.shape[0]

    @property
    def mu(self) -> float:
        return 1.0 / (self.law.sigma - 5.0 / 3.0)

    def at(self, t: float) -> np.ndarray:
        k = np.flatnonzero(np.isclose(self.checkpoints, t, rtol=1e-12, atol=0.0))
        if k.size == 0:
            raise DomainError(f"{t} is not a checkpoint")
        return self.volumes[:, k[0]]

    def checksum(self) -> str:
        import hashlib

        return hashlib.sha256(np.ascontiguousarray(self.volumes).tobytes()).hexdigest()


def _gamma_increment(mean, var, key0, counter):
    """Gamma variates with the given mean and variance (Marsaglia-Tsang).

    Every attempt draws from the trajectory's own stream (lane 2^32 + attempt),
    so the result depends only on (key, counter).
    """
    k = mean * mean / var
    theta = var / mean
    boost = k < 1.0
    a = np.where(boost, k + 1.0, k)
    d = a - 1.0 / 3.0
    cc = 1.0 / np.sqrt(9.0 * d)
    out = np.empty(mean.shape)
    pending = np.arange(mean.size)
    attempt = 0
    extra = None
    while pending.size:
        u = rng.uniforms(key0[pending], np.uint64(0), counter[pending], np.uint64(2**32 + attempt))
        if attempt == 0:
            extra = u[:, 2]
        z = sps.ndtri(u[:, 0])
        w = 1.0 + cc[pending] * z
        w3 = w * w * w
        ok = (w > 0) & (np.log(u[:, 1]) < 0.5 * z * z + d[pending] * (1.0 - w3 + np.log(np.where(w3 > 0, w3, 1.0))))
        out[pending[ok]] = d[pending[ok]] * w3[ok]
        pending = pending[~ok]
        attempt += 1
        if attempt > 1000:
            raise EventCapError("gamma sampler failed to accept", None)
    # shape < 1: multiply a Gamma(k+1) draw by U^(1/k)
    out = np.where(boost, out * extra ** (1.0 / np.where(boost, k, 1.0)), out)
    return out * theta


def _run(V0, key0, checkpoints, law, eps, kappa, max_steps, record, stop_above):
    n = key0.size
    ck = np.asarray(checkpoints, dtype=float)
    n_ck = len(ck)
    V = np.full(n, float(V0))
    t = np.zeros(n)
    steps = np.zeros(n, dtype=np.uint64)
    nxt = np.zeros(n, dtype=np.int64)
    snaps = np.zeros((n, n_ck))
    alive = np.ones(n, dtype=bool)
    # checkpoints at t = 0 are recorded immediately
    while True:
        at0 = alive & (nxt < n_ck)
        at0 &= ck[np.minimum(nxt, n_ck - 1)] <= 0.0
        if not np.any(at0):
            break
        snaps[at0, nxt[at0]] = V[at0]
        nxt[at0] += 1
    alive &= nxt < n_ck
    key1 = np.uint64(0)
    frozen = isinstance(law, FrozenClock)
    c_min = 0.0 if frozen else law.scale
    table = None
    if eps > 0 and not frozen:
        table = _MomentTable(law, c_min)
    I = None if frozen else [law.moment(j / 3.0) for j in range(3)]
    events_t = [[0.0] for _ in range(n)] if record else None
    events_v = [[float(V0)] for _ in range(n)] if record else None
    it = 0
    while np.any(alive):
        it += 1
        idx = np.flatnonzero(alive)
        Vi, ti = V[idx], t[idx]
        k0 = key0[idx]
        u = rng.uniforms(k0, key1, steps[idx], 0)
        if frozen:
            rate = np.full(idx.size, law.rate)
            c = np.zeros(idx.size)
            weights = None
            hybrid = np.zeros(idx.size, dtype=bool)
        else:
            c = eps * Vi
            c = np.where(c >= c_min, c, 0.0) if eps > 0 else np.zeros(idx.size)
            hybrid = c > 0
            mom = table.lookup(c[hybrid]) if np.any(hybrid) else None
            weights = _upper_weights(Vi, c, law, mom, I)
            rate = weights.sum(axis=1)
        tau = -np.log(u[:, 0]) / rate
        t_ck = ck[nxt[idx]]
        h = np.minimum(tau, t_ck - ti)
        if np.any(hybrid):
            hv = np.flatnonzero(hybrid)
            cb = np.cbrt(Vi[hv])
            pw = np.stack([cb * cb, 2.0 * cb, np.ones_like(cb)])
            D = np.sum(pw * mom[3:6], axis=0)
            S = np.sum(pw * mom[6:9], axis=0)
            h[hv] = np.minimum(h[hv], kappa * Vi[hv] / D)
            Vi = Vi.copy()
            Vi[hv] += _gamma_increment(D * h[hv], S * h[hv], k0[hv], steps[idx][hv])
        jump = tau <= h
        reach = (~jump) & (t_ck - ti <= h)
        new_t = np.where(reach, t_ck, ti + h)
        if np.any(jump):
            jv = np.flatnonzero(jump)
            if frozen:
                dv = np.zeros(jv.size)
            else:
                dv = _sample_jumps(Vi[jv], c[jv], law, u[jv, 1], u[jv, 2], u[jv, 3], k0[jv], key1,
                                   steps[idx][jv], weights[jv])
            Vi[jv] = Vi[jv] + dv
        V[idx] = Vi
        t[idx] = new_t
        steps[idx] += np.uint64(1)
        if record:
            for pos in np.flatnonzero(jump | (hybrid & ~reach)):
                g = idx[pos]
                events_t[g].append(float(new_t[pos]))
                events_v[g].append(float(Vi[pos]))
        if np.any(reach):
            rv = idx[reach]
            snaps[rv, nxt[rv]] = V[rv]
            nxt[rv] += 1
            done = rv[nxt[rv] >= n_ck]
            alive[done] = False
        if stop_above is not None:
            over = idx[V[idx] >= stop_above]
            over = over[alive[over]]
            for g in over:
                snaps[g, nxt[g]:] = V[g]
            alive[over] = False
        if max_steps is not None and np.any(steps[idx] > max_steps):
            partial = (t.copy(), V.copy(), snaps.copy())
            raise EventCapError(f"event cap of {max_steps} steps exceeded", partial)
    return snaps, it, events_t, events_v, t, V


def simulate(V0: float, t_end: float, law, seed: int, small_jump_fraction: float = 0.0,
             drift_step: float = 0.02, max_events: int | None = 10_000_000) -> Trajectory:
    """One trajectory up to ``t_end`` (exact unless ``small_jump_fraction`` > 0)."""
    _check_law(law)
    if V0 < 0 or t_end < 0:
        raise DomainError("V0 and t_end must be non-negative")
    key0 = np.array([seed], dtype=np.uint64)
    snaps, _, et, ev, _, _ = _run(V0, key0, [t_end], law, small_jump_fraction, drift_step, max_events, True, None)
    return Trajectory(int(seed), np.array(et[0]), np.array(ev[0]), float(t_end), float(snaps[0, 0]))


def ensemble(N: int, V0: float, t_checkpoints: Sequence[float], law, master_seed: int,
             small_jump_fraction: float = 0.0, drift_step: float = 0.02, block: int = 50_000,
             max_steps: int | None = 50_000_000, stop_above: float | None = None) -> TrajectoryEnsemble:
    """N independent trajectories; trajectory i uses the stream derive_seed(master_seed, i).

    ``stop_above`` freezes a trajectory once V reaches it (useful when only
    functions constant beyond that level are evaluated).
    """
    _check_law(law)
    if N < 1:
        raise DomainError("N must be >= 1")
    ck = np.asarray(t_checkpoints, dtype=float)
    if ck.ndim != 1 or ck.size == 0 or np.any(np.diff(ck) <= 0) or ck[0] < 0:
        raise DomainError("checkpoints must be a non-empty increasing list of times >= 0")
    seeds = rng.derive_seed(master_seed, np.arange(N, dtype=np.uint64))
    out = np.empty((N, ck.size))
    total_steps = 0
    for start in range(0, N, block):
        sl = slice(start, min(N, start + block))
        snaps, it, *_ = _run(V0, seeds[sl], ck, law, small_jump_fraction, drift_step, max_steps, False, stop_above)
        out[sl] = snaps
        total_steps += it
    return TrajectoryEnsemble(int(master_seed), law, float(V0), ck, out, float(small_jump_fraction),
                              float(drift_step), total_steps)


# -------------------------------------------------------------- statistics


def scaling_exponent(ens: TrajectoryEnsemble, n_boot: int = 200, seed: int = 0) -> tuple[float, float]:
    """Least-squares slope of log median V(t) against log t, with bootstrap stderr."""
    ts = ens.checkpoints
    pos = ts > 0
    ts = ts[pos]
    vols = ens.volumes[:, pos]
    if ts.size < 3 or ts[-1] / ts[0] < 100.0:
        raise DomainError("need at least 3 positive checkpoints spanning two decades")
    med = np.median(vols, axis=0)
    if np.any(med <= 0) or np.allclose(med, med[0], rtol=1e-12, atol=0):
        raise DomainError("degenerate input: median volume does not grow")
    x = np.log(ts)
    y = np.log(med)
    gen = np.random.default_rng(seed)
    boot = np.empty((n_boot, ts.size))
    n = vols.shape[0]
    for b in range(n_boot):
        pick = gen.integers(0, n, n)
        boot[b] = np.log(np.median(vols[pick], axis=0))
    sd = boot.std(axis=0, ddof=1)
    sd = np.where(sd > 0, sd, sd[sd > 0].min() if np.any(sd > 0) else 1.0)
    w = 1.0 / sd**2
    xm = np.sum(w * x) / w.sum()
    slope = np.sum(w * (x - xm) * y) / np.sum(w * (x - xm) ** 2)
    stderr = math.sqrt(1.0 / np.sum(w * (x - xm) ** 2))
    return float(slope), float(stderr)


@dataclass
class EmpiricalProfile:
    """Histogram of xi = V / t^mu; the last bin is open to infinity."""

    time: float
    rescale_exponent: float
    edges: np.ndarray
    counts: np.ndarray
    samples: np.ndarray = field(repr=False)

    @property
    def N(self) -> int:
        return int(self.counts.sum())

    @property
    def weights(self) -> np.ndarray:
        return self.counts / self.counts.sum()

    @property
    def mass(self) -> float:
        return math.fsum(self.weights)

    def cdf(self, x):
        return np.searchsorted(self.samples, x, side="right") / self.samples.size


def profile(ens: TrajectoryEnsemble, t: float, mu: float | None = None, bins=None) -> EmpiricalProfile:
    """Rescaled empirical profile at checkpoint ``t``.

    ``bins`` is an edge array or a bin count (default 50) spread uniformly
    up to the 99% quantile; one open bin to infinity is appended.
    """
    mu = ens.mu if mu is None else mu
    xi = np.sort(ens.at(t) / t**mu)
    if bins is None or np.ndim(bins) == 0:
        n = 50 if bins is None else int(bins)
        if n < 1:
            raise DomainError("bins must be >= 1")
        hi = np.quantile(xi, 0.99) if xi.size else 1.0
        bins = np.linspace(0.0, max(hi, 1e-300), n + 1)
    edges = np.asarray(bins, dtype=float)
    edges = np.concatenate([edges, [np.inf]]) if np.isfinite(edges[-1]) else edges
    counts = np.histogram(xi, bins=edges)[0]
    counts[0] += int(np.sum(xi < edges[0]))
    return EmpiricalProfile(float(t), float(mu), edges, counts, xi)


def ks_distance(a: EmpiricalProfile, b: EmpiricalProfile) -> float:
    """Two-sample Kolmogorov distance between the rescaled samples."""
    return float(stats.ks_2samp(a.samples, b.samples).statistic)


@dataclass
class MomentReport:
    beta: float
    gamma: float
    taus: np.ndarray
    M_beta: np.ndarray
    m_gamma: np.ndarray
    M_beta_sd: np.ndarray
    m_gamma_sd: np.ndarray
    bound: tuple
    drift_sigmas: tuple
    burn_in: int

    @property
    def bounded(self) -> bool:
        sl = slice(self.burn_in, None)
        return bool(np.all(self.M_beta[sl] <= self.bound[0]) and np.all(self.m_gamma[sl] <= self.bound[1]))

    @property
    def no_drift(self) -> bool:
        return all(d <= 3.0 for d in self.drift_sigmas)


def moments(ens: TrajectoryEnsemble, beta: float, gamma: float, burn_in: int = 1,
            n_boot: int = 200, seed: int = 0) -> MomentReport:
    """M_beta = mean (1+xi)^beta and m_gamma = mean xi^-gamma at tau = log(1+t), xi = V/(1+t)^mu.

    The bound R is fitted on the first checkpoint after burn-in (value plus
    three bootstrap standard deviations); the drift statistic is the change
    from that checkpoint to the last one in units of its bootstrap standard
    deviation (upward only).
    """
    s = ens.law.sigma
    if not 0.0 <= beta < s - 5.0 / 3.0:
        raise DomainError("beta must lie in [0, sigma - 5/3)")
    if not gamma > 0:
        raise DomainError("gamma must be positive")
    ts = ens.checkpoints
    mu = ens.mu
    xi = ens.volumes / (1.0 + ts[None, :]) ** mu
    with np.errstate(divide="ignore"):
        fb = (1.0 + xi) ** beta
        fg = xi ** (-gamma)
    Mb = fb.mean(axis=0)
    mg = fg.mean(axis=0)
    gen = np.random.default_rng(seed)
    n = xi.shape[0]
    bM = np.empty((n_boot, ts.size))
    bm = np.empty((n_boot, ts.size))
    for b in range(n_boot):
        pick = gen.integers(0, n, n)
        bM[b] = fb[pick].mean(axis=0)
        bm[b] = fg[pick].mean(axis=0)
    # trajectories still at V = 0 make m_gamma infinite; keep that visible as inf/nan
    with np.errstate(invalid="ignore"):
        sdM = bM.std(axis=0, ddof=1)
        sdm = bm.std(axis=0, ddof=1)
    k0 = min(burn_in, ts.size - 1)
    R = (Mb[k0] + 3 * sdM[k0], mg[k0] + 3 * sdm[k0])

    def drift(series, boots):
        d = series[-1] - series[k0]
        with np.errstate(invalid="ignore"):
            sd = np.std(boots[:, -1] - boots[:, k0], ddof=1)
        return float(d / sd) if sd > 0 else (0.0 if d <= 0 else math.inf)

    return MomentReport(beta, gamma, np.log1p(ts), Mb, mg, sdM, sdm, R, (drift(Mb, bM), drift(mg, bm)), k0)

"""Command-line front end: ``smolkin <command> [--key value ...] [--config FILE]``.

Every command takes a flat set of typed parameters.  They can come from a
``key = value`` file (``#`` comments, comma-separated lists) or from a
``manifest.json`` written by an earlier run; flags override file entries.
Each run writes CSV tables and a ``manifest.json`` into ``--out``.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import platform
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import __version__
from .errors import ConfigError, DomainError, EventCapError, NumericError, SmolkinError

THREADS_ENV = "SMOLKIN_THREADS"
EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_ACCEPTANCE = 0, 2, 3, 4


# ------------------------------------------------------------------ schema


@dataclass(frozen=True)
class Param:
    kind: str  # real, int, string, bool, reals
    default: Any = None
    help: str = ""
    check: Callable[[Any], str | None] | None = None
    choices: tuple = ()


def _positive(x):
    return None if x > 0 else "must be positive"


def _core_sigma(x):
    return None if 5.0 / 3.0 < x < 2.0 else "must lie in (5/3, 2)"


def _moment_sigma(x):
    return None if x > 5.0 / 3.0 else "must exceed 5/3 (no finite-moment dynamics at or below it)"


def _increasing(xs):
    if len(xs) == 0:
        return "must be non-empty"
    if any(b <= a for a, b in zip(xs, xs[1:])):
        return "must be strictly increasing"
    return None


def _law_spec(s):
    if s == "shifted":
        return None
    if s.startswith("truncated:"):
        try:
            v = float(s.split(":", 1)[1])
        except ValueError:
            return "truncated law needs a number after ':'"
        return None if v > 0 else "v_min must be positive"
    return "must be 'shifted' or 'truncated:<vmin>'"


PHI0_SHAPES: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "linear": lambda x: x,
    "square": lambda x: x * x,
    "sine": lambda x: np.sin(0.5 * np.pi * x),
    "cubic": lambda x: 1.0 - (1.0 - x) ** 3,
    "saturating": lambda x: 1.0 - np.exp(-8.0 * x),
}

SCHEMAS: dict[str, dict[str, Param]] = {
    "profile": {
        "sigma": Param("real", 1.8, "exponent of the scatterer law", _core_sigma),
        "order": Param("int", 200, "series truncation order K", lambda k: None if k >= 0 else "must be >= 0"),
        "grid": Param("reals", [0.05, 0.1, 0.2, 0.3, 0.5, 0.7, 0.9, 0.95, 0.99], "xi values in (0,1)",
                      lambda xs: None if xs and all(0 < x < 1 for x in xs) else "values must lie in (0, 1)"),
        "tol": Param("real", 1e-3, "relative tolerance for the series tail", _positive),
        "emit_coeffs": Param("string", "", "also write the coefficient table to this file name"),
    },
    "mellin": {
        "sigma": Param("real", 1.8, "exponent of the scatterer law", _core_sigma),
        "zeros": Param("int", 10, "largest n of the zero list", lambda k: None if k >= 0 else "must be >= 0"),
        "gfun": Param("bool", False, "also tabulate the contour function on --grid"),
        "grid": Param("reals", [0.01, 0.1, 0.5, 0.9, 1.5, 3.0], "V values for --gfun",
                      lambda xs: None if xs and all(x > 0 for x in xs) else "values must be positive"),
        "out_name": Param("string", "zeros.csv", "file name of the zero table"),
    },
    "kernel": {
        "sigma": Param("real", 1.8, "exponent of the scatterer law", _core_sigma),
        "green": Param("real", 0.0, "V0 of the fundamental solution; 0 skips it",
                       lambda x: None if x >= 0 else "must be >= 0"),
        "grid": Param("reals", [0.1, 0.3, 0.5, 0.7, 0.9], "V values",
                      lambda xs: None if xs and all(x > 0 for x in xs) else "values must be positive"),
        "bvp": Param("string", "", "key = value file with v_bar, source, boundary"),
        "tol": Param("real", 1e-9, "quadrature tolerance", _positive),
    },
    "resolvent": {
        "sigma": Param("real", 1.8, "exponent of the scatterer law", _core_sigma),
        "lambda": Param("real", 1.0, "resolvent parameter", _positive),
        "g": Param("string", "gaussian", "gaussian, constant, bumps, or a key = value file"),
        "epsilon": Param("real", 0.0, "regularization; 0 uses the pure power density",
                         lambda x: None if x >= 0 else "must be >= 0"),
        "nodes": Param("int", 400, "number of grid nodes", lambda k: None if k >= 8 else "must be >= 8"),
        "cap": Param("real", 10.0, "grid cap M", _positive),
        "lo": Param("real", 1e-4, "smallest positive node", _positive),
    },
    "adjoint": {
        "sigma": Param("real", 2.5, "exponent of the scatterer law", _moment_sigma),
        "law": Param("string", "truncated:5", "shifted or truncated:<vmin>", _law_spec),
        "t": Param("reals", [1.0, 10.0], "output times", _increasing),
        "phi0": Param("string", "linear", "initial observable f(min(V,M)/M)", choices=tuple(PHI0_SHAPES)),
        "cap": Param("real", 1000.0, "cap M", _positive),
        "nodes": Param("int", 801, "uniform nodes on [0, M]", lambda k: None if k >= 3 else "must be >= 3"),
    },
    "simulate": {
        "sigma": Param("real", 1.9, "exponent of the scatterer law", _moment_sigma),
        "law": Param("string", "shifted", "shifted or truncated:<vmin>", _law_spec),
        "n": Param("int", 10000, "number of trajectories", lambda k: None if k >= 1 else "must be >= 1"),
        "t_checkpoints": Param("reals", [1e2, 1e3, 1e4], "checkpoint times",
                               lambda xs: _increasing(xs) or (None if xs[0] > 0 else "must be positive")),
        "seed": Param("int", 1, "master seed", lambda k: None if k >= 0 else "must be >= 0"),
        "v0": Param("real", 0.0, "initial volume", lambda x: None if x >= 0 else "must be >= 0"),
        "small_jump_fraction": Param("real", 0.01, "hybrid threshold as a fraction of V; 0 is exact",
                                     lambda x: None if 0 <= x < 1 else "must lie in [0, 1)"),
        "drift_step": Param("real", 0.02, "bound on the drift step relative to V", _positive),
        "beta": Param("real", 0.1, "upper moment exponent", lambda x: None if x >= 0 else "must be >= 0"),
        "gamma": Param("real", 0.5, "lower moment exponent", _positive),
        "bins": Param("int", 60, "profile bins", lambda k: None if k >= 2 else "must be >= 2"),
        "sample": Param("int", 20, "trajectories written to trajectories.csv",
                        lambda k: None if k >= 0 else "must be >= 0"),
    },
    "validate": {
        "suite": Param("string", "all", "which criteria to run", choices=("identities", "analysis", "monte-carlo", "all")),
        "criteria": Param("reals", [], "explicit criterion numbers (overrides suite)",
                          lambda xs: None if all(float(x).is_integer() and 1 <= x <= 12 for x in xs)
                          else "must be integers in 1..12"),
    },
}

COMMON = {"out", "config", "threads", "format"}


@dataclass
class RunConfig:
    command: str
    parameters: dict
    output_dir: Path
    format: str = "csv"
    threads: int = 1
    sources: dict = field(default_factory=dict)


# ------------------------------------------------------------------ parsing


def _coerce(key: str, kind: str, raw: Any, line: int | None = None) -> Any:
    try:
        if kind == "real":
            v = float(raw)
            if not math.isfinite(v):
                raise ValueError
            return v
        if kind == "int":
            if isinstance(raw, float) and raw.is_integer():
                return int(raw)
            return int(str(raw).strip())
        if kind == "bool":
            if isinstance(raw, bool):
                return raw
            t = str(raw).strip().lower()
            if t in ("1", "true", "yes", "on"):
                return True
            if t in ("0", "false", "no", "off"):
                return False
            raise ValueError
        if kind == "reals":
            if isinstance(raw, (list, tuple)):
                items = list(raw)
            else:
                items = [p for p in str(raw).split(",") if p.strip()]
            vals = [float(p) for p in items]
            if not all(math.isfinite(v) for v in vals):
                raise ValueError
            return vals
        return str(raw).strip()
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: expected {kind}, got {raw!r}", line) from None


def read_kv(text: str) -> dict[str, tuple[str, int]]:
    """Parse ``key = value`` lines into {key: (raw value, line number)}."""
    out: dict[str, tuple[str, int]] = {}
    for n, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"expected 'key = value', got {line.strip()!r}", n)
        key, value = (p.strip() for p in body.split("=", 1))
        if not key or not value:
            raise ConfigError("empty key or value", n)
        key = key.replace("-", "_")
        if key in out:
            raise ConfigError(f"duplicate key {key!r}", n)
        out[key] = (value, n)
    return out


def _load_file(path: str, command: str) -> dict[str, tuple[Any, int | None]]:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    if p.suffix == ".json":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc.msg}", exc.lineno) from None
        if not isinstance(doc, dict) or "parameters" not in doc:
            raise ConfigError("JSON config must be a manifest with a 'parameters' object")
        if doc.get("command", command) != command:
            raise ConfigError(f"manifest was written by '{doc['command']}', not '{command}'")
        return {k: (v, None) for k, v in doc["parameters"].items()}
    return dict(read_kv(text))


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="smolkin", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"smolkin {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, schema in SCHEMAS.items():
        sp = sub.add_parser(name, help=f"run the {name} pipeline")
        sp.add_argument("--config", help="key = value file or a previous manifest.json")
        sp.add_argument("--out", default=None, help="output directory (default smolkin-out/<command>)")
        sp.add_argument("--format", choices=("csv", "json"), default="csv")
        sp.add_argument("--threads", type=int, default=None, help=f"thread cap (default ${THREADS_ENV} or 1)")
        for key, prm in schema.items():
            flag = "--" + key.replace("_", "-")
            if prm.kind == "bool":
                sp.add_argument(flag, dest=key, action="store_const", const=True, default=None, help=prm.help)
            else:
                sp.add_argument(flag, dest=key, default=None, help=f"{prm.help} [{prm.kind}, default {prm.default}]")
    return ap


def parse_config(argv: list[str] | None = None) -> RunConfig:
    """Merge defaults, an optional file and flags into a validated RunConfig."""
    ap = build_parser()
    ns = ap.parse_args(argv)
    command = ns.command
    schema = SCHEMAS[command]
    values: dict[str, Any] = {k: p.default for k, p in schema.items()}
    sources = {k: "default" for k in schema}
    if ns.config:
        for key, (raw, line) in _load_file(ns.config, command).items():
            if key not in schema:
                raise ConfigError(f"unknown key {key!r} for '{command}'", line)
            values[key] = _coerce(key, schema[key].kind, raw, line)
            sources[key] = "file"
    for key, prm in schema.items():
        raw = getattr(ns, key)
        if raw is not None:
            values[key] = _coerce(key, prm.kind, raw)
            sources[key] = "flag"
    for key, prm in schema.items():
        v = values[key]
        if prm.choices and v not in prm.choices:
            raise ConfigError(f"{key}: must be one of {', '.join(prm.choices)}, got {v!r}")
        if prm.check is not None:
            msg = prm.check(v)
            if msg:
                raise ConfigError(f"{key}: {msg}")
    threads = ns.threads
    if threads is None:
        env = os.environ.get(THREADS_ENV)
        try:
            threads = int(env) if env else 1
        except ValueError:
            raise ConfigError(f"{THREADS_ENV} must be an integer, got {env!r}") from None
    if threads < 1:
        raise ConfigError("threads must be >= 1")
    out = Path(ns.out) if ns.out else Path("smolkin-out") / command
    return RunConfig(command, values, out, ns.format, threads, sources)


# ------------------------------------------------------------------ output


def _num(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


class Emitter:
    """Writes tables in the chosen format and records their checksums."""

    def __init__(self, cfg: RunConfig):
        self.dir = cfg.output_dir
        self.format = cfg.format
        self.files: dict[str, str] = {}
        self.dir.mkdir(parents=True, exist_ok=True)

    def _write(self, name: str, data: str) -> None:
        raw = data.encode()
        (self.dir / name).write_bytes(raw)
        self.files[name] = hashlib.sha256(raw).hexdigest()

    def table(self, name: str, header: list[str], rows) -> None:
        rows = [list(r) for r in rows]
        if self.format == "json":
            recs = [dict(zip(header, (_json_safe(v) for v in r))) for r in rows]
            self._write(Path(name).with_suffix(".json").name, json.dumps(recs, indent=1) + "\n")
            return
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_num(v) for v in r])
        self._write(name, buf.getvalue())

    def json(self, name: str, obj) -> None:
        self._write(name, json.dumps(_json_safe(obj), indent=1, sort_keys=True) + "\n")


def _json_safe(v):
    if isinstance(v, dict):
        return {str(k): _json_safe(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_json_safe(x) for x in v]
    if isinstance(v, (np.bool_, bool)):
        return bool(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        f = float(v)
        return f if math.isfinite(f) else str(f)
    if isinstance(v, np.ndarray):
        return _json_safe(v.tolist())
    return v


# ------------------------------------------------------------------ commands


def _law(p):
    from . import simulator as S

    if p["law"] == "shifted":
        return S.shifted_power(p["sigma"])
    return S.truncated_power(p["sigma"], float(p["law"].split(":", 1)[1]))


def run_profile(p, em: Emitter, info: dict) -> int:
    from . import lambda_series as ls

    ser = ls.build(p["sigma"], p["order"])
    xi = np.array(p["grid"])
    vals, use = ls.eval_profile(ser, xi, p["tol"])
    bound = ser.tail_bound(xi)
    em.table("profile.csv", ["xi", "lambda", "route", "series_error_bound"],
             zip(xi, vals, np.where(use, "series", "contour"), bound))
    if p["emit_coeffs"]:
        rows = ((m, j, ser.coeffs[m, j]) for m in range(ser.order + 1) for j in range(3))
        em.table(Path(p["emit_coeffs"]).name, ["m", "j", "a_mj"], rows)
    info["growth_rate"] = ser.growth_rate
    return EXIT_OK


def run_mellin(p, em: Emitter, info: dict) -> int:
    from . import mellin as ml

    st = ml.build_structure(p["sigma"], p["zeros"])
    em.table(Path(p["out_name"]).name, ["family", "n", "lo", "hi", "root", "asymptotic"],
             ((z.family, z.n, z.lo, z.hi, z.root, z.asymptotic) for z in st.zeros))
    if p["gfun"]:
        V = np.array(p["grid"])
        em.table("gfun.csv", ["V", "G"], zip(V, np.atleast_1d(ml.g_eval(V, None, st))))
    info.update(k_bar=st.k_bar, m_prime_zero=st.m_prime_zero, lambda_at_one=ml.lambda_at_one(st))
    return EXIT_OK


def _bvp_problem(path: str):
    from . import kernel as K

    spec = {"v_bar": ("1", None), "source": ("0", None), "boundary": ("zero", None), "boundary_value": ("1", None)}
    given = read_kv(Path(path).read_text())
    for key, (raw, line) in given.items():
        if key not in spec:
            raise ConfigError(f"unknown BVP key {key!r}", line)
        spec[key] = (raw, line)
    v_bar = _coerce("v_bar", "real", *spec["v_bar"])
    src = _coerce("source", "real", *spec["source"])
    kind = _coerce("boundary", "string", *spec["boundary"])
    bval = _coerce("boundary_value", "real", *spec["boundary_value"])
    if v_bar <= 0:
        raise ConfigError("v_bar must be positive", spec["v_bar"][1])
    g = (lambda x: np.full_like(np.asarray(x, dtype=float), src)) if src != 0 else None
    if kind == "zero":
        psi, lim = None, None
    elif kind == "constant":
        psi, lim = (lambda x: np.full_like(np.asarray(x, dtype=float), bval)), bval
    elif kind == "bump":
        psi, lim = (lambda x: bval / (1.0 + (np.asarray(x, dtype=float) - v_bar) ** 2)), 0.0
    else:
        raise ConfigError("boundary must be zero, constant or bump", spec["boundary"][1])
    return K.BVProblem(v_bar, g=g, psi=psi, psi_limit=lim)


def run_kernel(p, em: Emitter, info: dict) -> int:
    from . import kernel as K

    if not p["green"] and not p["bvp"]:
        raise ConfigError("kernel needs --green V0 and/or --bvp FILE")
    ctx = K.make_context(p["sigma"])
    V = np.array(p["grid"])
    info["c_star"] = ctx.c_star
    if p["green"]:
        em.table("green.csv", ["V", "value"], zip(V, np.atleast_1d(K.green_g(V, p["green"], ctx))))
    if p["bvp"]:
        prob = _bvp_problem(p["bvp"])
        sol = K.bvp_solve(prob, ctx, V, tol=p["tol"])
        em.table("bvp.csv", ["V", "value"], zip(sol.grid, sol.values))
    return EXIT_OK


def _g_function(spec: str, cap: float) -> Callable:
    kind, opts = spec, {}
    if Path(spec).is_file():
        given = read_kv(Path(spec).read_text())
        known = {"kind": "string", "center": "real", "width": "real", "value": "real", "seed": "int", "bumps": "int"}
        for key, (raw, line) in given.items():
            if key not in known:
                raise ConfigError(f"unknown g key {key!r}", line)
            opts[key] = _coerce(key, known[key], raw, line)
        kind = opts.get("kind", "gaussian")
    if kind == "constant":
        c = opts.get("value", 1.0)
        return lambda x: np.full_like(np.asarray(x, dtype=float), c)
    if kind == "gaussian":
        c, w, a = opts.get("center", 0.5), opts.get("width", 0.1), opts.get("value", 1.0)
        if w <= 0:
            raise ConfigError("g width must be positive")
        return lambda x: a * np.exp(-((np.minimum(np.asarray(x, dtype=float), cap) - c) / w) ** 2 / 2.0)
    if kind == "bumps":
        from .acceptance import random_smooth

        return random_smooth(np.random.default_rng(opts.get("seed", 0)), opts.get("bumps", 4), cap)
    raise ConfigError(f"g must be gaussian, constant, bumps or an existing file, got {spec!r}")


def run_resolvent(p, em: Emitter, info: dict) -> int:
    from . import resolvent as R

    nodes = R.geometric_nodes(p["lo"], p["cap"], p["nodes"])
    spec = R.GeneratorSpec.regularized(p["sigma"], p["epsilon"]) if p["epsilon"] > 0 else R.GeneratorSpec.power(p["sigma"])
    g = R.GridFunction.from_function(_g_function(p["g"], p["cap"]), nodes)
    phi = R.resolvent_solve(g, p["lambda"], spec)
    em.table("phi.csv", ["V", "g", "phi"], zip(nodes, g.values, phi.values))
    info.update(sup_g=float(np.abs(g.values).max()), sup_phi=float(np.abs(phi.values).max()),
                tail_value=float(phi.tail_value))
    return EXIT_OK


def run_adjoint(p, em: Emitter, info: dict) -> int:
    from . import resolvent as R

    law = _law(p)
    M = p["cap"]
    f = PHI0_SHAPES[p["phi0"]]
    nodes = np.linspace(0.0, M, p["nodes"])
    phi0 = R.GridFunction.from_function(lambda v: f(np.minimum(v, M) / M), nodes)
    out = R.adjoint_evolve(phi0, p["t"], R.GeneratorSpec.from_law(law))
    em.table("adjoint.csv", ["t", "V", "phi"],
             ((t, v, y) for t, gf in zip(p["t"], out) for v, y in zip(gf.nodes, gf.values)))
    info["phi_at_zero"] = {str(t): float(gf.values[0]) for t, gf in zip(p["t"], out)}
    return EXIT_OK


def run_simulate(p, em: Emitter, info: dict) -> int:
    from . import simulator as S

    law = _law(p)
    ck = p["t_checkpoints"]
    ens = S.ensemble(p["n"], p["v0"], ck, law, p["seed"], small_jump_fraction=p["small_jump_fraction"],
                     drift_step=p["drift_step"])
    k = min(p["sample"], ens.N)
    em.table("trajectories.csv", ["traj_id", "t", "V"],
             ((i, t, ens.volumes[i, c]) for i in range(k) for c, t in enumerate(ck)))
    profiles = []
    for t in ck:
        pr = S.profile(ens, t, bins=p["bins"])
        profiles.append(pr)
        em.table(f"profile_t{t:g}.csv", ["xi_lo", "xi_hi", "mass"], zip(pr.edges[:-1], pr.edges[1:], pr.weights))
    summary: dict[str, Any] = {"N": ens.N, "mu": ens.mu, "steps": ens.steps, "ensemble_sha256": ens.checksum(),
                               "median": {f"{t:g}": float(np.median(ens.volumes[:, c])) for c, t in enumerate(ck)}}
    try:
        slope, err = S.scaling_exponent(ens)
        summary.update(slope=slope, stderr=err)
    except DomainError as exc:
        summary.update(slope=None, stderr=None, slope_note=str(exc))
    summary["ks"] = {f"{a.time:g}->{b.time:g}": S.ks_distance(a, b) for a, b in zip(profiles, profiles[1:])}
    if p["beta"] < p["sigma"] - 5.0 / 3.0:
        rep = S.moments(ens, p["beta"], p["gamma"], burn_in=min(1, len(ck) - 1))
        em.table("moments.csv", ["tau", "M_beta", "m_gamma"], zip(rep.taus, rep.M_beta, rep.m_gamma))
        summary["moments"] = {"bound": rep.bound, "drift_sigmas": rep.drift_sigmas,
                              "bounded": rep.bounded, "no_drift": rep.no_drift}
    else:
        raise ConfigError("beta must be below sigma - 5/3")
    em.json("summary.json", summary)
    info["seeds"] = {"master": p["seed"], "per_trajectory": "derive_seed(master, i)"}
    return EXIT_OK


def run_validate(p, em: Emitter, info: dict) -> int:
    from . import acceptance as A

    numbers = [int(x) for x in p["criteria"]] or list(A.SUITES[p["suite"]])
    results = []
    for n in numbers:
        r = A.run(n)
        print(r.line(), flush=True)
        results.append(r)
    em.table("validate.csv", ["criterion", "title", "passed", "seconds", "details"],
             ((r.number, r.title, r.passed, round(r.seconds, 3), json.dumps(_json_safe(r.details), sort_keys=True))
              for r in results))
    failed = [r.number for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed" + (f"; failed: {failed}" if failed else ""))
    info["failed"] = failed
    return EXIT_ACCEPTANCE if failed else EXIT_OK


RUNNERS = {
    "profile": run_profile,
    "mellin": run_mellin,
    "kernel": run_kernel,
    "resolvent": run_resolvent,
    "adjoint": run_adjoint,
    "simulate": run_simulate,
    "validate": run_validate,
}


def _versions() -> dict:
    import scipy

    return {"smolkin": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version()}


def run(cfg: RunConfig) -> int:
    em = Emitter(cfg)
    info: dict[str, Any] = {}
    t0 = time.perf_counter()
    status = RUNNERS[cfg.command](cfg.parameters, em, info)
    manifest = {
        "command": cfg.command,
        "parameters": cfg.parameters,
        "parameter_sources": cfg.sources,
        "format": cfg.format,
        "threads": cfg.threads,
        "versions": _versions(),
        "wall_time_s": time.perf_counter() - t0,
        "outputs": dict(sorted(em.files.items())),
        "results": info,
        "exit_status": status,
    }
    (cfg.output_dir / "manifest.json").write_text(json.dumps(_json_safe(manifest), indent=1, sort_keys=True) + "\n")
    return status


def main(argv: list[str] | None = None) -> int:
    try:
        cfg = parse_config(argv)
    except (ConfigError, DomainError) as exc:
        print(f"smolkin: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return run(cfg)
    except (ConfigError, DomainError) as exc:
        print(f"smolkin: domain error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except EventCapError as exc:
        print(f"smolkin: resource error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (NumericError, SmolkinError) as exc:
        print(f"smolkin: numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"smolkin: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

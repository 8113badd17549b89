"""Command-line front end.

    gausscap COMMAND [--config FILE] [--seed N] [--out DIR] [--quiet] [--set KEY=VALUE ...]

Every run writes ``<out>/<command>.json`` (the result record, deterministic
for a fixed config), ``<out>/<command>.meta.json`` (timestamps, versions,
timings), ``<out>/<command>.config.json`` (the fully materialized config,
reusable through ``--config``) and, for sweeps, ``<out>/<command>.csv``.

Exit codes: 0 success, 2 invalid configuration, 3 solver did not converge,
4 selftest invariant violated. Diagnostics go to stderr as one JSON line.

The environment variable GAUSSCAP_THREADS sets the number of worker
threads used by sweeps (default 1). Results do not depend on it.
"""
from __future__ import annotations

import argparse
import copy
import csv
import datetime as _dt
import io
import json
import math
import os
import platform
import sys
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_SELFTEST = 0, 2, 3, 4
THREADS_ENV = "GAUSSCAP_THREADS"

_SOLVER = {"tol": 1e-10, "max_iter": 200, "max_outer": 500, "feasibility_tol": 1e-8}

DEFAULTS: dict[str, dict] = {
    "capacity": {
        "region": {"kind": "ball", "center": [0.0], "radius": 1.0},
        "n": 1, "K": 10, "Q": 16, "refine_Q": [24, 32],
        "r": 1, "p": 2.0, "definition": "potential", "solver": _SOLVER,
    },
    "equivalence": {
        "n": [1, 2], "r": [1, 2], "p": [1.5, 2.0, 3.0], "K": 10, "Q": 16, "refine_Q": 24,
        "regions": None, "solver": _SOLVER,
    },
    "truncation-bound": {
        "n": [1, 2, 3, 4], "r": 2, "p": 2.0, "K": 6, "Q": 10, "samples": 100,
    },
    "multest": {
        "n": 2, "r": 2, "k": 1, "q": 2.0, "K": 6, "Q": 12, "samples": 500, "scale": 7.3,
    },
    "hausdorff": {
        "region": {"kind": "slab", "normal": [1.0, 0.0], "offset": 0.0, "halfwidth": 0.0},
        "n": 2, "d": 1.0, "section_samples": 200,
        "epsilons": [2.0**-k for k in range(4, 9)], "subdivisions": 8, "window": 6.0,
    },
    "hitting": {
        "region": {"kind": "ball", "center": [0.0], "radius": 1.0},
        "n": 1, "r": 2, "upper": 4.0, "spacing": 0.25, "replicas": 10000, "steps": [4, 2, 1],
    },
    "kakutani": {
        "radii": [1.0, 0.5, 0.25], "n": 1, "r": 2, "upper": 1.0, "spacing": 0.25,
        "replicas": 10000, "capacity_Q": [81, 101, 121], "capacity_margin": 0.0,
        "zero_threshold": 1e-3,
    },
    "uniqueness": {
        "region": {"kind": "point", "center": [0.0]},
        "n": 1, "m": 1, "p": 2.0, "K": 20, "Q": 21, "margins": [0.2, 0.1, 0.05],
        "zero_threshold": 1e-3, "solver": _SOLVER,
    },
    "selftest": {},
}
COMMON = {"seed": 0, "out": "results", "quiet": False}
# fields that steer I/O only; they stay out of the result record
_IO_FIELDS = ("out", "quiet")


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------- output

def _format_float(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    s = format(x, ".17g")
    return s if any(ch in s for ch in ".en") else s + ".0"


def dumps(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON with every float printed to 17 significant digits."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _format_float(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in obj):
            return "[" + ", ".join(dumps(v, indent, _level + 1) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + dumps(v, indent, _level + 1) for v in obj) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _atomic_write(path: str, text: str) -> None:
    d = os.path.dirname(path) or "."
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _csv_text(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    for row in rows:
        w.writerow([format(v, ".17g") if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def _mapper():
    try:
        k = int(os.environ.get(THREADS_ENV, "1"))
    except ValueError:
        raise ConfigError(f"{THREADS_ENV} must be an integer") from None
    if k < 1:
        raise ConfigError(f"{THREADS_ENV} must be >= 1")
    if k == 1:
        return map

    def pmap(fn, items):
        with ThreadPoolExecutor(k) as ex:
            return list(ex.map(fn, items))

    return pmap


# ---------------------------------------------------------------- config

def _merge(defaults: dict, given: dict, where: str) -> dict:
    out = copy.deepcopy(defaults)
    for key, val in given.items():
        if key not in defaults:
            raise ConfigError(f"unknown field {where}{key!r}")
        if key == "solver":
            if not isinstance(val, dict):
                raise ConfigError(f"field {where}{key!r} must be an object")
            out[key] = _merge(defaults[key], val, f"{where}{key}.")
        elif key == "region" and isinstance(val, dict) and "kind" not in val \
                and isinstance(defaults[key], dict):
            # partial region: adjust fields of the current one
            out[key] = {**defaults[key], **val}
        else:
            out[key] = val
    return out


def _parse_set(items) -> dict:
    out: dict = {}
    for item in items or ():
        key, sep, raw = item.partition("=")
        if not sep or not key:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        try:
            val = json.loads(raw)
        except json.JSONDecodeError:
            val = raw
        node = out
        parts = key.split(".")
        for p in parts[:-1]:
            node = node.setdefault(p, {})
        node[parts[-1]] = val
    return out


def materialize(command: str, file_cfg: dict | None = None, overrides: dict | None = None) -> dict:
    """Defaults, then the config file, then flags; unknown fields are rejected."""
    if command not in DEFAULTS:
        raise ConfigError(f"unknown command {command!r}")
    file_cfg = dict(file_cfg or {})
    named = file_cfg.pop("command", command)
    if named != command:
        raise ConfigError(f"config is for command {named!r}, not {command!r}")
    defaults = {**COMMON, **DEFAULTS[command]}
    cfg = _merge(defaults, file_cfg, "")
    cfg = _merge(cfg, overrides or {}, "")
    _validate(command, cfg)
    return {"command": command, **cfg}


def _need(cond: bool, msg: str) -> None:
    if not cond:
        raise ConfigError(msg)


def _int(cfg, key, lo=0):
    v = cfg[key]
    _need(isinstance(v, int) and not isinstance(v, bool) and v >= lo,
          f"{key!r} must be an integer >= {lo}")


def _num(cfg, key, lo=None, strict=False):
    v = cfg[key]
    _need(isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v),
          f"{key!r} must be a finite number")
    if lo is not None:
        _need(v > lo if strict else v >= lo, f"{key!r} must be {'>' if strict else '>='} {lo}")


def _region(spec, n: int | None = None):
    from .regions import ambient_dim, region_from_dict

    _need(isinstance(spec, dict), "region must be an object")
    try:
        reg = region_from_dict(spec)
        dim = ambient_dim(reg)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid region: {exc}") from None
    if n is not None and dim is not None:
        _need(dim == n, f"region lives in dimension {dim}, config has n={n}")
    return reg


def _validate(command: str, cfg: dict) -> None:
    _int(cfg, "seed")
    _need(isinstance(cfg["out"], str) and cfg["out"], "'out' must be a nonempty path")
    _need(isinstance(cfg["quiet"], bool), "'quiet' must be true or false")
    if "solver" in cfg:
        s = cfg["solver"]
        _num(s, "tol", 0, strict=True)
        _num(s, "feasibility_tol", 0, strict=True)
        _int(s, "max_iter", 1)
        _int(s, "max_outer", 1)
    if command in ("capacity", "uniqueness"):
        _int(cfg, "n", 1)
        _int(cfg, "K", 0)
        _int(cfg, "Q", 1)
        _need(cfg["Q"] >= cfg["K"] + 1, "need Q >= K + 1")
        _region(cfg["region"], cfg["n"])
        _num(cfg, "p", 1, strict=True)
    if command == "capacity":
        _int(cfg, "r", 1)
        _need(cfg["definition"] in ("potential", "variational"),
              "'definition' must be 'potential' or 'variational'")
        _need(isinstance(cfg["refine_Q"], list) and all(
            isinstance(q, int) and q > cfg["K"] for q in cfg["refine_Q"]),
            "'refine_Q' must be a list of integers above K")
    elif command == "uniqueness":
        _int(cfg, "m", 1)
        _need(isinstance(cfg["margins"], list) and len(cfg["margins"]) >= 3
              and all(isinstance(v, (int, float)) and v >= 0 for v in cfg["margins"]),
              "'margins' must list at least three nonnegative values")
        _num(cfg, "zero_threshold", 0, strict=True)
    elif command == "equivalence":
        for key, lo in (("n", 1), ("r", 1)):
            _need(isinstance(cfg[key], list) and cfg[key] and all(
                isinstance(v, int) and v >= lo for v in cfg[key]), f"{key!r} must list integers >= {lo}")
        _need(isinstance(cfg["p"], list) and cfg["p"] and all(
            isinstance(v, (int, float)) and v > 1 for v in cfg["p"]), "'p' must list values > 1")
        _int(cfg, "K", 0)
        _int(cfg, "Q", 1)
        _int(cfg, "refine_Q", 1)
        _need(cfg["K"] < cfg["Q"] < cfg["refine_Q"], "need K < Q < refine_Q")
        if cfg["regions"] is not None:
            _need(isinstance(cfg["regions"], dict), "'regions' maps a dimension to a list of regions")
            for key, regs in cfg["regions"].items():
                _need(str(key).isdigit(), "'regions' keys must be dimensions")
                for r in regs:
                    _region(r, int(key))
    elif command == "truncation-bound":
        _need(isinstance(cfg["n"], list) and cfg["n"] and all(
            isinstance(v, int) and v >= 1 for v in cfg["n"]), "'n' must list positive integers")
        _int(cfg, "r", 1)
        _num(cfg, "p", 1, strict=True)
        _int(cfg, "K", 0)
        _int(cfg, "Q", 1)
        _need(cfg["Q"] > cfg["K"], "need Q >= K + 1")
        _int(cfg, "samples", 1)
    elif command == "multest":
        for key, lo in (("n", 1), ("r", 2), ("k", 1), ("K", 0), ("Q", 1), ("samples", 1)):
            _int(cfg, key, lo)
        _need(cfg["k"] < cfg["r"], "need k < r")
        _need(cfg["Q"] > cfg["K"], "need Q >= K + 1")
        _num(cfg, "q", 1, strict=True)
        _num(cfg, "scale", 0, strict=True)
    elif command == "hausdorff":
        _int(cfg, "n", 1)
        _region(cfg["region"], cfg["n"])
        _num(cfg, "d", 0)
        _int(cfg, "section_samples", 1)
        _int(cfg, "subdivisions", 1)
        _num(cfg, "window", 0, strict=True)
        eps = cfg["epsilons"]
        _need(isinstance(eps, list) and eps and all(isinstance(e, (int, float)) and e > 0 for e in eps)
              and all(b < a for a, b in zip(eps, eps[1:])), "'epsilons' must be positive and decreasing")
    elif command in ("hitting", "kakutani"):
        _int(cfg, "n", 1)
        _int(cfg, "r", 1)
        _int(cfg, "replicas", 1)
        _num(cfg, "upper", 0, strict=True)
        _num(cfg, "spacing", 0, strict=True)
        _need(cfg["spacing"] <= cfg["upper"], "'spacing' must not exceed 'upper'")
        if command == "hitting":
            _region(cfg["region"], cfg["n"])
            _need(isinstance(cfg["steps"], list) and cfg["steps"] and all(
                isinstance(s, int) and s >= 1 for s in cfg["steps"]), "'steps' must list positive integers")
        else:
            _need(isinstance(cfg["radii"], list) and cfg["radii"] and all(
                isinstance(v, (int, float)) and v > 0 for v in cfg["radii"]), "'radii' must be positive")
            qs = cfg["capacity_Q"]
            _need(isinstance(qs, list) and len(qs) >= 1 and all(isinstance(q, int) and q >= 2 for q in qs),
                  "'capacity_Q' must list integers >= 2")
            _need(cfg["capacity_margin"] is None or (
                isinstance(cfg["capacity_margin"], (int, float)) and cfg["capacity_margin"] >= 0),
                "'capacity_margin' must be null or nonnegative")
            _num(cfg, "zero_threshold", 0, strict=True)


# ---------------------------------------------------------------- commands

class Outcome:
    def __init__(self, result: dict, csv_rows=None, converged: bool = True, ok: bool = True):
        self.result, self.csv_rows, self.converged, self.ok = result, csv_rows, converged, ok


def _opts(cfg):
    from .capacity import SolverOptions

    return SolverOptions(**cfg["solver"])


def _cmd_capacity(cfg) -> Outcome:
    from .capacity import refinement_trend
    from .model_space import GaussModelSpace
    from .potential import SobolevParams

    region = _region(cfg["region"], cfg["n"])
    params = SobolevParams(cfg["r"], float(cfg["p"]))
    spaces = [GaussModelSpace(cfg["n"], cfg["K"], q) for q in [cfg["Q"], *cfg["refine_Q"]]]
    res = refinement_trend(region, params, spaces, cfg["definition"], _opts(cfg))
    return Outcome(res.to_dict(region, params), converged=res.converged)


def _default_family(n: int):
    from .regions import ball, slab

    s2 = 1.0 / math.sqrt(2.0)
    if n == 1:
        return [ball([0.0], 0.5), ball([0.0], 1.0), ball([0.0], 2.0), slab([1.0], 1.0, 0.5),
                slab([1.0], -0.5, 0.25), slab([1.0], 1.5, 1.0)]
    e1 = [1.0] + [0.0] * (n - 1)
    e2 = [0.0, 1.0] + [0.0] * (n - 2)
    diag = [s2, s2] + [0.0] * (n - 2)
    origin = [0.0] * n
    return [ball(origin, 0.5), ball(origin, 1.0), ball(origin, 2.0), slab(e1, 0.0, 0.5),
            slab(diag, 1.0, 0.5), slab(e2, 0.5, 1.0)]


def equivalence_sweep(ns, rs, ps, K: int, Q: int, refine_Q: int, regions=None,
                      opts=None, mapper=map) -> tuple[list[dict], dict]:
    """Ratios ccap/cap for each region and (n, r, p), on Q and on refine_Q nodes."""
    from .capacity import SolverOptions, equivalence_ratio
    from .model_space import GaussModelSpace
    from .potential import SobolevParams

    opts = SolverOptions() if opts is None else opts
    tasks = []
    for n in ns:
        fam = _default_family(n) if regions is None or str(n) not in regions else [
            _region(r, n) for r in regions[str(n)]]
        for r in rs:
            for p in ps:
                tasks.extend((n, r, float(p), i, reg) for i, reg in enumerate(fam))

    def one(task):
        n, r, p, i, reg = task
        params = SobolevParams(r, p)
        a = equivalence_ratio(reg, params, GaussModelSpace(n, K, Q), opts=opts)
        b = equivalence_ratio(reg, params, GaussModelSpace(n, K, refine_Q), opts=opts)
        change = abs(b.ratio / a.ratio - 1.0) if a.ratio else float("nan")
        return {"n": n, "r": r, "p": p, "region_id": i, "region": reg.to_dict(),
                "cap": a.cap.value, "ccap": a.ccap.value, "ratio": a.ratio,
                "cap_refined": b.cap.value, "ccap_refined": b.ccap.value,
                "ratio_refined": b.ratio, "change": change,
                "witness_cost": b.witness_cost,
                "converged": bool(a.cap.converged and a.ccap.converged
                                  and b.cap.converged and b.ccap.converged)}

    rows = list(mapper(one, tasks))
    summary = {}
    for r in rs:
        for p in ps:
            sel = [x for x in rows if x["r"] == r and x["p"] == float(p)]
            vals = [v for x in sel for v in (x["ratio"], x["ratio_refined"])]
            C = max(max(vals), 1.0 / min(vals))
            summary[f"r={r},p={float(p):g}"] = {
                "min_ratio": min(vals), "max_ratio": max(vals), "C": C,
                "max_change": max(x["change"] for x in sel)}
    return rows, summary


def _cmd_equivalence(cfg) -> Outcome:
    rows, summary = equivalence_sweep(cfg["n"], cfg["r"], cfg["p"], cfg["K"], cfg["Q"],
                                      cfg["refine_Q"], cfg["regions"], _opts(cfg), _mapper())
    head = ["n", "r", "p", "region_id", "cap", "ccap", "ratio", "ratio_refined", "change",
            "converged"]
    table = [head] + [[x[h] for h in head] for x in rows]
    return Outcome({"rows": rows, "summary": summary}, table,
                   converged=all(x["converged"] for x in rows))


def _cmd_truncation(cfg) -> Outcome:
    from .truncation import truncation_sweep

    rows = []
    for n in cfg["n"]:
        rows += truncation_sweep(n, cfg["samples"], cfg["seed"], cfg["r"], float(cfg["p"]),
                            cfg["K"], cfg["Q"], mapper=_mapper())
    per_n = {str(n): max(x.ratio for x in rows if x.n == n) for n in cfg["n"]}
    maxima = list(per_n.values())
    median = float(np.median([x.ratio for x in rows]))
    summary = {"max_ratio": per_n, "pooled_median": median,
               "variation": (max(maxima) - min(maxima)) / min(maxima) if min(maxima) > 0 else None,
               "max_over_median": max(maxima) / median if median > 0 else None,
               "max_aliasing_l2": max(x.extra for x in rows)}
    table = [["n", "r", "p", "seed", "sample", "ratio", "aliasing_l2"]] + [
        [x.n, x.r, x.p, x.seed, x.sample, x.ratio, x.extra] for x in rows]
    return Outcome({"summary": summary}, table)


MULTEST_BOUND_FACTOR = 10.0


def _cmd_multest(cfg) -> Outcome:
    from .truncation import multest_sweep

    rows = multest_sweep(cfg["n"], cfg["samples"], cfg["seed"], cfg["r"], cfg["k"],
                         float(cfg["q"]), cfg["K"], cfg["Q"], float(cfg["scale"]), mapper=_mapper())
    ratios = np.array([x.ratio for x in rows])
    median = float(np.median(ratios))
    bound = MULTEST_BOUND_FACTOR * median
    violations = int(np.sum(~np.isfinite(ratios) | (ratios > bound)))
    summary = {"median": median, "max": float(np.max(ratios)), "bound": bound,
               "violations": violations, "max_scaling_gap": max(x.extra for x in rows)}
    table = [["n", "r", "k", "q", "seed", "sample", "ratio", "scaling_gap"]] + [
        [x.n, x.r, cfg["k"], x.p, x.seed, x.sample, x.ratio, x.extra] for x in rows]
    return Outcome({"summary": summary}, table)


def _cmd_hausdorff(cfg) -> Outcome:
    from .hausdorff import CoveringSchedule, gaussian_hausdorff

    region = _region(cfg["region"], cfg["n"])
    sched = CoveringSchedule(tuple(cfg["epsilons"]), cfg["subdivisions"])
    rep = gaussian_hausdorff(region, float(cfg["d"]), n=cfg["n"],
                             section_samples=cfg["section_samples"], schedule=sched,
                             seed=cfg["seed"], window=float(cfg["window"]))
    return Outcome(rep.to_dict())


def _cmd_hitting(cfg) -> Outcome:
    from .sheet import SheetGrid, hitting_refinement

    region = _region(cfg["region"], cfg["n"])
    grid = SheetGrid.box(cfg["r"], cfg["n"], cfg["upper"], cfg["spacing"])
    stats = hitting_refinement(region, grid, cfg["replicas"], cfg["seed"], steps=tuple(cfg["steps"]))
    res = {"grid": {"r": grid.r, "n": grid.n, "upper": cfg["upper"], "spacing": grid.spacing},
           "estimate": stats[-1].to_dict(),
           "refinement": [s.to_dict() for s in stats]}
    table = [["grid_spacing", "hits", "replicas", "estimate", "ci_low", "ci_high", "seed"]] + [
        [s.grid_spacing, s.hits, s.replicas, s.estimate, s.ci[0], s.ci[1], s.seed] for s in stats]
    return Outcome(res, table)


def _cmd_kakutani(cfg) -> Outcome:
    from .model_space import GaussModelSpace
    from .regions import ball
    from .sheet import SheetGrid, kakutani_experiment

    n = cfg["n"]
    family = [ball([0.0] * n, float(rho)) for rho in cfg["radii"]]
    grid = SheetGrid.box(cfg["r"], n, cfg["upper"], cfg["spacing"])
    spaces = [GaussModelSpace(n, q - 1, q) for q in cfg["capacity_Q"]]
    table = kakutani_experiment(family, grid, cfg["replicas"], spaces, cfg["seed"],
                                capacity_margin=cfg["capacity_margin"],
                                zero_threshold=cfg["zero_threshold"])
    rows = table.csv_rows()
    rows[0].insert(1, "rho")
    for row, rho in zip(rows[1:], cfg["radii"]):
        row.insert(1, float(rho))
    return Outcome(table.to_dict(), rows)


def _cmd_uniqueness(cfg) -> Outcome:
    from .capacity import uniqueness_verdict
    from .model_space import GaussModelSpace

    region = _region(cfg["region"], cfg["n"])
    v = uniqueness_verdict(region, cfg["m"], float(cfg["p"]),
                           GaussModelSpace(cfg["n"], cfg["K"], cfg["Q"]),
                           zero_threshold=cfg["zero_threshold"],
                           refinement_levels=tuple(cfg["margins"]), opts=_opts(cfg))
    out = v.to_dict()
    out["region"] = region.to_dict()
    return Outcome(out)


def _cmd_selftest(cfg) -> Outcome:
    from .selftest import run_selftest

    checks = run_selftest(cfg["seed"])
    failed = [c["name"] for c in checks if not c["passed"]]
    return Outcome({"checks": checks, "passed": not failed, "failed": failed}, ok=not failed)


COMMANDS = {
    "capacity": _cmd_capacity,
    "equivalence": _cmd_equivalence,
    "truncation-bound": _cmd_truncation,
    "multest": _cmd_multest,
    "hausdorff": _cmd_hausdorff,
    "hitting": _cmd_hitting,
    "kakutani": _cmd_kakutani,
    "uniqueness": _cmd_uniqueness,
    "selftest": _cmd_selftest,
}


def run(command: str, cfg: dict) -> tuple[int, dict]:
    """Execute a materialized config; writes the artifacts and returns (exit code, record)."""
    t0 = time.perf_counter()
    started = _dt.datetime.now(_dt.timezone.utc).isoformat()
    outcome = COMMANDS[command](cfg)
    if not outcome.ok:
        status, code = "invariant_violation", EXIT_SELFTEST
    elif not outcome.converged:
        status, code = "not_converged", EXIT_SOLVER
    else:
        status, code = "ok", EXIT_OK
    stored = {k: v for k, v in cfg.items() if k not in _IO_FIELDS}
    record = {"command": command, "status": status, "config": stored, "result": outcome.result}
    out = cfg["out"]
    stem = os.path.join(out, command)
    _atomic_write(stem + ".json", dumps(record) + "\n")
    _atomic_write(stem + ".config.json", dumps(cfg) + "\n")
    if outcome.csv_rows is not None:
        _atomic_write(stem + ".csv", _csv_text(outcome.csv_rows))
    from . import __version__

    meta = {"started": started,
            "finished": _dt.datetime.now(_dt.timezone.utc).isoformat(),
            "elapsed_seconds": time.perf_counter() - t0,
            "version": __version__, "python": platform.python_version(),
            "numpy": np.__version__, "threads": os.environ.get(THREADS_ENV, "1")}
    _atomic_write(stem + ".meta.json", dumps(meta) + "\n")
    return code, record


def _summary_line(record: dict) -> str:
    res = record["result"]
    if record["command"] == "capacity":
        return f"value={res['value']:.10g} trend={res['refinement_trend']}"
    if record["command"] == "uniqueness":
        return f"verdict: {res['verdict']}"
    if record["command"] == "selftest":
        return f"{sum(c['passed'] for c in res['checks'])}/{len(res['checks'])} checks passed"
    if "summary" in res:
        return json.dumps(res["summary"], default=float)
    if "value" in res:
        return f"value={res['value']:.10g}"
    if "estimate" in res:
        e = res["estimate"]
        return f"estimate={e['estimate']:.6g} ci=[{e['ci'][0]:.6g}, {e['ci'][1]:.6g}]"
    if "rank_correlation" in res:
        return f"rank_correlation={res['rank_correlation']} flags={res['flags']}"
    return record["status"]


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gausscap",
                                 description="Gaussian capacities, Hausdorff measures and OU sheets.")
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", metavar="PATH", help="JSON config file")
    ap.add_argument("--seed", type=int, help="master seed")
    ap.add_argument("--out", metavar="DIR", help="output directory (default: results)")
    ap.add_argument("--quiet", action="store_true", help="no summary on stdout")
    ap.add_argument("--set", action="append", metavar="KEY=VALUE", dest="sets",
                    help="override a config field; VALUE is parsed as JSON, dots reach nested fields")
    return ap


def _diagnose(kind: str, message: str, code: int) -> int:
    print(json.dumps({"error": kind, "message": message, "exit_code": code}), file=sys.stderr)
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        file_cfg = {}
        if args.config:
            try:
                with open(args.config, encoding="utf-8") as fh:
                    file_cfg = json.load(fh)
            except (OSError, json.JSONDecodeError) as exc:
                raise ConfigError(f"cannot read config: {exc}") from None
            if not isinstance(file_cfg, dict):
                raise ConfigError("config file must hold a JSON object")
        overrides = _parse_set(args.sets)
        if args.seed is not None:
            overrides["seed"] = args.seed
        if args.out is not None:
            overrides["out"] = args.out
        if args.quiet:
            overrides["quiet"] = True
        cfg = materialize(args.command, file_cfg, overrides)
        _mapper()
        code, record = run(args.command, cfg)
    except (ConfigError, ValueError) as exc:
        return _diagnose("validation", str(exc), EXIT_CONFIG)
    if code == EXIT_SOLVER:
        _diagnose("not_converged", "a solver stopped before meeting its tolerance", code)
    elif code == EXIT_SELFTEST:
        _diagnose("invariant_violation", ", ".join(record["result"]["failed"]), code)
    if not cfg["quiet"]:
        print(f"{args.command}: {_summary_line(record)}")
        print(f"wrote {os.path.join(cfg['out'], args.command)}.json")
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

"""Multi-trial Elastic Net experiments.

Trial ``t`` draws its instance from ``InstanceSpec(seed=master_seed,
trial_index=t)``; every method of that trial starts from the same ``x0`` on
the same problem. Stochastic methods get the seed
``derive_seed(master_seed, t, label)``. Trials run on a process pool and are
reassembled by trial index, so results do not depend on the pool size.
"""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
import hashlib
import json
import logging
import math
import os
import platform
import re
import statistics
import sys

import jsonschema
import numpy as np

from . import __version__
from .exceptions import DivergedError, SpecoptError
from .optimizers import METHODS, STOCHASTIC, RunConfig, StepSchedule, trace_invariants
from .problems import InstanceSpec, generate_instance
from .streams import derive_seed

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1

_RUN_PROPS = {
    "max_iter": {"type": "integer", "minimum": 1},
    "tol": {"type": "number", "exclusiveMinimum": 0},
    "schedule": {
        "type": "object",
        "properties": {
            "kind": {"enum": list(StepSchedule.KINDS)},
            "c": {"type": "number", "exclusiveMinimum": 0},
            "h": {"type": "number", "exclusiveMinimum": 0},
        },
        "additionalProperties": False,
    },
    "switch_iter": {"type": "integer", "minimum": 0},
    "retain_iterates": {"type": "boolean"},
}
_METHOD_PARAMS = {
    "lr": {"type": "number", "exclusiveMinimum": 0},
    "beta1": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
    "beta2": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
    "eps": {"type": "number", "exclusiveMinimum": 0},
}
_INSTANCE_PROPS = {
    "m": {"type": "integer", "minimum": 1},
    "n": {"type": "integer", "minimum": 1},
    "lambda1": {"type": "number", "minimum": 0},
    "lambda2": {"type": "number", "minimum": 0},
}

CONFIG_SCHEMA = {
    "type": "object",
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "name": {"type": "string"},
        "description": {"type": "string"},
        **_INSTANCE_PROPS,
        "instance": {"type": "object", "properties": _INSTANCE_PROPS,
                     "additionalProperties": False},
        "trials": {"type": "integer", "minimum": 1},
        "master_seed": {"type": "integer", "minimum": 0, "maximum": 2 ** 64 - 1},
        "parallelism": {"type": "integer", "minimum": 1},
        "exclude_failures": {"type": "boolean"},
        "defaults": {"type": "object", "properties": _RUN_PROPS, "additionalProperties": False},
        "methods": {
            "type": "array",
            "minItems": 1,
            "items": {
                "oneOf": [
                    {"enum": sorted(METHODS)},
                    {
                        "type": "object",
                        "properties": {"method": {"enum": sorted(METHODS)},
                                       "label": {"type": "string", "minLength": 1},
                                       **_RUN_PROPS, **_METHOD_PARAMS},
                        "required": ["method"],
                        "additionalProperties": False,
                    },
                ]
            },
        },
        "checks": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {
                    "method": {"type": "string"},
                    "op": {"enum": ["within_rel", "lt", "gt"]},
                    "target": {"type": "number"},
                    "tol": {"type": "number", "minimum": 0},
                    "value": {"type": "number"},
                },
                "required": ["method", "op"],
                "additionalProperties": False,
            },
        },
    },
    "required": ["methods"],
    "additionalProperties": False,
}

DEFAULT_LABELS = {"speg": "SPEG", "sspeg": "S-SPEG", "hspeg": "H-SPEG", "gd": "GD",
                  "adam": "Adam", "subgradient": "SG"}


class ConfigError(SpecoptError, ValueError):
    """The experiment configuration does not match the schema."""


@dataclass(frozen=True)
class MethodSpec:
    label: str
    method: str
    run: RunConfig
    params: dict = field(default_factory=dict)

    def to_dict(self):
        return {"label": self.label, "method": self.method, "params": dict(self.params),
                "run": {"max_iter": self.run.max_iter, "tol": self.run.tol,
                        "schedule": self.run.schedule.to_dict(),
                        "switch_iter": self.run.switch_iter}}


@dataclass(frozen=True)
class ExperimentConfig:
    m: int
    n: int
    lambda1: float
    lambda2: float
    methods: tuple
    trials: int = 20
    master_seed: int = 0
    parallelism: int = 1
    exclude_failures: bool = False
    name: str = "experiment"
    checks: tuple = ()

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if not self.methods:
            raise ConfigError("method list must be nonempty")
        labels = [ms.label for ms in self.methods]
        if len(set(labels)) != len(labels):
            raise ConfigError(f"method labels must be unique, got {labels}")

    def instance_spec(self, trial):
        return InstanceSpec(self.m, self.n, self.lambda1, self.lambda2,
                            self.master_seed, trial)

    def method_seed(self, trial, label):
        return derive_seed(self.master_seed, trial, label)

    def to_dict(self):
        return {"schema_version": SCHEMA_VERSION, "name": self.name,
                "instance": {"m": self.m, "n": self.n, "lambda1": self.lambda1,
                             "lambda2": self.lambda2},
                "trials": self.trials, "master_seed": self.master_seed,
                "exclude_failures": self.exclude_failures,
                "methods": [ms.to_dict() for ms in self.methods],
                "checks": [dict(c) for c in self.checks]}


def _run_config(doc, base):
    kw = {}
    for key in ("max_iter", "tol", "switch_iter", "retain_iterates"):
        if key in doc:
            kw[key] = doc[key]
    if "schedule" in doc:
        kw["schedule"] = StepSchedule.from_dict(doc["schedule"])
    return base.with_(**kw)


def config_from_dict(doc):
    """Validate an experiment document and build an :class:`ExperimentConfig`."""
    try:
        jsonschema.validate(doc, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config invalid at {where}: {exc.message}") from None
    inst = dict(doc.get("instance", {}))
    for key in _INSTANCE_PROPS:
        if key in doc:
            inst[key] = doc[key]
    if "m" not in inst or "n" not in inst:
        raise ConfigError("config needs instance sizes m and n")
    base = _run_config(doc.get("defaults", {}), RunConfig())
    methods = []
    for item in doc["methods"]:
        item = {"method": item} if isinstance(item, str) else dict(item)
        kind = item["method"]
        label = item.get("label", DEFAULT_LABELS[kind])
        params = {k: item[k] for k in _METHOD_PARAMS if k in item}
        methods.append(MethodSpec(label, kind, _run_config(item, base), params))
    return ExperimentConfig(
        m=inst["m"], n=inst["n"], lambda1=float(inst.get("lambda1", 0.0)),
        lambda2=float(inst.get("lambda2", 0.0)), methods=tuple(methods),
        trials=doc.get("trials", 20), master_seed=doc.get("master_seed", 0),
        parallelism=doc.get("parallelism", 1),
        exclude_failures=doc.get("exclude_failures", False),
        name=doc.get("name", "experiment"), checks=tuple(doc.get("checks", ())))


@dataclass(frozen=True)
class TrialStats:
    mean: float
    median: float
    stddev: float
    per_trial_best: tuple


def aggregate_stats(values):
    """Mean, median and sample standard deviation (``n - 1`` denominator)."""
    vals = [float(v) for v in values]
    if not vals:
        raise ValueError("aggregate_stats needs at least one value")
    if not all(math.isfinite(v) for v in vals):
        raise ValueError("aggregate_stats needs finite values")
    sd = statistics.stdev(vals) if len(vals) > 1 else 0.0
    return TrialStats(statistics.fmean(vals), statistics.median(vals), sd, tuple(vals))


@dataclass
class CurveAggregate:
    label: str
    mean: np.ndarray
    median: np.ndarray


@dataclass
class MethodOutcome:
    label: str
    best_f: float
    stop_reason: str
    n_iter: int
    total_ms: float
    failed: bool
    reason: str
    x0_hash: str
    invariants: dict
    best_curve: np.ndarray
    f_curve: np.ndarray


def _hash_array(x):
    return hashlib.sha256(np.ascontiguousarray(x).tobytes()).hexdigest()


def _extend(values, length):
    if len(values) >= length:
        return np.asarray(values[:length], dtype=float)
    out = np.empty(length)
    out[:len(values)] = values
    out[len(values):] = values[-1]
    return out


def _invoke(ms, problem, x0, run):
    fn = METHODS[ms.method]
    if ms.method in ("gd", "adam"):
        return fn(problem, x0, run, **ms.params)
    return fn(problem, x0, run)


def run_trial(cfg, trial):
    """Run every method of ``cfg`` on trial ``trial``."""
    problem, x0 = generate_instance(cfg.instance_spec(trial))
    outcomes = []
    for ms in cfg.methods:
        run = ms.run
        if ms.method in STOCHASTIC:
            run = run.with_(seed=cfg.method_seed(trial, ms.label))
        length = run.max_iter + 1
        failed, reason = False, ""
        with np.errstate(over="ignore", invalid="ignore"):
            try:
                trace = _invoke(ms, problem, x0, run)
            except DivergedError as exc:
                trace, failed, reason = exc.trace, True, str(exc)
        outcomes.append(MethodOutcome(
            label=ms.label, best_f=trace.best_f, stop_reason=trace.stop_reason,
            n_iter=trace.n_iter, total_ms=trace.total_ms, failed=failed, reason=reason,
            x0_hash=_hash_array(trace.x0),
            invariants=trace_invariants(trace, run.schedule if ms.method not in ("gd", "adam")
                                        else None),
            best_curve=_extend(trace.best_f_history, length),
            f_curve=_extend(trace.f_values, length)))
    return {"trial": trial, "instance_hash": problem.fingerprint() + ":" + _hash_array(x0),
            "outcomes": outcomes}


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    trials: list
    stats: dict
    curves: dict
    iterate_curves: dict
    timings: dict

    def failures(self):
        return [(t["trial"], o.label, o.reason) for t in self.trials
                for o in t["outcomes"] if o.failed]


def _run_trial_star(args):
    return run_trial(*args)


def run_experiment(cfg, parallelism=None, progress=None):
    """Run all trials and aggregate statistics and curves per method."""
    jobs = parallelism or cfg.parallelism
    work = [(cfg, t) for t in range(cfg.trials)]
    if jobs > 1 and cfg.trials > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = []
            for res in pool.map(_run_trial_star, work):
                results.append(res)
                if progress:
                    progress(len(results), cfg.trials)
    else:
        results = []
        for item in work:
            results.append(_run_trial_star(item))
            if progress:
                progress(len(results), cfg.trials)
    results.sort(key=lambda r: r["trial"])

    stats, curves, iterate_curves, timings = {}, {}, {}, {}
    for i, ms in enumerate(cfg.methods):
        outs = [r["outcomes"][i] for r in results]
        used = [o for o in outs if not (cfg.exclude_failures and o.failed)]
        if not used:
            raise SpecoptError(f"every trial of {ms.label} failed")
        stats[ms.label] = aggregate_stats([o.best_f for o in used])
        best = np.vstack([o.best_curve for o in outs])
        fvals = np.vstack([o.f_curve for o in outs])
        curves[ms.label] = CurveAggregate(ms.label, best.mean(axis=0), np.median(best, axis=0))
        iterate_curves[ms.label] = CurveAggregate(ms.label, fvals.mean(axis=0),
                                                  np.median(fvals, axis=0))
        ms_times = [o.total_ms for o in outs]
        timings[ms.label] = {"mean_ms": statistics.fmean(ms_times),
                             "median_ms": statistics.median(ms_times),
                             "max_ms": max(ms_times)}
    return ExperimentResult(cfg, results, stats, curves, iterate_curves, timings)


@dataclass(frozen=True)
class CheckResult:
    method: str
    description: str
    observed: float
    passed: bool


def evaluate_checks(result, checks=None):
    """Evaluate reference checks (``within_rel``, ``lt``, ``gt``) on method means."""
    out = []
    for chk in (result.config.checks if checks is None else checks):
        label = chk["method"]
        if label not in result.stats:
            out.append(CheckResult(label, f"{chk['op']} (method not run)", float("nan"), False))
            continue
        mean = result.stats[label].mean
        op = chk["op"]
        if op == "within_rel":
            target, tol = chk["target"], chk["tol"]
            ok = abs(mean - target) <= tol * abs(target)
            desc = f"mean within {tol:.0%} of {target:.4e}"
        elif op == "lt":
            ok = mean < chk["value"]
            desc = f"mean < {chk['value']:g}"
        else:
            ok = mean > chk["value"]
            desc = f"mean > {chk['value']:g}"
        out.append(CheckResult(label, desc, mean, bool(ok)))
    return out


def _safe_name(label):
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", label)


def _fmt(x):
    return repr(float(x))


def stats_csv(result):
    lines = ["method,mean,median,stddev"]
    for label, st in result.stats.items():
        lines.append(f"{label},{_fmt(st.mean)},{_fmt(st.median)},{_fmt(st.stddev)}")
    return "\n".join(lines) + "\n"


def curve_csv(curve):
    rows = ["iter,mean_f,median_f"]
    rows.extend(f"{k},{_fmt(a)},{_fmt(b)}" for k, (a, b) in
                enumerate(zip(curve.mean.tolist(), curve.median.tolist())))
    return "\n".join(rows) + "\n"


def environment_stamp():
    return {"python": platform.python_version(), "numpy": np.__version__,
            "package": __version__, "machine": platform.machine(),
            "system": platform.system()}


def experiment_json(result):
    doc = {
        "config": result.config.to_dict(),
        "environment": environment_stamp(),
        "stats": {label: {"mean": st.mean, "median": st.median, "stddev": st.stddev,
                          "per_trial_best": list(st.per_trial_best)}
                  for label, st in result.stats.items()},
        "trials": [{"trial": t["trial"], "instance_hash": t["instance_hash"],
                    "methods": {o.label: {"best_f": o.best_f, "stop_reason": o.stop_reason,
                                          "iters": o.n_iter, "failed": o.failed,
                                          "reason": o.reason, "invariants": o.invariants}
                                for o in t["outcomes"]}}
                   for t in result.trials],
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def write_outputs(result, outdir, fmt="both", timings=False):
    """Write ``stats.csv``, ``curves_<method>.csv`` and ``experiment.json``.

    ``curves_<method>.csv`` aggregates the best value so far;
    ``curves_<method>_iterate.csv`` aggregates ``f(x_k)`` itself. Wall times
    go to ``timings.json`` only when requested, since they are the one
    non-reproducible output.
    """
    os.makedirs(outdir, exist_ok=True)
    written = []

    def put(name, text):
        path = os.path.join(outdir, name)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        written.append(path)

    if fmt in ("csv", "both"):
        put("stats.csv", stats_csv(result))
        for label in result.curves:
            put(f"curves_{_safe_name(label)}.csv", curve_csv(result.curves[label]))
            put(f"curves_{_safe_name(label)}_iterate.csv",
                curve_csv(result.iterate_curves[label]))
    if fmt in ("json", "both"):
        put("experiment.json", experiment_json(result))
    if timings:
        put("timings.json", json.dumps(result.timings, indent=2, sort_keys=True) + "\n")
    return written


def progress_line(done, total, stream=sys.stderr):
    stream.write(f"\r  trials {done}/{total}")
    if done == total:
        stream.write("\n")
    stream.flush()

"""Command-line entry point.

Commands::

    specopt run --config FILE [--out DIR] [--set KEY=VALUE ...] [--format csv|json|both]
                [--plot] [--jobs N] [--timings]
    specopt bench [--out DIR] [--set KEY=VALUE ...] [--only NAME ...] [--jobs N] [--plot]
    specopt sg --problem FILE --x VECTOR
    specopt fdcheck --problem FILE [--samples N] [--seed S] [--x VECTOR]

Exit codes: 0 success, 1 runtime or tolerance failure, 2 bad input.
The environment variable ``SPECULAR_SEED`` overrides ``master_seed``.
"""
from __future__ import annotations

import argparse
from importlib import resources
import json
import logging
import os
import sys

import numpy as np

from . import core
from .exceptions import DomainError, FDConvergenceError, SpecoptError
from .harness import (ConfigError, config_from_dict, evaluate_checks, progress_line,
                      run_experiment, write_outputs)
from .oracles import specular_directional_exact, specular_directional_fd, specular_gradient
from .plotting import convergence_svg
from .problems import problem_from_dict
from .streams import Stream

log = logging.getLogger("specopt")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
BUNDLED = ("table_5_1", "table_5_2", "table_5_3")
FD_TOLERANCE = 1e-5


class UsageError(Exception):
    pass


def bundled_config(name):
    """Raw JSON document of a bundled table configuration."""
    text = resources.files("specopt").joinpath("configs", f"{name}.json").read_text("utf-8")
    return json.loads(text)


def _parse_value(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(doc, overrides):
    """Apply ``KEY=VALUE`` overrides; dotted keys address nested objects."""
    doc = json.loads(json.dumps(doc))
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not KEY=VALUE")
        key, raw = item.split("=", 1)
        parts = key.strip().split(".")
        node = doc
        for p in parts[:-1]:
            nxt = node.setdefault(p, {})
            if not isinstance(nxt, dict):
                raise ConfigError(f"override {key!r}: {p!r} is not an object")
            node = nxt
        node[parts[-1]] = _parse_value(raw)
    return doc


def _seed_from_env(doc):
    env = os.environ.get("SPECULAR_SEED")
    if env is not None:
        try:
            doc["master_seed"] = int(env)
        except ValueError:
            raise ConfigError(f"SPECULAR_SEED must be an integer, got {env!r}") from None
    return doc


def _load_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path} is not valid JSON: {exc}") from None


def _parse_vector(text):
    text = text.strip()
    try:
        if text.startswith("["):
            vals = json.loads(text)
        else:
            vals = [float(t) for t in text.split(",") if t.strip()]
        x = np.asarray(vals, dtype=float).ravel()
    except (ValueError, TypeError, json.JSONDecodeError):
        raise UsageError(f"cannot parse vector {text!r}") from None
    if x.size == 0 or not np.all(np.isfinite(x)):
        raise UsageError(f"vector {text!r} must be nonempty and finite")
    return x


def _load_problem(path):
    try:
        return problem_from_dict(_load_json(path))
    except (KeyError, DomainError, TypeError, ValueError) as exc:
        raise UsageError(f"invalid problem file {path}: {exc}") from None


def _run_one(doc, args, outdir):
    cfg = config_from_dict(_seed_from_env(doc))
    progress = None if args.quiet else progress_line
    if not args.quiet:
        print(f"{cfg.name}: m={cfg.m} n={cfg.n} lambda1={cfg.lambda1} lambda2={cfg.lambda2} "
              f"trials={cfg.trials}", file=sys.stderr)
    result = run_experiment(cfg, parallelism=args.jobs, progress=progress)
    write_outputs(result, outdir, getattr(args, "format", "both"), timings=args.timings)
    if args.plot:
        with open(os.path.join(outdir, "convergence.svg"), "w", encoding="utf-8",
                  newline="") as fh:
            fh.write(convergence_svg(result.curves, title=cfg.name))
    for trial, label, reason in result.failures():
        print(f"warning: trial {trial} {label} failed: {reason}", file=sys.stderr)
    return result


def cmd_run(args):
    doc = apply_overrides(_load_json(args.config), args.set)
    result = _run_one(doc, args, args.out)
    for label, st in result.stats.items():
        print(f"{label:8s} mean={st.mean:.4e} median={st.median:.4e} std={st.stddev:.4e}")
    return EXIT_OK


def cmd_bench(args):
    names = args.only or list(BUNDLED)
    advisory = bool(args.set)
    all_ok = True
    report = []
    for name in names:
        if name not in BUNDLED:
            raise UsageError(f"unknown bundled config {name!r}; choose from {BUNDLED}")
        doc = apply_overrides(bundled_config(name), args.set)
        result = _run_one(doc, args, os.path.join(args.out, name))
        report.append(f"== {name} ({result.config.trials} trials, "
                      f"K={result.config.methods[0].run.max_iter})")
        for label, st in result.stats.items():
            report.append(f"   {label:8s} mean={st.mean:.4e} median={st.median:.4e} "
                          f"std={st.stddev:.4e}")
        for chk in evaluate_checks(result):
            status = "PASS" if chk.passed else "FAIL"
            all_ok &= chk.passed
            report.append(f"   [{status}] {chk.method}: {chk.description} "
                          f"(observed {chk.observed:.4e})")
    if advisory:
        report.append("note: overrides given, tolerances are advisory only")
    text = "\n".join(report) + "\n"
    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, "bench_report.txt"), "w", encoding="utf-8") as fh:
        fh.write(text)
    print(text, end="")
    return EXIT_OK if (all_ok or advisory) else EXIT_FAIL


def cmd_sg(args):
    problem = _load_problem(args.problem)
    x = _parse_vector(args.x)
    if x.size != problem.dim:
        raise UsageError(f"x has length {x.size}, problem dimension is {problem.dim}")
    g = specular_gradient(problem, x).g
    cert = core.optimality_certificate(g)
    print(json.dumps({"x": x.tolist(), "specular_gradient": g.tolist(),
                      "norm": float(np.linalg.norm(g)), "value": problem.value(x),
                      "certificate": cert.as_dict()}, indent=2))
    return EXIT_OK


def fd_samples(problem, samples, seed=0, x=None):
    """Sample points (30% of coordinates exactly zero) and coordinate indices."""
    stream = Stream("fdcheck", seed)
    n = problem.dim
    for _ in range(samples):
        if x is None:
            pt = stream.normal(n)
            pt[stream.uniform(n) < 0.3] = 0.0
        else:
            pt = x
        i = min(int(stream.uniform(1)[0] * n), n - 1)
        yield pt, i


def fd_deviation(problem, samples, seed=0, x=None, cfg=None):
    """Max |FD estimate - exact specular partial| over sampled ``(x, e_i)``."""
    worst = {"deviation": 0.0}
    e = np.zeros(problem.dim)
    for pt, i in fd_samples(problem, samples, seed, x):
        e[:] = 0.0
        e[i] = 1.0
        exact = specular_directional_exact(problem, pt, e)
        try:
            est = specular_directional_fd(problem, pt, e, cfg)
        except FDConvergenceError as exc:
            exc.sample = {"x": pt.tolist(), "i": i}
            raise
        dev = abs(est - exact)
        if dev >= worst["deviation"]:
            worst = {"deviation": dev, "x": pt.tolist(), "i": i, "fd": est, "exact": exact}
    return worst


def cmd_fdcheck(args):
    problem = _load_problem(args.problem)
    x = None
    if args.x is not None:
        x = _parse_vector(args.x)
        if x.size != problem.dim:
            raise UsageError(f"x has length {x.size}, problem dimension is {problem.dim}")
    try:
        worst = fd_deviation(problem, args.samples, args.seed, x)
    except FDConvergenceError as exc:
        print(json.dumps({"error": str(exc), "estimates": list(exc.estimates),
                          "sample": getattr(exc, "sample", None)}, indent=2))
        return EXIT_FAIL
    ok = worst["deviation"] <= FD_TOLERANCE
    print(json.dumps({"samples": args.samples, "max_abs_deviation": worst["deviation"],
                      "tolerance": FD_TOLERANCE, "ok": ok, "worst": worst}, indent=2))
    return EXIT_OK if ok else EXIT_FAIL


def build_parser():
    parser = argparse.ArgumentParser(prog="specopt", description=__doc__.split("\n")[0],
                                     allow_abbrev=False)
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    def experiment_flags(p):
        p.add_argument("--out", default="results", help="output directory (default: results)")
        p.add_argument("--set", action="append", metavar="KEY=VALUE", default=[],
                       help="override a config entry; dotted keys reach nested fields, "
                            "values parse as JSON (repeatable)")
        p.add_argument("--jobs", type=int, default=None, metavar="N",
                       help="worker processes (default: config parallelism)")
        p.add_argument("--plot", action="store_true", help="also write an SVG convergence chart")
        p.add_argument("--timings", action="store_true",
                       help="also write timings.json (wall times are not reproducible)")
        p.add_argument("--quiet", action="store_true", help="no progress output")

    p = sub.add_parser("run", help="run an experiment config", allow_abbrev=False)
    p.add_argument("--config", required=True, help="experiment config JSON")
    p.add_argument("--format", choices=("csv", "json", "both"), default="both",
                   help="csv: stats.csv and curves; json: experiment.json; both (default)")
    experiment_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("bench", help="reproduce the bundled table configs", allow_abbrev=False)
    p.add_argument("--only", action="append", choices=BUNDLED, help="run only this table")
    experiment_flags(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("sg", help="specular gradient of a problem at a point",
                       allow_abbrev=False)
    p.add_argument("--problem", required=True, help="problem JSON file")
    p.add_argument("--x", required=True, help="point as 'a,b,c' or a JSON list "
                                              "(use --x=-1,2 for a leading minus)")
    p.set_defaults(func=cmd_sg)

    p = sub.add_parser("fdcheck", help="compare finite-difference and exact specular partials",
                       allow_abbrev=False)
    p.add_argument("--problem", required=True, help="problem JSON file")
    p.add_argument("--samples", type=int, default=100, help="number of samples (default 100)")
    p.add_argument("--seed", type=int, default=0, help="sampling seed (default 0)")
    p.add_argument("--x", default=None, help="fix the sample point instead of drawing it")
    p.set_defaults(func=cmd_fdcheck)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "jobs", None) is not None and args.jobs < 1:
        parser.error("--jobs must be >= 1")
    try:
        return args.func(args)
    except (UsageError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SpecoptError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())

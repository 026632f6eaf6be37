"""Specular gradient methods and first-order baselines.

All methods share one loop: at iterate ``x_k`` a direction ``g_k`` is formed,
the run stops if ``|g_k| < tol``, otherwise ``x_{k+1} = x_k - h_k g_k``
(optionally projected) and the best iterate is replaced on strict
improvement. Traces record ``f(x_k)`` for every visited iterate.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
import csv
import io
import json
import math
import time

import numpy as np

from .exceptions import DivergedError, DomainError, PreconditionError, UnsupportedOperation
from .oracles import as_vector, assemble, specular_gradient_fd
from .streams import ComponentSampler

MAX_ITER = "max_iter"
ZERO_GRADIENT = "zero_gradient"


@dataclass(frozen=True)
class StepSchedule:
    """Step-size rule.

    ``normalized_diminishing`` takes ``h_k = c / ((k+1) |g_k|)`` (and 0 when
    ``g_k = 0``), so every step has Euclidean length ``c / (k+1)``.
    ``constant`` takes ``h_k = h``; ``raw_diminishing`` takes ``c / (k+1)``.
    """

    kind: str = "normalized_diminishing"
    value: float = 4.0

    KINDS = ("normalized_diminishing", "constant", "raw_diminishing")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise DomainError(f"unknown schedule kind {self.kind!r}")
        if not (math.isfinite(self.value) and self.value > 0):
            raise DomainError("schedule parameter must be positive")

    @classmethod
    def normalized(cls, c=4.0):
        return cls("normalized_diminishing", c)

    @classmethod
    def constant(cls, h):
        return cls("constant", h)

    @classmethod
    def raw(cls, c):
        return cls("raw_diminishing", c)

    @property
    def normalized_steps(self):
        return self.kind == "normalized_diminishing"

    def t(self, k):
        """Step length target ``t_k`` (the step itself for non-normalized kinds)."""
        if self.kind == "constant":
            return self.value
        return self.value / (k + 1)

    def step(self, k, gnorm):
        if self.kind == "normalized_diminishing":
            return self.value / (k + 1) / gnorm if gnorm > 0 else 0.0
        return self.t(k)

    def to_dict(self):
        key = "h" if self.kind == "constant" else "c"
        return {"kind": self.kind, key: self.value}

    @classmethod
    def from_dict(cls, doc):
        kind = doc.get("kind", "normalized_diminishing")
        value = doc.get("h" if kind == "constant" else "c", doc.get("value", 4.0))
        return cls(kind, float(value))


@dataclass(frozen=True)
class RunConfig:
    max_iter: int = 1000
    tol: float = 1e-8
    schedule: StepSchedule = field(default_factory=StepSchedule.normalized)
    switch_iter: int = 10
    retain_iterates: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.max_iter < 1:
            raise DomainError("max_iter must be >= 1")
        if not self.tol > 0:
            raise DomainError("tol must be positive")
        if self.switch_iter < 0:
            raise DomainError("switch_iter must be >= 0")

    def with_(self, **kw):
        return replace(self, **kw)


@dataclass
class OptimizerTrace:
    method: str
    x0: np.ndarray
    f_values: np.ndarray
    best_f_history: np.ndarray
    grad_norms: np.ndarray
    steps: np.ndarray
    wall_times: np.ndarray
    best_x: np.ndarray
    best_f: float
    stop_reason: str
    iterates: list | None = None
    components: np.ndarray | None = None

    @property
    def n_iter(self):
        return len(self.steps)

    @property
    def total_ms(self):
        return float(self.wall_times[-1]) if len(self.wall_times) else 0.0

    def to_csv(self):
        """CSV with columns ``iter, f, grad_norm, best_f, wall_ms``.

        ``grad_norm`` is blank for the final iterate when no direction was
        formed there.
        """
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["iter", "f", "grad_norm", "best_f", "wall_ms"])
        for k in range(len(self.f_values)):
            gn = repr(float(self.grad_norms[k])) if k < len(self.grad_norms) else ""
            w.writerow([k, repr(float(self.f_values[k])), gn,
                        repr(float(self.best_f_history[k])),
                        f"{float(self.wall_times[k]):.3f}"])
        return buf.getvalue()

    def summary(self, config=None):
        return {"method": self.method, "config": config, "stop_reason": self.stop_reason,
                "best_f": self.best_f, "iters": self.n_iter, "total_ms": self.total_ms}

    def summary_json(self, config=None):
        return json.dumps(self.summary(config), indent=2, sort_keys=True)


class _Recorder:
    def __init__(self, method, x0, f0, retain):
        self.method = method
        self.x0 = x0
        self.f_values = [f0]
        self.best_hist = [f0]
        self.grad_norms = []
        self.steps = []
        self.components = []
        self.iterates = [x0.copy()] if retain else None
        self.best_x = x0
        self.best_f = f0
        self.t0 = time.perf_counter()
        self.wall = [0.0]

    def visit(self, x, fx):
        self.f_values.append(fx)
        # strict improvement only
        if fx < self.best_f:
            self.best_f = fx
            self.best_x = x
        self.best_hist.append(self.best_f)
        if self.iterates is not None:
            self.iterates.append(x.copy())
        self.wall.append((time.perf_counter() - self.t0) * 1e3)

    def finish(self, reason):
        return OptimizerTrace(
            method=self.method, x0=self.x0,
            f_values=np.array(self.f_values), best_f_history=np.array(self.best_hist),
            grad_norms=np.array(self.grad_norms), steps=np.array(self.steps),
            wall_times=np.array(self.wall), best_x=self.best_x.copy(),
            best_f=float(self.best_f), stop_reason=reason, iterates=self.iterates,
            components=np.array(self.components, dtype=np.int64) if self.components else None)


def _run(method, oracle, x0, cfg, full, partial=None, use_full=lambda k: True,
         update=None, project=None):
    """Shared iteration loop.

    ``full(x) -> (f, g)`` evaluates the value with the full direction,
    ``partial(x) -> (g, j)`` produces a sampled direction; ``use_full(k)``
    selects between them. ``update(k, x, g, gnorm) -> (x_new, h)`` applies
    the step.
    """
    x = as_vector(x0, oracle.dim, "x0").copy()
    K = cfg.max_iter
    if use_full(0):
        fx, g = full(x)
    else:
        fx, g = oracle.value(x), None
    if not math.isfinite(fx):
        raise DomainError("f(x0) is not finite")
    rec = _Recorder(method, x.copy(), float(fx), cfg.retain_iterates)
    reason = MAX_ITER
    for k in range(K):
        if g is None:
            g, j = partial(x)
            rec.components.append(j)
        gnorm = math.sqrt(float(g @ g))
        if not math.isfinite(gnorm):
            raise DivergedError(f"{method}: non-finite direction at iteration {k}",
                                rec.finish("diverged"))
        rec.grad_norms.append(gnorm)
        if gnorm < cfg.tol:
            reason = ZERO_GRADIENT
            break
        x, h = update(k, x, g, gnorm)
        if project is not None:
            x = project(x)
        rec.steps.append(h)
        if k + 1 < K and use_full(k + 1):
            fx, g = full(x)
        else:
            fx, g = oracle.value(x), None
        if not math.isfinite(fx):
            raise DivergedError(f"{method}: non-finite objective at iteration {k + 1}",
                                rec.finish("diverged"))
        rec.visit(x, float(fx))
    return rec.finish(reason)


def _specular_full(oracle, fd):
    if fd is not None:
        def full(x):
            return oracle.value(x), specular_gradient_fd(oracle, x, fd).g
        return full
    if not getattr(oracle, "exact_one_sided", False):
        raise UnsupportedOperation(
            f"{type(oracle).__name__} has no exact one-sided partials; pass fd=FDConfig()")

    def full(x):
        fx, plus, minus = oracle.value_and_partials(x)
        return fx, assemble(plus, minus)
    return full


def _specular_partial(oracle, cfg):
    sampler = ComponentSampler(cfg.seed, oracle.n_components)

    def partial(x):
        j = sampler()
        plus, minus = oracle.component_one_sided_partials(j, x)
        return assemble(plus, minus), j
    return partial


def _scheduled(schedule):
    def update(k, x, g, gnorm):
        h = schedule.step(k, gnorm)
        return x - h * g, h
    return update


def speg(oracle, x0, cfg=None, fd=None):
    """Specular gradient method.

    Parameters
    ----------
    oracle : Problem
        Objective with exact one-sided partials, or any value oracle when
        ``fd`` (an :class:`FDConfig`) enables the finite-difference fallback.
    x0 : array_like
        Starting point.
    cfg : RunConfig, optional
    """
    cfg = cfg or RunConfig()
    return _run("speg", oracle, x0, cfg, _specular_full(oracle, fd),
                update=_scheduled(cfg.schedule))


def sspeg(oracle, x0, cfg=None):
    """Stochastic specular gradient method.

    Each iteration draws a component uniformly from the stream seeded by
    ``cfg.seed`` and steps along its specular gradient. The best iterate is
    judged on the full objective.
    """
    cfg = cfg or RunConfig()
    return _run("sspeg", oracle, x0, cfg, _specular_full(oracle, None),
                partial=_specular_partial(oracle, cfg), use_full=lambda k: False,
                update=_scheduled(cfg.schedule))


def hspeg(oracle, x0, cfg=None):
    """Hybrid method: full specular gradients for the first ``cfg.switch_iter``
    iterations, sampled components afterwards, with one shared step index."""
    cfg = cfg or RunConfig()
    switch = cfg.switch_iter
    return _run("hspeg", oracle, x0, cfg, _specular_full(oracle, None),
                partial=_specular_partial(oracle, cfg), use_full=lambda k: k < switch,
                update=_scheduled(cfg.schedule))


class EuclideanBall:
    def __init__(self, center, radius):
        self.center = as_vector(center, name="center")
        if not radius > 0:
            raise DomainError("radius must be positive")
        self.radius = float(radius)

    def project(self, x):
        d = x - self.center
        dist = math.sqrt(float(d @ d))
        if dist <= self.radius:
            return x
        return self.center + d * (self.radius / dist)

    def contains(self, x, tol=1e-12):
        return float(np.linalg.norm(x - self.center)) <= self.radius * (1 + tol)


class Box:
    def __init__(self, lo, hi):
        self.lo = as_vector(lo, name="lo")
        self.hi = as_vector(hi, self.lo.size, "hi")
        if np.any(self.lo > self.hi):
            raise DomainError("box needs lo <= hi")

    def project(self, x):
        return np.clip(x, self.lo, self.hi)

    def contains(self, x, tol=0.0):
        return bool(np.all(x >= self.lo - tol) and np.all(x <= self.hi + tol))


def projected_speg(oracle, x0, cfg=None, proj=None):
    """Specular gradient method followed by projection onto ``proj``."""
    cfg = cfg or RunConfig()
    if proj is None:
        raise PreconditionError("projected_speg needs a projection")
    x0 = as_vector(x0, oracle.dim, "x0")
    if not proj.contains(x0):
        raise PreconditionError("x0 must lie in the feasible set")
    trace = _run("projected_speg", oracle, x0, cfg, _specular_full(oracle, None),
                 update=_scheduled(cfg.schedule), project=proj.project)
    return trace


def _classical_full(oracle):
    return oracle.value_and_classical_gradient


def gd(oracle, x0, cfg=None, lr=0.001):
    """Gradient descent with constant step ``lr`` and ``sign(0) = 0``."""
    cfg = cfg or RunConfig()
    return _run("gd", oracle, x0, cfg, _classical_full(oracle),
                update=_scheduled(StepSchedule.constant(lr)))


def subgradient_baseline(oracle, x0, cfg=None):
    """Classical subgradient method: SPEG with the ``sign(0) = 0`` selection
    in place of the angular mean."""
    cfg = cfg or RunConfig()
    return _run("subgradient", oracle, x0, cfg, _classical_full(oracle),
                update=_scheduled(cfg.schedule))


def adam(oracle, x0, cfg=None, beta1=0.9, beta2=0.999, eps=1e-8, lr=0.01):
    """Adam on the ``sign(0) = 0`` gradient, with bias-corrected moments."""
    cfg = cfg or RunConfig()
    n = oracle.dim
    state = {"m": np.zeros(n), "v": np.zeros(n)}

    def update(k, x, g, gnorm):
        state["m"] = beta1 * state["m"] + (1 - beta1) * g
        state["v"] = beta2 * state["v"] + (1 - beta2) * (g * g)
        mhat = state["m"] / (1 - beta1 ** (k + 1))
        vhat = state["v"] / (1 - beta2 ** (k + 1))
        return x - lr * mhat / (np.sqrt(vhat) + eps), lr

    return _run("adam", oracle, x0, cfg, _classical_full(oracle), update=update)


METHODS = {
    "speg": speg,
    "sspeg": sspeg,
    "hspeg": hspeg,
    "gd": gd,
    "adam": adam,
    "subgradient": subgradient_baseline,
}
STOCHASTIC = {"sspeg", "hspeg"}


def verify_basic_inequality(trace, oracle, x_star):
    """Largest violation of the best-iterate bound along a trace.

    For each ``k`` compares ``min_{l<=k} f(x_l) - f(x*)`` with
    ``(|x0 - x*|^2 + sum_{l<=k} h_l^2 |g_l|^2) / (2 sum_{l<=k} h_l)`` and
    returns the maximum of ``lhs - rhs`` (``-inf`` when no step was taken).
    """
    if trace.iterates is None:
        raise PreconditionError("trace must retain iterates (retain_iterates=True)")
    x_star = as_vector(x_star, oracle.dim, "x_star")
    f_star = oracle.value(x_star)
    steps = np.asarray(trace.steps)
    if steps.size == 0:
        return float("-inf")
    gn = np.asarray(trace.grad_norms[:steps.size])
    d0 = float(np.sum((trace.x0 - x_star) ** 2))
    s1 = np.cumsum(steps)
    s2 = np.cumsum(steps ** 2 * gn ** 2)
    best = np.minimum.accumulate(trace.f_values[:steps.size])
    ok = s1 > 0
    if not np.any(ok):
        return float("-inf")
    lhs = best[ok] - f_star
    rhs = (d0 + s2[ok]) / (2 * s1[ok])
    return float(np.max(lhs - rhs))


def trace_invariants(trace, schedule=None):
    """Check best-iterate monotonicity and, for normalized schedules,
    ``h_k |g_k| == c / (k+1)``.

    Returns a dict with ``best_monotone`` and ``step_compliance_max_err``
    (``None`` when the schedule is not normalized).
    """
    best = trace.best_f_history
    monotone = bool(np.all(best[1:] <= best[:-1])) and \
        trace.best_f == float(np.min(trace.f_values))
    err = None
    if schedule is not None and schedule.normalized_steps and trace.n_iter:
        k = np.arange(trace.n_iter)
        gn = trace.grad_norms[:trace.n_iter]
        pos = gn > 0
        target = schedule.value / (k + 1)
        err = float(np.max(np.abs(trace.steps[pos] * gn[pos] - target[pos]), initial=0.0))
    return {"best_monotone": monotone, "step_compliance_max_err": err}

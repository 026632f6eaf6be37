"""Problem oracles and the operations built on them.

A problem oracle exposes the objective value and, when available, exact
one-sided partial derivatives. Objectives of the finite-sum form
``f = (1/m) * sum_j f_j`` also expose their components, which the stochastic
methods sample from.
"""
from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np

from . import core
from .exceptions import DomainError, FDConvergenceError, UnsupportedOperation

EXACT = "exact"
FINITE_DIFFERENCE = "finite_difference"


def as_vector(x, dim=None, name="x"):
    """Return ``x`` as a finite 1-D float array, optionally of length ``dim``."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim != 1:
        raise DomainError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if dim is not None and arr.shape[0] != dim:
        raise DomainError(f"{name} has length {arr.shape[0]}, expected {dim}")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} must be finite")
    return arr


class Problem:
    """Base class for objective oracles.

    Subclasses set ``dim`` and implement :meth:`value`. Those with exact
    one-sided partials also implement :meth:`one_sided_partials` and
    :meth:`one_sided_directional` and set ``exact_one_sided = True``.
    """

    dim: int
    n_components: int = 1
    exact_one_sided: bool = False
    value_only: bool = True

    def value(self, x):
        raise NotImplementedError

    def __call__(self, x):
        return self.value(x)

    def one_sided_partials(self, x):
        """Return arrays ``(plus, minus)`` of coordinate one-sided partials."""
        raise UnsupportedOperation(f"{type(self).__name__} has no exact one-sided partials")

    def one_sided_directional(self, x, v):
        """Return ``(plus, minus)`` one-sided derivatives along ``v``."""
        raise UnsupportedOperation(f"{type(self).__name__} has no exact one-sided partials")

    def classical_gradient(self, x):
        """Subgradient selection used by the classical baselines."""
        raise UnsupportedOperation(f"{type(self).__name__} has no classical gradient")

    def value_and_partials(self, x):
        plus, minus = self.one_sided_partials(x)
        return self.value(x), plus, minus

    def value_and_classical_gradient(self, x):
        return self.value(x), self.classical_gradient(x)

    def component(self, j):
        """The ``j``-th component (0-based). A monolithic problem is its own."""
        if not 0 <= j < self.n_components:
            raise IndexError(f"component {j} out of range for m={self.n_components}")
        return self

    def component_one_sided_partials(self, j, x):
        return self.component(j).one_sided_partials(x)

    def component_value(self, j, x):
        return self.component(j).value(x)


class FunctionOracle(Problem):
    """Value-only oracle around a Python callable.

    Only the finite-difference estimator applies; exact specular gradients
    raise :class:`UnsupportedOperation`.
    """

    def __init__(self, func, dim):
        if dim < 1:
            raise DomainError("dim must be >= 1")
        self.func = func
        self.dim = int(dim)

    def value(self, x):
        return float(self.func(as_vector(x, self.dim)))


@dataclass(frozen=True)
class SpecularGradient:
    g: np.ndarray
    at: np.ndarray
    source: str = EXACT
    # shrink counts per coordinate, only set by the finite-difference path
    shrinks: tuple = field(default=(), compare=False)

    @property
    def norm(self):
        return float(np.linalg.norm(self.g))


# rounding-error multiplier for the quotient noise estimate
_ROUNDOFF = 8 * np.finfo(float).eps


@dataclass(frozen=True)
class FDConfig:
    """Step schedule and stopping rule of the finite-difference estimator.

    Successive estimates must agree within ``max(tol, noise)``, where
    ``noise = 8 eps max|f| / (h |v|)`` is the rounding error of the
    quotients at step ``h``. Once ``noise`` exceeds ``noise_cap`` the
    estimate is dominated by rounding and the estimator gives up.
    """
    h0: float = 1e-3
    rho: float = 0.5
    tol: float = 1e-8
    max_shrinks: int = 40
    noise_cap: float = 1e-6

    def __post_init__(self):
        if not self.h0 > 0:
            raise DomainError("h0 must be positive")
        if not 0 < self.rho < 1:
            raise DomainError("rho must lie in (0, 1)")
        if not self.tol > 0:
            raise DomainError("tol must be positive")
        if self.max_shrinks < 1:
            raise DomainError("max_shrinks must be >= 1")
        if not self.noise_cap > 0:
            raise DomainError("noise_cap must be positive")


def assemble(plus, minus):
    """Coordinatewise specular partials from one-sided partial arrays."""
    g = np.array(plus, dtype=float, copy=True)
    kink = plus != minus
    if np.any(kink):
        g[kink] = core.angular_mean(plus[kink], minus[kink])
    return g


def _require_exact(oracle):
    if not getattr(oracle, "exact_one_sided", False):
        raise UnsupportedOperation(
            f"{type(oracle).__name__} does not expose exact one-sided partials")


def specular_gradient(oracle, x):
    """Specular gradient of ``oracle`` at ``x`` from exact one-sided partials."""
    _require_exact(oracle)
    x = as_vector(x, oracle.dim)
    plus, minus = oracle.one_sided_partials(x)
    return SpecularGradient(assemble(plus, minus), x, EXACT)


def component_specular_gradient(oracle, j, x):
    """Specular gradient of the ``j``-th component (0-based) at ``x``."""
    if not 0 <= j < oracle.n_components:
        raise IndexError(f"component {j} out of range for m={oracle.n_components}")
    _require_exact(oracle)
    x = as_vector(x, oracle.dim)
    plus, minus = oracle.component_one_sided_partials(j, x)
    return SpecularGradient(assemble(plus, minus), x, EXACT)


def specular_directional_exact(oracle, x, v):
    """``|v| * A(d+ / |v|, d- / |v|)`` from the exact one-sided derivatives."""
    _require_exact(oracle)
    v = as_vector(v, oracle.dim, "v")
    vn = float(np.linalg.norm(v))
    if vn == 0.0:
        return core.zero_direction_specular()
    plus, minus = oracle.one_sided_directional(as_vector(x, oracle.dim), v)
    return core.specular_directional((plus, minus), vn)


def _fd_bracket(f, x, v, fx, h, vn):
    hv = h * v
    f_fwd = f(x + hv)
    f_bwd = f(x - hv)
    dq_plus = f_fwd - fx
    dq_minus = fx - f_bwd
    hv2 = float(hv @ hv)
    norm_u = math.sqrt(hv2 + dq_minus * dq_minus)
    norm_v = math.sqrt(hv2 + dq_plus * dq_plus)
    est = (dq_plus / h * norm_u + dq_minus / h * norm_v) / (norm_u + norm_v)
    noise = _ROUNDOFF * max(abs(fx), abs(f_fwd), abs(f_bwd)) / (h * vn)
    return est, noise


def specular_directional_fd(oracle, x, v, cfg=None, return_shrinks=False):
    """Estimate the specular directional derivative from function values.

    The weighted quotient of the limit definition is evaluated at
    ``h = h0 * rho**k`` for ``k = 0, 1, ...`` until two successive values
    differ by less than ``cfg.tol`` (or the rounding floor, see
    :class:`FDConfig`); the last value is returned.

    Raises
    ------
    FDConvergenceError
        If no two successive estimates agree before ``cfg.max_shrinks``
        shrinks or before rounding error exceeds ``cfg.noise_cap``.
    """
    cfg = cfg or FDConfig()
    x = as_vector(x, oracle.dim)
    v = as_vector(v, oracle.dim, "v")
    vn = float(np.linalg.norm(v))
    if vn == 0.0:
        return (0.0, 0) if return_shrinks else 0.0
    f = oracle.value
    fx = f(x)
    h = cfg.h0
    prev, _ = _fd_bracket(f, x, v, fx, h, vn)
    for k in range(1, cfg.max_shrinks + 1):
        h *= cfg.rho
        est, noise = _fd_bracket(f, x, v, fx, h, vn)
        if noise > cfg.noise_cap:
            raise FDConvergenceError(
                f"finite-difference estimate hit the rounding floor after {k} shrinks "
                f"(h={h:.3g}) without stabilizing", (prev, est))
        if abs(est - prev) < max(cfg.tol, noise):
            return (est, k) if return_shrinks else est
        last, prev = prev, est
    raise FDConvergenceError(
        f"finite-difference estimate did not stabilize after {cfg.max_shrinks} shrinks",
        (last, prev))


def specular_gradient_fd(oracle, x, cfg=None):
    """Specular gradient assembled from finite-difference partials."""
    x = as_vector(x, oracle.dim)
    g = np.empty(oracle.dim)
    shrinks = []
    e = np.zeros(oracle.dim)
    for i in range(oracle.dim):
        e[i] = 1.0
        g[i], k = specular_directional_fd(oracle, x, e, cfg, return_shrinks=True)
        shrinks.append(k)
        e[i] = 0.0
    return SpecularGradient(g, x, FINITE_DIFFERENCE, tuple(shrinks))


@dataclass(frozen=True)
class SubgradientCheck:
    holds: bool
    slack: float


def check_subgradient_inequality(oracle, x, w, tol=1e-9, sg=None):
    """Test ``f(w) >= f(x) + sg(x) . (w - x)`` with tolerance ``tol * (1 + |f(w)|)``.

    ``sg`` may be passed to reuse a specular gradient already computed at ``x``.
    """
    x = as_vector(x, oracle.dim)
    w = as_vector(w, oracle.dim, "w")
    g = specular_gradient(oracle, x).g if sg is None else np.asarray(sg, dtype=float)
    fw = oracle.value(w)
    slack = fw - oracle.value(x) - float(g @ (w - x))
    return SubgradientCheck(slack >= -tol * (1.0 + abs(fw)), slack)


def unbiasedness_gap(oracle, x):
    """``|(1/m) sum_j sg f_j(x) - sg f(x)|``.

    Zero wherever ``f`` is smooth. At kinks the angular mean is nonlinear, so
    the average of component specular gradients can differ from the full one.
    """
    x = as_vector(x, oracle.dim)
    acc = np.zeros(oracle.dim)
    for j in range(oracle.n_components):
        acc += component_specular_gradient(oracle, j, x).g
    acc /= oracle.n_components
    return float(np.linalg.norm(acc - specular_gradient(oracle, x).g))

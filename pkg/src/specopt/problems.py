"""Bundled objectives with exact one-sided partials.

``ElasticNet`` is the benchmark objective

    f(x) = |Ax - b|^2 / (2m) + (lambda2 / 2) |x|^2 + lambda1 |x|_1,

split into the components
``f_j(x) = (a_j . x - b_j)^2 / 2 + (lambda2 / 2) |x|^2 + lambda1 |x|_1``
so that ``f = (1/m) sum_j f_j`` and every component carries the full
regularizer.
"""
from __future__ import annotations

from dataclasses import dataclass
import hashlib
import math

import numpy as np

from .exceptions import DomainError
from .oracles import Problem, as_vector
from .streams import Stream


def _as_matrix(a, name):
    arr = np.asarray(a, dtype=float)
    if arr.ndim != 2 or 0 in arr.shape:
        raise DomainError(f"{name} must be a nonempty 2-D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} must be finite")
    return arr


def _nonneg(value, name):
    value = float(value)
    if not (math.isfinite(value) and value >= 0):
        raise DomainError(f"{name} must be finite and >= 0, got {value}")
    return value


def _l1_sides(x):
    """One-sided derivatives of ``|x_i|`` along ``+e_i``: sign off zero, +-1 at zero."""
    d = np.sign(x)
    zero = d == 0
    return np.where(zero, 1.0, d), np.where(zero, -1.0, d)


def _l1_directional(x, v):
    """One-sided derivatives of ``|x|_1`` along ``v``."""
    d = np.sign(x)
    zero = d == 0
    smooth = float(d[~zero] @ v[~zero])
    kink = float(np.abs(v[zero]).sum())
    return smooth + kink, smooth - kink


class ElasticNet(Problem):
    exact_one_sided = True
    value_only = False

    def __init__(self, A, b, lambda1=0.0, lambda2=0.0):
        self.A = _as_matrix(A, "A")
        self.b = as_vector(b, self.A.shape[0], "b")
        self.lambda1 = _nonneg(lambda1, "lambda1")
        self.lambda2 = _nonneg(lambda2, "lambda2")
        self.m, self.dim = self.A.shape
        self.n_components = self.m
        self.A.flags.writeable = False
        self.b.flags.writeable = False

    @property
    def n(self):
        return self.dim

    def __repr__(self):
        return (f"ElasticNet(m={self.m}, n={self.n}, lambda1={self.lambda1}, "
                f"lambda2={self.lambda2})")

    # The helpers below take explicit (A, b) so that component j reuses the
    # exact arithmetic of the full objective on the row slice A[j:j+1].

    def _value(self, A, b, x):
        r = A @ x - b
        return (r @ r) / (2 * A.shape[0]) + 0.5 * self.lambda2 * (x @ x) \
            + self.lambda1 * np.abs(x).sum()

    def _smooth_grad(self, A, b, x):
        return A.T @ (A @ x - b) / A.shape[0] + self.lambda2 * x

    def _partials(self, A, b, x):
        s = self._smooth_grad(A, b, x)
        up, down = _l1_sides(x)
        return s + self.lambda1 * up, s + self.lambda1 * down

    def smooth_gradient(self, x):
        return self._smooth_grad(self.A, self.b, as_vector(x, self.dim))

    def value(self, x):
        return float(self._value(self.A, self.b, as_vector(x, self.dim)))

    def one_sided_partials(self, x):
        return self._partials(self.A, self.b, as_vector(x, self.dim))

    def one_sided_partial(self, x, i, sign):
        """Single one-sided partial along ``e_i``; ``sign`` is ``"+"``/``+1`` or ``"-"``/``-1``."""
        if not 0 <= i < self.dim:
            raise IndexError(f"coordinate {i} out of range for n={self.dim}")
        if sign not in ("+", "-", 1, -1):
            raise DomainError("sign must be '+' or '-'")
        plus, minus = self.one_sided_partials(x)
        return float(plus[i] if sign in ("+", 1) else minus[i])

    def one_sided_directional(self, x, v):
        x = as_vector(x, self.dim)
        v = as_vector(v, self.dim, "v")
        smooth = float(self._smooth_grad(self.A, self.b, x) @ v)
        up, down = _l1_directional(x, v)
        return smooth + self.lambda1 * up, smooth + self.lambda1 * down

    def classical_gradient(self, x):
        x = as_vector(x, self.dim)
        return self._smooth_grad(self.A, self.b, x) + self.lambda1 * np.sign(x)

    def value_and_partials(self, x):
        x = as_vector(x, self.dim)
        r = self.A @ x - self.b
        f = (r @ r) / (2 * self.m) + 0.5 * self.lambda2 * (x @ x) \
            + self.lambda1 * np.abs(x).sum()
        s = self.A.T @ r / self.m + self.lambda2 * x
        up, down = _l1_sides(x)
        return float(f), s + self.lambda1 * up, s + self.lambda1 * down

    def value_and_classical_gradient(self, x):
        x = as_vector(x, self.dim)
        r = self.A @ x - self.b
        f = (r @ r) / (2 * self.m) + 0.5 * self.lambda2 * (x @ x) \
            + self.lambda1 * np.abs(x).sum()
        g = self.A.T @ r / self.m + self.lambda2 * x + self.lambda1 * np.sign(x)
        return float(f), g

    def component(self, j):
        if not 0 <= j < self.m:
            raise IndexError(f"component {j} out of range for m={self.m}")
        return ElasticNet(self.A[j:j + 1], self.b[j:j + 1], self.lambda1, self.lambda2)

    def component_value(self, j, x):
        return float(self._value(self.A[j:j + 1], self.b[j:j + 1], as_vector(x, self.dim)))

    def component_one_sided_partials(self, j, x):
        if not 0 <= j < self.m:
            raise IndexError(f"component {j} out of range for m={self.m}")
        return self._partials(self.A[j:j + 1], self.b[j:j + 1], x)

    def smooth_minimizer(self):
        """Unique minimizer when ``lambda1 == 0`` and the problem is strongly convex."""
        if self.lambda1 != 0:
            raise DomainError("closed-form minimizer needs lambda1 == 0")
        H = self.A.T @ self.A / self.m + self.lambda2 * np.eye(self.dim)
        return np.linalg.solve(H, self.A.T @ self.b / self.m)

    def to_dict(self):
        return {"type": "elastic_net", "A": self.A.tolist(), "b": self.b.tolist(),
                "lambda1": self.lambda1, "lambda2": self.lambda2}

    def fingerprint(self):
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.A).tobytes())
        h.update(self.b.tobytes())
        h.update(np.array([self.lambda1, self.lambda2]).tobytes())
        return h.hexdigest()


class AbsNorm(Problem):
    """``f(x) = |x|_1``; minimized at the origin with value 0."""

    exact_one_sided = True
    value_only = False
    f_min = 0.0

    def __init__(self, dim=1):
        if dim < 1:
            raise DomainError("dim must be >= 1")
        self.dim = int(dim)

    def value(self, x):
        return float(np.abs(as_vector(x, self.dim)).sum())

    def one_sided_partials(self, x):
        return _l1_sides(as_vector(x, self.dim))

    def one_sided_directional(self, x, v):
        return _l1_directional(as_vector(x, self.dim), as_vector(v, self.dim, "v"))

    def classical_gradient(self, x):
        return np.sign(as_vector(x, self.dim))

    def to_dict(self):
        return {"type": "toy", "name": "abs", "dim": self.dim}


class MaxAffine(Problem):
    """``f(x) = max_j (c_j . x + d_j)``.

    A piece counts as active when it is within ``active_tol * (1 + |f(x)|)``
    of the maximum.
    """

    exact_one_sided = True
    value_only = False

    def __init__(self, C, d, active_tol=1e-12):
        self.C = _as_matrix(C, "C")
        self.d = as_vector(d, self.C.shape[0], "d")
        self.dim = self.C.shape[1]
        self.active_tol = active_tol

    def _active(self, x):
        vals = self.C @ x + self.d
        top = vals.max()
        return vals >= top - self.active_tol * (1.0 + abs(top)), top

    def value(self, x):
        return float((self.C @ as_vector(x, self.dim) + self.d).max())

    def one_sided_partials(self, x):
        active, _ = self._active(as_vector(x, self.dim))
        Ca = self.C[active]
        return Ca.max(axis=0), Ca.min(axis=0)

    def one_sided_directional(self, x, v):
        active, _ = self._active(as_vector(x, self.dim))
        slopes = self.C[active] @ as_vector(v, self.dim, "v")
        return float(slopes.max()), float(slopes.min())

    def classical_gradient(self, x):
        x = as_vector(x, self.dim)
        return self.C[int(np.argmax(self.C @ x + self.d))].copy()

    def to_dict(self):
        return {"type": "toy", "name": "max_affine", "C": self.C.tolist(),
                "d": self.d.tolist()}


class Quadratic(Problem):
    """``f(x) = x.Qx / 2 - q.x`` with ``Q`` symmetric positive semidefinite."""

    exact_one_sided = True
    value_only = False

    def __init__(self, Q, q=None):
        self.Q = _as_matrix(Q, "Q")
        n = self.Q.shape[0]
        if self.Q.shape != (n, n) or not np.allclose(self.Q, self.Q.T, rtol=0, atol=1e-12):
            raise DomainError("Q must be square and symmetric")
        if np.linalg.eigvalsh(self.Q).min() < -1e-10:
            raise DomainError("Q must be positive semidefinite")
        self.q = np.zeros(n) if q is None else as_vector(q, n, "q")
        self.dim = n

    def value(self, x):
        x = as_vector(x, self.dim)
        return float(0.5 * x @ self.Q @ x - self.q @ x)

    def gradient(self, x):
        return self.Q @ as_vector(x, self.dim) - self.q

    def one_sided_partials(self, x):
        g = self.gradient(x)
        return g, g.copy()

    def one_sided_directional(self, x, v):
        s = float(self.gradient(x) @ as_vector(v, self.dim, "v"))
        return s, s

    def classical_gradient(self, x):
        return self.gradient(x)

    def to_dict(self):
        return {"type": "toy", "name": "quadratic", "Q": self.Q.tolist(), "q": self.q.tolist()}


def toy_problems(dim=3):
    """Catalog of the small test objectives, keyed by name.

    ``abs_1d`` and ``max_affine_1d`` are the one-dimensional variants;
    ``max_affine_1d`` is ``max(x, 1 - x)`` with minimizer 0.5.
    """
    rng = Stream("toy", dim)
    C = rng.normal(4 * dim).reshape(4, dim)
    d = rng.normal(4)
    M = rng.normal(dim * dim).reshape(dim, dim)
    return {
        "abs": AbsNorm(dim),
        "abs_1d": AbsNorm(1),
        "max_affine": MaxAffine(C, d),
        "max_affine_1d": MaxAffine([[1.0], [-1.0]], [0.0, 1.0]),
        "quadratic": Quadratic(M @ M.T + np.eye(dim), rng.normal(dim)),
        "quadratic_identity": Quadratic(np.eye(dim)),
    }


@dataclass(frozen=True)
class InstanceSpec:
    m: int
    n: int
    lambda1: float = 0.0
    lambda2: float = 0.0
    seed: int = 0
    trial_index: int = 0

    def __post_init__(self):
        if self.m < 1 or self.n < 1:
            raise DomainError("m and n must be positive")
        if not 0 <= self.seed < 2 ** 64:
            raise DomainError("seed must be a 64-bit unsigned integer")
        if self.trial_index < 0:
            raise DomainError("trial_index must be >= 0")
        _nonneg(self.lambda1, "lambda1")
        _nonneg(self.lambda2, "lambda2")


def generate_instance(spec):
    """Draw ``(A, b, x0)`` i.i.d. N(0, 1) from the trial's stream.

    The stream label is ``"instance:<seed>:<trial_index>"``; the first
    ``m*n`` normals fill ``A`` row-major, the next ``m`` fill ``b`` and the
    last ``n`` fill ``x0``.
    """
    m, n = spec.m, spec.n
    z = Stream("instance", spec.seed, spec.trial_index).normal(m * n + m + n)
    A = z[:m * n].reshape(m, n)
    b = z[m * n:m * n + m]
    x0 = z[m * n + m:].copy()
    return ElasticNet(A, b, spec.lambda1, spec.lambda2), x0


def problem_from_dict(doc):
    """Build a problem from its JSON document."""
    kind = doc.get("type")
    if kind == "elastic_net":
        return ElasticNet(doc["A"], doc["b"], doc.get("lambda1", 0.0), doc.get("lambda2", 0.0))
    if kind == "toy":
        name = doc.get("name")
        if name == "abs":
            return AbsNorm(int(doc.get("dim", 1)))
        if name == "max_affine":
            return MaxAffine(doc["C"], doc["d"])
        if name == "quadratic":
            return Quadratic(doc["Q"], doc.get("q"))
        raise DomainError(f"unknown toy problem {name!r}")
    raise DomainError(f"unknown problem type {kind!r}")


def problem_to_dict(problem):
    return problem.to_dict()

"""Scalar kernels of specular differentiation.

The specular derivative at a kink is the slope of the bisector of the two
one-sided tangent lines. For slopes ``alpha`` and ``beta`` the bisector
slope has the closed form

    A(alpha, beta) = (alpha * c_a + beta * c_b) / (c_a + c_b),
    c_a = 1 / sqrt(1 + alpha**2),  c_b = 1 / sqrt(1 + beta**2),

and the directional derivative along ``v`` is ``|v| * A(d+ / |v|, d- / |v|)``.

All functions accept floats or numpy arrays and broadcast elementwise.
"""
from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np

from .exceptions import DomainError

#: Slopes above this magnitude use the rescaled form of the direction cosines.
LARGE_SLOPE = 1e8
#: Default absolute tolerance of :func:`optimality_certificate`.
CERTIFICATE_TOL = 1e-12


@dataclass(frozen=True)
class OneSidedSlopes:
    """Right (``plus``) and left (``minus``) directional derivatives."""

    plus: float
    minus: float

    def __post_init__(self):
        _require_finite(self.plus, "plus")
        _require_finite(self.minus, "minus")

    def check_convex(self):
        """Raise :class:`DomainError` unless ``minus <= plus``."""
        if not self.minus <= self.plus:
            raise DomainError(
                f"convex slopes need minus <= plus, got {self.minus} > {self.plus}")
        return self


def _require_finite(value, name):
    arr = np.asarray(value, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} must be finite, got {value!r}")
    return arr


def _direction_cosines(a):
    """Return ``(a / sqrt(1 + a^2), 1 / sqrt(1 + a^2))`` without overflow."""
    big = np.abs(a) > LARGE_SLOPE
    if not np.any(big):
        c = 1.0 / np.sqrt(1.0 + a * a)
        return a * c, c
    safe = np.where(big, 1.0, a)
    inv = np.where(big, 1.0 / np.where(big, a, 1.0), 0.0)
    root = np.sqrt(1.0 + inv * inv)
    c = np.where(big, np.abs(inv) / root, 1.0 / np.sqrt(1.0 + safe * safe))
    s = np.where(big, np.sign(a) / root, safe * c)
    return s, c


def angular_mean(alpha, beta):
    """Slope of the bisector of two lines with slopes ``alpha`` and ``beta``.

    The result is symmetric in its arguments, lies between them, returns the
    common value when they agree and is zero when ``alpha == -beta``.

    Raises
    ------
    DomainError
        If either argument is NaN or infinite.
    """
    a = _require_finite(alpha, "alpha")
    b = _require_finite(beta, "beta")
    sa, ca = _direction_cosines(a)
    sb, cb = _direction_cosines(b)
    out = (sa + sb) / (ca + cb)
    # roundoff can push the ratio one ulp outside [min, max]
    out = np.clip(out, np.minimum(a, b), np.maximum(a, b))
    if out.ndim == 0:
        return float(out)
    return out


def specular_directional(slopes, v_norm):
    """Specular directional derivative from one-sided slopes.

    Parameters
    ----------
    slopes : OneSidedSlopes or tuple of (plus, minus)
        One-sided directional derivatives along ``v``. Arrays are allowed.
    v_norm : float
        Euclidean norm of the direction, strictly positive.
    """
    if isinstance(slopes, OneSidedSlopes):
        plus, minus = slopes.plus, slopes.minus
    else:
        plus, minus = slopes
    if not (np.isfinite(v_norm) and v_norm > 0):
        raise DomainError(f"v_norm must be positive and finite, got {v_norm!r}")
    plus = _require_finite(plus, "plus")
    minus = _require_finite(minus, "minus")
    if v_norm == 1.0:
        return angular_mean(plus, minus)
    return v_norm * angular_mean(plus / v_norm, minus / v_norm)


def zero_direction_specular():
    """Specular derivative along the zero direction, which is 0 by definition."""
    return 0.0


@dataclass(frozen=True)
class Certificate:
    sum_bound_ok: bool
    sum_value: float
    bound: float

    def as_dict(self):
        return {"sum_bound_ok": self.sum_bound_ok, "sum_value": self.sum_value,
                "bound": self.bound}


def optimality_certificate(sg, tol=CERTIFICATE_TOL):
    """Necessary optimality test ``|sum_i sg_i| <= sqrt(n)``.

    Any local minimizer or maximizer passes; failing proves the point is
    neither.
    """
    g = _require_finite(sg, "sg").ravel()
    if g.size == 0:
        raise DomainError("specular gradient must be nonempty")
    total = abs(math.fsum(g.tolist()))
    bound = math.sqrt(g.size)
    return Certificate(total <= bound + tol, total, bound)

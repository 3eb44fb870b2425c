"""Decimal-digit budgets for the transform and validation of moment sequences."""
from __future__ import annotations

import math
from dataclasses import dataclass
from decimal import Decimal, localcontext
from typing import TYPE_CHECKING, Union

import numpy as np

from .errors import DegenerateDistributionError

if TYPE_CHECKING:
    from .transform import MomentVector

__all__ = [
    "MIN_DIGITS",
    "Superpolynomial",
    "Polynomial",
    "Degenerate",
    "DecayClass",
    "PrecisionBudget",
    "required_digits",
    "rule_of_thumb_digits",
    "classify_decay",
    "check_complete_monotonicity",
]

MIN_DIGITS = 16


@dataclass(frozen=True)
class Superpolynomial:
    """``M_n <= 10**(-c * n**delta_exp)``."""

    c: float
    delta_exp: float

    def __post_init__(self):
        if self.c <= 0:
            raise ValueError("c must be positive")
        if not 0 < self.delta_exp < 1:
            raise ValueError("delta_exp must lie in (0, 1)")


@dataclass(frozen=True)
class Polynomial:
    """``M_n <= (n+1)**(-s)``."""

    s: float

    def __post_init__(self):
        if self.s < 1:
            raise ValueError("s must be at least 1")


@dataclass(frozen=True)
class Degenerate:
    """Moments of a point mass at ``nu``."""

    nu: Decimal


DecayClass = Union[Superpolynomial, Polynomial, Degenerate]


@dataclass(frozen=True)
class PrecisionBudget:
    n: int
    digits: int
    basis: object  # "rule-of-thumb" or the fitted DecayClass


def _floor_digits(n: int, b: float) -> int:
    return max(math.ceil(b), math.ceil(n / 2), MIN_DIGITS)


def required_digits(n: int, decay: DecayClass) -> PrecisionBudget:
    """Digits needed for order ``n`` given how fast the moments decay.

    The matrix alone needs about ``n/2`` digits; moments that decay fast add
    ``c n**delta`` digits, polynomially decaying ones ``(s-1) log10 n``. The
    result never drops below ``ceil(n/2)`` nor below 16.
    """
    if n < 1:
        raise ValueError("order n must be at least 1")
    if isinstance(decay, Degenerate):
        raise DegenerateDistributionError(
            f"moments are those of a point mass at {decay.nu}; compare M_1**2 with M_2 "
            "instead of reconstructing the distribution"
        )
    logn = math.log10(n)
    if isinstance(decay, Superpolynomial):
        b = n / 2 + decay.c * n**decay.delta_exp - logn
    elif isinstance(decay, Polynomial):
        b = n / 2 + (decay.s - 1) * logn
    else:
        raise TypeError(f"unsupported decay class {decay!r}")
    return PrecisionBudget(n, _floor_digits(n, b), decay)


def rule_of_thumb_digits(n: int) -> int:
    """``ceil(n/2) + 16``, adequate for most moment sequences of practical interest."""
    if n < 0:
        raise ValueError("order n must be nonnegative")
    return math.ceil(n / 2) + 16


def rule_of_thumb_budget(n: int) -> PrecisionBudget:
    return PrecisionBudget(n, rule_of_thumb_digits(n), "rule-of-thumb")


def _lstsq_line(x, y):
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    return slope, intercept, float(np.sqrt(np.mean(resid**2)))


def classify_decay(moments: MomentVector) -> DecayClass:
    """Fit a decay class to a moment sequence.

    Degenerate sequences are recognized by a vanishing variance
    ``M_2 - M_1**2``. Otherwise ``y_j = -log10 M_j`` on the upper three
    quarters of the indices is fitted by two models, ``s log10(j+1) + a``
    (polynomial) and ``c j**delta`` (least squares in log-log space); the one
    with the smaller residual in ``y`` wins. ``s`` is floored at 1 and
    ``delta`` capped just below 1.
    """
    vals = moments.values
    if len(vals) < 4:
        raise ValueError("at least 4 moments are needed to classify decay")
    digits = moments.digits
    with localcontext() as ctx:
        ctx.prec = digits + 10
        var = vals[2] - vals[1] * vals[1]
        if var < Decimal(10) ** Decimal(-digits / 2):
            return Degenerate(vals[1])
        if any(v <= 0 for v in vals[1:]):
            raise DegenerateDistributionError("a vanishing moment M_j, j >= 1, implies a point mass at 0")
        y = np.array([float(-v.log10()) for v in vals])

    n = len(vals) - 1
    j = np.arange(n + 1, dtype=float)
    tail = j >= max(1, n // 4)
    jt, yt = j[tail], y[tail]

    s, _, poly_res = _lstsq_line(np.log10(jt + 1), yt)
    sup_res = math.inf
    if np.all(yt > 0):
        delta, logc, _ = _lstsq_line(np.log(jt), np.log(yt))
        c = math.exp(logc)
        sup_res = float(np.sqrt(np.mean((yt - c * jt**delta) ** 2)))

    if sup_res < poly_res and delta > 0:
        return Superpolynomial(c=c, delta_exp=float(min(delta, 1 - 1e-9)))
    return Polynomial(s=float(max(s, 1.0)))


def check_complete_monotonicity(moments: MomentVector, k_max: int) -> list:
    """Return ``(k, n, value)`` for every ``(-1)**k (Delta**k M)_n`` below ``-10**(-digits/2)``.

    Differences are exact: the stored decimals are combined without rounding.
    """
    vals = list(moments.values)
    if k_max < 1 or k_max > len(vals) - 1:
        raise ValueError(f"k_max must be in [1, {len(vals) - 1}]")
    tol = -(Decimal(10) ** Decimal(-moments.digits / 2))
    violations = []
    with localcontext() as ctx:
        # wide enough that subtraction of the stored decimals never rounds
        ctx.prec = 100_000
        ctx.Emin = -999_999
        diff = vals
        for k in range(1, k_max + 1):
            diff = [diff[i + 1] - diff[i] for i in range(len(diff) - 1)]
            sign = -1 if k % 2 else 1
            for n, d in enumerate(diff):
                v = sign * d
                if v < tol:
                    violations.append((k, n, v))
    return violations

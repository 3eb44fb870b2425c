"""Gauss hypergeometric function for the family 2F1(j, -delta; 1 - delta; -theta).

Evaluation uses the Pfaff transformation

    2F1(j, -d; 1-d; -t) = (1+t)**(-j) * 2F1(j, 1; 1-d; t/(1+t)),

whose series has nonnegative terms and argument in [0, 1) for every t > 0.
"""
from __future__ import annotations

import math
from decimal import Decimal, localcontext

from .errors import ConvergenceError

__all__ = ["GUARD_DIGITS", "MAX_TERMS", "gauss_2f1_sir", "gauss_2f1_sir_sequence"]

GUARD_DIGITS = 10
MAX_TERMS = 10**6


def _dec(x) -> Decimal:
    return x if isinstance(x, Decimal) else Decimal(str(x))


def _validate(j, delta, theta):
    if int(j) != j or j < 0:
        raise ValueError(f"j must be a nonnegative integer, got {j}")
    if not 0 < delta < 1:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if theta < 0:
        raise ValueError(f"theta must be nonnegative, got {theta}")


def term_cap(j: int, w: float, digits: int) -> int:
    """Iteration cap for the transformed series with argument ``w``.

    The terms only start to shrink once ``(j+k) w < 1 - delta + k``, i.e.
    after roughly ``j w / (1 - w)`` terms; the geometric phase after that
    needs about ``digits / -log10(w)`` terms.
    """
    if w <= 0:
        return 1
    rate = -math.log10(w)
    cap = 10 * digits / rate + j * w / (1 - w)
    return int(min(math.ceil(cap) + 10, MAX_TERMS))


def _pfaff_sum(j, d, t, digits, max_terms=None):
    """Sum 2F1(j, 1; 1-d; w), w = t/(1+t), to relative accuracy 10**-(digits+guard)."""
    with localcontext() as ctx:
        ctx.prec = digits + 2 * GUARD_DIGITS
        w = t / (1 + t)
        cap = max_terms if max_terms is not None else term_cap(j, float(w), digits)
        c = 1 - d
        tol = Decimal(10) ** -(digits + GUARD_DIGITS)
        total = Decimal(1)
        term = Decimal(1)
        for k in range(cap):
            ratio = (j + k) / (c + k) * w
            term *= ratio
            total += term
            # ratios decrease in k (j >= 1 > c), so the tail is geometric
            # once the next ratio drops below one
            nxt = (j + k + 1) / (c + k + 1) * w
            if nxt < 1 and term * nxt / (1 - nxt) <= tol * total:
                return total, k + 1
        raise ConvergenceError(
            f"2F1({j}, -{d}; {c}; -{t}) did not converge within {cap} terms",
            terms=cap,
        )


def gauss_2f1_sir(j: int, delta, theta, digits: int = 30) -> Decimal:
    """``2F1(j, -delta; 1-delta; -theta)`` to ``digits`` significant digits.

    The value is at least 1 for every valid input.

    Raises
    ------
    ConvergenceError
        When the term cap is hit before the tail bound meets the tolerance.
    """
    d, t = _dec(delta), _dec(theta)
    _validate(j, d, t)
    j = int(j)
    if j == 0 or t == 0:
        return Decimal(1)
    s, _ = _pfaff_sum(j, d, t, digits)
    with localcontext() as ctx:
        ctx.prec = digits + 2 * GUARD_DIGITS
        v = s / (1 + t) ** j
        ctx.prec = digits
        return +v


def gauss_2f1_sir_sequence(n: int, delta, theta, digits: int = 30) -> list:
    """Values for ``j = 0..n`` via the contiguous relation in the first parameter.

    With ``a = j``, ``b = -delta``, ``c = 1 - delta``, ``z = -theta``:

        a (z-1) F(a+1) = -(2a - c + (b-a) z) F(a) - (c-a) F(a-1)

    The wanted solution grows polynomially in ``a`` while the other one
    decays like ``(1+theta)**-a``, so the forward direction is stable. It is
    seeded with ``F(0) = 1`` and ``F(1)`` from the series.
    """
    d, t = _dec(delta), _dec(theta)
    _validate(n, d, t)
    if t == 0:
        return [Decimal(1)] * (n + 1)
    work = digits + 2 * GUARD_DIGITS + len(str(n))
    out = [Decimal(1)]
    if n == 0:
        return out
    f1 = gauss_2f1_sir(1, d, t, work)
    with localcontext() as ctx:
        ctx.prec = work
        b, c, z = -d, 1 - d, -t
        prev, cur = Decimal(1), f1
        seq = [prev, cur]
        for a in range(1, n):
            nxt = (-(2 * a - c + (b - a) * z) * cur - (c - a) * prev) / (a * (z - 1))
            seq.append(nxt)
            prev, cur = cur, nxt
        ctx.prec = digits
        return [+v for v in seq]

"""Binomial-mixture transform from integer moments to sampled cdf/pdf.

The transform matrix is exact (Python ints); everything that touches moment
data is done in :mod:`decimal` under an explicit local context, so precision
is always a function argument and never global state.
"""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from decimal import Decimal, localcontext
from fractions import Fraction
from typing import Sequence

from .errors import PrecisionError
from .precision import rule_of_thumb_digits

__all__ = [
    "MAX_ORDER",
    "TransformMatrix",
    "MomentVector",
    "MixtureWeights",
    "CdfApproximation",
    "PdfApproximation",
    "build_matrix",
    "distinct_entry_count",
    "max_abs_entry",
    "apply",
    "cdf_samples",
    "pdf_samples",
    "eval_cdf",
    "write_matrix_csv",
]

MAX_ORDER = 2000
# floor of the default negativity tolerance; rounding noise at the
# rule-of-thumb budget stays far below this for every order
EPS_NEG_FLOOR = Decimal("1e-12")


def default_eps_neg(digits: int) -> Decimal:
    """``max(10**(-digits/4), 1e-12)``."""
    return max(Decimal(10) ** Decimal(-digits / 4), EPS_NEG_FLOOR)


def distinct_entry_count(n: int) -> int:
    """Number of entries on or above the diagonal and on or left of the antidiagonal."""
    return ((n + 2) ** 2 - (n % 2)) // 4


@dataclass(frozen=True)
class TransformMatrix:
    """Exact upper-triangular transform of order ``n``.

    Only the wedge ``i <= j <= n - i`` is stored; the rest of the upper
    triangle follows from the antidiagonal mirror ``A[i, j] == A[n-j, n-i]``.
    """

    n: int
    _wedge: tuple = field(repr=False)

    @property
    def size(self) -> int:
        return self.n + 1

    def entry(self, i: int, j: int) -> int:
        n = self.n
        if not (0 <= i <= n and 0 <= j <= n):
            raise IndexError(f"index ({i}, {j}) out of range for order {n}")
        if j < i:
            return 0
        if i + j > n:
            i, j = n - j, n - i
        return self._wedge[i][j - i]

    def __getitem__(self, ij):
        return self.entry(*ij)

    def row(self, i: int) -> list[int]:
        """Nonzero part of row ``i``: entries for columns ``i..n``."""
        return [self.entry(i, j) for j in range(i, self.n + 1)]

    def to_list(self) -> list[list[int]]:
        n = self.n
        return [[self.entry(i, j) for j in range(n + 1)] for i in range(n + 1)]

    def antidiagonal(self) -> list[int]:
        return [self.entry(k, self.n - k) for k in range(self.n + 1)]

    def stored_entries(self) -> int:
        return sum(len(r) for r in self._wedge)


def build_matrix(n: int, max_order: int = MAX_ORDER) -> TransformMatrix:
    """Build the order-``n`` transform ``A[i, j] = C(n,j) C(j,i) (-1)^(j-i)``.

    Each row of the wedge is generated by the exact recurrence
    ``A[i, j+1] = -A[i, j] (n - j) / (j + 1 - i)`` starting from the
    diagonal ``A[i, i] = C(n, i)``.
    """
    if n < 0:
        raise ValueError("order n must be nonnegative")
    if n > max_order:
        raise MemoryError(f"order {n} exceeds the configured maximum {max_order}")
    wedge = []
    diag = 1
    for i in range(n // 2 + 1):
        row = [diag]
        a = diag
        for j in range(i, n - i):
            a = -a * (n - j) // (j + 1 - i)
            row.append(a)
        wedge.append(tuple(row))
        diag = diag * (n - i) // (i + 1)
    return TransformMatrix(n, tuple(wedge))


def max_abs_entry(matrix: TransformMatrix) -> int:
    """Largest ``|A[i, j]|``; it sits on the antidiagonal near index n/3."""
    return max(abs(v) for v in matrix.antidiagonal())


def write_matrix_csv(matrix: TransformMatrix, fh) -> None:
    for i in range(matrix.size):
        fh.write(",".join(str(matrix.entry(i, j)) for j in range(matrix.size)))
        fh.write("\n")


@dataclass(frozen=True)
class MomentVector:
    """Moments ``M_0..M_n`` stored as decimals with ``digits`` significant digits."""

    values: tuple
    digits: int

    def __post_init__(self):
        vals = tuple(v if isinstance(v, Decimal) else Decimal(str(v)) for v in self.values)
        object.__setattr__(self, "values", vals)
        if not vals:
            raise ValueError("moment vector is empty")

    @property
    def n(self) -> int:
        return len(self.values) - 1

    def __len__(self):
        return len(self.values)

    def __getitem__(self, j):
        return self.values[j]

    def __iter__(self):
        return iter(self.values)

    def truncated(self, n: int) -> MomentVector:
        if n > self.n:
            raise ValueError(f"only {len(self)} moments available, order {n} requested")
        return MomentVector(self.values[: n + 1], self.digits)


@dataclass(frozen=True)
class MixtureWeights:
    """Weights ``h = A m`` and diagnostics of the computation that produced them.

    ``negatives`` lists ``(k, h_k)`` for weights in ``(-eps_neg, 0)``; those
    are kept as computed. ``below_budget`` is set when ``digits`` was smaller
    than the rule-of-thumb budget for this order.
    """

    n: int
    values: tuple
    digits: int
    eps_neg: Decimal
    negatives: tuple = ()
    below_budget: bool = False
    multiplications: int = 0

    @property
    def total(self) -> Decimal:
        with localcontext() as ctx:
            ctx.prec = self.digits + 10
            return sum(self.values, Decimal(0))


@dataclass(frozen=True)
class CdfApproximation:
    n: int
    values: tuple
    digits: int

    @property
    def grid(self) -> tuple:
        return _grid(self.n, self.n + 2, self.digits)


@dataclass(frozen=True)
class PdfApproximation:
    n: int
    values: tuple
    digits: int

    @property
    def grid(self) -> tuple:
        return _grid(self.n, self.n + 1, self.digits)


def _grid(n, count, digits):
    with localcontext() as ctx:
        ctx.prec = digits
        m = Decimal(n + 1)
        return tuple(Decimal(k) / m for k in range(count))


def apply(
    matrix: TransformMatrix,
    moments: MomentVector | Sequence,
    digits: int | None = None,
    eps_neg: Decimal | str | None = None,
) -> MixtureWeights:
    """Mixture weights ``h = A m`` at ``digits`` significant digits.

    Parameters
    ----------
    matrix : TransformMatrix
        Transform of order ``n``.
    moments : MomentVector or sequence
        ``M_0..M_n`` with ``M_0 == 1``.
    digits : int, optional
        Working precision. Defaults to the moments' own precision. Values
        below the rule-of-thumb budget are allowed but flagged.
    eps_neg : Decimal, optional
        Negativity tolerance, default ``max(10**(-digits/4), 1e-12)``.

    Raises
    ------
    PrecisionError
        If some ``h_k < -eps_neg``. Nothing is clipped.
    """
    if not isinstance(moments, MomentVector):
        moments = MomentVector(tuple(moments), digits or 50)
    n = matrix.n
    if len(moments) != n + 1:
        raise ValueError(f"expected {n + 1} moments for order {n}, got {len(moments)}")
    if digits is None:
        digits = moments.digits
    if digits < 1:
        raise ValueError("digits must be positive")
    budget = rule_of_thumb_digits(n)
    if eps_neg is None:
        eps_neg = default_eps_neg(digits)
    eps_neg = Decimal(eps_neg)

    m = moments.values
    h = []
    mults = 0
    with localcontext() as ctx:
        ctx.prec = digits
        m = [+v for v in m]
        for i in range(n + 1):
            acc = Decimal(0)
            for j in range(i, n + 1):
                a = matrix.entry(i, j)
                if j == 0 and m[0] == 1:
                    # A[0, 0] * M_0 == 1 needs no product
                    acc += a
                    continue
                acc += Decimal(a) * m[j]
                mults += 1
            h.append(acc)

    worst = min(range(n + 1), key=lambda k: h[k])
    if h[worst] < -eps_neg:
        raise PrecisionError(
            f"weight h_{worst} = {h[worst]:.6E} is below -{eps_neg:.3E} at {digits} digits"
            f" (order {n}); increase precision to at least {budget} digits"
            " or check the moment sequence",
            index=worst,
            value=h[worst],
            digits=digits,
            suggested_digits=budget,
        )
    negatives = tuple((k, v) for k, v in enumerate(h) if v < 0)
    return MixtureWeights(
        n=n,
        values=tuple(h),
        digits=digits,
        eps_neg=eps_neg,
        negatives=negatives,
        below_budget=digits < budget,
        multiplications=mults,
    )


def _clamp01(v: Decimal) -> Decimal:
    if v < 0:
        return Decimal(0)
    if v > 1:
        return Decimal(1)
    return v


def _prefix_cdf(terms, digits):
    out = [Decimal(0)]
    with localcontext() as ctx:
        ctx.prec = digits
        acc = Decimal(0)
        for t in terms:
            acc += t
            out.append(_clamp01(acc))
    return tuple(out)


def cdf_samples(weights: MixtureWeights) -> CdfApproximation:
    """``F_n(x_k) = h_0 + ... + h_(k-1)`` on ``x_k = k/(n+1)``, ``k = 0..n+1``.

    Cumulative sums are clamped to [0, 1]; stored weights are not touched.
    """
    return CdfApproximation(weights.n, _prefix_cdf(weights.values, weights.digits), weights.digits)


def pdf_samples(weights: MixtureWeights) -> PdfApproximation:
    """``f_n(x_k) = (n+1) h_k`` on ``x_k = k/(n+1)``, ``k = 0..n``.

    The scaling is exact (precision is widened to hold every digit), so
    dividing back by ``n+1`` recovers the weights bit for bit.
    """
    n = weights.n
    with localcontext() as ctx:
        ctx.prec = weights.digits + len(str(n + 1)) + 1
        vals = tuple(v * (n + 1) for v in weights.values)
    return PdfApproximation(n, vals, weights.digits)


def _to_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, Decimal)):
        return Fraction(x)
    if isinstance(x, float):
        return Fraction(x)
    return Fraction(str(x))


def eval_cdf(weights: MixtureWeights, x, mode: str = "step") -> Decimal:
    """Evaluate the approximate cdf at ``x`` in [0, 1].

    ``mode="step"`` gives the piecewise-constant ``F_n`` with jumps at
    ``k/n`` (right-continuous, ``F_n(0) = 0``); ``mode="interpolated"``
    linearly interpolates the samples on ``k/(n+1)``.
    """
    xf = _to_fraction(x)
    if xf < 0 or xf > 1:
        raise ValueError(f"x = {x} outside [0, 1]")
    n = weights.n
    digits = weights.digits
    if mode == "step":
        if xf == 0:
            return Decimal(0)
        top = math.floor(n * xf)
        with localcontext() as ctx:
            ctx.prec = digits
            return _clamp01(sum(weights.values[: top + 1], Decimal(0)))
    if mode == "interpolated":
        samples = cdf_samples(weights).values
        pos = xf * (n + 1)
        k = math.floor(pos)
        if k >= n + 1:
            return samples[n + 1]
        frac = pos - k
        with localcontext() as ctx:
            ctx.prec = digits
            t = Decimal(frac.numerator) / Decimal(frac.denominator)
            return samples[k] + t * (samples[k + 1] - samples[k])
    raise ValueError(f"unknown mode {mode!r}; expected 'step' or 'interpolated'")


def invert_samples(values: Sequence[Decimal], n: int, p, digits: int):
    """Solve ``F(x) = p`` on the interpolated samples ``values`` over ``k/(n+1)``.

    Returns ``(x, saturated)``; ``saturated`` is true when ``p`` lies in the
    first or last grid cell, where the answer is an interpolation artifact.
    """
    p = Decimal(str(p)) if not isinstance(p, Decimal) else p
    k = bisect.bisect_left(values, p)
    k = min(max(k, 1), n + 1)
    lo, hi = values[k - 1], values[k]
    with localcontext() as ctx:
        ctx.prec = digits
        m = Decimal(n + 1)
        if hi == lo:
            x = Decimal(k) / m
        else:
            x = (Decimal(k - 1) + (p - lo) / (hi - lo)) / m
    saturated = p < values[1] or p > values[n]
    return x, saturated

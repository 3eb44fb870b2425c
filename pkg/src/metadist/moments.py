"""Analytic moment sequences and the moment CSV format."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation, localcontext
from fractions import Fraction
from pathlib import Path

from .errors import MomentFileError
from .hyp2f1 import gauss_2f1_sir, gauss_2f1_sir_sequence
from .transform import MomentVector

__all__ = [
    "BetaParams",
    "SirParams",
    "db_to_linear",
    "uniform_moments",
    "point_mass_moments",
    "beta_moments",
    "sir_poisson_moments",
    "load_moments",
    "save_moments",
    "parse_moments",
    "format_moments",
]

DEFAULT_DIGITS = 50


def _frac(x) -> Fraction:
    if isinstance(x, (Fraction, int, Decimal)):
        return Fraction(x)
    return Fraction(str(x))


@dataclass(frozen=True)
class BetaParams:
    alpha: object
    beta: object

    def __post_init__(self):
        if not (_frac(self.alpha) > 0 and _frac(self.beta) > 0):
            raise ValueError(f"beta parameters must be positive, got ({self.alpha}, {self.beta})")


@dataclass(frozen=True)
class SirParams:
    """SIR threshold ``theta`` (linear scale) and ``delta = 2 / path-loss exponent``."""

    theta: Decimal
    delta: Decimal

    def __post_init__(self):
        object.__setattr__(self, "theta", Decimal(str(self.theta)) if not isinstance(self.theta, Decimal) else self.theta)
        object.__setattr__(self, "delta", Decimal(str(self.delta)) if not isinstance(self.delta, Decimal) else self.delta)
        if self.theta <= 0:
            raise ValueError("theta must be positive")
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")

    @classmethod
    def from_db(cls, theta_db, delta, digits: int = DEFAULT_DIGITS) -> SirParams:
        return cls(db_to_linear(theta_db, digits), delta)


def db_to_linear(value_db, digits: int = DEFAULT_DIGITS) -> Decimal:
    """``10**(value_db / 10)``."""
    with localcontext() as ctx:
        ctx.prec = digits + 5
        return Decimal(10) ** (Decimal(str(value_db)) / 10)


def _round(values, digits):
    with localcontext() as ctx:
        ctx.prec = digits
        return tuple(+v for v in values)


def uniform_moments(n: int, digits: int = DEFAULT_DIGITS) -> MomentVector:
    with localcontext() as ctx:
        ctx.prec = digits
        vals = tuple(Decimal(1) / Decimal(j + 1) for j in range(n + 1))
    return MomentVector(vals, digits)


def point_mass_moments(nu, n: int, digits: int = DEFAULT_DIGITS) -> MomentVector:
    nu_f = _frac(nu)
    if not 0 <= nu_f <= 1:
        raise ValueError(f"nu must lie in [0, 1], got {nu}")
    vals = [Fraction(1)]
    for _ in range(n):
        vals.append(vals[-1] * nu_f)
    return MomentVector(_fractions_to_decimal(vals, digits), digits)


def _fractions_to_decimal(vals, digits):
    with localcontext() as ctx:
        ctx.prec = digits
        return tuple(Decimal(v.numerator) / Decimal(v.denominator) for v in vals)


def beta_moments(params: BetaParams, n: int, digits: int = DEFAULT_DIGITS) -> MomentVector:
    """``M_j = prod_{i<j} (alpha+i)/(alpha+beta+i)``, accumulated exactly and rounded once."""
    a, b = _frac(params.alpha), _frac(params.beta)
    vals = [Fraction(1)]
    for i in range(n):
        vals.append(vals[-1] * (a + i) / (a + b + i))
    return MomentVector(_fractions_to_decimal(vals, digits), digits)


def sir_poisson_moments(params: SirParams, n: int, digits: int = DEFAULT_DIGITS, method: str = "recurrence") -> MomentVector:
    """Moments of the conditional success probability in a Poisson cellular downlink.

    ``M_j = 1 / 2F1(j, -delta; 1-delta; -theta)``. ``method="series"`` sums
    the transformed series separately for each ``j``; the default runs the
    contiguous recurrence, which is much cheaper at large ``n`` and ``theta``.
    """
    if digits < 16:
        raise ValueError("SIR moments need at least 16 digits")
    if method == "recurrence":
        fs = gauss_2f1_sir_sequence(n, params.delta, params.theta, digits + 5)
    elif method == "series":
        fs = [gauss_2f1_sir(j, params.delta, params.theta, digits + 5) for j in range(n + 1)]
    else:
        raise ValueError(f"unknown method {method!r}")
    with localcontext() as ctx:
        ctx.prec = digits
        vals = tuple(Decimal(1) / f for f in fs)
    return MomentVector(vals, digits)


def format_moments(moments: MomentVector) -> str:
    buf = io.StringIO()
    buf.write(f"# digits={moments.digits}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["j", "M_j"])
    for j, v in enumerate(moments.values):
        w.writerow([j, str(v)])
    return buf.getvalue()


def save_moments(moments: MomentVector, path) -> None:
    Path(path).write_text(format_moments(moments))


def parse_moments(text: str) -> MomentVector:
    """Parse the ``j,M_j`` CSV format and enforce ``M_0 = 1`` and monotonicity."""
    digits = None
    rows = []
    header_seen = False
    for lineno, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        if not s:
            continue
        if s.startswith("#"):
            key, _, val = s[1:].strip().partition("=")
            if key.strip() == "digits":
                try:
                    digits = int(val)
                except ValueError:
                    raise MomentFileError(f"line {lineno}: bad digits value {val!r}", line=lineno) from None
            continue
        fields = [f.strip() for f in s.split(",")]
        if not header_seen:
            if fields != ["j", "M_j"]:
                raise MomentFileError(f"line {lineno}: expected header 'j,M_j', got {s!r}", line=lineno)
            header_seen = True
            continue
        if len(fields) != 2:
            raise MomentFileError(f"line {lineno}: expected 2 fields, got {len(fields)}", line=lineno)
        try:
            j = int(fields[0])
            m = Decimal(fields[1])
        except (ValueError, InvalidOperation):
            raise MomentFileError(f"line {lineno}: cannot parse {s!r}", line=lineno) from None
        if not m.is_finite():
            raise MomentFileError(f"line {lineno}: moment is not finite", line=lineno)
        if j != len(rows):
            raise MomentFileError(f"line {lineno}: expected index {len(rows)}, got {j}", line=lineno, index=j)
        rows.append((lineno, m))
    if not rows:
        raise MomentFileError("no moments found")
    if rows[0][1] != 1:
        raise MomentFileError(
            f"line {rows[0][0]}: M_0 = {rows[0][1]} violates the rule M_0 = 1", line=rows[0][0], index=0
        )
    for j in range(1, len(rows)):
        lineno, m = rows[j]
        if m < 0 or m > 1:
            raise MomentFileError(f"line {lineno}: M_{j} = {m} outside [0, 1]", line=lineno, index=j)
        if m > rows[j - 1][1]:
            raise MomentFileError(
                f"line {lineno}: moments must be nonincreasing, but M_{j} > M_{j - 1} at index {j}",
                line=lineno,
                index=j,
            )
    vals = tuple(m for _, m in rows)
    if digits is None:
        digits = max(16, max(len(v.as_tuple().digits) for v in vals))
    return MomentVector(vals, digits)


def load_moments(path) -> MomentVector:
    return parse_moments(Path(path).read_text())

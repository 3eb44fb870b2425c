"""Convergence studies, the two-moment beta baseline and SIR percentile curves."""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from decimal import Decimal, localcontext
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np
from scipy import optimize, special

from .errors import DegenerateDistributionError
from .moments import BetaParams, SirParams, sir_poisson_moments
from .precision import rule_of_thumb_digits
from .transform import (
    CdfApproximation,
    TransformMatrix,
    apply,
    build_matrix,
    cdf_samples,
    invert_samples,
)

__all__ = [
    "ConvergenceReport",
    "CurvePoint",
    "PercentileCurve",
    "reconstruction_error",
    "convergence_study",
    "beta_error_constant",
    "beta_approximation",
    "theta_grid_db",
    "percentile_solve",
    "percentile_curves",
    "percentile_curves_from_moments",
    "rate_reliability",
    "percentile_gap",
    "edge_gaps",
]


@dataclass
class ConvergenceReport:
    orders: list
    max_errors: list
    bound_constant: float | None = None
    fitted_rate: float = math.nan

    def bounds(self) -> list:
        """``bound_constant / (n+1)`` per order (``None`` without a constant)."""
        if self.bound_constant is None:
            return [None] * len(self.orders)
        return [self.bound_constant / (n + 1) for n in self.orders]


@dataclass(frozen=True)
class CurvePoint:
    theta_db: float
    reliability: float
    saturated: bool = False

    @property
    def theta(self) -> float:
        return 10 ** (self.theta_db / 10)


@dataclass
class PercentileCurve:
    p: float
    n: int
    delta: float
    points: list = field(default_factory=list)

    def usable(self) -> list:
        return [pt for pt in self.points if not pt.saturated]


def reconstruction_error(approx: CdfApproximation, oracle: Callable[[float], float]):
    """Errors ``|F_n(x_k) - F(x_k)|`` on the full grid and their max over ``k = 1..n``."""
    n = approx.n
    errors = [abs(float(v) - float(oracle(k / (n + 1)))) for k, v in enumerate(approx.values)]
    return max(errors[1 : n + 1], default=0.0), errors


def _power_fit(orders, errors) -> float:
    x = np.log(np.asarray(orders, dtype=float))
    e = np.asarray(errors, dtype=float)
    if np.any(e <= 0):
        return math.nan
    return float(np.polyfit(x, np.log(e), 1)[0])


def convergence_study(
    moment_source: Callable,
    oracle: Callable[[float], float],
    orders: Sequence[int],
    digits: int | None = None,
    bound_constant: float | None = None,
) -> ConvergenceReport:
    """Max interior-grid error for each order and a power-law fit of error vs n.

    ``moment_source(n, digits)`` must return a MomentVector; ``digits``
    defaults to the rule-of-thumb budget per order.
    """
    orders = list(orders)
    if len(orders) < 3:
        raise ValueError("need at least 3 orders")
    if any(b <= a for a, b in zip(orders, orders[1:])):
        raise ValueError("orders must be strictly increasing")
    errs = []
    for n in orders:
        d = digits or rule_of_thumb_digits(n)
        w = apply(build_matrix(n), moment_source(n, d), d)
        err, _ = reconstruction_error(cdf_samples(w), oracle)
        errs.append(err)
    return ConvergenceReport(orders, errs, bound_constant, _power_fit(orders, errs))


def beta_error_constant(params: BetaParams) -> float:
    """``sup|f| + sup|f'| / 2`` for the beta pdf ``f`` on [0, 1]; ``inf`` if unbounded."""
    a, b = float(params.alpha), float(params.beta)
    if a < 1 or b < 1 or (a < 2 and a != 1) or (b < 2 and b != 1):
        return math.inf
    norm = math.exp(special.betaln(a, b))

    def pdf(x):
        return x ** (a - 1) * (1 - x) ** (b - 1) / norm

    def dpdf(x):
        v = 0.0
        if a != 1:
            v += (a - 1) * x ** (a - 2) * (1 - x) ** (b - 1)
        if b != 1:
            v -= (b - 1) * x ** (a - 1) * (1 - x) ** (b - 2)
        return v / norm

    def sup(g):
        xs = np.linspace(0.0, 1.0, 4001)
        vals = np.abs([g(x) for x in xs])
        i = int(np.argmax(vals))
        best = vals[i]
        lo, hi = xs[max(i - 1, 0)], xs[min(i + 1, len(xs) - 1)]
        if hi > lo:
            res = optimize.minimize_scalar(lambda x: -abs(g(x)), bounds=(lo, hi), method="bounded",
                                           options={"xatol": 1e-12})
            best = max(best, -res.fun)
        return float(best)

    return sup(pdf) + sup(dpdf) / 2


def _to_decimal(v) -> Decimal:
    # call inside a context: division rounds to its precision
    if isinstance(v, Decimal):
        return +v
    if isinstance(v, Fraction):
        return Decimal(v.numerator) / Decimal(v.denominator)
    return Decimal(str(v))


def beta_approximation(m1, m2, digits: int = 50) -> BetaParams:
    """Beta distribution with the given first two moments (method of moments)."""
    with localcontext() as ctx:
        ctx.prec = digits
        m1, m2 = _to_decimal(m1), _to_decimal(m2)
        if not 0 < m1 < 1:
            raise ValueError(f"M1 must lie in (0, 1), got {m1}")
        var = m2 - m1 * m1
        if var <= Decimal(10) ** Decimal(-digits / 2):
            raise DegenerateDistributionError(f"variance {var:.3E} vanishes; the moments describe a point mass")
        if m2 >= m1:
            raise ValueError("M2 must be smaller than M1")
        alpha = m1 * (m1 - m2) / var
        beta = alpha * (1 - m1) / m1
    return BetaParams(alpha, beta)


def theta_grid_db(start: float = -20.0, stop: float = 20.0, step: float = 1.0) -> list:
    """Inclusive dB grid; the default has the 41 points used in the SIR study."""
    if not stop > start:
        raise ValueError("theta range needs min < max")
    if step <= 0:
        raise ValueError("theta step must be positive")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + i * step, 10) for i in range(count)]


# set once per worker process by the pool initializer
_WORKER_MATRIX = None


def _init_worker(matrix):
    global _WORKER_MATRIX
    _WORKER_MATRIX = matrix


def _solve_point(args, matrix=None):
    ps, theta_db, delta, digits, moments = args
    matrix = matrix or _WORKER_MATRIX
    n = matrix.n
    if moments is None:
        moments = sir_poisson_moments(SirParams.from_db(theta_db, delta, digits), n, digits)
    w = apply(matrix, moments, digits)
    samples = cdf_samples(w).values
    out = []
    for p in ps:
        x, sat = invert_samples(samples, n, Decimal(str(p)), digits)
        out.append(CurvePoint(float(theta_db), float(x), sat))
    return out


def _run(tasks, matrix, workers):
    if workers and workers > 1:
        with ProcessPoolExecutor(workers, initializer=_init_worker, initargs=(matrix,)) as ex:
            return list(ex.map(_solve_point, tasks))
    return [_solve_point(t, matrix) for t in tasks]


def _assemble(ps, n, delta, per_theta):
    curves = [PercentileCurve(float(p), n, float(delta)) for p in ps]
    for pts in per_theta:
        for curve, pt in zip(curves, pts):
            curve.points.append(pt)
    return curves


def percentile_curves(
    ps: Sequence[float],
    theta_db: Sequence[float],
    delta,
    n: int,
    digits: int | None = None,
    matrix: TransformMatrix | None = None,
    workers: int = 1,
) -> list:
    """Curves ``(theta_dB, x)`` with ``F_n(x) = p`` for each ``p``, sharing work per theta.

    Each theta gets its own moments and weights; ``F_n(x) = p`` is solved on
    the interpolated cdf. Points with ``p`` in the first or last grid cell
    are flagged as saturated. Output order follows ``theta_db`` regardless
    of ``workers``.
    """
    for p in ps:
        if not 0 < p < 1:
            raise ValueError(f"percentile must lie in (0, 1), got {p}")
    if n < 2:
        raise ValueError("order n must be at least 2")
    digits = digits or rule_of_thumb_digits(n)
    matrix = matrix or build_matrix(n)
    tasks = [(tuple(ps), t, delta, digits, None) for t in theta_db]
    return _assemble(ps, n, delta, _run(tasks, matrix, workers))


def percentile_curves_from_moments(ps, theta_db, moment_vectors, matrix, digits, delta=math.nan, workers=1):
    """Same as :func:`percentile_curves` with precomputed moments, one vector per theta."""
    tasks = [(tuple(ps), t, delta, digits, m) for t, m in zip(theta_db, moment_vectors)]
    return _assemble(ps, matrix.n, delta, _run(tasks, matrix, workers))


def percentile_solve(p, theta_db, delta, n, digits=None, matrix=None, workers=1) -> PercentileCurve:
    return percentile_curves([p], theta_db, delta, n, digits, matrix, workers)[0]


def rate_reliability(curve: PercentileCurve) -> list:
    """``(log2(1 + theta), x)`` for each point of the curve."""
    return [(math.log2(1 + pt.theta), pt.reliability) for pt in curve.points]


def _theta_at(curve: PercentileCurve, x: float) -> float:
    pts = sorted(curve.usable(), key=lambda pt: pt.theta_db)
    for a, b in zip(pts, pts[1:]):
        hi, lo = max(a.reliability, b.reliability), min(a.reliability, b.reliability)
        if lo <= x <= hi:
            if a.reliability == b.reliability:
                return a.theta_db
            t = (x - a.reliability) / (b.reliability - a.reliability)
            return a.theta_db + t * (b.theta_db - a.theta_db)
    raise ValueError(f"reliability {x} outside the range covered by the p={curve.p} curve")


def percentile_gap(curve_a: PercentileCurve, curve_b: PercentileCurve, at_reliability: float) -> float:
    """Horizontal distance ``theta_b - theta_a`` in dB where both curves reach ``at_reliability``.

    Saturated points are ignored.
    """
    return _theta_at(curve_b, at_reliability) - _theta_at(curve_a, at_reliability)


def edge_gaps(curve_a: PercentileCurve, curve_b: PercentileCurve):
    """Gaps between two curves near the low-theta and high-theta ends of the grid.

    At each end the reliability used is the lower (low-theta end) or higher
    (high-theta end) of the two curves' outermost unsaturated values, so both
    curves cover it. Returns ``((x_low, gap_low), (x_high, gap_high))``.
    """
    ua, ub = curve_a.usable(), curve_b.usable()
    if len(ua) < 2 or len(ub) < 2:
        raise ValueError("each curve needs at least two unsaturated points")
    first = lambda pts: min(pts, key=lambda pt: pt.theta_db).reliability
    last = lambda pts: max(pts, key=lambda pt: pt.theta_db).reliability
    x_low = min(first(ua), first(ub))
    x_high = max(last(ua), last(ub))
    return (
        (x_low, percentile_gap(curve_a, curve_b, x_low)),
        (x_high, percentile_gap(curve_a, curve_b, x_high)),
    )

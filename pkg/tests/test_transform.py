import dataclasses
import io
import math
from decimal import Decimal, localcontext
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from metadist import (
    PrecisionError,
    apply,
    beta_moments,
    BetaParams,
    build_matrix,
    cdf_samples,
    eval_cdf,
    max_abs_entry,
    pdf_samples,
    point_mass_moments,
    uniform_moments,
)
from metadist.transform import (
    MomentVector,
    default_eps_neg,
    distinct_entry_count,
    invert_samples,
    write_matrix_csv,
)

from oracles import binomial_pmf, full_matrix

REFERENCE_N4 = [
    [1, -4, 6, -4, 1],
    [0, 4, -12, 12, -4],
    [0, 0, 6, -12, 6],
    [0, 0, 0, 4, -4],
    [0, 0, 0, 0, 1],
]


class TestBuildMatrix:
    def test_order_four_matches_published_matrix(self):
        assert build_matrix(4).to_list() == REFERENCE_N4

    def test_order_zero(self):
        assert build_matrix(0).to_list() == [[1]]

    def test_order_two(self):
        assert build_matrix(2).to_list() == [[1, -2, 1], [0, 2, -2], [0, 0, 1]]

    @pytest.mark.parametrize("n", [1, 3, 7, 12, 25, 50])
    def test_matches_formula(self, n):
        assert build_matrix(n).to_list() == full_matrix(n)

    def test_antidiagonal_symmetry_exhaustive(self):
        for n in range(51):
            a = build_matrix(n)
            for i in range(n + 1):
                for j in range(n + 1):
                    assert a[i, j] == a[n - j, n - i]

    def test_column_sums(self):
        for n in range(51):
            a = build_matrix(n)
            for j in range(n + 1):
                assert sum(a[i, j] for i in range(n + 1)) == (1 if j == 0 else 0)

    def test_diagonal_is_binomial(self):
        a = build_matrix(30)
        assert [a[j, j] for j in range(31)] == [math.comb(30, j) for j in range(31)]

    @pytest.mark.parametrize("n", range(0, 21))
    def test_stored_entries_match_count_formula(self, n):
        assert build_matrix(n).stored_entries() == distinct_entry_count(n)

    def test_count_formula_small_cases(self):
        # n=4: five, three and one entries in the stored wedge rows
        assert distinct_entry_count(4) == 9
        assert distinct_entry_count(1) == 2

    def test_order_limit(self):
        with pytest.raises(MemoryError):
            build_matrix(2001)
        assert build_matrix(5, max_order=5).n == 5
        with pytest.raises(ValueError):
            build_matrix(-1)

    def test_csv_export(self):
        buf = io.StringIO()
        write_matrix_csv(build_matrix(4), buf)
        rows = [[int(v) for v in line.split(",")] for line in buf.getvalue().splitlines()]
        assert rows == REFERENCE_N4


class TestMaxAbsEntry:
    def test_order_four(self):
        assert max_abs_entry(build_matrix(4)) == 12

    def test_order_zero(self):
        assert max_abs_entry(build_matrix(0)) == 1

    def test_order_ten_brute_force(self):
        brute = max(abs(v) for row in full_matrix(10) for v in row)
        assert brute == 4200
        assert max_abs_entry(build_matrix(10)) == brute

    @pytest.mark.parametrize("n", [6, 10, 31, 60, 99])
    def test_located_near_one_third(self, n):
        a = build_matrix(n)
        d = a.antidiagonal()
        assert abs(d[round(n / 3)]) == max_abs_entry(a)

    def test_stirling_ratio(self):
        n = 200
        ratio = max_abs_entry(build_matrix(n)) * n / 3**n
        assert ratio == pytest.approx(math.sqrt(27) / (2 * math.pi), rel=0.05)


class TestApply:
    def test_uniform_order_one(self):
        w = apply(build_matrix(1), uniform_moments(1, 30), 30)
        assert w.values == (Decimal("0.5"), Decimal("0.5"))

    def test_point_mass_at_zero(self):
        n = 6
        w = apply(build_matrix(n), point_mass_moments(0, n, 30), 30)
        assert w.values == (1,) + (0,) * n

    def test_point_mass_half_order_two(self):
        w = apply(build_matrix(2), point_mass_moments(Fraction(1, 2), 2, 30), 30)
        assert w.values == (Decimal("0.25"), Decimal("0.5"), Decimal("0.25"))

    @pytest.mark.parametrize("nu", [0, Fraction(1, 4), Fraction(1, 2), Fraction(3, 4), 1])
    @pytest.mark.parametrize("n", [1, 2, 5, 11, 20])
    def test_point_mass_recovers_binomial_pmf(self, nu, n):
        digits = n // 2 + 40
        w = apply(build_matrix(n), point_mass_moments(nu, n, digits), digits)
        for h, p in zip(w.values, binomial_pmf(n, Fraction(nu))):
            assert abs(Fraction(h) - p) < Fraction(1, 10**30)

    def test_multiplication_count(self):
        for n in (1, 4, 10, 33):
            w = apply(build_matrix(n), uniform_moments(n, 40), 40)
            assert w.multiplications == (n * n + 3 * n) // 2

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="expected 5 moments"):
            apply(build_matrix(4), uniform_moments(3, 20), 20)

    def test_records_precision_and_budget_flag(self):
        m = uniform_moments(10, 40)
        assert apply(build_matrix(10), m, 40).digits == 40
        assert not apply(build_matrix(10), m, 40).below_budget
        assert apply(build_matrix(10), m, 20).below_budget

    def test_insufficient_precision_signals(self):
        n = 60
        m = beta_moments(BetaParams(5, 2), n, 16)
        with pytest.raises(PrecisionError) as exc:
            apply(build_matrix(n), m, 16)
        assert exc.value.value < 0
        assert exc.value.suggested_digits == 46
        assert 0 <= exc.value.index <= n

    def test_invalid_sequence_signals_rather_than_clips(self):
        m = MomentVector((1, "0.9", "0.5", "0.45"), 30)
        with pytest.raises(PrecisionError):
            apply(build_matrix(3), m, 30)

    def test_small_negatives_reported_not_clipped(self):
        m = MomentVector((1, 0, 0, 0), 30)
        # point mass at 0 has h = (1, 0, 0, 0); nudging M_3 pushes h_2 to -3e-9
        tampered = MomentVector((1, 0, 0, "1e-9"), 30)
        base = apply(build_matrix(3), m, 30)
        w = apply(build_matrix(3), tampered, 30, eps_neg="1e-6")
        assert base.negatives == ()
        assert w.negatives == ((2, Decimal("-3E-9")),)
        assert min(w.values) < 0
        assert min(cdf_samples(w).values) >= 0

    def test_default_tolerance(self):
        assert default_eps_neg(16) == Decimal(10) ** Decimal(-4)
        assert default_eps_neg(40) == Decimal("1e-10")
        assert default_eps_neg(216) == Decimal("1e-12")

    @settings(max_examples=25, deadline=None)
    @given(
        a=st.fractions(min_value=Fraction(1, 2), max_value=20),
        b=st.fractions(min_value=Fraction(1, 2), max_value=20),
        n=st.integers(min_value=1, max_value=60),
    )
    def test_valid_sequences_give_nonnegative_unit_mass(self, a, b, n):
        a_mat = build_matrix(n)
        digits = n // 2 + 16
        w = apply(a_mat, beta_moments(BetaParams(a, b), n, digits), digits)
        assert all(h >= 0 for h in w.values)
        vals = cdf_samples(w).values
        assert all(x <= y for x, y in zip(vals, vals[1:]))
        # the unit-mass identity cancels terms of size max|A| ~ 10**(0.48 n),
        # so it needs about n digits rather than n/2
        digits = n + 20
        w = apply(a_mat, beta_moments(BetaParams(a, b), n, digits), digits)
        assert abs(w.total - 1) < Decimal(10) ** Decimal(-digits / 2)


class TestSamples:
    @pytest.mark.parametrize("n", [0, 1, 3, 9, 50])
    def test_uniform_cdf_on_grid(self, n):
        digits = n // 2 + 40
        w = apply(build_matrix(n), uniform_moments(n, digits), digits)
        cdf = cdf_samples(w)
        assert len(cdf.values) == n + 2
        for k, v in enumerate(cdf.values):
            assert abs(Fraction(v) - Fraction(k, n + 1)) < Fraction(1, 10**35)

    def test_endpoints(self):
        w = apply(build_matrix(20), beta_moments(BetaParams(5, 2), 20, 40), 40)
        cdf = cdf_samples(w)
        assert cdf.values[0] == 0
        assert abs(cdf.values[-1] - 1) < Decimal("1e-35")
        assert cdf.grid[0] == 0 and cdf.grid[-1] == 1

    def test_point_mass_at_zero_cdf(self):
        w = apply(build_matrix(5), point_mass_moments(0, 5, 20), 20)
        assert cdf_samples(w).values == (0, 1, 1, 1, 1, 1, 1)

    def test_beta_order_ten_against_exact_cdf(self):
        # F_10 at k/11 is within the O(1/n) reconstruction error of the beta cdf
        from scipy import stats

        w = apply(build_matrix(10), beta_moments(BetaParams(5, 2), 10, 40), 40)
        vals = cdf_samples(w).values
        exact = stats.beta(5, 2).cdf
        errs = [abs(float(v) - exact(k / 11)) for k, v in enumerate(vals)]
        assert max(errs) < 0.07

    def test_uniform_pdf_is_one(self):
        w = apply(build_matrix(3), uniform_moments(3, 30), 30)
        assert all(abs(f - 1) < Decimal("1e-28") for f in pdf_samples(w).values)

    def test_point_mass_pdf(self):
        w = apply(build_matrix(2), point_mass_moments(Fraction(1, 2), 2, 30), 30)
        assert pdf_samples(w).values == (Decimal("0.75"), Decimal("1.5"), Decimal("0.75"))

    def test_beta_pdf_tracks_density(self):
        from scipy import stats

        n = 32
        w = apply(build_matrix(n), beta_moments(BetaParams(5, 2), n, 40), 40)
        pdf = pdf_samples(w)
        dev = max(abs(float(f) - stats.beta(5, 2).pdf(k / (n + 1))) for k, f in enumerate(pdf.values))
        # histogram is a smoothed, shifted density; only the scale is checked
        assert dev < 0.5 * 2.4576

    @pytest.mark.parametrize("n", [5, 17, 40])
    def test_riemann_consistency(self, n):
        digits = n // 2 + 40
        w = apply(build_matrix(n), beta_moments(BetaParams(3, 4), n, digits), digits)
        pdf = pdf_samples(w)
        with localcontext() as ctx:
            ctx.prec = digits + 10
            recovered = tuple(f / (n + 1) for f in pdf.values)
        assert recovered == w.values
        assert cdf_samples(w).values == cdf_samples(dataclasses.replace(w, values=recovered)).values
        with localcontext() as ctx:
            ctx.prec = digits + 10
            assert abs(sum(pdf.values) / (n + 1) - 1) < Decimal("1e-35")


class TestEvalCdf:
    def test_zero(self):
        w = apply(build_matrix(7), beta_moments(BetaParams(2, 3), 7, 30), 30)
        assert eval_cdf(w, 0) == 0
        assert eval_cdf(w, 0, mode="interpolated") == 0

    def test_one(self):
        w = apply(build_matrix(7), beta_moments(BetaParams(2, 3), 7, 30), 30)
        assert abs(eval_cdf(w, 1) - 1) < Decimal("1e-25")
        assert abs(eval_cdf(w, 1, mode="interpolated") - 1) < Decimal("1e-25")

    def test_uniform_interpolated(self):
        w = apply(build_matrix(9), uniform_moments(9, 40), 40)
        assert abs(eval_cdf(w, "0.3", mode="interpolated") - Decimal("0.3")) < Decimal("1e-30")

    @pytest.mark.parametrize("n", [1, 2, 8, 25, 50])
    def test_uniform_interpolated_exact_everywhere(self, n):
        digits = n // 2 + 40
        w = apply(build_matrix(n), uniform_moments(n, digits), digits)
        for i in range(0, 101):
            x = Fraction(i, 100)
            got = eval_cdf(w, x, mode="interpolated")
            assert abs(Fraction(got) - x) < Fraction(1, 10**35)

    def test_step_right_continuous_at_jumps(self):
        w = apply(build_matrix(4), beta_moments(BetaParams(2, 2), 4, 30), 30)
        h = w.values
        with localcontext() as ctx:
            ctx.prec = 30
            first_two = h[0] + h[1]
        # jumps sit at k/4; the value at the jump includes h_k
        assert eval_cdf(w, Fraction(1, 4)) == first_two
        assert eval_cdf(w, Fraction(1, 4) - Fraction(1, 10**9)) == h[0]
        assert eval_cdf(w, Fraction(1, 10**9)) == h[0]

    def test_step_at_interior_grid_equals_sample(self):
        n = 12
        w = apply(build_matrix(n), beta_moments(BetaParams(5, 2), n, 30), 30)
        samples = cdf_samples(w).values
        for k in range(1, n + 2):
            assert eval_cdf(w, Fraction(k, n + 1)) == samples[k]

    def test_domain(self):
        w = apply(build_matrix(3), uniform_moments(3, 20), 20)
        with pytest.raises(ValueError):
            eval_cdf(w, -0.1)
        with pytest.raises(ValueError):
            eval_cdf(w, 1.5)
        with pytest.raises(ValueError):
            eval_cdf(w, 0.5, mode="smooth")


class TestInvertSamples:
    def test_uniform_inverse_is_identity(self):
        n = 9
        w = apply(build_matrix(n), uniform_moments(n, 30), 30)
        x, sat = invert_samples(cdf_samples(w).values, n, Decimal("0.37"), 30)
        assert abs(x - Decimal("0.37")) < Decimal("1e-25")
        assert not sat

    def test_saturation_flags(self):
        n = 9
        w = apply(build_matrix(n), uniform_moments(n, 30), 30)
        vals = cdf_samples(w).values
        assert invert_samples(vals, n, Decimal("0.05"), 30)[1]
        assert invert_samples(vals, n, Decimal("0.95"), 30)[1]
        assert not invert_samples(vals, n, Decimal("0.5"), 30)[1]

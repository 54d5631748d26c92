import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from daclab import rate_alloc as ra


def h(q):
    # independent entropy oracle
    return 0.0 if q in (0.0, 1.0) else -(q * math.log2(q) + (1 - q) * math.log2(1 - q))


class TestEntropy:
    @pytest.mark.parametrize("q,want", [(0.5, 1.0), (0.0, 0.0), (1.0, 0.0)])
    def test_exact(self, q, want):
        assert ra.binary_entropy(q) == want

    def test_skewed(self):
        assert ra.binary_entropy(0.9) == pytest.approx(0.4690, abs=5e-5)

    def test_half_bit_crossover(self):
        assert ra.binary_entropy(0.110) == pytest.approx(0.4999, abs=1e-4)

    def test_balanced_cond_entropy_is_h_p(self):
        for p in (0.01, 0.0417, 0.2):
            assert ra.cond_entropy_bsc(0.5, p) == pytest.approx(h(p), abs=1e-12)

    def test_skewed_cond_entropy(self):
        q = ra.bsc_output_prob(0.9, 0.121)
        assert q == pytest.approx(0.803, abs=1e-3)
        assert h(q) == pytest.approx(0.715, abs=1e-3)
        assert ra.cond_entropy_bsc(0.9, 0.121) == pytest.approx(0.285, abs=1e-3)

    def test_perfect_side_info(self):
        assert ra.cond_entropy_bsc(0.7, 0.0) == pytest.approx(0.0, abs=1e-12)

    def test_inversion(self):
        p = ra.crossover_for_cond_entropy(0.5, 0.25)
        assert h(p) == pytest.approx(0.25, abs=1e-9)
        p = ra.crossover_for_joint_entropy(0.9, 1.0)
        assert ra.joint_entropy_bsc(0.9, p) == pytest.approx(1.0, abs=1e-9)
        p = ra.crossover_for_cond_entropy(0.9, 0.285)
        assert ra.cond_entropy_bsc(0.9, p) == pytest.approx(0.285, abs=1e-9)


class TestOverlap:
    def test_k0_identity(self):
        assert ra.overlap_factors(0.7, 0.0)[:2] == (1.0, 1.0)

    def test_balanced(self):
        a0, a1, pt0, pt1 = ra.overlap_factors(0.5, 0.5)
        assert a0 == pytest.approx(math.sqrt(2)) and a1 == pytest.approx(math.sqrt(2))
        assert pt0 == pytest.approx(0.7071, abs=1e-4) and pt1 == pytest.approx(0.7071, abs=1e-4)

    def test_skewed(self):
        a0, a1, pt0, pt1 = ra.overlap_factors(0.9, 0.5)
        assert (a0, a1, pt0, pt1) == pytest.approx((1.0541, 3.1623, 0.9487, 0.3162), abs=1e-4)

    def test_equal_alpha_fits(self):
        alpha, fits = ra.equal_overlap_factor(0.8, 0.5)
        assert alpha == pytest.approx(2 ** (h(0.8) - 0.5)) == pytest.approx(1.166, abs=1e-3)
        assert fits and alpha * 0.8 == pytest.approx(0.933, abs=1e-3)

    def test_equal_alpha_at_entropy(self):
        assert ra.equal_overlap_factor(0.8, h(0.8))[0] == pytest.approx(1.0)

    def test_equal_alpha_does_not_fit(self):
        alpha, fits = ra.equal_overlap_factor(0.9, 0.2)
        assert alpha == pytest.approx(1.205, abs=1e-3) and not fits
        with pytest.raises(ra.DoesNotFit):
            ra.equal_overlap_factor(0.9, 0.2, strict=True)


class TestPredictedRate:
    def test_values(self):
        assert ra.predicted_rate_k(0.5, 0.5) == pytest.approx(0.5)
        assert ra.predicted_rate_k(0.3, 0.0) == pytest.approx(h(0.3))
        assert ra.predicted_rate_k(0.9, 0.5) == pytest.approx(0.2345, abs=1e-4)

    @given(p0=st.floats(0.01, 0.99), k=st.floats(0.0, 0.98))
    def test_rate_laws_agree(self, p0, k):
        _, _, pt0, pt1 = ra.overlap_factors(p0, k)
        assert ra.predicted_rate(p0, pt0, pt1) == pytest.approx((1 - k) * h(p0), abs=1e-12)

    @given(p0=st.floats(0.001, 0.999), k=st.floats(0.0, 0.99, exclude_max=True))
    def test_fit_guarantee(self, p0, k):
        a0, a1, pt0, pt1 = ra.overlap_factors(p0, k)
        assert a0 * p0 <= 1 + 1e-12 and a1 * (1 - p0) <= 1 + 1e-12
        assert pt0 + pt1 >= 1 - 1e-12 and a0 >= 1 and a1 >= 1


class TestSolveK:
    def test_termination_compensated(self):
        k = ra.solve_k(0.5, 0.5, 200, 15)
        assert k == pytest.approx(200 * 0.5 / 185) == pytest.approx(0.5405, abs=1e-4)

    def test_no_termination(self):
        assert ra.solve_k(0.8, 0.5, 100, 0) == pytest.approx(1 - 0.5 / h(0.8))

    def test_infeasible_low_rate(self):
        with pytest.raises(ra.Infeasible):
            ra.solve_k(0.5, 0.05, 200, 15)

    def test_all_terminal(self):
        assert ra.solve_k(0.5, 1.0, 10, 10) == 0.0
        with pytest.raises(ra.Infeasible):
            ra.solve_k(0.5, 0.9, 10, 10)

    def test_above_entropy(self):
        with pytest.raises(ra.InvalidParam):
            ra.solve_k(0.9, 0.6, 10, 0)

    @given(p0=st.floats(0.05, 0.95), frac=st.floats(0.3, 1.0), t=st.integers(0, 30))
    def test_inversion_through_quantized_k(self, p0, frac, t):
        n = 200
        target = frac * h(p0)
        try:
            k = ra.solve_k(p0, target, n, t)
        except ra.Infeasible:
            return
        kq = round(k * 65536) / 65536
        assert abs(ra.schedule_rate(p0, kq, n, n - t) - target) < 2**-15 * h(p0)


class TestMargin:
    def test_formula_chain(self):
        p = ra.crossover_for_cond_entropy(0.5, 0.25)
        r = ra.allocate_margin(0.5, p, 2.0, 100, 0)
        assert r.target_rate == pytest.approx(0.5) and r.k == pytest.approx(0.5)

    def test_independent_sources(self):
        assert ra.allocate_margin(0.7, 0.5, 1.0, 100).k == 0.0

    def test_skewed_target(self):
        r = ra.allocate_margin(0.9, 0.121, 1.12, 200, 15)
        assert r.target_rate == pytest.approx(0.32, abs=0.005)

    def test_mu_below_one(self):
        with pytest.raises(ra.InvalidParam):
            ra.allocate_margin(0.5, 0.1, 0.9, 100)


class TestSymmetric:
    p = ra.crossover_for_joint_entropy(0.5, 1.25)

    def test_equal_split(self):
        assert ra.allocate_symmetric(0.5, 0.5, self.p, 0.75, 0.75) == pytest.approx((0.5, 0.5))

    def test_unequal_split(self):
        assert ra.allocate_symmetric(0.5, 0.5, self.p, 0.6, 0.9) == pytest.approx((0.8, 0.2))

    def test_full_rate(self):
        assert ra.allocate_symmetric(0.5, 0.5, self.p, 1.0, 1.0) == (0.0, 0.0)

    def test_warns_outside_region(self):
        with pytest.warns(ra.SlepianWolfWarning):
            ra.allocate_symmetric(0.5, 0.5, self.p, 0.55, 0.6)

    def test_inside_region_silent(self):
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            ra.allocate_symmetric(0.5, 0.5, self.p, 0.75, 0.75, 200, 15)

    def test_compensated_matches_active_count(self):
        n, t = 200, 15
        kx, ky = ra.allocate_symmetric(0.5, 0.5, self.p, 0.75, 0.75, n, t)
        for k, role in ((kx, 0), (ky, 1)):
            m = ra.active_overlapped_count(n, t, role)
            assert m == len([i for i in range(n - t) if i % 2 == role])
            assert ra.schedule_rate(0.5, k, n, m) == pytest.approx(0.75)

    def test_infeasible(self):
        with pytest.raises(ra.Infeasible):
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                ra.allocate_symmetric(0.5, 0.5, self.p, 0.2, 1.0)

import math

import numpy as np
import pytest

from cpd import bounds
from cpd.core.errors import InputError, PreconditionError
from cpd.signals import make_signal, signal_stats


def _stats(n, cps, levels=None):
    levels = levels or [float(k % 2) for k in range(len(cps))]
    return signal_stats(make_signal(n, cps, levels))


class TestMy:
    def test_gaussian_value(self):
        assert bounds.compute_My_scalar(1.0, 100, 10.0) == pytest.approx(5.256522, abs=1e-6)

    def test_linear_in_sigma(self):
        one = bounds.compute_My_scalar(1.0, 100, 10.0)
        assert bounds.compute_My_scalar(2.0, 100, 10.0) == 2.0 * one

    def test_increasing_in_t(self):
        vals = [bounds.compute_My_scalar(1.0, 100, t) for t in (1.5, 10.0, 1e3, 1e9)]
        assert vals == sorted(vals) and len(set(vals)) == 4

    def test_other_families(self):
        g = bounds.compute_My_scalar(1.0, 100, 10.0)
        assert bounds.compute_My_scalar(1.0, 100, 10.0, "sub_gaussian_bounded") == pytest.approx(g * math.sqrt(3.0))
        assert bounds.compute_My_scalar(1.0, 100, 10.0, "sub_exponential") == pytest.approx(2.0 * math.log(1000.0))

    @pytest.mark.parametrize("sigma, n, t", [(-1.0, 10, 2.0), (1.0, 0, 2.0), (1.0, 10, 1.0), (1.0, 10, 0.5)])
    def test_invalid(self, sigma, n, t):
        with pytest.raises(InputError):
            bounds.compute_My_scalar(sigma, n, t)

    def test_zero_sigma(self):
        assert bounds.compute_My_scalar(0.0, 100, 10.0) == 0.0

    def test_group_value(self):
        assert bounds.compute_My_group(1.0, 100, 10.0, 1) == pytest.approx(math.sqrt(8.0 * math.log(1000.0) + 1.0))
        assert bounds.compute_My_group(1.0, 100, 10.0, 1) == pytest.approx(7.5008, abs=1e-4)

    def test_group_large_p_branch(self):
        # 8 ln t + p < 4p once p > 8 ln t / 3
        assert bounds.compute_My_group(1.0, 1, 1.5, 100) == pytest.approx(20.0)
        assert bounds.compute_My_group(3.0, 1, 1.5, 100) == pytest.approx(60.0)

    def test_group_invalid_p(self):
        with pytest.raises(InputError):
            bounds.compute_My_group(1.0, 10, 2.0, 0)


class TestScalarBounds:
    def test_elementwise_formula(self, small_stats):
        lam, My = 0.5, 3.0
        got = bounds.elementwise_bound_scalar(small_stats, lam, My)
        expected = [
            max(My / math.sqrt(d), My**2 / (4 * lam), 2 * lam / 3 + 2 * My / math.sqrt(3))
            for d in (1, 2, 1, 1, 2, 1)
        ]
        np.testing.assert_allclose(got, expected, rtol=1e-15)

    def test_noiseless_bound(self, small_stats):
        np.testing.assert_allclose(bounds.elementwise_bound_scalar(small_stats, 1.2, 0.0), 2 * 1.2 / 3)

    def test_symmetric_within_segment(self):
        st = _stats(30, [1, 11])
        b = bounds.elementwise_bound_scalar(st, 2.0, 1.3)
        seg = b[10:]
        np.testing.assert_array_equal(seg, seg[::-1])

    def test_nonincreasing_in_distance(self):
        st = _stats(40, [1, 21])
        b = bounds.elementwise_bound_scalar(st, 5.0, 2.0)
        first_half = b[:10]
        assert np.all(np.diff(first_half) <= 0)

    def test_lambda_must_be_positive(self, small_stats):
        with pytest.raises(InputError):
            bounds.elementwise_bound_scalar(small_stats, 0.0, 1.0)
        with pytest.raises(InputError):
            bounds.sos_bound_scalar(small_stats, 0.0, 1.0, 6)

    def test_sos_hand_evaluation(self):
        st = _stats(100, [1, 51])
        My = 5.2565
        lam = My * 10.0
        t1 = My**4 / (16 * lam**2)
        t2 = 8 * lam**2 / 100 * (1 / 50 + 1 / 50)
        t3 = 2 / 100 * My**2 * (4 + 2 + 2 * math.log(50))
        assert bounds.sos_bound_scalar(st, lam, My, 100) == pytest.approx(t1 + t2 + t3, rel=1e-14)

    def test_sos_single_segment(self):
        st = _stats(80, [1])
        My, lam = 2.0, 7.0
        expected = My**4 / (16 * lam**2) + 8 * lam**2 / 80**2 + 2 * My**2 / 80 * (5 + math.log(80))
        assert bounds.sos_bound_scalar(st, lam, My, 80) == pytest.approx(expected, rel=1e-14)

    def test_sos_noiseless(self, small_stats):
        assert bounds.sos_bound_scalar(small_stats, 2.0, 0.0, 6) == pytest.approx(8 * 4.0 / 6 * (2 / 3))


class TestGroupBounds:
    def test_window_edges(self):
        st = _stats(2000, [1, 501, 1001, 1501])
        My = 9.0
        bounds.elementwise_bound_group(st, 625.0 * My, My)
        with pytest.raises(PreconditionError):
            bounds.elementwise_bound_group(st, 625.0 * My * (1 - 1e-12), My)
        hi = (7 * 500 - math.sqrt(500)) * My
        with pytest.raises(PreconditionError):
            bounds.elementwise_bound_group(st, hi, My)
        with pytest.raises(PreconditionError):
            bounds.sos_bound_group(st, 10.0, My, 2000)

    def test_dominant_term(self):
        st = _stats(2_000_000, [1])
        b = bounds.elementwise_bound_group(st, 625.0, 1.0)
        # middle of the segment: d = 1e6, the sqrt(My^3 / lam) term wins
        assert b[999_999] == pytest.approx(5.0)
        assert b[0] == pytest.approx(25.0 * math.sqrt(5.0))

    def test_per_term_formula(self):
        st = _stats(1200, [1, 401, 801])
        My, lam = 1.5, 1000.0
        got = bounds.elementwise_bound_group(st, lam, My)
        m = 400.0
        for i in (0, 7, 199, 400, 1199):
            d = float(st.d[i])
            expected = max(
                4 * (My * math.sqrt(m / 2) + lam) / m,
                50 * My / math.sqrt(m),
                25 * math.sqrt(5) * My / math.sqrt(d),
                125 * math.sqrt(My**3 / lam),
            )
            assert got[i] == pytest.approx(expected, rel=1e-14)

    def test_sos_single_segment(self):
        st = _stats(1000, [1])
        My, lam = 1.0, 700.0
        expected = 6250 * math.log(1000) + 6000 + 32 * lam**2 / 1000 + 125**2 * 1000 / lam
        assert bounds.sos_bound_group(st, lam, My, 1000) == pytest.approx(expected, rel=1e-14)

    def test_sos_lambda_scaling(self):
        st = _stats(4000, [1, 2001])
        My = 1.0
        a = bounds.sos_bound_group(st, 1000.0, My, 4000)
        b = bounds.sos_bound_group(st, 2000.0, My, 4000)
        const = 6250 * 2 * math.log(2000) + 6000 * 2
        lam_sq = 32 * 1000.0**2 * 2 / 2000
        last = 125**2 * 4000 / 1000.0
        assert a == pytest.approx(const + lam_sq + last)
        assert b == pytest.approx(const + 4 * lam_sq + last / 2)


class TestDetectionParams:
    def test_boundary_is_rejected(self):
        with pytest.raises(PreconditionError):
            bounds.detection_params_scalar(16.0, 1, 1.0)

    def test_c_equals_three(self):
        W, My = 900, 2.0
        H = 24.0 * My / math.sqrt(W)
        p = bounds.detection_params_scalar(H, W, My)
        assert p.C == pytest.approx(3.0)
        assert p.dH_guarantee == pytest.approx(W / 18.0)
        assert p.lam == pytest.approx(2.0 * My * math.sqrt(W))
        assert p.offset == pytest.approx(W / 36.0)

    def test_identity(self, rng):
        for _ in range(100):
            W = int(rng.integers(1, 5000))
            My = float(rng.uniform(0.1, 10.0))
            H = 16.0 * My / math.sqrt(W) * float(rng.uniform(1.01, 20.0))
            p = bounds.detection_params_scalar(H, W, My)
            assert abs(32 * My**2 / H**2 - p.dH_guarantee) <= 1e-12 * max(1.0, p.dH_guarantee)

    def test_group(self):
        p = bounds.detection_params_group(1000, 1.0, 2.0)
        assert p.H_n == pytest.approx(1.92)
        assert p.offset == pytest.approx(5.0 / 48.0 * 10.0)
        assert p.dH_guarantee == 2.0 * p.offset
        assert p.lam == pytest.approx(1000.0)
        assert p.in_window is True

    def test_group_window_reported(self):
        assert bounds.detection_params_group(8, 1.0, 1.5).in_window is False

    def test_group_requires_c_above_one(self):
        with pytest.raises(PreconditionError):
            bounds.detection_params_group(1000, 1.0, 1.0)


def test_bound_profile(small_stats):
    prof = bounds.bound_profile(small_stats, 2.0, 1.0, 10.0)
    assert prof.confidence == pytest.approx(0.99)
    assert prof.regime == "scalar"
    assert prof.per_index.shape == (6,)
    assert np.all(np.isfinite(prof.per_index)) and np.all(prof.per_index > 0)
    assert prof.sos_bound == bounds.sos_bound_scalar(small_stats, 2.0, 1.0, 6)


def test_anchored_bound():
    b = bounds.anchored_bound(9, 3.0, 1.0)
    assert b.shape == (9,)
    np.testing.assert_array_equal(b, b[::-1])
    assert b[0] == pytest.approx(max(1.0, 1.0 / 12.0, 6.0 / 9.0 + 2.0 / 3.0))
    loose = bounds.anchored_bound(9, 3.0, 1.0, opposite_signs=True)
    assert np.all(loose <= b)
    assert loose[4] == pytest.approx(1.0 / math.sqrt(5.0))


def test_lambda_rules():
    assert bounds.lambda_rule("my_sqrt_n", 2.0, 100) == pytest.approx(20.0)
    assert bounds.lambda_rule("my_root4_nw", 2.0, 100, 25) == pytest.approx(2.0 * 50**0.5)
    with pytest.raises(InputError):
        bounds.lambda_rule("my_root4_nw", 2.0, 100)
    with pytest.raises(InputError):
        bounds.lambda_rule("oracle", 2.0, 100)

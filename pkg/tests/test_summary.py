import math

import numpy as np
import pytest

from emastream.params import ConsistencyError, DimensionError, NonFiniteError, Params
from emastream.summary import (
    CFTuple,
    EATuple,
    MCClass,
    Point,
    cf_degrade,
    cf_recompute,
    cf_update,
    classify_mc,
    degrade_tuple,
    pdim,
    preference_vector,
    projected_distance,
    projected_radius,
    update_tuple,
    variance,
)


def ea(ea1, ea2, w=1.0):
    return EATuple(np.asarray(ea1, float), np.asarray(ea2, float), w)


def ea_oracle(points, ea1_init, alpha, events):
    """Closed-form geometric sum; ``events`` marks update (True) or degrade (False)."""
    total = len(events)
    out = (1 - alpha) ** total * np.asarray(ea1_init, float)
    it = iter(points)
    for i, is_update in enumerate(events):
        if is_update:
            out = out + alpha * (1 - alpha) ** (total - 1 - i) * next(it)
    return out


class TestUpdate:
    def test_constant_point_is_fixed(self, params):
        v = np.full(4, 0.37)
        t = ea(v, v * v, 5.0)
        t2 = update_tuple(t, Point(v, seq=3), params)
        np.testing.assert_allclose(t2.ea1, v, rtol=0, atol=1e-15)
        np.testing.assert_allclose(t2.ea2, v * v, rtol=0, atol=1e-15)
        assert t2.w == 6.0
        assert t2.last_update_seq == 3

    def test_alpha_default(self):
        p = Params(n_window=200)
        assert p.alpha == pytest.approx(2 / 201, abs=1e-15)
        t = update_tuple(ea(np.zeros(3), np.zeros(3)), Point(np.ones(3)), p)
        np.testing.assert_allclose(t.ea1, 0.009950248756218905, rtol=1e-12)

    def test_original_unchanged(self, params):
        t = ea([0.1, 0.2], [0.01, 0.04])
        update_tuple(t, Point([1.0, 1.0]), params)
        np.testing.assert_array_equal(t.ea1, [0.1, 0.2])

    def test_matches_closed_form_1000(self, params, rng):
        pts = rng.random((1000, 6))
        init = rng.random(6)
        t = ea(init, init ** 2)
        for i, x in enumerate(pts):
            t = update_tuple(t, Point(x, seq=i), params)
        expected = ea_oracle(pts, init, params.alpha, [True] * 1000)
        np.testing.assert_allclose(t.ea1, expected, rtol=0, atol=1e-9)

    def test_dimension_mismatch(self, params):
        with pytest.raises(DimensionError):
            update_tuple(ea([0.0, 0.0], [0.0, 0.0]), Point([1.0, 2.0, 3.0]), params)

    def test_non_finite(self, params):
        with pytest.raises(NonFiniteError):
            update_tuple(ea([0.0, 0.0], [0.0, 0.0]), Point([1.0, np.nan]), params)


class TestDegrade:
    def test_half(self):
        p = Params(n_window=3)  # alpha = 0.5
        t = degrade_tuple(ea([1.0, 0.0], [1.0, 0.0], 4.0), p)
        np.testing.assert_array_equal(t.ea1, [0.5, 0.0])
        assert t.w == 2.0

    def test_zero_fixed_point(self, params):
        t = degrade_tuple(ea(np.zeros(3), np.zeros(3), 0.0), params)
        assert not t.ea1.any() and not t.ea2.any() and t.w == 0.0

    def test_repeated(self, params):
        t = ea(np.ones(2), np.ones(2))
        for _ in range(200):
            t = degrade_tuple(t, params)
        factor = 1.0
        for _ in range(200):
            factor *= 1 - 2 / 201
        np.testing.assert_allclose(t.ea1, factor, rtol=1e-12)
        assert factor == pytest.approx(0.1353, abs=1e-4)

    def test_weight_kept_when_decay_off(self):
        p = Params(decay_weight=False)
        t = degrade_tuple(ea([1.0], [1.0], 7.0), p)
        assert t.w == 7.0

    def test_last_update_unchanged(self, params):
        t = ea([1.0], [1.0])
        t.last_update_seq = 9
        assert degrade_tuple(t, params).last_update_seq == 9


class TestVariance:
    def test_identical_points(self, params):
        v = np.array([0.2, 0.9, 0.0])
        t = EATuple.from_point(Point(v))
        for i in range(50):
            t = update_tuple(t, Point(v, seq=i), params)
        assert np.all(variance(t) == 0)

    def test_arithmetic(self):
        np.testing.assert_allclose(variance(ea([0.5], [0.5])), [0.25])

    def test_alternating_stream(self, params):
        t = EATuple.from_point(Point([0.0, 1.0]))
        xs = [np.array([float(i % 2), float((i + 1) % 2)]) for i in range(1, 1000)]
        for i, x in enumerate(xs):
            t = update_tuple(t, Point(x, seq=i), params)
        # brute-force recomputation of both moving averages
        a = params.alpha
        n = len(xs)
        m1 = (1 - a) ** n * np.array([0.0, 1.0]) + sum(a * (1 - a) ** (n - 1 - i) * x for i, x in enumerate(xs))
        m2 = (1 - a) ** n * np.array([0.0, 1.0]) + sum(a * (1 - a) ** (n - 1 - i) * x * x for i, x in enumerate(xs))
        oracle = m2 - m1 ** 2
        np.testing.assert_allclose(variance(t), oracle, atol=1e-9)
        np.testing.assert_allclose(variance(t), 0.25, atol=0.01)

    def test_tiny_negative_clamped(self):
        t = ea([0.1], [0.1 * 0.1 - 5e-13])
        assert variance(t)[0] == 0.0

    def test_inconsistent_raises(self):
        with pytest.raises(ConsistencyError):
            variance(ea([0.5], [0.2]))


class TestPreference:
    def test_all_zero_variance(self, params):
        t = ea([0.3, 0.4], [0.09, 0.16])
        np.testing.assert_array_equal(preference_vector(t, params), [1000.0, 1000.0])
        assert pdim(t, params) == 2

    def test_all_large_variance(self, params):
        t = ea([0.5, 0.5], [0.5, 0.5])
        np.testing.assert_array_equal(preference_vector(t, params), [1.0, 1.0])
        assert pdim(t, params) == 0

    def test_thresholding(self, params):
        t = ea([0.0, 0.0, 0.0], [0.001, 0.5, 0.0019])
        np.testing.assert_array_equal(preference_vector(t, params), [1000.0, 1.0, 1000.0])
        assert pdim(t, params) == 2

    def test_constant_stream_d35(self, params):
        v = np.linspace(0, 1, 35)
        assert pdim(EATuple.from_point(Point(v)), params) == 35


class TestRadiusDistance:
    def test_constant_radius_zero(self, params):
        assert projected_radius(EATuple.from_point(Point([0.3, 0.1])), params) == 0.0

    def test_all_preferred_radius(self):
        p = Params(xi=1.0)
        t = ea([0.0, 0.0], [0.04, 0.09])
        assert projected_radius(t, p) == pytest.approx(math.sqrt(0.13), rel=1e-12)

    def test_mixed_radius(self):
        # xi between the two variances so that only dimension 0 is preferred
        p = Params(xi=0.05, rho=1000.0)
        t = ea([0.0, 0.0], [0.04, 0.09])
        np.testing.assert_array_equal(preference_vector(t, p), [1000.0, 1.0])
        assert projected_radius(t, p) == pytest.approx(0.2002248735796829, rel=1e-12)

    def test_distance_at_center(self, params):
        t = ea([0.2, 0.7], [0.05, 0.5])
        assert projected_distance(Point([0.2, 0.7]), t, params) == 0.0
        assert projected_distance(Point([0.2, 0.7]), t, params.with_(distance_normalizer="xi")) == 0.0

    def test_all_preferred_is_euclidean(self, params):
        t = EATuple.from_point(Point([0.1, 0.2, 0.3]))
        q = np.array([0.4, 0.6, 0.3])
        assert projected_distance(Point(q), t, params) == pytest.approx(
            np.linalg.norm(q - t.ea1), rel=1e-12)

    def test_mixed_distance(self, params):
        t = ea([0.0, 0.0], [0.0, 0.5])
        assert projected_distance(Point([0.3, 0.4]), t, params) == pytest.approx(
            0.300266548253381, rel=1e-12)

    def test_xi_normalizer(self):
        p = Params(distance_normalizer="xi")
        t = ea([0.0, 0.0], [0.0, 0.5])
        expected = math.sqrt(1000 / 0.002 * 0.09 + 1 / 0.002 * 0.16)
        assert projected_distance(Point([0.3, 0.4]), t, p) == pytest.approx(expected, rel=1e-12)

    def test_distance_dim_mismatch(self, params):
        with pytest.raises(DimensionError):
            projected_distance(Point([0.1]), ea([0.0, 0.0], [0.0, 0.0]), params)


class TestClassify:
    def test_burst_core(self, params):
        v = np.full(35, 0.5)
        t = EATuple(v.copy(), v * v, 200.0)
        assert pdim(t, params) == 35 > params.pi_dim
        assert classify_mc(t, params) is MCClass.CORE

    def test_fresh_outlier(self, params):
        t = EATuple.from_point(Point(np.full(35, 0.5)))
        assert classify_mc(t, params) is MCClass.OUTLIER

    def test_wide_is_neither(self):
        p = Params(eps=0.01)
        t = ea([0.0, 0.0], [0.5, 0.5], 500.0)
        assert projected_radius(t, p) >= p.eps
        assert classify_mc(t, p) is MCClass.NEITHER
        t.w = 1.0
        assert classify_mc(t, p) is MCClass.NEITHER

    def test_weight_tie_is_not_core(self, params):
        t = ea(np.zeros(35), np.r_[np.zeros(30), np.full(5, 0.25)], float(params.mu))
        assert pdim(t, params) == 30
        assert classify_mc(t, params) is MCClass.NEITHER

    def test_pure(self, params):
        t = ea(np.zeros(35), np.r_[np.zeros(30), np.full(5, 0.25)], 42.0)
        assert classify_mc(t, params) is classify_mc(t, params) is MCClass.CORE


class TestCF:
    def test_plain_sum_without_fading(self):
        p = Params(n_window=5, lam=1e-12)
        t = CFTuple.empty(2, 5)
        pts = [np.array([0.1, 0.2]), np.array([0.3, 0.5]), np.array([0.9, 0.0])]
        for i, x in enumerate(pts):
            t = cf_update(t, Point(x, seq=i), p)
        np.testing.assert_allclose(t.cf1, np.sum(pts, axis=0), rtol=1e-9)
        assert t.w == pytest.approx(3.0, rel=1e-9)

    def test_steady_state_when_full(self):
        p = Params(n_window=4, lam=1e-12)
        v = np.array([0.25, 0.75])
        t = CFTuple.empty(2, 4)
        for i in range(4):
            t = cf_update(t, Point(v, seq=i), p)
        before = t.cf1.copy()
        t = cf_update(t, Point(v, seq=4), p)
        np.testing.assert_allclose(t.cf1, before, rtol=1e-9)
        assert t.count == 4

    def test_weight_profile(self, params):
        t = CFTuple.empty(1, params.n_window)
        for i in range(params.n_window):
            t = cf_update(t, Point([1.0], seq=i), params)
        pts, times = t.window_points()
        wts = 2.0 ** (-params.lam * (t.now - times) / params.n_window) / t.w
        assert wts[-1] == pytest.approx(0.0054, abs=2e-4)
        assert wts[0] == pytest.approx(0.0046, abs=2e-4)

    def test_eviction_matches_recompute(self, params, rng):
        p = params.with_(n_window=7)
        t = CFTuple.empty(3, 7)
        seq = 0
        for _ in range(40):
            t = cf_update(t, Point(rng.random(3), seq=seq), p)
            seq += 1
            for _ in range(int(rng.integers(0, 3))):
                t = cf_degrade(t, p)
                seq += 1
        cf1, cf2, w = cf_recompute(t, p)
        np.testing.assert_allclose(t.cf1, cf1, rtol=1e-9)
        np.testing.assert_allclose(t.cf2, cf2, rtol=1e-9)
        assert t.w == pytest.approx(w, rel=1e-9)
        assert t.count == 7

    def test_dim_mismatch(self, params):
        with pytest.raises(DimensionError):
            cf_update(CFTuple.empty(2, 5), Point([1.0]), params)

    def test_cf_feeds_shared_math(self, params):
        t = CFTuple.from_point(Point([0.2, 0.4]), params)
        assert projected_radius(t, params) == 0.0
        assert classify_mc(t, params) is MCClass.NEITHER  # d=2 < pi but w=1 < mu

    def test_resident_values(self):
        assert CFTuple.empty(35, 200).resident_values() == 71 + 7000
        assert EATuple(np.zeros(35), np.zeros(35), 1.0).resident_values() == 71

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from seekrl.features import EPSILON_DIV, FeatureFilter, RawDifferenceFeatures

unit = st.floats(0.0, 1.0)


class TestUpdate:
    def test_steady_state(self):
        f = FeatureFilter(0.5)
        s1, s2 = f.update(0.5)
        assert s1 == 0.0
        assert s2 == 0.0

    def test_hand_evaluated_step(self):
        # c_f = 0.9 * 0.8 + 0.1 * 1.0 = 0.82, s1 = 0.18 / 0.82, s2 = 0.64
        f = FeatureFilter(0.8)
        s1, s2 = f.update(1.0)
        assert f.c_f == pytest.approx(0.82, abs=1e-12)
        assert s1 == pytest.approx(0.18 / 0.82, abs=1e-12)
        assert s2 == pytest.approx(0.64, abs=1e-12)

    def test_saturation(self):
        f = FeatureFilter(1.0)
        s1, s2 = f.update(1.0)
        assert s1 == 0.0
        assert s2 == 1.0

    def test_division_guard_in_darkness(self):
        f = FeatureFilter(0.0)
        s1, s2 = f.update(0.0)
        assert s1 == 0.0
        assert s2 == -1.0
        # a bright flash right after darkness stays finite through the guard
        s1, _ = f.update(1.0)
        assert math.isfinite(s1)
        assert s1 == pytest.approx((1.0 - 0.1) / max(0.1, EPSILON_DIV), abs=1e-12)

    def test_out_of_range_reading_rejected(self):
        f = FeatureFilter(0.5)
        with pytest.raises(ValueError):
            f.update(1.5)
        with pytest.raises(ValueError):
            f.update(-0.1)


class TestReset:
    @pytest.mark.parametrize("first_c", [0.3, 0.0, 1.0])
    def test_seeds_state(self, first_c):
        assert FeatureFilter(first_c).c_f == first_c
        f = FeatureFilter(0.5)
        f.reset(first_c)
        assert f.c_f == first_c

    def test_alpha_range_enforced(self):
        with pytest.raises(ValueError):
            FeatureFilter(0.5, alpha=1.0)
        with pytest.raises(ValueError):
            FeatureFilter(1.5)


class TestProperties:
    @given(c0=unit, c=unit)
    @settings(max_examples=300, deadline=None)
    def test_state_stays_in_unit_interval(self, c0, c):
        f = FeatureFilter(c0)
        f.update(c)
        assert 0.0 <= f.c_f <= 1.0

    @given(c0=unit, c=unit)
    @settings(max_examples=300, deadline=None)
    def test_s2_is_affine_in_state(self, c0, c):
        f = FeatureFilter(c0)
        _, s2 = f.update(c)
        assert (s2 + 1.0) / 2.0 == pytest.approx(f.c_f, abs=2**-50)
        assert -1.0 <= s2 <= 1.0

    @given(c0=unit, target=unit, k=st.integers(1, 60))
    @settings(max_examples=300, deadline=None)
    def test_geometric_convergence_to_constant_input(self, c0, target, k):
        f = FeatureFilter(c0)
        for _ in range(k):
            f.update(target)
        bound = (0.9**k) * abs(c0 - target)
        assert abs(f.c_f - target) <= bound * (1.0 + 1e-9) + 1e-15

    @given(c0=st.floats(0.05, 1.0), c=unit)
    @settings(max_examples=300, deadline=None)
    def test_gradient_sign(self, c0, c):
        if abs(c - c0) < 1e-9:
            return
        f = FeatureFilter(c0)
        s1, _ = f.update(c)
        assert (s1 > 0.0) == (c > c0)

    @given(c0=unit, cs=st.lists(unit, min_size=1, max_size=50))
    @settings(max_examples=200, deadline=None)
    def test_state_is_weighted_history(self, c0, cs):
        # after n updates: c_f = 0.9^n c_f(0) + 0.1 * sum 0.9^(n-1-i) c_i
        f = FeatureFilter(c0)
        for c in cs:
            f.update(c)
        n = len(cs)
        expected = (0.9**n) * c0 + 0.1 * sum((0.9 ** (n - 1 - i)) * c for i, c in enumerate(cs))
        assert f.c_f == pytest.approx(expected, abs=1e-12)


class TestRawDifference:
    def test_one_step_difference(self):
        f = RawDifferenceFeatures(0.4)
        s1, s2 = f.update(0.7)
        assert s1 == pytest.approx(0.3, abs=1e-12)
        assert s2 == pytest.approx(0.4, abs=1e-12)
        s1, _ = f.update(0.7)
        assert s1 == 0.0

    def test_reset(self):
        f = RawDifferenceFeatures(0.1)
        f.reset(0.9)
        s1, _ = f.update(0.9)
        assert s1 == 0.0

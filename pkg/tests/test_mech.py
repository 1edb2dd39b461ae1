import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from logcalib.calibrate import PrivacyBudget, SensitivitySpec, gaussian_scale, scale_for_budget
from logcalib.errors import DomainError
from logcalib.mech import (VectorMechanism, apply, calibrate_vector, linear_sensitivity_bound,
                           p_norm)
from logcalib.noise import laplace_family, logistic_family, subbotin_family

from _oracles import shift_of_unit_norm, two_dim_hockey


class TestCalibrateVector:
    def test_vector_laplace(self):
        mech = calibrate_vector(1.0, PrivacyBudget(1.0, 0.0), 1.0)
        assert mech.scale == pytest.approx(1.0, rel=1e-12)
        assert mech.p == 1.0

    def test_one_dimensional_gaussian(self):
        budget = PrivacyBudget(0.7, 1e-3)
        mech = calibrate_vector(2.0, budget, 1.3, dimension=1)
        assert mech.scale == gaussian_scale(budget, 1.3).scale

    def test_reduction_is_exact(self):
        budget = PrivacyBudget(1.0, 1e-4)
        mech = calibrate_vector(4.0, budget, 1.0, dimension=50)
        assert mech.scale == scale_for_budget(subbotin_family(4), budget, 1.0).scale

    def test_mismatched_norm(self):
        with pytest.raises(DomainError, match="does not match"):
            VectorMechanism(subbotin_family(3), 1.0, SensitivitySpec(1.0, norm_order=2.0))

    def test_needs_subbotin(self):
        with pytest.raises(DomainError):
            VectorMechanism(logistic_family(), 1.0, SensitivitySpec(1.0, norm_order=1.0))

    def test_rejects_small_p(self):
        with pytest.raises(DomainError):
            calibrate_vector(0.5, PrivacyBudget(1.0, 0.1), 1.0)


class TestApply:
    def test_zero_scale(self, rng):
        mech = VectorMechanism(laplace_family(), 0.0, SensitivitySpec(1.0))
        q = np.array([1.0, -2.0, 3.5])
        assert np.array_equal(apply(mech, q, rng), q)

    def test_reproducible(self):
        mech = calibrate_vector(2.0, PrivacyBudget(1.0, 1e-3), 1.0, dimension=3)
        q = [0.1, 0.2, 0.3]
        a = apply(mech, q, np.random.default_rng(11))
        b = apply(mech, q, np.random.default_rng(11))
        assert a.tobytes() == b.tobytes()

    def test_laplace_variance(self, rng):
        mech = VectorMechanism(laplace_family(), 2.0, SensitivitySpec(1.0, dimension=10 ** 5))
        out = apply(mech, np.zeros(10 ** 5), rng)
        assert out.var() == pytest.approx(8.0, rel=0.02)

    def test_unbiased(self, rng):
        mech = calibrate_vector(3.0, PrivacyBudget(1.0, 1e-3), 1.0, dimension=2)
        q = np.array([4.0, -1.0])
        out = np.array([apply(mech, q, rng) for _ in range(10 ** 5)])
        err = out - q
        se = err.std(axis=0, ddof=1) / math.sqrt(err.shape[0])
        assert np.all(np.abs(err.mean(axis=0)) < 3 * se)

    def test_preserves_shape(self, rng):
        mech = calibrate_vector(1.5, PrivacyBudget(1.0, 1e-3), 1.0)
        assert apply(mech, np.zeros((2, 3)), rng).shape == (2, 3)


class TestNorms:
    @pytest.mark.parametrize("v, p, expected", [
        ((3, 4), 2, 5.0),
        ((1, 1, 1, 1), 1, 4.0),
        ((1, -1), 3, 2 ** (1 / 3)),
        ((), 2, 0.0),
        ((0, 0), 5, 0.0),
    ])
    def test_examples(self, v, p, expected):
        assert p_norm(v, p) == pytest.approx(expected, rel=1e-15)

    def test_large_entries(self):
        assert p_norm([1e200, 1e200], 2) == pytest.approx(math.sqrt(2) * 1e200)

    @settings(max_examples=200, deadline=None)
    @given(u=st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=6),
           w=st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=6),
           p=st.floats(1.0, 20.0))
    def test_triangle_inequality(self, u, w, p):
        n = min(len(u), len(w))
        a, b = np.array(u[:n]), np.array(w[:n])
        assert p_norm(a + b, p) <= (p_norm(a, p) + p_norm(b, p)) * (1 + 1e-12) + 1e-300

    def test_rejects(self):
        with pytest.raises(DomainError):
            p_norm([1.0], 0.5)


class TestSensitivityBound:
    def test_examples(self):
        assert linear_sensitivity_bound(10, 1 / 500, 1.0, 2.0) == pytest.approx(0.0063246,
                                                                               abs=5e-8)
        assert linear_sensitivity_bound(4, 1.0, 1.0, 1.0) == 4.0
        assert linear_sensitivity_bound(9, 0.0, 1.0, 2.0) == 0.0

    def test_cube_corners_attain_bound(self):
        # Two records at opposite cube corners change the mean by diam / n in every coordinate.
        m, n, p = 7, 50, 3.0
        diff = np.full(m, 1.0 / n)
        assert p_norm(diff, p) == pytest.approx(linear_sensitivity_bound(m, 1 / n, 1.0, p))

    def test_rejects(self):
        with pytest.raises(DomainError):
            linear_sensitivity_bound(0, 1.0, 1.0, 2.0)
        with pytest.raises(DomainError):
            linear_sensitivity_bound(3, -1.0, 1.0, 2.0)


@pytest.mark.parametrize("p", [1.0, 2.0])
def test_two_dimensional_reduction(p):
    budget = PrivacyBudget(1.0, 0.01)
    mech = calibrate_vector(p, budget, 1.0, dimension=2)
    values = {d: two_dim_hockey(p, 1.0, shift_of_unit_norm(p, d), mech.scale)
              for d in ("axis", "diagonal", "tilted")}
    assert values["axis"] == pytest.approx(0.01, abs=1e-6)
    assert max(values.values()) == pytest.approx(values["axis"], abs=1e-6)

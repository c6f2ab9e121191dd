import math

import numpy as np
import pytest
from hypothesis import example, given, settings
from hypothesis import strategies as st

import oracles
from narrowframe.errors import DomainError, ValidationError
from narrowframe.preferences import (
    Preferences,
    aggregate,
    ce_array,
    certainty_equivalent,
    inverse_utility,
    utility,
)

betas = st.floats(0.01, 0.99)
rhos = st.floats(0.1, 5.0)
gammas = st.floats(0.1, 12.0)
positive = st.floats(1e-3, 1e3)


class TestPreferencesValidation:
    @pytest.mark.parametrize(
        "kwargs, path",
        [
            (dict(beta=1.0, rho=0.5, gamma=2), "preferences.beta"),
            (dict(beta=0.0, rho=0.5, gamma=2), "preferences.beta"),
            (dict(beta=0.9, rho=0.0, gamma=2), "preferences.rho"),
            (dict(beta=0.9, rho=0.5, gamma=-1), "preferences.gamma"),
            (dict(beta=0.9, rho=0.5, gamma=2, loss_aversion=0.5), "preferences.loss_aversion"),
            (dict(beta=0.9, rho=0.5, gamma=2, framing_weights=(0.1, -0.1)), "preferences.framing_weights[1]"),
        ],
    )
    def test_rejects_out_of_range(self, kwargs, path):
        with pytest.raises(ValidationError) as info:
            Preferences(**kwargs)
        assert info.value.path == path

    def test_alpha(self):
        assert Preferences(0.9, 0.5, 8.0).alpha == pytest.approx(-14.0)
        with pytest.raises(ValueError):
            Preferences(0.9, 1.0, 8.0).alpha

    def test_unit_tolerance(self):
        assert Preferences(0.9, 1 + 5e-10, 2).rho_is_one
        assert not Preferences(0.9, 1 + 5e-9, 2).rho_is_one


class TestAggregate:
    def test_examples(self):
        assert aggregate(1, 1, Preferences(0.5, 0.5, 2)) == 1.0
        assert aggregate(4, 1, Preferences(0.5, 1.0, 2)) == pytest.approx(2.0, rel=1e-15)
        assert aggregate(1, 0, Preferences(0.5, 2.0, 2)) == 0.0

    def test_boundaries(self):
        assert aggregate(0, 3, Preferences(0.5, 1.0, 2)) == 0.0
        assert aggregate(3, 0, Preferences(0.5, 1.0, 2)) == 0.0
        assert aggregate(0, 3, Preferences(0.5, 3.0, 2)) == 0.0
        # rho < 1 keeps the surviving term
        assert aggregate(1, 0, Preferences(0.75, 0.5, 2)) == pytest.approx(0.25**2)

    def test_negative_rejected(self):
        with pytest.raises(DomainError):
            aggregate(1, -1e-9, Preferences(0.5, 0.5, 2))

    def test_continuity_at_zero(self):
        prefs = Preferences(0.5, 2.0, 2)
        vals = [aggregate(1, z, prefs) for z in (1e-2, 1e-4, 1e-8)]
        assert vals[0] > vals[1] > vals[2] and vals[2] < 1e-7

    def test_vectorised(self):
        prefs = Preferences(0.3, 0.7, 2)
        out = aggregate(np.array([1.0, 2.0]), np.array([3.0, 0.5]), prefs)
        assert out.shape == (2,)
        assert out[1] == pytest.approx(oracles.H(2.0, 0.5, 0.3, 0.7))

    @given(betas, rhos, positive, positive)
    def test_matches_oracle(self, beta, rho, c, z):
        prefs = Preferences(beta, rho, 2)
        assert aggregate(c, z, prefs) == pytest.approx(oracles.H(c, z, beta, rho), rel=1e-12)

    @given(betas, rhos, positive, positive, st.floats(1e-2, 1e2))
    def test_homogeneous(self, beta, rho, c, z, lam):
        prefs = Preferences(beta, rho, 2)
        assert aggregate(lam * c, lam * z, prefs) == pytest.approx(lam * aggregate(c, z, prefs), rel=1e-12)

    @given(betas, rhos, positive, positive)
    @example(0.5, 5.0, 773.0, 0.25)
    def test_increasing(self, beta, rho, c, z):
        # a term far smaller than the other can vanish in rounding
        prefs = Preferences(beta, rho, 2)
        base = aggregate(c, z, prefs)
        up_c, up_z = aggregate(c * 1.01, z, prefs), aggregate(c, z * 1.01, prefs)
        assert up_c >= base and up_z >= base
        if 1e-2 <= c / z <= 1e2:
            assert up_c > base and up_z > base


class TestCertaintyEquivalent:
    def test_examples(self):
        assert certainty_equivalent([(1, 0.5), (2, 0.5)], Preferences(0.5, 0.5, 2)) == pytest.approx(4 / 3, rel=1e-15)
        assert certainty_equivalent([(1, 0.5), (4, 0.5)], Preferences(0.5, 0.5, 1)) == pytest.approx(2.0, rel=1e-15)
        assert certainty_equivalent([(0, 0.1), (5, 0.9)], Preferences(0.5, 0.5, 8)) == 0.0

    def test_zero_atom_with_gamma_below_one(self):
        # u(0) = 0 is finite, so the atom simply contributes nothing
        got = certainty_equivalent([(0, 0.5), (4, 0.5)], Preferences(0.5, 0.5, 0.5))
        assert got == pytest.approx((0.5 * 2.0) ** 2)

    def test_probability_validation(self):
        prefs = Preferences(0.5, 0.5, 2)
        with pytest.raises(ValidationError):
            certainty_equivalent([(1, 0.5), (2, 0.49)], prefs)
        with pytest.raises(ValidationError):
            certainty_equivalent([(1, 1.5), (2, -0.5)], prefs)
        with pytest.raises(ValidationError):
            certainty_equivalent([], prefs)
        # within 1e-12 is renormalised
        assert certainty_equivalent([(2, 0.5), (2, 0.5 + 5e-13)], prefs) == 2.0

    def test_degenerate_exact(self):
        assert certainty_equivalent([(0.123456789, 1.0)], Preferences(0.5, 0.5, 8)) == 0.123456789

    def test_zero_probability_atoms_ignored(self):
        prefs = Preferences(0.5, 0.5, 8)
        assert certainty_equivalent([(0, 0.0), (3, 1.0)], prefs) == 3.0

    def test_overflow_guard(self):
        # values near 0.05 with gamma = 8 give x**-7 ~ 1e9; extreme gamma would overflow naive sums
        vals = np.array([0.05, 0.06, 0.07])
        probs = np.array([0.2, 0.5, 0.3])
        assert ce_array(vals, probs, 8.0) == pytest.approx(oracles.ce(vals, probs, 8.0), rel=1e-13)
        tiny = np.array([1e-200, 2e-200])
        got = ce_array(tiny, np.array([0.5, 0.5]), 60.0)
        assert math.isfinite(got) and 1e-200 <= got <= 2e-200

    def test_utility_inverse(self):
        for gamma in (0.5, 1.0, 3.0):
            assert inverse_utility(utility(2.5, gamma), gamma) == pytest.approx(2.5)

    @settings(max_examples=200)
    @given(st.lists(st.tuples(st.floats(1e-3, 1e3), st.floats(0.01, 1.0)), min_size=1, max_size=8), gammas)
    def test_matches_oracle_and_bounds(self, atoms, gamma):
        vals = np.array([a for a, _ in atoms])
        probs = np.array([p for _, p in atoms])
        probs = probs / probs.sum()
        got = ce_array(vals, probs, gamma)
        assert got == pytest.approx(oracles.ce(vals, probs, gamma), rel=1e-10)
        assert vals.min() * (1 - 1e-12) <= got <= vals.max() * (1 + 1e-12)

    @settings(max_examples=200)
    @given(st.lists(st.floats(1e-2, 1e2), min_size=2, max_size=6), st.floats(0.1, 6), st.floats(0.1, 6))
    def test_risk_aversion_ordering(self, vals, g1, g2):
        vals = np.array(vals)
        probs = np.full(vals.size, 1 / vals.size)
        lo, hi = sorted((g1, g2))
        assert ce_array(vals, probs, lo) >= ce_array(vals, probs, hi) * (1 - 1e-12)

    @settings(max_examples=200)
    @given(st.lists(st.floats(1e-2, 1e2), min_size=2, max_size=6), gammas, st.floats(0, 1))
    def test_monotone(self, vals, gamma, bump):
        vals = np.array(vals)
        probs = np.full(vals.size, 1 / vals.size)
        bigger = vals.copy()
        bigger[0] += bump
        assert ce_array(bigger, probs, gamma) >= ce_array(vals, probs, gamma) * (1 - 1e-12)

import numpy as np
import pytest

import oracles
from conftest import random_model
from narrowframe.errors import DomainError, IterationLimitError
from narrowframe.market import MarketModel
from narrowframe.portfolio import Policy, policy_framing
from narrowframe.preferences import Preferences, aggregate
from narrowframe.utility import (
    FramingSpec,
    analyze_singleton,
    anchor_f0,
    apply_T,
    growth_condition,
    iterate_T,
    singleton_closed_form,
    singleton_map,
    verify_assumption3,
)

P2 = np.array([[0.6, 0.4], [0.2, 0.8]])


def singleton(delta: float, varpi: float = 0.0):
    model = MarketModel.from_chain([[1.0]])
    return model, FramingSpec(np.full((1, 1, 1), np.log(delta)), [varpi])


class TestApplyT:
    def test_singleton_is_H_of_delta_f(self):
        prefs = Preferences(0.9, 0.5, 3.0)
        model, spec = singleton(1.02)
        assert apply_T([2.0], spec, model, prefs)[0] == pytest.approx(aggregate(1.0, 1.02 * 2.0, prefs), rel=1e-14)

    def test_zero_function(self):
        model = MarketModel.from_chain(P2)
        spec = FramingSpec.constant(model, 0.01)
        assert apply_T([0, 0], spec, model, Preferences(0.9, 0.5, 2)) == pytest.approx([0.1**2] * 2)
        assert apply_T([0, 0], spec, model, Preferences(0.9, 2.0, 2)) == pytest.approx([0.0, 0.0])

    def test_domain_error_lists_states(self):
        model = MarketModel.from_chain(P2)
        spec = FramingSpec(np.zeros(model.joint.shape), [0.1, -5.0])
        with pytest.raises(DomainError) as info:
            apply_T([1.0, 1.0], spec, model, Preferences(0.9, 0.5, 2))
        assert info.value.states == [1]

    def test_negative_input_rejected(self):
        model = MarketModel.from_chain(P2)
        with pytest.raises(DomainError):
            apply_T([-1.0, 1.0], FramingSpec.constant(model), model, Preferences(0.9, 0.5, 2))

    def test_matches_loop_oracle(self, rng):
        model = random_model(rng, 5)
        kappa = 0.05 * rng.standard_normal(model.joint.shape)
        varpi = 0.1 * rng.random(5)
        prefs = Preferences(0.8, 0.6, 4.0)
        f = 0.5 + rng.random(5)
        got = apply_T(f, FramingSpec(kappa, varpi), model, prefs)
        assert got == pytest.approx(oracles.apply_T(f, kappa, varpi, model, 0.8, 0.6, 4.0), rel=1e-13)

    @pytest.mark.parametrize("rho,gamma", [(0.5, 3.0), (2.0, 0.5), (1.0, 1.0), (0.7, 1.0)])
    def test_monotone_and_subhomogeneous(self, rng, rho, gamma):
        model = random_model(rng, 4)
        spec = FramingSpec(0.03 * rng.standard_normal(model.joint.shape), 0.2 * rng.random(4))
        prefs = Preferences(0.85, rho, gamma)
        for _ in range(20):
            f = 0.1 + rng.random(4)
            g = f + rng.random(4)
            assert np.all(apply_T(f, spec, model, prefs) <= apply_T(g, spec, model, prefs) + 1e-15)
            r = rng.random()
            assert np.all(apply_T(r * f, spec, model, prefs) >= r * apply_T(f, spec, model, prefs) - 1e-15)


class TestGrowth:
    def test_unit_rho_always_passes(self):
        model, spec = singleton(50.0)
        res = growth_condition(spec, model, Preferences(0.97, 1.0, 2))
        assert res.passed and res.product == 0.97

    def test_scalar_examples(self):
        model, spec = singleton(1.02)
        res = growth_condition(spec, model, Preferences(0.97, 0.5, 2))
        assert res.passed and res.product == pytest.approx(0.97 * 1.02**0.5, rel=1e-13)
        assert res.product == pytest.approx(0.9797, abs=1e-4)
        model, spec = singleton(0.5)
        res = growth_condition(spec, model, Preferences(0.9, 3.0, 2))
        assert not res.passed and res.product == pytest.approx(3.6, rel=1e-12)


class TestIterate:
    @pytest.mark.parametrize("beta,rho,delta", [(0.9, 0.5, 1.02), (0.95, 2.0, 0.98), (0.7, 0.3, 1.3)])
    def test_closed_form(self, beta, rho, delta):
        prefs = Preferences(beta, rho, 2.0)
        model, spec = singleton(delta)
        rep = iterate_T([1.0], spec, model, prefs)
        expected = ((1 - beta) / (1 - beta * delta ** (1 - rho))) ** (1 / (1 - rho))
        assert rep.fixed_point[0] == pytest.approx(expected, rel=1e-10)
        assert singleton_closed_form(delta, prefs) == pytest.approx(expected, rel=1e-15)
        assert rep.growth.passed and rep.assumption3.status == "not-applicable"

    def test_closed_form_unit_rho(self):
        prefs = Preferences(0.9, 1.0, 2.0)
        model, spec = singleton(1.05)
        rep = iterate_T([1.0], spec, model, prefs)
        assert rep.fixed_point[0] == pytest.approx(1.05 ** 9, rel=1e-10)

    def test_two_starts_agree_on_reference_policy(self, example):
        model, prefs, _ = example
        spec = policy_framing(model, prefs, Policy([0.0585, 0.0730], [[1.0], [0.15]]))
        a = iterate_T([1e-3, 1e-3], spec, model, prefs).fixed_point
        b = iterate_T([1e3, 1e3], spec, model, prefs).fixed_point
        assert np.max(np.abs(a - b)) <= 1e-10

    def test_residual_within_tolerance(self, rng):
        model = random_model(rng, 4)
        spec = FramingSpec(0.01 * rng.standard_normal(model.joint.shape), rng.random(4))
        prefs = Preferences(0.9, 0.5, 5.0)
        rep = iterate_T(np.ones(4), spec, model, prefs, tol=1e-12)
        resid = np.max(np.abs(apply_T(rep.fixed_point, spec, model, prefs) - rep.fixed_point))
        assert resid <= 1e-11
        assert rep.final_residual <= max(1e-12, 8 * np.finfo(float).eps * rep.fixed_point.max())

    def test_iteration_limit_reports_evidence(self):
        model, spec = singleton(1.02)
        with pytest.raises(IterationLimitError) as info:
            iterate_T([1.0], spec, model, Preferences(0.9, 0.5, 2.0), max_iter=5)
        err = info.value
        assert len(err.residuals) == 5 and err.last is not None and err.previous is not None

    def test_contraction_rate(self):
        # alpha = (1 - gamma)/(1 - rho) >= 1 here
        prefs = Preferences(0.9, 2.0, 4.0)
        model = MarketModel.from_chain(P2, atom_values=(0.97, 1.03), atom_probs=(0.5, 0.5))
        spec = FramingSpec(np.log(model.noise.values), [0.0, 0.0])
        res = []
        iterate_T([3.0, 0.2], spec, model, prefs, trace=lambda i, r: res.append(r))
        bound = growth_condition(spec, model, prefs).product
        ratios = [b / a for a, b in zip(res[10:], res[11:]) if b > 1e-8]
        assert ratios and max(ratios[-5:]) <= bound + 1e-6

    def test_negative_varpi_fixed_point_exceeds_anchor(self):
        prefs = Preferences(0.9, 0.5, 3.0)
        model = MarketModel.from_chain(P2, atom_values=(0.98, 1.04), atom_probs=(0.5, 0.5))
        spec = FramingSpec(np.log(model.noise.values), [0.3, -0.01])
        assert verify_assumption3(spec, model, prefs).passed
        f0 = anchor_f0(spec, prefs)
        rep = iterate_T(f0, spec, model, prefs)
        assert np.all(rep.fixed_point > f0)
        oracle = oracles.fixed_point_T(f0, spec.kappa, spec.varpi, model, 0.9, 0.5, 3.0)
        assert rep.fixed_point == pytest.approx(oracle, rel=1e-10)


class TestAssumption3:
    def test_not_applicable(self):
        model, spec = singleton(1.02, 0.1)
        assert verify_assumption3(spec, model, Preferences(0.9, 0.5, 2)).status == "not-applicable"

    def test_pass_when_anchor_exceeds_threshold(self):
        # rho < 1 and (1 - beta)**(1/(1 - rho)) > -varpi/delta
        prefs = Preferences(0.9, 0.5, 2.0)
        delta, varpi = 1.02, -0.005
        assert (1 - 0.9) ** 2 > -varpi / delta
        model, spec = singleton(delta, varpi)
        assert verify_assumption3(spec, model, prefs).passed

    def test_fail_without_fixed_point(self):
        prefs = Preferences(0.5, 2.0, 2.0)
        delta, varpi = 1.0, -0.3
        assert analyze_singleton(delta, varpi, prefs).n_roots == 0
        model, spec = singleton(delta, varpi)
        res = verify_assumption3(spec, model, prefs)
        assert res.status == "fail" and res.reason in ("domain", "no-strict-improvement")

    def test_domain_failure(self):
        prefs = Preferences(0.9, 0.5, 2.0)
        model, spec = singleton(1.0, -5.0)
        assert verify_assumption3(spec, model, prefs).reason == "domain"


class TestSingletonCensus:
    def test_zero_varpi_closed_form(self):
        prefs = Preferences(0.9, 0.5, 2.0)
        census = analyze_singleton(1.02, 0.0, prefs)
        assert census.n_roots == 1
        assert census.roots[0] == pytest.approx(singleton_closed_form(1.02, prefs), rel=1e-11)

    def test_unique_for_rho_below_one(self):
        prefs = Preferences(0.9, 0.5, 2.0)
        census = analyze_singleton(1.02, -0.005, prefs)
        assert census.n_roots == 1 and census.regime == "one"

    @pytest.mark.parametrize("varpi,count", [(-0.3, 0), (-0.05, 2)])
    def test_rho_above_one(self, varpi, count):
        prefs = Preferences(0.5, 2.0, 2.0)
        census = analyze_singleton(1.0, varpi, prefs)
        assert census.n_roots == count
        T = singleton_map(1.0, varpi, prefs)
        lo = census.domain_lo
        assert oracles.sign_changes(lambda f: T(f) - f, lo + 1e-12, lo + 10.0, 200_001) == count
        for r in census.roots:
            assert float(T(r)) == pytest.approx(r, abs=1e-10)

    def test_invalid_delta(self):
        with pytest.raises(ValueError):
            analyze_singleton(0.0, 0.0, Preferences(0.9, 0.5, 2.0))

import numpy as np
import pytest
from hypothesis import given, strategies as st

from locallearn import rules
from locallearn.rules import (
    CLAMPED, ERROR, OUTPUT, RANGE_01, RANGE_11, DegenerateRuleError,
    LearningRule, MissingTargetError, QuadraticCoefficients, RuleTerm,
    catalog, classify_degrees, evaluate_update, get_rule, range_transform,
)


def term(c, nT=0, nO=0, nPre=0, nW=0, mode=OUTPUT):
    return RuleTerm(coefficient=c, exp_target=nT, exp_post=nO, exp_pre=nPre,
                    exp_weight=nW, post_mode=mode)


class TestDegrees:
    # degree labels stated alongside each rule in the literature
    @pytest.mark.parametrize("name,want", [
        ("simple_hebb", (2, 1)),
        ("oja", (3, 3)),
        ("new_rule", (4, 3)),
        ("clamped_hebb", (2, 0)),
        ("gradient", (2, 1)),
        ("perceptron", (2, 1)),
        ("input_saturation", (3, 2)),
        ("presynaptic_decay", (3, 1)),
    ])
    def test_catalog_labels(self, name, want):
        assert classify_degrees(get_rule(name)) == want

    def test_apparent_vs_effective_degree(self):
        # w * O^2 * I has apparent weight degree 1 but effective degree 3
        rule = LearningRule(terms=(term(1.0, nO=2, nPre=1, nW=1),))
        assert classify_degrees(rule) == (4, 3)

    def test_error_factors_count_toward_d(self):
        rule = LearningRule(terms=(term(1.0, nO=2, nW=1, mode=ERROR),))
        assert classify_degrees(rule) == (3, 3)

    def test_clamped_factors_do_not_count_toward_d(self):
        rule = LearningRule(terms=(term(1.0, nO=2, nW=1, mode=CLAMPED),))
        assert classify_degrees(rule) == (3, 1)

    def test_empty_rule_degenerate(self):
        with pytest.raises(DegenerateRuleError, match="degenerate"):
            classify_degrees(LearningRule(terms=()))

    def test_cancelling_rule_degenerate(self):
        r = LearningRule(terms=(term(1.0, nO=1, nPre=1),
                                term(-1.0, nO=1, nPre=1)))
        with pytest.raises(DegenerateRuleError):
            classify_degrees(r)

    def test_max_degree_enforced(self):
        with pytest.raises(ValueError, match="max degree"):
            LearningRule(terms=(term(1.0, nO=4, nPre=1, nW=1),))


class TestEquality:
    def test_zero_decay_is_simple_hebb(self):
        assert rules.fixed_decay(0.0) == get_rule("simple_hebb")

    def test_error_mode_expands_to_monomials(self):
        a = LearningRule(terms=(term(1.0, nO=1, nPre=1, mode=ERROR),))
        b = LearningRule(terms=(term(1.0, nT=1, nPre=1),
                                term(-1.0, nO=1, nPre=1)))
        assert a == b
        assert hash(a) == hash(b)

    def test_term_order_irrelevant(self):
        a = LearningRule(terms=(term(1.0, nO=1, nPre=1), term(-1.0, nO=2, nW=1)))
        b = LearningRule(terms=(term(-1.0, nO=2, nW=1), term(1.0, nO=1, nPre=1)))
        assert a == b

    def test_catalog_distinct_name_terms(self):
        cat = catalog()
        assert len(cat) >= 20
        pairs = {(name, rule.monomials) for name, rule in cat.items()}
        assert len(pairs) == len(cat)


class TestEvaluate:
    def test_simple_hebb(self):
        assert evaluate_update(get_rule("simple_hebb"), 1.0, -1.0) == -1.0

    def test_oja_hand_value(self):
        # O=2, I=1, w=0.5: 2*1 - 4*0.5 = 0
        assert evaluate_update(get_rule("oja"), 2.0, 1.0, w=0.5) == 0.0

    def test_gradient(self):
        got = evaluate_update(get_rule("gradient"), 0.25, 2.0, target=1.0,
                              eta=0.1)
        assert got == pytest.approx(0.15)

    def test_missing_target(self):
        with pytest.raises(MissingTargetError):
            evaluate_update(get_rule("clamped_hebb"), 1.0, 1.0)

    # keep magnitudes well clear of the subnormal range, where doubling no
    # longer commutes with rounding
    _vals = st.one_of(st.just(0.0), st.floats(1e-3, 3.0),
                      st.floats(-3.0, -1e-3))

    @given(_vals, _vals, _vals, _vals, st.floats(0.01, 4))
    def test_eta_homogeneous(self, o, i, w, t, eta):
        rule = get_rule("oja_gradient")
        one = evaluate_update(rule, o, i, w=w, target=t, eta=eta)
        two = evaluate_update(rule, o, i, w=w, target=t, eta=2 * eta)
        assert two == 2.0 * one

    @given(st.floats(-2, 2), st.floats(-2, 2), st.floats(-1.5, 1.5),
           st.floats(-1, 1))
    def test_merge_invariance(self, o, i, w, t):
        # authoring with an error factor or with its expanded monomials
        # evaluates identically
        a = LearningRule(terms=(term(0.5, nO=1, nPre=1, mode=ERROR),
                                term(0.5, nT=1, nPre=1),
                                term(-0.5, nO=1, nPre=1)))
        b = LearningRule(terms=(term(1.0, nT=1, nPre=1),
                                term(-1.0, nO=1, nPre=1)))
        assert a == b
        va = evaluate_update(a, o, i, w=w, target=t)
        vb = evaluate_update(b, o, i, w=w, target=t)
        assert va == pytest.approx(vb, abs=1e-12)


class TestRangeTransform:
    def test_hebb_form(self):
        out = range_transform(QuadraticCoefficients(1, 0, 0, 0), RANGE_01)
        assert (out.alpha, out.beta, out.gamma, out.delta) == (4, -2, -2, 1)

    def test_zero_fixed(self):
        out = range_transform(QuadraticCoefficients(0, 0, 0, 0), RANGE_01)
        assert out == QuadraticCoefficients(0, 0, 0, 0)

    @given(st.tuples(*(st.floats(-50, 50) for _ in range(4))))
    def test_round_trip(self, coeffs):
        c = QuadraticCoefficients(*coeffs)
        back = range_transform(range_transform(c, RANGE_01), RANGE_11)
        assert np.max(np.abs(back.as_array() - c.as_array())) <= 1e-12 * max(
            1.0, np.max(np.abs(c.as_array())))

    def test_fixed_point_space(self):
        # the exact fixed points of the forward map: only rules with no
        # activity dependence (alpha = beta = gamma = 0) keep their form;
        # solve (M - I) x = 0 by nullspace
        m = rules.RANGE_TRANSFORM_MATRIX - np.eye(4)
        _u, s, vt = np.linalg.svd(m)
        null = vt[s < 1e-12]
        assert null.shape[0] == 1
        direction = null[0] / np.max(np.abs(null[0]))
        assert np.allclose(np.abs(direction), [0, 0, 0, 1], atol=1e-12)
        # hence no quadratic rule that actually uses the activities is
        # form-invariant under the range change
        for vec in np.eye(3):
            assert np.linalg.norm(m @ np.append(vec, 0.0)) > 0.5


class TestSerialization:
    def test_json_round_trip(self):
        rule = get_rule("oja_gradient_error")
        back = LearningRule.from_json(rule.to_json())
        assert back == rule
        assert back.name == rule.name

    def test_packed_monomials_match_evaluate(self):
        rng = np.random.default_rng(0)
        for name in ("simple_hebb", "oja", "delta", "new_rule_gradient",
                     "hebb_squared_decay_gradient_error"):
            rule = get_rule(name)
            coeffs, e_t, e_o, e_pre, e_w = rules.pack_monomials(rule)
            for _ in range(20):
                o, i, w, t = rng.normal(size=4)
                via_terms = evaluate_update(rule, o, i, w=w, target=t)
                via_monomials = float(np.sum(
                    coeffs * t**e_t * o**e_o * i**e_pre * w**e_w))
                assert via_monomials == pytest.approx(via_terms, rel=1e-9,
                                                      abs=1e-9)

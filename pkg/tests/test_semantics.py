import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import make_program
from soclogic import (Interpretation, World, count_true_groundings,
                      eval_ground_rule, rule_distance, soft_and, soft_neg,
                      soft_or, world_log_weight)

unit = st.floats(min_value=0.0, max_value=1.0, allow_nan=False)


class TestSoftConnectives:
    def test_worked_example(self):
        # conjunction of a certain spouse fact with a 0.6 like
        assert soft_and(1.0, 0.6) == 0.6

    def test_clamps(self):
        assert soft_and(0.7, 0.2) == 0.0
        assert soft_or(0.8, 0.5) == 1.0

    def test_negation(self):
        assert soft_neg(0.3) == 0.7

    def test_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            soft_and(1.2, 0.5)
        with pytest.raises(ValueError):
            soft_or(0.5, -0.1)
        with pytest.raises(ValueError):
            soft_neg(2.0)

    @given(unit, unit)
    def test_commutative(self, a, b):
        assert soft_and(a, b) == soft_and(b, a)
        assert soft_or(a, b) == soft_or(b, a)

    @given(unit, unit, unit)
    def test_monotone(self, a, b, c):
        lo, hi = sorted((b, c))
        assert soft_and(a, lo) <= soft_and(a, hi)
        assert soft_or(a, lo) <= soft_or(a, hi)

    @pytest.mark.parametrize("a", [0.0, 1.0])
    @pytest.mark.parametrize("b", [0.0, 1.0])
    def test_boolean_agreement(self, a, b):
        assert soft_and(a, b) == float(bool(a) and bool(b))
        assert soft_or(a, b) == float(bool(a) or bool(b))
        assert soft_neg(a) == float(not a)


def implication(n_atoms=2, weight=1.0, body=((0, False),), head=(1, False)):
    return make_program([(weight, list(body), head)], n_atoms)


class TestEvalGroundRule:
    def test_body_true_head_false(self):
        program = implication()
        world = World.from_dict(program, {0: True, 1: False})
        assert eval_ground_rule(program.rules[0], world) is False

    def test_body_false_head_false(self):
        program = implication()
        world = World.from_dict(program, {0: False, 1: False})
        assert eval_ground_rule(program.rules[0], world) is True

    def test_negated_body_literal(self):
        program = implication(body=((0, True),))
        # atom 0 false -> negated literal true -> body holds -> head decides
        world = World.from_dict(program, {0: False, 1: True})
        assert eval_ground_rule(program.rules[0], world) is True
        world = World.from_dict(program, {0: False, 1: False})
        assert eval_ground_rule(program.rules[0], world) is False

    def test_world_must_be_total(self):
        program = implication()
        with pytest.raises(Exception, match="not total"):
            World.from_dict(program, {0: True})


class TestCountTrueGroundings:
    def test_single_grounding_violated(self):
        program = implication()
        world = World.from_dict(program, {0: True, 1: False})
        assert count_true_groundings(0, program, world) == 0

    def test_single_grounding_satisfied(self):
        program = implication()
        world = World.from_dict(program, {0: False, 1: False})
        assert count_true_groundings(0, program, world) == 1

    def test_two_groundings_both_satisfied(self):
        from soclogic import GroundedProgram, GroundRule
        base = make_program(
            [(1.0, [(0, False)], (1, False)), (1.0, [(2, False)], (3, False))],
            4)
        # same source rule grounded twice
        rules = tuple(GroundRule(r.weight, r.body, r.head, 0) for r in base.rules)
        program = GroundedProgram(base.atoms, rules, {}, base.kb)
        world = World.from_dict(program, {0: True, 1: True, 2: False, 3: False})
        assert count_true_groundings(0, program, world) == 2

    def test_unknown_rule_id(self):
        program = implication()
        world = World.from_dict(program, {0: True, 1: True})
        with pytest.raises(Exception, match="unknown rule"):
            count_true_groundings(5, program, world)


class TestWorldLogWeight:
    def test_single_satisfied(self):
        program = implication(weight=2.0)
        world = World.from_dict(program, {0: True, 1: True})
        assert world_log_weight(program, world) == 2.0

    def test_hard_violation_marker(self):
        program = implication(weight=math.inf)
        world = World.from_dict(program, {0: True, 1: False})
        assert world_log_weight(program, world) == -math.inf

    def test_weighted_sum(self):
        program = make_program(
            [(1.0, [(0, False)], (1, False)),
             (0.5, [(2, False)], (3, False)),
             (0.5, [(3, False)], (2, False))],
            4)
        world = World.from_dict(program, {0: False, 1: False, 2: True, 3: True})
        # n = {1, 2} against weights {1.0, 0.5}
        assert world_log_weight(program, world) == 1.0 + 0.5 + 0.5


class TestRuleDistance:
    def test_satisfied_when_body_below_head(self):
        program = implication()
        interp = Interpretation.from_dict(program, {0: 0.4, 1: 0.7})
        assert rule_distance(program.rules[0], interp) == 0.0

    def test_definition(self):
        program = implication()
        interp = Interpretation.from_dict(program, {0: 0.9, 1: 0.6})
        assert rule_distance(program.rules[0], interp) == pytest.approx(0.3)

    def test_two_literal_body_fold(self):
        # frozen by hand: soft_and(1.0, 0.6) = 0.6, then max(0, 0.6 - 0.2)
        program = make_program(
            [(1.0, [(0, False), (1, False)], (2, False))], 3)
        interp = Interpretation.from_dict(program, {0: 1.0, 1: 0.6, 2: 0.2})
        assert rule_distance(program.rules[0], interp) == pytest.approx(0.4)

    @given(unit, unit)
    def test_distance_in_unit_and_zero_iff_satisfied(self, b, h):
        program = implication()
        interp = Interpretation.from_dict(program, {0: b, 1: h})
        d = rule_distance(program.rules[0], interp)
        assert 0.0 <= d <= 1.0
        assert (d == 0.0) == (b <= h)

    @given(st.booleans(), st.booleans())
    def test_boolean_interp_matches_boolean_eval(self, b, h):
        program = implication()
        interp = Interpretation.from_dict(program, {0: float(b), 1: float(h)})
        world = World.from_dict(program, {0: b, 1: h})
        zero = rule_distance(program.rules[0], interp) == 0.0
        assert zero == eval_ground_rule(program.rules[0], world)

import math

import pytest

from soclogic import (GroundAtom, GroundingError, KnowledgeBase, ParseError,
                      format_rule, ground, parse_rule)


@pytest.fixture
def social_kb():
    kb = KnowledgeBase()
    kb.declare_predicate("Friend", ("User", "User"), irreflexive=True)
    kb.declare_predicate("Spouse", ("User", "User"), irreflexive=True)
    kb.declare_predicate("LiveInSamePlace", ("User", "User"), irreflexive=True)
    kb.declare_predicate("WorkInIT", ("User",))
    kb.declare_predicate("LikeElectronics", ("User",), role="query")
    kb.declare_predicate("Like", ("User", "Entity"), role="query",
                         category_scoped=True)
    return kb


class TestParser:
    def test_weighted_rule(self, social_kb):
        rule = parse_rule("0.242: WorkInIT(u) => LikeElectronics(u)", social_kb)
        assert rule.weight == 0.242
        assert len(rule.body) == 1
        assert rule.body[0].predicate.name == "WorkInIT"
        assert rule.head.predicate.name == "LikeElectronics"
        assert not rule.is_hard

    def test_hard_rule(self, social_kb):
        rule = parse_rule("HARD: Spouse(a,b) => Friend(a,b)", social_kb)
        assert rule.is_hard
        assert rule.weight == math.inf

    def test_malformed_reports_position(self, social_kb):
        with pytest.raises(ParseError) as exc:
            parse_rule("0.5: Friend(a,b =>", social_kb)
        assert exc.value.pos > 0

    def test_unknown_predicate(self, social_kb):
        with pytest.raises(ParseError, match="unknown predicate"):
            parse_rule("0.5: Enemy(a,b) => Friend(a,b)", social_kb)

    def test_arity_mismatch(self, social_kb):
        with pytest.raises(ParseError):
            parse_rule("0.5: Friend(a) => LikeElectronics(a)", social_kb)

    def test_malformed_weight(self, social_kb):
        with pytest.raises(ParseError, match="weight"):
            parse_rule("soft: Friend(a,b) => Friend(b,a)", social_kb)

    def test_unbound_head_variable(self, social_kb):
        with pytest.raises(ParseError, match="unbound head variable"):
            parse_rule("0.5: WorkInIT(u) => Friend(u,v)", social_kb)

    def test_head_only_rule_quantifies_head_vars(self, social_kb):
        rule = parse_rule("-1.0: => LikeElectronics(u)", social_kb)
        assert rule.body == ()
        assert rule.head.predicate.name == "LikeElectronics"

    def test_negation_and_constants(self, social_kb):
        rule = parse_rule("0.3: !WorkInIT(u) => Like(u, @e1)", social_kb)
        assert rule.body[0].negated
        assert rule.head.args[1].symbol == "e1"

    def test_conflicting_variable_sorts(self, social_kb):
        with pytest.raises(ParseError, match="conflicting sorts"):
            parse_rule("0.5: Friend(a,b) => Like(a, b)", social_kb)

    def test_distinct_vars_default_from_user_user_body(self, social_kb):
        assert parse_rule("1.0: Friend(a,b) => Friend(b,a)", social_kb).distinct_vars
        assert not parse_rule("1.0: WorkInIT(u) => LikeElectronics(u)",
                              social_kb).distinct_vars

    def test_trailing_garbage(self, social_kb):
        with pytest.raises(ParseError):
            parse_rule("0.5: WorkInIT(u) => LikeElectronics(u) extra", social_kb)


class TestRoundTrip:
    CASES = [
        "0.242: WorkInIT(u) => LikeElectronics(u)",
        "HARD: Spouse(a,b) => Friend(a,b)",
        "-1.5: !WorkInIT(u) => Like(u, @e1)",
        "0.5: Friend(a,b) & WorkInIT(a) => LikeElectronics(b)",
        "2.0: => LikeElectronics(u)",
    ]

    @pytest.mark.parametrize("text", CASES)
    def test_parse_print_identity(self, social_kb, text):
        rule = parse_rule(text, social_kb)
        assert parse_rule(format_rule(rule, social_kb), social_kb) == rule

    def test_non_default_distinct_flag_round_trips(self, social_kb):
        rule = parse_rule("1.0: Friend(a,b) => Friend(b,a)", social_kb,
                          distinct_vars=False)
        text = format_rule(rule, social_kb)
        assert "[mixed]" in text
        assert parse_rule(text, social_kb) == rule


class TestGrounding:
    def test_distinct_vars_enumeration(self):
        kb = KnowledgeBase()
        kb.declare_predicate("Friend", ("User", "User"), role="query")
        kb.declare_predicate("LiveInSamePlace", ("User", "User"), role="query")
        kb.add_constants(["u1", "u2"], "User")
        kb.add_rule("1.0: Friend(a,b) => LiveInSamePlace(a,b)")
        program = ground(kb)
        assert len(program.rules) == 2  # (u1,u2) and (u2,u1)
        pairs = {tuple(program.atoms[a].args for a, _ in r.body)
                 for r in program.rules}
        assert pairs == {(("u1", "u2"),), (("u2", "u1"),)}

    def test_category_cutoff_drops_cross_category(self):
        kb = KnowledgeBase()
        kb.declare_predicate("Friend", ("User", "User"))
        kb.declare_predicate("Like", ("User", "Entity"), role="query",
                             category_scoped=True)
        kb.add_constants(["a", "b"], "User")
        kb.add_constant("e_fish", "Entity")
        kb.add_constant("e_football", "Entity")
        kb.set_category("e_fish", "food")
        kb.set_category("e_football", "sports")
        # cross-category instance: dropped entirely by the cut-off
        kb.add_rule("1.0: Friend(a,b) & Like(a,@e_fish) => Like(b,@e_football)")
        assert len(ground(kb).rules) == 0
        assert len(ground(kb, cutoff=False).rules) == 2

        # same variable entity: every grounding is single-category and survives
        kb.rules.clear()
        kb.add_rule("1.0: Friend(a,b) & Like(a,e) => Like(b,e)")
        program = ground(kb)
        assert len(program.rules) == 2 * 2  # ordered user pairs x entities
        for rule in program.rules:
            cats = {kb.entity_category_map[program.atoms[a].args[1]]
                    for a, _ in rule.body + (rule.head,)
                    if program.atoms[a].pred == "Like"}
            assert len(cats) == 1

    def test_empty_sort_errors(self):
        kb = KnowledgeBase()
        kb.declare_predicate("Like", ("User", "Entity"), role="query")
        kb.add_constant("u1", "User")
        kb.add_rule("1.0: Like(u,e) => Like(u,e)")
        with pytest.raises(GroundingError, match="empty sort"):
            ground(kb)

    def test_missing_category_label_errors(self):
        kb = KnowledgeBase()
        kb.declare_predicate("Like", ("User", "Entity"), role="query",
                             category_scoped=True)
        kb.add_constant("u1", "User")
        kb.add_constant("e1", "Entity")
        kb.add_rule("1.0: Like(u,e) => Like(u,e)")
        with pytest.raises(GroundingError, match="category"):
            ground(kb)

    def test_irreflexive_drops_equal_constants(self):
        kb = KnowledgeBase()
        kb.declare_predicate("Friend", ("User", "User"), irreflexive=True)
        kb.declare_predicate("Nice", ("User",), role="query")
        kb.add_constants(["u1", "u2"], "User")
        kb.add_rule("1.0: Friend(a,b) => Nice(a)", distinct_vars=False)
        program = ground(kb)
        for rule in program.rules:
            friend = program.atoms[rule.body[0][0]]
            assert friend.args[0] != friend.args[1]

    def test_grounding_deterministic(self, social_kb):
        social_kb.add_constants(["u1", "u2", "u3"], "User")
        social_kb.add_rule("0.7: Friend(a,b) => LiveInSamePlace(a,b)")
        p1 = ground(social_kb)
        p2 = ground(social_kb)
        assert p1.atoms == p2.atoms
        assert p1.rules == p2.rules
        assert p1.evidence == p2.evidence

    def test_grounding_size_bound(self, social_kb):
        social_kb.add_constants(["u1", "u2", "u3"], "User")
        social_kb.add_rule("0.7: Friend(a,b) => LiveInSamePlace(a,b)",
                           distinct_vars=False)
        program = ground(social_kb)
        assert len(program.rules) <= 3 ** 2

    def test_closed_world_fills_evidence_role_only(self):
        kb = KnowledgeBase()
        kb.declare_predicate("Obs", ("X",))
        kb.declare_predicate("Q", ("X",), role="query")
        kb.add_constants(["a", "b"], "X")
        kb.add_rule("1.0: Obs(x) => Q(x)")
        program = ground(kb, {GroundAtom("Obs", ("a",)): 1.0})
        ev = {str(program.atoms[i]): v for i, v in program.evidence.items()}
        assert ev == {"Obs(a)": 1.0, "Obs(b)": 0.0}

    def test_open_predicates_skip_closed_world(self):
        kb = KnowledgeBase()
        kb.declare_predicate("Obs", ("X",))
        kb.declare_predicate("Q", ("X",), role="query")
        kb.add_constants(["a", "b"], "X")
        kb.add_rule("1.0: Obs(x) => Q(x)")
        program = ground(kb, {}, open_predicates={"Obs"})
        assert program.evidence == {}

    def test_prune_satisfied_evidence_rules(self):
        kb = KnowledgeBase()
        kb.declare_predicate("Obs", ("X",))
        kb.add_constants(["a"], "X")
        kb.add_rule("HARD: Obs(x) => Obs(x)")
        full = ground(kb, {GroundAtom("Obs", ("a",)): 1.0})
        pruned = ground(kb, {GroundAtom("Obs", ("a",)): 1.0},
                        prune_satisfied=True)
        assert len(full.rules) == 1
        assert len(pruned.rules) == 0

    def test_evidence_validation(self, social_kb):
        social_kb.add_constants(["u1", "u2"], "User")
        with pytest.raises(GroundingError, match="unknown constant"):
            ground(social_kb, {GroundAtom("Friend", ("u1", "zz")): 1.0})
        with pytest.raises(GroundingError, match="irreflexive"):
            ground(social_kb, {GroundAtom("Friend", ("u1", "u1")): 1.0})
        with pytest.raises(GroundingError, match="out of"):
            ground(social_kb, {GroundAtom("Friend", ("u1", "u2")): 1.5})

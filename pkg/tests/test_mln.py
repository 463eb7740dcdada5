import math

import numpy as np
import pytest

import oracles
from conftest import make_program, random_program, single_rule_program
from soclogic import (GroundAtom, InfeasibleError, MlnConfig, TooManyFreeAtoms,
                      conditional_query, exact_joint, exact_query, gibbs_joint,
                      gibbs_query, ground, learn_discriminative, onehot_query,
                      KnowledgeBase)

L1A = GroundAtom("L1", ("a",))
L2A = GroundAtom("L2", ("a",))


def joint_prob(atoms, probs, assignment):
    mask = 0
    for k, atom in enumerate(atoms):
        if assignment.get(atom, False):
            mask |= 1 << k
    keep = np.ones(len(probs), dtype=bool)
    for k, atom in enumerate(atoms):
        if atom in assignment:
            bit = (np.arange(len(probs)) >> k) & 1
            keep &= bit == int(assignment[atom])
    return float(probs[keep].sum())


class TestExactQuery:
    @pytest.mark.parametrize("w", [0.0, math.log(2), 1.0, 3.0])
    def test_paper_closed_form(self, w):
        program = single_rule_program(w)
        atoms, probs = exact_joint(program)
        p_violate = joint_prob(atoms, probs, {L1A: True, L2A: False})
        assert p_violate == pytest.approx(1.0 / (1.0 + 3.0 * math.exp(w)),
                                          abs=1e-12)
        for other in ({L1A: True, L2A: True}, {L1A: False, L2A: True},
                      {L1A: False, L2A: False}):
            assert joint_prob(atoms, probs, other) == pytest.approx(
                math.exp(w) / (1.0 + 3.0 * math.exp(w)), abs=1e-12)

    def test_zero_weight_uniform(self):
        program = single_rule_program(0.0)
        marg = exact_query(program)
        assert marg[L2A] == pytest.approx(0.5, abs=1e-12)
        _, probs = exact_joint(program)
        assert np.allclose(probs, 0.25)

    def test_conditional_closed_form(self):
        program = single_rule_program(math.log(2), evidence={L1A: 1.0})
        marg = exact_query(program)
        assert marg[L2A] == pytest.approx(2.0 / 3.0, abs=1e-12)
        assert marg[L1A] == 1.0

    def test_too_many_free_atoms(self):
        program = random_program(np.random.default_rng(0), max_atoms=12,
                                 evidence_prob=0.0)
        config = MlnConfig(max_exact_atoms=3)
        with pytest.raises(TooManyFreeAtoms):
            exact_query(program, config=config)

    def test_hard_infeasible(self):
        program = make_program(
            [(math.inf, [(0, False)], (1, False)),
             (math.inf, [(0, True)], (0, False)),   # forces atom0 true
             (math.inf, [(1, False)], (1, True))],  # forbids atom1 true
            2)
        with pytest.raises(InfeasibleError):
            exact_query(program)

    def test_matches_brute_force_battery(self):
        rng = np.random.default_rng(42)
        for _ in range(25):
            program = random_program(rng, max_atoms=8, max_rules=10)
            expected = oracles.brute_marginals(program)
            got = exact_query(program)
            for i, atom in enumerate(program.atoms):
                assert got[atom] == pytest.approx(expected[i], abs=1e-9), atom

    def test_normalization_sums_to_one(self):
        rng = np.random.default_rng(7)
        for _ in range(10):
            program = random_program(rng, max_atoms=10)
            _, probs = exact_joint(program)
            assert probs.sum() == pytest.approx(1.0, abs=1e-9)

    def test_marginal_complement(self):
        program = single_rule_program(1.3)
        marg = exact_query(program)
        for atom, p in marg.items():
            assert p + (1.0 - p) == pytest.approx(1.0, abs=1e-12)


class TestGibbsQuery:
    def test_matches_conditional_closed_form(self):
        program = single_rule_program(math.log(2), evidence={L1A: 1.0})
        config = MlnConfig(samples=50000, burn_in=1000, chains=2, seed=3)
        marg = gibbs_query(program, config=config)
        assert marg[L2A] == pytest.approx(2.0 / 3.0, abs=0.02)

    def test_zero_weight_half(self):
        program = single_rule_program(0.0)
        config = MlnConfig(samples=50000, burn_in=500, chains=2, seed=5)
        marg = gibbs_query(program, config=config)
        assert marg[L1A] == pytest.approx(0.5, abs=0.02)
        assert marg[L2A] == pytest.approx(0.5, abs=0.02)

    def test_deterministic_given_seed(self):
        program = single_rule_program(1.0)
        config = MlnConfig(samples=2000, burn_in=100, seed=11)
        a = gibbs_query(program, config=config)
        b = gibbs_query(program, config=config)
        assert a == b

    def test_small_battery_vs_exact(self):
        rng = np.random.default_rng(100)
        config = MlnConfig(samples=20000, burn_in=1000, chains=2, seed=9)
        worst = 0.0
        for _ in range(10):
            program = random_program(rng, max_atoms=8, max_rules=10)
            exact = exact_query(program)
            approx = gibbs_query(program, config=config)
            for atom in exact:
                worst = max(worst, abs(exact[atom] - approx[atom]))
        assert worst <= 0.02

    def test_joint_tracking_matches_exact(self):
        program = single_rule_program(1.0)
        config = MlnConfig(samples=60000, burn_in=1000, chains=2, seed=13)
        atoms_e, exact = exact_joint(program)
        atoms_g, sampled = gibbs_joint(program, config)
        assert atoms_e == atoms_g
        assert np.abs(exact - sampled).max() <= 0.01

    def test_hard_rules_respected(self):
        # hard: atom0 -> atom1, soft prior against atom1
        program = make_program(
            [(math.inf, [(0, False)], (1, False)),
             (2.0, [(1, False)], (1, True))],
            2)
        config = MlnConfig(samples=20000, burn_in=500, seed=17)
        marg = gibbs_query(program, config=config)
        expected = oracles.brute_marginals(program)
        assert marg[program.atoms[0]] == pytest.approx(expected[0], abs=0.02)
        assert marg[program.atoms[1]] == pytest.approx(expected[1], abs=0.02)


class TestSoftEvidence:
    def test_isolated_soft_atom_reproduces_value(self):
        program = single_rule_program(0.0, evidence={L1A: 0.3})
        marg = exact_query(program)
        assert marg[L1A] == pytest.approx(0.3, abs=1e-9)

    def test_soft_evidence_biases_neighbors(self):
        program = single_rule_program(2.0, evidence={L1A: 0.9})
        high = exact_query(program)[L2A]
        program = single_rule_program(2.0, evidence={L1A: 0.1})
        low = exact_query(program)[L2A]
        assert high > low


class TestConditionalQuery:
    def test_single_rule_closed_form(self):
        program = single_rule_program(math.log(2))
        marg = conditional_query(program, [L2A], {L1A: 1.0})
        assert marg[L2A] == pytest.approx(2.0 / 3.0, abs=1e-12)

    def test_query_in_evidence_rejected(self):
        program = single_rule_program(1.0)
        with pytest.raises(Exception, match="also appears in evidence"):
            conditional_query(program, [L2A], {L2A: 1.0})

    def test_evidence_only_rule_weight_irrelevant(self):
        # rule touching only evidence atoms is outside F_Y
        def build(w_evid):
            return make_program(
                [(1.0, [(0, False)], (1, False)),
                 (w_evid, [(2, False)], (3, False))],
                4, evidence={0: 1.0, 2: 1.0, 3: 0.0})
        a = conditional_query(build(0.5), [1])
        b = conditional_query(build(5.0), [1])
        atom = build(0.5).atoms[1]
        assert a[atom] == pytest.approx(b[atom], abs=1e-12)

    def test_chain_matches_full_exact(self):
        # 3-rule chain; with Y + X covering all atoms the F_Y restriction
        # reproduces full inference on the middle atom
        rng = np.random.default_rng(23)
        for _ in range(10):
            w = rng.uniform(-2, 2, size=3)
            program = make_program(
                [(float(w[0]), [(0, False)], (1, False)),
                 (float(w[1]), [(1, False)], (2, False)),
                 (float(w[2]), [(2, False)], (3, False))],
                4, evidence={0: 1.0, 2: float(rng.integers(0, 2)), 3: 0.0})
            full = exact_query(program)
            cond = conditional_query(program, [1])
            assert cond[program.atoms[1]] == pytest.approx(
                full[program.atoms[1]], abs=1e-9)


class TestOnehotQuery:
    def test_uniform_without_rules(self):
        program = make_program([(0.0, [(0, False)], (1, False))], 3)
        dist = onehot_query(program, [0, 1, 2])
        assert sum(dist.values()) == pytest.approx(1.0)

    def test_matches_exact_under_exclusion(self):
        # soft preference for atom1; one-hot over {0,1}
        program = make_program(
            [(1.5, [(1, False)], (1, False)),
             (math.inf, [(0, False)], (1, True)),   # not both
             (math.inf, [(0, True)], (1, False))],  # at least one
            2)
        dist = onehot_query(program, [0, 1])
        exact = exact_query(program)
        assert dist[program.atoms[0]] == pytest.approx(
            exact[program.atoms[0]], abs=1e-9)
        assert dist[program.atoms[1]] == pytest.approx(
            exact[program.atoms[1]], abs=1e-9)

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from soclogic import (GroundAtom, GroundedProgram, GroundRule, KnowledgeBase,
                      ground, parse_rule)


@pytest.fixture
def tiny_kb():
    """Two unary predicates over one constant: the paper's l1 => l2 network."""
    kb = KnowledgeBase()
    kb.declare_predicate("L1", ("X",), role="query")
    kb.declare_predicate("L2", ("X",), role="query")
    kb.add_constant("a", "X")
    return kb


def single_rule_program(weight, evidence=None):
    kb = KnowledgeBase()
    kb.declare_predicate("L1", ("X",), role="query")
    kb.declare_predicate("L2", ("X",), role="query")
    kb.add_constant("a", "X")
    kb.add_rule(f"{weight!r}: L1(x) => L2(x)")
    return ground(kb, evidence or {})


def make_program(rules, n_atoms, evidence=None):
    """Assemble a propositional program directly from (w, body, head) triples."""
    atoms = tuple(GroundAtom("A", (f"x{i}",)) for i in range(n_atoms))
    kb = KnowledgeBase()
    kb.declare_predicate("A", ("X",), role="query")
    for i in range(n_atoms):
        kb.add_constant(f"x{i}", "X")
    ground_rules = tuple(
        GroundRule(w, tuple(body), head, src)
        for src, (w, body, head) in enumerate(rules))
    return GroundedProgram(atoms, ground_rules, dict(evidence or {}), kb)


def random_program(rng, max_atoms=12, max_rules=15, weight_range=(-2.0, 2.0),
                   evidence_prob=0.2, hard_prob=0.0):
    """Seeded random propositional program for engine batteries."""
    n_atoms = int(rng.integers(2, max_atoms + 1))
    n_rules = int(rng.integers(1, max_rules + 1))
    rules = []
    for _ in range(n_rules):
        body_len = int(rng.integers(1, 3))
        body = []
        for _ in range(body_len):
            body.append((int(rng.integers(0, n_atoms)), bool(rng.random() < 0.3)))
        head = (int(rng.integers(0, n_atoms)), bool(rng.random() < 0.2))
        if rng.random() < hard_prob:
            w = float("inf")
        else:
            w = float(rng.uniform(*weight_range))
        rules.append((w, body, head))
    evidence = {}
    for i in range(n_atoms):
        if rng.random() < evidence_prob:
            evidence[i] = float(rng.integers(0, 2))
    used = {a for w, body, head in rules for a, _ in body} | \
           {head[0] for _, _, head in rules}
    evidence = {i: v for i, v in evidence.items() if i in used}
    return make_program(rules, n_atoms, evidence)

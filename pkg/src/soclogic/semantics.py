"""Boolean and soft (Lukasiewicz) evaluation of ground rules.

Boolean worlds score rules as implications; soft interpretations fold body
conjuncts with the Lukasiewicz t-norm and measure each rule's distance to
satisfaction, max{0, I(body) - I(head)}, which is zero exactly when
I(body) <= I(head).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .logic import GroundedProgram, GroundRule, LogicError

NEG_INF = float("-inf")


def _check_unit(x, name):
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"{name} out of [0,1]: {x}")


def soft_and(a: float, b: float) -> float:
    """Lukasiewicz conjunction max{0, a+b-1}.

    The identity element is applied exactly so certain facts do not
    perturb the other operand with float dust.
    """
    _check_unit(a, "a")
    _check_unit(b, "b")
    if a == 1.0:
        return b
    if b == 1.0:
        return a
    return max(0.0, a + b - 1.0)


def soft_or(a: float, b: float) -> float:
    """Lukasiewicz disjunction min{1, a+b}; 0 is applied as exact identity."""
    _check_unit(a, "a")
    _check_unit(b, "b")
    if a == 0.0:
        return b
    if b == 0.0:
        return a
    return min(1.0, a + b)


def soft_neg(a: float) -> float:
    _check_unit(a, "a")
    return 1.0 - a


@dataclass
class World:
    """Total boolean assignment over a program's atoms."""

    program: GroundedProgram
    values: np.ndarray  # bool, aligned with program.atoms

    @classmethod
    def from_dict(cls, program: GroundedProgram, assignment) -> "World":
        values = np.zeros(program.n_atoms, dtype=bool)
        seen = np.zeros(program.n_atoms, dtype=bool)
        for atom, v in assignment.items():
            i = atom if isinstance(atom, int) else program.atom_id(atom)
            values[i] = bool(v)
            seen[i] = True
        if not seen.all():
            missing = program.atoms[int(np.flatnonzero(~seen)[0])]
            raise LogicError(f"world is not total: missing {missing}")
        return cls(program, values)

    def __getitem__(self, atom) -> bool:
        i = atom if isinstance(atom, int) else self.program.atom_id(atom)
        return bool(self.values[i])


@dataclass
class Interpretation:
    """Total [0,1]-valued assignment over a program's atoms."""

    program: GroundedProgram
    values: np.ndarray  # float64 in [0,1]

    def __post_init__(self):
        if np.any(self.values < 0) or np.any(self.values > 1):
            raise ValueError("interpretation values out of [0,1]")

    @classmethod
    def from_dict(cls, program: GroundedProgram, assignment) -> "Interpretation":
        values = np.full(program.n_atoms, np.nan)
        for atom, v in assignment.items():
            i = atom if isinstance(atom, int) else program.atom_id(atom)
            values[i] = float(v)
        if np.isnan(values).any():
            missing = program.atoms[int(np.flatnonzero(np.isnan(values))[0])]
            raise LogicError(f"interpretation is not total: missing {missing}")
        return cls(program, values)

    def __getitem__(self, atom) -> float:
        i = atom if isinstance(atom, int) else self.program.atom_id(atom)
        return float(self.values[i])


def _literal_bool(values, atom_id, negated) -> bool:
    v = bool(values[atom_id])
    return (not v) if negated else v


def eval_ground_rule(rule: GroundRule, world: World) -> bool:
    """Implication semantics: false only when the body holds and the head fails."""
    values = world.values
    body_true = all(_literal_bool(values, a, n) for a, n in rule.body)
    return (not body_true) or _literal_bool(values, *rule.head)


def count_true_groundings(rule_id: int, program: GroundedProgram,
                          world: World) -> int:
    """Number of satisfied ground instances of first-order rule ``rule_id``."""
    if not any(r.source == rule_id for r in program.rules):
        raise LogicError(f"unknown rule id {rule_id}")
    return sum(1 for r in program.rules
               if r.source == rule_id and eval_ground_rule(r, world))


def world_log_weight(program: GroundedProgram, world: World) -> float:
    """Sum of w_i * n_i(x); -inf when any hard rule is violated."""
    total = 0.0
    for rule in program.rules:
        satisfied = eval_ground_rule(rule, world)
        if rule.is_hard:
            if not satisfied:
                return NEG_INF
        elif satisfied:
            total += rule.weight
    return total


def _literal_value(values, atom_id, negated) -> float:
    v = float(values[atom_id])
    return 1.0 - v if negated else v


def body_value(rule: GroundRule, interp: Interpretation) -> float:
    """Soft truth of the body conjunction (left fold of soft_and; empty = 1)."""
    value = 1.0
    for atom_id, negated in rule.body:
        value = soft_and(value, _literal_value(interp.values, atom_id, negated))
    return value


def rule_distance(rule: GroundRule, interp: Interpretation) -> float:
    """Distance to satisfaction max{0, I(body) - I(head)}."""
    head = _literal_value(interp.values, *rule.head)
    return max(0.0, body_value(rule, interp) - head)

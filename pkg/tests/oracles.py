"""Independent reference implementations used to freeze expected values.

These deliberately avoid the library's evaluation code paths: rules are
re-evaluated with straight-line Python over explicit truth tables, and the
PSL oracle minimizes by brute-force grid search.
"""

import itertools
import math

import numpy as np


def implication_holds(rule, values):
    """Naive implication check over a {atom_id: bool} assignment."""
    body_all_true = True
    for atom, negated in rule.body:
        lit = (not values[atom]) if negated else values[atom]
        if not lit:
            body_all_true = False
    head_atom, head_neg = rule.head
    head = (not values[head_atom]) if head_neg else values[head_atom]
    return (not body_all_true) or head


def enumerate_worlds(program):
    """Yield (assignment dict, unnormalized weight); hard-violators get 0."""
    free = [i for i in range(program.n_atoms) if i not in program.evidence]
    fixed = {i: bool(round(v)) for i, v in program.evidence.items()}
    for bits in itertools.product((False, True), repeat=len(free)):
        values = dict(fixed)
        values.update(zip(free, bits))
        weight = 0.0
        ok = True
        for rule in program.rules:
            sat = implication_holds(rule, values)
            if rule.is_hard:
                if not sat:
                    ok = False
                    break
            elif sat:
                weight += rule.weight
        yield values, (math.exp(weight) if ok else 0.0)


def brute_marginals(program):
    """Exact marginals for every atom by full enumeration."""
    totals = np.zeros(program.n_atoms)
    z = 0.0
    for values, weight in enumerate_worlds(program):
        z += weight
        for i in range(program.n_atoms):
            if values[i]:
                totals[i] += weight
    if z == 0.0:
        raise ValueError("no feasible world")
    return totals / z


def brute_joint_prob(program, assignment):
    """Probability of a specific {atom_id: bool} assignment of free atoms."""
    num = 0.0
    z = 0.0
    for values, weight in enumerate_worlds(program):
        z += weight
        if all(values[a] == v for a, v in assignment.items()):
            num += weight
    return num / z


def soft_objective(program, values):
    """Weighted distance to satisfaction, folded per the soft connectives."""
    total = 0.0
    for rule in program.rules:
        if rule.is_hard:
            continue
        body = 1.0
        for atom, negated in rule.body:
            lit = 1.0 - values[atom] if negated else values[atom]
            body = max(0.0, body + lit - 1.0)
        head_atom, head_neg = rule.head
        head = 1.0 - values[head_atom] if head_neg else values[head_atom]
        total += rule.weight * max(0.0, body - head)
    return total


def soft_hard_violation(program, values):
    worst = 0.0
    for rule in program.rules:
        if not rule.is_hard:
            continue
        body = 1.0
        for atom, negated in rule.body:
            lit = 1.0 - values[atom] if negated else values[atom]
            body = max(0.0, body + lit - 1.0)
        head_atom, head_neg = rule.head
        head = 1.0 - values[head_atom] if head_neg else values[head_atom]
        worst = max(worst, body - head)
    return worst


def grid_search_mpe(program, step=0.05):
    """Best feasible grid point (values dict, objective) at the given step."""
    free = [i for i in range(program.n_atoms) if i not in program.evidence]
    free = [i for i in free
            if any(i in [a for a, _ in r.body] + [r.head[0]]
                   for r in program.rules)]
    levels = np.round(np.arange(0.0, 1.0 + step / 2, step), 10)
    base = {i: float(v) for i, v in program.evidence.items()}
    best_obj, best_vals = math.inf, None
    for combo in itertools.product(levels, repeat=len(free)):
        values = dict(base)
        values.update(zip(free, combo))
        if soft_hard_violation(program, values) > 1e-9:
            continue
        obj = soft_objective(program, values)
        if obj < best_obj - 1e-15:
            best_obj, best_vals = obj, values
    return best_vals, best_obj

"""Numba-compiled inner loops for Gibbs sampling.

The ground program is flattened to CSR-style arrays before entering the
kernels; all randomness is consumed from pre-drawn uniform arrays so runs
are reproducible bit-for-bit regardless of threading.
"""

import math

import numpy as np

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is a declared dependency
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f


@njit(cache=True)
def _rule_sat(r, body_off, body_atom, body_neg, head_atom, head_neg,
              state, a, hyp):
    """Rule satisfaction with atom ``a`` hypothetically set to ``hyp``.

    Pass a = -1 to evaluate the state as-is.
    """
    for j in range(body_off[r], body_off[r + 1]):
        at = body_atom[j]
        v = hyp if at == a else state[at]
        lit = (v == 0) if body_neg[j] else (v == 1)
        if not lit:
            return True  # body falsified, implication holds
    at = head_atom[r]
    v = hyp if at == a else state[at]
    return (v == 0) if head_neg[r] else (v == 1)


@njit(cache=True)
def check_hard(body_off, body_atom, body_neg, head_atom, head_neg,
               is_hard, state):
    """Index of the first violated hard rule, or -1 if none."""
    for r in range(len(head_atom)):
        if is_hard[r] and not _rule_sat(r, body_off, body_atom, body_neg,
                                        head_atom, head_neg, state, -1, 0):
            return r
    return -1


@njit(cache=True)
def repair_hard(body_off, body_atom, body_neg, head_atom, head_neg,
                is_hard, fixed, state, max_passes):
    """Greedy repair: force violated hard rules' heads true (or false if negated).

    Clamped atoms (fixed >= 0) are never touched; repair fails if a violated
    hard rule's head is clamped.
    """
    for _ in range(max_passes):
        changed = False
        for r in range(len(head_atom)):
            if is_hard[r] and not _rule_sat(r, body_off, body_atom, body_neg,
                                            head_atom, head_neg, state, -1, 0):
                if fixed[head_atom[r]] >= 0:
                    continue
                state[head_atom[r]] = 0 if head_neg[r] else 1
                changed = True
        if not changed:
            break
    return check_hard(body_off, body_atom, body_neg, head_atom, head_neg,
                      is_hard, state) < 0


@njit(cache=True)
def gibbs_sweeps(body_off, body_atom, body_neg, head_atom, head_neg,
                 weight, is_hard, adj_off, adj_rule,
                 free, bias, state, burn_in, sweeps, uniforms,
                 true_counts, rule_counts, joint_counts, track_joint):
    """Run (burn_in + sweeps) full Gibbs sweeps over the free atoms.

    Post-burn-in sweeps accumulate per-atom true counts, per-ground-rule
    satisfaction counts, and (optionally) joint state counts keyed by the
    bitmask of free atoms.
    """
    n_free = len(free)
    n_rules = len(head_atom)
    for t in range(burn_in + sweeps):
        for k in range(n_free):
            a = free[k]
            delta = bias[a]
            feas1 = True
            feas0 = True
            for j in range(adj_off[a], adj_off[a + 1]):
                r = adj_rule[j]
                s1 = _rule_sat(r, body_off, body_atom, body_neg,
                               head_atom, head_neg, state, a, 1)
                s0 = _rule_sat(r, body_off, body_atom, body_neg,
                               head_atom, head_neg, state, a, 0)
                if is_hard[r]:
                    feas1 = feas1 and s1
                    feas0 = feas0 and s0
                elif s1 != s0:
                    delta += weight[r] if s1 else -weight[r]
            if feas1 and not feas0:
                state[a] = 1
            elif feas0 and not feas1:
                state[a] = 0
            else:
                p1 = 1.0 / (1.0 + math.exp(-delta))
                state[a] = 1 if uniforms[t, k] < p1 else 0
        if t >= burn_in:
            for i in range(len(state)):
                true_counts[i] += state[i]
            for r in range(n_rules):
                if _rule_sat(r, body_off, body_atom, body_neg,
                             head_atom, head_neg, state, -1, 0):
                    rule_counts[r] += 1.0
            if track_joint:
                mask = 0
                for k in range(n_free):
                    if state[free[k]] == 1:
                        mask |= 1 << k
                joint_counts[mask] += 1

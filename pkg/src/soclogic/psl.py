"""MPE inference for soft-logic programs.

Each ground rule contributes a hinge max{0, I(body) - I(head)} which is
affine in the atom values, so the total weighted distance to satisfaction
is convex piecewise-linear over the [0,1] box.  Hard rules become linear
inequality constraints (distance forced to zero).  The solver runs
projected subgradient descent with diminishing steps, then an exact
coordinate-minimization polish; among optima it returns the point closest
to the all-0.5 interpretation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .logic import GroundedProgram, InfeasibleError, LogicError
from .semantics import Interpretation

_EPS = 1e-12


@dataclass
class PslConfig:
    tolerance: float = 1e-6
    max_iters: int = 500
    step0: float = 0.25
    max_polish_passes: int = 100
    seed: int = 0  # reserved; the solver is deterministic

    def __post_init__(self):
        if self.tolerance <= 0:
            raise ValueError("tolerance must be > 0")


@dataclass
class _Hinge:
    """lam * max(0, coeffs . x + const) over the free-variable vector."""

    lam: float
    coeffs: dict[int, float]  # free-var index -> coefficient
    const: float
    label: str = ""

    def value(self, x: np.ndarray) -> float:
        s = self.const
        for j, c in self.coeffs.items():
            s += c * x[j]
        return max(0.0, s)

    def margin(self, x: np.ndarray) -> float:
        s = self.const
        for j, c in self.coeffs.items():
            s += c * x[j]
        return s


@dataclass
class SoftProgram:
    """Grounded soft program: weighted hinges plus hard linear constraints."""

    program: GroundedProgram
    free_ids: list[int]
    hinges: list[_Hinge]
    constraints: list[_Hinge]  # hard: margin must be <= 0
    var_of_atom: dict[int, int] = field(default_factory=dict)

    def __post_init__(self):
        if not self.var_of_atom:
            self.var_of_atom = {a: j for j, a in enumerate(self.free_ids)}

    @property
    def n_vars(self) -> int:
        return len(self.free_ids)


def _compile_soft(program: GroundedProgram) -> SoftProgram:
    evidence = program.evidence
    used = sorted({a for r in program.rules for a in r.atom_ids()})
    free_ids = [a for a in used if a not in evidence]
    var_of = {a: j for j, a in enumerate(free_ids)}

    hinges, constraints = [], []
    for rule in program.rules:
        if not rule.is_hard and rule.weight < 0:
            raise LogicError(
                f"soft rule weights must be nonnegative, got {rule.weight} "
                f"(transform or clamp negative MLN weights first)")
        # d = max(0, sum(body literal values) - (k-1) - head value), affine in x
        coeffs: dict[int, float] = {}
        const = -(len(rule.body) - 1.0)
        terms = []
        for atom, neg in rule.body:
            if neg:
                const += 1.0
                terms.append((atom, -1.0))
            else:
                terms.append((atom, +1.0))
        h_atom, h_neg = rule.head
        if h_neg:
            const -= 1.0
            terms.append((h_atom, +1.0))
        else:
            terms.append((h_atom, -1.0))
        for atom, sign in terms:
            if atom in evidence:
                const += sign * evidence[atom]
            else:
                j = var_of[atom]
                coeffs[j] = coeffs.get(j, 0.0) + sign
        coeffs = {j: c for j, c in coeffs.items() if c != 0.0}
        label = _rule_label(program, rule)
        if rule.is_hard:
            constraints.append(_Hinge(1.0, coeffs, const, label))
        else:
            hinges.append(_Hinge(rule.weight, coeffs, const, label))
    return SoftProgram(program, free_ids, hinges, constraints, var_of)


def _rule_label(program: GroundedProgram, rule) -> str:
    body = " & ".join(("!" if n else "") + str(program.atoms[a])
                      for a, n in rule.body)
    head = ("!" if rule.head[1] else "") + str(program.atoms[rule.head[0]])
    return f"{body} => {head}" if body else f"=> {head}"


def compile_soft(program: GroundedProgram) -> SoftProgram:
    """Public entry: build the hinge/constraint form of a grounded program."""
    return _compile_soft(program)


def total_distance(soft: SoftProgram | GroundedProgram, interp) -> float:
    """Sum of weight times distance-to-satisfaction over the soft rules."""
    if isinstance(soft, GroundedProgram):
        soft = _compile_soft(soft)
    x = _free_vector(soft, interp)
    return sum(h.lam * h.value(x) for h in soft.hinges)


def hard_violations(soft: SoftProgram | GroundedProgram, interp):
    """(label, violation) for each hard constraint with positive margin."""
    if isinstance(soft, GroundedProgram):
        soft = _compile_soft(soft)
    x = _free_vector(soft, interp)
    out = []
    for c in soft.constraints:
        v = c.margin(x)
        if v > 0:
            out.append((c.label, v))
    return out


def _free_vector(soft: SoftProgram, interp) -> np.ndarray:
    if isinstance(interp, Interpretation):
        return np.array([interp.values[a] for a in soft.free_ids])
    x = np.zeros(soft.n_vars)
    for a, j in soft.var_of_atom.items():
        atom = soft.program.atoms[a]
        x[j] = interp[atom] if atom in interp else interp[a]
    return x


def _objective(soft: SoftProgram, x: np.ndarray) -> float:
    return sum(h.lam * h.value(x) for h in soft.hinges)


def _hard_violation(soft: SoftProgram, x: np.ndarray) -> float:
    return max((c.margin(x) for c in soft.constraints), default=0.0)


def _subgradient_phase(soft: SoftProgram, x: np.ndarray,
                       config: PslConfig) -> np.ndarray:
    if soft.n_vars == 0:
        return x
    rho = 10.0 * (1.0 + sum(h.lam for h in soft.hinges))
    best, best_key = x.copy(), None
    stall = 0
    for t in range(config.max_iters):
        g = np.zeros(soft.n_vars)
        for h in soft.hinges:
            if h.margin(x) > 0:
                for j, c in h.coeffs.items():
                    g[j] += h.lam * c
        for cns in soft.constraints:
            if cns.margin(x) > 0:
                for j, c in cns.coeffs.items():
                    g[j] += rho * c
        if not g.any():
            break
        x = np.clip(x - (config.step0 / math.sqrt(t + 1.0)) * g, 0.0, 1.0)
        key = (round(_hard_violation(soft, x), 12), _objective(soft, x))
        if best_key is None or key < best_key:
            improved = (best_key is not None and key[0] == best_key[0]
                        and best_key[1] - key[1] < config.tolerance)
            stall = stall + 1 if improved else 0
            best, best_key = x.copy(), key
        else:
            stall += 1
        if stall > 50:
            break
    return best


def _by_var(items):
    table: dict[int, list] = {}
    for h in items:
        for j, c in h.coeffs.items():
            table.setdefault(j, []).append((h, c))
    return table


def _coordinate_polish(soft: SoftProgram, x: np.ndarray, config: PslConfig,
                       feasibility_only: bool = False) -> np.ndarray:
    """Exact per-coordinate minimization; ties resolve toward 0.5.

    With ``feasibility_only`` the objective is the total hard violation,
    used to find a feasible starting point and to certify infeasibility.
    """
    hinge_vars = _by_var(soft.hinges if not feasibility_only else [])
    cons_vars = _by_var(soft.constraints)
    for _ in range(config.max_polish_passes):
        moved = 0.0
        for j in range(soft.n_vars):
            lo, hi = 0.0, 1.0
            pieces = []
            if feasibility_only:
                for cns, c in cons_vars.get(j, ()):
                    rest = cns.margin(x) - c * x[j]
                    pieces.append((1.0, c, rest))
            else:
                for cns, c in cons_vars.get(j, ()):
                    # feasible interval for x_j: c * x_j + rest <= 0
                    rest = cns.margin(x) - c * x[j]
                    if c > 0:
                        hi = min(hi, -rest / c)
                    elif c < 0:
                        lo = max(lo, -rest / c)
                for h, c in hinge_vars.get(j, ()):
                    rest = h.margin(x) - c * x[j]
                    pieces.append((h.lam, c, rest))
            if lo > hi + 1e-9:
                continue  # locally infeasible; leave for the other coordinates
            lo, hi = max(0.0, lo), min(1.0, hi)
            if lo > hi:
                lo = hi = min(1.0, max(0.0, lo))
            candidates = {lo, hi}
            for _, c, rest in pieces:
                if c != 0.0:
                    t = -rest / c
                    if lo < t < hi:
                        candidates.add(t)
            cand = sorted(candidates)
            vals = [sum(lam * max(0.0, c * t + rest)
                        for lam, c, rest in pieces) for t in cand]
            vmin = min(vals)
            run = [t for t, v in zip(cand, vals) if v <= vmin + _EPS]
            new = min(max(0.5, run[0]), run[-1])
            moved = max(moved, abs(new - x[j]))
            x[j] = new
        if moved < 1e-12:
            break
    return x


def mpe_infer(program: GroundedProgram | SoftProgram,
              config: PslConfig | None = None) -> Interpretation:
    """Interpretation minimizing total weighted distance to satisfaction.

    Hard constraints hold exactly at the solution; raises InfeasibleError
    (listing the conflicting constraints) when they cannot all be met.
    """
    config = config or PslConfig()
    soft = program if isinstance(program, SoftProgram) else _compile_soft(program)
    x = np.full(soft.n_vars, 0.5)

    if soft.constraints:
        x = _coordinate_polish(soft, x, config, feasibility_only=True)
        if _hard_violation(soft, x) > 1e-9:
            x = _subgradient_phase(soft, x, config)
            x = _coordinate_polish(soft, x, config, feasibility_only=True)
        if _hard_violation(soft, x) > 1e-9:
            bad = [c.label for c in soft.constraints if c.margin(x) > 1e-9]
            raise InfeasibleError("hard constraints are infeasible", bad)

    x = _subgradient_phase(soft, x, config)
    x = _coordinate_polish(soft, x, config)

    values = np.full(soft.program.n_atoms, 0.5)
    for aid, v in soft.program.evidence.items():
        values[aid] = v
    for aid, j in soft.var_of_atom.items():
        values[aid] = min(1.0, max(0.0, x[j]))
    return Interpretation(soft.program, values)


def soft_marginal_report(program: GroundedProgram | SoftProgram,
                         interp: Interpretation) -> dict:
    """Atom value map from an MPE result; >= 0.5 thresholds to a positive call."""
    soft = program if isinstance(program, SoftProgram) else _compile_soft(program)
    out = {}
    for aid, atom in enumerate(soft.program.atoms):
        out[atom] = float(interp.values[aid])
    return out


def predict(value: float) -> bool:
    """Boolean call for a soft score; exactly 0.5 counts as positive."""
    return value >= 0.5


def transfer_rules(rules) -> list:
    """Adapt MLN-learned rules for PSL's nonnegative weights.

    A negative-weight prior (empty body) is exactly equivalent to a positive
    weight on the negated head, so it is rewritten; other negative weights
    have no hinge counterpart and are clamped to zero.
    """
    from dataclasses import replace as _replace
    out = []
    for rule in rules:
        if rule.is_hard or rule.weight >= 0:
            out.append(rule)
        elif not rule.body:
            flipped = _replace(rule.head, negated=not rule.head.negated)
            out.append(_replace(rule, weight=-rule.weight, head=flipped))
        else:
            out.append(_replace(rule, weight=0.0))
    return out

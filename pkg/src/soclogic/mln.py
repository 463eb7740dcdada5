"""Markov-logic inference and weight learning over grounded programs.

Worlds are boolean; the unnormalized log-weight of a world is the sum of
rule weights times their satisfied-grounding counts.  Exact inference
enumerates assignments of the free atoms; Gibbs sampling handles larger
programs.  Soft evidence values in (0,1) enter as per-atom log-odds biases,
so an otherwise unconstrained atom reproduces its evidence value as its
marginal.

Learning ascends the conditional likelihood of query atoms given the rest
(gradient: observed minus expected satisfied-grounding counts, normalized
per grounding).  EM treats preference atoms as latent, tying them to
observed mention atoms through a per-category report probability.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels
from .logic import (GroundAtom, GroundedProgram, InfeasibleError, LogicError,
                    Rule)

LOG_ODDS_CLIP = 1e-9  # soft evidence clipped into (0,1) before log-odds


class TooManyFreeAtoms(LogicError):
    pass


@dataclass
class MlnConfig:
    """Sampler and learning hyperparameters."""

    burn_in: int = 1000
    samples: int = 10000
    chains: int = 2
    seed: int = 0
    max_exact_atoms: int = 20
    weight_cap: float = 10.0
    learn_rate: float = 0.05
    epochs: int = 100
    l2: float = 1e-4
    method: str = "auto"  # auto | exact | gibbs
    init_restarts: int = 100

    def __post_init__(self):
        if self.samples <= 0:
            raise ValueError("samples must be > 0")
        if not 0 < self.max_exact_atoms <= 25:
            raise ValueError("max_exact_atoms must be in (0, 25]")
        if self.method not in ("auto", "exact", "gibbs"):
            raise ValueError(f"bad method {self.method!r}")


@dataclass
class MentionModel:
    """Per-category probability that a held preference is reported."""

    report_prob: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        for cat, s in self.report_prob.items():
            if not 0.0 <= s <= 1.0:
                raise ValueError(f"report prob for {cat!r} out of [0,1]: {s}")


def sigmoid(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def log_odds(p: float) -> float:
    p = min(max(p, LOG_ODDS_CLIP), 1.0 - LOG_ODDS_CLIP)
    return math.log(p / (1.0 - p))


# ---------------------------------------------------------------------------
# Compiled array form
# ---------------------------------------------------------------------------

@dataclass
class _Compiled:
    n_atoms: int
    body_off: np.ndarray
    body_atom: np.ndarray
    body_neg: np.ndarray
    head_atom: np.ndarray
    head_neg: np.ndarray
    weight: np.ndarray   # 0.0 for hard rules; see is_hard
    is_hard: np.ndarray
    source: np.ndarray
    adj_off: np.ndarray
    adj_rule: np.ndarray
    fixed: np.ndarray    # int8: -1 free, else clamped 0/1
    bias: np.ndarray     # float64 log-odds
    free: np.ndarray     # int32 sorted free atom ids in scope
    rules: tuple         # the GroundRule objects, aligned with arrays

    @property
    def n_rules(self) -> int:
        return len(self.head_atom)


def _compile(program: GroundedProgram, clamps: dict[int, float],
             bias: dict[int, float] | None = None,
             scope_atoms=None) -> _Compiled:
    """Flatten rules to CSR arrays and split evidence into clamps and biases.

    ``scope_atoms`` widens the set of atoms treated as free (by default the
    atoms appearing in rules); clamped atoms are never free.
    """
    rules = program.rules
    n = program.n_atoms
    body_off = np.zeros(len(rules) + 1, dtype=np.int32)
    body_atom, body_neg = [], []
    head_atom = np.zeros(len(rules), dtype=np.int32)
    head_neg = np.zeros(len(rules), dtype=np.bool_)
    weight = np.zeros(len(rules), dtype=np.float64)
    is_hard = np.zeros(len(rules), dtype=np.bool_)
    source = np.zeros(len(rules), dtype=np.int32)
    for r, rule in enumerate(rules):
        for a, neg in rule.body:
            body_atom.append(a)
            body_neg.append(neg)
        body_off[r + 1] = len(body_atom)
        head_atom[r] = rule.head[0]
        head_neg[r] = rule.head[1]
        weight[r] = 0.0 if rule.is_hard else rule.weight
        is_hard[r] = rule.is_hard
        source[r] = rule.source
    body_atom = np.asarray(body_atom, dtype=np.int32)
    body_neg = np.asarray(body_neg, dtype=np.bool_)

    fixed = np.full(n, -1, dtype=np.int8)
    bias_arr = np.zeros(n, dtype=np.float64)
    for aid, v in clamps.items():
        if v in (0.0, 1.0):
            fixed[aid] = int(v)
        else:
            bias_arr[aid] = log_odds(v)
    if bias:
        for aid, b in bias.items():
            if fixed[aid] < 0:
                bias_arr[aid] += b

    in_scope = set()
    for rule in rules:
        in_scope.update(rule.atom_ids())
    if scope_atoms is not None:
        in_scope.update(scope_atoms)
    free = np.asarray(sorted(a for a in in_scope if fixed[a] < 0),
                      dtype=np.int32)

    counts = np.zeros(n + 1, dtype=np.int32)
    pairs = []
    for r, rule in enumerate(rules):
        for a in set(rule.atom_ids()):
            pairs.append((a, r))
            counts[a + 1] += 1
    adj_off = np.cumsum(counts).astype(np.int32)
    adj_rule = np.zeros(len(pairs), dtype=np.int32)
    cursor = adj_off[:-1].copy()
    for a, r in sorted(pairs):
        adj_rule[cursor[a]] = r
        cursor[a] += 1

    return _Compiled(n, body_off, body_atom, body_neg, head_atom, head_neg,
                     weight, is_hard, source, adj_off, adj_rule,
                     fixed, bias_arr, free, rules)


def _rule_sat_state(comp: _Compiled, state: np.ndarray) -> np.ndarray:
    """Boolean satisfaction of every ground rule under a full 0/1 state."""
    sat = np.ones(comp.n_rules, dtype=bool)
    for r in range(comp.n_rules):
        body_true = True
        for j in range(comp.body_off[r], comp.body_off[r + 1]):
            v = bool(state[comp.body_atom[j]]) != bool(comp.body_neg[j])
            if not v:
                body_true = False
                break
        if body_true:
            sat[r] = bool(state[comp.head_atom[r]]) != bool(comp.head_neg[r])
    return sat


# ---------------------------------------------------------------------------
# Exact inference by enumeration
# ---------------------------------------------------------------------------

@dataclass
class _ExactResult:
    marginals: np.ndarray      # per atom; clamped atoms keep their value
    rule_expect: np.ndarray    # expected satisfaction count per ground rule
    log_z: float
    free: np.ndarray           # bit order of the joint
    joint: np.ndarray          # probability per bitmask over free atoms


def _exact_infer(comp: _Compiled, max_exact: int) -> _ExactResult:
    n_free = len(comp.free)
    if n_free > max_exact:
        raise TooManyFreeAtoms(
            f"{n_free} free atoms exceed max_exact_atoms={max_exact}")
    n_worlds = 1 << n_free
    idx = np.arange(n_worlds, dtype=np.int64)
    pos = {int(a): k for k, a in enumerate(comp.free)}

    def lit_values(atom, neg):
        if comp.fixed[atom] >= 0:
            v = np.full(n_worlds, bool(comp.fixed[atom]))
        else:
            v = ((idx >> pos[int(atom)]) & 1).astype(bool)
        return ~v if neg else v

    logw = np.zeros(n_worlds)
    feasible = np.ones(n_worlds, dtype=bool)
    sats = []
    for r in range(comp.n_rules):
        body_true = np.ones(n_worlds, dtype=bool)
        for j in range(comp.body_off[r], comp.body_off[r + 1]):
            body_true &= lit_values(comp.body_atom[j], comp.body_neg[j])
        sat = ~body_true | lit_values(comp.head_atom[r], comp.head_neg[r])
        sats.append(sat)
        if comp.is_hard[r]:
            feasible &= sat
        else:
            logw += comp.weight[r] * sat
    for a in comp.free:
        b = comp.bias[a]
        if b != 0.0:
            logw += b * ((idx >> pos[int(a)]) & 1)

    if not feasible.any():
        raise InfeasibleError("all worlds violate the hard rules")
    logw = np.where(feasible, logw, -np.inf)
    m = logw.max()
    unnorm = np.exp(logw - m)
    z = unnorm.sum()
    probs = unnorm / z

    marginals = np.where(comp.fixed >= 0, comp.fixed, 0.5).astype(np.float64)
    for a, k in pos.items():
        marginals[a] = probs[((idx >> k) & 1) == 1].sum()
    rule_expect = np.array([float(probs[s].sum()) for s in sats])
    return _ExactResult(marginals, rule_expect, float(m + np.log(z)),
                        comp.free, probs)


# ---------------------------------------------------------------------------
# Gibbs sampling
# ---------------------------------------------------------------------------

@dataclass
class _GibbsResult:
    marginals: np.ndarray
    rule_expect: np.ndarray
    joint: np.ndarray | None
    states: list  # final chain states, reusable as persistent initialization


def _initial_state(comp: _Compiled, rng, restarts: int) -> np.ndarray:
    state = np.where(comp.fixed >= 0, comp.fixed, 0).astype(np.int8)
    if not len(comp.free):
        if _kernels.check_hard(comp.body_off, comp.body_atom, comp.body_neg,
                               comp.head_atom, comp.head_neg, comp.is_hard,
                               state) >= 0:
            raise InfeasibleError("hard rules violated by the evidence")
        return state
    for _ in range(max(1, restarts)):
        state[comp.free] = rng.integers(0, 2, size=len(comp.free), dtype=np.int8)
        if _kernels.check_hard(comp.body_off, comp.body_atom, comp.body_neg,
                               comp.head_atom, comp.head_neg, comp.is_hard,
                               state) < 0:
            return state
    # deterministic greedy repair as a last resort; heads of violated hard
    # rules are forced until a feasible world appears or we give up
    state[comp.free] = 0
    if _kernels.repair_hard(comp.body_off, comp.body_atom, comp.body_neg,
                            comp.head_atom, comp.head_neg, comp.is_hard,
                            comp.fixed, state, 50):
        return state
    violated = _kernels.check_hard(comp.body_off, comp.body_atom,
                                   comp.body_neg, comp.head_atom,
                                   comp.head_neg, comp.is_hard, state)
    raise InfeasibleError(
        "could not find a hard-feasible initial world",
        conflicts=[comp.rules[violated]] if violated >= 0 else [])


def _gibbs_infer(comp: _Compiled, config: MlnConfig, seed,
                 track_joint: bool = False,
                 init_states=None, burn_in=None) -> _GibbsResult:
    n_free = len(comp.free)
    burn = config.burn_in if burn_in is None else burn_in
    track = track_joint and n_free <= 16
    joint = np.zeros(1 << n_free if track else 1, dtype=np.int64)
    true_counts = np.zeros(comp.n_atoms)
    rule_counts = np.zeros(comp.n_rules)
    states = []
    for chain in range(config.chains):
        rng = np.random.default_rng(np.random.SeedSequence([int(seed), chain]))
        if init_states is not None:
            state = init_states[chain].copy()
        else:
            state = _initial_state(comp, rng, config.init_restarts)
        uniforms = rng.random((burn + config.samples, max(1, n_free)))
        _kernels.gibbs_sweeps(
            comp.body_off, comp.body_atom, comp.body_neg, comp.head_atom,
            comp.head_neg, comp.weight, comp.is_hard, comp.adj_off,
            comp.adj_rule, comp.free, comp.bias, state, burn,
            config.samples, uniforms, true_counts, rule_counts, joint,
            track)
        states.append(state)
    total = config.samples * config.chains
    marginals = true_counts / total
    marginals[comp.fixed >= 0] = comp.fixed[comp.fixed >= 0]
    return _GibbsResult(marginals, rule_counts / total,
                        joint / total if track else None, states)


# ---------------------------------------------------------------------------
# Public queries
# ---------------------------------------------------------------------------

def _resolve_ids(program: GroundedProgram, atoms):
    ids = []
    for a in atoms:
        ids.append(a if isinstance(a, int) else program.atom_id(a))
    return ids


def _as_clamps(program: GroundedProgram, evidence) -> dict[int, float]:
    if evidence is None:
        return dict(program.evidence)
    out = {}
    for atom, v in evidence.items():
        aid = atom if isinstance(atom, int) else program.atom_id(atom)
        out[aid] = float(v)
    return out


def _marginal_dict(program, marginals, comp, query_ids):
    out = {}
    in_scope = set(int(a) for a in comp.free)
    for aid in query_ids:
        if comp.fixed[aid] >= 0:
            out[program.atoms[aid]] = float(comp.fixed[aid])
        elif aid in in_scope:
            out[program.atoms[aid]] = float(marginals[aid])
        else:
            # atom untouched by any rule: its marginal is its bias alone
            out[program.atoms[aid]] = sigmoid(comp.bias[aid])
    return out


def exact_query(program: GroundedProgram, query_atoms=None,
                config: MlnConfig | None = None, evidence=None,
                bias=None) -> dict[GroundAtom, float]:
    """Exact marginals of the query atoms by world enumeration."""
    config = config or MlnConfig()
    query_ids = (list(range(program.n_atoms)) if query_atoms is None
                 else _resolve_ids(program, query_atoms))
    comp = _compile(program, _as_clamps(program, evidence), bias,
                    scope_atoms=query_ids)
    res = _exact_infer(comp, config.max_exact_atoms)
    return _marginal_dict(program, res.marginals, comp, query_ids)


def exact_joint(program: GroundedProgram, config: MlnConfig | None = None,
                evidence=None):
    """Joint distribution over free atoms.

    Returns (free_atoms, probs) where probs[mask] is the probability of the
    world whose k-th free atom is true iff bit k of mask is set.
    """
    config = config or MlnConfig()
    comp = _compile(program, _as_clamps(program, evidence),
                    scope_atoms=range(program.n_atoms))
    res = _exact_infer(comp, config.max_exact_atoms)
    return [program.atoms[int(a)] for a in res.free], res.joint


def gibbs_query(program: GroundedProgram, query_atoms=None,
                config: MlnConfig | None = None, evidence=None,
                bias=None) -> dict[GroundAtom, float]:
    """Gibbs-estimated marginals; deterministic for a fixed config seed."""
    config = config or MlnConfig()
    query_ids = (list(range(program.n_atoms)) if query_atoms is None
                 else _resolve_ids(program, query_atoms))
    comp = _compile(program, _as_clamps(program, evidence), bias,
                    scope_atoms=query_ids)
    res = _gibbs_infer(comp, config, config.seed)
    return _marginal_dict(program, res.marginals, comp, query_ids)


def gibbs_joint(program: GroundedProgram, config: MlnConfig | None = None,
                evidence=None):
    """Sampled joint over free atoms (same layout as exact_joint)."""
    config = config or MlnConfig()
    comp = _compile(program, _as_clamps(program, evidence),
                    scope_atoms=range(program.n_atoms))
    if len(comp.free) > 16:
        raise TooManyFreeAtoms("joint tracking supports at most 16 free atoms")
    res = _gibbs_infer(comp, config, config.seed, track_joint=True)
    return [program.atoms[int(a)] for a in comp.free], res.joint


def conditional_query(program: GroundedProgram, query_atoms, evidence=None,
                      config: MlnConfig | None = None,
                      bias=None) -> dict[GroundAtom, float]:
    """Marginals of query atoms from the program restricted to their rules.

    Only ground rules touching at least one query atom are kept; the given
    evidence (default: the program's own) clamps everything else.  Falls back
    from exact to Gibbs when the free-atom count exceeds the exact budget.
    """
    config = config or MlnConfig()
    query_ids = _resolve_ids(program, query_atoms)
    clamps = _as_clamps(program, evidence)
    if evidence is not None:
        overlap = set(query_ids) & set(clamps)
        if overlap:
            atom = program.atoms[overlap.pop()]
            raise LogicError(f"query atom {atom} also appears in evidence")
    restricted = program.restrict_to_query(query_ids, clamps)
    comp = _compile(restricted, restricted.evidence, bias,
                    scope_atoms=query_ids)
    if config.method == "exact" or (config.method == "auto"
                                    and len(comp.free) <= config.max_exact_atoms):
        res = _exact_infer(comp, config.max_exact_atoms)
    else:
        res = _gibbs_infer(comp, config, config.seed)
    return _marginal_dict(restricted, res.marginals, comp, query_ids)


def onehot_query(program: GroundedProgram, group_atoms, evidence=None,
                 config: MlnConfig | None = None,
                 bias=None) -> dict[GroundAtom, float]:
    """Conditional distribution over a mutually exclusive one-hot group.

    Enumerates the |group| feasible one-hot assignments directly, which
    realizes a hard exactly-one constraint without blowing up enumeration.
    All other atoms in the touched rules must be clamped; soft values are
    rounded to their nearest boolean.
    """
    config = config or MlnConfig()
    group_ids = _resolve_ids(program, group_atoms)
    clamps = _as_clamps(program, evidence)
    for g in group_ids:
        clamps.pop(g, None)
    restricted = program.restrict_to_query(group_ids, clamps)
    comp = _compile(restricted, restricted.evidence, bias,
                    scope_atoms=group_ids)
    state = np.where(comp.fixed >= 0, comp.fixed, 0).astype(np.int8)
    for a in comp.free:
        if int(a) not in group_ids:
            state[a] = 1 if sigmoid(comp.bias[a]) >= 0.5 else 0
    scores = np.zeros(len(group_ids))
    for k, g in enumerate(group_ids):
        for gg in group_ids:
            state[gg] = 1 if gg == g else 0
        sat = _rule_sat_state(comp, state)
        if (comp.is_hard & ~sat).any():
            scores[k] = -np.inf
        else:
            scores[k] = float((comp.weight * sat).sum()) + comp.bias[g]
    if not np.isfinite(scores).any():
        raise InfeasibleError("every one-hot assignment violates a hard rule")
    m = scores.max()
    p = np.exp(scores - m)
    p /= p.sum()
    return {program.atoms[g]: float(p[k]) for k, g in enumerate(group_ids)}


# ---------------------------------------------------------------------------
# Discriminative weight learning
# ---------------------------------------------------------------------------

@dataclass
class _LearnInstance:
    comp: _Compiled
    n_obs: dict[int, float]      # source -> observed satisfied count
    groundings: dict[int, int]   # source -> grounding count in F_Y
    states: list | None = None   # persistent chains
    share_key: tuple = ()        # instances with equal keys share expectations


def _world_values(program: GroundedProgram, world) -> np.ndarray:
    if hasattr(world, "values") and isinstance(world.values, np.ndarray):
        return world.values.astype(np.int8)
    vals = np.full(program.n_atoms, -1, dtype=np.int8)
    for atom, v in world.items():
        aid = atom if isinstance(atom, int) else program.atom_id(atom)
        vals[aid] = int(bool(v))
    if (vals < 0).any():
        missing = program.atoms[int(np.flatnonzero(vals < 0)[0])]
        raise LogicError(f"training world is not total: missing {missing}")
    return vals


def _prepare_instance(program: GroundedProgram, world,
                      query_predicates) -> _LearnInstance | None:
    values = _world_values(program, world)
    query_ids = [i for i, a in enumerate(program.atoms)
                 if a.pred in query_predicates]
    if not query_ids:
        return None
    clamps = {i: float(values[i]) for i in range(program.n_atoms)
              if i not in set(query_ids)}
    restricted = program.restrict_to_query(query_ids, clamps)
    comp = _compile(restricted, restricted.evidence, scope_atoms=query_ids)
    sat = _rule_sat_state(comp, values)
    n_obs: dict[int, float] = {}
    groundings: dict[int, int] = {}
    for r in range(comp.n_rules):
        if comp.is_hard[r]:
            continue
        src = int(comp.source[r])
        groundings[src] = groundings.get(src, 0) + 1
        n_obs[src] = n_obs.get(src, 0.0) + float(sat[r])
    key = (id(program), tuple(sorted(clamps.items())))
    return _LearnInstance(comp, n_obs, groundings, share_key=key)


def _expected_counts(inst: _LearnInstance, config: MlnConfig, seed,
                     persist: bool) -> dict[int, float]:
    if len(inst.comp.free) <= config.max_exact_atoms and config.method != "gibbs":
        res = _exact_infer(inst.comp, config.max_exact_atoms)
        expect = res.rule_expect
    else:
        burn = None if inst.states is None else max(1, config.burn_in // 10)
        res = _gibbs_infer(inst.comp, config, seed,
                           init_states=inst.states, burn_in=burn)
        if persist:
            inst.states = res.states
        expect = res.rule_expect
    out: dict[int, float] = {}
    for r in range(inst.comp.n_rules):
        if inst.comp.is_hard[r]:
            continue
        src = int(inst.comp.source[r])
        out[src] = out.get(src, 0.0) + float(expect[r])
    return out


def _fit_weights(instances: list[_LearnInstance], targets: list[dict[int, float]],
                 weights: dict[int, float], config: MlnConfig,
                 seed_base: int) -> dict[int, float]:
    """Shared gradient-ascent loop; ``targets`` plays the role of n_obs."""
    learnable = sorted({s for inst in instances for s in inst.groundings})
    total_g = {s: sum(inst.groundings.get(s, 0) for inst in instances)
               for s in learnable}
    w = dict(weights)
    for epoch in range(config.epochs):
        grads = {s: 0.0 for s in learnable}
        shared: dict[tuple, dict[int, float]] = {}
        for idx, inst in enumerate(instances):
            expect = shared.get(inst.share_key)
            if expect is None:
                for r in range(inst.comp.n_rules):
                    if not inst.comp.is_hard[r]:
                        inst.comp.weight[r] = w[int(inst.comp.source[r])]
                seed = int(np.random.SeedSequence(
                    [seed_base, len(shared), epoch]).generate_state(1)[0])
                expect = _expected_counts(inst, config, seed, persist=True)
                shared[inst.share_key] = expect
            for s in learnable:
                grads[s] += targets[idx].get(s, 0.0) - expect.get(s, 0.0)
        for s in learnable:
            g = grads[s] / max(1, total_g[s]) - config.l2 * w[s]
            w[s] = float(np.clip(w[s] + config.learn_rate * g,
                                 -config.weight_cap, config.weight_cap))
    return w


def learn_discriminative(instances, query_predicates,
                         config: MlnConfig | None = None,
                         init_weights=None) -> dict[int, float]:
    """Learn rule weights by conditional-likelihood ascent.

    ``instances`` is a sequence of (program, world) pairs where each world is
    total over its program's atoms.  Returns a weight per source rule index;
    rules never grounded with a query atom keep their initial weight.
    """
    config = config or MlnConfig()
    if not instances:
        raise LogicError("no training instances")
    prepared = []
    kb = None
    for program, world in instances:
        kb = program.kb
        inst = _prepare_instance(program, world, set(query_predicates))
        if inst is not None:
            prepared.append(inst)
    if not prepared:
        raise LogicError(
            f"query predicates {sorted(query_predicates)} never grounded")
    weights = {i: (0.0 if r.is_hard else r.weight)
               for i, r in enumerate(kb.rules)}
    if init_weights:
        weights.update(init_weights)
    learned = _fit_weights(prepared, [inst.n_obs for inst in prepared],
                           weights, config, config.seed)
    weights.update(learned)
    for i, r in enumerate(kb.rules):
        if r.is_hard:
            weights[i] = float("inf")
    return weights


def apply_weights(rules, weights: dict[int, float]) -> list[Rule]:
    """New rule list with learned weights substituted in place."""
    out = []
    for i, rule in enumerate(rules):
        if rule.is_hard or i not in weights:
            out.append(rule)
        else:
            out.append(replace(rule, weight=float(weights[i])))
    return out


# ---------------------------------------------------------------------------
# EM for latent preferences with a mention/report model
# ---------------------------------------------------------------------------

DEFAULT_MENTION_MAP = {"MentionPos": "Like", "MentionNeg": "Dislike"}


def _latent_category(program: GroundedProgram, aid: int) -> str:
    atom = program.atoms[aid]
    schema = program.kb.schema(atom.pred)
    if schema.category is not None:
        return schema.category
    for sym, sort in zip(atom.args, schema.arg_types):
        if sort == program.kb.entity_sort:
            label = program.kb.entity_category_map.get(sym)
            if label is not None:
                return label
    return "_global"


def em_learn_latent(program: GroundedProgram, latent_predicates,
                    config: MlnConfig | None = None,
                    mention_map: dict[str, str] | None = None,
                    max_rounds: int = 10, tol: float = 1e-3,
                    s_init: float = 0.5):
    """EM over latent preference atoms tied to observed mentions.

    The observation model is P(mention | latent true) = S_category and
    P(mention | latent false) = 0, so a positive mention pins its latent atom
    true and absence of a mention contributes a log(1 - S) prior against it.
    Returns (weights by source rule index, MentionModel).
    """
    config = config or MlnConfig()
    mention_map = DEFAULT_MENTION_MAP if mention_map is None else mention_map
    kb = program.kb
    for p in latent_predicates:
        if kb.schema(p).role != "latent":
            raise LogicError(f"predicate {p!r} is not declared role=latent")

    latent_ids = [i for i, a in enumerate(program.atoms)
                  if a.pred in set(latent_predicates)]
    if not latent_ids:
        raise LogicError("no latent atoms in the program")
    for aid in latent_ids:
        if aid in program.evidence:
            raise LogicError(
                f"latent atom {program.atoms[aid]} has evidence; latent "
                f"predicates must be unobserved")

    categories = {aid: _latent_category(program, aid) for aid in latent_ids}
    mentioned: set[int] = set()
    for mention_pred, latent_pred in mention_map.items():
        if latent_pred not in set(latent_predicates):
            continue
        for atom, v in program.evidence.items():
            ga = program.atoms[atom]
            if ga.pred == mention_pred and v >= 0.5:
                target = GroundAtom(latent_pred, ga.args)
                if target in program.atom_ids:
                    mentioned.add(program.atom_ids[target])

    all_cats = sorted(set(categories.values()))
    weights = {i: (0.0 if r.is_hard else r.weight)
               for i, r in enumerate(kb.rules)}
    if not mentioned:
        # nothing to learn from: no report was ever observed
        untouched = {i: (float("inf") if r.is_hard else r.weight)
                     for i, r in enumerate(kb.rules)}
        return untouched, MentionModel({c: 0.01 for c in all_cats})

    s = {c: float(s_init) for c in all_cats}
    mention_count = {c: 0.0 for c in all_cats}
    for aid in mentioned:
        mention_count[categories[aid]] += 1.0

    clamps_x = dict(program.evidence)
    restricted = program.restrict_to_query(latent_ids, clamps_x)
    base_comp = _compile(restricted, restricted.evidence,
                         scope_atoms=latent_ids)
    groundings: dict[int, int] = {}
    for r in range(base_comp.n_rules):
        if not base_comp.is_hard[r]:
            src = int(base_comp.source[r])
            groundings[src] = groundings.get(src, 0) + 1
    model_inst = _LearnInstance(base_comp, {}, groundings,
                                share_key=(id(base_comp),))

    for round_no in range(max_rounds):
        # E-step: posterior over latents given mentions and evidence
        e_clamps = dict(clamps_x)
        e_bias = {}
        for aid in latent_ids:
            if aid in mentioned:
                e_clamps[aid] = 1.0
            else:
                e_bias[aid] = math.log(max(1e-12, 1.0 - s[categories[aid]]))
        e_restricted = program.restrict_to_query(
            [a for a in latent_ids if a not in mentioned], e_clamps)
        e_comp = _compile(e_restricted, e_restricted.evidence, e_bias,
                          scope_atoms=latent_ids)
        for r in range(e_comp.n_rules):
            if not e_comp.is_hard[r]:
                e_comp.weight[r] = weights[int(e_comp.source[r])]
        e_seed = int(np.random.SeedSequence(
            [config.seed, 7, round_no]).generate_state(1)[0])
        if len(e_comp.free) <= config.max_exact_atoms and config.method != "gibbs":
            e_res = _exact_infer(e_comp, config.max_exact_atoms)
            q_marginals, e_expect = e_res.marginals, e_res.rule_expect
        else:
            g_res = _gibbs_infer(e_comp, config, e_seed)
            q_marginals, e_expect = g_res.marginals, g_res.rule_expect
        q = {aid: (1.0 if aid in mentioned else float(q_marginals[aid]))
             for aid in latent_ids}
        target: dict[int, float] = {}
        for r in range(e_comp.n_rules):
            if not e_comp.is_hard[r]:
                src = int(e_comp.source[r])
                target[src] = target.get(src, 0.0) + float(e_expect[r])

        # M-step: report probabilities then rule weights
        new_s = {}
        for c in all_cats:
            expected_true = sum(q[aid] for aid in latent_ids
                                if categories[aid] == c)
            new_s[c] = float(np.clip(
                mention_count[c] / max(1e-9, expected_true), 0.01, 0.99))
        new_weights = _fit_weights(
            [model_inst], [target], weights, config,
            int(np.random.SeedSequence([config.seed, 11, round_no])
                .generate_state(1)[0]))
        merged = dict(weights)
        merged.update(new_weights)

        delta = max(
            max(abs(new_s[c] - s[c]) for c in all_cats),
            max(abs(merged[k] - weights[k]) for k in merged))
        s, weights = new_s, merged
        if delta < tol:
            break

    for i, r in enumerate(kb.rules):
        if r.is_hard:
            weights[i] = float("inf")
    return weights, MentionModel(dict(s))

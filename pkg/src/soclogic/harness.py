"""Evaluation protocols, rule-probability reports, and synthetic networks.

The friend-observed protocol is leave-one-out: each target atom is hidden
in turn and inferred from everything else.  The friend-latent protocol
hides a fraction of target atoms, bootstraps each user from individual
evidence only, then runs greedy re-estimation rounds where every user is
re-inferred given the previous round's estimates of its neighbors.
"""

from __future__ import annotations

import math
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import mln, psl
from .logic import (GroundAtom, GroundedProgram, KnowledgeBase, LogicError,
                    ground)
from .schema import SYMMETRIC_RELATIONS, SocialGraph, default_schema


# ---------------------------------------------------------------------------
# Engines
# ---------------------------------------------------------------------------

class MlnEngine:
    """Conditional-marginal scorer backed by exact or Gibbs MLN inference."""

    name = "mln"

    def __init__(self, config: mln.MlnConfig | None = None):
        self.config = config or mln.MlnConfig()

    def scores(self, program: GroundedProgram, query_atoms, evidence) -> dict:
        return mln.conditional_query(program, query_atoms, evidence=evidence,
                                     config=self.config)

    def with_seed(self, seed: int) -> "MlnEngine":
        return MlnEngine(replace(self.config, seed=seed))


class PslEngine:
    """MPE-value scorer; soft evidence clamps interpretations directly."""

    name = "psl"

    def __init__(self, config: psl.PslConfig | None = None):
        self.config = config or psl.PslConfig()

    def scores(self, program: GroundedProgram, query_atoms, evidence) -> dict:
        query_ids = [a if isinstance(a, int) else program.atom_id(a)
                     for a in query_atoms]
        ev = {a if isinstance(a, int) else program.atom_id(a): float(v)
              for a, v in evidence.items()}
        restricted = program.restrict_to_query(query_ids, ev)
        interp = psl.mpe_infer(restricted, self.config)
        return {program.atoms[q]: float(interp.values[q]) for q in query_ids}

    def with_seed(self, seed: int) -> "PslEngine":
        return PslEngine(replace(self.config, seed=seed))


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------

def _safe_div(a, b):
    return a / b if b else 0.0


@dataclass
class Metrics:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    def add(self, predicted: bool, gold: bool):
        if predicted and gold:
            self.tp += 1
        elif predicted and not gold:
            self.fp += 1
        elif not predicted and gold:
            self.fn += 1
        else:
            self.tn += 1

    @property
    def precision(self):
        return _safe_div(self.tp, self.tp + self.fp)

    @property
    def recall(self):
        return _safe_div(self.tp, self.tp + self.fn)

    @property
    def f1(self):
        p, r = self.precision, self.recall
        return _safe_div(2 * p * r, p + r)

    @property
    def accuracy(self):
        return _safe_div(self.tp + self.tn, self.tp + self.fp + self.fn + self.tn)

    def as_dict(self):
        return {"tp": self.tp, "fp": self.fp, "fn": self.fn, "tn": self.tn,
                "precision": self.precision, "recall": self.recall,
                "f1": self.f1, "accuracy": self.accuracy}


@dataclass
class EvalReport:
    """Metrics plus run metadata; serializes to diffable key/value lines."""

    task: str
    engine: str
    setting: str
    seed: int
    metrics: Metrics
    rounds: list[Metrics] = field(default_factory=list)
    rule_ratios: dict[str, float] = field(default_factory=dict)
    predictions: dict = field(default_factory=dict)

    def to_lines(self):
        lines = [("task", self.task), ("engine", self.engine),
                 ("setting", self.setting), ("seed", self.seed)]
        for k, v in self.metrics.as_dict().items():
            lines.append((k, _fmt(v)))
        for i, m in enumerate(self.rounds):
            for k, v in m.as_dict().items():
                lines.append((f"round{i}.{k}", _fmt(v)))
        for name, ratio in sorted(self.rule_ratios.items()):
            lines.append((f"ratio.{name}", _fmt(ratio)))
        return lines


def _fmt(v):
    return f"{v:.6g}" if isinstance(v, float) else str(v)


# ---------------------------------------------------------------------------
# Program assembly
# ---------------------------------------------------------------------------

def build_program(kb: KnowledgeBase, graph: SocialGraph, target_predicates,
                  prune: bool = True) -> GroundedProgram:
    """Ground the KB over a graph, keeping target predicates unclamped.

    Target-predicate atoms are withheld from grounding evidence (and from
    the closed-world fill) so evaluation can clamp or hide them per query;
    satisfied evidence-only rules may then be pruned safely.
    """
    targets = set(target_predicates)
    graph.populate_kb(kb)
    evidence = {a: v for a, v in graph.evidence.items() if a.pred not in targets}
    return ground(kb, evidence, prune_satisfied=prune, prune_forced=prune,
                  open_predicates=targets)


def target_evidence(program: GroundedProgram, graph: SocialGraph,
                    target_predicates) -> dict[int, float]:
    """Evidence ids for target atoms: the graph's value, else closed-world 0."""
    targets = set(target_predicates)
    out = {}
    for i, atom in enumerate(program.atoms):
        if atom.pred in targets:
            out[i] = float(graph.evidence.get(atom, 0.0))
    return out


def _hidden_with_symmetry(program: GroundedProgram, aid: int) -> list[int]:
    atom = program.atoms[aid]
    hidden = [aid]
    if atom.pred in SYMMETRIC_RELATIONS:
        mirror = GroundAtom(atom.pred, (atom.args[1], atom.args[0]))
        if mirror in program.atom_ids:
            hidden.append(program.atom_ids[mirror])
    return hidden


# ---------------------------------------------------------------------------
# Friend-observed protocol
# ---------------------------------------------------------------------------

def friend_observed_eval(graph: SocialGraph, kb: KnowledgeBase, engine,
                         targets, *, program: GroundedProgram | None = None,
                         threshold: float = 0.5, threads: int = 1,
                         seed: int = 0) -> EvalReport:
    """Leave-one-out evaluation: hide each target, infer it, restore.

    ``targets`` are ground atoms whose gold values live in the graph's
    evidence (absent means false).  Symmetric relation targets hide both
    orientations.  Thread count changes wall time only.
    """
    target_preds = {t.pred for t in targets}
    if program is None:
        program = build_program(kb, graph, target_preds)
    base = dict(program.evidence)
    base.update(target_evidence(program, graph, target_preds))

    target_ids = [program.atom_id(t) for t in targets]
    gold = {i: base.get(i, 0.0) >= 0.5 for i in target_ids}

    def run_one(k_aid):
        k, aid = k_aid
        hidden = _hidden_with_symmetry(program, aid)
        ev = {i: v for i, v in base.items() if i not in hidden}
        eng = engine.with_seed(_derived_seed(seed, k))
        score = eng.scores(program, [aid], ev)[program.atoms[aid]]
        return k, score

    results: dict[int, float] = {}
    items = list(enumerate(target_ids))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for k, score in pool.map(run_one, items):
                results[k] = score
    else:
        for item in items:
            k, score = run_one(item)
            results[k] = score

    metrics = Metrics()
    predictions = {}
    for k, aid in enumerate(target_ids):
        score = results[k]
        predicted = score >= threshold
        metrics.add(predicted, gold[aid])
        predictions[program.atoms[aid]] = score
    return EvalReport("friend_observed", engine.name, "observed", seed,
                      metrics, predictions=predictions)


def _derived_seed(seed: int, k: int) -> int:
    return int(np.random.SeedSequence([seed, k]).generate_state(1)[0])


# ---------------------------------------------------------------------------
# Friend-latent protocol
# ---------------------------------------------------------------------------

def _user_sort_args(kb: KnowledgeBase, atom: GroundAtom):
    schema = kb.schema(atom.pred)
    return [sym for sym, sort in zip(atom.args, schema.arg_types)
            if sort == "User"]


def _individual_program(program: GroundedProgram, user: str,
                        query_ids) -> GroundedProgram:
    """Rules that mention no user other than ``user`` (non-network evidence)."""
    kb = program.kb
    kept = []
    for rule in program.rules_touching(query_ids):
        ok = True
        for aid in set(rule.atom_ids()):
            others = [u for u in _user_sort_args(kb, program.atoms[aid])
                      if u != user]
            if others:
                ok = False
                break
        if ok:
            kept.append(rule)
    return GroundedProgram(program.atoms, tuple(kept), dict(program.evidence),
                           kb, dict(program.atom_ids))


def friend_latent_eval(graph: SocialGraph, kb: KnowledgeBase, engine,
                       hidden_fraction: float, rounds: int = 3, seed: int = 0,
                       *, target_predicates=("Like",),
                       program: GroundedProgram | None = None,
                       threshold: float = 0.5, immediate: bool = False,
                       threads: int = 1) -> EvalReport:
    """Joint greedy inference with a hidden fraction of target atoms.

    Round 0 scores each hidden atom from its owner's individual evidence
    only; later rounds re-estimate each user's hidden atoms given the
    previous round's estimates for everyone else (synchronous updates unless
    ``immediate``).  Returns metrics per round; the headline metrics are the
    final round's.
    """
    if not 0.0 < hidden_fraction < 1.0:
        raise LogicError("hidden_fraction must be in (0,1)")
    target_preds = set(target_predicates)
    if program is None:
        program = build_program(kb, graph, target_preds)
    base = dict(program.evidence)
    base.update(target_evidence(program, graph, target_preds))

    candidates = [i for i, a in enumerate(program.atoms)
                  if a.pred in target_preds]
    rng = np.random.default_rng(np.random.SeedSequence([seed, 101]))
    n_hidden = max(1, int(round(hidden_fraction * len(candidates))))
    hidden = sorted(rng.choice(len(candidates), size=n_hidden,
                               replace=False).tolist())
    hidden_ids = [candidates[i] for i in hidden]
    hidden_set = set(hidden_ids)
    gold = {i: base.get(i, 0.0) >= 0.5 for i in hidden_ids}

    by_user: dict[str, list[int]] = {}
    for aid in hidden_ids:
        by_user.setdefault(program.atoms[aid].args[0], []).append(aid)
    users = sorted(by_user)

    observed = {i: v for i, v in base.items() if i not in hidden_set}

    def audit_evidence(ev, estimates):
        for h in hidden_set:
            if h in ev and ev[h] != estimates.get(h):
                raise AssertionError(
                    f"gold leak: hidden atom {program.atoms[h]} in evidence")

    # round 0: individual evidence only
    estimates: dict[int, float] = {}
    for user in users:
        q = by_user[user]
        indiv = _individual_program(program, user, q)
        eng = engine.with_seed(_derived_seed(seed, 0))
        audit_evidence(observed, {})
        scores = eng.scores(indiv, q, observed)
        for aid in q:
            estimates[aid] = scores[program.atoms[aid]]

    per_round = [_score_round(program, estimates, gold, threshold)]

    for rnd in range(1, rounds + 1):
        order = list(users)
        rng_round = np.random.default_rng(np.random.SeedSequence([seed, 202, rnd]))
        rng_round.shuffle(order)
        current = estimates if immediate else dict(estimates)
        next_estimates: dict[int, float] = {}
        for user in order:
            q = by_user[user]
            ev = dict(observed)
            for aid in hidden_set:
                if aid not in q:
                    ev[aid] = current[aid]
            audit_evidence(ev, current)
            eng = engine.with_seed(_derived_seed(seed, 1000 * rnd))
            scores = eng.scores(program, q, ev)
            for aid in q:
                next_estimates[aid] = scores[program.atoms[aid]]
                if immediate:
                    estimates[aid] = next_estimates[aid]
        estimates = next_estimates if not immediate else estimates
        per_round.append(_score_round(program, estimates, gold, threshold))

    report = EvalReport("friend_latent", engine.name, "latent", seed,
                        per_round[-1], rounds=per_round,
                        predictions={program.atoms[a]: estimates[a]
                                     for a in hidden_ids})
    return report


def _score_round(program, estimates, gold, threshold) -> Metrics:
    metrics = Metrics()
    for aid, score in sorted(estimates.items()):
        metrics.add(score >= threshold, gold[aid])
    return metrics


# ---------------------------------------------------------------------------
# Rule probability report
# ---------------------------------------------------------------------------

def rule_probability_report(graph: SocialGraph, kb: KnowledgeBase, engine,
                            rule_indices=None, *,
                            program: GroundedProgram | None = None,
                            target_predicates=("Like",),
                            seed: int = 0) -> dict[str, float]:
    """Per-rule ratio of head marginals with the body clamped true vs false.

    Mirrors the conditional-probability tables: for each grounding of a soft
    rule, the head atom is freed and scored once with every body literal
    clamped true and once clamped false; the ratio averages over groundings.
    """
    target_preds = set(target_predicates)
    if program is None:
        program = build_program(kb, graph, target_preds)
    base = dict(program.evidence)
    base.update(target_evidence(program, graph, target_preds))

    if rule_indices is None:
        rule_indices = [i for i, r in enumerate(kb.rules)
                        if not r.is_hard and r.body]
    ratios: dict[str, float] = {}
    for ridx in rule_indices:
        groundings = [r for r in program.rules if r.source == ridx]
        if not groundings:
            raise LogicError(
                f"rule {ridx} has no groundings (zero-support condition)")
        num_sum = den_sum = 0.0
        count = 0
        for k, g in enumerate(groundings):
            head_aid = g.head[0]
            ev_true = dict(base)
            ev_false = dict(base)
            for aid, neg in g.body:
                ev_true[aid] = 0.0 if neg else 1.0
                ev_false[aid] = 1.0 if neg else 0.0
            for ev in (ev_true, ev_false):
                for h in _hidden_with_symmetry(program, head_aid):
                    ev.pop(h, None)
            eng = engine.with_seed(_derived_seed(seed, 31 * ridx + k))
            head_atom = program.atoms[head_aid]
            p_true = eng.scores(program, [head_aid], ev_true)[head_atom]
            p_false = eng.scores(program, [head_aid], ev_false)[head_atom]
            if g.head[1]:
                p_true, p_false = 1.0 - p_true, 1.0 - p_false
            num_sum += p_true
            den_sum += p_false
            count += 1
        name = f"rule{ridx}"
        ratios[name] = (num_sum / count) / (den_sum / count) if den_sum else math.inf
    return ratios


# ---------------------------------------------------------------------------
# Synthetic network generation
# ---------------------------------------------------------------------------

@dataclass
class SynthParams:
    """Generator knobs; rules are planted with their true weights."""

    users: int = 100
    density: float = 0.04
    categories: tuple[str, ...] = ("sports", "food")
    rules: tuple[str, ...] = ()
    s_mention: float | dict = 0.3
    seed: int = 0
    burn_sweeps: int = 2000
    query_predicates: tuple[str, ...] = ("Like",)
    # observed covariates: predicate -> per-(user, entity) emission probability
    attr_density: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.users < 2:
            raise LogicError("need at least two users")
        if not 0.0 <= self.density <= 1.0:
            raise LogicError("density must be in [0,1]")


def synth_user(i: int) -> str:
    return f"u{i:04d}"


def synth_entity(label: str) -> str:
    return "e_" + label.replace("-", "_")


def synth_generate(params: SynthParams, kb: KnowledgeBase | None = None):
    """Sample (graph, gold world) from a planted program.

    Friend edges are Erdos-Renyi with the given density; the gold world over
    the query predicates is drawn from the planted weighted rules by exact
    block sampling when small enough, long-run Gibbs otherwise.  Mention
    atoms are then emitted per gold preference with the planted per-category
    report probability.  Byte-identical output for a fixed seed.
    """
    if kb is None:
        kb = default_schema(query=params.query_predicates)
    users = [synth_user(i) for i in range(params.users)]
    entities = {synth_entity(c): c for c in params.categories}
    kb.add_constants(users, "User")
    for e, c in sorted(entities.items()):
        kb.add_constant(e, kb.entity_sort)
        kb.set_category(e, c)
    for text in params.rules:
        kb.add_rule(text)

    rng = np.random.default_rng(np.random.SeedSequence([params.seed, 1]))
    evidence: dict[GroundAtom, float] = {}
    for i in range(params.users):
        for j in range(i + 1, params.users):
            if rng.random() < params.density:
                evidence[GroundAtom("Friend", (users[i], users[j]))] = 1.0
                evidence[GroundAtom("Friend", (users[j], users[i]))] = 1.0
    for pred in sorted(params.attr_density):
        prob = params.attr_density[pred]
        rng_a = np.random.default_rng(
            np.random.SeedSequence([params.seed, 4, zlib.crc32(pred.encode())]))
        for user in users:
            for entity in sorted(entities):
                if rng_a.random() < prob:
                    evidence[GroundAtom(pred, (user, entity))] = 1.0

    program = ground(kb, evidence, prune_satisfied=True, prune_forced=True)
    gold = _sample_world(program, params, kb)

    s_of = params.s_mention if isinstance(params.s_mention, dict) else {
        c: float(params.s_mention) for c in params.categories}
    mention_of = {"Like": "MentionPos", "Dislike": "MentionNeg"}
    rng_m = np.random.default_rng(np.random.SeedSequence([params.seed, 2]))
    for atom in sorted(gold, key=lambda a: (a.pred, a.args)):
        if not gold[atom] or atom.pred not in mention_of:
            continue
        entity = atom.args[1]
        s = s_of.get(entities.get(entity, ""), 0.0)
        if rng_m.random() < s:
            evidence[GroundAtom(mention_of[atom.pred], atom.args)] = 1.0

    for atom, true in gold.items():
        if true:
            evidence[atom] = 1.0

    graph = SocialGraph(users, dict(entities), [], evidence)
    return graph, gold


def _sample_world(program: GroundedProgram, params: SynthParams,
                  kb: KnowledgeBase):
    """One exact or long-run-Gibbs sample of the free (query) atoms."""
    config = mln.MlnConfig(burn_in=params.burn_sweeps, samples=1, chains=1,
                           seed=params.seed)
    comp = mln._compile(program, dict(program.evidence),
                        scope_atoms=[i for i, a in enumerate(program.atoms)
                                     if a.pred in set(params.query_predicates)])
    rng = np.random.default_rng(np.random.SeedSequence([params.seed, 3]))
    if len(comp.free) <= config.max_exact_atoms:
        res = mln._exact_infer(comp, config.max_exact_atoms)
        mask = int(rng.choice(len(res.joint), p=res.joint))
        state = np.where(comp.fixed >= 0, comp.fixed, 0).astype(np.int8)
        for k, aid in enumerate(res.free):
            state[aid] = (mask >> k) & 1
    else:
        g = mln._gibbs_infer(comp, config, params.seed)
        state = g.states[0]
    out = {}
    for i, atom in enumerate(program.atoms):
        if atom.pred in set(params.query_predicates):
            out[atom] = bool(state[i])
    return out

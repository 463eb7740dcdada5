"""Typed predicates, weighted first-order rules, parsing, and grounding.

Rules are implications `body => head` with a real weight or a HARD marker
(represented as ``math.inf``).  Grounding substitutes every declared
constant of the matching sort for each variable and emits a propositional
program shared by the boolean and soft inference engines.
"""

from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass, field

HARD = math.inf


class LogicError(Exception):
    pass


class ParseError(LogicError):
    """Raised on malformed rule text; carries the offending position."""

    def __init__(self, message: str, text: str = "", pos: int = 0):
        self.pos = pos
        self.text = text
        if text:
            message = f"{message} (at position {pos}: {text[pos:pos + 20]!r})"
        super().__init__(message)


class GroundingError(LogicError):
    pass


class InfeasibleError(LogicError):
    """Hard constraints admit no assignment (reports the conflicting set)."""

    def __init__(self, message, conflicts=()):
        self.conflicts = list(conflicts)
        if self.conflicts:
            message += ": " + "; ".join(str(c) for c in self.conflicts[:10])
        super().__init__(message)


@dataclass(frozen=True)
class PredicateSchema:
    """Declared predicate: name, argument sorts, and grounding flags.

    ``role`` partitions atoms into evidence / query / latent.  ``irreflexive``
    drops rule groundings that would assign equal constants to distinct
    argument positions.  ``category_scoped`` predicates participate in the
    entity-category cut-off; ``category`` pins an intrinsic label (used by
    per-category projection predicates).
    """

    name: str
    arg_types: tuple[str, ...]
    role: str = "evidence"
    irreflexive: bool = False
    category_scoped: bool = False
    category: str | None = None

    def __post_init__(self):
        if len(self.arg_types) < 1:
            raise LogicError(f"predicate {self.name}: arity must be >= 1")
        if self.role not in ("evidence", "query", "latent"):
            raise LogicError(f"predicate {self.name}: bad role {self.role!r}")

    @property
    def arity(self) -> int:
        return len(self.arg_types)


@dataclass(frozen=True)
class Constant:
    symbol: str
    sort: str


@dataclass(frozen=True)
class Variable:
    name: str


@dataclass(frozen=True)
class Literal:
    """A possibly negated predicate applied to variables and constants."""

    predicate: PredicateSchema
    args: tuple
    negated: bool = False

    def __post_init__(self):
        if len(self.args) != self.predicate.arity:
            raise LogicError(
                f"{self.predicate.name}: expected {self.predicate.arity} "
                f"arguments, got {len(self.args)}"
            )

    def variables(self):
        return [a for a in self.args if isinstance(a, Variable)]

    def __str__(self):
        parts = []
        for a in self.args:
            parts.append(a.name if isinstance(a, Variable) else "@" + a.symbol)
        neg = "!" if self.negated else ""
        return f"{neg}{self.predicate.name}({', '.join(parts)})"


@dataclass(frozen=True)
class Rule:
    """Weighted implication.  ``weight == HARD`` marks a hard constraint.

    An empty body is allowed (a prior on the head); its head variables are
    quantified over their argument sorts.  With a non-empty body every head
    variable must occur in the body.
    """

    weight: float
    body: tuple[Literal, ...]
    head: Literal
    distinct_vars: bool = False

    def __post_init__(self):
        if self.weight != HARD and not math.isfinite(self.weight):
            raise LogicError("rule weight must be finite or HARD")
        if self.body:
            body_vars = {v.name for lit in self.body for v in lit.variables()}
            for v in self.head.variables():
                if v.name not in body_vars:
                    raise ParseError(f"unbound head variable {v.name!r}")

    @property
    def is_hard(self) -> bool:
        return self.weight == HARD

    def variables(self):
        """Variables in first-occurrence order (body first, then head)."""
        seen: dict[str, Variable] = {}
        for lit in (*self.body, self.head):
            for v in lit.variables():
                seen.setdefault(v.name, v)
        return list(seen.values())

    def __str__(self):
        return format_rule(self)


@dataclass(frozen=True)
class GroundAtom:
    pred: str
    args: tuple[str, ...]

    def __str__(self):
        return f"{self.pred}({','.join(self.args)})"

    @staticmethod
    def parse(text: str) -> "GroundAtom":
        m = re.fullmatch(r"\s*(\w+)\s*\(([^)]*)\)\s*", text)
        if m is None:
            raise ParseError(f"malformed atom {text!r}")
        args = tuple(a.strip() for a in m.group(2).split(",")) if m.group(2).strip() else ()
        return GroundAtom(m.group(1), args)


@dataclass(frozen=True)
class GroundRule:
    """Propositional rule: literals refer to atom ids in the owning program."""

    weight: float
    body: tuple[tuple[int, bool], ...]  # (atom id, negated)
    head: tuple[int, bool]
    source: int  # index of the first-order rule that produced it

    @property
    def is_hard(self) -> bool:
        return self.weight == HARD

    def atom_ids(self):
        return [a for a, _ in self.body] + [self.head[0]]


class KnowledgeBase:
    """Predicate schemas, sorted constants, rules, and entity categories."""

    def __init__(self, entity_sort: str = "Entity"):
        self.schemas: dict[str, PredicateSchema] = {}
        self.constants: dict[str, list[str]] = {}
        self.rules: list[Rule] = []
        self.entity_category_map: dict[str, str] = {}
        self.entity_sort = entity_sort
        self._constant_set: set[tuple[str, str]] = set()

    def declare_predicate(self, name, arg_types, role="evidence",
                          irreflexive=False, category_scoped=False,
                          category=None) -> PredicateSchema:
        if name in self.schemas:
            raise LogicError(f"predicate {name!r} already declared")
        schema = PredicateSchema(name, tuple(arg_types), role,
                                 irreflexive, category_scoped, category)
        self.schemas[name] = schema
        for sort in schema.arg_types:
            self.constants.setdefault(sort, [])
        return schema

    def schema(self, name: str) -> PredicateSchema:
        try:
            return self.schemas[name]
        except KeyError:
            raise LogicError(f"unknown predicate {name!r}") from None

    def add_constant(self, symbol: str, sort: str):
        key = (symbol, sort)
        if key in self._constant_set:
            return
        self._constant_set.add(key)
        bucket = self.constants.setdefault(sort, [])
        bucket.append(symbol)
        bucket.sort()

    def add_constants(self, symbols, sort: str):
        for s in symbols:
            self.add_constant(s, sort)

    def has_constant(self, symbol: str, sort: str) -> bool:
        return (symbol, sort) in self._constant_set

    def set_category(self, entity: str, label: str):
        self.entity_category_map[entity] = label

    def add_rule(self, rule, distinct_vars=None) -> Rule:
        if isinstance(rule, str):
            rule = parse_rule(rule, self, distinct_vars=distinct_vars)
        self.rules.append(rule)
        return rule

    def default_distinct_vars(self, body) -> bool:
        """True when the body mentions a binary same-sort (user-user) predicate."""
        for lit in body:
            t = lit.predicate.arg_types
            if len(t) == 2 and t[0] == t[1]:
                return True
        return False

    def atom(self, pred: str, *args: str) -> GroundAtom:
        """Build a validated ground atom over declared constants."""
        schema = self.schema(pred)
        if len(args) != schema.arity:
            raise LogicError(f"{pred}: expected {schema.arity} args, got {len(args)}")
        for sym, sort in zip(args, schema.arg_types):
            if not self.has_constant(sym, sort):
                raise LogicError(f"unknown constant {sym!r} of sort {sort!r}")
        return GroundAtom(pred, tuple(args))


# ---------------------------------------------------------------------------
# Rule syntax
#
#   <weight|HARD>: Lit & Lit ... => Lit        ('&' separated body, may be empty)
#   Lit           !?Name(term, term, ...)
#   term          lowercase identifier -> variable;  @symbol -> constant
#
# An optional trailing [distinct] / [mixed] marker overrides the default
# distinct-variables heuristic; the printer emits it only when it differs
# from the default, so spec-format files stay untouched.
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<hard>HARD\b)|(?P<num>[-+]?\d+(?:\.\d+)?(?:[eE][-+]?\d+)?)"
    r"|(?P<at>@[A-Za-z0-9_.-]+)|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<arrow>=>)|(?P<sym>[:(),&!\[\]]))"
)


def _tokenize(text: str):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            if text[pos:].strip() == "":
                break
            raise ParseError("unexpected character", text, pos)
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    return tokens


class _RuleParser:
    def __init__(self, text: str, kb: KnowledgeBase):
        self.text = text
        self.kb = kb
        self.tokens = _tokenize(text)
        self.i = 0
        self.var_sorts: dict[str, str] = {}

    def peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else (None, "", len(self.text))

    def next(self):
        tok = self.peek()
        self.i += 1
        return tok

    def expect(self, kind, value=None):
        tok = self.next()
        if tok[0] != kind or (value is not None and tok[1] != value):
            want = value or kind
            raise ParseError(f"expected {want!r}", self.text, tok[2])
        return tok

    def parse(self, distinct_vars=None) -> Rule:
        kind, value, pos = self.next()
        if kind == "hard":
            weight = HARD
        elif kind == "num":
            weight = float(value)
        else:
            raise ParseError("malformed weight", self.text, pos)
        self.expect("sym", ":")

        body: list[Literal] = []
        if self.peek()[0] != "arrow":
            body.append(self.parse_literal())
            while self.peek()[:2] == ("sym", "&"):
                self.next()
                body.append(self.parse_literal())
        self.expect("arrow")
        head = self.parse_literal()

        marker = None
        if self.peek()[0] == "sym" and self.peek()[1] == "[":
            self.next()
            tok = self.expect("ident")
            if tok[1] not in ("distinct", "mixed"):
                raise ParseError("expected 'distinct' or 'mixed'", self.text, tok[2])
            marker = tok[1] == "distinct"
            self.expect("sym", "]")
        tok = self.peek()
        if tok[0] is not None:
            raise ParseError("trailing input", self.text, tok[2])

        if distinct_vars is None:
            distinct_vars = marker
        if distinct_vars is None:
            distinct_vars = self.kb.default_distinct_vars(body)
        return Rule(weight, tuple(body), head, distinct_vars=distinct_vars)

    def parse_literal(self) -> Literal:
        negated = False
        if self.peek()[:2] == ("sym", "!"):
            self.next()
            negated = True
        kind, name, pos = self.next()
        if kind != "ident":
            raise ParseError("expected predicate name", self.text, pos)
        if name not in self.kb.schemas:
            raise ParseError(f"unknown predicate {name!r}", self.text, pos)
        schema = self.kb.schemas[name]
        self.expect("sym", "(")
        args = [self.parse_term(schema, 0)]
        idx = 1
        while self.peek()[:2] == ("sym", ","):
            self.next()
            args.append(self.parse_term(schema, idx))
            idx += 1
        tok = self.next()
        if tok[:2] != ("sym", ")"):
            raise ParseError("expected ')'", self.text, tok[2])
        if len(args) != schema.arity:
            raise ParseError(
                f"{name}: arity mismatch, expected {schema.arity} got {len(args)}",
                self.text, pos)
        return Literal(schema, tuple(args), negated)

    def parse_term(self, schema: PredicateSchema, idx: int):
        kind, value, pos = self.next()
        if idx >= schema.arity:
            raise ParseError(f"{schema.name}: arity mismatch", self.text, pos)
        sort = schema.arg_types[idx]
        if kind == "at":
            return Constant(value[1:], sort)
        if kind == "ident" and value[0].islower():
            declared = self.var_sorts.setdefault(value, sort)
            if declared != sort:
                raise ParseError(
                    f"variable {value!r} used with conflicting sorts "
                    f"{declared!r} and {sort!r}", self.text, pos)
            return Variable(value)
        raise ParseError("expected variable or @constant", self.text, pos)


def parse_rule(text: str, kb: KnowledgeBase, distinct_vars=None) -> Rule:
    """Parse one rule line.  Raises ParseError with the failing position."""
    return _RuleParser(text, kb).parse(distinct_vars=distinct_vars)


def format_rule(rule: Rule, kb: KnowledgeBase | None = None) -> str:
    """Inverse of parse_rule: parse(format(r)) == r for any printable rule."""
    weight = "HARD" if rule.is_hard else repr(rule.weight)
    body = " & ".join(str(lit) for lit in rule.body)
    text = f"{weight}: {body} => {rule.head}" if body else f"{weight}: => {rule.head}"
    if kb is not None and rule.distinct_vars != kb.default_distinct_vars(rule.body):
        text += " [distinct]" if rule.distinct_vars else " [mixed]"
    return text


# ---------------------------------------------------------------------------
# Grounding
# ---------------------------------------------------------------------------

@dataclass
class GroundedProgram:
    """Immutable propositional program shared by both engines.

    ``evidence`` maps atom ids to values in [0, 1]; integral values are hard
    clamps, fractional values are soft evidence (the MLN engine turns them
    into log-odds biases, the PSL engine fixes the soft truth value).
    """

    atoms: tuple[GroundAtom, ...]
    rules: tuple[GroundRule, ...]
    evidence: dict[int, float]
    kb: KnowledgeBase
    atom_ids: dict[GroundAtom, int] = field(default_factory=dict)

    def __post_init__(self):
        if not self.atom_ids:
            self.atom_ids = {a: i for i, a in enumerate(self.atoms)}
        for aid, v in self.evidence.items():
            if not 0.0 <= v <= 1.0:
                raise GroundingError(f"evidence value {v} out of [0,1] for "
                                     f"{self.atoms[aid]}")
        self._touch: dict[int, list[int]] | None = None

    @property
    def n_atoms(self) -> int:
        return len(self.atoms)

    def atom_id(self, atom: GroundAtom) -> int:
        try:
            return self.atom_ids[atom]
        except KeyError:
            raise LogicError(f"atom {atom} not in program") from None

    def free_atom_ids(self) -> list[int]:
        return [i for i in range(len(self.atoms)) if i not in self.evidence]

    def _touch_index(self) -> dict[int, list[int]]:
        if self._touch is None:
            touch: dict[int, list[int]] = {}
            for ridx, rule in enumerate(self.rules):
                for a in set(rule.atom_ids()):
                    touch.setdefault(a, []).append(ridx)
            self._touch = touch
        return self._touch

    def rules_touching(self, atom_ids) -> list[GroundRule]:
        touch = self._touch_index()
        hit = sorted({ridx for a in set(atom_ids) for ridx in touch.get(a, ())})
        return [self.rules[ridx] for ridx in hit]

    def restrict_to_query(self, query_ids, evidence=None) -> "GroundedProgram":
        """Keep only rules touching a query atom; re-clamp the rest.

        ``evidence`` replaces the program evidence when given; query atoms are
        always freed.  Atom ids are preserved so results map back directly.
        """
        query = set(query_ids)
        ev = dict(self.evidence if evidence is None else evidence)
        for q in query:
            ev.pop(q, None)
        kept = tuple(self.rules_touching(query))
        return GroundedProgram(self.atoms, kept, ev, self.kb, dict(self.atom_ids))


def _ground_literal(lit: Literal, assignment: dict[str, str]) -> GroundAtom:
    args = tuple(assignment[a.name] if isinstance(a, Variable) else a.symbol
                 for a in lit.args)
    return GroundAtom(lit.predicate.name, args)


def _atom_categories(lit: Literal, atom: GroundAtom, kb: KnowledgeBase):
    """Category labels a scoped ground literal commits to."""
    cats = set()
    if lit.predicate.category is not None:
        cats.add(lit.predicate.category)
    for sym, sort in zip(atom.args, lit.predicate.arg_types):
        if sort == kb.entity_sort:
            label = kb.entity_category_map.get(sym)
            if label is None:
                raise GroundingError(
                    f"entity {sym!r} has no category label but appears in "
                    f"category-scoped predicate {lit.predicate.name}")
            cats.add(label)
    return cats


def validate_evidence(kb: KnowledgeBase, evidence) -> dict[GroundAtom, float]:
    checked = {}
    for atom, value in evidence.items():
        if isinstance(atom, str):
            atom = GroundAtom.parse(atom)
        schema = kb.schema(atom.pred)
        if len(atom.args) != schema.arity:
            raise GroundingError(f"evidence atom {atom}: arity mismatch")
        for sym, sort in zip(atom.args, schema.arg_types):
            if not kb.has_constant(sym, sort):
                raise GroundingError(
                    f"evidence atom {atom}: unknown constant {sym!r} of sort {sort!r}")
        if schema.irreflexive and len(set(atom.args)) < len(atom.args):
            raise GroundingError(f"evidence atom {atom}: predicate is irreflexive")
        if not 0.0 <= float(value) <= 1.0:
            raise GroundingError(f"evidence atom {atom}: value {value} out of [0,1]")
        checked[atom] = float(value)
    return checked


def ground(kb: KnowledgeBase, evidence=None, *, closed_world: bool = True,
           cutoff: bool = True, prune_satisfied: bool = False,
           prune_forced: bool = False, open_predicates=()) -> GroundedProgram:
    """Ground every rule over the declared constants.

    Substitutions are enumerated in sorted constant order, so identical
    inputs produce identical programs.  ``cutoff`` enables the entity-category
    independence heuristic; ``prune_satisfied`` drops ground rules whose atoms
    are all hard evidence and already satisfied; ``prune_forced`` additionally
    drops any rule a single evidence literal already satisfies (a falsified
    body conjunct or a true head), which shifts every world's log-weight by
    the same constant and so never changes marginals or gradients;
    ``closed_world`` assigns value 0 to unlisted atoms of evidence-role
    predicates, except those named in ``open_predicates``.
    """
    evidence = validate_evidence(kb, evidence or {})
    open_preds = set(open_predicates)

    def effective_value(atom: GroundAtom):
        """Evidence value including the closed-world default, else None."""
        v = evidence.get(atom)
        if (v is None and closed_world and atom.pred not in open_preds
                and kb.schema(atom.pred).role == "evidence"):
            return 0.0
        return v

    def forced_satisfied(body, head) -> bool:
        for atom, neg in body:
            v = effective_value(atom)
            if v in (0.0, 1.0) and bool(v) == neg:
                return True  # falsified conjunct: implication always holds
        v = effective_value(head[0])
        return v in (0.0, 1.0) and bool(v) != head[1]

    positives_by_pred: dict[str, list[GroundAtom]] = {}
    for atom, v in sorted(evidence.items(), key=lambda kv: (kv[0].pred, kv[0].args)):
        if v > 0.0:
            positives_by_pred.setdefault(atom.pred, []).append(atom)

    raw_rules: list[tuple[float, list[tuple[GroundAtom, bool]], tuple[GroundAtom, bool], int]] = []
    atom_set: set[GroundAtom] = set(evidence)

    for ridx, rule in enumerate(kb.rules):
        variables = rule.variables()
        var_names = [v.name for v in variables]
        var_sorts = {}
        for lit in (*rule.body, rule.head):
            for a, sort in zip(lit.args, lit.predicate.arg_types):
                if isinstance(a, Variable):
                    var_sorts[a.name] = sort
        domains = []
        for name in var_names:
            sort = var_sorts[name]
            consts = kb.constants.get(sort, [])
            if not consts:
                raise GroundingError(
                    f"rule {ridx} ({format_rule(rule)}): empty sort {sort!r} "
                    f"for variable {name!r}")
            domains.append(consts)

        substitutions = itertools.product(*domains)
        if prune_forced and closed_world:
            # join against the sparse positive instances of an evidence body
            # literal instead of the full product: every combo skipped here
            # would be dropped as forced-satisfied anyway
            anchor = None
            for lit in rule.body:
                s = lit.predicate
                if (not lit.negated and s.role == "evidence"
                        and s.name not in open_preds):
                    pos = positives_by_pred.get(s.name, [])
                    if anchor is None or len(pos) < len(anchor[1]):
                        anchor = (lit, pos)
            if anchor is not None:
                substitutions = _anchored_substitutions(
                    anchor[0], anchor[1], var_names, domains)

        for combo in substitutions:
            if rule.distinct_vars and len(set(combo)) < len(combo):
                continue
            assignment = dict(zip(var_names, combo))
            literals = [(lit, _ground_literal(lit, assignment))
                        for lit in (*rule.body, rule.head)]
            if any(lit.predicate.irreflexive and len(set(atom.args)) < len(atom.args)
                   for lit, atom in literals):
                continue
            if cutoff:
                cats: set[str] = set()
                for lit, atom in literals:
                    if lit.predicate.category_scoped:
                        cats |= _atom_categories(lit, atom, kb)
                if len(cats) > 1:
                    continue
            body = [(atom, lit.negated) for lit, atom in literals[:-1]]
            head_lit, head_atom = literals[-1]
            head = (head_atom, head_lit.negated)
            if prune_forced and forced_satisfied(body, head):
                continue
            if prune_satisfied and _evidence_satisfied(body, head, effective_value):
                continue
            raw_rules.append((rule.weight, body, head, ridx))
            atom_set.update(atom for atom, _ in body)
            atom_set.add(head_atom)

    atoms = tuple(sorted(atom_set, key=lambda a: (a.pred, a.args)))
    ids = {a: i for i, a in enumerate(atoms)}
    rules = tuple(
        GroundRule(w, tuple((ids[a], n) for a, n in body), (ids[head[0]], head[1]), src)
        for w, body, head, src in raw_rules)

    ev_ids = {ids[a]: v for a, v in evidence.items()}
    if closed_world:
        for atom, i in ids.items():
            if (i not in ev_ids and atom.pred not in open_preds
                    and kb.schema(atom.pred).role == "evidence"):
                ev_ids[i] = 0.0
    return GroundedProgram(atoms, rules, ev_ids, kb, ids)


def _anchored_substitutions(lit: Literal, positives, var_names, domains):
    """Substitutions consistent with some positive instance of ``lit``.

    Variables not bound by the anchor literal still range over their full
    domain; bindings are emitted in deterministic sorted order.
    """
    free_idx = [k for k, name in enumerate(var_names)
                if name not in {a.name for a in lit.args if isinstance(a, Variable)}]
    seen = set()
    for atom in positives:
        binding = {}
        ok = True
        for arg, sym in zip(lit.args, atom.args):
            if isinstance(arg, Variable):
                if binding.get(arg.name, sym) != sym:
                    ok = False
                    break
                binding[arg.name] = sym
            elif arg.symbol != sym:
                ok = False
                break
        if not ok:
            continue
        key = tuple(sorted(binding.items()))
        if key in seen:
            continue
        seen.add(key)
        rest = [domains[k] for k in free_idx]
        for extra in itertools.product(*rest):
            combo = [binding.get(name) for name in var_names]
            for k, val in zip(free_idx, extra):
                combo[k] = val
            yield tuple(combo)


def _evidence_satisfied(body, head, effective_value) -> bool:
    """True when all atoms carry 0/1 evidence and the implication holds."""
    vals = []
    for atom, neg in (*body, head):
        v = effective_value(atom)
        if v is None or v not in (0.0, 1.0):
            return False
        vals.append(bool(v) != neg)
    return (not all(vals[:-1])) or vals[-1]

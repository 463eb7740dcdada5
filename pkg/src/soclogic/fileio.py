"""Text file formats: schemas, rules, evidence, categories, and raw feeds.

All files are UTF-8 with '#' comments.  Tab-separated feeds (categories,
follow edges, geo events, name counts, spouse scores, population weights)
tolerate extra whitespace; evidence files are whitespace separated.
"""

from __future__ import annotations

import re

from .logic import (GroundAtom, KnowledgeBase, LogicError, ParseError, Rule,
                    format_rule)


class DataError(LogicError):
    """Malformed or inconsistent input file."""


def read_lines(path):
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if line:
                out.append((lineno, line))
    return out


_SCHEMA_RE = re.compile(
    r"predicate\s+(?P<name>\w+)\s*\((?P<sorts>[^)]*)\)\s*(?P<flags>.*)")


def load_schema(path, kb: KnowledgeBase | None = None) -> KnowledgeBase:
    """`predicate Name(Sort,...) role=query [irreflexive] [category_scoped]`."""
    kb = kb or KnowledgeBase()
    for lineno, line in read_lines(path):
        m = _SCHEMA_RE.fullmatch(line)
        if m is None:
            raise DataError(f"{path}:{lineno}: malformed schema line {line!r}")
        sorts = tuple(s.strip() for s in m.group("sorts").split(","))
        role, irrefl, scoped, category = "evidence", False, False, None
        for flag in m.group("flags").split():
            if flag.startswith("role="):
                role = flag[5:]
            elif flag == "irreflexive":
                irrefl = True
            elif flag == "category_scoped":
                scoped = True
            elif flag.startswith("category="):
                category = flag[9:]
            else:
                raise DataError(f"{path}:{lineno}: unknown flag {flag!r}")
        try:
            kb.declare_predicate(m.group("name"), sorts, role=role,
                                 irreflexive=irrefl, category_scoped=scoped,
                                 category=category)
        except LogicError as e:
            raise DataError(f"{path}:{lineno}: {e}") from e
    return kb


def save_schema(path, kb: KnowledgeBase):
    with open(path, "w", encoding="utf-8") as fh:
        for schema in kb.schemas.values():
            flags = [f"role={schema.role}"]
            if schema.irreflexive:
                flags.append("irreflexive")
            if schema.category_scoped:
                flags.append("category_scoped")
            if schema.category:
                flags.append(f"category={schema.category}")
            fh.write(f"predicate {schema.name}({','.join(schema.arg_types)}) "
                     f"{' '.join(flags)}\n")


def load_rules(path, kb: KnowledgeBase) -> list[Rule]:
    rules = []
    for lineno, line in read_lines(path):
        try:
            rules.append(kb.add_rule(line))
        except ParseError as e:
            raise DataError(f"{path}:{lineno}: {e}") from e
    return rules


def save_rules(path, rules, kb: KnowledgeBase | None = None):
    with open(path, "w", encoding="utf-8") as fh:
        for rule in rules:
            fh.write(format_rule(rule, kb) + "\n")


def load_evidence(path, kb: KnowledgeBase | None = None,
                  register_constants: bool = True) -> dict[GroundAtom, float]:
    """`Atom value` lines; bare `Atom` means 1, `!Atom` is sugar for value 0."""
    evidence: dict[GroundAtom, float] = {}
    for lineno, line in read_lines(path):
        negated = line.startswith("!")
        if negated:
            line = line[1:].strip()
        parts = line.rsplit(None, 1)
        if len(parts) == 2 and not parts[0].endswith(","):
            try:
                value = float(parts[1])
                text = parts[0]
            except ValueError:
                value, text = 1.0, line
        else:
            value, text = 1.0, line
        if negated:
            value = 0.0
        try:
            atom = GroundAtom.parse(text)
        except ParseError as e:
            raise DataError(f"{path}:{lineno}: {e}") from e
        if not 0.0 <= value <= 1.0:
            raise DataError(f"{path}:{lineno}: value {value} out of [0,1]")
        if kb is not None and register_constants:
            schema = kb.schemas.get(atom.pred)
            if schema is None:
                raise DataError(f"{path}:{lineno}: unknown predicate {atom.pred!r}")
            if len(atom.args) != schema.arity:
                raise DataError(f"{path}:{lineno}: {atom.pred} arity mismatch")
            for sym, sort in zip(atom.args, schema.arg_types):
                kb.add_constant(sym, sort)
        evidence[atom] = value
    return evidence


def save_evidence(path, evidence):
    with open(path, "w", encoding="utf-8") as fh:
        for atom in sorted(evidence, key=lambda a: (a.pred, a.args)):
            fh.write(f"{atom} {evidence[atom]:.6g}\n")


def _split_tsv(path, n_fields, types=None):
    rows = []
    for lineno, line in read_lines(path):
        parts = line.split("\t") if "\t" in line else line.split()
        if len(parts) != n_fields:
            raise DataError(
                f"{path}:{lineno}: expected {n_fields} fields, got {len(parts)}")
        if types:
            try:
                parts = [t(p) for t, p in zip(types, parts)]
            except ValueError as e:
                raise DataError(f"{path}:{lineno}: {e}") from e
        rows.append(tuple(parts))
    return rows


def load_categories(path) -> dict[str, str]:
    """`entity<TAB>category` lines."""
    return {e: c for e, c in _split_tsv(path, 2)}


def save_categories(path, categories):
    with open(path, "w", encoding="utf-8") as fh:
        for entity in sorted(categories):
            fh.write(f"{entity}\t{categories[entity]}\n")


def load_follow_edges(path) -> list[tuple[str, str, int]]:
    """`follower<TAB>followee<TAB>followee_follower_count` lines."""
    return _split_tsv(path, 3, (str, str, int))


def load_geo_events(path) -> list[tuple[str, str, tuple[int, int]]]:
    """`user<TAB>state<TAB>YYYY-MM` lines, returning (user, state, (y, m))."""
    rows = []
    for user, state, ym in _split_tsv(path, 3):
        m = re.fullmatch(r"(\d{4})-(\d{2})", ym)
        if m is None:
            raise DataError(f"{path}: bad month key {ym!r}")
        rows.append((user, state, (int(m.group(1)), int(m.group(2)))))
    return rows


def load_name_table(path) -> dict[str, tuple[int, int]]:
    """`name<TAB>male_count<TAB>female_count` lines."""
    return {name: (male, female)
            for name, male, female in _split_tsv(path, 3, (str, int, int))}


def load_spouse_scores(path) -> list[tuple[str, str, float]]:
    """`userA<TAB>userB<TAB>score` lines."""
    return _split_tsv(path, 3, (str, str, float))


def load_population(path) -> dict[str, float]:
    """`state<TAB>weight` lines for the random-location baseline."""
    return {s: w for s, w in _split_tsv(path, 2, (str, float))}


def save_report(path, lines):
    with open(path, "w", encoding="utf-8") as fh:
        for key, value in lines:
            fh.write(f"{key}\t{value}\n")

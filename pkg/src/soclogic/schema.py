"""Social-network predicate vocabulary, homophily templates, and graphs.

The default schema covers user attributes (location, gender, work, study),
user-user relations (friend, spouse, same place), entity preferences
(like/dislike) and their observed mention counterparts.  Preferences are
projected onto per-category LikeCat predicates through hard rules so that
homophily templates ground at category granularity.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import fileio
from .logic import GroundAtom, KnowledgeBase, LogicError, Rule, parse_rule

#: Default like-entity category labels (11 named clusters plus "other").
CATEGORY_LABELS = (
    "food", "sports", "tv-movies", "politics", "electronics", "music",
    "travel", "books", "fashion", "finance", "pets", "other",
)


@dataclass(frozen=True)
class CategorySet:
    labels: tuple[str, ...] = CATEGORY_LABELS

    def __post_init__(self):
        if not self.labels:
            raise LogicError("category set must be nonempty")
        if len(set(self.labels)) != len(self.labels):
            raise LogicError("category labels must be unique")

    def __iter__(self):
        return iter(self.labels)

    def __contains__(self, label):
        return label in self.labels


def likecat_predicate(label: str) -> str:
    """Name of the per-category like predicate (labels may carry hyphens)."""
    return "LikeCat_" + label.replace("-", "_")


SYMMETRIC_RELATIONS = ("Friend", "Spouse", "LiveInSamePlace")


def default_schema(query=("Like", "Dislike"), latent=()) -> KnowledgeBase:
    """Knowledge base with the standard social predicates and hard axioms.

    ``query`` and ``latent`` pick the experiment role of each predicate;
    everything else is evidence.  Friend/Spouse/LiveInSamePlace symmetry and
    gender exclusion are added as hard rules.
    """
    def role(name):
        if name in latent:
            return "latent"
        return "query" if name in query else "evidence"

    kb = KnowledgeBase()
    kb.declare_predicate("LiveIn", ("User", "State"), role=role("LiveIn"))
    kb.declare_predicate("Male", ("User",), role=role("Male"))
    kb.declare_predicate("Female", ("User",), role=role("Female"))
    kb.declare_predicate("WorkIn", ("User", "Entity"), role=role("WorkIn"),
                         category_scoped=True)
    kb.declare_predicate("StudyAt", ("User", "Entity"), role=role("StudyAt"))
    for rel in SYMMETRIC_RELATIONS:
        kb.declare_predicate(rel, ("User", "User"), role=role(rel),
                             irreflexive=True)
    for pred in ("Like", "Dislike", "MentionPos", "MentionNeg"):
        kb.declare_predicate(pred, ("User", "Entity"), role=role(pred),
                             category_scoped=True)

    for rel in SYMMETRIC_RELATIONS:
        kb.add_rule(f"HARD: {rel}(a,b) => {rel}(b,a)")
    kb.add_rule("HARD: Male(u) => !Female(u)")
    return kb


def instantiate_templates(kb: KnowledgeBase, categories=None, *,
                          include_attribute_rules: bool = True,
                          initial_weight: float = 0.0) -> list[Rule]:
    """Homophily and relational rule templates with to-be-learned weights.

    Per category: friend and spouse homophily over the projected LikeCat
    predicate, a hard Like->LikeCat projection, and (optionally) a
    work-in-category attribute rule.  Declares the LikeCat predicates on the
    knowledge base; returned rules are not appended to it.
    """
    if categories is None:
        categories = CategorySet()
    like_role = kb.schema("Like").role
    rules: list[Rule] = []
    for label in categories:
        pred = likecat_predicate(label)
        if pred not in kb.schemas:
            kb.declare_predicate(pred, ("User",), role=like_role,
                                 category_scoped=True, category=label)
    for label in categories:
        pred = likecat_predicate(label)
        rules.append(kb_parse(kb, f"{initial_weight!r}: Friend(a,b) & {pred}(a) => {pred}(b)"))
        rules.append(kb_parse(kb, f"{initial_weight!r}: Spouse(a,b) & {pred}(a) => {pred}(b)"))
    rules.append(kb_parse(kb, f"{initial_weight!r}: Friend(a,b) & Friend(b,c) => Friend(a,c)"))
    rules.append(kb_parse(kb, f"{initial_weight!r}: Spouse(a,b) & Friend(b,c) => Friend(a,c)"))
    rules.append(kb_parse(kb, f"{initial_weight!r}: Friend(a,b) => LiveInSamePlace(a,b)"))
    rules.append(kb_parse(kb, f"{initial_weight!r}: Spouse(a,b) => LiveInSamePlace(a,b)"))
    rules.append(kb_parse(kb, f"{initial_weight!r}: Spouse(a,b) => Friend(a,b)"))
    for label in categories:
        pred = likecat_predicate(label)
        rules.append(kb_parse(kb, f"HARD: Like(u,e) => {pred}(u)"))
    if include_attribute_rules:
        for label in categories:
            pred = likecat_predicate(label)
            rules.append(kb_parse(kb, f"{initial_weight!r}: WorkIn(u,e) => {pred}(u)"))
    return rules


def kb_parse(kb: KnowledgeBase, text: str) -> Rule:
    return parse_rule(text, kb)


@dataclass
class SocialGraph:
    """Users, labeled entities, follow edges, and observed evidence atoms."""

    users: list[str] = field(default_factory=list)
    entities: dict[str, str] = field(default_factory=dict)  # entity -> category
    follow_edges: list[tuple[str, str, int]] = field(default_factory=list)
    evidence: dict[GroundAtom, float] = field(default_factory=dict)

    def __post_init__(self):
        users = set(self.users)
        for follower, followee, _ in self.follow_edges:
            if follower not in users or followee not in users:
                raise LogicError(
                    f"follow edge {follower}->{followee} references unknown user")

    @classmethod
    def from_files(cls, evidence_path=None, category_path=None,
                   follow_path=None, kb: KnowledgeBase | None = None):
        entities = fileio.load_categories(category_path) if category_path else {}
        edges = fileio.load_follow_edges(follow_path) if follow_path else []
        users = sorted({u for e in edges for u in e[:2]})
        evidence = {}
        if evidence_path:
            evidence = fileio.load_evidence(evidence_path, kb=None)
            seen_users = set(users)
            for atom in evidence:
                if atom.pred in ("Friend", "Spouse", "LiveInSamePlace",
                                 "Male", "Female", "LiveIn", "WorkIn",
                                 "StudyAt", "Like", "Dislike", "MentionPos",
                                 "MentionNeg"):
                    seen_users.add(atom.args[0])
                    if atom.pred in SYMMETRIC_RELATIONS:
                        seen_users.add(atom.args[1])
            users = sorted(seen_users)
        return cls(users, entities, edges, evidence)

    def populate_kb(self, kb: KnowledgeBase):
        """Register the graph's constants and category labels on a KB."""
        kb.add_constants(self.users, "User")
        for entity, label in sorted(self.entities.items()):
            kb.add_constant(entity, kb.entity_sort)
            kb.set_category(entity, label)
        for atom in self.evidence:
            schema = kb.schemas.get(atom.pred)
            if schema is None:
                raise LogicError(f"evidence predicate {atom.pred!r} not in schema")
            for sym, sort in zip(atom.args, schema.arg_types):
                kb.add_constant(sym, sort)
        return kb

    def friends_of(self, user: str) -> list[str]:
        out = set()
        for atom, v in self.evidence.items():
            if atom.pred == "Friend" and v >= 0.5:
                a, b = atom.args
                if a == user:
                    out.add(b)
                elif b == user:
                    out.add(a)
        return sorted(out)

    def spouse_of(self, user: str):
        best, conf = None, 0.0
        for atom, v in self.evidence.items():
            if atom.pred == "Spouse" and v > conf:
                a, b = atom.args
                if a == user:
                    best, conf = b, v
                elif b == user:
                    best, conf = a, v
        return best, conf

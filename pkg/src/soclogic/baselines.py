"""Comparison predictors over social-graph features.

Features combine individual evidence (owned attributes and preferences,
confidence weighted) with network evidence: for each attribute value, the
proportion of friends holding it among friends with any value for that
attribute, plus the spouse's attributes when a spouse is known.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from .logic import LogicError
from .schema import SocialGraph

# attribute families used for network-proportion features: predicate ->
# (feature family, which argument carries the value)
_VALUE_ATTRS = {
    "LiveIn": ("livein", 1),
    "Like": ("like", 1),
    "Dislike": ("dislike", 1),
    "WorkIn": ("workin", 1),
    "StudyAt": ("studyat", 1),
    "Male": ("gender", None),
    "Female": ("gender", None),
}


@dataclass
class FeatureVector:
    """Sparse named features in [0,1]; absent keys are masked, not zero."""

    values: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        for k, v in self.values.items():
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"feature {k!r} out of [0,1]: {v}")

    def get(self, key, default=0.0):
        return self.values.get(key, default)


def _user_attributes(graph: SocialGraph):
    by_user: dict[str, list] = defaultdict(list)
    for atom, conf in graph.evidence.items():
        fam = _VALUE_ATTRS.get(atom.pred)
        if fam is None or conf <= 0.0:
            continue
        family, value_pos = fam
        value = atom.pred if value_pos is None else atom.args[value_pos]
        by_user[atom.args[0]].append((family, value, conf))
    return by_user


def featurize(user: str, graph: SocialGraph) -> FeatureVector:
    """Individual, friend-proportion, and spouse features for one user."""
    if user not in set(graph.users):
        raise LogicError(f"unknown user {user!r}")
    attrs = _user_attributes(graph)
    feats: dict[str, float] = {}
    for family, value, conf in attrs.get(user, ()):
        feats[f"{family}:{value}"] = max(feats.get(f"{family}:{value}", 0.0), conf)

    friends = graph.friends_of(user)
    numer: dict[tuple, float] = defaultdict(float)
    denom: dict[str, float] = defaultdict(float)
    for f in friends:
        families_seen = set()
        for family, value, conf in attrs.get(f, ()):
            numer[(family, value)] += conf
            families_seen.add(family)
        for family in families_seen:
            denom[family] += 1.0
    for (family, value), num in numer.items():
        feats[f"friends:{family}:{value}"] = min(1.0, num / denom[family])

    spouse, conf = graph.spouse_of(user)
    if spouse is not None:
        feats["spouse"] = conf
        for family, value, sconf in attrs.get(spouse, ()):
            key = f"spouse:{family}:{value}"
            feats[key] = max(feats.get(key, 0.0), conf * sconf)
    return FeatureVector(feats)


# ---------------------------------------------------------------------------
# Naive Bayes
# ---------------------------------------------------------------------------

@dataclass
class NbModel:
    classes: list
    priors: dict
    feature_probs: dict   # feature -> {class: P(feature present | class)}
    features: list[str]


def nb_train(examples) -> NbModel:
    """Bernoulli Naive Bayes with add-one smoothing on (vector, label) pairs."""
    if not examples:
        raise LogicError("no training examples")
    by_class: dict = defaultdict(list)
    features: set[str] = set()
    for vec, label in examples:
        by_class[label].append(vec)
        features.update(vec.values)
    classes = sorted(by_class)
    for label in classes:
        if not by_class[label]:
            raise LogicError(f"class {label!r} has no examples")
    total = sum(len(v) for v in by_class.values())
    priors = {c: len(by_class[c]) / total for c in classes}
    feature_probs = {}
    for feat in sorted(features):
        feature_probs[feat] = {
            c: (sum(v.get(feat) for v in by_class[c]) + 1.0)
               / (len(by_class[c]) + 2.0)
            for c in classes}
    return NbModel(classes, priors, feature_probs, sorted(features))


def nb_predict(model: NbModel, vec: FeatureVector) -> dict:
    """Normalized posterior over classes; unseen features are ignored."""
    log_post = {}
    for c in model.classes:
        lp = math.log(model.priors[c])
        for feat in model.features:
            p = model.feature_probs[feat][c]
            v = min(1.0, max(0.0, vec.get(feat)))
            lp += v * math.log(p) + (1.0 - v) * math.log(1.0 - p)
        log_post[c] = lp
    m = max(log_post.values())
    exp = {c: math.exp(lp - m) for c, lp in log_post.items()}
    z = sum(exp.values())
    return {c: e / z for c, e in exp.items()}


# ---------------------------------------------------------------------------
# Item-based collaborative filtering
# ---------------------------------------------------------------------------

CROSS_CATEGORY_SIM = 0.2


def _cosine(a: dict, b: dict) -> float:
    shared = set(a) & set(b)
    if not shared:
        return 0.0
    dot = sum(a[k] * b[k] for k in shared)
    na = math.sqrt(sum(v * v for v in a.values()))
    nb = math.sqrt(sum(v * v for v in b.values()))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return dot / (na * nb)


def _ratings(graph: SocialGraph) -> dict[str, dict[str, float]]:
    """user -> entity -> rating in [0,1] (like=1, dislike=0, confidence blended)."""
    out: dict[str, dict[str, float]] = defaultdict(dict)
    for atom, conf in graph.evidence.items():
        if atom.pred == "Like" and conf > 0.0:
            out[atom.args[0]][atom.args[1]] = max(
                out[atom.args[0]].get(atom.args[1], 0.0), conf)
        elif atom.pred == "Dislike" and conf > 0.0:
            out[atom.args[0]].setdefault(atom.args[1], 0.0)
    return out


def entity_similarity(graph: SocialGraph, e1: str, e2: str) -> float:
    if e1 == e2:
        return 1.0
    c1, c2 = graph.entities.get(e1), graph.entities.get(e2)
    return 1.0 if c1 is not None and c1 == c2 else CROSS_CATEGORY_SIM


def cf_predict(user: str, entity: str, graph: SocialGraph, k: int = 20,
               p_entity: float | None = None) -> float:
    """Weighted nearest-neighbor score for (user, entity) in [0,1].

    Neighbors are ranked by cosine similarity of feature vectors; each
    neighbor votes with its rating of the entity, falling back to its
    category-similarity-weighted average rating.  With no usable neighbors
    the entity prior is returned.
    """
    ratings = _ratings(graph)
    target_vec = featurize(user, graph).values
    scored = []
    for other in graph.users:
        if other == user or not ratings.get(other):
            continue
        sim = _cosine(target_vec, featurize(other, graph).values)
        if sim > 0.0:
            scored.append((sim, other))
    scored.sort(key=lambda t: (-t[0], t[1]))
    top = scored[:k]
    num = den = 0.0
    for sim, other in top:
        vote = _neighbor_vote(ratings[other], entity, graph)
        if vote is None:
            continue
        num += sim * vote
        den += sim
    if den == 0.0:
        if p_entity is not None:
            return p_entity
        return prior_baselines(graph).p_entity(entity)
    return num / den


def _neighbor_vote(rated: dict[str, float], entity: str,
                   graph: SocialGraph) -> float | None:
    if entity in rated:
        return rated[entity]
    num = den = 0.0
    for other_entity, rating in rated.items():
        sim = entity_similarity(graph, entity, other_entity)
        num += sim * rating
        den += sim
    return num / den if den > 0.0 else None


# ---------------------------------------------------------------------------
# Prior baselines
# ---------------------------------------------------------------------------

#: 2020 census resident population (thousands); drives the Random and
#: Unified location baselines.
DEFAULT_US_POPULATION = {
    "CA": 39538, "TX": 29146, "FL": 21538, "NY": 20201, "PA": 13003,
    "IL": 12813, "OH": 11799, "GA": 10712, "NC": 10439, "MI": 10077,
    "NJ": 9289, "VA": 8631, "WA": 7705, "AZ": 7152, "MA": 7030,
    "TN": 6911, "IN": 6786, "MO": 6155, "MD": 6177, "WI": 5894,
    "CO": 5774, "MN": 5706, "SC": 5118, "AL": 5024, "LA": 4658,
    "KY": 4506, "OR": 4237, "OK": 3959, "CT": 3606, "UT": 3272,
    "IA": 3190, "NV": 3105, "AR": 3012, "MS": 2961, "KS": 2938,
    "NM": 2118, "NE": 1962, "ID": 1839, "WV": 1794, "HI": 1455,
    "NH": 1378, "ME": 1362, "MT": 1084, "RI": 1097, "DE": 990,
    "SD": 887, "ND": 779, "AK": 733, "VT": 643, "WY": 577,
}


@dataclass
class PriorBaselines:
    """Entity popularity prior plus population-based location assigners."""

    graph: SocialGraph
    population: dict[str, float] = field(default_factory=lambda: dict(DEFAULT_US_POPULATION))

    def p_entity(self, entity: str) -> float:
        """Fraction of users with a positive like of the entity (0/0 -> 0)."""
        if not self.graph.users:
            return 0.0
        likers = {atom.args[0] for atom, v in self.graph.evidence.items()
                  if atom.pred == "Like" and atom.args[1] == entity and v >= 0.5}
        return len(likers) / len(self.graph.users)

    def unified_location(self) -> str:
        return max(sorted(self.population), key=lambda s: self.population[s])

    def random_location(self, rng: np.random.Generator) -> str:
        states = sorted(self.population)
        weights = np.array([self.population[s] for s in states], dtype=float)
        weights /= weights.sum()
        return states[int(rng.choice(len(states), p=weights))]


def prior_baselines(graph: SocialGraph,
                    population: dict[str, float] | None = None) -> PriorBaselines:
    if population is None:
        return PriorBaselines(graph)
    return PriorBaselines(graph, dict(population))

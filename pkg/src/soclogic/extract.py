"""Rule-based evidence extractors: location, gender, spouse, celebrity likes.

All extractors are pure and order-independent over their inputs; each
implements a high-precision threshold rule, returning None when the rule
does not fire.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass

US_STATES = frozenset((
    "AL", "AK", "AZ", "AR", "CA", "CO", "CT", "DE", "FL", "GA",
    "HI", "ID", "IL", "IN", "IA", "KS", "KY", "LA", "ME", "MD",
    "MA", "MI", "MN", "MS", "MO", "MT", "NE", "NV", "NH", "NJ",
    "NM", "NY", "NC", "ND", "OH", "OK", "OR", "PA", "RI", "SC",
    "SD", "TN", "TX", "UT", "VT", "VA", "WA", "WV", "WI", "WY",
))

MIN_TWEETS_PER_STATE = 10       # strictly more required
MIN_DISTINCT_MONTHS = 3
GENDER_RATIO = 20
SPOUSE_THRESHOLD = 0.5
CELEBRITY_FOLLOWERS = 100_000   # strictly more required


@dataclass(frozen=True)
class GeoEvent:
    """One geo-tagged post: user, US state code, and (year, month) key."""

    user: str
    state: str
    month_key: tuple[int, int]

    def __post_init__(self):
        if self.state not in US_STATES:
            raise ValueError(f"invalid state code {self.state!r}")


@dataclass
class NameGenderTable:
    """First-name counts by recorded gender: name -> (male, female)."""

    counts: dict[str, tuple[int, int]]

    def __post_init__(self):
        norm = {}
        for name, (m, f) in self.counts.items():
            if m < 0 or f < 0:
                raise ValueError(f"negative count for name {name!r}")
            norm[name.lower()] = (m, f)
        self.counts = norm

    def lookup(self, first_name: str):
        return self.counts.get(first_name.lower())


def infer_location(events) -> str | None:
    """State with >10 posts spread over >=3 distinct months; count ties lose.

    ``events`` may be GeoEvent objects or (user, state, (year, month))
    tuples for a single user.
    """
    counts: dict[str, int] = defaultdict(int)
    months: dict[str, set] = defaultdict(set)
    for ev in events:
        if isinstance(ev, GeoEvent):
            state, key = ev.state, ev.month_key
        else:
            _, state, key = ev
        counts[state] += 1
        months[state].add(tuple(key))
    qualified = [s for s in counts
                 if counts[s] > MIN_TWEETS_PER_STATE
                 and len(months[s]) >= MIN_DISTINCT_MONTHS]
    if not qualified:
        return None
    best = max(counts[s] for s in qualified)
    winners = [s for s in qualified if counts[s] == best]
    return winners[0] if len(winners) == 1 else None


def infer_gender(first_name: str, table: NameGenderTable) -> str | None:
    """'Male'/'Female' when one gender's count is >=20x the other's."""
    row = table.lookup(first_name)
    if row is None:
        return None
    male, female = row
    female_wins = female > 0 and female >= GENDER_RATIO * male
    male_wins = male > 0 and male >= GENDER_RATIO * female
    if female_wins == male_wins:
        return None
    return "Female" if female_wins else "Male"


def spouse_confidence(score: float) -> float | None:
    """Linear projection of scores above the 0.5 spouse threshold onto [0,1]."""
    if not 0.0 <= score <= 1.0:
        raise ValueError(f"spouse score out of [0,1]: {score}")
    if score <= SPOUSE_THRESHOLD:
        return None
    return (score - SPOUSE_THRESHOLD) / (1.0 - SPOUSE_THRESHOLD)


def derive_network_atoms(follow_edges):
    """(friend pairs, celebrity like pairs) from directed follow edges.

    Friendship requires a bidirectional follow.  A one-way follow of an
    account with more than 100k followers yields a like of that account.
    Edges are (follower, followee, followee_follower_count) triples.
    """
    follows = set()
    followers_of: dict[str, int] = {}
    for follower, followee, count in follow_edges:
        follows.add((follower, followee))
        followers_of[followee] = max(followers_of.get(followee, 0), int(count))
    friends = set()
    likes = set()
    for follower, followee in follows:
        if (followee, follower) in follows:
            friends.add(tuple(sorted((follower, followee))))
        elif followers_of.get(followee, 0) > CELEBRITY_FOLLOWERS:
            likes.add((follower, followee))
    return sorted(friends), sorted(likes)

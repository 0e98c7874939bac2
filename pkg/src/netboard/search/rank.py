"""Scoring and ordering of search candidates.

A result's total is an additive blend of three components:

    total = w_text * text + w_loc * location + w_fresh * freshness

text       sum over (expanded) query terms of weight * (1 + ln tf_w) * idf,
           with tf_w the field-weighted term frequency and
           idf = ln((N + 1) / (df + 1)) + 1 over the active-listing corpus;
           no document-length normalization
location   exp(-distance/decay), 0 when either location is unknown
freshness  exp(-age_days/30)

Ties order newer listings first, then ascending listing id. Scaling all three
weights by the same positive factor rescales totals but never reorders.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import datetime

from .geo import DEFAULT_DECAY_KM, Coords, location_boost
from .index import SearchIndex

FRESHNESS_SCALE_DAYS = 30.0


@dataclass(frozen=True)
class RankWeights:
    text: float = 1.0
    location: float = 0.3
    freshness: float = 0.2


@dataclass(frozen=True)
class TermScore:
    term: str
    weight: float
    score: float
    expanded: bool

    def to_json(self) -> dict:
        return {
            "term": self.term,
            "weight": self.weight,
            "score": self.score,
            "expanded": self.expanded,
        }


@dataclass(frozen=True)
class RankedResult:
    listing_id: str
    score_total: float
    score_text: float
    score_location: float
    score_freshness: float
    matched_terms: tuple[TermScore, ...] = field(default_factory=tuple)

    def to_json(self) -> dict:
        return {
            "listing_id": self.listing_id,
            "score_total": self.score_total,
            "score_text": self.score_text,
            "score_location": self.score_location,
            "score_freshness": self.score_freshness,
            "matched_terms": [t.to_json() for t in self.matched_terms],
        }


def term_score(weight: float, weighted_tf: float, doc_freq: int, doc_count: int) -> float:
    """Per-term contribution: weight * tf component * smoothed idf."""
    if weighted_tf <= 0:
        return 0.0
    tf_component = 1.0 + math.log(weighted_tf)
    idf = math.log((doc_count + 1) / (doc_freq + 1)) + 1.0
    return weight * tf_component * idf


def freshness(created_at: datetime, now: datetime) -> float:
    age_days = max((now - created_at).total_seconds(), 0.0) / 86400.0
    return math.exp(-age_days / FRESHNESS_SCALE_DAYS)


def rank(
    candidates: list,
    index: SearchIndex,
    expanded_terms: list[tuple[str, float]],
    origin: Coords | None,
    now: datetime,
    created_at_of,
    location_of,
    weights: RankWeights = RankWeights(),
    decay_km: float = DEFAULT_DECAY_KM,
) -> list[RankedResult]:
    """Score and order candidate listing ids.

    ``candidates`` is a list of listing ids that already passed visibility and
    filter checks; ``created_at_of``/``location_of`` map an id to its creation
    datetime and optional coordinates. Index statistics (df, doc count) come
    from the full active corpus, not the candidate subset.
    """
    n_docs = index.doc_count
    original = {t for t, w in expanded_terms if w >= 1.0}
    results = []
    for listing_id in candidates:
        matched: list[TermScore] = []
        text_total = 0.0
        for term, weight in expanded_terms:
            s = term_score(
                weight, index.weighted_tf(term, listing_id), index.df(term), n_docs
            )
            text_total += s
            if s != 0.0:
                matched.append(TermScore(term, weight, s, term not in original))
        loc = location_boost(origin, location_of(listing_id), decay_km)
        fresh = freshness(created_at_of(listing_id), now)
        total = (
            weights.text * text_total
            + weights.location * loc
            + weights.freshness * fresh
        )
        results.append(
            RankedResult(listing_id, total, text_total, loc, fresh, tuple(matched))
        )
    results.sort(
        key=lambda r: (
            -r.score_total,
            _reverse_datetime_key(created_at_of(r.listing_id)),
            r.listing_id,
        )
    )
    return results


def _reverse_datetime_key(dt: datetime) -> float:
    return -dt.timestamp()


def paginate(items: list, page: int, page_size: int) -> list:
    start = page * page_size
    return items[start : start + page_size]

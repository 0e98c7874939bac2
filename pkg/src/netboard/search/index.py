"""In-memory inverted index over active listings.

Term frequencies are field-weighted before they enter the postings: a title
occurrence counts 3, a tag 2, description and other text values 1. Document
frequency and document count always reflect exactly the set of listings
currently in the index (active ones); removing a listing removes every trace
of it.

Readers see consistent snapshots: the service serializes writes, and a query
iterates statistics that are never mutated mid-read.
"""

from __future__ import annotations

from collections import Counter, defaultdict
from collections.abc import Iterable

from .text import STOPWORDS, tokenize

TITLE_WEIGHT = 3.0
TAG_WEIGHT = 2.0
BODY_WEIGHT = 1.0


def weighted_terms(
    title: str,
    tags: Iterable[str],
    description: str,
    text_values: Iterable[str],
    stopwords: frozenset[str] = STOPWORDS,
) -> dict[str, float]:
    """Field-weighted term frequencies for one listing."""
    weights: dict[str, float] = defaultdict(float)
    for term, count in Counter(tokenize(title, stopwords)).items():
        weights[term] += TITLE_WEIGHT * count
    tag_tokens: list[str] = []
    for tag in tags:
        tag_tokens.extend(tokenize(tag, stopwords))
    for term, count in Counter(tag_tokens).items():
        weights[term] += TAG_WEIGHT * count
    body_tokens = tokenize(description, stopwords)
    for value in text_values:
        body_tokens.extend(tokenize(value, stopwords))
    for term, count in Counter(body_tokens).items():
        weights[term] += BODY_WEIGHT * count
    return dict(weights)


class SearchIndex:
    def __init__(self, stopwords: frozenset[str] = STOPWORDS):
        self.stopwords = stopwords
        self._postings: dict[str, dict[str, float]] = {}
        self._docs: dict[str, dict[str, float]] = {}

    def upsert(
        self,
        listing_id: str,
        title: str,
        tags: Iterable[str],
        description: str,
        text_values: Iterable[str],
    ) -> None:
        self.remove(listing_id)
        terms = weighted_terms(title, tags, description, text_values, self.stopwords)
        self._docs[listing_id] = terms
        for term, weight in terms.items():
            self._postings.setdefault(term, {})[listing_id] = weight

    def remove(self, listing_id: str) -> None:
        terms = self._docs.pop(listing_id, None)
        if not terms:
            return
        for term in terms:
            posting = self._postings.get(term)
            if posting is not None:
                posting.pop(listing_id, None)
                if not posting:
                    del self._postings[term]

    def clear(self) -> None:
        self._postings.clear()
        self._docs.clear()

    @property
    def doc_count(self) -> int:
        return len(self._docs)

    def __contains__(self, listing_id: str) -> bool:
        return listing_id in self._docs

    def df(self, term: str) -> int:
        return len(self._postings.get(term, ()))

    def weighted_tf(self, term: str, listing_id: str) -> float:
        return self._postings.get(term, {}).get(listing_id, 0.0)

    def terms_of(self, listing_id: str) -> dict[str, float]:
        return dict(self._docs.get(listing_id, {}))

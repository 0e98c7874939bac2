"""Query expansion against a static synonym table.

Expansion is deliberately simple: a single hop into the table, with expanded
terms weighted at half an original term. Original terms always win on weight
when a synonym duplicates one of them.
"""

from __future__ import annotations

from pathlib import Path

ORIGINAL_WEIGHT = 1.0
SYNONYM_WEIGHT = 0.5


class SynonymTable:
    """term -> synonyms, order-preserving."""

    def __init__(self, entries: dict[str, list[str]] | None = None):
        self._entries: dict[str, list[str]] = {}
        for term, synonyms in (entries or {}).items():
            self._entries[term.lower()] = [s.lower() for s in synonyms]

    @classmethod
    def from_file(cls, path: str | Path) -> "SynonymTable":
        """Parse lines of ``term: syn1, syn2, ...``; '#' starts a comment."""
        entries: dict[str, list[str]] = {}
        for raw in Path(path).read_text().splitlines():
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if ":" not in line:
                raise ValueError(f"bad synonym line: {raw!r}")
            term, _, rest = line.partition(":")
            synonyms = [s.strip().lower() for s in rest.split(",") if s.strip()]
            entries[term.strip().lower()] = synonyms
        return cls(entries)

    def synonyms_of(self, term: str) -> list[str]:
        return list(self._entries.get(term.lower(), ()))

    def __len__(self) -> int:
        return len(self._entries)


def expand_query(
    terms: list[str], table: SynonymTable | None = None
) -> list[tuple[str, float]]:
    """Weighted term list: originals at 1.0 first, then unseen synonyms at 0.5.

    Single hop only: synonyms of synonyms are never followed. Duplicate
    originals collapse to one entry.
    """
    expanded: list[tuple[str, float]] = []
    seen: set[str] = set()
    for term in terms:
        if term not in seen:
            seen.add(term)
            expanded.append((term, ORIGINAL_WEIGHT))
    if table is None:
        return expanded
    for term, _weight in list(expanded):
        for synonym in table.synonyms_of(term):
            if synonym not in seen:
                seen.add(synonym)
                expanded.append((synonym, SYNONYM_WEIGHT))
    return expanded

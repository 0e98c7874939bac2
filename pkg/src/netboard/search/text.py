"""Text normalization for indexing and querying."""

from __future__ import annotations

# Fixed 30-word stopword list; short function words that carry no signal in
# listing titles or descriptions. No stemming is applied anywhere.
STOPWORDS = frozenset(
    """
    a an and are as at be but by for from has have he in is it its not of on
    that the they this to was were will with
    """.split()
)

MIN_TOKEN_LENGTH = 2


def tokenize(text: str, stopwords: frozenset[str] = STOPWORDS) -> list[str]:
    """Lowercase, split on non-alphanumerics, drop short tokens and stopwords."""
    tokens: list[str] = []
    current: list[str] = []
    for ch in text.lower():
        if ch.isalnum():
            current.append(ch)
        elif current:
            tokens.append("".join(current))
            current = []
    if current:
        tokens.append("".join(current))
    return [t for t in tokens if len(t) >= MIN_TOKEN_LENGTH and t not in stopwords]

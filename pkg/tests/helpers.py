"""Shared test helpers: deterministic generators and independent oracles.

Oracles here are written from the documented rules directly, independent of
the implementation modules they check.
"""

from __future__ import annotations

import math
import random
import string

from netboard.schema import (
    DATA_TYPES,
    FILTERABLE_DATA_TYPES,
    INPUT_TYPES,
    CategorySchema,
    FieldSpec,
)

# The category template example used throughout the suite (same shape the
# bundled demo-schemas/event.xml uses).
EVENT_XML = """<schema id="O198" category="event" creator="admin">
\t<field input-type="textbox"  data-type="text"
\tvisibility-in-search-filter="true">Title</field>
\t<field data-type="date-time">Date and Time</field>
\t<field>...</field>
</schema>
"""

COVER_CHARGE_REQUEST_XML = (
    '<requestField category="event" data-type="currency" '
    'creator="user001">Cover Charge</requestField>'
)

_WORDS = (
    "price condition brand size color year mileage author pages isbn "
    "bedrooms rent deposit salary hours venue date start end contact "
    "warranty model storage screen material width height weight edition"
).split()


def random_schema(rng: random.Random) -> CategorySchema:
    """Generate a random valid CategorySchema (deterministic given rng)."""
    n_fields = rng.randint(1, 8)
    labels = rng.sample(_WORDS, n_fields)
    fields = []
    for label in labels:
        data_type = rng.choice(DATA_TYPES)
        visible = data_type in FILTERABLE_DATA_TYPES and rng.random() < 0.4
        fields.append(
            FieldSpec(
                label=label.capitalize(),
                input_type=rng.choice(INPUT_TYPES),
                data_type=data_type,
                visible_in_search_filter=visible,
            )
        )
    return CategorySchema(
        schema_id="O" + str(rng.randint(1, 9999)),
        category="".join(rng.choices(string.ascii_lowercase, k=rng.randint(3, 10))),
        creator="user" + str(rng.randint(1, 99)),
        version=rng.randint(1, 5),
        fields=tuple(fields),
    )


def currency_ok_oracle(value: str) -> bool:
    """Independent check of the currency grammar: optional 3-letter uppercase
    code + space, then digits with at most 2 fraction digits. Character-walk
    implementation, no regex."""
    text = value.strip()
    if len(text) >= 4 and text[3] == " " and text[:3].isalpha() and text[:3].isupper():
        text = text[4:]
    if not text:
        return False
    whole, dot, frac = text.partition(".")
    if not whole or not whole.isdigit():
        return False
    if dot and (not frac or not frac.isdigit() or len(frac) > 2):
        return False
    return True


def reference_tokenize(text: str, stopwords: frozenset[str]) -> list[str]:
    """Independent tokenizer: lowercase, map non-alphanumerics to spaces,
    split, drop short tokens and stopwords."""
    lowered = text.lower()
    translated = "".join(ch if ch.isalnum() else " " for ch in lowered)
    return [t for t in translated.split() if len(t) >= 2 and t not in stopwords]


def haversine_km_oracle(lat1: float, lon1: float, lat2: float, lon2: float) -> float:
    """Independent great-circle distance (law-of-haversines written out with
    asin instead of atan2)."""
    rad = math.pi / 180.0
    p1, p2 = lat1 * rad, lat2 * rad
    dp = (lat2 - lat1) * rad
    dl = (lon2 - lon1) * rad
    a = math.sin(dp / 2.0) ** 2 + math.cos(p1) * math.cos(p2) * math.sin(dl / 2.0) ** 2
    return 2.0 * 6371.0 * math.asin(min(1.0, math.sqrt(a)))

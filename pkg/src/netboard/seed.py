"""Deterministic demo corpus.

Seeding the same store with the same seed value twice produces byte-identical
content: users and listings are created under a fixed stepping clock, ids come
from store-backed counters, and all randomness flows from one seeded RNG.
Useful both for demos and as the fixture corpus of the acceptance suite.
"""

from __future__ import annotations

import random
from datetime import datetime, timedelta, timezone

from .identity import User, hash_password
from .service import ClassifiedsService

SEED_BASE_TIME = datetime(2026, 1, 15, 12, 0, 0, tzinfo=timezone.utc)
SEED_PASSWORD = "seedpass123"
SEED_USER_COUNT = 6

_TITLE_WORDS = (
    "bike trek road mountain sofa couch leather desk lamp oak bookshelf "
    "laptop thinkpad monitor tv television stand futon dresser kayak tent "
    "guitar amp textbook calculus novel chair ergonomic table dining rug wool"
).split()

_DESCRIPTION_WORDS = (
    "gently used great condition barely scratched works perfectly moving out "
    "must go pickup only cash preferred original box includes charger pet free "
    "smoke free sturdy frame recently cleaned one owner campus pickup evenings"
).split()

_TAG_WORDS = "bike sofa lamp desk dorm moving vintage cheap tv book".split()

# roughly the Baltimore/DC corridor
_GEO_CENTER = (39.2904, -76.6122)


class _SteppingClock:
    def __init__(self, start: datetime):
        self.current = start

    def __call__(self) -> datetime:
        return self.current

    def step(self, seconds: int) -> None:
        self.current += timedelta(seconds=seconds)


def _seed_users(service: ClassifiedsService, clock: _SteppingClock, rng: random.Random) -> list[User]:
    networks = sorted(service.networks.all(), key=lambda n: n.network_id)
    # deterministic salt: same seed value, byte-identical store
    digest = hash_password(
        SEED_PASSWORD, service.pbkdf2_iterations, salt=f"{rng.getrandbits(128):032x}"
    )
    users = []
    for i in range(SEED_USER_COUNT):
        network = networks[i % len(networks)]
        domain = sorted(network.domain_suffixes)[0]
        username = f"seed_user_{i:02d}"
        existing = service.store.user_by_username(username)
        if existing is not None:
            users.append(existing)
            continue
        with service.store.transaction():
            user = User(
                user_id=service.store.next_id("user", "U"),
                username=username,
                email=f"{username.replace('_', '')}@{domain}",
                network_id=network.network_id,
                password_digest=digest,
                home_location=(
                    _GEO_CENTER[0] + rng.uniform(-0.3, 0.3),
                    _GEO_CENTER[1] + rng.uniform(-0.3, 0.3),
                ),
                active=True,
                created_at=clock().isoformat(),
            )
            service.store.insert_user(user)
        users.append(user)
        clock.step(61)
    return users


def _value_for(data_type: str, rng: random.Random, i: int) -> str:
    if data_type == "currency":
        return f"USD {rng.randint(5, 900)}.{rng.choice(['00', '25', '50'])}"
    if data_type == "number":
        return str(rng.randint(1, 2500))
    if data_type == "date-time":
        day = 1 + rng.randint(0, 27)
        return f"2026-{rng.randint(1, 12):02d}-{day:02d}T{rng.randint(8, 21):02d}:00:00Z"
    if data_type == "location":
        lat = _GEO_CENTER[0] + rng.uniform(-0.5, 0.5)
        lon = _GEO_CENTER[1] + rng.uniform(-0.5, 0.5)
        return f"{lat:.4f}, {lon:.4f}"
    if data_type == "url":
        return f"https://example.org/item/{i}"
    return " ".join(rng.choices(_DESCRIPTION_WORDS, k=rng.randint(2, 5)))


def seed_demo(service: ClassifiedsService, count: int, seed: int = 7) -> dict:
    """Create the demo users plus ``count`` listings; returns a summary."""
    rng = random.Random(seed)
    clock = _SteppingClock(SEED_BASE_TIME)
    original_clock, original_flush = service.clock, service.auto_flush
    service.clock, service.auto_flush = clock, False
    try:
        users = _seed_users(service, clock, rng)
        categories = [s.category for s in service.approved_schemas()]
        if not categories:
            raise ValueError("no approved schemas; load a schema directory first")
        created = []
        for i in range(count):
            owner = users[rng.randrange(len(users))]
            schema = service.schema_for(categories[rng.randrange(len(categories))])
            values = {"Title": " ".join(rng.sample(_TITLE_WORDS, rng.randint(2, 4))).capitalize()}
            for spec in schema.fields:
                if spec.label == "Title":
                    continue
                if rng.random() < 0.7:
                    values[spec.label] = _value_for(spec.data_type, rng, i)
            location = None
            if rng.random() < 0.7:
                location = (
                    round(_GEO_CENTER[0] + rng.uniform(-1.2, 1.2), 5),
                    round(_GEO_CENTER[1] + rng.uniform(-1.2, 1.2), 5),
                )
            listing = service.create_listing(
                owner,
                schema.category,
                values,
                visibility="public" if rng.random() < 0.75 else "network",
                location=location,
                subcategory=rng.choice(("", "general", "campus", "downtown")),
                tags=rng.sample(_TAG_WORDS, rng.randint(0, 3)),
                description=" ".join(rng.choices(_DESCRIPTION_WORDS, k=rng.randint(6, 18))),
            )
            created.append(listing.listing_id)
            clock.step(9137)
        return {
            "users": len(users),
            "listings": len(created),
            "categories": categories,
        }
    finally:
        service.clock, service.auto_flush = original_clock, original_flush

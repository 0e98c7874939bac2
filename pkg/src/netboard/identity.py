"""Accounts, networks, and the redaction rules applied to every listing view.

A network is a community keyed by verified email domains (a campus, a company).
Membership is derived from the registered address by longest-suffix match, so
department subdomains land in their parent institution's network. What a viewer
sees of a listing depends only on who they are relative to the owner:

    viewer                      network visibility    public visibility
    ---------------------------------------------------------------------
    owner                       full                  full
    signed-in, same network     member                member
    signed-in, other network    denied                member
    anonymous                   anonymous             anonymous

Levels:
    full       every field, including view_count and status
    member     listing content and owner username; never the owner's email
               or home location, never view_count
    anonymous  title, category, and price-like filterable values only; no
               description, no username, no location, no tags
"""

from __future__ import annotations

import hashlib
import hmac
import re
import secrets
from dataclasses import dataclass, field
from pathlib import Path

from .errors import Denied, InvalidEmail, InvalidUsername, UnknownDomain, WeakPassword
from .schema import CategorySchema

USERNAME_RE = re.compile(r"^[a-z0-9_]{3,32}$")
_EMAIL_RE = re.compile(r"^[^@\s]+@[^@\s]+\.[^@\s]+$")

MIN_PASSWORD_LENGTH = 8

LEVEL_FULL = "full"
LEVEL_MEMBER = "member"
LEVEL_ANONYMOUS = "anonymous"

# value data types exposed at the anonymous level when filterable
_PRICE_LIKE = ("currency", "number")


@dataclass(frozen=True)
class Network:
    network_id: str
    display_name: str
    domain_suffixes: frozenset[str]


@dataclass(frozen=True)
class Preferences:
    categories: frozenset[str] = frozenset()
    networks: frozenset[str] = frozenset()
    radius_km: float | None = None


@dataclass
class User:
    user_id: str
    username: str
    email: str
    network_id: str
    password_digest: str
    home_location: tuple[float, float] | None = None
    preferences: Preferences = field(default_factory=Preferences)
    active: bool = False
    created_at: str = ""


def email_domain(email: str) -> str:
    if not _EMAIL_RE.match(email):
        raise InvalidEmail(f"not a valid email address: {email!r}")
    return email.rsplit("@", 1)[1].lower()


def check_username(username: str) -> str:
    if not USERNAME_RE.match(username):
        raise InvalidUsername(
            "username must be 3-32 chars of lowercase letters, digits, underscore"
        )
    return username


def check_password(password: str) -> str:
    if len(password) < MIN_PASSWORD_LENGTH:
        raise WeakPassword(f"password must be at least {MIN_PASSWORD_LENGTH} characters")
    return password


class NetworkRegistry:
    """Registered networks and the email-domain to network mapping."""

    def __init__(self, networks: list[Network]):
        seen: dict[str, str] = {}
        for net in networks:
            for suffix in net.domain_suffixes:
                if suffix in seen:
                    raise ValueError(
                        f"domain {suffix!r} registered to both {seen[suffix]!r} "
                        f"and {net.network_id!r}"
                    )
                seen[suffix] = net.network_id
        self._networks = {net.network_id: net for net in networks}
        self._by_domain = seen

    @classmethod
    def from_file(cls, path: str | Path) -> "NetworkRegistry":
        """Load the line-oriented registry: id<TAB>display name<TAB>d1,d2,..."""
        networks = []
        for raw in Path(path).read_text().splitlines():
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise ValueError(f"bad registry line: {raw!r}")
            network_id, display_name, domains = parts
            suffixes = frozenset(d.strip().lower() for d in domains.split(",") if d.strip())
            networks.append(Network(network_id, display_name, suffixes))
        return cls(networks)

    def get(self, network_id: str) -> Network | None:
        return self._networks.get(network_id)

    def all(self) -> list[Network]:
        return list(self._networks.values())

    def network_of(self, email: str) -> str:
        """Longest-suffix match of the email domain against registered domains."""
        domain = email_domain(email)
        candidates = [
            suffix
            for suffix in self._by_domain
            if domain == suffix or domain.endswith("." + suffix)
        ]
        if not candidates:
            raise UnknownDomain(f"no network registered for domain {domain!r}")
        return self._by_domain[max(candidates, key=len)]


def hash_password(password: str, iterations: int = 100_000, salt: str | None = None) -> str:
    if salt is None:
        salt = secrets.token_hex(16)
    digest = hashlib.pbkdf2_hmac(
        "sha256", password.encode(), bytes.fromhex(salt), iterations
    ).hex()
    return f"pbkdf2_sha256${iterations}${salt}${digest}"


def verify_password(password: str, stored: str) -> bool:
    try:
        scheme, iterations, salt, digest = stored.split("$")
        if scheme != "pbkdf2_sha256":
            return False
        computed = hashlib.pbkdf2_hmac(
            "sha256", password.encode(), bytes.fromhex(salt), int(iterations)
        ).hex()
    except (ValueError, TypeError):
        return False
    return hmac.compare_digest(computed, digest)


def new_token() -> str:
    return secrets.token_hex(16)


@dataclass(frozen=True)
class RedactedListing:
    """A listing as one particular viewer is allowed to see it."""

    listing_id: str
    redaction_level: str
    title: str
    category: str
    created_at: str
    values: dict[str, str]
    subcategory: str | None = None
    tags: tuple[str, ...] | None = None
    description: str | None = None
    location: tuple[float, float] | None = None
    visibility: str | None = None
    status: str | None = None
    updated_at: str | None = None
    owner_username: str | None = None
    owner_network_id: str | None = None
    view_count: int | None = None
    score: dict | None = None

    def to_json(self) -> dict:
        payload: dict = {
            "listing_id": self.listing_id,
            "redaction_level": self.redaction_level,
            "title": self.title,
            "category": self.category,
            "created_at": self.created_at,
            "values": dict(self.values),
        }
        optional = {
            "subcategory": self.subcategory,
            "tags": sorted(self.tags) if self.tags is not None else None,
            "description": self.description,
            "location": list(self.location) if self.location is not None else None,
            "visibility": self.visibility,
            "status": self.status,
            "updated_at": self.updated_at,
            "owner_username": self.owner_username,
            "owner_network_id": self.owner_network_id,
            "view_count": self.view_count,
            "score": self.score,
        }
        payload.update({k: v for k, v in optional.items() if v is not None})
        return payload


def redaction_level(viewer: User | None, listing, owner: User) -> str:
    """Decide the redaction level per the table above; raises Denied."""
    if viewer is not None and viewer.user_id == owner.user_id:
        return LEVEL_FULL
    if viewer is None:
        return LEVEL_ANONYMOUS
    if viewer.network_id == owner.network_id:
        return LEVEL_MEMBER
    if listing.visibility == "public":
        return LEVEL_MEMBER
    raise Denied("listing is limited to the owner's network")


def redact(
    viewer: User | None,
    listing,
    owner: User,
    schema: CategorySchema | None = None,
) -> RedactedListing:
    """Produce the viewer-appropriate projection of a listing.

    The owner's email and home location are never present at any level; the
    schema is consulted to decide which values survive anonymous redaction.
    """
    level = redaction_level(viewer, listing, owner)
    if level == LEVEL_ANONYMOUS:
        price_like = {}
        if schema is not None:
            for spec in schema.fields:
                if (
                    spec.visible_in_search_filter
                    and spec.data_type in _PRICE_LIKE
                    and spec.label in listing.values
                ):
                    price_like[spec.label] = listing.values[spec.label]
        return RedactedListing(
            listing_id=listing.listing_id,
            redaction_level=level,
            title=listing.title,
            category=listing.category,
            created_at=listing.created_at,
            values=price_like,
        )
    shared = dict(
        listing_id=listing.listing_id,
        redaction_level=level,
        title=listing.title,
        category=listing.category,
        created_at=listing.created_at,
        values=dict(listing.values),
        subcategory=listing.subcategory,
        tags=tuple(sorted(listing.tags)),
        description=listing.description,
        location=listing.location,
        visibility=listing.visibility,
        updated_at=listing.updated_at,
        owner_username=owner.username,
        owner_network_id=owner.network_id,
    )
    if level == LEVEL_MEMBER:
        return RedactedListing(**shared)
    return RedactedListing(status=listing.status, view_count=listing.view_count, **shared)

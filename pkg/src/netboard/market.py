"""Listing lifecycle and the ownership/interest graph.

Each listing is a node owned by exactly one user (a solid edge). Users who
message about a listing get a dashed edge carrying the running message count
for their thread. A sale swaps the edge kinds: the buyer's edge turns solid,
the previous owner keeps a dashed edge that inherits the thread's count.

Status lifecycle (undo keeps depth-1 history):

    active --hide--> hidden --delete--> deleted
    active --delete--> deleted
    hidden --undo--> active
    deleted --undo--> status held just before the delete
    active --mark_sold--> sold (terminal)
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import InvalidTransition

STATUS_ACTIVE = "active"
STATUS_HIDDEN = "hidden"
STATUS_DELETED = "deleted"
STATUS_SOLD = "sold"

VISIBILITY_NETWORK = "network"
VISIBILITY_PUBLIC = "public"

EDGE_SOLID = "solid"
EDGE_DASHED = "dashed"

ACTIONS = ("edit", "hide", "delete", "undo")


@dataclass
class Listing:
    listing_id: str
    owner_id: str
    category: str
    subcategory: str
    tags: frozenset[str]
    title: str
    description: str
    values: dict[str, str]
    location: tuple[float, float] | None
    visibility: str
    status: str
    prev_status: str | None
    schema_version: int
    created_at: str
    updated_at: str
    view_count: int = 0


@dataclass
class GraphEdge:
    user_id: str
    listing_id: str
    kind: str  # solid | dashed
    message_count: int = 0
    thread_id: str | None = None


@dataclass(frozen=True)
class ListingSummary:
    listing_id: str
    title: str
    category: str
    status: str
    created_at: str
    view_count: int | None = None

    def to_json(self) -> dict:
        payload = {
            "listing_id": self.listing_id,
            "title": self.title,
            "category": self.category,
            "status": self.status,
            "created_at": self.created_at,
        }
        if self.view_count is not None:
            payload["view_count"] = self.view_count
        return payload


@dataclass(frozen=True)
class Profile:
    username: str
    listings: tuple[ListingSummary, ...] = field(default_factory=tuple)

    def to_json(self) -> dict:
        return {
            "username": self.username,
            "listings": [item.to_json() for item in self.listings],
        }


def transition(status: str, prev_status: str | None, action: str) -> tuple[str, str | None]:
    """Return (new_status, new_prev_status) for hide/delete/undo.

    Undo restores the status held immediately before the most recent hide or
    delete and consumes the history; a second undo is invalid.
    """
    if action == "hide":
        if status != STATUS_ACTIVE:
            raise InvalidTransition(f"cannot hide a {status} listing")
        return STATUS_HIDDEN, status
    if action == "delete":
        if status not in (STATUS_ACTIVE, STATUS_HIDDEN):
            raise InvalidTransition(f"cannot delete a {status} listing")
        return STATUS_DELETED, status
    if action == "undo":
        if status not in (STATUS_HIDDEN, STATUS_DELETED) or prev_status is None:
            raise InvalidTransition("nothing to undo")
        return prev_status, None
    raise InvalidTransition(f"unknown action {action!r}")


def can_edit(status: str) -> bool:
    return status in (STATUS_ACTIVE, STATUS_HIDDEN)


def tags_from(raw) -> frozenset[str]:
    """Normalize a tag collection to lowercase tokens."""
    if raw is None:
        return frozenset()
    if isinstance(raw, str):
        raw = raw.split(",")
    return frozenset(t.strip().lower() for t in raw if t and t.strip())

"""SQLite-backed persistence.

One embedded relational database holds every record; ownership and thread
relationships are real foreign keys, so a half-applied multi-record operation
cannot survive a crash: the service wraps each mutating operation in a single
transaction via :meth:`Store.transaction`.

All access goes through one connection guarded by a re-entrant lock, which
serializes writers (and interleaved readers) per the service's concurrency
contract. Identifier sequences live in the ``counters`` table so they are
allocated inside the same transaction as the rows that use them.
"""

from __future__ import annotations

import json
import sqlite3
import threading
from contextlib import contextmanager
from pathlib import Path

from .identity import Preferences, User
from .market import GraphEdge, Listing
from .messaging import Message, MessageThread, OutboundNotification
from .schema import CategorySchema, FieldRequest, FieldSpec

_SCHEMA_SQL = """
CREATE TABLE IF NOT EXISTS users (
    user_id TEXT PRIMARY KEY,
    username TEXT NOT NULL UNIQUE,
    email TEXT NOT NULL UNIQUE,
    network_id TEXT NOT NULL,
    password_digest TEXT NOT NULL,
    home_lat REAL,
    home_lon REAL,
    pref_categories TEXT NOT NULL DEFAULT '[]',
    pref_networks TEXT NOT NULL DEFAULT '[]',
    pref_radius_km REAL,
    active INTEGER NOT NULL DEFAULT 0,
    created_at TEXT NOT NULL
);

CREATE TABLE IF NOT EXISTS verification_tokens (
    token TEXT PRIMARY KEY,
    user_id TEXT NOT NULL REFERENCES users(user_id),
    expires_at TEXT NOT NULL,
    used INTEGER NOT NULL DEFAULT 0
);

CREATE TABLE IF NOT EXISTS sessions (
    token TEXT PRIMARY KEY,
    user_id TEXT NOT NULL REFERENCES users(user_id),
    expires_at TEXT NOT NULL
);

CREATE TABLE IF NOT EXISTS schemas (
    category TEXT PRIMARY KEY,
    schema_id TEXT NOT NULL,
    creator TEXT NOT NULL,
    version INTEGER NOT NULL,
    fields_json TEXT NOT NULL,
    status TEXT NOT NULL DEFAULT 'approved'
);

CREATE TABLE IF NOT EXISTS field_requests (
    request_id INTEGER PRIMARY KEY AUTOINCREMENT,
    category TEXT NOT NULL,
    label TEXT NOT NULL,
    data_type TEXT NOT NULL,
    creator TEXT NOT NULL,
    status TEXT NOT NULL DEFAULT 'pending',
    reason TEXT,
    created_at TEXT NOT NULL
);

CREATE TABLE IF NOT EXISTS listings (
    listing_id TEXT PRIMARY KEY,
    owner_id TEXT NOT NULL REFERENCES users(user_id),
    category TEXT NOT NULL,
    subcategory TEXT NOT NULL DEFAULT '',
    tags_json TEXT NOT NULL DEFAULT '[]',
    title TEXT NOT NULL,
    description TEXT NOT NULL DEFAULT '',
    values_json TEXT NOT NULL DEFAULT '{}',
    lat REAL,
    lon REAL,
    visibility TEXT NOT NULL DEFAULT 'network',
    status TEXT NOT NULL DEFAULT 'active',
    prev_status TEXT,
    schema_version INTEGER NOT NULL DEFAULT 1,
    created_at TEXT NOT NULL,
    updated_at TEXT NOT NULL,
    view_count INTEGER NOT NULL DEFAULT 0
);

CREATE TABLE IF NOT EXISTS edges (
    user_id TEXT NOT NULL REFERENCES users(user_id),
    listing_id TEXT NOT NULL REFERENCES listings(listing_id),
    kind TEXT NOT NULL,
    message_count INTEGER NOT NULL DEFAULT 0,
    thread_id TEXT,
    PRIMARY KEY (user_id, listing_id)
);

CREATE TABLE IF NOT EXISTS threads (
    thread_id TEXT PRIMARY KEY,
    listing_id TEXT NOT NULL REFERENCES listings(listing_id),
    inquirer_id TEXT NOT NULL REFERENCES users(user_id),
    owner_id TEXT NOT NULL REFERENCES users(user_id),
    subject TEXT NOT NULL,
    created_at TEXT NOT NULL,
    UNIQUE (listing_id, inquirer_id)
);

CREATE TABLE IF NOT EXISTS messages (
    message_id TEXT PRIMARY KEY,
    thread_id TEXT NOT NULL REFERENCES threads(thread_id),
    sender_id TEXT NOT NULL REFERENCES users(user_id),
    body TEXT NOT NULL,
    sent_at TEXT NOT NULL,
    read_by_recipient INTEGER NOT NULL DEFAULT 0,
    deleted_by_json TEXT NOT NULL DEFAULT '[]'
);

CREATE TABLE IF NOT EXISTS outbox_queue (
    queue_id INTEGER PRIMARY KEY AUTOINCREMENT,
    recipient_email TEXT NOT NULL,
    kind TEXT NOT NULL,
    inbox_url TEXT NOT NULL,
    thread_id TEXT,
    latest_message_id TEXT,
    token TEXT,
    created_at TEXT NOT NULL
);

CREATE TABLE IF NOT EXISTS counters (
    name TEXT PRIMARY KEY,
    value INTEGER NOT NULL
);
"""


def _user_from_row(row: sqlite3.Row) -> User:
    home = None
    if row["home_lat"] is not None and row["home_lon"] is not None:
        home = (row["home_lat"], row["home_lon"])
    return User(
        user_id=row["user_id"],
        username=row["username"],
        email=row["email"],
        network_id=row["network_id"],
        password_digest=row["password_digest"],
        home_location=home,
        preferences=Preferences(
            categories=frozenset(json.loads(row["pref_categories"])),
            networks=frozenset(json.loads(row["pref_networks"])),
            radius_km=row["pref_radius_km"],
        ),
        active=bool(row["active"]),
        created_at=row["created_at"],
    )


def _listing_from_row(row: sqlite3.Row) -> Listing:
    location = None
    if row["lat"] is not None and row["lon"] is not None:
        location = (row["lat"], row["lon"])
    return Listing(
        listing_id=row["listing_id"],
        owner_id=row["owner_id"],
        category=row["category"],
        subcategory=row["subcategory"],
        tags=frozenset(json.loads(row["tags_json"])),
        title=row["title"],
        description=row["description"],
        values=json.loads(row["values_json"]),
        location=location,
        visibility=row["visibility"],
        status=row["status"],
        prev_status=row["prev_status"],
        schema_version=row["schema_version"],
        created_at=row["created_at"],
        updated_at=row["updated_at"],
        view_count=row["view_count"],
    )


def _edge_from_row(row: sqlite3.Row) -> GraphEdge:
    return GraphEdge(
        user_id=row["user_id"],
        listing_id=row["listing_id"],
        kind=row["kind"],
        message_count=row["message_count"],
        thread_id=row["thread_id"],
    )


def _thread_from_row(row: sqlite3.Row) -> MessageThread:
    return MessageThread(
        thread_id=row["thread_id"],
        listing_id=row["listing_id"],
        inquirer_id=row["inquirer_id"],
        owner_id=row["owner_id"],
        subject=row["subject"],
        created_at=row["created_at"],
    )


def _message_from_row(row: sqlite3.Row) -> Message:
    return Message(
        message_id=row["message_id"],
        thread_id=row["thread_id"],
        sender_id=row["sender_id"],
        body=row["body"],
        sent_at=row["sent_at"],
        read_by_recipient=bool(row["read_by_recipient"]),
        deleted_by=frozenset(json.loads(row["deleted_by_json"])),
    )


def _schema_from_row(row: sqlite3.Row) -> CategorySchema:
    fields = tuple(
        FieldSpec(
            label=f["label"],
            input_type=f["input_type"],
            data_type=f["data_type"],
            visible_in_search_filter=f["visible_in_search_filter"],
        )
        for f in json.loads(row["fields_json"])
    )
    return CategorySchema(
        schema_id=row["schema_id"],
        category=row["category"],
        creator=row["creator"],
        version=row["version"],
        fields=fields,
    )


def _request_from_row(row: sqlite3.Row) -> FieldRequest:
    return FieldRequest(
        category=row["category"],
        label=row["label"],
        data_type=row["data_type"],
        creator=row["creator"],
        status=row["status"],
        reason=row["reason"],
    )


class Store:
    def __init__(self, path: str | Path = ":memory:"):
        self.path = str(path)
        self._conn = sqlite3.connect(self.path, check_same_thread=False)
        self._conn.row_factory = sqlite3.Row
        self._conn.isolation_level = None  # explicit transactions only
        self.lock = threading.RLock()
        self._tx_depth = 0
        with self.lock:
            self._conn.execute("PRAGMA foreign_keys = ON")
            if self.path != ":memory:":
                self._conn.execute("PRAGMA journal_mode = WAL")
                self._conn.execute("PRAGMA synchronous = NORMAL")
            self._conn.executescript(_SCHEMA_SQL)

    def close(self) -> None:
        with self.lock:
            self._conn.close()

    @contextmanager
    def transaction(self):
        """Atomic multi-statement commit; nests by joining the outer one."""
        with self.lock:
            if self._tx_depth > 0:
                self._tx_depth += 1
                try:
                    yield self._conn
                finally:
                    self._tx_depth -= 1
                return
            self._conn.execute("BEGIN IMMEDIATE")
            self._tx_depth = 1
            try:
                yield self._conn
            except BaseException:
                self._conn.execute("ROLLBACK")
                raise
            finally:
                self._tx_depth -= 1
            self._conn.execute("COMMIT")

    def _query(self, sql: str, params: tuple = ()) -> list[sqlite3.Row]:
        with self.lock:
            return self._conn.execute(sql, params).fetchall()

    def _one(self, sql: str, params: tuple = ()) -> sqlite3.Row | None:
        rows = self._query(sql, params)
        return rows[0] if rows else None

    def _exec(self, sql: str, params: tuple = ()) -> None:
        with self.lock:
            self._conn.execute(sql, params)

    # identifiers

    def next_id(self, name: str, prefix: str, width: int = 6) -> str:
        """Allocate the next id in a named sequence (call inside a transaction)."""
        with self.lock:
            self._conn.execute(
                "INSERT INTO counters(name, value) VALUES(?, 0) "
                "ON CONFLICT(name) DO NOTHING",
                (name,),
            )
            self._conn.execute("UPDATE counters SET value = value + 1 WHERE name = ?", (name,))
            row = self._one("SELECT value FROM counters WHERE name = ?", (name,))
            return f"{prefix}{row['value']:0{width}d}"

    # users

    def insert_user(self, user: User) -> None:
        self._exec(
            "INSERT INTO users (user_id, username, email, network_id, password_digest,"
            " home_lat, home_lon, pref_categories, pref_networks, pref_radius_km,"
            " active, created_at) VALUES (?,?,?,?,?,?,?,?,?,?,?,?)",
            (
                user.user_id,
                user.username,
                user.email,
                user.network_id,
                user.password_digest,
                user.home_location[0] if user.home_location else None,
                user.home_location[1] if user.home_location else None,
                json.dumps(sorted(user.preferences.categories)),
                json.dumps(sorted(user.preferences.networks)),
                user.preferences.radius_km,
                int(user.active),
                user.created_at,
            ),
        )

    def get_user(self, user_id: str) -> User | None:
        row = self._one("SELECT * FROM users WHERE user_id = ?", (user_id,))
        return _user_from_row(row) if row else None

    def user_by_username(self, username: str) -> User | None:
        row = self._one("SELECT * FROM users WHERE username = ?", (username,))
        return _user_from_row(row) if row else None

    def user_by_email(self, email: str) -> User | None:
        row = self._one("SELECT * FROM users WHERE email = ?", (email,))
        return _user_from_row(row) if row else None

    def activate_user(self, user_id: str) -> None:
        self._exec("UPDATE users SET active = 1 WHERE user_id = ?", (user_id,))

    def update_user_settings(
        self,
        user_id: str,
        preferences: Preferences,
        home_location: tuple[float, float] | None,
    ) -> None:
        self._exec(
            "UPDATE users SET pref_categories = ?, pref_networks = ?, pref_radius_km = ?,"
            " home_lat = ?, home_lon = ? WHERE user_id = ?",
            (
                json.dumps(sorted(preferences.categories)),
                json.dumps(sorted(preferences.networks)),
                preferences.radius_km,
                home_location[0] if home_location else None,
                home_location[1] if home_location else None,
                user_id,
            ),
        )

    def active_user_count(self) -> int:
        return self._one("SELECT COUNT(*) AS n FROM users WHERE active = 1")["n"]

    def active_users_per_network(self) -> dict[str, int]:
        rows = self._query(
            "SELECT network_id, COUNT(*) AS n FROM users WHERE active = 1 GROUP BY network_id"
        )
        return {row["network_id"]: row["n"] for row in rows}

    # verification tokens

    def insert_token(self, token: str, user_id: str, expires_at: str) -> None:
        self._exec(
            "INSERT INTO verification_tokens (token, user_id, expires_at) VALUES (?,?,?)",
            (token, user_id, expires_at),
        )

    def get_token(self, token: str) -> sqlite3.Row | None:
        return self._one("SELECT * FROM verification_tokens WHERE token = ?", (token,))

    def mark_token_used(self, token: str) -> None:
        self._exec("UPDATE verification_tokens SET used = 1 WHERE token = ?", (token,))

    # sessions

    def insert_session(self, token: str, user_id: str, expires_at: str) -> None:
        self._exec(
            "INSERT INTO sessions (token, user_id, expires_at) VALUES (?,?,?)",
            (token, user_id, expires_at),
        )

    def get_session(self, token: str) -> sqlite3.Row | None:
        return self._one("SELECT * FROM sessions WHERE token = ?", (token,))

    def delete_session(self, token: str) -> None:
        self._exec("DELETE FROM sessions WHERE token = ?", (token,))

    # schemas and field requests

    def upsert_schema(self, schema: CategorySchema, status: str = "approved") -> None:
        fields_json = json.dumps(
            [
                {
                    "label": f.label,
                    "input_type": f.input_type,
                    "data_type": f.data_type,
                    "visible_in_search_filter": f.visible_in_search_filter,
                }
                for f in schema.fields
            ]
        )
        self._exec(
            "INSERT INTO schemas (category, schema_id, creator, version, fields_json, status)"
            " VALUES (?,?,?,?,?,?) ON CONFLICT(category) DO UPDATE SET"
            " schema_id = excluded.schema_id, creator = excluded.creator,"
            " version = excluded.version, fields_json = excluded.fields_json,"
            " status = excluded.status",
            (schema.category, schema.schema_id, schema.creator, schema.version, fields_json, status),
        )

    def get_schema(self, category: str) -> tuple[CategorySchema, str] | None:
        row = self._one("SELECT * FROM schemas WHERE category = ?", (category,))
        if row is None:
            return None
        return _schema_from_row(row), row["status"]

    def all_schemas(self, status: str | None = None) -> list[CategorySchema]:
        if status is None:
            rows = self._query("SELECT * FROM schemas ORDER BY category")
        else:
            rows = self._query(
                "SELECT * FROM schemas WHERE status = ? ORDER BY category", (status,)
            )
        return [_schema_from_row(row) for row in rows]

    def insert_request(self, request: FieldRequest, created_at: str) -> int:
        with self.lock:
            cursor = self._conn.execute(
                "INSERT INTO field_requests (category, label, data_type, creator,"
                " status, reason, created_at) VALUES (?,?,?,?,?,?,?)",
                (
                    request.category,
                    request.label,
                    request.data_type,
                    request.creator,
                    request.status,
                    request.reason,
                    created_at,
                ),
            )
            return cursor.lastrowid

    def get_request(self, request_id: int) -> FieldRequest | None:
        row = self._one(
            "SELECT * FROM field_requests WHERE request_id = ?", (request_id,)
        )
        return _request_from_row(row) if row else None

    def update_request(self, request_id: int, request: FieldRequest) -> None:
        self._exec(
            "UPDATE field_requests SET status = ?, reason = ? WHERE request_id = ?",
            (request.status, request.reason, request_id),
        )

    def list_requests(self, status: str | None = None) -> list[tuple[int, FieldRequest]]:
        if status is None:
            rows = self._query("SELECT * FROM field_requests ORDER BY request_id")
        else:
            rows = self._query(
                "SELECT * FROM field_requests WHERE status = ? ORDER BY request_id",
                (status,),
            )
        return [(row["request_id"], _request_from_row(row)) for row in rows]

    # listings

    def insert_listing(self, listing: Listing) -> None:
        self._exec(
            "INSERT INTO listings (listing_id, owner_id, category, subcategory,"
            " tags_json, title, description, values_json, lat, lon, visibility,"
            " status, prev_status, schema_version, created_at, updated_at, view_count)"
            " VALUES (?,?,?,?,?,?,?,?,?,?,?,?,?,?,?,?,?)",
            (
                listing.listing_id,
                listing.owner_id,
                listing.category,
                listing.subcategory,
                json.dumps(sorted(listing.tags)),
                listing.title,
                listing.description,
                json.dumps(listing.values, sort_keys=True),
                listing.location[0] if listing.location else None,
                listing.location[1] if listing.location else None,
                listing.visibility,
                listing.status,
                listing.prev_status,
                listing.schema_version,
                listing.created_at,
                listing.updated_at,
                listing.view_count,
            ),
        )

    def update_listing(self, listing: Listing) -> None:
        self._exec(
            "UPDATE listings SET category = ?, subcategory = ?, tags_json = ?,"
            " title = ?, description = ?, values_json = ?, lat = ?, lon = ?,"
            " visibility = ?, status = ?, prev_status = ?, schema_version = ?,"
            " updated_at = ? WHERE listing_id = ?",
            (
                listing.category,
                listing.subcategory,
                json.dumps(sorted(listing.tags)),
                listing.title,
                listing.description,
                json.dumps(listing.values, sort_keys=True),
                listing.location[0] if listing.location else None,
                listing.location[1] if listing.location else None,
                listing.visibility,
                listing.status,
                listing.prev_status,
                listing.schema_version,
                listing.updated_at,
                listing.listing_id,
            ),
        )

    def get_listing(self, listing_id: str) -> Listing | None:
        row = self._one("SELECT * FROM listings WHERE listing_id = ?", (listing_id,))
        return _listing_from_row(row) if row else None

    def increment_view_count(self, listing_id: str) -> int:
        with self.lock:
            self._conn.execute(
                "UPDATE listings SET view_count = view_count + 1 WHERE listing_id = ?",
                (listing_id,),
            )
            row = self._one(
                "SELECT view_count FROM listings WHERE listing_id = ?", (listing_id,)
            )
            return row["view_count"]

    def listings_by_owner(self, owner_id: str) -> list[Listing]:
        rows = self._query(
            "SELECT * FROM listings WHERE owner_id = ? ORDER BY created_at DESC,"
            " listing_id", (owner_id,)
        )
        return [_listing_from_row(row) for row in rows]

    def listings_by_status(self, status: str) -> list[Listing]:
        rows = self._query(
            "SELECT * FROM listings WHERE status = ? ORDER BY listing_id", (status,)
        )
        return [_listing_from_row(row) for row in rows]

    def all_listings(self) -> list[Listing]:
        return [_listing_from_row(r) for r in self._query("SELECT * FROM listings ORDER BY listing_id")]

    # edges

    def upsert_edge(self, edge: GraphEdge) -> None:
        self._exec(
            "INSERT INTO edges (user_id, listing_id, kind, message_count, thread_id)"
            " VALUES (?,?,?,?,?) ON CONFLICT(user_id, listing_id) DO UPDATE SET"
            " kind = excluded.kind, message_count = excluded.message_count,"
            " thread_id = excluded.thread_id",
            (edge.user_id, edge.listing_id, edge.kind, edge.message_count, edge.thread_id),
        )

    def get_edge(self, user_id: str, listing_id: str) -> GraphEdge | None:
        row = self._one(
            "SELECT * FROM edges WHERE user_id = ? AND listing_id = ?",
            (user_id, listing_id),
        )
        return _edge_from_row(row) if row else None

    def edges_for_listing(self, listing_id: str) -> list[GraphEdge]:
        rows = self._query(
            "SELECT * FROM edges WHERE listing_id = ? ORDER BY user_id", (listing_id,)
        )
        return [_edge_from_row(row) for row in rows]

    def edges_by_thread(self, thread_id: str) -> list[GraphEdge]:
        rows = self._query(
            "SELECT * FROM edges WHERE thread_id = ? ORDER BY user_id", (thread_id,)
        )
        return [_edge_from_row(row) for row in rows]

    def all_edges(self) -> list[GraphEdge]:
        rows = self._query("SELECT * FROM edges ORDER BY listing_id, user_id")
        return [_edge_from_row(row) for row in rows]

    # threads and messages

    def insert_thread(self, thread: MessageThread) -> None:
        self._exec(
            "INSERT INTO threads (thread_id, listing_id, inquirer_id, owner_id,"
            " subject, created_at) VALUES (?,?,?,?,?,?)",
            (
                thread.thread_id,
                thread.listing_id,
                thread.inquirer_id,
                thread.owner_id,
                thread.subject,
                thread.created_at,
            ),
        )

    def get_thread(self, thread_id: str) -> MessageThread | None:
        row = self._one("SELECT * FROM threads WHERE thread_id = ?", (thread_id,))
        return _thread_from_row(row) if row else None

    def thread_for(self, listing_id: str, inquirer_id: str) -> MessageThread | None:
        row = self._one(
            "SELECT * FROM threads WHERE listing_id = ? AND inquirer_id = ?",
            (listing_id, inquirer_id),
        )
        return _thread_from_row(row) if row else None

    def threads_of_user(self, user_id: str) -> list[MessageThread]:
        rows = self._query(
            "SELECT * FROM threads WHERE inquirer_id = ? OR owner_id = ?"
            " ORDER BY thread_id",
            (user_id, user_id),
        )
        return [_thread_from_row(row) for row in rows]

    def all_threads(self) -> list[MessageThread]:
        return [_thread_from_row(r) for r in self._query("SELECT * FROM threads ORDER BY thread_id")]

    def insert_message(self, message: Message) -> None:
        self._exec(
            "INSERT INTO messages (message_id, thread_id, sender_id, body, sent_at,"
            " read_by_recipient, deleted_by_json) VALUES (?,?,?,?,?,?,?)",
            (
                message.message_id,
                message.thread_id,
                message.sender_id,
                message.body,
                message.sent_at,
                int(message.read_by_recipient),
                json.dumps(sorted(message.deleted_by)),
            ),
        )

    def update_message(self, message: Message) -> None:
        self._exec(
            "UPDATE messages SET read_by_recipient = ?, deleted_by_json = ?"
            " WHERE message_id = ?",
            (
                int(message.read_by_recipient),
                json.dumps(sorted(message.deleted_by)),
                message.message_id,
            ),
        )

    def get_message(self, message_id: str) -> Message | None:
        row = self._one("SELECT * FROM messages WHERE message_id = ?", (message_id,))
        return _message_from_row(row) if row else None

    def messages_in_thread(self, thread_id: str) -> list[Message]:
        rows = self._query(
            "SELECT * FROM messages WHERE thread_id = ? ORDER BY sent_at, message_id",
            (thread_id,),
        )
        return [_message_from_row(row) for row in rows]

    def message_count(self, thread_id: str) -> int:
        row = self._one(
            "SELECT COUNT(*) AS n FROM messages WHERE thread_id = ?", (thread_id,)
        )
        return row["n"]

    # outbox

    def queue_notification(self, note: OutboundNotification) -> int:
        with self.lock:
            cursor = self._conn.execute(
                "INSERT INTO outbox_queue (recipient_email, kind, inbox_url, thread_id,"
                " latest_message_id, token, created_at) VALUES (?,?,?,?,?,?,?)",
                (
                    note.recipient_email,
                    note.kind,
                    note.inbox_url,
                    note.thread_id,
                    note.latest_message_id,
                    note.token,
                    note.created_at,
                ),
            )
            return cursor.lastrowid

    def pending_notifications(self) -> list[tuple[int, OutboundNotification]]:
        rows = self._query("SELECT * FROM outbox_queue ORDER BY queue_id")
        return [
            (
                row["queue_id"],
                OutboundNotification(
                    recipient_email=row["recipient_email"],
                    kind=row["kind"],
                    inbox_url=row["inbox_url"],
                    thread_id=row["thread_id"],
                    latest_message_id=row["latest_message_id"],
                    token=row["token"],
                    created_at=row["created_at"],
                ),
            )
            for row in rows
        ]

    def remove_notifications(self, queue_ids: list[int]) -> None:
        with self.lock:
            self._conn.executemany(
                "DELETE FROM outbox_queue WHERE queue_id = ?",
                [(qid,) for qid in queue_ids],
            )

    # diagnostics

    def dump(self) -> str:
        with self.lock:
            return "\n".join(self._conn.iterdump())

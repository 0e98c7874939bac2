"""Application core: every operation the HTTP API and CLI expose.

Composes the schema engine, identity rules, marketplace graph, search index,
and messaging into one stateful service over a single Store. Multi-record
mutations (listing + ownership edge, thread + interest edge + message) commit
in one transaction; the in-memory search index is updated only after a commit
and rebuilt from the store on startup, so it always reflects exactly the
active listings.

The wall clock is injectable for tests (token expiry, freshness scoring,
deterministic seeding).
"""

from __future__ import annotations

import logging
from collections.abc import Callable
from datetime import datetime, timedelta, timezone
from pathlib import Path

from . import market, messaging
from .errors import (
    AccountInactive,
    AlreadySold,
    AuthRequired,
    BodyTooLong,
    BuyerNeverEngaged,
    Denied,
    EmailAlreadyRegistered,
    EmptyBody,
    InvalidCredentials,
    InvalidFilter,
    InvalidTransition,
    ListingDeleted,
    ListingNotFound,
    MessageNotFound,
    NetboardError,
    NotOwner,
    NotParticipant,
    OutboxUnwritable,
    RequestNotPending,
    SchemaLoadFailed,
    SchemaNotFound,
    SelfMessage,
    SelfSale,
    TokenAlreadyUsed,
    TokenExpired,
    TokenUnknown,
    UnknownDataType,
    UnknownRequestId,
    UnknownUsername,
    UsernameTaken,
    ValidationFailed,
)
from .identity import (
    NetworkRegistry,
    Preferences,
    RedactedListing,
    User,
    check_password,
    check_username,
    hash_password,
    new_token,
    redact,
    verify_password,
)
from .market import GraphEdge, Listing, ListingSummary, Profile
from .messaging import Message, MessageThread, OutboundNotification
from .schema import (
    DATA_TYPES,
    REQUIRED_LABEL,
    CategorySchema,
    FieldRequest,
    apply_field_request,
    derive_filter_spec,
    parse_iso8601,
    parse_schema,
    validate_values,
)
from .search import (
    STOPWORDS,
    RankWeights,
    RankedResult,
    SearchIndex,
    SynonymTable,
    expand_query,
    rank,
    tokenize,
)
from .search.geo import DEFAULT_DECAY_KM, haversine_km
from .search.rank import paginate
from .store import Store

log = logging.getLogger("netboard")

TOKEN_TTL_HOURS = 48
SESSION_TTL_DAYS = 14
MAX_PAGE_SIZE = 100


def utcnow() -> datetime:
    return datetime.now(timezone.utc)


def _locked(method):
    """Serialize a mutating operation: checks and writes act atomically."""
    def wrapper(self, *args, **kwargs):
        with self.store.lock:
            return method(self, *args, **kwargs)
    wrapper.__name__ = method.__name__
    wrapper.__doc__ = method.__doc__
    return wrapper


class ClassifiedsService:
    def __init__(
        self,
        store: Store,
        networks: NetworkRegistry,
        synonyms: SynonymTable | None = None,
        *,
        base_url: str = "http://localhost:8700",
        weights: RankWeights = RankWeights(),
        decay_km: float = DEFAULT_DECAY_KM,
        page_size: int = 20,
        outbox_dir: str | Path | None = None,
        auto_flush: bool = True,
        clock: Callable[[], datetime] | None = None,
        pbkdf2_iterations: int = 100_000,
        stopwords: frozenset[str] | None = None,
    ):
        self.store = store
        self.networks = networks
        self.synonyms = synonyms or SynonymTable()
        self.stopwords = stopwords if stopwords is not None else STOPWORDS
        self.base_url = base_url.rstrip("/")
        self.weights = weights
        self.decay_km = decay_km
        self.page_size = page_size
        self.outbox_dir = Path(outbox_dir) if outbox_dir else None
        self.auto_flush = auto_flush
        self.clock = clock or utcnow
        self.pbkdf2_iterations = pbkdf2_iterations
        self._outbox_seq = 0
        self.index = SearchIndex(self.stopwords)
        self.rebuild_index()

    # time helpers

    def now(self) -> datetime:
        return self.clock()

    def now_iso(self) -> str:
        return self.now().isoformat()

    # schema registry

    def load_schema_dir(self, schema_dir: str | Path) -> list[CategorySchema]:
        """Import *.xml templates; files for categories already evolved in the
        store are left alone (the store is authoritative once live)."""
        loaded = []
        for path in sorted(Path(schema_dir).glob("*.xml")):
            try:
                schema = parse_schema(path.read_text())
            except NetboardError as exc:
                raise SchemaLoadFailed(f"{path.name}: {exc.message}") from exc
            if self.store.get_schema(schema.category) is None:
                self.store.upsert_schema(schema, status="approved")
                loaded.append(schema)
        return loaded

    def approved_schemas(self) -> list[CategorySchema]:
        return self.store.all_schemas(status="approved")

    def schema_for(self, category: str) -> CategorySchema:
        entry = self.store.get_schema(category.lower())
        if entry is None or entry[1] != "approved":
            raise SchemaNotFound(f"no approved schema for category {category!r}")
        return entry[0]

    @_locked
    def submit_field_request(
        self, creator: User, category: str, label: str, data_type: str
    ) -> tuple[int, FieldRequest]:
        if data_type not in DATA_TYPES:
            raise UnknownDataType(f"unknown data-type {data_type!r}")
        label = label.strip()
        if not label:
            raise ValidationFailed("field label must not be blank")
        category = category.strip().lower()
        if not category:
            raise ValidationFailed("category must not be blank")
        request = FieldRequest(category, label, data_type, creator.username)
        with self.store.transaction():
            if self.store.get_schema(category) is None:
                # first request for a brand-new category: park a draft schema
                # that goes live once its first field is approved
                draft = CategorySchema(
                    schema_id=self.store.next_id("schema", "O", 4),
                    category=category,
                    creator=creator.username,
                    version=1,
                    fields=(),
                )
                self.store.upsert_schema(draft, status="draft")
            request_id = self.store.insert_request(request, self.now_iso())
        return request_id, request

    def list_field_requests(self, status: str | None = None) -> list[tuple[int, FieldRequest]]:
        return self.store.list_requests(status)

    @_locked
    def decide_field_request(
        self, request_id: int, decision: str
    ) -> tuple[CategorySchema, FieldRequest]:
        request = self.store.get_request(request_id)
        if request is None:
            raise UnknownRequestId(f"no field request {request_id}")
        if request.status != "pending":
            raise RequestNotPending(f"request {request_id} is already {request.status}")
        entry = self.store.get_schema(request.category)
        if entry is None:
            raise SchemaNotFound(f"no schema for category {request.category!r}")
        schema, status = entry
        evolved, decided = apply_field_request(schema, request, decision)
        with self.store.transaction():
            if decided.status == "approved":
                self.store.upsert_schema(evolved, status="approved")
            self.store.update_request(request_id, decided)
        return evolved, decided

    # registration and sessions

    @_locked
    def register(self, email: str, username: str, password: str) -> dict:
        username = check_username(username)
        check_password(password)
        network_id = self.networks.network_of(email)
        now = self.now()
        token = new_token()
        with self.store.transaction():
            if self.store.user_by_email(email) is not None:
                raise EmailAlreadyRegistered(f"{email!r} is already registered")
            if self.store.user_by_username(username) is not None:
                raise UsernameTaken(f"username {username!r} is taken")
            user = User(
                user_id=self.store.next_id("user", "U"),
                username=username,
                email=email,
                network_id=network_id,
                password_digest=hash_password(password, self.pbkdf2_iterations),
                active=False,
                created_at=now.isoformat(),
            )
            self.store.insert_user(user)
            expires = (now + timedelta(hours=TOKEN_TTL_HOURS)).isoformat()
            self.store.insert_token(token, user.user_id, expires)
            self.store.queue_notification(
                OutboundNotification(
                    recipient_email=email,
                    kind=messaging.KIND_VERIFICATION,
                    inbox_url=f"{self.base_url}/verify/{token}",
                    token=token,
                    created_at=now.isoformat(),
                )
            )
        self._maybe_flush()
        return {
            "user_id": user.user_id,
            "username": username,
            "network_id": network_id,
            "status": "pending_verification",
        }

    @_locked
    def verify(self, token: str) -> User:
        row = self.store.get_token(token)
        if row is None:
            raise TokenUnknown("unknown verification token")
        if row["used"]:
            raise TokenAlreadyUsed("verification token was already used")
        if parse_iso8601(row["expires_at"]) < self.now():
            raise TokenExpired("verification token expired")
        with self.store.transaction():
            self.store.mark_token_used(token)
            self.store.activate_user(row["user_id"])
        return self.store.get_user(row["user_id"])

    def login(self, username: str, password: str) -> dict:
        user = self.store.user_by_username(username)
        if user is None or not verify_password(password, user.password_digest):
            raise InvalidCredentials("unknown username or wrong password")
        if not user.active:
            raise InvalidCredentials("account is not verified yet")
        token = new_token()
        expires = (self.now() + timedelta(days=SESSION_TTL_DAYS)).isoformat()
        self.store.insert_session(token, user.user_id, expires)
        return {"session_token": token, "expires_at": expires, "username": username}

    def logout(self, token: str) -> None:
        self.store.delete_session(token)

    def session_user(self, token: str | None) -> User | None:
        """Expired sessions are indistinguishable from absent ones."""
        if not token:
            return None
        row = self.store.get_session(token)
        if row is None:
            return None
        if parse_iso8601(row["expires_at"]) < self.now():
            self.store.delete_session(token)
            return None
        return self.store.get_user(row["user_id"])

    def require_user(self, token: str | None) -> User:
        user = self.session_user(token)
        if user is None:
            raise AuthRequired("sign in to do that")
        return user

    def update_settings(
        self,
        user: User,
        categories: frozenset[str] | None = None,
        networks: frozenset[str] | None = None,
        radius_km: float | None = None,
        home_location: tuple[float, float] | None = None,
    ) -> User:
        prefs = Preferences(
            categories=categories if categories is not None else user.preferences.categories,
            networks=networks if networks is not None else user.preferences.networks,
            radius_km=radius_km if radius_km is not None else user.preferences.radius_km,
        )
        home = home_location if home_location is not None else user.home_location
        self.store.update_user_settings(user.user_id, prefs, home)
        return self.store.get_user(user.user_id)

    # redaction plumbing

    def _owner_of(self, listing: Listing) -> User:
        return self.store.get_user(listing.owner_id)

    def _schema_or_none(self, category: str) -> CategorySchema | None:
        entry = self.store.get_schema(category)
        return entry[0] if entry else None

    def redact_listing(self, viewer: User | None, listing: Listing) -> RedactedListing:
        return redact(viewer, listing, self._owner_of(listing), self._schema_or_none(listing.category))

    def try_redact(self, viewer: User | None, listing: Listing) -> RedactedListing | None:
        try:
            return self.redact_listing(viewer, listing)
        except Denied:
            return None

    # listings

    @_locked
    def create_listing(
        self,
        owner: User,
        category: str,
        values: dict[str, str],
        *,
        visibility: str = market.VISIBILITY_NETWORK,
        location: tuple[float, float] | None = None,
        subcategory: str = "",
        tags=(),
        description: str = "",
    ) -> Listing:
        if not owner.active:
            raise AccountInactive("verify your account before posting")
        if visibility not in (market.VISIBILITY_NETWORK, market.VISIBILITY_PUBLIC):
            raise ValidationFailed(f"visibility must be network or public, got {visibility!r}")
        schema = self.schema_for(category)
        report = validate_values(schema, values)
        if not report.ok:
            raise ValidationFailed("listing values do not fit the category", report.to_json())
        title = values[self._title_key(values)].strip()
        rest = {k: v for k, v in values.items() if k.lower() != REQUIRED_LABEL.lower() and v.strip()}
        now = self.now_iso()
        with self.store.transaction():
            listing = Listing(
                listing_id=self.store.next_id("listing", "L"),
                owner_id=owner.user_id,
                category=schema.category,
                subcategory=subcategory.strip().lower(),
                tags=market.tags_from(tags),
                title=title,
                description=description,
                values=rest,
                location=location,
                visibility=visibility,
                status=market.STATUS_ACTIVE,
                prev_status=None,
                schema_version=schema.version,
                created_at=now,
                updated_at=now,
                view_count=0,
            )
            self.store.insert_listing(listing)
            self.store.upsert_edge(
                GraphEdge(owner.user_id, listing.listing_id, market.EDGE_SOLID)
            )
        self._index_listing(listing)
        return listing

    @staticmethod
    def _title_key(values: dict[str, str]) -> str:
        for key in values:
            if key.lower() == REQUIRED_LABEL.lower():
                return key
        raise ValidationFailed("a Title value is required")

    @_locked
    def mutate_listing(
        self,
        actor: User,
        listing_id: str,
        action: str,
        *,
        values: dict[str, str] | None = None,
        description: str | None = None,
        subcategory: str | None = None,
        tags=None,
        location: tuple[float, float] | None = None,
        clear_location: bool = False,
        visibility: str | None = None,
    ) -> Listing:
        listing = self.store.get_listing(listing_id)
        if listing is None:
            raise ListingNotFound(f"no listing {listing_id}")
        if listing.owner_id != actor.user_id:
            raise NotOwner("only the owner can manage a listing")
        if action == "edit":
            return self._edit_listing(
                listing,
                values=values,
                description=description,
                subcategory=subcategory,
                tags=tags,
                location=location,
                clear_location=clear_location,
                visibility=visibility,
            )
        if action not in ("hide", "delete", "undo"):
            raise InvalidTransition(f"unknown action {action!r}")
        new_status, new_prev = market.transition(listing.status, listing.prev_status, action)
        listing.status = new_status
        listing.prev_status = new_prev
        listing.updated_at = self.now_iso()
        with self.store.transaction():
            self.store.update_listing(listing)
        self._sync_index(listing)
        return listing

    def _edit_listing(
        self,
        listing: Listing,
        *,
        values,
        description,
        subcategory,
        tags,
        location,
        clear_location,
        visibility,
    ) -> Listing:
        if not market.can_edit(listing.status):
            raise InvalidTransition(f"cannot edit a {listing.status} listing")
        schema = self.schema_for(listing.category)
        merged = {REQUIRED_LABEL: listing.title, **listing.values}
        if values:
            merged.update(values)
        report = validate_values(schema, merged)
        if not report.ok:
            raise ValidationFailed("edited values do not fit the category", report.to_json())
        listing.title = merged[self._title_key(merged)].strip()
        listing.values = {
            k: v
            for k, v in merged.items()
            if k.lower() != REQUIRED_LABEL.lower() and v.strip()
        }
        if description is not None:
            listing.description = description
        if subcategory is not None:
            listing.subcategory = subcategory.strip().lower()
        if tags is not None:
            listing.tags = market.tags_from(tags)
        if visibility is not None:
            if visibility not in (market.VISIBILITY_NETWORK, market.VISIBILITY_PUBLIC):
                raise ValidationFailed(f"visibility must be network or public, got {visibility!r}")
            listing.visibility = visibility
        if clear_location:
            listing.location = None
        elif location is not None:
            listing.location = location
        listing.schema_version = schema.version
        listing.updated_at = self.now_iso()
        with self.store.transaction():
            self.store.update_listing(listing)
        self._sync_index(listing)
        return listing

    def get_listing(self, viewer: User | None, listing_id: str) -> RedactedListing:
        listing = self._visible_listing(viewer, listing_id)
        return self.redact_listing(viewer, listing)

    def _visible_listing(self, viewer: User | None, listing_id: str) -> Listing:
        listing = self.store.get_listing(listing_id)
        if listing is None:
            raise ListingNotFound(f"no listing {listing_id}")
        is_owner = viewer is not None and viewer.user_id == listing.owner_id
        if not is_owner and listing.status != market.STATUS_ACTIVE:
            # non-active listings are not disclosed to anyone but the owner
            raise ListingNotFound(f"no listing {listing_id}")
        return listing

    @_locked
    def record_view(self, viewer: User | None, listing_id: str) -> int:
        listing = self._visible_listing(viewer, listing_id)
        self.redact_listing(viewer, listing)  # raises Denied when not viewable
        if viewer is not None and viewer.user_id == listing.owner_id:
            return listing.view_count
        with self.store.transaction():
            return self.store.increment_view_count(listing_id)

    @_locked
    def mark_sold(self, actor: User, listing_id: str, buyer_username: str) -> Listing:
        listing = self.store.get_listing(listing_id)
        if listing is None:
            raise ListingNotFound(f"no listing {listing_id}")
        if listing.owner_id != actor.user_id:
            raise NotOwner("only the owner can mark a listing sold")
        if listing.status == market.STATUS_SOLD:
            raise AlreadySold("listing was already sold")
        if listing.status != market.STATUS_ACTIVE:
            raise InvalidTransition(f"cannot sell a {listing.status} listing")
        buyer = self.store.user_by_username(buyer_username)
        if buyer is None:
            raise UnknownUsername(f"no user {buyer_username!r}")
        if buyer.user_id == actor.user_id:
            raise SelfSale("cannot sell a listing to yourself")
        buyer_edge = self.store.get_edge(buyer.user_id, listing_id)
        if buyer_edge is None or buyer_edge.kind != market.EDGE_DASHED:
            raise BuyerNeverEngaged(f"{buyer_username!r} never messaged about this listing")
        thread_id = buyer_edge.thread_id
        thread_count = self.store.message_count(thread_id) if thread_id else 0
        listing.status = market.STATUS_SOLD
        listing.prev_status = None
        listing.updated_at = self.now_iso()
        with self.store.transaction():
            self.store.upsert_edge(
                GraphEdge(buyer.user_id, listing_id, market.EDGE_SOLID, 0, thread_id)
            )
            self.store.upsert_edge(
                GraphEdge(actor.user_id, listing_id, market.EDGE_DASHED, thread_count, thread_id)
            )
            self.store.update_listing(listing)
        self._sync_index(listing)
        return listing

    def profile_of(self, viewer: User | None, username: str) -> Profile:
        owner = self.store.user_by_username(username)
        if owner is None:
            raise UnknownUsername(f"no user {username!r}")
        summaries = []
        for listing in self.store.listings_by_owner(owner.user_id):
            if viewer is not None and viewer.user_id == owner.user_id:
                summaries.append(
                    ListingSummary(
                        listing.listing_id,
                        listing.title,
                        listing.category,
                        listing.status,
                        listing.created_at,
                        view_count=listing.view_count,
                    )
                )
                continue
            if listing.status != market.STATUS_ACTIVE:
                continue
            redacted = self.try_redact(viewer, listing)
            if redacted is None:
                continue
            summaries.append(
                ListingSummary(
                    redacted.listing_id,
                    redacted.title,
                    redacted.category,
                    market.STATUS_ACTIVE,
                    redacted.created_at,
                )
            )
        return Profile(username=owner.username, listings=tuple(summaries))

    # graph

    def export_graph(self) -> str:
        lines = [
            f"{e.user_id}\t{e.listing_id}\t{e.kind}\t{e.message_count}"
            for e in self.store.all_edges()
        ]
        return "\n".join(lines) + ("\n" if lines else "")

    # search and feed

    def _index_listing(self, listing: Listing) -> None:
        schema = self._schema_or_none(listing.category)
        text_values = []
        if schema is not None:
            for spec in schema.fields:
                if spec.data_type == "text" and spec.label in listing.values:
                    text_values.append(listing.values[spec.label])
        else:
            text_values = list(listing.values.values())
        self.index.upsert(
            listing.listing_id,
            listing.title,
            listing.tags,
            listing.description,
            text_values,
        )

    def _sync_index(self, listing: Listing) -> None:
        if listing.status == market.STATUS_ACTIVE:
            self._index_listing(listing)
        else:
            self.index.remove(listing.listing_id)

    def rebuild_index(self) -> None:
        self.index.clear()
        for listing in self.store.listings_by_status(market.STATUS_ACTIVE):
            self._index_listing(listing)

    def _check_filters(
        self, category: str | None, field_filters: dict[str, Callable[[str], bool]] | None
    ) -> None:
        if not field_filters:
            return
        if category is None:
            raise InvalidFilter("field filters require a category")
        filterable = {f.label for f in derive_filter_spec(self.schema_for(category))}
        unknown = set(field_filters) - filterable
        if unknown:
            raise InvalidFilter(
                f"not filterable in {category!r}: {', '.join(sorted(unknown))}"
            )

    def _candidates(
        self,
        viewer: User | None,
        category: str | None,
        subcategory: str | None,
        field_filters: dict[str, Callable[[str], bool]] | None,
    ) -> list[Listing]:
        out = []
        for listing in self.store.listings_by_status(market.STATUS_ACTIVE):
            if category is not None and listing.category != category.lower():
                continue
            if subcategory is not None and listing.subcategory != subcategory.lower():
                continue
            if field_filters:
                values = {REQUIRED_LABEL: listing.title, **listing.values}
                if not all(
                    label in values and predicate(values[label])
                    for label, predicate in field_filters.items()
                ):
                    continue
            if self.try_redact(viewer, listing) is None:
                continue
            out.append(listing)
        return out

    def search(
        self,
        viewer: User | None,
        q: str = "",
        *,
        category: str | None = None,
        subcategory: str | None = None,
        field_filters: dict[str, Callable[[str], bool]] | None = None,
        origin: tuple[float, float] | None = None,
        page: int = 0,
        page_size: int | None = None,
    ) -> tuple[int, list[tuple[RankedResult, RedactedListing]]]:
        """Ranked, paginated, viewer-redacted search. Returns (total, page)."""
        self._check_filters(category, field_filters)
        size = self._page_size(page_size)
        with self.store.lock:
            candidates = self._candidates(viewer, category, subcategory, field_filters)
            by_id = {l.listing_id: l for l in candidates}
            expanded = expand_query(tokenize(q, self.stopwords), self.synonyms)
            ranked = rank(
                [l.listing_id for l in candidates],
                self.index,
                expanded,
                origin,
                self.now(),
                created_at_of=lambda lid: parse_iso8601(by_id[lid].created_at),
                location_of=lambda lid: by_id[lid].location,
                weights=self.weights,
                decay_km=self.decay_km,
            )
        total = len(ranked)
        page_items = paginate(ranked, max(page, 0), size)
        return total, [
            (r, self.redact_listing(viewer, by_id[r.listing_id])) for r in page_items
        ]

    def newsfeed(
        self,
        viewer: User | None,
        page: int = 0,
        page_size: int | None = None,
    ) -> tuple[int, list[RedactedListing]]:
        """Recency-ordered feed filtered by the viewer's preferences; anonymous
        visitors get recent public listings."""
        size = self._page_size(page_size)
        candidates = []
        for listing in self.store.listings_by_status(market.STATUS_ACTIVE):
            if viewer is None:
                if listing.visibility != market.VISIBILITY_PUBLIC:
                    continue
            else:
                prefs = viewer.preferences
                if prefs.categories and listing.category not in prefs.categories:
                    continue
                if prefs.networks:
                    owner = self._owner_of(listing)
                    if owner.network_id not in prefs.networks:
                        continue
                if (
                    prefs.radius_km is not None
                    and viewer.home_location is not None
                    and listing.location is not None
                ):
                    d = haversine_km(*viewer.home_location, *listing.location)
                    if d > prefs.radius_km:
                        continue
            redacted = self.try_redact(viewer, listing)
            if redacted is None:
                continue
            candidates.append((listing, redacted))
        candidates.sort(
            key=lambda pair: (
                -parse_iso8601(pair[0].created_at).timestamp(),
                pair[0].listing_id,
            )
        )
        total = len(candidates)
        return total, [r for _l, r in paginate(candidates, max(page, 0), size)]

    def _page_size(self, requested: int | None) -> int:
        size = requested if requested is not None else self.page_size
        return max(1, min(MAX_PAGE_SIZE, size))

    # messaging

    @_locked
    def send_message(
        self,
        sender: User,
        body: str,
        *,
        listing_id: str | None = None,
        thread_id: str | None = None,
    ) -> Message:
        if not sender.active:
            raise AccountInactive("verify your account before messaging")
        text = body.strip()
        if not text:
            raise EmptyBody("message body must not be empty")
        if len(text) > messaging.MAX_BODY_CHARS:
            raise BodyTooLong(f"message body exceeds {messaging.MAX_BODY_CHARS} characters")

        if thread_id is not None:
            thread = self.store.get_thread(thread_id)
            if thread is None:
                raise MessageNotFound(f"no thread {thread_id}")
            if not thread.has_participant(sender.user_id):
                raise NotParticipant("only thread participants can reply")
            return self._append_message(sender, thread, text)

        if listing_id is None:
            raise ValidationFailed("listing_id or thread_id is required")
        listing = self.store.get_listing(listing_id)
        if listing is None:
            raise ListingNotFound(f"no listing {listing_id}")
        if listing.status == market.STATUS_DELETED:
            raise ListingDeleted("the listing was deleted; no further messages")
        if listing.owner_id == sender.user_id:
            raise SelfMessage("you own this listing; reply inside an existing thread")
        existing = self.store.thread_for(listing_id, sender.user_id)
        if existing is not None:
            return self._append_message(sender, existing, text)

        # first contact: only active listings accept new conversations
        if listing.status != market.STATUS_ACTIVE:
            raise ListingNotFound(f"no listing {listing_id}")
        self.redact_listing(sender, listing)  # raises Denied when not viewable
        now = self.now_iso()
        with self.store.transaction():
            thread = MessageThread(
                thread_id=self.store.next_id("thread", "T"),
                listing_id=listing_id,
                inquirer_id=sender.user_id,
                owner_id=listing.owner_id,
                subject=listing.title,
                created_at=now,
            )
            self.store.insert_thread(thread)
            message = self._insert_message_row(sender, thread, text)
            self.store.upsert_edge(
                GraphEdge(
                    sender.user_id,
                    listing_id,
                    market.EDGE_DASHED,
                    message_count=1,
                    thread_id=thread.thread_id,
                )
            )
            self._queue_message_notification(thread, message)
        self._maybe_flush()
        return message

    def _append_message(self, sender: User, thread: MessageThread, text: str) -> Message:
        listing = self.store.get_listing(thread.listing_id)
        if listing is not None and listing.status == market.STATUS_DELETED:
            raise ListingDeleted("the listing was deleted; no further messages")
        with self.store.transaction():
            message = self._insert_message_row(sender, thread, text)
            count = self.store.message_count(thread.thread_id)
            for edge in self.store.edges_by_thread(thread.thread_id):
                if edge.kind == market.EDGE_DASHED:
                    edge.message_count = count
                    self.store.upsert_edge(edge)
            self._queue_message_notification(thread, message)
        self._maybe_flush()
        return message

    def _insert_message_row(self, sender: User, thread: MessageThread, text: str) -> Message:
        message = Message(
            message_id=self.store.next_id("message", "M"),
            thread_id=thread.thread_id,
            sender_id=sender.user_id,
            body=text,
            sent_at=self.now_iso(),
        )
        self.store.insert_message(message)
        return message

    def _queue_message_notification(self, thread: MessageThread, message: Message) -> None:
        recipient = self.store.get_user(thread.counterpart_of(message.sender_id))
        self.store.queue_notification(
            OutboundNotification(
                recipient_email=recipient.email,
                kind=messaging.KIND_NEW_MESSAGE,
                inbox_url=f"{self.base_url}/#/inbox",
                thread_id=thread.thread_id,
                latest_message_id=message.message_id,
                created_at=self.now_iso(),
            )
        )

    def _thread_view(
        self, user: User, thread: MessageThread, visible: list[Message]
    ) -> dict:
        return {
            "thread_id": thread.thread_id,
            "listing_id": thread.listing_id,
            "subject": thread.subject,
            "counterpart": self.store.get_user(thread.counterpart_of(user.user_id)).username,
            "created_at": thread.created_at,
            "messages": [
                {
                    "message_id": m.message_id,
                    "sender": self.store.get_user(m.sender_id).username,
                    "mine": m.sender_id == user.user_id,
                    "body": m.body,
                    "sent_at": m.sent_at,
                    "read": m.read_by_recipient,
                }
                for m in visible
            ],
        }

    def folder(self, user: User, which: str) -> list[dict]:
        if which not in messaging.FOLDERS:
            raise MessageNotFound(f"no folder {which!r}")
        views = []
        for thread in self.store.threads_of_user(user.user_id):
            visible = [
                m
                for m in self.store.messages_in_thread(thread.thread_id)
                if messaging.in_folder(m, thread, user.user_id, which)
            ]
            if visible:
                views.append(self._thread_view(user, thread, visible))
        views.sort(key=lambda v: v["messages"][-1]["sent_at"], reverse=True)
        return views

    @_locked
    def read_thread(self, user: User, thread_id: str) -> dict:
        """Thread detail; fetching it marks the user's incoming messages read."""
        thread = self.store.get_thread(thread_id)
        if thread is None:
            raise MessageNotFound(f"no thread {thread_id}")
        if not thread.has_participant(user.user_id):
            raise NotParticipant("not your conversation")
        messages = self.store.messages_in_thread(thread_id)
        with self.store.transaction():
            for m in messages:
                if messaging.is_unread(m, thread, user.user_id):
                    self.store.update_message(
                        Message(
                            m.message_id,
                            m.thread_id,
                            m.sender_id,
                            m.body,
                            m.sent_at,
                            read_by_recipient=True,
                            deleted_by=m.deleted_by,
                        )
                    )
        visible = [
            m
            for m in self.store.messages_in_thread(thread_id)
            if user.user_id not in m.deleted_by
        ]
        return self._thread_view(user, thread, visible)

    @_locked
    def delete_message(self, user: User, message_id: str) -> Message:
        message = self.store.get_message(message_id)
        if message is None:
            raise MessageNotFound(f"no message {message_id}")
        thread = self.store.get_thread(message.thread_id)
        if not thread.has_participant(user.user_id):
            raise NotParticipant("not your conversation")
        if user.user_id in message.deleted_by:
            return message  # idempotent
        updated = Message(
            message.message_id,
            message.thread_id,
            message.sender_id,
            message.body,
            message.sent_at,
            read_by_recipient=message.read_by_recipient,
            deleted_by=message.deleted_by | {user.user_id},
        )
        with self.store.transaction():
            self.store.update_message(updated)
        return updated

    def unread_count(self, user: User) -> int:
        count = 0
        for thread in self.store.threads_of_user(user.user_id):
            for m in self.store.messages_in_thread(thread.thread_id):
                if messaging.is_unread(m, thread, user.user_id):
                    count += 1
        return count

    # outbox

    def flush_notifications(self) -> list[Path]:
        """Write queued notifications to the outbox directory, one file per
        deduplicated notification; the queue survives a failed write."""
        if self.outbox_dir is None:
            return []
        with self.store.lock:  # single-flighted
            pending = self.store.pending_notifications()
            if not pending:
                return []
            batches = messaging.dedupe_notifications(pending)
            written = messaging.write_outbox_files(
                batches,
                self.outbox_dir,
                unix_ts=int(self.now().timestamp()),
                start_seq=self._outbox_seq,
            )
            self._outbox_seq += len(written)
            with self.store.transaction():
                self.store.remove_notifications(
                    [qid for ids, _note in batches for qid in ids]
                )
            return written

    def _maybe_flush(self) -> None:
        if not self.auto_flush or self.outbox_dir is None:
            return
        try:
            self.flush_notifications()
        except OutboxUnwritable as exc:
            log.warning("outbox flush failed, queue retained: %s", exc.message)

"""HTTP+JSON boundary.

Every listing payload that leaves this layer is produced by the redaction
path: handlers serialize RedactedListing values as-is, so no field can bypass
the viewer rules. Errors use one stable envelope:
``{"error_code": ..., "message": ..., "details"?: ...}``.

Sessions ride in ``Authorization: Bearer <token>``; the UI (served from ``/``
when a frontend bundle directory is configured) stores the token itself.
"""

from __future__ import annotations

import math
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from .errors import NetboardError, ValidationFailed
from .identity import RedactedListing, User
from .market import Listing
from .service import ClassifiedsService

VIEW_MODES = ("list", "thumbnails", "map", "tabular")


def _bearer_token(request: Request) -> str | None:
    header = request.headers.get("authorization", "")
    if header.lower().startswith("bearer "):
        return header[7:].strip()
    return None


def _number_in(value: str) -> float | None:
    """Numeric part of a value like '120', '12.50', or 'USD 120.00'."""
    text = value.strip()
    if " " in text:
        text = text.rsplit(" ", 1)[1]
    try:
        return float(text)
    except ValueError:
        return None


def _filter_predicate(raw: str):
    """'lo..hi' makes a numeric range check, anything else an exact match."""
    if ".." in raw:
        lo_text, _, hi_text = raw.partition("..")
        try:
            lo = float(lo_text) if lo_text else -math.inf
            hi = float(hi_text) if hi_text else math.inf
        except ValueError:
            lo = hi = None
        if lo is not None:
            def range_pred(value: str, lo=lo, hi=hi) -> bool:
                number = _number_in(value)
                return number is not None and lo <= number <= hi

            return range_pred

    def exact(value: str, want=raw) -> bool:
        return value.strip().lower() == want.strip().lower()

    return exact


def _origin_from(lat: str | None, lon: str | None) -> tuple[float, float] | None:
    if lat is None and lon is None:
        return None
    if lat is None or lon is None:
        raise ValidationFailed("lat and lon must be supplied together")
    try:
        origin = (float(lat), float(lon))
    except ValueError:
        raise ValidationFailed("lat and lon must be decimal degrees")
    if not (-90 <= origin[0] <= 90 and -180 <= origin[1] <= 180):
        raise ValidationFailed("lat/lon out of range")
    return origin


def _body_str(payload: dict, key: str, required: bool = True, default: str = "") -> str:
    value = payload.get(key, None)
    if value is None:
        if required:
            raise ValidationFailed(f"missing field {key!r}")
        return default
    if not isinstance(value, str):
        raise ValidationFailed(f"field {key!r} must be a string")
    return value


def _values_map(payload: dict) -> dict[str, str]:
    raw = payload.get("values")
    if not isinstance(raw, dict):
        raise ValidationFailed("'values' must be an object of label -> string")
    out = {}
    for key, value in raw.items():
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            value = str(value)
        if not isinstance(value, str):
            raise ValidationFailed(f"value for {key!r} must be a string")
        out[str(key)] = value
    return out


def _location_from_payload(payload: dict) -> tuple[float, float] | None:
    lat, lon = payload.get("lat"), payload.get("lon")
    if lat is None and lon is None:
        return None
    try:
        return (float(lat), float(lon))
    except (TypeError, ValueError):
        raise ValidationFailed("lat and lon must both be decimal degrees")


def create_app(service: ClassifiedsService, frontend_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="netboard", docs_url=None, redoc_url=None, openapi_url=None)

    @app.exception_handler(NetboardError)
    async def on_error(_request, exc: NetboardError):
        return JSONResponse(status_code=exc.http_status, content=exc.to_json())

    @app.exception_handler(RequestValidationError)
    async def on_bad_request(_request, exc):
        return JSONResponse(
            status_code=400,
            content={"error_code": "bad_request", "message": str(exc)},
        )

    def viewer_of(request: Request) -> User | None:
        return service.session_user(_bearer_token(request))

    def actor_of(request: Request) -> User:
        return service.require_user(_bearer_token(request))

    async def json_body(request: Request) -> dict:
        try:
            payload = await request.json()
        except Exception:
            raise ValidationFailed("request body must be JSON")
        if not isinstance(payload, dict):
            raise ValidationFailed("request body must be a JSON object")
        return payload

    # health and auth

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.post("/auth/register", status_code=201)
    async def register(request: Request):
        payload = await json_body(request)
        return service.register(
            _body_str(payload, "email"),
            _body_str(payload, "username"),
            _body_str(payload, "password"),
        )

    @app.get("/verify/{token}")
    def verify(token: str):
        user = service.verify(token)
        return {"username": user.username, "network_id": user.network_id, "status": "active"}

    @app.post("/auth/login")
    async def login(request: Request):
        payload = await json_body(request)
        return service.login(
            _body_str(payload, "username"), _body_str(payload, "password")
        )

    @app.post("/auth/logout")
    def logout(request: Request):
        actor_of(request)  # auth required
        service.logout(_bearer_token(request))
        return {"ok": True}

    # feed and search

    @app.get("/feed")
    def feed(request: Request, page: int = 0, page_size: int | None = None):
        viewer = viewer_of(request)
        total, listings = service.newsfeed(viewer, page=page, page_size=page_size)
        return {
            "total": total,
            "page": page,
            "listings": [l.to_json() for l in listings],
        }

    @app.get("/search")
    def search(
        request: Request,
        q: str = "",
        category: str | None = None,
        subcategory: str | None = None,
        view: str = "list",
        page: int = 0,
        page_size: int | None = None,
        lat: str | None = None,
        lon: str | None = None,
    ):
        if view not in VIEW_MODES:
            raise ValidationFailed(f"view must be one of {', '.join(VIEW_MODES)}")
        field_filters = {
            name[len("filter_"):]: _filter_predicate(raw)
            for name, raw in request.query_params.items()
            if name.startswith("filter_")
        }
        viewer = viewer_of(request)
        total, scored = service.search(
            viewer,
            q,
            category=category,
            subcategory=subcategory,
            field_filters=field_filters or None,
            origin=_origin_from(lat, lon),
            page=page,
            page_size=page_size,
        )
        return {
            "total": total,
            "page": page,
            "view": view,  # payload shape hint only; ranking is identical
            "results": [
                {**result.to_json(), "listing": payload.to_json()}
                for result, payload in scored
            ],
        }

    # listings

    def _listing_payload(viewer: User | None, listing: Listing) -> dict:
        redacted: RedactedListing = service.redact_listing(viewer, listing)
        return redacted.to_json()

    @app.post("/listings", status_code=201)
    async def create_listing(request: Request):
        actor = actor_of(request)
        payload = await json_body(request)
        tags = payload.get("tags", ())
        if isinstance(tags, str):
            tags = tags.split(",")
        if not isinstance(tags, (list, tuple)):
            raise ValidationFailed("'tags' must be a list or comma-separated string")
        listing = service.create_listing(
            actor,
            _body_str(payload, "category"),
            _values_map(payload),
            visibility=_body_str(payload, "visibility", required=False, default="network"),
            location=_location_from_payload(payload),
            subcategory=_body_str(payload, "subcategory", required=False),
            tags=tags,
            description=_body_str(payload, "description", required=False),
        )
        return _listing_payload(actor, listing)

    @app.get("/listings/{listing_id}")
    def get_listing(request: Request, listing_id: str):
        viewer = viewer_of(request)
        return service.get_listing(viewer, listing_id).to_json()

    @app.patch("/listings/{listing_id}")
    async def mutate_listing(request: Request, listing_id: str):
        actor = actor_of(request)
        payload = await json_body(request)
        action = _body_str(payload, "action")
        kwargs = {}
        if "values" in payload:
            kwargs["values"] = _values_map(payload)
        if "description" in payload:
            kwargs["description"] = _body_str(payload, "description", required=False)
        if "subcategory" in payload:
            kwargs["subcategory"] = _body_str(payload, "subcategory", required=False)
        if "tags" in payload:
            tags = payload["tags"]
            kwargs["tags"] = tags.split(",") if isinstance(tags, str) else tags
        if "visibility" in payload:
            kwargs["visibility"] = _body_str(payload, "visibility")
        if payload.get("clear_location"):
            kwargs["clear_location"] = True
        elif "lat" in payload or "lon" in payload:
            kwargs["location"] = _location_from_payload(payload)
        listing = service.mutate_listing(actor, listing_id, action, **kwargs)
        return _listing_payload(actor, listing)

    @app.post("/listings/{listing_id}/view")
    def record_view(request: Request, listing_id: str):
        viewer = viewer_of(request)
        count = service.record_view(viewer, listing_id)
        listing = service.store.get_listing(listing_id)
        if viewer is not None and viewer.user_id == listing.owner_id:
            return {"counted": False, "view_count": count}
        return {"counted": True}

    @app.post("/listings/{listing_id}/sold")
    async def mark_sold(request: Request, listing_id: str):
        actor = actor_of(request)
        payload = await json_body(request)
        listing = service.mark_sold(actor, listing_id, _body_str(payload, "buyer"))
        return _listing_payload(actor, listing)

    @app.get("/directory/profile/{username}")
    def profile(request: Request, username: str):
        viewer = viewer_of(request)
        return service.profile_of(viewer, username).to_json()

    # messaging

    @app.post("/messages", status_code=201)
    async def send_message(request: Request):
        actor = actor_of(request)
        payload = await json_body(request)
        message = service.send_message(
            actor,
            _body_str(payload, "body"),
            listing_id=payload.get("listing_id"),
            thread_id=payload.get("thread_id"),
        )
        return {
            "message_id": message.message_id,
            "thread_id": message.thread_id,
            "sent_at": message.sent_at,
        }

    @app.get("/messages/unread-count")
    def unread_count(request: Request):
        return {"unread": service.unread_count(actor_of(request))}

    @app.get("/messages/{folder}")
    def folder(request: Request, folder: str, thread: str | None = None):
        actor = actor_of(request)
        if thread is not None:
            return service.read_thread(actor, thread)
        return {"folder": folder, "threads": service.folder(actor, folder)}

    @app.delete("/messages/{message_id}")
    def delete_message(request: Request, message_id: str):
        service.delete_message(actor_of(request), message_id)
        return {"ok": True}

    # schemas

    def _schema_json(schema) -> dict:
        return {
            "category": schema.category,
            "schema_id": schema.schema_id,
            "creator": schema.creator,
            "version": schema.version,
            "fields": [
                {
                    "label": f.label,
                    "input_type": f.input_type,
                    "data_type": f.data_type,
                    "visible_in_search_filter": f.visible_in_search_filter,
                }
                for f in schema.fields
            ],
        }

    @app.get("/schemas")
    def schemas():
        return {"schemas": [_schema_json(s) for s in service.approved_schemas()]}

    @app.get("/schemas/{category}")
    def schema(category: str):
        return _schema_json(service.schema_for(category))

    @app.post("/schema-requests", status_code=201)
    async def schema_request(request: Request):
        actor = actor_of(request)
        payload = await json_body(request)
        request_id, field_request = service.submit_field_request(
            actor,
            _body_str(payload, "category"),
            _body_str(payload, "label"),
            _body_str(payload, "data_type"),
        )
        return {
            "request_id": request_id,
            "category": field_request.category,
            "label": field_request.label,
            "data_type": field_request.data_type,
            "status": field_request.status,
        }

    if frontend_dir is not None and Path(frontend_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(frontend_dir), html=True), name="ui")

    return app

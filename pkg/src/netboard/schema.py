"""Category template engine.

Listing categories are defined by XML templates instead of code: a template
names the category's fields, their input widgets, data types, and which fields
double as search filters. Users propose new fields via ``requestField``
documents that an administrator approves or rejects; every approval appends the
field and bumps the schema version by one.

Parsing is strict: elements or attributes outside the known vocabulary are
rejected rather than ignored, so template files cannot silently drift.
"""

from __future__ import annotations

import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass, replace
from datetime import datetime
from urllib.parse import urlparse

from .errors import (
    CategoryMismatch,
    DuplicateFieldLabel,
    EmptySchema,
    MalformedXml,
    RequestNotPending,
    UnknownAttribute,
    UnknownDataType,
)

INPUT_TYPES = ("textbox", "textarea", "select", "checkbox")
DATA_TYPES = ("text", "date-time", "currency", "number", "location", "url")
# Only these data types may be exposed as search filters.
FILTERABLE_DATA_TYPES = ("text", "currency", "number", "date-time")

REQUIRED_LABEL = "Title"

_SCHEMA_ATTRS = {"id", "category", "creator", "version"}
_FIELD_ATTRS = {"input-type", "data-type", "visibility-in-search-filter"}
_REQUEST_ATTRS = {"category", "data-type", "creator"}

_CURRENCY_RE = re.compile(r"^(?:[A-Z]{3} )?\d+(?:\.\d{1,2})?$")
_NUMBER_RE = re.compile(r"^[+-]?(?:\d+(?:\.\d+)?|\.\d+)$")


@dataclass(frozen=True)
class FieldSpec:
    label: str
    input_type: str = "textbox"
    data_type: str = "text"
    visible_in_search_filter: bool = False


@dataclass(frozen=True)
class CategorySchema:
    schema_id: str
    category: str
    creator: str
    version: int = 1
    fields: tuple[FieldSpec, ...] = ()

    def labels(self) -> tuple[str, ...]:
        return tuple(f.label for f in self.fields)

    def field_by_label(self, label: str) -> FieldSpec | None:
        wanted = label.lower()
        for f in self.fields:
            if f.label.lower() == wanted:
                return f
        return None


@dataclass(frozen=True)
class FieldRequest:
    category: str
    label: str
    data_type: str
    creator: str
    status: str = "pending"  # pending | approved | rejected
    reason: str | None = None


@dataclass(frozen=True)
class FieldResult:
    label: str
    status: str  # ok | missing | type_error | unknown_label
    message: str = ""


@dataclass(frozen=True)
class ValidationReport:
    results: tuple[FieldResult, ...]

    @property
    def ok(self) -> bool:
        return all(r.status == "ok" for r in self.results)

    def problems(self) -> list[FieldResult]:
        return [r for r in self.results if r.status != "ok"]

    def to_json(self) -> list[dict]:
        return [
            {"label": r.label, "status": r.status, "message": r.message}
            for r in self.results
        ]


def _parse_root(xml_text: str, expected_tag: str) -> ET.Element:
    try:
        root = ET.fromstring(xml_text)
    except ET.ParseError as exc:
        raise MalformedXml(f"not well-formed XML: {exc}") from exc
    if root.tag != expected_tag:
        raise MalformedXml(f"root element must be <{expected_tag}>, got <{root.tag}>")
    return root


def _require_attr(elem: ET.Element, name: str) -> str:
    value = elem.get(name)
    if value is None:
        raise MalformedXml(f"<{elem.tag}> is missing required attribute {name!r}")
    return value


def _reject_unknown_attrs(elem: ET.Element, allowed: set[str]) -> None:
    for name in elem.attrib:
        if name not in allowed:
            raise UnknownAttribute(f"unknown attribute {name!r} on <{elem.tag}>")


def _check_data_type(value: str) -> str:
    if value not in DATA_TYPES:
        raise UnknownDataType(
            f"unknown data-type {value!r}; expected one of {', '.join(DATA_TYPES)}"
        )
    return value


def _element_label(elem: ET.Element) -> str:
    if len(elem) > 0:
        raise UnknownAttribute(f"unexpected element <{elem[0].tag}> inside <{elem.tag}>")
    label = (elem.text or "").strip()
    if not label:
        raise MalformedXml(f"<{elem.tag}> has no label text")
    return label


def parse_schema(xml_text: str) -> CategorySchema:
    """Parse a category template document into a CategorySchema.

    Field order follows document order. Absent input-type defaults to textbox,
    absent data-type to text, absent visibility-in-search-filter to false.
    """
    root = _parse_root(xml_text, "schema")
    _reject_unknown_attrs(root, _SCHEMA_ATTRS)
    schema_id = _require_attr(root, "id")
    category = _require_attr(root, "category").lower()
    creator = _require_attr(root, "creator")
    version_text = root.get("version", "1")
    try:
        version = int(version_text)
    except ValueError:
        raise MalformedXml(f"version must be an integer, got {version_text!r}")
    if version < 1:
        raise MalformedXml(f"version must be >= 1, got {version}")
    if root.text and root.text.strip():
        raise MalformedXml("unexpected text content inside <schema>")

    fields: list[FieldSpec] = []
    seen: set[str] = set()
    for child in root:
        if child.tag != "field":
            raise UnknownAttribute(f"unknown element <{child.tag}> inside <schema>")
        _reject_unknown_attrs(child, _FIELD_ATTRS)
        if child.tail and child.tail.strip():
            raise MalformedXml("unexpected text content inside <schema>")
        label = _element_label(child)
        input_type = child.get("input-type", "textbox")
        if input_type not in INPUT_TYPES:
            raise MalformedXml(
                f"invalid input-type {input_type!r}; expected one of {', '.join(INPUT_TYPES)}"
            )
        data_type = _check_data_type(child.get("data-type", "text"))
        visible_text = child.get("visibility-in-search-filter", "false")
        if visible_text not in ("true", "false"):
            raise MalformedXml(
                f"visibility-in-search-filter must be 'true' or 'false', got {visible_text!r}"
            )
        visible = visible_text == "true"
        if visible and data_type not in FILTERABLE_DATA_TYPES:
            raise MalformedXml(
                f"field {label!r}: data-type {data_type!r} cannot be a search filter"
            )
        if label.lower() in seen:
            raise DuplicateFieldLabel(f"duplicate field label {label!r}")
        seen.add(label.lower())
        fields.append(FieldSpec(label, input_type, data_type, visible))

    if not fields:
        raise EmptySchema(f"schema {schema_id!r} defines no fields")
    return CategorySchema(schema_id, category, creator, version, tuple(fields))


def serialize_schema(schema: CategorySchema) -> str:
    """Emit the XML form of a schema; attributes are omitted at default values.

    parse_schema(serialize_schema(s)) == s for any schema satisfying the type
    invariants.
    """
    root = ET.Element(
        "schema",
        {"id": schema.schema_id, "category": schema.category, "creator": schema.creator},
    )
    if schema.version != 1:
        root.set("version", str(schema.version))
    root.text = "\n  "
    for i, f in enumerate(schema.fields):
        attrs = {}
        if f.input_type != "textbox":
            attrs["input-type"] = f.input_type
        if f.data_type != "text":
            attrs["data-type"] = f.data_type
        if f.visible_in_search_filter:
            attrs["visibility-in-search-filter"] = "true"
        elem = ET.SubElement(root, "field", attrs)
        elem.text = f.label
        elem.tail = "\n  " if i < len(schema.fields) - 1 else "\n"
    return ET.tostring(root, encoding="unicode")


def parse_field_request(xml_text: str) -> FieldRequest:
    """Parse a ``requestField`` document into a pending FieldRequest."""
    root = _parse_root(xml_text, "requestField")
    _reject_unknown_attrs(root, _REQUEST_ATTRS)
    category = _require_attr(root, "category").lower()
    data_type = _check_data_type(_require_attr(root, "data-type"))
    creator = _require_attr(root, "creator")
    label = _element_label(root)
    return FieldRequest(category, label, data_type, creator)


def parse_iso8601(value: str) -> datetime:
    """Parse an ISO-8601 timestamp, accepting a trailing 'Z' for UTC."""
    text = value.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    return datetime.fromisoformat(text)


def _check_value(data_type: str, value: str) -> str | None:
    """Return an error message if value does not conform to data_type."""
    if data_type == "text":
        return None
    if data_type == "date-time":
        try:
            parse_iso8601(value)
            return None
        except ValueError:
            return "not an ISO-8601 date-time"
    if data_type == "currency":
        if _CURRENCY_RE.match(value.strip()):
            return None
        return "not an amount with <= 2 fraction digits and optional currency code"
    if data_type == "number":
        if _NUMBER_RE.match(value.strip()):
            return None
        return "not a decimal number"
    if data_type == "location":
        parts = value.split(",")
        if len(parts) == 2:
            try:
                lat, lon = float(parts[0]), float(parts[1])
            except ValueError:
                return "not a 'lat, lon' pair"
            if -90.0 <= lat <= 90.0 and -180.0 <= lon <= 180.0:
                return None
            return "coordinates out of range"
        return "not a 'lat, lon' pair"
    if data_type == "url":
        parsed = urlparse(value.strip())
        if parsed.scheme in ("http", "https") and parsed.netloc:
            return None
        return "not an http(s) URL"
    raise UnknownDataType(f"unknown data-type {data_type!r}")


def validate_values(schema: CategorySchema, values: dict[str, str]) -> ValidationReport:
    """Check a label->string map against a schema.

    Total over any input map: never raises, always returns a report. Unknown
    labels are reported as ``unknown_label`` entries; the Title field is
    required, everything else is optional (blank counts as absent).
    """
    by_label = {f.label.lower(): f for f in schema.fields}
    supplied = {k.lower(): (k, v) for k, v in values.items()}
    results: list[FieldResult] = []

    for spec in schema.fields:
        entry = supplied.get(spec.label.lower())
        value = entry[1] if entry is not None else None
        if value is None or not value.strip():
            if spec.label == REQUIRED_LABEL:
                results.append(FieldResult(spec.label, "missing", "required field"))
            else:
                results.append(FieldResult(spec.label, "ok"))
            continue
        problem = _check_value(spec.data_type, value)
        if problem is None:
            results.append(FieldResult(spec.label, "ok"))
        else:
            results.append(FieldResult(spec.label, "type_error", problem))

    for key, (original, _value) in supplied.items():
        if key not in by_label:
            results.append(
                FieldResult(original, "unknown_label", "no such field in schema")
            )
    return ValidationReport(tuple(results))


def derive_filter_spec(schema: CategorySchema) -> tuple[FieldSpec, ...]:
    """Fields exposed as search filters, in schema order."""
    return tuple(f for f in schema.fields if f.visible_in_search_filter)


def apply_field_request(
    schema: CategorySchema, request: FieldRequest, decision: str
) -> tuple[CategorySchema, FieldRequest]:
    """Apply an administrator decision to a pending field request.

    Approval appends the field and bumps the version by one; rejection leaves
    the schema untouched. Approving a label that already exists auto-rejects
    the request with reason ``duplicate_field_label``. Neither input value is
    mutated.
    """
    if request.status != "pending":
        raise RequestNotPending(f"request is already {request.status}")
    if request.category != schema.category:
        raise CategoryMismatch(
            f"request targets {request.category!r}, schema is {schema.category!r}"
        )
    if decision == "reject":
        return schema, replace(request, status="rejected")
    if decision != "approve":
        raise ValueError(f"decision must be 'approve' or 'reject', got {decision!r}")
    if schema.field_by_label(request.label) is not None:
        return schema, replace(
            request, status="rejected", reason="duplicate_field_label"
        )
    new_field = FieldSpec(label=request.label, data_type=request.data_type)
    evolved = replace(
        schema, version=schema.version + 1, fields=schema.fields + (new_field,)
    )
    return evolved, replace(request, status="approved")

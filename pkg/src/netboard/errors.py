"""Service error hierarchy.

Every error carries a stable machine-readable ``code`` (the snake_case of the
class name) and an HTTP status used by the API layer. Raising one of these from
any module produces the same JSON envelope over the wire:
``{"error_code": ..., "message": ..., "details": ...}``.
"""

from __future__ import annotations

import re
from typing import Any

_CAMEL = re.compile(r"(?<!^)(?=[A-Z])")


class NetboardError(Exception):
    http_status = 400

    def __init__(self, message: str = "", details: Any = None):
        super().__init__(message or self.code)
        self.message = message or self.code
        self.details = details

    @property
    def code(self) -> str:
        return _CAMEL.sub("_", type(self).__name__).lower()

    def to_json(self) -> dict:
        payload = {"error_code": self.code, "message": self.message}
        if self.details is not None:
            payload["details"] = self.details
        return payload


# schema engine

class MalformedXml(NetboardError):
    pass


class UnknownAttribute(NetboardError):
    pass


class UnknownDataType(NetboardError):
    pass


class DuplicateFieldLabel(NetboardError):
    http_status = 409


class EmptySchema(NetboardError):
    pass


class CategoryMismatch(NetboardError):
    pass


class RequestNotPending(NetboardError):
    http_status = 409


class SchemaNotFound(NetboardError):
    http_status = 404


class ValidationFailed(NetboardError):
    http_status = 422


# identity / auth

class InvalidEmail(NetboardError):
    pass


class UnknownDomain(NetboardError):
    pass


class InvalidUsername(NetboardError):
    pass


class UsernameTaken(NetboardError):
    http_status = 409


class EmailAlreadyRegistered(NetboardError):
    http_status = 409


class WeakPassword(NetboardError):
    pass


class TokenUnknown(NetboardError):
    http_status = 404


class TokenExpired(NetboardError):
    http_status = 410


class TokenAlreadyUsed(NetboardError):
    http_status = 409


class InvalidCredentials(NetboardError):
    http_status = 401


class AuthRequired(NetboardError):
    http_status = 401


class Denied(NetboardError):
    http_status = 403


# marketplace

class AccountInactive(NetboardError):
    http_status = 403


class ListingNotFound(NetboardError):
    http_status = 404


class NotOwner(NetboardError):
    http_status = 403


class InvalidTransition(NetboardError):
    http_status = 409


class AlreadySold(NetboardError):
    http_status = 409


class SelfSale(NetboardError):
    pass


class BuyerNeverEngaged(NetboardError):
    http_status = 409


class UnknownUsername(NetboardError):
    http_status = 404


# search

class InvalidFilter(NetboardError):
    pass


# messaging

class ListingDeleted(NetboardError):
    http_status = 410


class SelfMessage(NetboardError):
    pass


class EmptyBody(NetboardError):
    pass


class BodyTooLong(NetboardError):
    pass


class NotParticipant(NetboardError):
    http_status = 403


class MessageNotFound(NetboardError):
    http_status = 404


class OutboxUnwritable(NetboardError):
    http_status = 500


# service

class ConfigInvalid(NetboardError):
    pass


class SchemaLoadFailed(NetboardError):
    pass


class PortUnavailable(NetboardError):
    pass


class UnknownRequestId(NetboardError):
    http_status = 404

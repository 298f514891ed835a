"""Domain error hierarchy.

Every error that can cross the API boundary has a stable string code equal
to its class name; the gateway serializes it verbatim into the error payload.
"""
from __future__ import annotations


class DomainError(Exception):
    """Base class for all errors with a wire-stable code."""

    http_status = 400

    def __init__(self, message: str = "", **extra):
        super().__init__(message or self.__class__.__name__)
        self.message = message or self.__class__.__name__
        self.extra = extra

    @property
    def code(self) -> str:
        return self.__class__.__name__

    def payload(self) -> dict:
        body = {"code": self.code, "message": self.message}
        body.update(self.extra)
        return body


class BadRequest(DomainError):
    """Malformed or missing request data not covered by a specific code."""


# geomath
class OutOfProjectionRange(DomainError):
    pass


# localization
class InsufficientBeacons(DomainError):
    pass


class DegenerateGeometry(DomainError):
    pass


class NoConvergence(DomainError):
    pass


class AmbiguousSolution(DomainError):
    pass


class EmptyInput(DomainError):
    pass


# geostore
class StaleUpdate(DomainError):
    http_status = 409


class RadiusOutOfRange(DomainError):
    pass


# identity
class DuplicateUsername(DomainError):
    http_status = 409


class MissingField(DomainError):
    pass


class InvalidEmail(DomainError):
    pass


class InvalidPhone(DomainError):
    pass


class BadCode(DomainError):
    pass


class Expired(DomainError):
    pass


class AlreadyActivated(DomainError):
    http_status = 409


class BadCredentials(DomainError):
    http_status = 401


class NotActivated(DomainError):
    http_status = 403


class UnknownUser(DomainError):
    http_status = 404


class Unauthorized(DomainError):
    http_status = 401


class ImmutableField(DomainError):
    pass


# social
class SelfFriendship(DomainError):
    pass


class AlreadyFriends(DomainError):
    http_status = 409


class NoPendingRequest(DomainError):
    pass


class DefaultGroupProtected(DomainError):
    pass


class DuplicateGroupName(DomainError):
    http_status = 409


class UnknownGroup(DomainError):
    http_status = 404


class NoFixForViewer(DomainError):
    pass


# messaging
class NotFriends(DomainError):
    http_status = 403


class BodyTooLarge(DomainError):
    pass


class TooLarge(DomainError):
    pass


class UnknownBlob(DomainError):
    http_status = 404


class NotYourMail(DomainError):
    http_status = 403


# content
class NotVisible(DomainError):
    http_status = 403


class TooLong(DomainError):
    pass


class AlreadyPublished(DomainError):
    http_status = 409


class UnknownAlbum(DomainError):
    http_status = 404


# localinfo
class UnknownCity(DomainError):
    http_status = 404


class ProviderUnavailable(DomainError):
    http_status = 502


class UnknownSection(DomainError):
    pass


class NotAdmin(DomainError):
    http_status = 403


class UnknownPost(DomainError):
    http_status = 404


class NotApproved(DomainError):
    pass


# gateway
class MalformedQuery(DomainError):
    pass


class TileOutOfRange(DomainError):
    pass


class UpstreamUnavailable(DomainError):
    http_status = 502


class CorruptLog(DomainError):
    """Raised internally by log recovery; never crosses the API boundary."""


def all_error_codes() -> set[str]:
    """Every registered wire code (class names of the DomainError tree)."""
    codes = set()
    stack = [DomainError]
    while stack:
        cls = stack.pop()
        codes.add(cls.__name__)
        stack.extend(cls.__subclasses__())
    codes.discard("DomainError")
    return codes

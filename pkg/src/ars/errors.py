"""Error hierarchy. Every error carries a stable machine code and the HTTP
status the service layer maps it to."""

from __future__ import annotations


class ArsError(Exception):
    code = "Error"
    http_status = 400

    def __init__(self, detail: str = ""):
        super().__init__(detail or self.code)
        self.detail = detail or self.code


# -- validation (422) --------------------------------------------------------

class ValidationError(ArsError):
    http_status = 422


class EmptyTextError(ValidationError):
    code = "EmptyText"


class TooFewOptionsError(ValidationError):
    code = "TooFewOptions"


class EmptyOptionLabelError(ValidationError):
    code = "EmptyOptionLabel"


class DuplicateQuestionInGroupError(ValidationError):
    code = "DuplicateQuestionInGroup"


class EmptyGroupError(ValidationError):
    code = "EmptyGroup"


class InvalidSelectionError(ValidationError):
    code = "InvalidSelection"


class EmptyFilterError(ValidationError):
    code = "EmptyFilter"


class ZeroWidthError(ValidationError):
    code = "ZeroWidth"


# -- unknown entities (404) --------------------------------------------------

class NotFoundError(ArsError):
    http_status = 404


class UnknownQuestionError(NotFoundError):
    code = "UnknownQuestion"


class UnknownGroupError(NotFoundError):
    code = "UnknownGroup"


class UnknownWindowError(NotFoundError):
    code = "UnknownWindow"


class UnknownQuestionInWindowError(NotFoundError):
    code = "UnknownQuestionInWindow"


# -- state conflicts (409) ---------------------------------------------------

class ConflictError(ArsError):
    http_status = 409


class GroupLockedError(ConflictError):
    code = "GroupLocked"


class WindowAlreadyOpenError(ConflictError):
    code = "WindowAlreadyOpen"


class WindowClosedError(ConflictError):
    code = "WindowClosed"


class AlreadyClosedError(ConflictError):
    code = "AlreadyClosed"


class NotPublishedError(ConflictError):
    code = "NotPublished"


# -- auth (401/403) ----------------------------------------------------------

class AuthRequiredError(ArsError):
    code = "AuthRequired"
    http_status = 401


class BadCredentialError(ArsError):
    code = "BadCredential"
    http_status = 401


class BadJoinCodeError(ArsError):
    code = "BadJoinCode"
    http_status = 403


class SubmitCapExceededError(ArsError):
    code = "SubmitCapExceeded"
    http_status = 403


# -- simulator ---------------------------------------------------------------

class TargetUnreachableError(ArsError):
    code = "TargetUnreachable"
    http_status = 502


class AuthFailedError(ArsError):
    code = "AuthFailed"
    http_status = 401


class OracleMismatchError(ArsError):
    code = "OracleMismatch"
    http_status = 500


# -- persistence (500) -------------------------------------------------------

class StorageError(ArsError):
    http_status = 500


class StorageFullError(StorageError):
    code = "StorageFull"


class SerializationFailureError(StorageError):
    code = "SerializationFailure"


class CorruptRecordError(StorageError):
    code = "CorruptRecord"

    def __init__(self, offset: int, detail: str = ""):
        super().__init__(detail or f"corrupt record at offset {offset}")
        self.offset = offset


class SnapshotOffsetMismatchError(StorageError):
    code = "SnapshotOffsetMismatch"

"""Teacher credential handling and anonymous participant tokens.

The shared teacher password is stored only as a salted scrypt hash
(memory-hard); verification is constant-time. Participant tokens are
128-bit random URL-safe strings carrying no identity.
"""

from __future__ import annotations

import hashlib
import hmac
import secrets
import threading
from dataclasses import dataclass
from typing import Optional

from ars.errors import AuthRequiredError, BadCredentialError

_SCRYPT_N = 2 ** 14
_SCRYPT_R = 8
_SCRYPT_P = 1


def hash_password(password: str) -> str:
    salt = secrets.token_bytes(16)
    digest = hashlib.scrypt(password.encode(), salt=salt,
                            n=_SCRYPT_N, r=_SCRYPT_R, p=_SCRYPT_P)
    return f"scrypt${_SCRYPT_N}${_SCRYPT_R}${_SCRYPT_P}${salt.hex()}${digest.hex()}"


def verify_password(password: str, stored: str) -> bool:
    try:
        scheme, n, r, p, salt_hex, digest_hex = stored.split("$")
        if scheme != "scrypt":
            return False
        digest = hashlib.scrypt(password.encode(), salt=bytes.fromhex(salt_hex),
                                n=int(n), r=int(r), p=int(p))
        return hmac.compare_digest(digest.hex(), digest_hex)
    except (ValueError, TypeError):
        return False


@dataclass
class ParticipantToken:
    token: str
    issued_at: int
    window_id: Optional[str]


class SessionStore:
    """Teacher sessions and participant tokens; in-memory, per process."""

    def __init__(self, ttl_min: int):
        self.ttl_ms = ttl_min * 60_000
        self._lock = threading.Lock()
        self._sessions: dict[str, int] = {}  # token -> expiry ms
        self._participants: dict[str, ParticipantToken] = {}
        self._submit_counts: dict[str, int] = {}

    def login(self, password: str, stored_hash: str, now_ms: int) -> tuple[str, int]:
        if not stored_hash or not verify_password(password, stored_hash):
            raise BadCredentialError("bad credentials")
        token = secrets.token_urlsafe(16)
        expires = now_ms + self.ttl_ms
        with self._lock:
            self._sessions[token] = expires
        return token, expires

    def require_teacher(self, token: str | None, now_ms: int) -> None:
        with self._lock:
            expiry = self._sessions.get(token or "")
            if expiry is None or expiry <= now_ms:
                self._sessions.pop(token or "", None)
                raise AuthRequiredError("teacher session required")

    def issue_participant(self, now_ms: int,
                          window_id: str | None = None) -> ParticipantToken:
        token = ParticipantToken(token=secrets.token_urlsafe(16),
                                 issued_at=now_ms, window_id=window_id)
        with self._lock:
            self._participants[token.token] = token
        return token

    def participant(self, token: str | None) -> ParticipantToken:
        with self._lock:
            pt = self._participants.get(token or "")
        if pt is None:
            raise AuthRequiredError("participant token required")
        return pt

    def count_submit(self, token: str) -> int:
        with self._lock:
            self._submit_counts[token] = self._submit_counts.get(token, 0) + 1
            return self._submit_counts[token]

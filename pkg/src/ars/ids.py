"""Opaque, sortable identifiers (ULID-style: ms timestamp + randomness)."""

from __future__ import annotations

import secrets
import time

_B32 = "0123456789ABCDEFGHJKMNPQRSTVWXYZ"  # Crockford

# join codes avoid ambiguous glyphs (0/O, 1/I/L)
JOIN_CODE_ALPHABET = "ABCDEFGHJKMNPQRSTUVWXYZ23456789"


def _b32(value: int, width: int) -> str:
    out = []
    for _ in range(width):
        out.append(_B32[value & 31])
        value >>= 5
    return "".join(reversed(out))


def new_id(prefix: str = "") -> str:
    ts = time.time_ns() // 1_000_000
    rand = secrets.randbits(80)
    body = _b32(ts, 10) + _b32(rand, 16)
    return f"{prefix}{body}" if prefix else body


def new_join_code(length: int = 6) -> str:
    return "".join(secrets.choice(JOIN_CODE_ALPHABET) for _ in range(length))

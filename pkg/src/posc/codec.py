"""Canonical serialization and hashing.

Every object that gets hashed or signed goes through ``canonical_json``:
sorted keys, compact separators, byte fields pre-encoded as hex.  sha256 is
the single 256-bit hash used throughout (identity digests, trie nodes,
randomness mixing, block/transaction ids).
"""

import hashlib
import json

from .errors import ValidationError

HASH_SIZE = 32


def sha256(*parts: bytes) -> bytes:
    h = hashlib.sha256()
    for part in parts:
        h.update(part)
    return h.digest()


def canonical_json(obj) -> bytes:
    """Stable byte form of a JSON-able object (sorted keys, no whitespace)."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":")).encode("utf-8")


def hash_obj(obj) -> bytes:
    return sha256(canonical_json(obj))


def to_hex(data: bytes) -> str:
    return data.hex()


def from_hex(text: str, expected_len: int | None = None) -> bytes:
    try:
        data = bytes.fromhex(text)
    except (ValueError, TypeError):
        raise ValidationError("invalid hex string") from None
    if expected_len is not None and len(data) != expected_len:
        raise ValidationError(
            "expected %d bytes, got %d" % (expected_len, len(data))
        )
    return data


def length_prefixed(*fields: bytes) -> bytes:
    """Concatenate byte fields, each preceded by its 4-byte big-endian length.

    Keeps field boundaries unambiguous so ("ab","c") and ("a","bc") never
    collide.
    """
    out = bytearray()
    for field in fields:
        out += len(field).to_bytes(4, "big")
        out += field
    return bytes(out)


def read_prefixed(data: bytes, count: int) -> list:
    """Parse exactly ``count`` length-prefixed fields; the buffer must be
    fully consumed.  Inverse of ``length_prefixed``."""
    fields = []
    offset = 0
    for _ in range(count):
        if offset + 4 > len(data):
            raise ValidationError("truncated length prefix")
        n = int.from_bytes(data[offset:offset + 4], "big")
        offset += 4
        if offset + n > len(data):
            raise ValidationError("truncated field")
        fields.append(data[offset:offset + n])
        offset += n
    if offset != len(data):
        raise ValidationError("trailing bytes after %d fields" % count)
    return fields


def u64_be(value: int) -> bytes:
    return int(value).to_bytes(8, "big")

#!/usr/bin/env python3
"""Independent ID-hash computation for the pinned test credential.

Uses only hashlib: sha256 over the 4-byte big-endian length-prefixed UTF-8
personal fields, in canonical field order.  The digest printed here is
frozen into tests/test_identity.py; rerun this script to regenerate.
"""
import hashlib

PERSONAL_FIELDS = [
    ("name", "Ada"),
    ("surname", "Lovelace"),
    ("residence", "12 St James Square, London"),
    ("birth_number", "1815-12-10/0042"),
    ("place_of_birth", "London"),
    ("nationality", "GB"),
    ("vc_id", bytes(range(32))),           # pinned 32-byte credential id
    ("issued_at", "2024-03-01"),           # dates as ISO strings
    ("expires_at", "2034-03-01"),
]


def length_prefixed(fields):
    out = bytearray()
    for field in fields:
        out += len(field).to_bytes(4, "big")
        out += field
    return bytes(out)


def main():
    payload = length_prefixed(
        [v if isinstance(v, bytes) else v.encode("utf-8")
         for _, v in PERSONAL_FIELDS])
    digest = hashlib.sha256(payload).hexdigest()
    print("payload length:", len(payload))
    print("id-hash:", digest)


if __name__ == "__main__":
    main()

"""Verifiable credentials and the identity digest derived from them.

A credential binds a set of personal attributes to a platform public key and
carries the issuer's signature.  The chain never sees the attributes: only
``derive_id_hash`` output (a digest over the personal fields) ever leaves the
holder's machine.
"""
from __future__ import annotations

import datetime as _dt
import json
from dataclasses import dataclass, replace

from ..codec import HASH_SIZE, from_hex, length_prefixed, sha256, to_hex
from ..errors import ValidationError
from ..keys import SIGNATURE_SIZE, SigningKey, verify_signature

# Personal attributes, in canonical order.  These and only these feed the
# identity digest, so two credentials for the same person collide regardless
# of platform key or issuer.
IDENTITY_FIELDS = (
    "name",
    "surname",
    "residence",
    "birth_number",
    "place_of_birth",
    "nationality",
    "vc_id",
    "issued_at",
    "expires_at",
)


@dataclass(frozen=True, order=True)
class IdHash:
    """32-byte identity digest; the on-chain account key."""

    digest: bytes

    def __post_init__(self):
        if not isinstance(self.digest, bytes) or len(self.digest) != HASH_SIZE:
            raise ValidationError("IdHash requires a %d-byte digest" % HASH_SIZE)

    @property
    def hex(self) -> str:
        return self.digest.hex()

    @classmethod
    def from_hex(cls, text: str) -> "IdHash":
        return cls(from_hex(text, HASH_SIZE))

    def __bytes__(self) -> bytes:
        return self.digest

    def __repr__(self) -> str:
        return "IdHash(%s)" % self.hex[:12]


@dataclass
class VerifiableCredential:
    name: str
    surname: str
    residence: str
    birth_number: str
    place_of_birth: str
    nationality: str
    vc_id: bytes              # 32-byte credential identifier
    issued_at: _dt.date
    expires_at: _dt.date
    platform_pubkey: bytes    # account key the holder will use on chain
    issuer_id: str
    issuer_signature: bytes = b""

    def validate(self) -> None:
        for name in ("name", "surname", "residence", "birth_number",
                     "place_of_birth", "nationality", "issuer_id"):
            value = getattr(self, name)
            if not isinstance(value, str) or not value:
                raise ValidationError("credential field %r must be a non-empty string" % name)
        if not isinstance(self.vc_id, bytes) or len(self.vc_id) != HASH_SIZE:
            raise ValidationError("vc_id must be %d bytes" % HASH_SIZE)
        if not isinstance(self.issued_at, _dt.date) or not isinstance(self.expires_at, _dt.date):
            raise ValidationError("issued_at/expires_at must be dates")
        if self.expires_at <= self.issued_at:
            raise ValidationError("expires_at must fall after issued_at")
        if not isinstance(self.platform_pubkey, bytes) or len(self.platform_pubkey) != 32:
            raise ValidationError("platform_pubkey must be 32 bytes")

    # -- byte encodings --------------------------------------------------

    def identity_payload(self) -> bytes:
        """Length-prefixed concatenation of the personal fields only."""
        return length_prefixed(*(_field_bytes(getattr(self, f)) for f in IDENTITY_FIELDS))

    def signing_payload(self) -> bytes:
        """Bytes the issuer signs: personal fields plus binding metadata."""
        return length_prefixed(
            *(_field_bytes(getattr(self, f)) for f in IDENTITY_FIELDS),
            self.platform_pubkey,
            self.issuer_id.encode("utf-8"),
        )

    # -- JSON fixture round trip ------------------------------------------

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "surname": self.surname,
            "residence": self.residence,
            "birth_number": self.birth_number,
            "place_of_birth": self.place_of_birth,
            "nationality": self.nationality,
            "vc_id": self.vc_id.hex(),
            "issued_at": self.issued_at.isoformat(),
            "expires_at": self.expires_at.isoformat(),
            "platform_pubkey": self.platform_pubkey.hex(),
            "issuer_id": self.issuer_id,
            "issuer_signature": self.issuer_signature.hex(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "VerifiableCredential":
        try:
            return cls(
                name=data["name"],
                surname=data["surname"],
                residence=data["residence"],
                birth_number=data["birth_number"],
                place_of_birth=data["place_of_birth"],
                nationality=data["nationality"],
                vc_id=from_hex(data["vc_id"], HASH_SIZE),
                issued_at=_dt.date.fromisoformat(data["issued_at"]),
                expires_at=_dt.date.fromisoformat(data["expires_at"]),
                platform_pubkey=from_hex(data["platform_pubkey"], 32),
                issuer_id=data["issuer_id"],
                issuer_signature=from_hex(data.get("issuer_signature", ""))
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError("bad credential fixture: %s" % exc) from None

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "VerifiableCredential":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def _field_bytes(value) -> bytes:
    if isinstance(value, bytes):
        return value
    if isinstance(value, _dt.date):
        return value.isoformat().encode("utf-8")
    if isinstance(value, str):
        return value.encode("utf-8")
    raise ValidationError("unsupported credential field type %r" % type(value).__name__)


def derive_id_hash(vc: VerifiableCredential) -> IdHash:
    """Digest over the personal fields; platform key and issuer excluded,
    so re-registering under a fresh key still maps to the same identity."""
    vc.validate()
    return IdHash(sha256(vc.identity_payload()))


def issue_credential(issuer_key: SigningKey, issuer_id: str, *, platform_pubkey: bytes,
                     **attributes) -> VerifiableCredential:
    """Build and sign a credential.  ``attributes`` supplies the personal
    fields (missing vc_id is derived from the attribute content)."""
    if "vc_id" not in attributes:
        attributes["vc_id"] = sha256(
            b"vc-id",
            length_prefixed(*(_field_bytes(v) for _, v in sorted(attributes.items()))),
            platform_pubkey,
        )
    vc = VerifiableCredential(platform_pubkey=platform_pubkey, issuer_id=issuer_id,
                              **attributes)
    vc.validate()
    vc.issuer_signature = issuer_key.sign(vc.signing_payload())
    return vc


def verify_issuer_signature(vc: VerifiableCredential, issuer_pubkey: bytes) -> bool:
    if len(vc.issuer_signature) != SIGNATURE_SIZE:
        return False
    return verify_signature(issuer_pubkey, vc.signing_payload(), vc.issuer_signature)


def strip_signature(vc: VerifiableCredential) -> VerifiableCredential:
    """Copy without the issuer signature (useful for tamper tests)."""
    return replace(vc, issuer_signature=b"")

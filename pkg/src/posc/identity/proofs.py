"""Simulated zero-knowledge identity proofs.

A real deployment would prove, in zero knowledge, that the registrant holds a
credential signed by an accepted issuer whose personal fields hash to the
claimed identity digest.  Here the proof system is replaced by a keyed-MAC
oracle: only the oracle (standing in for the trusted prover setup) can mint
valid blobs, verification is a pure recomputation, and no personal attribute
appears in the statement or the blob.  The blob length matches the size of a
Groth16 proof plus its public inputs (288 bytes).
"""
from __future__ import annotations

import hmac
from dataclasses import dataclass
from hashlib import sha256 as _sha256

from ..codec import HASH_SIZE, from_hex, length_prefixed, to_hex
from ..errors import InvalidProof, UnknownIssuer, ValidationError
from ..keys import SigningKey
from .credentials import IdHash, VerifiableCredential, derive_id_hash, verify_issuer_signature

PROOF_BLOB_SIZE = 288
_MAC_SIZE = 32
_ROUNDS = PROOF_BLOB_SIZE // _MAC_SIZE  # 9 keyed-MAC blocks


@dataclass(frozen=True)
class ProofStatement:
    """Public inputs of the proof: what the chain learns, nothing more."""

    id_hash: IdHash
    platform_pubkey: bytes
    issuer_id: str

    def payload(self) -> bytes:
        return length_prefixed(
            self.id_hash.digest,
            self.platform_pubkey,
            self.issuer_id.encode("utf-8"),
        )

    def to_dict(self) -> dict:
        return {
            "id_hash": self.id_hash.hex,
            "platform_pubkey": self.platform_pubkey.hex(),
            "issuer_id": self.issuer_id,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ProofStatement":
        return cls(
            id_hash=IdHash.from_hex(data["id_hash"]),
            platform_pubkey=from_hex(data["platform_pubkey"], 32),
            issuer_id=data["issuer_id"],
        )


@dataclass(frozen=True)
class IdentityProof:
    statement: ProofStatement
    blob: bytes

    def __post_init__(self):
        if len(self.blob) != PROOF_BLOB_SIZE:
            raise ValidationError(
                "proof blob must be exactly %d bytes, got %d"
                % (PROOF_BLOB_SIZE, len(self.blob)))

    def to_dict(self) -> dict:
        return {"statement": self.statement.to_dict(), "blob": to_hex(self.blob)}

    @classmethod
    def from_dict(cls, data: dict) -> "IdentityProof":
        return cls(statement=ProofStatement.from_dict(data["statement"]),
                   blob=from_hex(data["blob"], PROOF_BLOB_SIZE))


class ProvingOracle:
    """Holds the proving secret.  ``prove`` enforces everything a real
    circuit would (credential validity, issuer acceptance, key possession);
    ``expand`` is the MAC that an adversary without the secret cannot
    reproduce."""

    def __init__(self, secret: bytes):
        if not secret:
            raise ValidationError("oracle secret must be non-empty")
        self._secret = bytes(secret)

    # -- blob construction -------------------------------------------------

    def expand(self, statement: ProofStatement) -> bytes:
        base = statement.payload()
        parts = []
        for counter in range(_ROUNDS):
            parts.append(hmac.new(self._secret, base + bytes([counter]),
                                  _sha256).digest())
        return b"".join(parts)

    # -- prover / verifier ---------------------------------------------------

    def prove(self, vc: VerifiableCredential, platform_key: SigningKey,
              registry) -> IdentityProof:
        """Produce a proof for ``vc``.

        Raises ``UnknownIssuer`` if the issuer is not accepted and
        ``InvalidProof`` if the credential or key material does not line up;
        both model the circuit refusing to produce a witness.
        """
        vc.validate()
        issuer_pub = registry.public_key(vc.issuer_id)  # raises UnknownIssuer
        if not verify_issuer_signature(vc, issuer_pub):
            raise InvalidProof("issuer signature does not verify")
        if platform_key.public_key != vc.platform_pubkey:
            raise InvalidProof("platform key does not match the credential")
        statement = ProofStatement(
            id_hash=derive_id_hash(vc),
            platform_pubkey=vc.platform_pubkey,
            issuer_id=vc.issuer_id,
        )
        return IdentityProof(statement=statement, blob=self.expand(statement))

    def check_blob(self, proof: IdentityProof) -> bool:
        expected = self.expand(proof.statement)
        return hmac.compare_digest(expected, proof.blob)


def verify_identity_proof(proof: IdentityProof, registry, oracle: ProvingOracle) -> bool:
    """Pure verification: statement + blob + issuer set, no holder secrets."""
    if len(proof.blob) != PROOF_BLOB_SIZE:
        return False
    if not registry.is_accepted(proof.statement.issuer_id):
        return False
    return oracle.check_blob(proof)

"""Identity layer: credentials, proofs, issuer governance, the account trie
and registration."""

from .credentials import (
    IdHash,
    VerifiableCredential,
    derive_id_hash,
    issue_credential,
    verify_issuer_signature,
)
from .proofs import (
    PROOF_BLOB_SIZE,
    IdentityProof,
    ProofStatement,
    ProvingOracle,
    verify_identity_proof,
)
from .registration import register_identity, registration_signing_bytes, sign_registration
from .registry import ADD_ISSUER, REMOVE_ISSUER, GovernanceDecision, IssuerRegistry
from .trie import Trie

__all__ = [
    "IdHash",
    "VerifiableCredential",
    "derive_id_hash",
    "issue_credential",
    "verify_issuer_signature",
    "PROOF_BLOB_SIZE",
    "IdentityProof",
    "ProofStatement",
    "ProvingOracle",
    "verify_identity_proof",
    "register_identity",
    "registration_signing_bytes",
    "sign_registration",
    "ADD_ISSUER",
    "REMOVE_ISSUER",
    "GovernanceDecision",
    "IssuerRegistry",
    "Trie",
]

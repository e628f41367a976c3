"""Identity registration: proof in, account out.

The chain-side half of onboarding.  A registrant shows an identity proof
(the statement binds id digest, platform key and issuer) plus a signature
with the platform key; the state gains one account keyed by the id digest.
Duplicate digests are rejected by the trie itself, so one person cannot
hold two accounts no matter how many credentials or keys they present.
"""
from __future__ import annotations

from ..errors import DuplicateIdentity, InvalidProof, Unauthorized
from ..keys import verify_signature
from .proofs import IdentityProof, ProvingOracle, verify_identity_proof

REGISTRATION_CONTEXT = b"register identity v1"


def registration_signing_bytes(proof: IdentityProof) -> bytes:
    return REGISTRATION_CONTEXT + proof.statement.payload()


def sign_registration(proof: IdentityProof, platform_key) -> bytes:
    return platform_key.sign(registration_signing_bytes(proof))


def register_identity(state, proof: IdentityProof, registration_signature: bytes,
                      oracle: ProvingOracle):
    """Validate and apply a registration against ``state``.

    Raises ``InvalidProof`` (bad blob or unaccepted issuer), ``Unauthorized``
    (registration not signed by the statement's platform key), or
    ``DuplicateIdentity`` (digest already registered).  Returns the new
    account.
    """
    if not verify_identity_proof(proof, state.issuer_registry, oracle):
        raise InvalidProof("identity proof failed verification")
    if not verify_signature(proof.statement.platform_pubkey,
                            registration_signing_bytes(proof),
                            registration_signature):
        raise Unauthorized("registration is not signed by the platform key")
    from ..capital import new_account

    id_hash = proof.statement.id_hash
    if state.trie.get(id_hash.digest) is not None:
        raise DuplicateIdentity("identity digest already registered")
    acct = new_account(state.params, id_hash, proof.statement.platform_pubkey)
    state.insert_account(acct)
    return acct

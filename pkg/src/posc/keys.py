"""Ed25519 signing helpers.

Ed25519 signatures are deterministic (same key + message -> same bytes),
which keeps chain files and seeded simulation reports byte-identical across
replays.  Keys are 32-byte seeds, so simulation identities can be derived
from the run seed.
"""

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)

from .codec import sha256

KEY_SIZE = 32
SIGNATURE_SIZE = 64


class SigningKey:
    """A private key plus its public half, addressed by raw 32-byte seeds."""

    def __init__(self, seed: bytes):
        if len(seed) != KEY_SIZE:
            raise ValueError("seed must be 32 bytes")
        self._seed = seed
        self._sk = Ed25519PrivateKey.from_private_bytes(seed)
        self.public_key = self._sk.public_key().public_bytes_raw()

    @classmethod
    def from_label(cls, namespace: bytes, *labels: bytes) -> "SigningKey":
        """Deterministic key for simulations: seed = H(namespace, labels...)."""
        return cls(sha256(namespace, *labels))

    @property
    def seed(self) -> bytes:
        return self._seed

    def sign(self, message: bytes) -> bytes:
        return self._sk.sign(message)


def verify_signature(public_key: bytes, message: bytes, signature: bytes) -> bool:
    if len(public_key) != KEY_SIZE or len(signature) != SIGNATURE_SIZE:
        return False
    try:
        Ed25519PublicKey.from_public_bytes(public_key).verify(signature, message)
        return True
    except (InvalidSignature, ValueError):
        return False

"""Proof-of-social-capital consensus: identity registration, endorsement
capital, weighted leader election, a replayable ledger and a deterministic
network simulator."""

__version__ = "0.1.0"

from .params import DEFAULT_PARAMS, ProtocolParams

__all__ = ["DEFAULT_PARAMS", "ProtocolParams", "__version__"]

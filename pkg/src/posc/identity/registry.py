"""Accepted-issuer registry, mutated only through recorded governance votes.

Adding an issuer needs more than half of the cast voting weight; removal is
more disruptive (it strands credentials) and needs at least two thirds.
Every applied decision is appended to an audit log, including the genesis
bootstrap entries.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from ..codec import from_hex
from ..errors import GovernanceRejected, UnknownIssuer, ValidationError
from ..keys import KEY_SIZE

ADD_ISSUER = "add_issuer"
REMOVE_ISSUER = "remove_issuer"


@dataclass(frozen=True)
class GovernanceDecision:
    action: str                 # ADD_ISSUER or REMOVE_ISSUER
    issuer_id: str
    public_key: bytes = b""     # required for additions
    approving_weight: float = 0.0
    total_weight: float = 0.0

    def to_dict(self) -> dict:
        return {
            "action": self.action,
            "issuer_id": self.issuer_id,
            "public_key": self.public_key.hex(),
            "approving_weight": self.approving_weight,
            "total_weight": self.total_weight,
        }


class IssuerRegistry:
    def __init__(self):
        self._issuers: dict[str, bytes] = {}
        self.log: list[dict] = []

    # -- queries -----------------------------------------------------------

    def is_accepted(self, issuer_id: str) -> bool:
        return issuer_id in self._issuers

    def public_key(self, issuer_id: str) -> bytes:
        try:
            return self._issuers[issuer_id]
        except KeyError:
            raise UnknownIssuer("issuer %r is not accepted" % issuer_id) from None

    def issuer_ids(self) -> list[str]:
        return sorted(self._issuers)

    def __len__(self) -> int:
        return len(self._issuers)

    # -- mutation ------------------------------------------------------------

    def bootstrap(self, issuer_id: str, public_key: bytes) -> None:
        """Genesis entry: recorded as a unanimous decision."""
        self.apply(GovernanceDecision(
            action=ADD_ISSUER, issuer_id=issuer_id, public_key=public_key,
            approving_weight=1.0, total_weight=1.0))

    def apply(self, decision: GovernanceDecision) -> None:
        if decision.total_weight <= 0:
            raise GovernanceRejected("total voting weight must be positive")
        if decision.action == ADD_ISSUER:
            if len(decision.public_key) != KEY_SIZE:
                raise ValidationError("issuer public key must be %d bytes" % KEY_SIZE)
            if 2 * decision.approving_weight <= decision.total_weight:
                raise GovernanceRejected(
                    "adding an issuer needs a strict majority "
                    "(%g of %g cast)" % (decision.approving_weight, decision.total_weight))
            self._issuers[decision.issuer_id] = decision.public_key
        elif decision.action == REMOVE_ISSUER:
            if decision.issuer_id not in self._issuers:
                raise UnknownIssuer("cannot remove unknown issuer %r" % decision.issuer_id)
            if 3 * decision.approving_weight < 2 * decision.total_weight:
                raise GovernanceRejected(
                    "removing an issuer needs a two-thirds supermajority "
                    "(%g of %g cast)" % (decision.approving_weight, decision.total_weight))
            del self._issuers[decision.issuer_id]
        else:
            raise ValidationError("unknown governance action %r" % decision.action)
        self.log.append(decision.to_dict())

    # -- snapshot -------------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "issuers": {iid: key.hex() for iid, key in sorted(self._issuers.items())},
            "log": list(self.log),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "IssuerRegistry":
        reg = cls()
        reg._issuers = {iid: from_hex(key, KEY_SIZE)
                        for iid, key in data.get("issuers", {}).items()}
        reg.log = list(data.get("log", []))
        return reg

    def copy(self) -> "IssuerRegistry":
        dup = IssuerRegistry()
        dup._issuers = dict(self._issuers)
        dup.log = list(self.log)
        return dup

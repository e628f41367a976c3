"""Social-capital accounting.

Every registered identity holds a fixed passive budget.  Followers spend it
by endorsing creators; endorsed capital becomes the creator's *active*
capital after a settlement delay measured in epochs.  Consensus weight is a
concave function of active capital (``sqrt`` by default), which compresses
whale advantage; penalties tighten the curve via a divisor or a switch to
the cube root.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .codec import canonical_json, from_hex
from .errors import (
    BadSignature,
    EmptyValidatorSet,
    InsufficientBudget,
    InsufficientTokens,
    NothingToReassign,
    SponsorNotCreator,
    UnknownAccount,
    ValidationError,
)
from .identity.credentials import IdHash
from .keys import verify_signature
from .params import ProtocolParams

SCALING_FUNCTIONS = ("sqrt", "log2", "cbrt")

MINOR = "minor"
MAJOR = "major"

ROLE_FOLLOWER = "follower"
ROLE_CREATOR = "creator"

# validator lifecycle, mirrored into the account record so the state root
# commits to it
VS_NONE = "none"
VS_PENDING = "pending"
VS_ACTIVE = "active"
VS_EXITED = "exited"
VS_SLASHED = "slashed"


def _scale_scalar(function: str, x: float) -> float:
    if function == "sqrt":
        return float(np.sqrt(x))
    if function == "log2":
        return float(np.log2(1.0 + x))
    if function == "cbrt":
        return float(np.cbrt(x))
    raise ValidationError("unknown scaling function %r" % function)


@dataclass(frozen=True)
class ScalingSpec:
    """Concave map from active capital to consensus weight, with optional
    penalty state (divisor, expiry, and the clean spec to restore)."""

    function: str = "sqrt"
    divisor: float = 1.0
    expiry_epoch: int | None = None
    restore_function: str | None = None
    restore_divisor: float | None = None

    def __post_init__(self):
        if self.function not in SCALING_FUNCTIONS:
            raise ValidationError("unknown scaling function %r" % self.function)
        if self.divisor <= 0:
            raise ValidationError("scaling divisor must be positive")

    @property
    def penalized(self) -> bool:
        return self.expiry_epoch is not None

    def to_dict(self) -> dict:
        return {
            "function": self.function,
            "divisor": self.divisor,
            "expiry_epoch": self.expiry_epoch,
            "restore_function": self.restore_function,
            "restore_divisor": self.restore_divisor,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ScalingSpec":
        return cls(
            function=data["function"],
            divisor=data["divisor"],
            expiry_epoch=data.get("expiry_epoch"),
            restore_function=data.get("restore_function"),
            restore_divisor=data.get("restore_divisor"),
        )


def effective_capital(active: float, spec: ScalingSpec) -> float:
    """Scaled consensus weight of ``active`` capital units."""
    if active < 0:
        raise ValidationError("active capital cannot be negative")
    return _scale_scalar(spec.function, float(active)) / spec.divisor


def apply_penalty(spec: ScalingSpec, severity: str, current_epoch: int,
                  params: ProtocolParams) -> ScalingSpec:
    """Tighten a scaling spec.  Minor offenses double the divisor; major
    offenses quadruple it and drop the curve to the cube root.  Stacked
    penalties multiply divisors; the pre-penalty spec is kept for restore."""
    if severity == MINOR:
        new_function = spec.function
        new_divisor = spec.divisor * params.penalty_minor_factor
    elif severity == MAJOR:
        new_function = "cbrt"
        new_divisor = spec.divisor * params.penalty_major_factor
    else:
        raise ValidationError("unknown penalty severity %r" % severity)
    if spec.penalized:
        restore_function = spec.restore_function
        restore_divisor = spec.restore_divisor
    else:
        restore_function = spec.function
        restore_divisor = spec.divisor
    return ScalingSpec(
        function=new_function,
        divisor=new_divisor,
        expiry_epoch=current_epoch + params.penalty_epochs,
        restore_function=restore_function,
        restore_divisor=restore_divisor,
    )


def restored_spec(spec: ScalingSpec) -> ScalingSpec:
    if not spec.penalized:
        return spec
    return ScalingSpec(function=spec.restore_function, divisor=spec.restore_divisor)


@dataclass
class PendingTransfer:
    amount: int
    effective_epoch: int
    follower: str            # hex id of the endorsing follower
    kind: str                # "endorse" or "reassign"
    source: str | None = None  # previous creator for reassignments

    def to_dict(self) -> dict:
        return {
            "amount": self.amount,
            "effective_epoch": self.effective_epoch,
            "follower": self.follower,
            "kind": self.kind,
            "source": self.source,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PendingTransfer":
        return cls(amount=data["amount"], effective_epoch=data["effective_epoch"],
                   follower=data["follower"], kind=data["kind"],
                   source=data.get("source"))


@dataclass
class Account:
    id_hash: IdHash
    platform_pubkey: bytes
    role: str = ROLE_FOLLOWER
    passive_remaining: int = 0
    active_received: int = 0
    token_balance: float = 0.0
    scaling: ScalingSpec = field(default_factory=ScalingSpec)
    pending: list = field(default_factory=list)
    received_from: dict = field(default_factory=dict)
    validator_status: str = VS_NONE

    def pending_total(self) -> int:
        return sum(p.amount for p in self.pending)

    def effective(self) -> float:
        return effective_capital(self.active_received, self.scaling)

    def to_dict(self) -> dict:
        return {
            "id_hash": self.id_hash.hex,
            "platform_pubkey": self.platform_pubkey.hex(),
            "role": self.role,
            "passive_remaining": self.passive_remaining,
            "active_received": self.active_received,
            "token_balance": self.token_balance,
            "scaling": self.scaling.to_dict(),
            "pending": [p.to_dict() for p in self.pending],
            "received_from": {k: v for k, v in sorted(self.received_from.items())},
            "validator_status": self.validator_status,
        }

    def to_bytes(self) -> bytes:
        return canonical_json(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> "Account":
        return cls(
            id_hash=IdHash.from_hex(data["id_hash"]),
            platform_pubkey=from_hex(data["platform_pubkey"], 32),
            role=data["role"],
            passive_remaining=data["passive_remaining"],
            active_received=data["active_received"],
            token_balance=data["token_balance"],
            scaling=ScalingSpec.from_dict(data["scaling"]),
            pending=[PendingTransfer.from_dict(p) for p in data["pending"]],
            received_from=dict(data["received_from"]),
            validator_status=data.get("validator_status", VS_NONE),
        )

    def clone(self) -> "Account":
        return replace(
            self,
            pending=[replace(p) for p in self.pending],
            received_from=dict(self.received_from),
        )


@dataclass(frozen=True)
class Endorsement:
    """Grant of passive capital from follower to creator.  Carried on chain
    as a sponsored meta-transaction: the creator co-signs and funds the fee,
    so followers never need tokens."""

    follower: IdHash
    creator: IdHash
    sponsor: IdHash
    amount: int
    fee: float = 0.0
    submitted_epoch: int = 0
    follower_signature: bytes = b""
    sponsor_signature: bytes = b""

    def payload(self) -> bytes:
        return canonical_json({
            "kind": "endorse",
            "follower": self.follower.hex,
            "creator": self.creator.hex,
            "sponsor": self.sponsor.hex,
            "amount": self.amount,
            "fee": self.fee,
            "submitted_epoch": self.submitted_epoch,
        })


@dataclass(frozen=True)
class Reassignment:
    """Moves settled endorsement from one creator to another.  Sponsored by
    the receiving creator."""

    follower: IdHash
    from_creator: IdHash
    to_creator: IdHash
    sponsor: IdHash
    amount: int
    fee: float = 0.0
    submitted_epoch: int = 0
    follower_signature: bytes = b""
    sponsor_signature: bytes = b""

    def payload(self) -> bytes:
        return canonical_json({
            "kind": "reassign",
            "follower": self.follower.hex,
            "from_creator": self.from_creator.hex,
            "to_creator": self.to_creator.hex,
            "sponsor": self.sponsor.hex,
            "amount": self.amount,
            "fee": self.fee,
            "submitted_epoch": self.submitted_epoch,
        })


def new_account(params: ProtocolParams, id_hash: IdHash, platform_pubkey: bytes) -> Account:
    """Fresh account with the full passive budget and the default curve."""
    return Account(
        id_hash=id_hash,
        platform_pubkey=platform_pubkey,
        passive_remaining=params.passive_budget,
        scaling=ScalingSpec(function=params.scaling_function),
    )


def sign_endorsement(e: Endorsement, follower_key, sponsor_key) -> Endorsement:
    payload = e.payload()
    return replace(e, follower_signature=follower_key.sign(payload),
                   sponsor_signature=sponsor_key.sign(payload))


def sign_reassignment(r: Reassignment, follower_key, sponsor_key) -> Reassignment:
    payload = r.payload()
    return replace(r, follower_signature=follower_key.sign(payload),
                   sponsor_signature=sponsor_key.sign(payload))


class CapitalLedger:
    """Account book: holds every account and applies capital operations.
    All iteration is in sorted id order so state transitions replay
    identically."""

    def __init__(self, params: ProtocolParams):
        self.params = params
        self.accounts: dict[bytes, Account] = {}

    # -- account access ------------------------------------------------------

    def get(self, id_hash: IdHash) -> Account:
        try:
            return self.accounts[id_hash.digest]
        except KeyError:
            raise UnknownAccount("no account for %r" % id_hash) from None

    def has(self, id_hash: IdHash) -> bool:
        return id_hash.digest in self.accounts

    def add_account(self, id_hash: IdHash, platform_pubkey: bytes) -> Account:
        acct = new_account(self.params, id_hash, platform_pubkey)
        self.accounts[id_hash.digest] = acct
        return acct

    def sorted_accounts(self) -> list:
        return [self.accounts[k] for k in sorted(self.accounts)]

    # -- operations ------------------------------------------------------------

    def endorse(self, e: Endorsement, current_epoch: int) -> None:
        follower = self.get(e.follower)
        creator = self.get(e.creator)
        if e.sponsor != e.creator:
            raise SponsorNotCreator("endorsement sponsor must be the endorsed creator")
        if e.follower == e.creator:
            raise ValidationError("self-endorsement is not allowed")
        payload = e.payload()
        if not verify_signature(follower.platform_pubkey, payload, e.follower_signature):
            raise BadSignature("follower signature invalid")
        if not verify_signature(creator.platform_pubkey, payload, e.sponsor_signature):
            raise BadSignature("sponsor signature invalid")
        if not isinstance(e.amount, int) or e.amount <= 0:
            raise ValidationError("endorsement amount must be a positive integer")
        if e.amount > follower.passive_remaining:
            raise InsufficientBudget(
                "amount %d exceeds remaining passive budget %d"
                % (e.amount, follower.passive_remaining))
        self._charge_fee(creator, e.fee)
        follower.passive_remaining -= e.amount
        creator.pending.append(PendingTransfer(
            amount=e.amount,
            effective_epoch=current_epoch + self.params.redistribution_delay_epochs,
            follower=e.follower.hex,
            kind="endorse",
        ))

    def reassign(self, r: Reassignment, current_epoch: int) -> None:
        follower = self.get(r.follower)
        old = self.get(r.from_creator)
        new = self.get(r.to_creator)
        if r.sponsor != r.to_creator:
            raise SponsorNotCreator("reassignment sponsor must be the receiving creator")
        if r.from_creator == r.to_creator:
            raise ValidationError("reassignment must change the creator")
        payload = r.payload()
        if not verify_signature(follower.platform_pubkey, payload, r.follower_signature):
            raise BadSignature("follower signature invalid")
        if not verify_signature(new.platform_pubkey, payload, r.sponsor_signature):
            raise BadSignature("sponsor signature invalid")
        if not isinstance(r.amount, int) or r.amount <= 0:
            raise ValidationError("reassignment amount must be a positive integer")
        granted = old.received_from.get(r.follower.hex, 0)
        if granted < r.amount:
            raise NothingToReassign(
                "follower has %d settled units with this creator, asked to move %d"
                % (granted, r.amount))
        self._charge_fee(new, r.fee)
        old.active_received -= r.amount
        if granted == r.amount:
            del old.received_from[r.follower.hex]
        else:
            old.received_from[r.follower.hex] = granted - r.amount
        new.pending.append(PendingTransfer(
            amount=r.amount,
            effective_epoch=current_epoch + self.params.redistribution_delay_epochs,
            follower=r.follower.hex,
            kind="reassign",
            source=r.from_creator.hex,
        ))

    def _charge_fee(self, sponsor: Account, fee: float) -> None:
        if fee < 0:
            raise ValidationError("fee cannot be negative")
        if fee > sponsor.token_balance:
            raise InsufficientTokens(
                "sponsor balance %g cannot cover fee %g" % (sponsor.token_balance, fee))
        sponsor.token_balance -= fee

    def settle_epoch(self, epoch: int) -> list:
        """Apply every queued transfer whose effective epoch has arrived.
        Safe to call repeatedly for the same epoch.  Returns the accounts
        that changed."""
        touched = []
        for acct in self.sorted_accounts():
            if not acct.pending:
                continue
            due = [p for p in acct.pending if p.effective_epoch <= epoch]
            if not due:
                continue
            acct.pending = [p for p in acct.pending if p.effective_epoch > epoch]
            for p in due:
                acct.active_received += p.amount
                acct.received_from[p.follower] = acct.received_from.get(p.follower, 0) + p.amount
            acct.role = ROLE_CREATOR
            touched.append(acct)
        return touched

    def expire_penalties(self, epoch: int) -> list:
        """Restore scaling specs whose penalty window has ended."""
        touched = []
        for acct in self.sorted_accounts():
            spec = acct.scaling
            if spec.penalized and epoch >= spec.expiry_epoch:
                acct.scaling = restored_spec(spec)
                touched.append(acct)
        return touched

    def penalize(self, id_hash: IdHash, severity: str, current_epoch: int) -> Account:
        acct = self.get(id_hash)
        acct.scaling = apply_penalty(acct.scaling, severity, current_epoch, self.params)
        return acct

    # -- invariants / aggregates ------------------------------------------------

    def conservation_total(self) -> int:
        """Capital units in existence: passive + settled active + in flight.
        Must always equal ``accounts × passive_budget``."""
        total = 0
        for acct in self.accounts.values():
            total += acct.passive_remaining + acct.active_received + acct.pending_total()
        return total

    def meets_participation_threshold(self, id_hash: IdHash) -> bool:
        acct = self.get(id_hash)
        return acct.active_received > self.params.participation_threshold


def meets_participation_threshold(active: float, params: ProtocolParams) -> bool:
    """Strict inequality: capital exactly at the threshold does not qualify."""
    return active > params.participation_threshold


def consensus_power(entries, spec, ndigits: int = 12) -> dict:
    """Normalized consensus power for ``entries`` of ``(id, active)`` pairs.

    ``spec`` is either a single ``ScalingSpec`` for everyone or a mapping
    from id to spec.  Weights are normalized to sum to 1 and rounded
    half-even at 1e-12 to keep replays byte-stable.
    """
    if not entries:
        raise EmptyValidatorSet("no validators supplied")
    effective = []
    for vid, active in entries:
        s = spec[vid] if isinstance(spec, dict) else spec
        effective.append(effective_capital(active, s))
    total = sum(effective)
    if total <= 0.0:
        raise EmptyValidatorSet("no validator has positive effective capital")
    return {vid: round(e / total, ndigits)
            for (vid, _), e in zip(entries, effective)}


def quadratic_voting_weight(budget_spent: float) -> float:
    """Vote weight for quadratic voting: the square root of units spent."""
    if budget_spent < 0:
        raise ValidationError("spent budget cannot be negative")
    return float(np.sqrt(budget_spent))

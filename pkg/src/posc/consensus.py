"""Leader election, randomness, checkpoints and offense handling.

Randomness is a commit-reveal accumulator: proposers pre-commit to a hash
and later disclose the preimage, which is folded into the mix.  Election for
an epoch samples the cumulative-weight line with the mix frozen at the epoch
boundary, so schedules are known one epoch ahead (and a targeted-delay
adversary has something to aim at) while reveals keep future epochs
unpredictable.
"""
from __future__ import annotations

import bisect
from dataclasses import dataclass, field, replace

from .codec import HASH_SIZE, canonical_json, from_hex, hash_obj, sha256, u64_be
from .errors import (
    AlreadyMember,
    BadEvidence,
    BelowThreshold,
    CommitmentMismatch,
    DoubleAttestation,
    EmptyValidatorSet,
    NoCommitment,
    ValidationError,
)
from .identity.credentials import IdHash
from .keys import verify_signature
from .params import ProtocolParams

GENESIS_MIX = sha256(b"randao genesis mix")

# validator entry states
PENDING = "pending"
ACTIVE = "active"
EXITED = "exited"
SLASHED = "slashed"

OFFENSE_EQUIVOCATION = "equivocation"
OFFENSE_INVALID_BLOCK = "invalid_block"
OFFENSE_INACTIVITY = "inactivity"
OFFENSE_DOUBLE_ATTESTATION = "double_attestation"

OFFENSE_SEVERITY = {
    OFFENSE_EQUIVOCATION: "major",
    OFFENSE_INVALID_BLOCK: "major",
    OFFENSE_INACTIVITY: "minor",
    OFFENSE_DOUBLE_ATTESTATION: "minor",
}


# ---------------------------------------------------------------------------
# randomness
# ---------------------------------------------------------------------------

class RandaoState:
    """Commit-reveal accumulator.  ``mix`` only ever moves by folding in a
    revealed preimage of a stored commitment."""

    def __init__(self, mix: bytes = GENESIS_MIX):
        self.mix = mix
        self.commitments: dict[bytes, bytes] = {}

    def commit(self, validator: IdHash, commitment: bytes) -> None:
        if len(commitment) != HASH_SIZE:
            raise ValidationError("commitment must be %d bytes" % HASH_SIZE)
        self.commitments[validator.digest] = commitment

    def reveal(self, validator: IdHash, reveal: bytes) -> bytes:
        """Check ``reveal`` against the stored commitment and fold it into
        the mix.  The reveal becomes the validator's next commitment (hash
        chains walk backwards), so one commit covers many proposals.
        Returns the new mix."""
        stored = self.commitments.get(validator.digest)
        if stored is None:
            raise NoCommitment("validator has no outstanding commitment")
        if sha256(reveal) != stored:
            raise CommitmentMismatch("reveal does not hash to the commitment")
        self.commitments[validator.digest] = reveal
        self.mix = sha256(self.mix, reveal)
        return self.mix

    def has_commitment(self, validator: IdHash) -> bool:
        return validator.digest in self.commitments

    def clone(self) -> "RandaoState":
        dup = RandaoState(self.mix)
        dup.commitments = dict(self.commitments)
        return dup

    def to_dict(self) -> dict:
        return {
            "mix": self.mix.hex(),
            "commitments": {k.hex(): v.hex() for k, v in sorted(self.commitments.items())},
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RandaoState":
        state = cls(from_hex(data["mix"], HASH_SIZE))
        state.commitments = {bytes.fromhex(k): from_hex(v, HASH_SIZE)
                             for k, v in data["commitments"].items()}
        return state


def commitment_of(reveal: bytes) -> bytes:
    return sha256(reveal)


class RevealSchedule:
    """Hash-chain commitments for one validator.

    The genesis commitment is ``H^n(base)``; the k-th proposal reveals
    ``H^(n-1-k)(base)``, whose hash is exactly the stored commitment, and the
    reveal itself becomes the next commitment.  One precommitted secret thus
    covers ``n`` proposals without further commit transactions.
    """

    def __init__(self, secret: bytes, length: int):
        if length < 1:
            raise ValidationError("reveal chain needs at least one link")
        base = sha256(b"randao chain", secret)
        chain = [base]
        for _ in range(length):
            chain.append(sha256(chain[-1]))
        self._chain = chain
        self.length = length

    @property
    def initial_commitment(self) -> bytes:
        return self._chain[self.length]

    def reveal_for_proposal(self, k: int) -> bytes:
        """Reveal for this validator's k-th proposal (0-based)."""
        idx = self.length - 1 - k
        if idx < 0:
            raise ValidationError("reveal chain exhausted after %d proposals" % self.length)
        return self._chain[idx]


# ---------------------------------------------------------------------------
# validator set
# ---------------------------------------------------------------------------

@dataclass
class ValidatorEntry:
    id_hash: IdHash
    weight: float = 0.0          # effective (scaled) capital, unnormalized
    status: str = PENDING
    activation_slot: int | None = None

    def to_dict(self) -> dict:
        return {
            "id_hash": self.id_hash.hex,
            "weight": self.weight,
            "status": self.status,
            "activation_slot": self.activation_slot,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ValidatorEntry":
        return cls(id_hash=IdHash.from_hex(data["id_hash"]), weight=data["weight"],
                   status=data["status"], activation_slot=data.get("activation_slot"))


class ValidatorSet:
    def __init__(self, params: ProtocolParams):
        self.params = params
        self.entries: dict[bytes, ValidatorEntry] = {}

    def join(self, id_hash: IdHash, active_capital: float, current_slot: int) -> ValidatorEntry:
        """Admit a candidate.  Activation is deferred by a fixed slot delay
        so a new majority of capital cannot vote in the epoch it arrives."""
        if active_capital <= self.params.participation_threshold:
            raise BelowThreshold(
                "active capital %g does not exceed the participation threshold %d"
                % (active_capital, self.params.participation_threshold))
        existing = self.entries.get(id_hash.digest)
        if existing is not None and existing.status in (PENDING, ACTIVE, SLASHED):
            raise AlreadyMember("validator already %s" % existing.status)
        entry = ValidatorEntry(
            id_hash=id_hash,
            status=PENDING,
            activation_slot=current_slot + self.params.activation_delay_slots,
        )
        self.entries[id_hash.digest] = entry
        return entry

    def activate_due(self, slot: int) -> list:
        activated = []
        for key in sorted(self.entries):
            entry = self.entries[key]
            if entry.status == PENDING and entry.activation_slot is not None \
                    and entry.activation_slot <= slot:
                entry.status = ACTIVE
                activated.append(entry)
        return activated

    def exit(self, id_hash: IdHash) -> None:
        entry = self._require(id_hash)
        entry.status = EXITED
        entry.weight = 0.0

    def slash(self, id_hash: IdHash) -> None:
        entry = self._require(id_hash)
        entry.status = SLASHED
        entry.weight = 0.0

    def set_weight(self, id_hash: IdHash, weight: float) -> None:
        self._require(id_hash).weight = weight

    def _require(self, id_hash: IdHash) -> ValidatorEntry:
        entry = self.entries.get(id_hash.digest)
        if entry is None:
            raise EmptyValidatorSet("unknown validator %r" % id_hash)
        return entry

    def get(self, id_hash: IdHash) -> ValidatorEntry | None:
        return self.entries.get(id_hash.digest)

    def active_pairs(self) -> list:
        """``(IdHash, weight)`` for active members, sorted by id digest."""
        return [(e.id_hash, e.weight)
                for k, e in sorted(self.entries.items())
                if e.status == ACTIVE and e.weight > 0.0]

    def active_ids(self) -> list:
        return [vid for vid, _ in self.active_pairs()]

    def total_active_weight(self) -> float:
        return sum(w for _, w in self.active_pairs())

    def __len__(self) -> int:
        return len(self.entries)

    def clone(self) -> "ValidatorSet":
        dup = ValidatorSet(self.params)
        dup.entries = {k: replace(e) for k, e in self.entries.items()}
        return dup

    def to_dict(self) -> dict:
        return {"validators": [self.entries[k].to_dict() for k in sorted(self.entries)]}

    @classmethod
    def from_dict(cls, data: dict, params: ProtocolParams) -> "ValidatorSet":
        vs = cls(params)
        for item in data["validators"]:
            entry = ValidatorEntry.from_dict(item)
            vs.entries[entry.id_hash.digest] = entry
        return vs


# ---------------------------------------------------------------------------
# leader election
# ---------------------------------------------------------------------------

def election_seed(mix: bytes, slot: int) -> bytes:
    return sha256(mix, u64_be(slot))


def elect_leader(pairs, mix: bytes, slot: int) -> IdHash:
    """Sample one validator with probability proportional to weight.

    ``pairs`` is an ordered sequence of ``(IdHash, weight)``; the election
    point is ``H(mix || slot)`` mapped onto the cumulative weight line.
    """
    if not pairs:
        raise EmptyValidatorSet("no active validators")
    cumulative = []
    total = 0.0
    for _, weight in pairs:
        if weight < 0:
            raise ValidationError("validator weight cannot be negative")
        total += weight
        cumulative.append(total)
    if total <= 0.0:
        raise EmptyValidatorSet("total validator weight is zero")
    seed = election_seed(mix, slot)
    fraction = int.from_bytes(seed, "big") / float(1 << 256)
    point = fraction * total
    index = bisect.bisect_right(cumulative, point)
    if index >= len(pairs):
        index = len(pairs) - 1
    return pairs[index][0]


def election_schedule(pairs, mix: bytes, first_slot: int, count: int) -> list:
    """Leaders for ``count`` consecutive slots under a frozen mix.
    Rows are ``(slot, leader IdHash, mix)`` matching the CSV export."""
    return [(slot, elect_leader(pairs, mix, slot), mix)
            for slot in range(first_slot, first_slot + count)]


def schedule_csv_rows(schedule) -> list:
    rows = [("slot", "leader_id", "randao_mix")]
    for slot, leader, mix in schedule:
        rows.append((str(slot), leader.hex, mix.hex()))
    return rows


# ---------------------------------------------------------------------------
# checkpoints
# ---------------------------------------------------------------------------

@dataclass
class Checkpoint:
    epoch: int
    block_root: bytes
    total_weight: float
    attesting_weight: float = 0.0
    attesters: set = field(default_factory=set)
    justified: bool = False
    finalized: bool = False

    def attest(self, validator: IdHash, weight: float) -> None:
        if validator.digest in self.attesters:
            raise DoubleAttestation(
                "validator %s already attested checkpoint %d" % (validator, self.epoch))
        self.attesters.add(validator.digest)
        self.attesting_weight += weight
        # cross-multiplied to avoid rounding at the two-thirds boundary
        if 3 * self.attesting_weight >= 2 * self.total_weight and self.total_weight > 0:
            self.justified = True

    def clone(self) -> "Checkpoint":
        return Checkpoint(epoch=self.epoch, block_root=self.block_root,
                          total_weight=self.total_weight,
                          attesting_weight=self.attesting_weight,
                          attesters=set(self.attesters),
                          justified=self.justified, finalized=self.finalized)

    def to_dict(self) -> dict:
        return {
            "epoch": self.epoch,
            "block_root": self.block_root.hex(),
            "total_weight": self.total_weight,
            "attesting_weight": self.attesting_weight,
            "attesters": sorted(a.hex() for a in self.attesters),
            "justified": self.justified,
            "finalized": self.finalized,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Checkpoint":
        return cls(epoch=data["epoch"], block_root=from_hex(data["block_root"], HASH_SIZE),
                   total_weight=data["total_weight"],
                   attesting_weight=data["attesting_weight"],
                   attesters={bytes.fromhex(a) for a in data["attesters"]},
                   justified=data["justified"], finalized=data["finalized"])


def finalize_checkpoints(checkpoints: dict) -> list:
    """A justified checkpoint finalizes once its successor epoch is also
    justified.  Returns newly finalized checkpoints, oldest first."""
    newly = []
    for epoch in sorted(checkpoints):
        cp = checkpoints[epoch]
        nxt = checkpoints.get(epoch + 1)
        if cp.justified and not cp.finalized and nxt is not None and nxt.justified:
            cp.finalized = True
            newly.append(cp)
    return newly


# ---------------------------------------------------------------------------
# offenses
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OffenseRecord:
    kind: str
    offender: str            # hex id
    epoch: int
    slot: int
    severity: str
    evidence_digest: str
    reporter: str | None = None

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "offender": self.offender,
            "epoch": self.epoch,
            "slot": self.slot,
            "severity": self.severity,
            "evidence_digest": self.evidence_digest,
            "reporter": self.reporter,
        }


def header_signing_bytes(header: dict) -> bytes:
    unsigned = {k: v for k, v in header.items() if k != "signature"}
    return canonical_json(unsigned)


def offense_key(kind: str, evidence: dict) -> bytes:
    """Dedup key: the same evidence can only be punished once."""
    return hash_obj({"kind": kind, "evidence": evidence})


def validate_evidence(kind: str, evidence: dict, offender_pubkey: bytes,
                      params: ProtocolParams) -> None:
    """Raise ``BadEvidence`` unless the evidence proves the claimed offense."""
    if kind == OFFENSE_EQUIVOCATION:
        try:
            a, b = evidence["header_a"], evidence["header_b"]
        except (KeyError, TypeError):
            raise BadEvidence("equivocation evidence needs two headers") from None
        if a.get("slot") != b.get("slot") or a.get("proposer") != b.get("proposer"):
            raise BadEvidence("headers disagree on slot or proposer")
        if hash_obj(a) == hash_obj(b):
            raise BadEvidence("headers are identical, nothing conflicting")
        for header in (a, b):
            sig = bytes.fromhex(header.get("signature", ""))
            if not verify_signature(offender_pubkey, header_signing_bytes(header), sig):
                raise BadEvidence("header signature does not verify")
        return
    if kind == OFFENSE_INVALID_BLOCK:
        header = evidence.get("header")
        recomputed = evidence.get("recomputed_root")
        if not isinstance(header, dict) or not recomputed:
            raise BadEvidence("invalid-block evidence needs a header and a recomputed root")
        sig = bytes.fromhex(header.get("signature", ""))
        if not verify_signature(offender_pubkey, header_signing_bytes(header), sig):
            raise BadEvidence("header signature does not verify")
        if header.get("state_root") == recomputed:
            raise BadEvidence("declared root matches the recomputed root")
        return
    if kind == OFFENSE_INACTIVITY:
        missed = evidence.get("consecutive_missed")
        if not isinstance(missed, int) or missed < params.inactivity_limit:
            raise BadEvidence(
                "inactivity requires at least %d consecutive missed proposals"
                % params.inactivity_limit)
        return
    if kind == OFFENSE_DOUBLE_ATTESTATION:
        if "checkpoint_epoch" not in evidence:
            raise BadEvidence("double-attestation evidence needs the checkpoint epoch")
        return
    raise BadEvidence("unknown offense kind %r" % kind)


# ---------------------------------------------------------------------------
# rewards
# ---------------------------------------------------------------------------

def distribute_rewards(ledger, paid_blocks: set, block_hash: bytes,
                       proposer: IdHash, attesters, params: ProtocolParams) -> list:
    """Credit the proposer and each attester.  Idempotent per block hash."""
    if block_hash in paid_blocks:
        return []
    paid_blocks.add(block_hash)
    touched = []
    acct = ledger.get(proposer)
    acct.token_balance += params.proposer_reward
    touched.append(acct)
    for vid in attesters:
        acct = ledger.get(vid)
        acct.token_balance += params.attester_reward
        touched.append(acct)
    return touched

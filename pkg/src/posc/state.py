"""Global chain state.

Single source of truth for accounts (mirrored into the identity trie so the
state root commits to every balance, penalty and validator flag), the
issuer registry, randomness, the validator set and checkpoint bookkeeping.
All mutators write accounts back to the trie immediately; the root is only
hashed when read, so a block's worth of updates costs one hashing pass.
"""
from __future__ import annotations

from . import capital as cap
from . import consensus as cons
from .codec import hash_obj
from .errors import (
    BadEvidence,
    InsufficientTokens,
    InvalidTransaction,
    UnknownAccount,
)
from .identity.credentials import IdHash
from .identity.registry import IssuerRegistry
from .identity.trie import Trie
from .params import ProtocolParams


class GlobalState:
    def __init__(self, params: ProtocolParams):
        self.params = params
        self.trie = Trie()
        self.capital = cap.CapitalLedger(params)
        self.issuer_registry = IssuerRegistry()
        self.randao = cons.RandaoState()
        self.validators = cons.ValidatorSet(params)
        self.checkpoints: dict[int, cons.Checkpoint] = {}
        self.offense_log: list[cons.OffenseRecord] = []
        self.seen_offenses: set[bytes] = set()
        self.missed_in_row: dict[bytes, int] = {}
        self.paid_blocks: set[bytes] = set()
        self.slot = 0                    # last slot with a processed block
        self.head_hash = b"\x00" * 32
        self.epoch_mix = self.randao.mix  # mix frozen at the epoch boundary
        # rewards for the head block, credited when the next block applies
        self.pending_rewards = None

    # -- plumbing ---------------------------------------------------------

    @property
    def state_root(self) -> bytes:
        return self.trie.root

    @property
    def epoch(self) -> int:
        return self.params.epoch_of_slot(self.slot)

    def clone(self) -> "GlobalState":
        dup = GlobalState.__new__(GlobalState)
        dup.params = self.params
        dup.trie = self.trie  # immutable nodes, shared structurally
        dup.capital = cap.CapitalLedger(self.params)
        dup.capital.accounts = {k: a.clone() for k, a in self.capital.accounts.items()}
        dup.issuer_registry = self.issuer_registry.copy()
        dup.randao = self.randao.clone()
        dup.validators = self.validators.clone()
        dup.checkpoints = {e: c.clone() for e, c in self.checkpoints.items()}
        dup.offense_log = list(self.offense_log)
        dup.seen_offenses = set(self.seen_offenses)
        dup.missed_in_row = dict(self.missed_in_row)
        dup.paid_blocks = set(self.paid_blocks)
        dup.slot = self.slot
        dup.head_hash = self.head_hash
        dup.epoch_mix = self.epoch_mix
        dup.pending_rewards = self.pending_rewards
        return dup

    def _write_back(self, *accounts) -> None:
        for acct in accounts:
            self.trie = self.trie.update(acct.id_hash.digest, acct.to_bytes())

    def insert_account(self, acct: cap.Account) -> None:
        """Add a brand-new account to both the book and the trie.  The trie
        insert is what rejects duplicate identities."""
        self.trie = self.trie.insert(acct.id_hash.digest, acct.to_bytes())
        self.capital.accounts[acct.id_hash.digest] = acct

    # -- capital operations -------------------------------------------------

    def apply_endorsement(self, e: cap.Endorsement) -> None:
        self.capital.endorse(e, self.epoch)
        self._write_back(self.capital.get(e.follower), self.capital.get(e.creator))

    def apply_reassignment(self, r: cap.Reassignment) -> None:
        self.capital.reassign(r, self.epoch)
        self._write_back(self.capital.get(r.follower),
                         self.capital.get(r.from_creator),
                         self.capital.get(r.to_creator))

    def apply_transfer(self, sender: IdHash, recipient: IdHash, amount: float) -> None:
        src = self.capital.get(sender)
        dst = self.capital.get(recipient)
        if amount <= 0:
            raise InvalidTransaction("transfer amount must be positive")
        if src.token_balance < amount:
            raise InsufficientTokens(
                "balance %g cannot cover transfer of %g" % (src.token_balance, amount))
        src.token_balance -= amount
        dst.token_balance += amount
        self._write_back(src, dst)

    # -- offenses --------------------------------------------------------------

    def report_offense(self, kind: str, offender: IdHash, evidence: dict,
                       reporter: str | None = None) -> cons.OffenseRecord:
        """Validate evidence, apply the capital penalty and (for major
        offenses) slash the validator.  The same evidence is only ever
        applied once."""
        key = cons.offense_key(kind, evidence)
        if key in self.seen_offenses:
            raise InvalidTransaction("offense already punished")
        acct = self.capital.get(offender)
        cons.validate_evidence(kind, evidence, acct.platform_pubkey, self.params)
        if kind == cons.OFFENSE_INACTIVITY:
            streak = self.missed_in_row.get(offender.digest, 0)
            if streak < self.params.inactivity_limit:
                raise BadEvidence(
                    "reported streak not confirmed on chain (%d < %d)"
                    % (streak, self.params.inactivity_limit))
            self.missed_in_row[offender.digest] = 0
        severity = cons.OFFENSE_SEVERITY[kind]
        self.capital.penalize(offender, severity, self.epoch)
        entry = self.validators.get(offender)
        if severity == "major" and entry is not None:
            self.validators.slash(offender)
            acct.validator_status = cap.VS_SLASHED
        record = cons.OffenseRecord(
            kind=kind, offender=offender.hex, epoch=self.epoch, slot=self.slot,
            severity=severity, evidence_digest=hash_obj(evidence).hex(),
            reporter=reporter)
        self.offense_log.append(record)
        self.seen_offenses.add(key)
        self._write_back(acct)
        return record

    # -- epoch processing ---------------------------------------------------------

    def advance_to_slot(self, slot: int, schedule_lookup=None) -> None:
        """Walk empty slots up to (not including) ``slot``: cross epoch
        boundaries and count missed proposals for each skipped slot."""
        if slot <= self.slot:
            raise InvalidTransaction("slot %d is not beyond head slot %d" % (slot, self.slot))
        for s in range(self.slot + 1, slot + 1):
            if s % self.params.slots_per_epoch == 0:
                self._epoch_boundary(s)
            if s < slot:
                self._record_miss(s, schedule_lookup)
        self.slot = slot

    def _record_miss(self, slot: int, schedule_lookup) -> None:
        pairs = self.validators.active_pairs()
        if not pairs:
            return
        if schedule_lookup is not None:
            leader = schedule_lookup(slot)
        else:
            leader = cons.elect_leader(pairs, self.epoch_mix, slot)
        self.missed_in_row[leader.digest] = self.missed_in_row.get(leader.digest, 0) + 1

    def note_proposal(self, proposer: IdHash) -> None:
        self.missed_in_row[proposer.digest] = 0

    def _epoch_boundary(self, boundary_slot: int) -> None:
        epoch = self.params.epoch_of_slot(boundary_slot)
        touched = self.capital.settle_epoch(epoch)
        touched += self.capital.expire_penalties(epoch)
        self._write_back(*touched)
        self._refresh_validators(boundary_slot)
        self.epoch_mix = self.randao.mix
        if epoch not in self.checkpoints:
            self.checkpoints[epoch] = cons.Checkpoint(
                epoch=epoch, block_root=self.head_hash,
                total_weight=self.validators.total_active_weight())

    def _refresh_validators(self, boundary_slot: int) -> None:
        changed = []
        for entry in self.validators.activate_due(boundary_slot):
            acct = self.capital.get(entry.id_hash)
            acct.validator_status = cap.VS_ACTIVE
            changed.append(acct)
        for acct in self.capital.sorted_accounts():
            entry = self.validators.get(acct.id_hash)
            qualifies = cap.meets_participation_threshold(acct.active_received, self.params)
            if entry is None or entry.status == cons.EXITED:
                if qualifies:
                    self.validators.join(acct.id_hash, acct.active_received, boundary_slot)
                    acct.validator_status = cap.VS_PENDING
                    changed.append(acct)
                continue
            if entry.status == cons.ACTIVE:
                if not qualifies:
                    self.validators.exit(acct.id_hash)
                    acct.validator_status = cap.VS_EXITED
                    changed.append(acct)
                else:
                    self.validators.set_weight(acct.id_hash, acct.effective())
        self._write_back(*changed)

    # -- attestations / rewards ------------------------------------------------

    def apply_attestation(self, validator: IdHash, checkpoint_epoch: int,
                          checkpoint_root: bytes) -> None:
        cp = self.checkpoints.get(checkpoint_epoch)
        if cp is None:
            raise InvalidTransaction("no checkpoint for epoch %d" % checkpoint_epoch)
        if cp.block_root != checkpoint_root:
            raise InvalidTransaction("attestation targets an unknown checkpoint root")
        entry = self.validators.get(validator)
        if entry is None or entry.status != cons.ACTIVE:
            raise InvalidTransaction("attester is not an active validator")
        cp.attest(validator, entry.weight)  # may raise DoubleAttestation
        cons.finalize_checkpoints(self.checkpoints)

    def reward_block(self, block_hash: bytes, proposer: IdHash, attesters) -> None:
        touched = cons.distribute_rewards(self.capital, self.paid_blocks, block_hash,
                                          proposer, attesters, self.params)
        self._write_back(*touched)

    # -- exports ---------------------------------------------------------------

    def validator_snapshot(self) -> dict:
        data = self.validators.to_dict()
        data["epoch"] = self.epoch
        data["epoch_mix"] = self.epoch_mix.hex()
        return data

    def offense_snapshot(self) -> list:
        return [r.to_dict() for r in self.offense_log]

    def finalized_epochs(self) -> list:
        return sorted(e for e, c in self.checkpoints.items() if c.finalized)

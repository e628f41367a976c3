"""Blocks, transactions and the canonical chain.

Block rewards are credited when the *next* block is applied, so a block's
state root never depends on its own hash.  Transactions are strict inside a
block (one bad transaction invalidates the block); proposers therefore
pre-validate and skip failing transactions at build time.

Chain files are JSON lines: the first line holds the genesis config, every
following line one block, in canonical (sorted-key, compact) form so a
reload and re-serialization is byte-identical.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

from . import capital as cap
from . import consensus as cons
from .codec import canonical_json, from_hex, hash_obj
from .errors import (
    BadSignature,
    CorruptLine,
    DoubleAttestation,
    InvalidTransaction,
    NotLeader,
    ProtocolError,
    RootMismatch,
    StateRootMismatch,
    ValidationError,
    WrongProposer,
)
from .identity.credentials import IdHash
from .identity.proofs import IdentityProof, ProvingOracle
from .identity.registration import register_identity
from .identity.registry import ADD_ISSUER, REMOVE_ISSUER, GovernanceDecision
from .keys import verify_signature
from .params import DEFAULT_PARAMS, ProtocolParams
from .state import GlobalState

TX_REGISTER = "register"
TX_ENDORSE = "endorse"
TX_REASSIGN = "reassign"
TX_TRANSFER = "transfer"
TX_GOVERNANCE = "governance"

METATX_TYPES = (TX_ENDORSE, TX_REASSIGN)

GENESIS_PARENT = b"\x00" * 32
GENESIS_PROPOSER = IdHash(b"\x00" * 32)


# ---------------------------------------------------------------------------
# transactions
# ---------------------------------------------------------------------------

@dataclass
class Transaction:
    type: str
    payload: dict
    signatures: dict = field(default_factory=dict)   # role name -> hex signature

    def to_dict(self) -> dict:
        data = {"type": self.type, "payload": self.payload,
                "signatures": {k: v for k, v in sorted(self.signatures.items())}}
        if self.type in METATX_TYPES:
            data["metatx"] = True
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "Transaction":
        return cls(type=data["type"], payload=data["payload"],
                   signatures=dict(data.get("signatures", {})))

    @property
    def tx_hash(self) -> bytes:
        return hash_obj(self.to_dict())


def register_tx(proof: IdentityProof, registration_signature: bytes) -> Transaction:
    return Transaction(
        type=TX_REGISTER,
        payload=proof.to_dict(),
        signatures={"platform": registration_signature.hex()},
    )


def endorse_tx(e: cap.Endorsement) -> Transaction:
    return Transaction(
        type=TX_ENDORSE,
        payload={
            "follower": e.follower.hex, "creator": e.creator.hex,
            "sponsor": e.sponsor.hex, "amount": e.amount, "fee": e.fee,
            "submitted_epoch": e.submitted_epoch,
        },
        signatures={"follower": e.follower_signature.hex(),
                    "sponsor": e.sponsor_signature.hex()},
    )


def reassign_tx(r: cap.Reassignment) -> Transaction:
    return Transaction(
        type=TX_REASSIGN,
        payload={
            "follower": r.follower.hex, "from_creator": r.from_creator.hex,
            "to_creator": r.to_creator.hex, "sponsor": r.sponsor.hex,
            "amount": r.amount, "fee": r.fee, "submitted_epoch": r.submitted_epoch,
        },
        signatures={"follower": r.follower_signature.hex(),
                    "sponsor": r.sponsor_signature.hex()},
    )


def transfer_tx(sender: IdHash, recipient: IdHash, amount: float, sender_key) -> Transaction:
    payload = {"sender": sender.hex, "recipient": recipient.hex, "amount": amount}
    sig = sender_key.sign(canonical_json(payload))
    return Transaction(type=TX_TRANSFER, payload=payload,
                       signatures={"sender": sig.hex()})


def issuer_vote_bytes(kind: str, issuer_id: str, public_key_hex: str) -> bytes:
    return canonical_json({"kind": kind, "issuer_id": issuer_id,
                           "public_key": public_key_hex})


def governance_issuer_tx(kind: str, issuer_id: str, public_key: bytes, voters) -> Transaction:
    """``voters`` is a list of ``(IdHash, SigningKey)`` casting approvals."""
    key_hex = public_key.hex()
    message = issuer_vote_bytes(kind, issuer_id, key_hex)
    approvals = [{"voter": vid.hex, "signature": key.sign(message).hex()}
                 for vid, key in voters]
    return Transaction(
        type=TX_GOVERNANCE,
        payload={"kind": kind, "issuer_id": issuer_id, "public_key": key_hex,
                 "approvals": approvals},
    )


def offense_report_tx(offense_kind: str, offender: IdHash, evidence: dict,
                      reporter: IdHash, reporter_key) -> Transaction:
    body = {"kind": "offense_report", "offense": offense_kind,
            "offender": offender.hex, "evidence": evidence,
            "reporter": reporter.hex}
    sig = reporter_key.sign(canonical_json(body))
    return Transaction(type=TX_GOVERNANCE, payload=body,
                       signatures={"reporter": sig.hex()})


# ---------------------------------------------------------------------------
# attestations and blocks
# ---------------------------------------------------------------------------

@dataclass
class Attestation:
    validator: IdHash
    checkpoint_epoch: int
    checkpoint_root: bytes
    signature: bytes = b""

    def payload(self) -> bytes:
        return canonical_json({
            "validator": self.validator.hex,
            "checkpoint_epoch": self.checkpoint_epoch,
            "checkpoint_root": self.checkpoint_root.hex(),
        })

    def to_dict(self) -> dict:
        return {
            "validator": self.validator.hex,
            "checkpoint_epoch": self.checkpoint_epoch,
            "checkpoint_root": self.checkpoint_root.hex(),
            "signature": self.signature.hex(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Attestation":
        return cls(validator=IdHash.from_hex(data["validator"]),
                   checkpoint_epoch=data["checkpoint_epoch"],
                   checkpoint_root=from_hex(data["checkpoint_root"], 32),
                   signature=from_hex(data["signature"]))


def make_attestation(validator: IdHash, checkpoint_epoch: int, checkpoint_root: bytes,
                     key) -> Attestation:
    att = Attestation(validator=validator, checkpoint_epoch=checkpoint_epoch,
                      checkpoint_root=checkpoint_root)
    att.signature = key.sign(att.payload())
    return att


@dataclass
class Block:
    slot: int
    proposer: IdHash
    parent_hash: bytes
    state_root: bytes
    randao_reveal: bytes
    transactions: list = field(default_factory=list)
    attestations: list = field(default_factory=list)
    signature: bytes = b""

    def header_dict(self) -> dict:
        """Signed header; commits to the body through the two content roots."""
        return {
            "slot": self.slot,
            "proposer": self.proposer.hex,
            "parent_hash": self.parent_hash.hex(),
            "state_root": self.state_root.hex(),
            "randao_reveal": self.randao_reveal.hex(),
            "tx_root": hash_obj([t.to_dict() for t in self.transactions]).hex(),
            "att_root": hash_obj([a.to_dict() for a in self.attestations]).hex(),
            "signature": self.signature.hex(),
        }

    def signing_bytes(self) -> bytes:
        return cons.header_signing_bytes(self.header_dict())

    @property
    def block_hash(self) -> bytes:
        return hash_obj(self.header_dict())

    def to_dict(self) -> dict:
        return {
            "slot": self.slot,
            "proposer": self.proposer.hex,
            "parent_hash": self.parent_hash.hex(),
            "state_root": self.state_root.hex(),
            "randao_reveal": self.randao_reveal.hex(),
            "transactions": [t.to_dict() for t in self.transactions],
            "attestations": [a.to_dict() for a in self.attestations],
            "signature": self.signature.hex(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Block":
        return cls(
            slot=data["slot"],
            proposer=IdHash.from_hex(data["proposer"]),
            parent_hash=from_hex(data["parent_hash"], 32),
            state_root=from_hex(data["state_root"], 32),
            randao_reveal=from_hex(data["randao_reveal"]),
            transactions=[Transaction.from_dict(t) for t in data["transactions"]],
            attestations=[Attestation.from_dict(a) for a in data["attestations"]],
            signature=from_hex(data["signature"]),
        )


# ---------------------------------------------------------------------------
# transaction application
# ---------------------------------------------------------------------------

def apply_transaction(state: GlobalState, tx: Transaction, oracle: ProvingOracle) -> None:
    """Apply one transaction to ``state`` in place; raises on any problem."""
    if tx.type == TX_REGISTER:
        proof = IdentityProof.from_dict(tx.payload)
        sig = bytes.fromhex(tx.signatures.get("platform", ""))
        register_identity(state, proof, sig, oracle)
        return
    if tx.type == TX_ENDORSE:
        p = tx.payload
        e = cap.Endorsement(
            follower=IdHash.from_hex(p["follower"]),
            creator=IdHash.from_hex(p["creator"]),
            sponsor=IdHash.from_hex(p["sponsor"]),
            amount=p["amount"], fee=p["fee"],
            submitted_epoch=p["submitted_epoch"],
            follower_signature=bytes.fromhex(tx.signatures.get("follower", "")),
            sponsor_signature=bytes.fromhex(tx.signatures.get("sponsor", "")),
        )
        state.apply_endorsement(e)
        return
    if tx.type == TX_REASSIGN:
        p = tx.payload
        r = cap.Reassignment(
            follower=IdHash.from_hex(p["follower"]),
            from_creator=IdHash.from_hex(p["from_creator"]),
            to_creator=IdHash.from_hex(p["to_creator"]),
            sponsor=IdHash.from_hex(p["sponsor"]),
            amount=p["amount"], fee=p["fee"],
            submitted_epoch=p["submitted_epoch"],
            follower_signature=bytes.fromhex(tx.signatures.get("follower", "")),
            sponsor_signature=bytes.fromhex(tx.signatures.get("sponsor", "")),
        )
        state.apply_reassignment(r)
        return
    if tx.type == TX_TRANSFER:
        p = tx.payload
        sender = IdHash.from_hex(p["sender"])
        acct = state.capital.get(sender)
        sig = bytes.fromhex(tx.signatures.get("sender", ""))
        if not verify_signature(acct.platform_pubkey, canonical_json(p), sig):
            raise BadSignature("transfer sender signature invalid")
        state.apply_transfer(sender, IdHash.from_hex(p["recipient"]), p["amount"])
        return
    if tx.type == TX_GOVERNANCE:
        _apply_governance(state, tx)
        return
    raise InvalidTransaction("unknown transaction type %r" % tx.type)


def _apply_governance(state: GlobalState, tx: Transaction) -> None:
    p = tx.payload
    kind = p.get("kind")
    if kind in (ADD_ISSUER, REMOVE_ISSUER):
        message = issuer_vote_bytes(kind, p["issuer_id"], p.get("public_key", ""))
        weight = 0.0
        seen = set()
        for approval in p.get("approvals", []):
            vid = IdHash.from_hex(approval["voter"])
            if vid.digest in seen:
                continue
            seen.add(vid.digest)
            entry = state.validators.get(vid)
            if entry is None or entry.status != cons.ACTIVE:
                continue
            acct = state.capital.get(vid)
            if not verify_signature(acct.platform_pubkey, message,
                                    bytes.fromhex(approval["signature"])):
                raise BadSignature("issuer vote signature invalid")
            weight += entry.weight
        decision = GovernanceDecision(
            action=kind, issuer_id=p["issuer_id"],
            public_key=bytes.fromhex(p.get("public_key", "")),
            approving_weight=weight,
            total_weight=state.validators.total_active_weight(),
        )
        state.issuer_registry.apply(decision)
        return
    if kind == "offense_report":
        reporter = IdHash.from_hex(p["reporter"])
        acct = state.capital.get(reporter)
        sig = bytes.fromhex(tx.signatures.get("reporter", ""))
        if not verify_signature(acct.platform_pubkey, canonical_json(p), sig):
            raise BadSignature("offense report signature invalid")
        state.report_offense(p["offense"], IdHash.from_hex(p["offender"]),
                             p["evidence"], reporter=p["reporter"])
        return
    raise InvalidTransaction("unknown governance action %r" % kind)


# ---------------------------------------------------------------------------
# block application / production
# ---------------------------------------------------------------------------

def _settle_pending_rewards(state: GlobalState) -> None:
    if state.pending_rewards is None:
        return
    block_hash, proposer, attesters = state.pending_rewards
    state.reward_block(block_hash, proposer, attesters)
    state.pending_rewards = None


def apply_block(state: GlobalState, block: Block, oracle: ProvingOracle) -> GlobalState:
    """Full verification and state transition.  Returns the post-state;
    ``state`` itself is never mutated."""
    if block.slot <= state.slot:
        raise InvalidTransaction("block slot %d is not beyond head %d"
                                 % (block.slot, state.slot))
    if block.parent_hash != state.head_hash:
        raise InvalidTransaction("block does not extend the current head")
    st = state.clone()
    _settle_pending_rewards(st)
    st.advance_to_slot(block.slot)
    leader = cons.elect_leader(st.validators.active_pairs(), st.epoch_mix, block.slot)
    if leader != block.proposer:
        raise WrongProposer("slot %d belongs to %s" % (block.slot, leader))
    proposer_acct = st.capital.get(block.proposer)
    if not verify_signature(proposer_acct.platform_pubkey, block.signing_bytes(),
                            block.signature):
        raise BadSignature("block signature invalid")
    st.randao.reveal(block.proposer, block.randao_reveal)
    for tx in block.transactions:
        apply_transaction(st, tx, oracle)
    applied_attesters = _apply_attestations(st, block.attestations)
    st.note_proposal(block.proposer)
    if st.state_root != block.state_root:
        raise StateRootMismatch(
            "declared %s, computed %s"
            % (block.state_root.hex()[:16], st.state_root.hex()[:16]))
    st.head_hash = block.block_hash
    st.pending_rewards = (block.block_hash, block.proposer, applied_attesters)
    return st


def _apply_attestations(state: GlobalState, attestations) -> list:
    applied = []
    for att in attestations:
        acct = state.capital.get(att.validator)
        if not verify_signature(acct.platform_pubkey, att.payload(), att.signature):
            raise BadSignature("attestation signature invalid")
        try:
            state.apply_attestation(att.validator, att.checkpoint_epoch,
                                    att.checkpoint_root)
        except DoubleAttestation:
            state.report_offense(
                cons.OFFENSE_DOUBLE_ATTESTATION, att.validator,
                {"checkpoint_epoch": att.checkpoint_epoch,
                 "attestation": att.to_dict()})
            continue
        applied.append(att.validator)
    return applied


def build_block(state: GlobalState, slot: int, proposer: IdHash, proposer_key,
                randao_reveal: bytes, mempool, attestation_pool,
                oracle: ProvingOracle):
    """Produce a signed block on top of ``state``.

    Transactions from ``mempool`` are included first-come-first-served;
    invalid ones are skipped (returned with their error).  Raises
    ``NotLeader`` if ``proposer`` does not own the slot.
    """
    st = state.clone()
    _settle_pending_rewards(st)
    st.advance_to_slot(slot)
    leader = cons.elect_leader(st.validators.active_pairs(), st.epoch_mix, slot)
    if leader != proposer:
        raise NotLeader("slot %d belongs to %s" % (slot, leader))
    st.randao.reveal(proposer, randao_reveal)

    included, rejected = [], []
    for tx in mempool:
        try:
            apply_transaction(st, tx, oracle)
        except ProtocolError as exc:
            rejected.append((tx, exc))
        else:
            included.append(tx)

    good_atts = []
    for att in attestation_pool:
        probe = att.validator.digest in {a.validator.digest for a in good_atts
                                         if a.checkpoint_epoch == att.checkpoint_epoch}
        if probe:
            continue
        try:
            acct = st.capital.get(att.validator)
            if not verify_signature(acct.platform_pubkey, att.payload(), att.signature):
                raise BadSignature("attestation signature invalid")
            st.apply_attestation(att.validator, att.checkpoint_epoch, att.checkpoint_root)
        except ProtocolError:
            continue
        good_atts.append(att)

    st.note_proposal(proposer)
    block = Block(
        slot=slot, proposer=proposer, parent_hash=state.head_hash,
        state_root=st.state_root, randao_reveal=randao_reveal,
        transactions=included, attestations=good_atts,
    )
    block.signature = proposer_key.sign(block.signing_bytes())
    return block, rejected


# ---------------------------------------------------------------------------
# genesis and the chain container
# ---------------------------------------------------------------------------

def genesis_block(state_root: bytes) -> Block:
    return Block(slot=0, proposer=GENESIS_PROPOSER, parent_hash=GENESIS_PARENT,
                 state_root=state_root, randao_reveal=b"")


def build_genesis_state(config: dict):
    """Materialize a ``GlobalState`` from a genesis config dict.

    The config carries protocol constant overrides, the accepted issuers,
    fully-formed account records (bootstrap endorsements arrive pre-settled),
    per-validator randomness commitments and the proof-oracle secret.
    Returns ``(params, state, oracle, genesis)``.
    """
    try:
        params = DEFAULT_PARAMS.with_overrides(config.get("constants", {}))
        oracle = ProvingOracle(bytes.fromhex(config["proof_secret"]))
        issuers = config.get("issuers", [])
        accounts = config.get("accounts", [])
        commitments = config.get("commitments", {})
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError("bad genesis config: %s" % exc) from None

    state = GlobalState(params)
    for issuer in issuers:
        state.issuer_registry.bootstrap(issuer["issuer_id"],
                                        bytes.fromhex(issuer["public_key"]))
    for record in sorted(accounts, key=lambda a: a["id_hash"]):
        acct = cap.Account.from_dict(record)
        state.insert_account(acct)
        if acct.validator_status == cap.VS_ACTIVE:
            entry = cons.ValidatorEntry(
                id_hash=acct.id_hash, weight=acct.effective(),
                status=cons.ACTIVE, activation_slot=0)
            state.validators.entries[acct.id_hash.digest] = entry
    if "mix" in config:
        state.randao.mix = from_hex(config["mix"], 32)
    for id_hex, commitment_hex in sorted(commitments.items()):
        state.randao.commit(IdHash.from_hex(id_hex), from_hex(commitment_hex, 32))
    state.epoch_mix = state.randao.mix

    genesis = genesis_block(state.state_root)
    state.head_hash = genesis.block_hash
    state.slot = 0
    state.checkpoints[0] = cons.Checkpoint(
        epoch=0, block_root=genesis.block_hash,
        total_weight=state.validators.total_active_weight())
    return params, state, oracle, genesis


class Chain:
    """An in-memory chain: genesis config plus applied blocks plus the head
    state.  ``append`` is the only way to grow it, so the head state always
    reflects every stored block."""

    def __init__(self, config: dict):
        self.config = config
        self.params, self.state, self.oracle, self.genesis = build_genesis_state(config)
        self.blocks: list[Block] = []

    @property
    def head_hash(self) -> bytes:
        return self.state.head_hash

    @property
    def head_slot(self) -> int:
        return self.state.slot

    def append(self, block: Block) -> None:
        self.state = apply_block(self.state, block, self.oracle)
        self.blocks.append(block)

    def build_and_append(self, slot, proposer, proposer_key, randao_reveal,
                         mempool=(), attestation_pool=()):
        block, rejected = build_block(self.state, slot, proposer, proposer_key,
                                      randao_reveal, mempool, attestation_pool,
                                      self.oracle)
        self.append(block)
        return block, rejected

    # -- persistence -------------------------------------------------------

    def save(self, path) -> None:
        with open(path, "wb") as fh:
            fh.write(canonical_json({"genesis": self.config}))
            fh.write(b"\n")
            for block in self.blocks:
                fh.write(canonical_json(block.to_dict()))
                fh.write(b"\n")

    @classmethod
    def load(cls, path) -> "Chain":
        """Replay a chain file from scratch.

        Raises ``CorruptLine`` (with the valid prefix attached) when a line
        does not parse, and ``RootMismatch`` when a stored block's state root
        disagrees with the replayed transition.
        """
        with open(path, "rb") as fh:
            lines = fh.read().splitlines()
        if not lines:
            raise CorruptLine(1)
        try:
            head = json.loads(lines[0])
            config = head["genesis"]
        except (ValueError, KeyError, TypeError):
            raise CorruptLine(1) from None
        chain = cls(config)
        for line_no, raw in enumerate(lines[1:], start=2):
            if not raw.strip():
                raise CorruptLine(line_no, chain)
            try:
                block = Block.from_dict(json.loads(raw))
            except (ValueError, KeyError, TypeError):
                raise CorruptLine(line_no, chain) from None
            try:
                chain.append(block)
            except StateRootMismatch:
                err = RootMismatch(block.slot)
                err.chain = chain
                raise err from None
        return chain

    def summary(self) -> dict:
        return {
            "blocks": len(self.blocks),
            "head_slot": self.head_slot,
            "head_hash": self.head_hash.hex(),
            "state_root": self.state.state_root.hex(),
            "epoch": self.state.epoch,
            "finalized_epochs": self.state.finalized_epochs(),
            "accounts": len(self.state.capital.accounts),
            "validators": len(self.state.validators),
            "offenses": len(self.state.offense_log),
        }

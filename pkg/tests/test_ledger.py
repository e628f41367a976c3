"""Blocks, the state transition, persistence, and on-chain governance."""
import datetime
import math

import pytest

from posc import capital as cap
from posc import consensus, ledger
from posc.codec import sha256
from posc.consensus import OFFENSE_EQUIVOCATION, header_signing_bytes
from posc.errors import (BadSignature, GovernanceRejected, InvalidTransaction,
                         NotLeader, ProtocolError, RootMismatch, CorruptLine,
                         StateRootMismatch, WrongProposer)
from posc.identity import derive_id_hash, issue_credential, sign_registration
from posc.keys import SigningKey
from conftest import make_world, mine


def craft_block(chain, world, mempool=(), atts=()):
    """Build (without appending) the next block with its scheduled leader."""
    slot = chain.head_slot + 1
    probe = chain.state.clone()
    probe.advance_to_slot(slot)
    leader = consensus.elect_leader(probe.validators.active_pairs(),
                                    probe.epoch_mix, slot)
    actor = world.by_id[leader.digest]
    k = sum(1 for b in chain.blocks if b.proposer == leader)
    reveal = actor.reveal_schedule.reveal_for_proposal(k)
    block, rejected = ledger.build_block(chain.state, slot, leader, actor.key,
                                         reveal, list(mempool), list(atts),
                                         chain.oracle)
    return block, actor, rejected


def fresh_credential(world, tag: str, key: SigningKey):
    return issue_credential(
        world.issuer_key, world.issuer_id, platform_pubkey=key.public_key,
        name="Ledger", surname=tag, residence="Testville",
        birth_number="lt-%s" % tag, place_of_birth="Testville",
        nationality="SIM", issued_at=datetime.date(2024, 1, 1),
        expires_at=datetime.date(2040, 1, 1))


# ---------------------------------------------------------------------------
# genesis and basic mining
# ---------------------------------------------------------------------------

def test_genesis_is_deterministic():
    a, b = make_world(), make_world()
    assert a.genesis_config == b.genesis_config
    ca, cb = ledger.Chain(a.genesis_config), ledger.Chain(b.genesis_config)
    assert ca.state.state_root == cb.state.state_root
    assert ca.head_hash == cb.head_hash
    assert ca.genesis.slot == 0 and ca.head_slot == 0


def test_mining_links_blocks(chain, world):
    produced = mine(chain, world, 5)
    assert chain.head_slot == 5
    assert [b.slot for b, _ in produced] == [1, 2, 3, 4, 5]
    parent = chain.genesis.block_hash
    for block, rejected in produced:
        assert rejected == []
        assert block.parent_hash == parent
        parent = block.block_hash
    assert chain.head_hash == parent
    summary = chain.summary()
    assert summary["blocks"] == 5 and summary["head_slot"] == 5
    assert summary["accounts"] == 65 and summary["validators"] == 3


def test_checkpoints_finalize_with_attestations():
    world = make_world(constants={"participation_multiplier": 10,
                                  "slots_per_epoch": 8})
    chain = ledger.Chain(world.genesis_config)
    mine(chain, world, 20)
    assert 0 in chain.state.finalized_epochs()
    assert chain.state.checkpoints[0].justified


def test_deferred_rewards_pay_one_block_late(chain, world):
    (b1, _), = mine(chain, world, 1, attest=False)
    before = chain.state.capital.get(b1.proposer).token_balance
    assert before == world.config.creator_tokens   # not yet credited
    # block N's reward settles while block N+1 is applied, even when the
    # same validator proposes both (its own N+1 reward stays pending)
    mine(chain, world, 1, attest=False)
    after = chain.state.capital.get(b1.proposer).token_balance
    assert after == before + chain.params.proposer_reward


def test_attesters_share_rewards():
    world = make_world(constants={"participation_multiplier": 10,
                                  "slots_per_epoch": 8})
    chain = ledger.Chain(world.genesis_config)
    mine(chain, world, 3)
    attesters = {a.validator.digest for a in chain.blocks[0].attestations}
    assert attesters                               # someone attested block 1
    total = sum(chain.state.capital.get(c.id_hash).token_balance
                for c in (world.actors["alpha"], world.actors["beta"],
                          world.actors["gamma"]))
    assert total > 3 * world.config.creator_tokens  # rewards actually flowed


# ---------------------------------------------------------------------------
# rejection battery
# ---------------------------------------------------------------------------

def test_build_requires_the_scheduled_leader(chain, world):
    slot = 1
    probe = chain.state.clone()
    probe.advance_to_slot(slot)
    leader = consensus.elect_leader(probe.validators.active_pairs(),
                                    probe.epoch_mix, slot)
    wrong = next(c for c in ("alpha", "beta", "gamma")
                 if world.actors[c].id_hash != leader)
    actor = world.actors[wrong]
    with pytest.raises(NotLeader):
        ledger.build_block(chain.state, slot, actor.id_hash, actor.key,
                           actor.reveal_schedule.reveal_for_proposal(0),
                           [], [], chain.oracle)


def test_apply_rejects_wrong_proposer(chain, world):
    block, actor, _ = craft_block(chain, world)
    impostor = next(world.actors[c] for c in ("alpha", "beta", "gamma")
                    if world.actors[c].id_hash != block.proposer)
    block.proposer = impostor.id_hash
    block.signature = impostor.key.sign(block.signing_bytes())
    with pytest.raises(WrongProposer):
        chain.append(block)


def test_apply_rejects_bad_signature(chain, world):
    block, _, _ = craft_block(chain, world)
    block.signature = bytes(64)
    with pytest.raises(BadSignature):
        chain.append(block)


def test_apply_rejects_wrong_parent(chain, world):
    block, actor, _ = craft_block(chain, world)
    block.parent_hash = sha256(b"someone else's head")
    block.signature = actor.key.sign(block.signing_bytes())
    with pytest.raises(InvalidTransaction):
        chain.append(block)


def test_apply_rejects_stale_slot(chain, world):
    (block, _), = mine(chain, world, 1)
    with pytest.raises(InvalidTransaction):
        chain.append(block)                        # slot 1 twice


def test_apply_rejects_declared_root_lie(chain, world):
    block, actor, _ = craft_block(chain, world)
    block.state_root = sha256(b"fiction")
    block.signature = actor.key.sign(block.signing_bytes())
    with pytest.raises(StateRootMismatch):
        chain.append(block)
    assert chain.head_slot == 0                    # rejected block left no trace


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------

def test_save_load_is_stable(tmp_path, chain, world):
    mine(chain, world, 4)
    path = tmp_path / "net.chain"
    chain.save(path)
    first = path.read_bytes()
    for _ in range(3):
        reloaded = ledger.Chain.load(path)
        assert reloaded.state.state_root == chain.state.state_root
        assert reloaded.head_hash == chain.head_hash
        assert reloaded.summary() == chain.summary()
        chain.save(path)
        assert path.read_bytes() == first


def test_corrupt_first_line(tmp_path):
    path = tmp_path / "bad.chain"
    path.write_bytes(b"not json\n")
    with pytest.raises(CorruptLine) as err:
        ledger.Chain.load(path)
    assert err.value.line_no == 1
    assert err.value.chain is None


def test_corrupt_line_keeps_valid_prefix(tmp_path, chain, world):
    mine(chain, world, 3)
    path = tmp_path / "net.chain"
    chain.save(path)
    lines = path.read_bytes().splitlines()
    lines[2] = b"{truncated"                       # second block
    path.write_bytes(b"\n".join(lines) + b"\n")
    with pytest.raises(CorruptLine) as err:
        ledger.Chain.load(path)
    assert err.value.line_no == 3
    prefix = err.value.chain
    assert prefix.head_slot == 1
    assert prefix.blocks[0].block_hash == chain.blocks[0].block_hash


def test_replay_detects_root_mismatch(tmp_path, chain, world):
    mine(chain, world, 2)
    block, actor, _ = craft_block(chain, world)
    block.state_root = sha256(b"fiction")
    block.signature = actor.key.sign(block.signing_bytes())
    path = tmp_path / "net.chain"
    chain.save(path)
    with open(path, "ab") as fh:
        fh.write(ledger.canonical_json(block.to_dict()) + b"\n")
    with pytest.raises(RootMismatch) as err:
        ledger.Chain.load(path)
    assert err.value.slot == 3
    assert err.value.chain.head_slot == 2


def test_round_trips(chain, world):
    mine(chain, world, 2)
    block = chain.blocks[-1]
    again = ledger.Block.from_dict(block.to_dict())
    assert again.to_dict() == block.to_dict()
    assert again.block_hash == block.block_hash
    alpha = world.actors["alpha"]
    att = ledger.make_attestation(alpha.id_hash, 0, chain.genesis.block_hash,
                                  alpha.key)
    assert ledger.Attestation.from_dict(att.to_dict()).to_dict() == att.to_dict()
    tx = ledger.transfer_tx(alpha.id_hash, world.actors["beta"].id_hash, 2.5,
                            alpha.key)
    again_tx = ledger.Transaction.from_dict(tx.to_dict())
    assert again_tx.to_dict() == tx.to_dict()
    assert again_tx.tx_hash == tx.tx_hash


# ---------------------------------------------------------------------------
# transactions end to end
# ---------------------------------------------------------------------------

def test_register_endorse_settle_e2e():
    world = make_world(constants={"participation_multiplier": 10,
                                  "slots_per_epoch": 8})
    chain = ledger.Chain(world.genesis_config)
    key = SigningKey.from_label(b"ledger test", b"newcomer")
    vc = fresh_credential(world, "newcomer", key)
    proof = chain.oracle.prove(vc, key, chain.state.issuer_registry)
    rtx = ledger.register_tx(proof, sign_registration(proof, key))
    new_id = derive_id_hash(vc)
    gamma = world.actors["gamma"]
    e = cap.Endorsement(follower=new_id, creator=gamma.id_hash,
                        sponsor=gamma.id_hash, amount=50, fee=1.0,
                        submitted_epoch=0)
    e = cap.sign_endorsement(e, key, gamma.key)

    mine(chain, world, 1, mempools={1: [rtx, ledger.endorse_tx(e)]})
    acct = chain.state.capital.get(new_id)
    assert acct.passive_remaining == 50
    gacct = chain.state.capital.get(gamma.id_hash)
    assert gacct.active_received == 1200           # not settled yet
    assert gacct.pending[0].effective_epoch == 2
    assert gacct.token_balance == world.config.creator_tokens - 1.0

    mine(chain, world, 16)                         # cross the epoch-2 boundary
    gacct = chain.state.capital.get(gamma.id_hash)
    assert gacct.active_received == 1250
    assert gacct.received_from[new_id.hex] == 50
    entry = chain.state.validators.get(gamma.id_hash)
    assert entry.weight == pytest.approx(math.sqrt(1250), abs=1e-9)


def test_transfer_tx_moves_tokens(chain, world):
    alpha, beta = world.actors["alpha"], world.actors["beta"]
    tx = ledger.transfer_tx(alpha.id_hash, beta.id_hash, 25.0, alpha.key)
    mine(chain, world, 1, mempools={1: [tx]}, attest=False)
    start = world.config.creator_tokens
    assert chain.state.capital.get(alpha.id_hash).token_balance == start - 25.0
    assert chain.state.capital.get(beta.id_hash).token_balance == start + 25.0
    forged = ledger.transfer_tx(beta.id_hash, alpha.id_hash, 25.0, alpha.key)
    _, rejected = mine(chain, world, 1, mempools={2: [forged]},
                       attest=False)[0]
    assert isinstance(rejected[0][1], BadSignature)


def test_issuer_governance_on_chain(chain, world):
    alpha, beta, gamma = (world.actors[c] for c in ("alpha", "beta", "gamma"))
    new_issuer = SigningKey.from_label(b"ledger test", b"aux issuer")
    add = ledger.governance_issuer_tx(
        "add_issuer", "aux-issuer-1", new_issuer.public_key,
        [(alpha.id_hash, alpha.key), (beta.id_hash, beta.key)])
    mine(chain, world, 1, mempools={1: [add]})
    registry = chain.state.issuer_registry
    assert registry.is_accepted("aux-issuer-1")
    assert registry.public_key("aux-issuer-1") == new_issuer.public_key

    # one-third of the weight cannot remove an issuer
    weak_remove = ledger.governance_issuer_tx(
        "remove_issuer", "aux-issuer-1", new_issuer.public_key,
        [(gamma.id_hash, gamma.key)])
    _, rejected = mine(chain, world, 1, mempools={2: [weak_remove]})[0]
    assert isinstance(rejected[0][1], GovernanceRejected)
    assert chain.state.issuer_registry.is_accepted("aux-issuer-1")

    strong_remove = ledger.governance_issuer_tx(
        "remove_issuer", "aux-issuer-1", new_issuer.public_key,
        [(alpha.id_hash, alpha.key), (beta.id_hash, beta.key)])
    mine(chain, world, 1, mempools={3: [strong_remove]})
    assert not chain.state.issuer_registry.is_accepted("aux-issuer-1")


def test_offense_report_slashes_on_chain(chain, world):
    probe = chain.state.clone()
    probe.advance_to_slot(1)
    leader = consensus.elect_leader(probe.validators.active_pairs(),
                                    probe.epoch_mix, 1)
    offender = next(world.actors[c] for c in ("alpha", "beta", "gamma")
                    if world.actors[c].id_hash != leader)
    reporter = world.by_id[leader.digest]

    def header(root):
        h = {"slot": 9, "proposer": offender.id_hash.hex, "parent": "00" * 32,
             "state_root": root}
        h["signature"] = offender.key.sign(header_signing_bytes(h)).hex()
        return h

    evidence = {"header_a": header("11" * 32), "header_b": header("22" * 32)}
    tx = ledger.offense_report_tx(OFFENSE_EQUIVOCATION, offender.id_hash,
                                  evidence, reporter.id_hash, reporter.key)
    _, rejected = mine(chain, world, 1, mempools={1: [tx]})[0]
    assert rejected == []
    assert len(chain.state.offense_log) == 1
    record = chain.state.offense_log[0]
    assert record.kind == OFFENSE_EQUIVOCATION and record.severity == "major"
    entry = chain.state.validators.get(offender.id_hash)
    assert entry.status == "slashed" and entry.weight == 0.0
    acct = chain.state.capital.get(offender.id_hash)
    assert acct.scaling.function == "cbrt" and acct.scaling.divisor == 4.0
    assert acct.validator_status == cap.VS_SLASHED

    # the same evidence cannot be punished twice, whoever reports it
    other = next(world.actors[c] for c in ("alpha", "beta", "gamma")
                 if world.actors[c].id_hash not in (offender.id_hash,))
    dup = ledger.offense_report_tx(OFFENSE_EQUIVOCATION, offender.id_hash,
                                   evidence, other.id_hash, other.key)
    _, rejected = mine(chain, world, 1, mempools={2: [dup]})[0]
    assert len(rejected) == 1
    assert isinstance(rejected[0][1], InvalidTransaction)
    assert len(chain.state.offense_log) == 1


def test_duplicate_registration_rejected_in_block(chain, world):
    key = SigningKey.from_label(b"ledger test", b"dup holder")
    vc = fresh_credential(world, "dup", key)
    proof = chain.oracle.prove(vc, key, chain.state.issuer_registry)
    tx = ledger.register_tx(proof, sign_registration(proof, key))
    # same person re-issued under a fresh platform key: the issuer keeps the
    # vc_id, so the identity digest collides
    key2 = SigningKey.from_label(b"ledger test", b"dup holder 2")
    vc2 = issue_credential(
        world.issuer_key, world.issuer_id, platform_pubkey=key2.public_key,
        name="Ledger", surname="dup", residence="Testville",
        birth_number="lt-dup", place_of_birth="Testville",
        nationality="SIM", issued_at=datetime.date(2024, 1, 1),
        expires_at=datetime.date(2040, 1, 1), vc_id=vc.vc_id)
    assert derive_id_hash(vc2) == derive_id_hash(vc)
    proof2 = chain.oracle.prove(vc2, key2, chain.state.issuer_registry)
    tx2 = ledger.register_tx(proof2, sign_registration(proof2, key2))
    _, rejected = mine(chain, world, 1, mempools={1: [tx, tx2]})[0]
    assert len(rejected) == 1
    assert type(rejected[0][1]).__name__ == "DuplicateIdentity"
    assert chain.state.capital.get(derive_id_hash(vc)).platform_pubkey == \
        key.public_key

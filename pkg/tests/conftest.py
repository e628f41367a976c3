"""Shared fixtures: a small three-creator world and a block-mining helper."""
import pathlib

import pytest

from posc import consensus, ledger, netsim

FIXTURES = pathlib.Path(__file__).parent / "fixtures"

SMALL_WORLD = dict(
    seed=7,
    constants={"participation_multiplier": 10},
    creators=[{"label": "alpha", "followers": 30},
              {"label": "beta", "followers": 20},
              {"label": "gamma", "followers": 12}],
)


def make_world(**overrides) -> netsim.World:
    cfg = dict(SMALL_WORLD)
    cfg.update(overrides)
    return netsim.World(netsim.SimConfig(**cfg))


def mine(chain: ledger.Chain, world: netsim.World, slots: int,
         mempools=None, attest=True):
    """Drive ``slots`` blocks on ``chain`` with the scheduled leaders.

    ``mempools`` maps a slot number to the transactions offered to its
    proposer.  Returns a list of (block, rejected) pairs.
    """
    produced = []
    blocks_by = {}
    for block in chain.blocks:
        blocks_by[block.proposer.hex] = blocks_by.get(block.proposer.hex, 0) + 1
    for _ in range(slots):
        slot = chain.head_slot + 1
        probe = chain.state.clone()
        probe.advance_to_slot(slot)
        leader_id = consensus.elect_leader(probe.validators.active_pairs(),
                                           probe.epoch_mix, slot)
        actor = world.by_id[leader_id.digest]
        reveal = actor.reveal_schedule.reveal_for_proposal(
            blocks_by.get(leader_id.hex, 0))
        atts = _due_attestations(chain, world) if attest else []
        mempool = (mempools or {}).get(slot, [])
        block, rejected = chain.build_and_append(
            slot, leader_id, actor.key, reveal, mempool=mempool,
            attestation_pool=atts)
        blocks_by[leader_id.hex] = blocks_by.get(leader_id.hex, 0) + 1
        produced.append((block, rejected))
    return produced


def _due_attestations(chain, world):
    state = chain.state
    if not state.checkpoints:
        return []
    cp = state.checkpoints[max(state.checkpoints)]
    atts = []
    for vid, _w in state.validators.active_pairs():
        if vid.digest in cp.attesters:
            continue
        actor = world.by_id.get(vid.digest)
        if actor is None:
            continue
        atts.append(ledger.make_attestation(vid, cp.epoch, cp.block_root,
                                            actor.key))
    return atts


@pytest.fixture
def world():
    return make_world()


@pytest.fixture
def chain(world):
    return ledger.Chain(world.genesis_config)

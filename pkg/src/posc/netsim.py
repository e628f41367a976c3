"""Deterministic network simulation harness.

Builds a seeded world (issuer, creators, followers), boots a chain from it
and drives slot-by-slot block production through a discrete event queue.
Message latencies come from per-link hash streams keyed by (seed, src, dst,
counter), so adding an actor never perturbs anyone else's draws and two runs
with the same config produce byte-identical reports.

Four scripted adversaries are supported:

* ``sybil_registrar`` - replays the same identity proof many times,
* ``equivocator``     - signs two conflicting blocks for one slot,
* ``leader_dos``      - delays the elected leader's outbound messages,
* ``capital_hoarder`` - concentrates endorsements on one creator (no
  protocol violation; the report shows what scaling does to the share).
"""
from __future__ import annotations

import csv
import datetime as _dt
import heapq
import json
from dataclasses import dataclass, field

from . import capital as cap
from . import consensus as cons
from . import ledger
from .codec import sha256, u64_be
from .errors import ConfigError, ProtocolError
from .identity.credentials import IdHash, derive_id_hash, issue_credential
from .identity.proofs import ProvingOracle
from .identity.registration import sign_registration
from .identity.registry import IssuerRegistry
from .keys import SigningKey

BEACON = "@beacon"

BEHAVIORS = ("sybil_registrar", "equivocator", "leader_dos", "capital_hoarder")


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

@dataclass
class AdversaryScript:
    behavior: str
    start_slot: int = 2
    attempts: int = 100           # sybil_registrar: registration submissions
    delay_ms: int = 20_000        # leader_dos: added outbound delay
    duration_slots: int = 8       # leader_dos: attack window length
    as_creator: str | None = None  # equivocator / capital_hoarder identity

    def to_dict(self) -> dict:
        return {
            "behavior": self.behavior, "start_slot": self.start_slot,
            "attempts": self.attempts, "delay_ms": self.delay_ms,
            "duration_slots": self.duration_slots, "as_creator": self.as_creator,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "AdversaryScript":
        if data.get("behavior") not in BEHAVIORS:
            raise ConfigError("unknown adversary behavior %r" % data.get("behavior"))
        known = {"behavior", "start_slot", "attempts", "delay_ms",
                 "duration_slots", "as_creator"}
        bad = set(data) - known
        if bad:
            raise ConfigError("unknown adversary fields: %s" % sorted(bad))
        return cls(**data)


@dataclass
class SimConfig:
    seed: int = 1
    slots: int = 96
    latency_ms: tuple = (5, 50)
    constants: dict = field(default_factory=dict)
    creators: list = field(default_factory=lambda: [
        {"label": "alpha", "followers": 30},
        {"label": "beta", "followers": 20},
        {"label": "gamma", "followers": 12},
    ])
    extra_followers: int = 0
    creator_tokens: float = 1000.0
    adversary: AdversaryScript | None = None

    def __post_init__(self):
        if self.slots < 1:
            raise ConfigError("simulation needs at least one slot")
        lo, hi = self.latency_ms
        if not 0 <= lo <= hi:
            raise ConfigError("latency bounds must satisfy 0 <= lo <= hi")
        labels = [c["label"] for c in self.creators]
        if len(set(labels)) != len(labels):
            raise ConfigError("creator labels must be unique")

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "slots": self.slots,
            "latency_ms": list(self.latency_ms),
            "constants": self.constants,
            "creators": self.creators,
            "extra_followers": self.extra_followers,
            "creator_tokens": self.creator_tokens,
            "adversary": self.adversary.to_dict() if self.adversary else None,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SimConfig":
        known = {"seed", "slots", "latency_ms", "constants", "creators",
                 "extra_followers", "creator_tokens", "adversary"}
        bad = set(data) - known
        if bad:
            raise ConfigError("unknown config fields: %s" % sorted(bad))
        adv = data.get("adversary")
        defaults = cls()
        return cls(
            seed=data.get("seed", defaults.seed),
            slots=data.get("slots", defaults.slots),
            latency_ms=tuple(data.get("latency_ms", defaults.latency_ms)),
            constants=dict(data.get("constants", {})),
            creators=list(data.get("creators", defaults.creators)),
            extra_followers=data.get("extra_followers", 0),
            creator_tokens=data.get("creator_tokens", defaults.creator_tokens),
            adversary=AdversaryScript.from_dict(adv) if adv else None,
        )

    @classmethod
    def load(cls, path) -> "SimConfig":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


# ---------------------------------------------------------------------------
# world generation
# ---------------------------------------------------------------------------

@dataclass
class Actor:
    label: str
    kind: str                     # creator | follower | adversary
    key: SigningKey
    id_hash: IdHash
    vc: object = None
    reveal_schedule: cons.RevealSchedule | None = None
    blocks_on_chain: int = 0
    attested_epochs: set = field(default_factory=set)
    seen_headers: dict = field(default_factory=dict)


class World:
    """Deterministically generated actors plus a genesis config matching
    them: followers arrive with their whole budget already endorsed and
    settled, qualifying creators start as active validators."""

    def __init__(self, config: SimConfig):
        self.config = config
        seed_bytes = u64_be(config.seed)
        self._seed_bytes = seed_bytes
        self.issuer_id = "sim-issuer-1"
        self.issuer_key = SigningKey.from_label(b"sim issuer", seed_bytes)
        self.proof_secret = sha256(b"sim proof secret", seed_bytes)
        self.oracle = ProvingOracle(self.proof_secret)
        self.registry = IssuerRegistry()
        self.registry.bootstrap(self.issuer_id, self.issuer_key.public_key)
        self.actors: dict[str, Actor] = {}
        self.by_id: dict[bytes, Actor] = {}
        chain_len = config.slots + 16

        creator_records = []
        for spec in config.creators:
            creator = self.add_actor(spec["label"], "creator")
            creator.reveal_schedule = cons.RevealSchedule(
                self.randao_secret(creator.label), chain_len)
            creator_records.append((creator, spec["followers"]))
        follower_map = {}
        for creator, n_followers in creator_records:
            follower_map[creator.label] = [
                self.add_actor("%s.f%d" % (creator.label, j), "follower")
                for j in range(n_followers)]
        self.extra_followers = [self.add_actor("extra.f%d" % j, "follower")
                                for j in range(config.extra_followers)]

        self.params = ledger.DEFAULT_PARAMS.with_overrides(config.constants)
        budget = self.params.passive_budget
        accounts = []
        commitments = {}
        for creator, n_followers in creator_records:
            acct = cap.new_account(self.params, creator.id_hash, creator.key.public_key)
            acct.role = cap.ROLE_CREATOR
            acct.active_received = n_followers * budget
            acct.token_balance = config.creator_tokens
            acct.received_from = {f.id_hash.hex: budget
                                  for f in follower_map[creator.label]}
            if cap.meets_participation_threshold(acct.active_received, self.params):
                acct.validator_status = cap.VS_ACTIVE
                commitments[creator.id_hash.hex] = \
                    creator.reveal_schedule.initial_commitment.hex()
            accounts.append(acct)
            for follower in follower_map[creator.label]:
                facct = cap.new_account(self.params, follower.id_hash,
                                        follower.key.public_key)
                facct.passive_remaining = 0
                accounts.append(facct)
        for extra in self.extra_followers:
            accounts.append(cap.new_account(self.params, extra.id_hash,
                                            extra.key.public_key))

        self.genesis_config = {
            "constants": dict(config.constants),
            "proof_secret": self.proof_secret.hex(),
            "issuers": [{"issuer_id": self.issuer_id,
                         "public_key": self.issuer_key.public_key.hex()}],
            "accounts": [a.to_dict() for a in sorted(accounts, key=lambda a: a.id_hash)],
            "commitments": commitments,
        }

    def randao_secret(self, label: str) -> bytes:
        return sha256(b"randao secret", self._seed_bytes, label.encode())

    def add_actor(self, label: str, kind: str) -> Actor:
        key = SigningKey.from_label(b"sim actor", self._seed_bytes, label.encode())
        vc = issue_credential(
            self.issuer_key, self.issuer_id,
            platform_pubkey=key.public_key,
            name="Sim", surname=label,
            residence="Node %s" % label,
            birth_number="%d-%s" % (self.config.seed, label),
            place_of_birth="Simnet",
            nationality="SIM",
            issued_at=_dt.date(2024, 1, 1),
            expires_at=_dt.date(2040, 1, 1),
        )
        actor = Actor(label=label, kind=kind, key=key,
                      id_hash=derive_id_hash(vc), vc=vc)
        self.actors[label] = actor
        self.by_id[actor.id_hash.digest] = actor
        return actor

    def label_of(self, id_hash: IdHash) -> str:
        actor = self.by_id.get(id_hash.digest)
        return actor.label if actor else id_hash.hex[:12]

    def keystore(self) -> dict:
        """Secrets for driving the chain offline (CLI tooling)."""
        entries = {}
        for label in sorted(self.actors):
            actor = self.actors[label]
            entry = {"id_hash": actor.id_hash.hex, "seed": actor.key.seed.hex(),
                     "kind": actor.kind}
            if actor.reveal_schedule is not None:
                entry["randao_secret"] = self.randao_secret(label).hex()
                entry["chain_length"] = actor.reveal_schedule.length
            entries[label] = entry
        return {
            "issuer": {"issuer_id": self.issuer_id,
                       "seed": self.issuer_key.seed.hex()},
            "proof_secret": self.proof_secret.hex(),
            "actors": entries,
        }


# ---------------------------------------------------------------------------
# latency streams
# ---------------------------------------------------------------------------

class LatencyModel:
    """Per-link deterministic latency: draw k for link (src, dst) is
    ``lo + H(seed, src, dst, k) mod span``.  Links never share draws, so new
    actors cannot shift anyone else's timing."""

    def __init__(self, seed: int, lo: int, hi: int):
        self._seed = u64_be(seed)
        self.lo = lo
        self.hi = hi
        self._counters: dict[tuple, int] = {}

    def delay(self, src: str, dst: str) -> int:
        k = self._counters.get((src, dst), 0)
        self._counters[(src, dst)] = k + 1
        digest = sha256(b"latency", self._seed, src.encode(), b"->",
                        dst.encode(), u64_be(k))
        span = self.hi - self.lo + 1
        return self.lo + int.from_bytes(digest[:8], "big") % span


# ---------------------------------------------------------------------------
# simulation
# ---------------------------------------------------------------------------

@dataclass
class SimResult:
    report: dict
    chain: "ledger.Chain"
    world: World

    def report_json(self) -> str:
        return json.dumps(self.report, indent=2, sort_keys=True) + "\n"

    def csv_rows(self) -> list:
        rows = [("slot", "epoch", "leader", "status", "txs", "attestations",
                 "offenses")]
        for entry in self.report["slots"]:
            rows.append((str(entry["slot"]), str(entry["epoch"]), entry["leader"],
                         entry["status"], str(entry["txs"]),
                         str(entry["attestations"]), str(entry["offenses"])))
        return rows


class Simulator:
    def __init__(self, config: SimConfig):
        self.config = config
        self.world = World(config)
        self.params = self.world.params
        self.chain = ledger.Chain(self.world.genesis_config)
        self.latency = LatencyModel(config.seed, *config.latency_ms)
        self.events: list = []
        self._seq = 0
        self.mempool: list = []          # (arrival, seq, tx)
        self.att_pool: list = []
        self.candidates: dict[int, list] = {}   # slot -> [(arrival, seq, block)]
        self.slot_log: list = []
        self.rejections: dict[str, int] = {}
        self.registration_stats = {"accepted": 0, "rejected_duplicate": 0,
                                   "rejected_invalid": 0}
        self.power_by_epoch: dict[int, dict] = {}
        self._adv = config.adversary
        self._equivocated = False

    # -- event plumbing ------------------------------------------------------

    def _push(self, time_ms: int, kind: str, data) -> None:
        heapq.heappush(self.events, (time_ms, self._seq, kind, data))
        self._seq += 1

    def _drain(self, until_ms: int) -> None:
        while self.events and self.events[0][0] < until_ms:
            time_ms, seq, kind, data = heapq.heappop(self.events)
            if kind == "tx":
                self.mempool.append((time_ms, seq, data))
            elif kind == "attestation":
                self.att_pool.append((time_ms, seq, data))
            elif kind == "proposal":
                self.candidates.setdefault(data.slot, []).append((time_ms, seq, data))
            elif kind == "header":
                self._observe_header(time_ms, *data)

    # -- honest validator reactions -------------------------------------------

    def _observe_header(self, time_ms: int, observer_label: str, header: dict) -> None:
        observer = self.world.actors[observer_label]
        key = (header["slot"], header["proposer"])
        seen = observer.seen_headers.get(key)
        if seen is None:
            observer.seen_headers[key] = header
            return
        if cons.header_signing_bytes(seen) == cons.header_signing_bytes(header):
            return
        # two different signed headers for one (slot, proposer): report it
        offender = IdHash.from_hex(header["proposer"])
        first, second = sorted((seen, header), key=cons.header_signing_bytes)
        evidence = {"header_a": first, "header_b": second}
        tx = ledger.offense_report_tx(cons.OFFENSE_EQUIVOCATION, offender, evidence,
                                      observer.id_hash, observer.key)
        self._push(time_ms + self.latency.delay(observer_label, BEACON), "tx", tx)

    def _emit_attestations(self, now_ms: int) -> None:
        state = self.chain.state
        if not state.checkpoints:
            return
        epoch = max(state.checkpoints)
        cp = state.checkpoints[epoch]
        for vid, _w in state.validators.active_pairs():
            actor = self.world.by_id.get(vid.digest)
            if actor is None or epoch in actor.attested_epochs:
                continue
            actor.attested_epochs.add(epoch)
            att = ledger.make_attestation(vid, epoch, cp.block_root, actor.key)
            self._push(now_ms + self.latency.delay(actor.label, BEACON),
                       "attestation", att)

    def _inactivity_reports(self, leader: Actor) -> list:
        txs = []
        state = self.chain.state
        for digest, streak in sorted(state.missed_in_row.items()):
            if streak < self.params.inactivity_limit:
                continue
            offender = self.world.by_id.get(digest)
            if offender is None or offender.label == leader.label:
                continue
            evidence = {"validator": offender.id_hash.hex,
                        "consecutive_missed": streak}
            txs.append(ledger.offense_report_tx(
                cons.OFFENSE_INACTIVITY, offender.id_hash, evidence,
                leader.id_hash, leader.key))
        return txs

    # -- adversary scripts -------------------------------------------------------

    def _schedule_sybil(self) -> None:
        adv = self._adv
        sybil = self.world.add_actor("sybil", "adversary")
        proof = self.world.oracle.prove(sybil.vc, sybil.key, self.world.registry)
        sig = sign_registration(proof, sybil.key)
        tx = ledger.register_tx(proof, sig)
        base = adv.start_slot * self.params.slot_ms
        for i in range(adv.attempts):
            # resubmissions of the same identity, spread over time
            self._push(base + i * 37 + self.latency.delay("sybil", BEACON),
                       "tx", tx)

    def _schedule_hoarding(self) -> None:
        """Extra followers endorse the hoarding creator over time."""
        adv = self._adv
        target_label = adv.as_creator or self.config.creators[0]["label"]
        target = self.world.actors[target_label]
        base = adv.start_slot * self.params.slot_ms
        for i, extra in enumerate(self.world.extra_followers):
            e = cap.Endorsement(
                follower=extra.id_hash, creator=target.id_hash,
                sponsor=target.id_hash, amount=self.params.passive_budget,
                fee=0.0, submitted_epoch=0)
            e = cap.sign_endorsement(e, extra.key, target.key)
            self._push(base + i * 211 + self.latency.delay(extra.label, BEACON),
                       "tx", ledger.endorse_tx(e))

    def _dos_active(self, slot: int) -> bool:
        return (self._adv is not None
                and self._adv.behavior == "leader_dos"
                and self._adv.start_slot <= slot
                < self._adv.start_slot + self._adv.duration_slots)

    # -- block production -----------------------------------------------------------

    def _leader_for(self, slot: int):
        probe = self.chain.state.clone()
        try:
            probe.advance_to_slot(slot)
            return cons.elect_leader(probe.validators.active_pairs(),
                                     probe.epoch_mix, slot)
        except ProtocolError:
            return None

    def _take_pool(self, pool: list) -> list:
        items = [item for _, _, item in sorted(pool)]
        pool.clear()
        return items

    def _count_rejections(self, rejected) -> None:
        for tx, exc in rejected:
            name = type(exc).__name__
            self.rejections[name] = self.rejections.get(name, 0) + 1
            if tx.type == ledger.TX_REGISTER:
                if name == "DuplicateIdentity":
                    self.registration_stats["rejected_duplicate"] += 1
                else:
                    self.registration_stats["rejected_invalid"] += 1

    def _propose(self, slot: int, leader: Actor, now_ms: int) -> None:
        reveal = leader.reveal_schedule.reveal_for_proposal(leader.blocks_on_chain)
        mempool = self._inactivity_reports(leader) + self._take_pool(self.mempool)
        atts = self._take_pool(self.att_pool)
        try:
            block, rejected = ledger.build_block(
                self.chain.state, slot, leader.id_hash, leader.key, reveal,
                mempool, atts, self.chain.oracle)
        except ProtocolError as exc:
            name = type(exc).__name__
            self.rejections[name] = self.rejections.get(name, 0) + 1
            for tx in mempool:       # keep payloads for the next proposer
                self._push(now_ms, "tx", tx)
            for att in atts:
                self._push(now_ms, "attestation", att)
            return
        self._count_rejections(rejected)
        extra_delay = self._adv.delay_ms if self._dos_active(slot) else 0
        self._broadcast_block(block, leader, now_ms, extra_delay)
        if self._should_equivocate(slot, leader):
            alt = self._conflicting_block(slot, leader, reveal, atts)
            if alt is not None:
                self._broadcast_block(alt, leader, now_ms + 1, extra_delay)
                self._equivocated = True

    def _should_equivocate(self, slot: int, leader: Actor) -> bool:
        return (self._adv is not None
                and self._adv.behavior == "equivocator"
                and leader.label == self._adv.as_creator
                and slot >= self._adv.start_slot
                and not self._equivocated)

    def _conflicting_block(self, slot: int, leader: Actor, reveal: bytes, atts):
        """A second valid block for the same slot, distinguished by a
        self-transfer the honest sibling does not carry."""
        marker = ledger.transfer_tx(leader.id_hash, leader.id_hash, 1.0, leader.key)
        try:
            alt, _ = ledger.build_block(
                self.chain.state, slot, leader.id_hash, leader.key, reveal,
                [marker], atts, self.chain.oracle)
        except ProtocolError:
            return None
        return alt

    def _broadcast_block(self, block: ledger.Block, leader: Actor, now_ms: int,
                         extra_delay: int) -> None:
        self._push(now_ms + extra_delay + self.latency.delay(leader.label, BEACON),
                   "proposal", block)
        header = block.header_dict()
        for vid, _w in self.chain.state.validators.active_pairs():
            actor = self.world.by_id.get(vid.digest)
            if actor is None or actor.label == leader.label:
                continue
            self._push(
                now_ms + extra_delay + self.latency.delay(leader.label, actor.label),
                "header", (actor.label, header))

    def _canonicalize(self, slot: int, leader_id) -> dict:
        entry = {"slot": slot, "epoch": self.params.epoch_of_slot(slot),
                 "leader": self.world.label_of(leader_id) if leader_id else "",
                 "status": "missed", "txs": 0, "attestations": 0, "offenses": 0}
        arrivals = sorted(self.candidates.pop(slot, []))
        deadline = (slot + 1) * self.params.slot_ms
        offenses_before = len(self.chain.state.offense_log)
        applied = False
        for arrival, _seq, block in arrivals:
            if arrival >= deadline:
                continue
            if applied:
                entry["status"] = "equivocated"
                continue
            try:
                self.chain.append(block)
            except ProtocolError as exc:
                name = type(exc).__name__
                self.rejections[name] = self.rejections.get(name, 0) + 1
                continue
            applied = True
            entry["status"] = "produced"
            entry["txs"] = len(block.transactions)
            entry["attestations"] = len(block.attestations)
            proposer = self.world.by_id.get(block.proposer.digest)
            if proposer is not None:
                proposer.blocks_on_chain += 1
            for tx in block.transactions:
                if tx.type == ledger.TX_REGISTER:
                    self.registration_stats["accepted"] += 1
        entry["offenses"] = len(self.chain.state.offense_log) - offenses_before
        return entry

    def _snapshot_power(self) -> None:
        state = self.chain.state
        pairs = state.validators.active_pairs()
        total = sum(w for _, w in pairs)
        if total <= 0:
            return
        self.power_by_epoch[state.epoch] = {
            self.world.label_of(vid): round(w / total, 9) for vid, w in pairs}

    # -- main loop ---------------------------------------------------------------

    def run(self) -> SimResult:
        if self._adv is not None:
            if self._adv.behavior == "sybil_registrar":
                self._schedule_sybil()
            elif self._adv.behavior == "capital_hoarder":
                self._schedule_hoarding()
            elif self._adv.behavior == "equivocator" and self._adv.as_creator is None:
                self._adv.as_creator = self.config.creators[0]["label"]
        self._snapshot_power()
        last_epoch = self.chain.state.epoch
        pending_leader = None
        for slot in range(1, self.config.slots + 1):
            slot_start = slot * self.params.slot_ms
            self._drain(slot_start)
            if slot > 1:
                self.slot_log.append(self._canonicalize(slot - 1, pending_leader))
                if self.chain.state.epoch != last_epoch:
                    last_epoch = self.chain.state.epoch
                    self._snapshot_power()
                self._emit_attestations(slot_start)
            pending_leader = self._leader_for(slot)
            if pending_leader is not None:
                leader = self.world.by_id.get(pending_leader.digest)
                if leader is not None and leader.reveal_schedule is not None:
                    self._propose(slot, leader, slot_start)
        self._drain((self.config.slots + 1) * self.params.slot_ms)
        self.slot_log.append(self._canonicalize(self.config.slots, pending_leader))
        if self.chain.state.epoch != last_epoch:
            self._snapshot_power()
        return SimResult(report=self._build_report(), chain=self.chain,
                         world=self.world)

    # -- reporting ------------------------------------------------------------------

    def _validator_rows(self) -> list:
        state = self.chain.state
        total_active = sum(a.active_received
                           for a in state.capital.accounts.values()) or 1
        pairs = dict(state.validators.active_pairs())
        total_weight = sum(pairs.values()) or 1.0
        rows = []
        for key in sorted(state.validators.entries):
            entry = state.validators.entries[key]
            acct = state.capital.accounts[key]
            rows.append({
                "label": self.world.label_of(entry.id_hash),
                "id_hash": entry.id_hash.hex,
                "status": entry.status,
                "active_capital": acct.active_received,
                "raw_share": round(acct.active_received / total_active, 9),
                "effective_weight": round(entry.weight, 9),
                "power": round(pairs.get(entry.id_hash, 0.0) / total_weight, 9),
            })
        return rows

    def _build_report(self) -> dict:
        state = self.chain.state
        produced = sum(1 for e in self.slot_log if e["status"] != "missed")
        validators = self._validator_rows()
        return {
            "config": self.config.to_dict(),
            "slots": self.slot_log,
            "summary": {
                "slots": self.config.slots,
                "produced": produced,
                "missed": self.config.slots - produced,
                "finalized_epochs": state.finalized_epochs(),
                "head_slot": state.slot,
                "state_root": state.state_root.hex(),
                "chain_blocks": len(self.chain.blocks),
            },
            "validators": validators,
            "offenses": state.offense_snapshot(),
            "rejections": dict(sorted(self.rejections.items())),
            "registrations": self.registration_stats,
            "power_by_epoch": {str(e): p
                               for e, p in sorted(self.power_by_epoch.items())},
            "attack": self._attack_summary(validators),
        }

    def _attack_summary(self, validators: list) -> dict:
        if self._adv is None:
            return {}
        state = self.chain.state
        summary = {"behavior": self._adv.behavior}
        if self._adv.behavior == "sybil_registrar":
            summary.update(self.registration_stats)
            sybil = self.world.actors.get("sybil")
            registered = sybil is not None and state.capital.has(sybil.id_hash)
            summary["identity_registered"] = bool(registered)
            entry = state.validators.get(sybil.id_hash) if registered else None
            summary["adversary_power"] = (
                entry.weight if entry is not None and entry.status == cons.ACTIVE
                else 0.0)
        elif self._adv.behavior == "equivocator":
            label = self._adv.as_creator
            offense_epochs = [o["epoch"] for o in state.offense_snapshot()
                              if o["kind"] == cons.OFFENSE_EQUIVOCATION
                              and self.world.label_of(
                                  IdHash.from_hex(o["offender"])) == label]
            summary["offense_recorded"] = bool(offense_epochs)
            if offense_epochs:
                oe = offense_epochs[0]
                epochs = sorted(self.power_by_epoch)
                before = self.power_by_epoch.get(oe, {})
                later = [e for e in epochs if e > oe]
                after = self.power_by_epoch.get(later[0], {}) if later else {}
                summary["offense_epoch"] = oe
                summary["offender_power_before"] = before.get(label, 0.0)
                summary["offender_power_after"] = after.get(label, 0.0)
                summary["others_non_decreasing"] = bool(after) and all(
                    after.get(l, 0.0) >= before.get(l, 0.0) - 1e-12
                    for l in before if l != label)
        elif self._adv.behavior == "leader_dos":
            lo = self._adv.start_slot
            hi = lo + self._adv.duration_slots
            missed = [e["slot"] for e in self.slot_log
                      if lo <= e["slot"] < hi and e["status"] == "missed"]
            tail = [e for e in self.slot_log if e["slot"] >= hi]
            summary["window"] = [lo, hi - 1]
            summary["delay_ms"] = self._adv.delay_ms
            summary["missed_in_window"] = missed
            summary["recovered"] = any(e["status"] == "produced" for e in tail)
        elif self._adv.behavior == "capital_hoarder":
            label = self._adv.as_creator or self.config.creators[0]["label"]
            row = next((v for v in validators if v["label"] == label), None)
            if row is not None:
                summary["hoarder"] = label
                summary["raw_share"] = row["raw_share"]
                summary["power_share"] = row["power"]
                summary["raw_exceeds_third"] = row["raw_share"] > 1 / 3
                summary["power_exceeds_third"] = row["power"] > 1 / 3
        return summary


def run_simulation(config: SimConfig) -> SimResult:
    return Simulator(config).run()


def write_report(result: SimResult, json_path=None, csv_path=None) -> None:
    if json_path:
        with open(json_path, "w", encoding="utf-8") as fh:
            fh.write(result.report_json())
    if csv_path:
        with open(csv_path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerows(result.csv_rows())

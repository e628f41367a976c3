"""Command-line entry point.

Subcommands:

* ``keys generate``                    - print a fresh (or seeded) keypair
* ``sim run <config.json>``            - run a network simulation
* ``chain init|append|verify <path>``  - manage a local chain file
* ``register|endorse|reassign``        - queue transactions for the local chain
* ``analyze table1|gini|bench``        - power tables, Gini, kernel benchmark

Every command is non-interactive.  Exit codes: 0 success, 1 domain error
(the error class name goes to stderr), 2 usage error.  ``--format`` picks
json or csv instead of the human-readable default.  Sidecar files for the
local chain workflow (keystore, pending-transaction pool) live next to the
chain file unless ``--data-dir`` points elsewhere.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from datetime import date
from pathlib import Path

from . import analysis, consensus, kernels, ledger, netsim
from . import capital as cap
from .errors import ConfigError, NotFound, ProtocolError
from .identity.credentials import IdHash, derive_id_hash, issue_credential
from .identity.registration import sign_registration
from .keys import SigningKey


def _default_data_dir() -> Path:
    return Path(os.environ.get("HOME", ".")) / ".posc"


def _emit(args, payload: dict, human: str) -> None:
    if args.format == "json":
        print(json.dumps(payload, indent=2, sort_keys=True))
    elif args.format == "csv":
        rows = payload.get("csv") or [list(payload.keys()),
                                      [payload[k] for k in payload]]
        buf = io.StringIO()
        csv.writer(buf).writerows(rows)
        print(buf.getvalue(), end="")
    else:
        print(human, end="" if human.endswith("\n") else "\n")


# ---------------------------------------------------------------------------
# keys
# ---------------------------------------------------------------------------

def cmd_keys_generate(args) -> int:
    if args.seed is not None:
        key = SigningKey.from_label(b"cli keypair", str(args.seed).encode())
    else:
        key = SigningKey(os.urandom(32))
    payload = {"seed": key.seed.hex(), "public_key": key.public_key.hex()}
    _emit(args, payload,
          "seed        %s\npublic key  %s" % (payload["seed"],
                                              payload["public_key"]))
    return 0


# ---------------------------------------------------------------------------
# sim
# ---------------------------------------------------------------------------

def cmd_sim_run(args) -> int:
    config = netsim.SimConfig.load(args.config)
    if args.seed is not None:
        config.seed = args.seed
    result = netsim.run_simulation(config)
    netsim.write_report(result, json_path=args.report, csv_path=args.csv)
    if args.chain:
        result.chain.save(args.chain)
    summary = result.report["summary"]
    if args.format == "json":
        print(result.report_json(), end="")
    elif args.format == "csv":
        buf = io.StringIO()
        csv.writer(buf).writerows(result.csv_rows())
        print(buf.getvalue(), end="")
    else:
        lines = ["slots %(slots)d  produced %(produced)d  missed %(missed)d"
                 % summary,
                 "finalized epochs: %s" % (summary["finalized_epochs"] or "-"),
                 "state root: %s" % summary["state_root"]]
        attack = result.report["attack"]
        if attack:
            lines.append("attack: %s" % json.dumps(attack, sort_keys=True))
        print("\n".join(lines))
    return 0


# ---------------------------------------------------------------------------
# local chain workflow
# ---------------------------------------------------------------------------

def _sidecar(args, suffix: str) -> Path:
    chain_path = Path(args.path)
    base = Path(args.data_dir) if args.data_dir else chain_path.parent
    return base / (chain_path.name + suffix)


def _load_keystore(args) -> dict:
    path = _sidecar(args, ".keys.json")
    if not path.exists():
        raise NotFound("keystore %s missing (run chain init first)" % path)
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def _load_pool(args) -> list:
    path = _sidecar(args, ".pool.json")
    if not path.exists():
        return []
    with open(path, "r", encoding="utf-8") as fh:
        return [ledger.Transaction.from_dict(tx) for tx in json.load(fh)]


def _save_pool(args, txs: list) -> None:
    path = _sidecar(args, ".pool.json")
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump([tx.to_dict() for tx in txs], fh, indent=2, sort_keys=True)
        fh.write("\n")


def _actor_entry(keystore: dict, label: str) -> dict:
    try:
        return keystore["actors"][label]
    except KeyError:
        raise NotFound("no actor %r in keystore" % label) from None


def _actor_key(keystore: dict, label: str) -> SigningKey:
    return SigningKey(bytes.fromhex(_actor_entry(keystore, label)["seed"]))


def _actor_id(keystore: dict, label: str) -> IdHash:
    return IdHash.from_hex(_actor_entry(keystore, label)["id_hash"])


def _parse_creators(spec: str) -> list:
    creators = []
    for part in spec.split(","):
        label, _, count = part.partition(":")
        if not label or not count.isdigit():
            raise ConfigError("bad creator spec %r (want label:count)" % part)
        creators.append({"label": label, "followers": int(count)})
    return creators


def cmd_chain_init(args) -> int:
    config = netsim.SimConfig(
        seed=args.seed if args.seed is not None else 1,
        constants=json.loads(args.constants),
        creators=_parse_creators(args.creators))
    world = netsim.World(config)
    chain = ledger.Chain(world.genesis_config)
    Path(args.path).parent.mkdir(parents=True, exist_ok=True)
    chain.save(args.path)
    keys_path = _sidecar(args, ".keys.json")
    keys_path.parent.mkdir(parents=True, exist_ok=True)
    with open(keys_path, "w", encoding="utf-8") as fh:
        json.dump(world.keystore(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    payload = dict(chain.summary())
    payload["keystore"] = str(keys_path)
    _emit(args, payload, "initialized %s\n%s" % (
        args.path, json.dumps(payload, indent=2, sort_keys=True)))
    return 0


def _reveal_for(chain: ledger.Chain, keystore: dict, proposer: IdHash) -> bytes:
    for label, entry in keystore["actors"].items():
        if entry["id_hash"] != proposer.hex or "randao_secret" not in entry:
            continue
        schedule = consensus.RevealSchedule(
            bytes.fromhex(entry["randao_secret"]), entry["chain_length"])
        produced = sum(1 for b in chain.blocks if b.proposer == proposer)
        return schedule.reveal_for_proposal(produced)
    raise NotFound("no randao secret for proposer %s" % proposer.hex)


def _keystore_attestations(chain: ledger.Chain, keystore: dict,
                           label_by_id: dict) -> list:
    """One attestation per active keystore validator for the newest
    checkpoint it has not yet signed."""
    state = chain.state
    if not state.checkpoints:
        return []
    cp = state.checkpoints[max(state.checkpoints)]
    atts = []
    for vid, _w in state.validators.active_pairs():
        label = label_by_id.get(vid.hex)
        if label is None or vid.digest in cp.attesters:
            continue
        atts.append(ledger.make_attestation(vid, cp.epoch, cp.block_root,
                                            _actor_key(keystore, label)))
    return atts


def cmd_chain_append(args) -> int:
    chain = ledger.Chain.load(args.path)
    keystore = _load_keystore(args)
    pool = _load_pool(args)
    label_by_id = {e["id_hash"]: lbl for lbl, e in keystore["actors"].items()}
    mined = []
    rejected_all = []
    for _ in range(args.slots):
        slot = chain.head_slot + 1
        probe = chain.state.clone()
        probe.advance_to_slot(slot)
        proposer = consensus.elect_leader(probe.validators.active_pairs(),
                                          probe.epoch_mix, slot)
        block, rejected = chain.build_and_append(
            slot, proposer, _actor_key(keystore, label_by_id[proposer.hex]),
            _reveal_for(chain, keystore, proposer), mempool=pool,
            attestation_pool=_keystore_attestations(chain, keystore, label_by_id))
        rejected_all.extend((tx, exc) for tx, exc in rejected)
        pool = []
        mined.append({"slot": slot, "proposer": label_by_id[proposer.hex],
                      "txs": len(block.transactions),
                      "hash": block.block_hash.hex()})
    chain.save(args.path)
    _save_pool(args, [])
    payload = {"mined": mined,
               "rejected": [{"type": tx.type, "error": type(exc).__name__}
                            for tx, exc in rejected_all],
               "head": chain.summary()}
    human = ["mined %d block(s), head slot %d" % (len(mined), chain.head_slot)]
    human += ["  slot %(slot)d by %(proposer)s: %(txs)d tx(s)" % m for m in mined]
    for entry in payload["rejected"]:
        human.append("  rejected %(type)s: %(error)s" % entry)
    _emit(args, payload, "\n".join(human))
    return 0


def cmd_chain_verify(args) -> int:
    chain = ledger.Chain.load(args.path)
    payload = chain.summary()
    _emit(args, payload, "ok: %s" % json.dumps(payload, sort_keys=True))
    return 0


def cmd_register(args) -> int:
    keystore = _load_keystore(args)
    chain = ledger.Chain.load(args.path)
    issuer_key = SigningKey(bytes.fromhex(keystore["issuer"]["seed"]))
    key = SigningKey.from_label(b"cli actor", args.label.encode(),
                                bytes.fromhex(keystore["proof_secret"]))
    vc = issue_credential(
        issuer_key, keystore["issuer"]["issuer_id"],
        platform_pubkey=key.public_key,
        name="Cli", surname=args.label, residence="Local",
        birth_number="cli-%s" % args.label, place_of_birth="Local",
        nationality="SIM", issued_at=date(2024, 1, 1),
        expires_at=date(2040, 1, 1))
    proof = chain.oracle.prove(vc, key, chain.state.issuer_registry)
    tx = ledger.register_tx(proof, sign_registration(proof, key))
    pool = _load_pool(args)
    pool.append(tx)
    _save_pool(args, pool)
    keystore["actors"][args.label] = {"id_hash": derive_id_hash(vc).hex,
                                      "seed": key.seed.hex(), "kind": "cli"}
    with open(_sidecar(args, ".keys.json"), "w", encoding="utf-8") as fh:
        json.dump(keystore, fh, indent=2, sort_keys=True)
        fh.write("\n")
    payload = {"queued": "register", "label": args.label,
               "id_hash": derive_id_hash(vc).hex, "pool_size": len(pool)}
    _emit(args, payload, "queued registration of %s (%s)"
          % (args.label, payload["id_hash"][:16]))
    return 0


def cmd_endorse(args) -> int:
    keystore = _load_keystore(args)
    sponsor = args.sponsor or args.creator
    endorsement = cap.Endorsement(
        follower=_actor_id(keystore, args.follower),
        creator=_actor_id(keystore, args.creator),
        sponsor=_actor_id(keystore, sponsor),
        amount=args.amount, fee=args.fee, submitted_epoch=0)
    endorsement = cap.sign_endorsement(endorsement,
                                       _actor_key(keystore, args.follower),
                                       _actor_key(keystore, sponsor))
    pool = _load_pool(args)
    pool.append(ledger.endorse_tx(endorsement))
    _save_pool(args, pool)
    payload = {"queued": "endorse", "follower": args.follower,
               "creator": args.creator, "amount": args.amount,
               "pool_size": len(pool)}
    _emit(args, payload, "queued endorsement %s -> %s (%g units)"
          % (args.follower, args.creator, args.amount))
    return 0


def cmd_reassign(args) -> int:
    keystore = _load_keystore(args)
    reassignment = cap.Reassignment(
        follower=_actor_id(keystore, args.follower),
        from_creator=_actor_id(keystore, args.from_creator),
        to_creator=_actor_id(keystore, args.to_creator),
        sponsor=_actor_id(keystore, args.to_creator),
        amount=args.amount, fee=args.fee, submitted_epoch=0)
    reassignment = cap.sign_reassignment(reassignment,
                                         _actor_key(keystore, args.follower),
                                         _actor_key(keystore, args.to_creator))
    pool = _load_pool(args)
    pool.append(ledger.reassign_tx(reassignment))
    _save_pool(args, pool)
    payload = {"queued": "reassign", "follower": args.follower,
               "from": args.from_creator, "to": args.to_creator,
               "amount": args.amount, "pool_size": len(pool)}
    _emit(args, payload, "queued reassignment %s: %s -> %s (%g units)"
          % (args.follower, args.from_creator, args.to_creator, args.amount))
    return 0


# ---------------------------------------------------------------------------
# analyze
# ---------------------------------------------------------------------------

def cmd_analyze_table1(args) -> int:
    shares = [float(s) for s in args.shares.split(",")]
    table = analysis.power_table(shares)
    if args.format == "json":
        payload = {"shares": list(table.shares),
                   "rows": {k: list(v) for k, v in table.rows.items()},
                   "flagged": {k: list(v) for k, v in table.flagged.items()},
                   "notes": table.notes}
        print(json.dumps(payload, indent=2, sort_keys=True))
    elif args.format == "csv":
        buf = io.StringIO()
        csv.writer(buf).writerows(table.csv_rows())
        print(buf.getvalue(), end="")
    else:
        print(table.render(), end="")
    return 0


def cmd_analyze_gini(args) -> int:
    dist = analysis.Distribution.from_csv(args.csv)
    raw = analysis.gini(dist)
    payload = {"label": dist.label, "n": len(dist), "gini": raw}
    human = ["%s: n=%d  gini=%.6f" % (dist.label, len(dist), raw)]
    if args.scaled:
        for function in args.scaled:
            value = analysis.scaled_gini(dist, function)
            payload["gini_%s" % function] = value
            human.append("  %s-scaled gini=%.6f (reduction %.1f%%)"
                         % (function, value, 100 * (1 - value / raw)))
    _emit(args, payload, "\n".join(human))
    return 0


def cmd_analyze_bench(args) -> int:
    report = analysis.threshold_benchmark(args.n, threads=args.threads,
                                          repeats=args.repeats)
    if args.format == "json":
        print(json.dumps(report, indent=2, sort_keys=True))
        return 0
    lines = ["n=%d threads=%d repeats=%d (default backend: %s)"
             % (report["n"], report["threads"], report["repeats"],
                report["default_backend"])]
    for backend, entry in report["backends"].items():
        lines.append("%-9s serial %8.4fs (%6.2f ns/el)  "
                     "parallel %8.4fs  speedup %.2fx"
                     % (backend, entry["serial"]["total_s"],
                        entry["serial"]["ns_per_element"],
                        entry["parallel"]["total_s"], entry["speedup"]))
    print("\n".join(lines))
    return 0


# ---------------------------------------------------------------------------
# wiring
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="posc", description="social-capital consensus toolkit")
    parser.add_argument("--format", choices=("text", "json", "csv"),
                        default="text")
    parser.add_argument("--data-dir", default=None,
                        help="directory for keystore/pool sidecar files "
                             "(default: next to the chain file)")
    sub = parser.add_subparsers(dest="command", required=True)

    keys = sub.add_parser("keys", help="key management")
    keys_sub = keys.add_subparsers(dest="action", required=True)
    kgen = keys_sub.add_parser("generate")
    kgen.add_argument("--seed", type=int, default=None)
    kgen.set_defaults(func=cmd_keys_generate)

    sim = sub.add_parser("sim", help="network simulation")
    sim_sub = sim.add_subparsers(dest="action", required=True)
    srun = sim_sub.add_parser("run")
    srun.add_argument("config")
    srun.add_argument("--seed", type=int, default=None)
    srun.add_argument("--report", default=None, help="write JSON report here")
    srun.add_argument("--csv", default=None, help="write per-slot CSV here")
    srun.add_argument("--chain", default=None, help="save the chain file here")
    srun.set_defaults(func=cmd_sim_run)

    chain = sub.add_parser("chain", help="local chain file management")
    chain_sub = chain.add_subparsers(dest="action", required=True)
    cinit = chain_sub.add_parser("init")
    cinit.add_argument("path")
    cinit.add_argument("--seed", type=int, default=None)
    cinit.add_argument("--creators", default="alpha:30,beta:20,gamma:12")
    cinit.add_argument("--constants", default='{"participation_multiplier": 10}')
    cinit.set_defaults(func=cmd_chain_init)
    cappend = chain_sub.add_parser("append")
    cappend.add_argument("path")
    cappend.add_argument("--slots", type=int, default=1)
    cappend.set_defaults(func=cmd_chain_append)
    cverify = chain_sub.add_parser("verify")
    cverify.add_argument("path")
    cverify.set_defaults(func=cmd_chain_verify)

    reg = sub.add_parser("register", help="queue an identity registration")
    reg.add_argument("path")
    reg.add_argument("--label", required=True)
    reg.set_defaults(func=cmd_register)

    end = sub.add_parser("endorse", help="queue an endorsement")
    end.add_argument("path")
    end.add_argument("--follower", required=True)
    end.add_argument("--creator", required=True)
    end.add_argument("--sponsor", default=None)
    end.add_argument("--amount", type=int, default=100)
    end.add_argument("--fee", type=float, default=1.0)
    end.set_defaults(func=cmd_endorse)

    rea = sub.add_parser("reassign", help="queue a reassignment")
    rea.add_argument("path")
    rea.add_argument("--follower", required=True)
    rea.add_argument("--from", dest="from_creator", required=True)
    rea.add_argument("--to", dest="to_creator", required=True)
    rea.add_argument("--amount", type=int, required=True)
    rea.add_argument("--fee", type=float, default=1.0)
    rea.set_defaults(func=cmd_reassign)

    analyze = sub.add_parser("analyze", help="tables, Gini, benchmark")
    analyze_sub = analyze.add_subparsers(dest="action", required=True)
    t1 = analyze_sub.add_parser("table1")
    t1.add_argument("--shares", default="40,25,15,12,8")
    t1.set_defaults(func=cmd_analyze_table1)
    gini_p = analyze_sub.add_parser("gini")
    gini_p.add_argument("csv")
    gini_p.add_argument("--scaled", action="append",
                        choices=sorted(kernels.FUNC_IDS), default=None)
    gini_p.set_defaults(func=cmd_analyze_gini)
    bench = analyze_sub.add_parser("bench")
    bench.add_argument("n", type=int)
    bench.add_argument("threads", type=int)
    bench.add_argument("--repeats", type=int, default=5)
    bench.set_defaults(func=cmd_analyze_bench)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ProtocolError as exc:
        print("%s: %s" % (type(exc).__name__, exc), file=sys.stderr)
        return 1
    except OSError as exc:
        print("%s: %s" % (type(exc).__name__, exc), file=sys.stderr)
        return 1
    except (ValueError, KeyError) as exc:
        print("%s: %s" % (type(exc).__name__, exc), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

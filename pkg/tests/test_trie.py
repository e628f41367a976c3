"""State-trie tests: flat-map equivalence, permutation-invariant roots,
inclusion proofs with tamper rejection, and depth statistics.

FIXTURE_ROOT is the frozen output of tests/oracles/make_fixtures.py for the
100 pinned keys (sha256 of "trie fixture <i>").
"""
import hashlib
import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from posc.errors import DuplicateIdentity, NotFound, ValidationError
from posc.identity.trie import EMPTY_ROOT, Trie

FIXTURE_ROOT = "e09e9982ba59dec4091f6bb5fbefa2f01fdee433e9dee30e0afe3406637bcd74"


def fixture_items(n=100):
    return [(hashlib.sha256(b"trie fixture %d" % i).digest(), b"account %d" % i)
            for i in range(n)]


def build(items):
    trie = Trie()
    for key, value in items:
        trie = trie.insert(key, value)
    return trie


def test_empty_root_constant():
    assert Trie().root == EMPTY_ROOT == hashlib.sha256(b"empty trie").digest()
    assert len(Trie()) == 0


def test_fixture_root_frozen():
    assert build(fixture_items()).root.hex() == FIXTURE_ROOT


def test_root_is_insert_order_independent():
    items = fixture_items(60)
    base = build(items).root
    rng = random.Random(11)
    for _ in range(4):
        shuffled = items[:]
        rng.shuffle(shuffled)
        assert build(shuffled).root == base


def test_flat_map_equivalence():
    rng = random.Random(3)
    reference = {}
    trie = Trie()
    for i in range(300):
        key = hashlib.sha256(b"fm %d" % rng.randrange(10**9)).digest()
        if key in reference:
            continue
        value = b"v%d" % i
        reference[key] = value
        trie = trie.insert(key, value)
    assert len(trie) == len(reference)
    for key, value in reference.items():
        assert trie.get(key) == value
        assert key in trie
    assert trie.get(hashlib.sha256(b"absent").digest()) is None
    assert list(trie.items()) == sorted(reference.items())


def test_insert_rejects_duplicates_and_update_requires_presence():
    key = hashlib.sha256(b"dup").digest()
    trie = Trie().insert(key, b"one")
    with pytest.raises(DuplicateIdentity):
        trie.insert(key, b"two")
    with pytest.raises(NotFound):
        trie.update(hashlib.sha256(b"other").digest(), b"x")
    updated = trie.update(key, b"two")
    assert updated.get(key) == b"two"
    assert updated.root != trie.root
    assert len(updated) == len(trie) == 1


def test_persistence_old_handle_unchanged():
    items = fixture_items(20)
    base = build(items)
    root_before = base.root
    grown = base.insert(hashlib.sha256(b"extra").digest(), b"x")
    changed = base.update(items[0][0], b"patched")
    assert base.root == root_before
    assert base.get(items[0][0]) == items[0][1]
    assert grown.root != root_before and len(grown) == 21
    assert changed.get(items[0][0]) == b"patched"


def test_values_must_be_bytes():
    with pytest.raises(ValidationError):
        Trie().insert(hashlib.sha256(b"k").digest(), {"no": "dicts"})


def test_inclusion_proofs_verify_and_resist_tampering():
    items = fixture_items(40)
    trie = build(items)
    root = trie.root
    for key, value in items[:10]:
        proof = trie.prove_inclusion(key)
        assert Trie.verify_inclusion(root, key, proof)
        assert Trie.verify_inclusion(root, key, proof, expected_value=value)
        assert not Trie.verify_inclusion(root, key, proof,
                                         expected_value=b"forged")
        # every byte of every node is load-bearing
        for node_i, raw in enumerate(proof):
            mutated = list(proof)
            flipped = bytearray(raw)
            flipped[len(flipped) // 2] ^= 0x40
            mutated[node_i] = bytes(flipped)
            assert not Trie.verify_inclusion(root, key, mutated)
        # a proof for one key never verifies another
        other = items[11][0]
        assert not Trie.verify_inclusion(root, other, proof)
    with pytest.raises(NotFound):
        trie.prove_inclusion(hashlib.sha256(b"missing").digest())
    assert not Trie.verify_inclusion(hashlib.sha256(b"wrong root").digest(),
                                     items[0][0],
                                     trie.prove_inclusion(items[0][0]))
    assert not Trie.verify_inclusion(root, items[0][0], [])


def test_truncated_and_extended_proofs_fail():
    trie = build(fixture_items(40))
    key = fixture_items(1)[0][0]
    proof = trie.prove_inclusion(key)
    if len(proof) > 1:
        assert not Trie.verify_inclusion(trie.root, key, proof[:-1])
    assert not Trie.verify_inclusion(trie.root, key, proof + [proof[-1]])


def test_depth_statistics():
    n = 4096
    trie = build([(hashlib.sha256(b"depth %d" % i).digest(), b"x")
                  for i in range(n)])
    depths = trie.leaf_depths()
    assert len(depths) == n
    mean = trie.mean_leaf_depth()
    expected = math.ceil(math.log(n, 16))
    assert expected - 2 <= mean <= expected + 2
    single = Trie().insert(hashlib.sha256(b"only").digest(), b"x")
    assert single.leaf_depths() == [0]
    assert single.mean_leaf_depth() == 0.0


def json_items(n):
    """Snapshot-compatible items: values are canonical-JSON account blobs."""
    from posc.codec import canonical_json
    return [(hashlib.sha256(b"snap %d" % i).digest(),
             canonical_json({"balance": i, "tag": "a%d" % i}))
            for i in range(n)]


def test_snapshot_round_trip(tmp_path):
    trie = build(json_items(30))
    snap = trie.to_snapshot()
    again = Trie.from_snapshot(snap)
    assert again.root == trie.root
    assert list(again.items()) == list(trie.items())
    path = tmp_path / "trie.json"
    trie.save(path)
    assert Trie.load(path).root == trie.root


def test_snapshot_rejects_root_mismatch():
    trie = build(json_items(5))
    snap = trie.to_snapshot()
    snap["root"] = "00" * 32
    with pytest.raises(ValidationError):
        Trie.from_snapshot(snap)


@settings(max_examples=60, deadline=None)
@given(st.sets(st.binary(min_size=32, max_size=32), min_size=1, max_size=40))
def test_random_key_sets_behave_like_dict(keys):
    keys = sorted(keys)
    trie = Trie()
    for i, key in enumerate(keys):
        trie = trie.insert(key, b"v%d" % i)
    assert len(trie) == len(keys)
    for i, key in enumerate(keys):
        assert trie.get(key) == b"v%d" % i
        proof = trie.prove_inclusion(key)
        assert Trie.verify_inclusion(trie.root, key, proof, b"v%d" % i)

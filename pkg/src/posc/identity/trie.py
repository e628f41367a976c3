"""Sparse Merkle Patricia trie over 32-byte keys, radix 16.

Nodes are immutable; every mutation returns a new trie that shares all
untouched subtrees with its parent, which makes state snapshots cheap.
Three node kinds exist: leaves (remaining key nibbles + value), extensions
(shared nibble run + single child) and 16-way branches.  Node hashes are
computed lazily and cached, so bulk inserts pay for hashing once.

Keys all have the same nibble length, which guarantees that two distinct
keys always diverge before either one ends; branches therefore never carry
values of their own.
"""
from __future__ import annotations

import json

from ..codec import HASH_SIZE, length_prefixed, read_prefixed, sha256
from ..errors import DuplicateIdentity, NotFound, ValidationError

KEY_NIBBLES = HASH_SIZE * 2
EMPTY_ROOT = sha256(b"empty trie")

_LEAF_TAG = b"L"
_EXT_TAG = b"E"
_BRANCH_TAG = b"B"


def key_nibbles(key: bytes) -> tuple:
    if len(key) != HASH_SIZE:
        raise ValidationError("trie keys must be %d bytes" % HASH_SIZE)
    out = []
    for b in key:
        out.append(b >> 4)
        out.append(b & 0x0F)
    return tuple(out)


def nibbles_to_key(nibs) -> bytes:
    it = iter(nibs)
    return bytes((hi << 4) | lo for hi, lo in zip(it, it))


class _Leaf:
    __slots__ = ("suffix", "value", "_hash")

    def __init__(self, suffix, value):
        self.suffix = suffix
        self.value = value
        self._hash = None


class _Extension:
    __slots__ = ("path", "child", "_hash")

    def __init__(self, path, child):
        self.path = path
        self.child = child
        self._hash = None


class _Branch:
    __slots__ = ("children", "_hash")

    def __init__(self, children):
        self.children = children
        self._hash = None


def _serialize(node) -> bytes:
    if isinstance(node, _Leaf):
        return _LEAF_TAG + length_prefixed(bytes(node.suffix), node.value)
    if isinstance(node, _Extension):
        return _EXT_TAG + length_prefixed(bytes(node.path), _node_hash(node.child))
    entries = [(_node_hash(c) if c is not None else b"") for c in node.children]
    return _BRANCH_TAG + length_prefixed(*entries)


def _parse(raw: bytes):
    """Inverse of ``_serialize`` for proof checking.  Branch/extension nodes
    come back with child *hashes* in place of child nodes."""
    tag, body = raw[:1], raw[1:]
    if tag == _LEAF_TAG:
        suffix, value = read_prefixed(body, 2)
        return ("leaf", tuple(suffix), value)
    if tag == _EXT_TAG:
        path, child_hash = read_prefixed(body, 2)
        if len(child_hash) != HASH_SIZE:
            raise ValidationError("extension child hash has wrong size")
        return ("ext", tuple(path), child_hash)
    if tag == _BRANCH_TAG:
        entries = read_prefixed(body, 16)
        for e in entries:
            if e and len(e) != HASH_SIZE:
                raise ValidationError("branch entry has wrong size")
        return ("branch", entries, None)
    raise ValidationError("unknown trie node tag %r" % tag)


def _node_hash(node) -> bytes:
    h = node._hash
    if h is None:
        h = sha256(_serialize(node))
        node._hash = h
    return h


def _common_len(a, b) -> int:
    n = min(len(a), len(b))
    i = 0
    while i < n and a[i] == b[i]:
        i += 1
    return i


def _insert(node, nibs, i, value):
    if node is None:
        return _Leaf(nibs[i:], value)
    if isinstance(node, _Leaf):
        rest = nibs[i:]
        if node.suffix == rest:
            raise DuplicateIdentity("key already present")
        k = _common_len(node.suffix, rest)
        children = [None] * 16
        children[node.suffix[k]] = _Leaf(node.suffix[k + 1:], node.value)
        children[rest[k]] = _Leaf(rest[k + 1:], value)
        branch = _Branch(tuple(children))
        return _Extension(rest[:k], branch) if k else branch
    if isinstance(node, _Extension):
        rest = nibs[i:]
        k = _common_len(node.path, rest)
        if k == len(node.path):
            return _Extension(node.path, _insert(node.child, nibs, i + k, value))
        children = [None] * 16
        tail = node.path[k + 1:]
        children[node.path[k]] = _Extension(tail, node.child) if tail else node.child
        children[rest[k]] = _Leaf(rest[k + 1:], value)
        branch = _Branch(tuple(children))
        return _Extension(node.path[:k], branch) if k else branch
    nib = nibs[i]
    updated = _insert(node.children[nib], nibs, i + 1, value)
    children = list(node.children)
    children[nib] = updated
    return _Branch(tuple(children))


def _update(node, nibs, i, value):
    if node is None:
        raise NotFound("key not present")
    if isinstance(node, _Leaf):
        if node.suffix != nibs[i:]:
            raise NotFound("key not present")
        return _Leaf(node.suffix, value)
    if isinstance(node, _Extension):
        n = len(node.path)
        if nibs[i:i + n] != node.path:
            raise NotFound("key not present")
        return _Extension(node.path, _update(node.child, nibs, i + n, value))
    nib = nibs[i]
    updated = _update(node.children[nib], nibs, i + 1, value)
    children = list(node.children)
    children[nib] = updated
    return _Branch(tuple(children))


def _get(node, nibs, i):
    while node is not None:
        if isinstance(node, _Leaf):
            return node.value if node.suffix == nibs[i:] else None
        if isinstance(node, _Extension):
            n = len(node.path)
            if nibs[i:i + n] != node.path:
                return None
            node, i = node.child, i + n
            continue
        node, i = node.children[nibs[i]], i + 1
    return None


class Trie:
    """Immutable trie handle.  All mutators return a fresh ``Trie``."""

    __slots__ = ("_root", "_count")

    def __init__(self, _root=None, _count=0):
        self._root = _root
        self._count = _count

    # -- queries -----------------------------------------------------------

    @property
    def root(self) -> bytes:
        if self._root is None:
            return EMPTY_ROOT
        return _node_hash(self._root)

    def __len__(self) -> int:
        return self._count

    def get(self, key: bytes):
        return _get(self._root, key_nibbles(key), 0)

    def __contains__(self, key: bytes) -> bool:
        return self.get(key) is not None

    # -- mutation (persistent) ----------------------------------------------

    def insert(self, key: bytes, value: bytes) -> "Trie":
        if not isinstance(value, bytes):
            raise ValidationError("trie values must be bytes")
        new_root = _insert(self._root, key_nibbles(key), 0, value)
        return Trie(new_root, self._count + 1)

    def update(self, key: bytes, value: bytes) -> "Trie":
        if not isinstance(value, bytes):
            raise ValidationError("trie values must be bytes")
        new_root = _update(self._root, key_nibbles(key), 0, value)
        return Trie(new_root, self._count)

    # -- inclusion proofs -----------------------------------------------------

    def prove_inclusion(self, key: bytes) -> list:
        """Serialized nodes along the path, root first.  ``NotFound`` if the
        key is absent (this trie only issues inclusion proofs)."""
        nibs = key_nibbles(key)
        node, i, path = self._root, 0, []
        while node is not None:
            path.append(_serialize(node))
            if isinstance(node, _Leaf):
                if node.suffix == nibs[i:]:
                    return path
                break
            if isinstance(node, _Extension):
                n = len(node.path)
                if nibs[i:i + n] != node.path:
                    break
                node, i = node.child, i + n
            else:
                node, i = node.children[nibs[i]], i + 1
        raise NotFound("cannot prove a key that is not present")

    @staticmethod
    def verify_inclusion(root: bytes, key: bytes, proof, expected_value=None) -> bool:
        try:
            nibs = key_nibbles(key)
        except ValidationError:
            return False
        expected = root
        i = 0
        for pos, raw in enumerate(proof):
            if sha256(raw) != expected:
                return False
            try:
                kind, part, payload = _parse(raw)
            except (ValidationError, ValueError):
                return False
            if kind == "leaf":
                if part != nibs[i:]:
                    return False
                if expected_value is not None and payload != expected_value:
                    return False
                return pos == len(proof) - 1
            if kind == "ext":
                n = len(part)
                if nibs[i:i + n] != part:
                    return False
                i += n
                expected = payload
            else:  # branch
                entry = part[nibs[i]]
                if not entry:
                    return False
                expected = entry
                i += 1
        return False

    # -- iteration / statistics ------------------------------------------------

    def items(self):
        """Yield ``(key, value)`` pairs in key order."""
        def walk(node, prefix):
            if node is None:
                return
            if isinstance(node, _Leaf):
                yield nibbles_to_key(prefix + node.suffix), node.value
            elif isinstance(node, _Extension):
                yield from walk(node.child, prefix + node.path)
            else:
                for nib, child in enumerate(node.children):
                    if child is not None:
                        yield from walk(child, prefix + (nib,))
        yield from walk(self._root, ())

    def leaf_depths(self) -> list:
        """Node-count distance from the root to every leaf (root is depth 0)."""
        depths = []

        def walk(node, d):
            if isinstance(node, _Leaf):
                depths.append(d)
            elif isinstance(node, _Extension):
                walk(node.child, d + 1)
            else:
                for child in node.children:
                    if child is not None:
                        walk(child, d + 1)

        if self._root is not None:
            walk(self._root, 0)
        return depths

    def mean_leaf_depth(self) -> float:
        depths = self.leaf_depths()
        if not depths:
            return 0.0
        return sum(depths) / len(depths)

    # -- snapshots -------------------------------------------------------------

    def to_snapshot(self) -> dict:
        leaves = []
        for key, value in self.items():
            leaves.append({"id_hash": key.hex(), "account": json.loads(value)})
        return {"root": self.root.hex(), "leaves": leaves}

    @classmethod
    def from_snapshot(cls, snapshot: dict) -> "Trie":
        from ..codec import canonical_json
        trie = cls()
        for leaf in snapshot["leaves"]:
            key = bytes.fromhex(leaf["id_hash"])
            trie = trie.insert(key, canonical_json(leaf["account"]))
        if trie.root.hex() != snapshot["root"]:
            raise ValidationError("snapshot root does not match rebuilt trie")
        return trie

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_snapshot(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "Trie":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_snapshot(json.load(fh))

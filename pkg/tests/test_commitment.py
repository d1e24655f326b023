import hashlib

import pytest
from hypothesis import given, settings, strategies as st

from lzero.commitment import (
    CHECKSUM_MOD, DifferentAuthor, DuplicateTransaction, EvidenceKind, Verdict, chain_elements,
    chain_violation, check_chain_consistency, commit_extend, forge_commitment, log_digest_of,
    set_checksum, verify_commitment, verify_commitment_evidence, wire_size,
)
from lzero.engine import covers
from lzero.params import Deployment
from lzero.txmodel import make_signer

ED = Deployment()
MAC = Deployment(signature_scheme="mac")
ALICE = make_signer("mac", b"alice")

batches = st.lists(st.sets(st.integers(1, 2**80 - 1), min_size=1, max_size=6), max_size=6)


def chain_of(bundles, params=MAC, signer=ALICE):
    head = commit_extend(None, [], signer, params)
    out = [head]
    seen = set()
    for b in bundles:
        b = sorted(set(b) - seen)
        if not b:
            continue
        seen.update(b)
        head = commit_extend(head, b, signer, params, committed=seen - set(b))
        out.append(head)
    return out


def test_wire_size_default_ed25519():
    c = commit_extend(None, [1, 2, 3], make_signer("ed25519", b"a"), ED)
    assert len(c.encode()) == c.size == wire_size(32, 32, 100, 80, 64) == 1294


def test_wire_size_mac():
    c = commit_extend(None, [5], ALICE, MAC)
    assert len(c.encode()) == wire_size(32, 32, 100, 80, 32) == 1262


def test_checksum_matches_hashlib():
    xs = [3, 99, 2**79]
    want = sum(int.from_bytes(hashlib.sha256(b"cs" + x.to_bytes(16, "big")).digest(), "big")
               for x in xs) % CHECKSUM_MOD
    assert set_checksum(xs) == want
    assert set_checksum(reversed(xs)) == want


def test_duplicate_rejected():
    head = commit_extend(None, [1, 2], ALICE, MAC)
    with pytest.raises(DuplicateTransaction):
        commit_extend(head, [2], ALICE, MAC, committed={1, 2})
    with pytest.raises(DuplicateTransaction):
        commit_extend(head, [3, 3], ALICE, MAC)


def test_verify_and_forge():
    c = commit_extend(None, [1], ALICE, MAC)
    assert verify_commitment(c, MAC) is Verdict.OK
    forged = forge_commitment(c, make_signer("mac", b"mallory"), tx_count=9)
    assert verify_commitment(forged, MAC) is Verdict.BAD_SIGNATURE
    assert verify_commitment(c, Deployment(signature_scheme="mac", clock_cells=16)) is Verdict.BAD_PARAMS


@settings(max_examples=40, deadline=None)
@given(batches)
def test_honest_chains_are_consistent(bundles):
    chain = chain_of(bundles)
    for i in range(len(chain)):
        for j in range(i, len(chain)):
            assert chain_violation(chain[i], chain[j], MAC) is None
    assert chain[-1].log_digest == log_digest_of(b for b in chain_elements(chain, MAC) if b)


@settings(max_examples=40, deadline=None)
@given(batches)
def test_recovered_bundles(bundles):
    chain = chain_of(bundles)
    got = [b for b in chain_elements(chain, MAC) if b]
    seen, want = set(), []
    for b in bundles:
        fresh = sorted(set(b) - seen)
        if fresh:
            want.append(fresh)
            seen.update(fresh)
    assert got == want


def test_same_seq_fork_is_equivocation():
    base = commit_extend(None, [], ALICE, MAC)
    a = commit_extend(base, [1], ALICE, MAC)
    b = commit_extend(base, [2], ALICE, MAC)
    ev = check_chain_consistency(a, b, MAC)
    assert ev.kind is EvidenceKind.EQUIVOCATION and ev.predicate == "same-seq-conflict"
    assert verify_commitment_evidence(ev, MAC)


def test_dropped_element_is_caught():
    base = commit_extend(None, [1, 2], ALICE, MAC)
    nxt = forge_commitment(commit_extend(commit_extend(None, [1], ALICE, MAC), [3, 4], ALICE, MAC),
                           ALICE, seq=7, prev_hash=bytes(32))
    assert chain_violation(base, nxt, MAC) is not None


def test_reordered_log_is_caught():
    c1 = chain_of([[1], [2]])[-1]
    c2 = chain_of([[2], [1]])[-1]
    c2 = forge_commitment(c2, ALICE, seq=c1.seq + 3)
    assert chain_violation(c1, c2, MAC) == "replaced-log"


def test_different_authors():
    with pytest.raises(DifferentAuthor):
        check_chain_consistency(commit_extend(None, [], ALICE, MAC),
                                commit_extend(None, [], make_signer("mac", b"b"), MAC), MAC)


def test_evidence_with_consistent_pair_rejected():
    chain = chain_of([[1], [2]])
    ev = check_chain_consistency(chain[0], chain[2], MAC)
    assert ev is None


@settings(max_examples=60, deadline=None)
@given(st.sets(st.integers(1, 400), max_size=30), st.sets(st.integers(1, 400), max_size=30))
def test_covers_matches_brute_force(a, b):
    bob = make_signer("mac", b"bob")
    ca = commit_extend(None, sorted(a), ALICE, MAC)
    cb = commit_extend(None, sorted(b), bob, MAC)
    got = covers(ca, cb, MAC)
    assert got is None or got == (b <= a)
    if len(a ^ b) <= MAC.sketch_capacity:
        assert got == (b <= a)

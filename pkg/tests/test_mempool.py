from hypothesis import given, strategies as st

from lzero.commitment import log_digest_of
from lzero.mempool import LOCAL, MempoolLog, append_bundle, missing_content
from lzero.txmodel import make_signer, make_transaction

batches = st.lists(st.lists(st.integers(1, 200), max_size=8), max_size=10)


@given(batches)
def test_log_is_a_permutation_of_known(bs):
    log = MempoolLog()
    for i, b in enumerate(bs):
        append_bundle(log, b, LOCAL if i % 2 else i, i)
    log.check_invariants()
    assert set(log.ordered_ids()) == set().union(*map(set, bs)) if bs else not log.known
    assert log.digest == log_digest_of(log.bundle_elements())


@given(batches)
def test_bundles_are_sorted_and_fresh(bs):
    log = MempoolLog()
    seen = set()
    for b in bs:
        got = log.append_bundle(b, LOCAL, 0)
        fresh = set(b) - seen
        if fresh:
            assert got.tx_ids == tuple(sorted(fresh))
        else:
            assert got is None
        seen |= fresh


def test_prefix_is_stable():
    log = MempoolLog()
    log.append_bundle([3, 1], LOCAL, 1)
    before = log.bundle_elements()
    log.append_bundle([2, 3, 9], 7, 2)
    assert log.bundle_elements()[:1] == before
    assert [b.source for b in log.bundles] == [LOCAL, 7]


def test_content_tracking():
    tx = make_transaction(make_signer("mac", b"c"), 1, b"p")
    log = MempoolLog()
    log.append_bundle([5, 6], LOCAL, 1)
    assert missing_content(log) == {5, 6}
    assert log.add_content(5, tx)
    assert not log.add_content(5, tx)
    assert not log.add_content(99, tx)
    assert missing_content(log) == {6}

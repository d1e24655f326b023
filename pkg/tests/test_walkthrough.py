"""The three-node walkthrough: A and C reconcile with B, then B builds a block."""

from lzero.mempool import LOCAL
from lzero.scripted import three_node_walkthrough


def test_walkthrough_order():
    order, verdict, _, ctx = three_node_walkthrough()
    b = ctx["net"].nodes[1]
    label = ctx["label"]
    assert [b_.source for b_ in b.log.bundles] == [LOCAL, 0, 2]
    assert [sorted(label[e] for e in bd.tx_ids) for bd in b.log.bundles] == [[1, 3, 4], [2], [5, 6]]
    assert not b.log.missing_content()
    assert order == [1, 3, 4, 2, 5, 6]
    assert verdict is None

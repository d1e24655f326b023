"""Deployment-wide protocol parameters shared by every node."""

from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Union

from lzero.bloomclock import BloomClock
from lzero.oracle_sketch import ElementRegistry, OracleSketch
from lzero.sketch import Sketch
from lzero.txmodel import sha256, short_id

AnySketch = Union[Sketch, OracleSketch]


@dataclass
class Deployment:
    sketch_capacity: int = 100
    field_bits: int = 80
    clock_cells: int = 32
    clock_probes: int = 3
    clock_seed: int = 0
    salt: bytes = field(default_factory=lambda: sha256(b"lzero-genesis"))
    signature_scheme: str = "ed25519"
    min_fee: int = 0
    max_payload: int = 4096
    # when set, commitments carry bitmask sketches over this registry
    registry: Optional[ElementRegistry] = field(default=None, repr=False, compare=False)
    # results of pure checks shared by every node of one deployment
    memo: Dict[tuple, object] = field(default_factory=dict, repr=False, compare=False)

    def short_id(self, txid: bytes) -> int:
        return short_id(txid, self.salt, self.field_bits)

    def empty_clock(self) -> BloomClock:
        return BloomClock.empty(self.clock_cells, self.clock_probes, self.clock_seed)

    def empty_sketch(self) -> AnySketch:
        if self.registry is not None:
            return OracleSketch(self.sketch_capacity, self.field_bits, self.registry)
        return Sketch(self.sketch_capacity, self.field_bits)

    def sketch_of(self, elements) -> AnySketch:
        s = self.empty_sketch()
        s.add_many(elements)
        return s

    def partition_of(self, element: int, depth: int) -> int:
        """Bisection bucket: the top ``depth`` bits of the (hash-derived) element."""
        return element >> (self.field_bits - depth) if depth else 0

    def partition_filter(self, depth: int, prefix: int) -> Callable[[int], bool]:
        shift = self.field_bits - depth
        return lambda e: (e >> shift) == prefix

"""Bitmask stand-in for :class:`lzero.sketch.Sketch` used by large simulations.

It has the same interface and decode semantics (exact below capacity, failure
above) but represents the encoded set as a Python int over a shared element
registry, so merge and decode are cheap. Serialization emits a placeholder of
the real wire size so byte accounting is unchanged.
"""

import hashlib
from typing import Dict, Iterable, List, Optional, Set

from lzero.sketch import CapacityMismatch, FieldMismatch


class ElementRegistry:
    """Assigns every sketch element a bit position, in order of first use."""

    def __init__(self) -> None:
        self._bit: Dict[int, int] = {}
        self._elem: List[int] = []

    def bit(self, element: int) -> int:
        b = self._bit.get(element)
        if b is None:
            b = len(self._elem)
            self._bit[element] = b
            self._elem.append(element)
        return b

    def mask_of(self, elements: Iterable[int]) -> int:
        m = 0
        for e in elements:
            m ^= 1 << self.bit(e)
        return m

    def elements(self, mask: int) -> List[int]:
        bits = bin(mask)[:1:-1]
        elem = self._elem
        out = []
        i = bits.find("1")
        while i >= 0:
            out.append(elem[i])
            i = bits.find("1", i + 1)
        return out

    def __len__(self) -> int:
        return len(self._elem)


class OracleSketch:
    __slots__ = ("capacity", "field_bits", "registry", "mask")

    def __init__(self, capacity: int, field_bits: int, registry: ElementRegistry, mask: int = 0):
        self.capacity = capacity
        self.field_bits = field_bits
        self.registry = registry
        self.mask = mask

    @classmethod
    def from_elements(cls, elements: Iterable[int], capacity: int, field_bits: int,
                      registry: ElementRegistry) -> "OracleSketch":
        return cls(capacity, field_bits, registry, registry.mask_of(elements))

    def serialized_size(self) -> int:
        return self.capacity * self.field_bits // 8

    def copy(self) -> "OracleSketch":
        return OracleSketch(self.capacity, self.field_bits, self.registry, self.mask)

    def add(self, e: int) -> None:
        self.mask ^= 1 << self.registry.bit(e)

    def add_many(self, elements: Iterable[int]) -> None:
        for e in elements:
            self.mask ^= 1 << self.registry.bit(e)

    def merge(self, other: "OracleSketch") -> "OracleSketch":
        if other.capacity != self.capacity:
            raise CapacityMismatch(f"capacity {self.capacity} != {other.capacity}")
        if other.field_bits != self.field_bits:
            raise FieldMismatch(f"field GF(2^{self.field_bits}) != GF(2^{other.field_bits})")
        return OracleSketch(self.capacity, self.field_bits, self.registry, self.mask ^ other.mask)

    def is_empty(self) -> bool:
        return self.mask == 0

    def decoded_size(self) -> Optional[int]:
        n = self.mask.bit_count()
        return None if n > self.capacity else n

    def decode(self) -> Optional[Set[int]]:
        if self.mask.bit_count() > self.capacity:
            return None
        return set(self.registry.elements(self.mask))

    def restricted(self, keep) -> "OracleSketch":
        """Sketch of the encoded elements satisfying ``keep``."""
        kept = [e for e in self.registry.elements(self.mask) if keep(e)]
        return OracleSketch.from_elements(kept, self.capacity, self.field_bits, self.registry)

    def serialize(self) -> bytes:
        size = self.serialized_size()
        seed = hashlib.sha256(self.mask.to_bytes((self.mask.bit_length() + 7) // 8, "big")).digest()
        return (seed * (size // 32 + 1))[:size]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, OracleSketch):
            return NotImplemented
        return (self.capacity, self.field_bits, self.mask) == (other.capacity, other.field_bits, other.mask)

    def __repr__(self) -> str:
        return f"OracleSketch(capacity={self.capacity}, n={self.mask.bit_count()})"

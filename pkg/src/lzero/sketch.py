"""PinSketch-style set-difference codec over GF(2^b).

A sketch of capacity ``c`` stores the odd power sums s1, s3, ..., s(2c-1) of
its elements. Merging two sketches xors the syndromes, which yields the
sketch of the symmetric difference; that difference can be decoded while it
has at most ``c`` elements.

Wire format: ``c`` big-endian field elements of ``b/8`` bytes each, no header.
"""

from functools import lru_cache
from typing import Iterable, List, Optional, Set

import numpy as np

from lzero import _gf2_jit as jit
from lzero.gf2 import GF2_MODULI, UnsupportedField

_LO = (1 << 64) - 1


class SketchError(ValueError):
    pass


class CapacityMismatch(SketchError):
    pass


class FieldMismatch(SketchError):
    pass


class LengthMismatch(SketchError):
    pass


@lru_cache(maxsize=None)
def _fold(bits: int) -> np.ndarray:
    if bits not in GF2_MODULI or bits % 8:
        raise UnsupportedField(f"unsupported sketch field size {bits}")
    return jit.fold_table(np.uint64(GF2_MODULI[bits]))


def _to_words(values: Iterable[int]) -> np.ndarray:
    vals = list(values)
    out = np.empty((len(vals), 2), dtype=np.uint64)
    for i, v in enumerate(vals):
        out[i, 0] = v & _LO
        out[i, 1] = v >> 64
    return out


def _from_words(words: np.ndarray) -> List[int]:
    return [int(lo) | (int(hi) << 64) for lo, hi in words]


class Sketch:
    """Fixed-capacity sketch. ``add``/``add_many`` mutate; ``merge`` returns a new sketch."""

    __slots__ = ("capacity", "field_bits", "_syn")

    def __init__(self, capacity: int, field_bits: int = 80):
        if capacity <= 0:
            raise SketchError("capacity must be positive")
        _fold(field_bits)
        self.capacity = capacity
        self.field_bits = field_bits
        self._syn = np.zeros((capacity, 2), dtype=np.uint64)

    @classmethod
    def from_elements(cls, elements: Iterable[int], capacity: int, field_bits: int = 80) -> "Sketch":
        s = cls(capacity, field_bits)
        s.add_many(elements)
        return s

    @property
    def syndromes(self) -> List[int]:
        return _from_words(self._syn)

    def serialized_size(self) -> int:
        return self.capacity * self.field_bits // 8

    def copy(self) -> "Sketch":
        s = Sketch.__new__(Sketch)
        s.capacity = self.capacity
        s.field_bits = self.field_bits
        s._syn = self._syn.copy()
        return s

    def _check_element(self, e: int) -> None:
        if e <= 0 or e >> self.field_bits:
            raise SketchError(f"element {e:#x} is zero or wider than {self.field_bits} bits")

    def add(self, e: int) -> None:
        self.add_many((e,))

    def add_many(self, elements: Iterable[int]) -> None:
        elems = list(elements)
        if not elems:
            return
        for e in elems:
            self._check_element(e)
        jit.sketch_add(self._syn, _to_words(elems), self.field_bits, _fold(self.field_bits))

    def _check_compatible(self, other: "Sketch") -> None:
        if other.capacity != self.capacity:
            raise CapacityMismatch(f"capacity {self.capacity} != {other.capacity}")
        if other.field_bits != self.field_bits:
            raise FieldMismatch(f"field GF(2^{self.field_bits}) != GF(2^{other.field_bits})")

    def merge(self, other: "Sketch") -> "Sketch":
        self._check_compatible(other)
        out = self.copy()
        out._syn ^= other._syn
        return out

    def is_empty(self) -> bool:
        return not self._syn.any()

    def decoded_size(self) -> Optional[int]:
        """Number of encoded elements, or None when decoding fails."""
        d = self.decode()
        return None if d is None else len(d)

    def decode(self) -> Optional[Set[int]]:
        """Elements of the encoded set, or None when it cannot be recovered.

        Failure means the set is larger than the capacity (or the syndromes are
        garbage); a non-None result is exact for any set within capacity.
        """
        if self.is_empty():
            return set()
        ok, roots = jit.decode(self._syn, self.field_bits, _fold(self.field_bits))
        if not ok:
            return None
        return set(_from_words(roots))

    def serialize(self) -> bytes:
        width = self.field_bits // 8
        return b"".join(v.to_bytes(width, "big") for v in self.syndromes)

    @classmethod
    def deserialize(cls, data: bytes, capacity: int, field_bits: int = 80) -> "Sketch":
        s = cls(capacity, field_bits)
        width = field_bits // 8
        if len(data) != capacity * width:
            raise LengthMismatch(f"expected {capacity * width} bytes, got {len(data)}")
        vals = [int.from_bytes(data[i * width:(i + 1) * width], "big") for i in range(capacity)]
        s._syn = _to_words(vals)
        return s

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Sketch):
            return NotImplemented
        return (
            self.capacity == other.capacity
            and self.field_bits == other.field_bits
            and bool(np.array_equal(self._syn, other._syn))
        )

    def __repr__(self) -> str:
        return f"Sketch(capacity={self.capacity}, field_bits={self.field_bits})"

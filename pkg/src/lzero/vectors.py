"""Deterministic test vectors for the sketch, the bloom clock and the bundle shuffle.

Inputs come from SHA-256 counters so the vectors can be regenerated
anywhere; ``check`` compares regenerated vectors with a directory of
previously written ones.
"""

import json
import os
from typing import Dict, List

from lzero.blockchain import bundle_seed, canonical_shuffle
from lzero.bloomclock import BloomClock
from lzero.sketch import Sketch
from lzero.txmodel import sha256

FILES = ("sketch.json", "bloomclock.json", "shuffle.json")


def _elements(tag: str, n: int, bits: int = 80) -> List[int]:
    out = []
    ctr = 0
    while len(out) < n:
        e = int.from_bytes(sha256(tag.encode(), ctr.to_bytes(4, "big")), "big") >> (256 - bits)
        ctr += 1
        if e and e not in out:
            out.append(e)
    return out


def sketch_vectors() -> List[dict]:
    cases = []
    for capacity, bits, n_a, n_b, shared in ((8, 80, 5, 3, 4), (100, 80, 60, 40, 20), (8, 32, 4, 4, 2)):
        pool = _elements(f"sketch-{capacity}-{bits}", n_a + n_b - shared, bits)
        a = pool[:n_a]
        b = pool[n_a - shared:]
        sa = Sketch.from_elements(a, capacity, bits)
        sb = Sketch.from_elements(b, capacity, bits)
        cases.append({
            "capacity": capacity, "field_bits": bits,
            "a": [hex(e) for e in a], "b": [hex(e) for e in b],
            "sketch_a": sa.serialize().hex(), "sketch_b": sb.serialize().hex(),
            "difference": [hex(e) for e in sorted(set(a) ^ set(b))],
        })
    return cases


def clock_vectors() -> List[dict]:
    cases = []
    for m, k, seed, n in ((32, 3, 0, 0), (32, 3, 0, 10), (32, 3, 7, 200), (8, 2, 0, 5)):
        elems = _elements(f"clock-{m}-{k}-{seed}", n, 64)
        clock = BloomClock.empty(m, k, seed).add_many(elems)
        cases.append({"m": m, "k": k, "seed": seed, "elements": [hex(e) for e in elems],
                      "serialized": clock.serialize().hex()})
    return cases


def shuffle_vectors() -> List[dict]:
    cases = []
    for label, n, index in (("a", 10, 0), ("b", 10, 1), ("c", 1, 0), ("d", 33, 5)):
        prev = sha256(b"shuffle-" + label.encode())
        seed = bundle_seed(prev, index)
        cases.append({"prev_hash": prev.hex(), "bundle_index": index, "seed": seed.hex(), "n": n,
                      "permutation": canonical_shuffle(range(n), seed)})
    return cases


def generate() -> Dict[str, str]:
    """File name to JSON text."""
    data = {"sketch.json": sketch_vectors(), "bloomclock.json": clock_vectors(), "shuffle.json": shuffle_vectors()}
    return {name: json.dumps(v, indent=1, sort_keys=True) + "\n" for name, v in data.items()}


def write(directory: str) -> List[str]:
    os.makedirs(directory, exist_ok=True)
    paths = []
    for name, text in generate().items():
        path = os.path.join(directory, name)
        with open(path, "w") as f:
            f.write(text)
        paths.append(path)
    return paths


def check(directory: str) -> List[str]:
    """Names of vector files that are missing or differ from a fresh generation."""
    bad = []
    for name, text in generate().items():
        path = os.path.join(directory, name)
        if not os.path.exists(path):
            bad.append(name)
            continue
        with open(path) as f:
            if f.read() != text:
                bad.append(name)
    return bad

"""Bitset helpers shared by the graph and chain machinery.

Vertex sets are represented two ways throughout the package:

* as arbitrary-precision Python ints (bit ``v`` set means vertex ``v`` is in
  the set) -- the Graph adjacency rows, and
* as packed little-endian ``uint8`` numpy arrays (``np.packbits`` layout with
  ``bitorder="little"``) -- the per-pair matrices of chain partitions, where
  whole-matrix operations need to be vectorised.

Both encodings agree bit-for-bit, so rows can be moved between them with
``int.from_bytes`` / ``int.to_bytes``.
"""

from __future__ import annotations

from typing import Iterable, Iterator

import numpy as np


def bits(x: int) -> Iterator[int]:
    """Yield the set bit positions of ``x`` in increasing order."""
    while x:
        low = x & -x
        yield low.bit_length() - 1
        x ^= low


def mask_of(vertices: Iterable[int]) -> int:
    """Bitset of a vertex collection."""
    m = 0
    for v in vertices:
        m |= 1 << v
    return m


def packed_to_int(row: np.ndarray) -> int:
    """Little-endian packed uint8 row -> Python int bitset."""
    return int.from_bytes(row.tobytes(), "little")


def int_to_packed(x: int, nbits: int) -> np.ndarray:
    """Python int bitset -> little-endian packed uint8 row of ceil(nbits/8) bytes."""
    nbytes = (nbits + 7) // 8
    return np.frombuffer(x.to_bytes(nbytes, "little"), dtype=np.uint8).copy()


def pack_bool_matrix(m: np.ndarray) -> np.ndarray:
    """Pack a boolean matrix row-wise (little-endian bit order)."""
    return np.packbits(m, axis=1, bitorder="little")


def unpack_packed_matrix(p: np.ndarray, nbits: int) -> np.ndarray:
    """Inverse of :func:`pack_bool_matrix` (truncates padding bits)."""
    return np.unpackbits(p, axis=1, bitorder="little", count=nbits).astype(bool)


def popcount_rows(p: np.ndarray) -> np.ndarray:
    """Per-row popcount of a packed uint8 matrix (or 1-d packed row)."""
    counts = np.bitwise_count(p)
    return counts.sum(axis=-1, dtype=np.int64)

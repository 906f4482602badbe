"""Per-column bit streams and (R, Z, X) field extraction.

Column ``c`` of object ``o`` reads the bits of ``sha512(bytes([c-1]) + o)``,
most significant bit first; further 512-bit blocks, when needed, are
``sha512(bytes([c-1]) + k.to_bytes(4, "big") + o)`` for k = 1, 2, ...
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .errors import CapacityError, DomainError

SCHEME_SHA512 = 0x01
SCHEMES = {SCHEME_SHA512: "sha512"}
BLOCK_BITS = 512
CAPACITY_BITS = 4096


@dataclass(frozen=True)
class FieldTriple:
    R: int
    Z: int
    X: int


def _block(obj: bytes, column: int, k: int) -> bytes:
    tag = bytes([column - 1])
    if k == 0:
        return hashlib.sha512(tag + obj).digest()
    return hashlib.sha512(tag + k.to_bytes(4, "big") + obj).digest()


def _check_column(column: int) -> None:
    if not 1 <= column <= 256:
        raise DomainError(f"column must be in 1..256, got {column}")


def stream_bytes(obj: bytes, column: int, need: int = BLOCK_BITS) -> bytes:
    """Raw bytes covering at least ``need`` bits of the column stream."""
    _check_column(column)
    nblocks = -(-need // BLOCK_BITS)
    return b"".join(_block(obj, column, k) for k in range(max(nblocks, 1)))


def bitstream(obj: bytes, column: int, need: int = BLOCK_BITS) -> np.ndarray:
    """First ``need`` bits of the stream as a uint8 array of 0/1."""
    if need < 0:
        raise DomainError("need must be >= 0")
    raw = np.frombuffer(stream_bytes(obj, column, need), dtype=np.uint8)
    return np.unpackbits(raw)[:need]


def extract_fields(bits, r0: int, z0: int) -> FieldTriple:
    """Read (R, Z, X) off a bit sequence.

    R is one plus the first r0 bits read with the first bit least significant;
    Z is the next z0 bits, first bit most significant; X is the 1-based position
    of the first 1-bit after those r0 + z0 bits.
    """
    bits = np.asarray(bits, dtype=np.uint8)
    prefix = r0 + z0
    if bits.shape[0] < prefix:
        raise CapacityError("bit sequence shorter than the r0 + z0 prefix")
    R = 1 + int(sum(int(b) << i for i, b in enumerate(bits[:r0])))
    Z = 0
    for b in bits[r0:prefix]:
        Z = (Z << 1) | int(b)
    ones = np.flatnonzero(bits[prefix:])
    if ones.size == 0:
        raise CapacityError(f"no 1-bit within {bits.shape[0]} bits")
    return FieldTriple(R, Z, int(ones[0]) + 1)


def column_fields(obj: bytes, column: int, r0: int, z0: int) -> FieldTriple:
    """Fields for one (object, column) using the full stream capacity."""
    word = int.from_bytes(_block(obj, column, 0), "big")
    rest_bits = BLOCK_BITS - r0 - z0
    rest = word & ((1 << rest_bits) - 1)
    if rest:
        top = word >> rest_bits
        Z = top & ((1 << z0) - 1)
        head = top >> z0
        R = 1 + sum(((head >> (r0 - 1 - i)) & 1) << i for i in range(r0))
        return FieldTriple(R, Z, rest_bits - rest.bit_length() + 1)
    return extract_fields(bitstream(obj, column, CAPACITY_BITS), r0, z0)


def leading_words(objects, c0: int) -> np.ndarray:
    """uint64 matrix (n, c0) of the first 64 stream bits per object and column."""
    out = np.empty((len(objects), c0), dtype=np.uint64)
    for i, obj in enumerate(objects):
        for c in range(c0):
            out[i, c] = int.from_bytes(_block(obj, c + 1, 0)[:8], "big")
    return out


def fraction_bits(obj: bytes, column: int, r0: int, z0: int, extra: int = 60) -> tuple[int, float]:
    """(X, u) where u = 0.b1 b2 ... is the binary fraction formed by the z0 Z-bits
    followed by ``extra`` further stream bits (those after X's terminating 1).

    This is the "infinite precision" companion of Z used to check the bias of
    truncating to z0 bits.
    """
    f = column_fields(obj, column, r0, z0)
    bits = bitstream(obj, column, CAPACITY_BITS)
    start = r0 + z0 + f.X
    tail = bits[start : start + extra]
    u = 0.0
    for b in reversed(np.concatenate([bits[r0 : r0 + z0], tail])):
        u = (u + int(b)) / 2.0
    return f.X, u

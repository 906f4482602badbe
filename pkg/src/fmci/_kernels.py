"""Hot loops for the sketch: field extraction from 64-bit words and register
updates. Each kernel has a numba version and a numpy version with identical
results; ``USE_NUMBA`` picks the default.
"""
import numpy as np

from . import _accel

_KEY_MASK = np.uint32(0xFFFF)


# --- field extraction -------------------------------------------------------


def _fields_from_words_loop(words, r0, z0):
    n = words.shape[0]
    R = np.empty(n, np.int64)
    Z = np.empty(n, np.int64)
    X = np.empty(n, np.int64)
    prefix = r0 + z0
    rest_bits = 64 - prefix
    for i in range(n):
        w = words[i]
        rev = 0
        for k in range(r0):
            bit = (w >> np.uint64(63 - k)) & np.uint64(1)
            rev |= np.int64(bit) << k
        R[i] = rev + 1
        if z0 > 0:
            Z[i] = np.int64((w >> np.uint64(rest_bits)) & np.uint64((1 << z0) - 1))
        else:
            Z[i] = 0
        x = 0
        for k in range(rest_bits):
            if (w >> np.uint64(rest_bits - 1 - k)) & np.uint64(1):
                x = k + 1
                break
        X[i] = x  # 0 means "no 1-bit in this word"
    return R, Z, X


def fields_from_words_numpy(words, r0, z0):
    """Vectorised (R, Z, X) from the leading 64 bits of each stream.

    X == 0 flags streams whose first 1-bit lies beyond the word.
    """
    w = np.asarray(words, dtype=np.uint64)
    prefix = r0 + z0
    rest_bits = 64 - prefix
    R = np.ones(w.shape, np.int64)
    for k in range(r0):
        R += ((w >> np.uint64(63 - k)) & np.uint64(1)).astype(np.int64) << k
    if z0 > 0:
        Z = ((w >> np.uint64(rest_bits)) & np.uint64((1 << z0) - 1)).astype(np.int64)
    else:
        Z = np.zeros(w.shape, np.int64)
    rest = w & np.uint64((1 << rest_bits) - 1) if rest_bits < 64 else w.copy()
    # bit length by binary search over shifts
    blen = np.zeros(w.shape, np.int64)
    v = rest.copy()
    for shift in (32, 16, 8, 4, 2, 1):
        big = v >= (np.uint64(1) << np.uint64(shift))
        v = np.where(big, v >> np.uint64(shift), v)
        blen += np.where(big, shift, 0)
    blen += (v > 0).astype(np.int64)
    X = np.where(rest > 0, rest_bits - blen + 1, 0)
    return R, Z, X


fields_from_words_numba = _accel.njit_always(_fields_from_words_loop)


# --- register update --------------------------------------------------------


def _update_loop(keys, rows, cols, X, Z):
    for i in range(rows.shape[0]):
        k = (np.uint32(X[i]) << np.uint32(16)) | (np.uint32(0xFFFF) - np.uint32(Z[i]))
        if k > keys[rows[i], cols[i]]:
            keys[rows[i], cols[i]] = k


def update_registers_numpy(keys, rows, cols, X, Z):
    """In-place max of packed (X, 0xFFFF - Z) keys: larger X wins, ties keep min Z."""
    new = (np.asarray(X, np.uint32) << np.uint32(16)) | (
        _KEY_MASK - np.asarray(Z, np.uint32)
    )
    flat = keys.reshape(-1)
    np.maximum.at(flat, np.asarray(rows) * keys.shape[1] + np.asarray(cols), new)


update_registers_numba = _accel.njit_always(_update_loop)


def pack_keys(X, Z):
    return (np.asarray(X, np.uint32) << np.uint32(16)) | (_KEY_MASK - np.asarray(Z, np.uint32))


def unpack_keys(keys):
    X = (keys >> np.uint32(16)).astype(np.uint16)
    Z = (_KEY_MASK - (keys & _KEY_MASK)).astype(np.uint16)
    return X, Z


if _accel.USE_NUMBA:
    fields_from_words = fields_from_words_numba
    update_registers = update_registers_numba
else:
    fields_from_words = fields_from_words_numpy
    update_registers = update_registers_numpy

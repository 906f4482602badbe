"""Register sketch: insert, merge, query and the binary file format."""
from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from . import _kernels
from .errors import CapacityError, ConfigError, FormatError, MergeError
from .hashing import SCHEME_SHA512, SCHEMES, column_fields, leading_words

MAGIC = b"FMCI"
VERSION = 1
_HEADER = struct.Struct("<4sBBBBHHQ")
_BATCH = 4096


@dataclass(frozen=True)
class SketchParams:
    r0: int = 4
    c0: int = 4
    z0: int = 4

    def __post_init__(self):
        for name, lo, hi in (("r0", 0, 16), ("c0", 1, 256), ("z0", 0, 16)):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or isinstance(v, bool) or not lo <= v <= hi:
                raise ConfigError(f"{name} must be an integer in [{lo}, {hi}], got {v!r}")
        if self.a0 > 2**24:
            raise ConfigError(f"2^r0 * c0 = {self.a0} exceeds 2^24 registers")

    @property
    def rows(self) -> int:
        return 1 << self.r0

    @property
    def a0(self) -> int:
        """Total number of registers."""
        return (1 << self.r0) * self.c0

    @property
    def p0(self) -> float:
        return 2.0 ** -self.r0


@dataclass
class QueryResult:
    Y: np.ndarray
    mean: float
    touched: int


class Sketch:
    """Matrices X (first-1 positions) and Z (z0-bit tie-breakers), one row per
    R-value and one column per independent hash stream."""

    def __init__(self, params: SketchParams, scheme: int = SCHEME_SHA512):
        if scheme not in SCHEMES:
            raise ConfigError(f"unknown hash scheme id {scheme:#04x}")
        self.params = params
        self.scheme = scheme
        self.X = np.zeros((params.rows, params.c0), dtype=np.uint16)
        self.Z = np.full((params.rows, params.c0), (1 << params.z0) - 1, dtype=np.uint16)
        self.warnings = 0

    @classmethod
    def new(cls, r0: int = 4, c0: int = 4, z0: int = 4, scheme: int = SCHEME_SHA512) -> "Sketch":
        return cls(SketchParams(r0, c0, z0), scheme)

    # -- updates -----------------------------------------------------------

    def insert(self, obj: bytes) -> None:
        self.update([obj])

    def update(self, objects: Iterable[bytes]) -> None:
        """Insert many objects; batches the hashing output through the kernels."""
        batch = []
        for obj in objects:
            batch.append(bytes(obj))
            if len(batch) == _BATCH:
                self._insert_batch(batch)
                batch = []
        if batch:
            self._insert_batch(batch)

    def _insert_batch(self, objects: list[bytes]) -> None:
        p = self.params
        c0 = p.c0
        words = leading_words(objects, c0).reshape(-1)
        R, Z, X = _kernels.fields_from_words(words, p.r0, p.z0)
        cols = np.tile(np.arange(c0, dtype=np.int64), len(objects))
        # first 1-bit beyond the leading word: rare, redo with the full stream
        for i in np.flatnonzero(X == 0):
            try:
                f = column_fields(objects[i // c0], int(cols[i]) + 1, p.r0, p.z0)
            except CapacityError:
                self.warnings += 1
                continue
            R[i], Z[i], X[i] = f.R, f.Z, f.X
        ok = X > 0
        self._apply(R[ok] - 1, cols[ok], X[ok], Z[ok])

    def _apply(self, rows, cols, X, Z) -> None:
        keys = _kernels.pack_keys(self.X, self.Z)
        _kernels.update_registers(
            keys,
            np.ascontiguousarray(rows, np.int64),
            np.ascontiguousarray(cols, np.int64),
            np.ascontiguousarray(X, np.int64),
            np.ascontiguousarray(Z, np.int64),
        )
        self.X, self.Z = _kernels.unpack_keys(keys)

    def insert_fields(self, R: int, c: int, X: int, Z: int) -> None:
        """Apply one already-extracted (R, Z, X) to column ``c`` (both 1-based)."""
        self._apply([R - 1], [c - 1], [X], [Z])

    # -- combination -------------------------------------------------------

    def compatible(self, other: "Sketch") -> bool:
        return self.params == other.params and self.scheme == other.scheme

    def merge(self, other: "Sketch") -> "Sketch":
        """Register-wise union; equals the sketch of the concatenated streams."""
        if not self.compatible(other):
            raise MergeError(
                f"cannot merge {self.params}/scheme {self.scheme} with "
                f"{other.params}/scheme {other.scheme}"
            )
        out = Sketch(self.params, self.scheme)
        keys = np.maximum(
            _kernels.pack_keys(self.X, self.Z), _kernels.pack_keys(other.X, other.Z)
        )
        out.X, out.Z = _kernels.unpack_keys(keys)
        out.warnings = self.warnings + other.warnings
        return out

    def copy(self) -> "Sketch":
        out = Sketch(self.params, self.scheme)
        out.X = self.X.copy()
        out.Z = self.Z.copy()
        out.warnings = self.warnings
        return out

    def __eq__(self, other):
        if not isinstance(other, Sketch):
            return NotImplemented
        return (
            self.compatible(other)
            and self.warnings == other.warnings
            and np.array_equal(self.X, other.X)
            and np.array_equal(self.Z, other.Z)
        )

    def same_registers(self, other: "Sketch") -> bool:
        return np.array_equal(self.X, other.X) and np.array_equal(self.Z, other.Z)

    # -- query -------------------------------------------------------------

    def query(self) -> QueryResult:
        """Y = X - log2(1 + Z / 2^z0) for written registers, 0 for the rest."""
        X = self.X.astype(np.float64)
        frac = self.Z.astype(np.float64) / float(1 << self.params.z0)
        Y = np.where(self.X > 0, X - np.log2(1.0 + frac), 0.0)
        return QueryResult(Y=Y, mean=math.fsum(Y.ravel()) / Y.size, touched=int((self.X > 0).sum()))

    # -- serialisation -----------------------------------------------------

    def to_bytes(self) -> bytes:
        p = self.params
        head = _HEADER.pack(MAGIC, VERSION, self.scheme, p.r0, p.z0, p.c0, 0, self.warnings)
        rec = np.empty((p.rows, p.c0, 2), dtype="<u2")
        rec[..., 0] = self.X
        rec[..., 1] = self.Z
        return head + rec.tobytes()

    @classmethod
    def from_bytes(cls, data: bytes) -> "Sketch":
        if len(data) < _HEADER.size:
            raise FormatError("truncated header")
        magic, version, scheme, r0, z0, c0, reserved, warnings = _HEADER.unpack_from(data)
        if magic != MAGIC:
            raise FormatError(f"bad magic {magic!r}")
        if version != VERSION:
            raise FormatError(f"unsupported version {version}")
        if reserved != 0:
            raise FormatError("reserved field must be 0")
        try:
            params = SketchParams(r0, c0, z0)
            sk = cls(params, scheme)
        except ConfigError as exc:
            raise FormatError(str(exc)) from exc
        expected = _HEADER.size + params.a0 * 4
        if len(data) != expected:
            raise FormatError(f"payload length {len(data)} != expected {expected}")
        rec = np.frombuffer(data, dtype="<u2", offset=_HEADER.size).reshape(params.rows, c0, 2)
        X = rec[..., 0].astype(np.uint16)
        Z = rec[..., 1].astype(np.uint16)
        if (Z >= (1 << z0)).any():
            raise FormatError("Z entry out of range for z0")
        sk.X, sk.Z, sk.warnings = X, Z, warnings
        return sk

    def save(self, path) -> None:
        with open(path, "wb") as fh:
            fh.write(self.to_bytes())

    @classmethod
    def load(cls, path) -> "Sketch":
        with open(path, "rb") as fh:
            return cls.from_bytes(fh.read())

    def __repr__(self):
        p = self.params
        return f"Sketch(r0={p.r0}, c0={p.c0}, z0={p.z0}, touched={int((self.X > 0).sum())})"


def sketch_of(objects: Iterable[bytes], r0: int = 4, c0: int = 4, z0: int = 4) -> Sketch:
    sk = Sketch.new(r0, c0, z0)
    sk.update(objects)
    return sk

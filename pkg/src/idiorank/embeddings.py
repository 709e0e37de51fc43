"""Keyed embedding store and the portable PFEMB file format.

PFEMB is a line-oriented UTF-8 text format:

    PFEMB 1 <dimension> <count>
    <key>\\t<f_1> <f_2> ... <f_d>
    ...

Floats are serialized with their shortest round-trip decimal
representation, so ``load`` after ``write`` reproduces the exact same
float64 values, and ``write`` after ``load`` reproduces the exact same
bytes for canonical files. Canonical form orders keys lexicographically
by UTF-8 byte value. Keys must not contain tab or newline characters.
"""

from __future__ import annotations

import math
import os
from typing import Iterable, Iterator, Mapping

import numpy as np

from .errors import FormatError, MissingEmbedding

_MAGIC = "PFEMB"
_VERSION = "1"


def _check_key(key: str) -> None:
    if not key:
        raise FormatError("empty key")
    if "\t" in key or "\n" in key or "\r" in key:
        raise FormatError(f"key contains tab/newline: {key!r}")


class EmbeddingStore:
    """Immutable map from string keys to fixed-dimension float64 vectors.

    All vectors are validated to have exactly ``dimension`` finite
    components. Instances are safe to share read-only across threads.
    """

    def __init__(self, dimension: int, entries: Mapping[str, Iterable[float]]):
        if dimension <= 0:
            raise FormatError(f"dimension must be positive, got {dimension}")
        self.dimension = int(dimension)
        vectors: dict[str, np.ndarray] = {}
        for key, values in entries.items():
            _check_key(key)
            vec = np.asarray(values, dtype=np.float64)
            if vec.shape != (self.dimension,):
                raise FormatError(
                    f"vector for {key!r} has shape {vec.shape}, expected ({self.dimension},)"
                )
            if not np.all(np.isfinite(vec)):
                raise FormatError(f"vector for {key!r} contains non-finite values")
            vec.flags.writeable = False
            vectors[key] = vec
        self._entries = vectors

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, key: str) -> bool:
        return key in self._entries

    def __getitem__(self, key: str) -> np.ndarray:
        try:
            return self._entries[key]
        except KeyError:
            raise MissingEmbedding(key) from None

    def get(self, key: str) -> np.ndarray | None:
        return self._entries.get(key)

    def keys(self) -> Iterator[str]:
        return iter(self._entries)

    def items(self) -> Iterator[tuple[str, np.ndarray]]:
        return iter(self._entries.items())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, EmbeddingStore):
            return NotImplemented
        if self.dimension != other.dimension:
            return False
        if self._entries.keys() != other._entries.keys():
            return False
        return all(
            np.array_equal(vec, other._entries[key]) for key, vec in self._entries.items()
        )


def _format_float(value: float) -> str:
    # repr() of a Python float is the shortest string that round-trips.
    return repr(float(value))


def load_embeddings(path: str | os.PathLike[str]) -> EmbeddingStore:
    """Read a PFEMB file into an :class:`EmbeddingStore`.

    Raises :class:`FormatError` on bad magic, a header/record dimension
    mismatch, duplicate or malformed keys, non-finite values, or a count
    that disagrees with the number of records.
    """
    with open(path, "r", encoding="utf-8", newline="") as fh:
        header = fh.readline()
        if not header:
            raise FormatError(f"{path}: empty file")
        parts = header.rstrip("\r\n").split(" ")
        if len(parts) != 4 or parts[0] != _MAGIC or parts[1] != _VERSION:
            raise FormatError(f"{path}: bad header {header!r}")
        try:
            dimension = int(parts[2])
            count = int(parts[3])
        except ValueError:
            raise FormatError(f"{path}: non-integer dimension/count in header") from None
        if dimension <= 0 or count < 0:
            raise FormatError(f"{path}: invalid dimension/count in header")

        entries: dict[str, np.ndarray] = {}
        for lineno, raw in enumerate(fh, start=2):
            line = raw.rstrip("\r\n")
            if not line:
                raise FormatError(f"{path}:{lineno}: blank record line")
            key, sep, payload = line.partition("\t")
            if not sep:
                raise FormatError(f"{path}:{lineno}: record has no tab separator")
            if key in entries:
                raise FormatError(f"{path}:{lineno}: duplicate key {key!r}")
            fields = payload.split(" ")
            if len(fields) != dimension:
                raise FormatError(
                    f"{path}:{lineno}: {len(fields)} floats, header says {dimension}"
                )
            try:
                values = [float(f) for f in fields]
            except ValueError:
                raise FormatError(f"{path}:{lineno}: unparseable float") from None
            if not all(math.isfinite(v) for v in values):
                raise FormatError(f"{path}:{lineno}: non-finite value")
            entries[key] = np.array(values, dtype=np.float64)

    if len(entries) != count:
        raise FormatError(f"{path}: header count {count} != {len(entries)} records")
    return EmbeddingStore(dimension, entries)


def write_embeddings(store: EmbeddingStore, path: str | os.PathLike[str]) -> None:
    """Write ``store`` to ``path`` in canonical PFEMB form.

    Keys are emitted in lexicographic byte order, so two stores that are
    equal as maps always produce identical bytes.
    """
    ordered = sorted(store.keys(), key=lambda k: k.encode("utf-8"))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"{_MAGIC} {_VERSION} {store.dimension} {len(ordered)}\n")
        for key in ordered:
            floats = " ".join(_format_float(v) for v in store[key])
            fh.write(f"{key}\t{floats}\n")

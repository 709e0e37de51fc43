"""Task instances and TSV ingestion.

Each row of the task TSV describes one disambiguation instance: a context
sentence containing a potentially idiomatic compound, exactly five
candidate identifiers, and (optionally) five captions, a gold sentence
type, and a gold ranking. Columns are mapped by *name* through a
:class:`SchemaConfig`, never by position, because bundles from different
sources do not agree on column order.

Malformed rows are collected into ``Dataset.rejected`` instead of
aborting the parse; a missing column named by the schema is fatal.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass

from .errors import FormatError, MalformedRow, MissingColumn

LITERAL = "literal"
IDIOMATIC = "idiomatic"

_CANDIDATE_COUNT = 5


@dataclass(frozen=True)
class Instance:
    """One task row.

    ``candidates`` are opaque identifiers; image bytes are never read
    here (embeddings arrive precomputed). ``candidate_paths`` is the
    language-aware resolution of those identifiers against the schema's
    image root, for tools that do need the files.
    """

    id: str
    language: str
    sentence: str
    compound: str
    candidates: tuple[str, ...]
    captions: tuple[str, ...] | None = None
    gold_sentence_type: str | None = None
    gold_order: tuple[str, ...] | None = None
    candidate_paths: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        if len(self.candidates) != _CANDIDATE_COUNT:
            raise ValueError(f"expected {_CANDIDATE_COUNT} candidates, got {len(self.candidates)}")
        if len(set(self.candidates)) != _CANDIDATE_COUNT:
            raise ValueError("duplicate candidate ids")
        if self.captions is not None and len(self.captions) != _CANDIDATE_COUNT:
            raise ValueError(f"expected {_CANDIDATE_COUNT} captions, got {len(self.captions)}")
        if self.gold_sentence_type is not None and self.gold_sentence_type not in (
            LITERAL,
            IDIOMATIC,
        ):
            raise ValueError(f"bad gold sentence type {self.gold_sentence_type!r}")
        if self.gold_order is not None and sorted(self.gold_order) != sorted(self.candidates):
            raise ValueError("gold_order is not a permutation of candidates")


@dataclass(frozen=True)
class RejectedRow:
    """Parse report entry for a row that violated an invariant."""

    row_number: int
    reason: str


@dataclass(frozen=True)
class Dataset:
    """Ordered instances plus per-language coverage counts."""

    instances: tuple[Instance, ...]
    language_counts: dict[str, int]
    rejected: tuple[RejectedRow, ...] = ()

    def __len__(self) -> int:
        return len(self.instances)

    def by_id(self) -> dict[str, Instance]:
        return {inst.id: inst for inst in self.instances}


def _dataset_from_instances(
    instances: list[Instance], rejected: list[RejectedRow]
) -> Dataset:
    counts: dict[str, int] = {}
    for inst in instances:
        counts[inst.language] = counts.get(inst.language, 0) + 1
    return Dataset(tuple(instances), counts, tuple(rejected))


@dataclass(frozen=True)
class SchemaConfig:
    """Maps logical fields to TSV column names.

    ``candidates`` and ``captions`` accept either a tuple of five column
    names or a single column whose value is split on ``list_separator``.
    ``gold_order`` is always a single column of separated candidate ids.
    """

    sentence: str
    compound: str
    candidates: str | tuple[str, ...]
    id: str | None = None
    language: str | None = None
    captions: str | tuple[str, ...] | None = None
    gold_sentence_type: str | None = None
    gold_order: str | None = None
    list_separator: str = ","
    image_root: str | None = None

    @staticmethod
    def from_file(path: str | os.PathLike[str]) -> "SchemaConfig":
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
        return SchemaConfig.from_dict(raw)

    @staticmethod
    def from_dict(raw: dict) -> "SchemaConfig":
        cols = raw.get("columns", {})
        if not isinstance(cols, dict):
            raise FormatError("schema 'columns' must be an object")
        for required in ("sentence", "compound", "candidates"):
            if required not in cols:
                raise FormatError(f"schema missing required field {required!r}")

        def _col(name: str):
            value = cols.get(name)
            if isinstance(value, list):
                return tuple(value)
            return value

        return SchemaConfig(
            sentence=cols["sentence"],
            compound=cols["compound"],
            candidates=_col("candidates"),
            id=cols.get("id"),
            language=cols.get("language"),
            captions=_col("captions"),
            gold_sentence_type=cols.get("gold_sentence_type"),
            gold_order=cols.get("gold_order"),
            list_separator=raw.get("list_separator", ","),
            image_root=raw.get("image_root"),
        )


def _schema_columns(schema: SchemaConfig) -> list[str]:
    names: list[str] = []
    for value in (
        schema.sentence,
        schema.compound,
        schema.candidates,
        schema.id,
        schema.language,
        schema.captions,
        schema.gold_sentence_type,
        schema.gold_order,
    ):
        if value is None:
            continue
        if isinstance(value, tuple):
            names.extend(value)
        else:
            names.append(value)
    return names


def _cell(row: dict[str, str], column: str | None) -> str:
    if column is None:
        return ""
    return (row.get(column) or "").strip()


def _list_field(
    row: dict[str, str], spec: str | tuple[str, ...], separator: str
) -> list[str]:
    if isinstance(spec, tuple):
        return [(row.get(col) or "").strip() for col in spec]
    raw = _cell(row, spec)
    if not raw:
        return []
    return [part.strip() for part in raw.split(separator)]


def parse_tsv(path: str | os.PathLike[str], schema: SchemaConfig) -> Dataset:
    """Parse a task TSV into a :class:`Dataset`.

    Rows missing a required field or violating an instance invariant are
    recorded in ``Dataset.rejected`` with their 1-based row number. The
    number of accepted plus rejected rows always equals the number of
    data rows in the file.
    """
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh, delimiter="\t", quoting=csv.QUOTE_NONE)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError(f"{path}: empty file (no header)") from None
        header = [h.strip() for h in header]
        for column in _schema_columns(schema):
            if column not in header:
                raise MissingColumn(f"{path}: column {column!r} not in header")

        instances: list[Instance] = []
        rejected: list[RejectedRow] = []
        for row_number, cells in enumerate(reader, start=2):
            if not cells or all(not c.strip() for c in cells):
                continue  # ignore trailing blank lines
            row = dict(zip(header, cells))
            try:
                instances.append(_parse_row(row, row_number, schema))
            except MalformedRow as err:
                rejected.append(RejectedRow(err.row_number, err.reason))
    return _dataset_from_instances(instances, rejected)


def _parse_row(row: dict[str, str], row_number: int, schema: SchemaConfig) -> Instance:
    sentence = _cell(row, schema.sentence)
    compound = _cell(row, schema.compound)
    if not sentence:
        raise MalformedRow(row_number, "missing sentence")
    if not compound:
        raise MalformedRow(row_number, "missing compound")

    candidates = [c for c in _list_field(row, schema.candidates, schema.list_separator) if c]
    if len(candidates) != _CANDIDATE_COUNT:
        raise MalformedRow(row_number, f"expected 5 candidates, got {len(candidates)}")
    if len(set(candidates)) != _CANDIDATE_COUNT:
        raise MalformedRow(row_number, "duplicate candidate ids")

    captions: tuple[str, ...] | None = None
    if schema.captions is not None:
        values = _list_field(row, schema.captions, schema.list_separator)
        if any(values):
            if len(values) != _CANDIDATE_COUNT or not all(values):
                raise MalformedRow(row_number, "captions present but not exactly 5")
            captions = tuple(values)

    gold_type: str | None = None
    raw_type = _cell(row, schema.gold_sentence_type)
    if raw_type:
        lowered = raw_type.lower()
        if lowered not in (LITERAL, IDIOMATIC):
            raise MalformedRow(row_number, f"bad sentence type {raw_type!r}")
        gold_type = lowered

    gold_order: tuple[str, ...] | None = None
    raw_order = _cell(row, schema.gold_order)
    if raw_order:
        order = [part.strip() for part in raw_order.split(schema.list_separator)]
        if sorted(order) != sorted(candidates):
            raise MalformedRow(row_number, "gold_order is not a permutation of candidates")
        gold_order = tuple(order)

    language = _cell(row, schema.language) or "und"
    instance_id = _cell(row, schema.id) or f"row{row_number}"

    candidate_paths: tuple[str, ...] | None = None
    if schema.image_root is not None:
        # Language-aware resolution: <root>/<language>/<candidate id>.
        candidate_paths = tuple(
            os.path.join(schema.image_root, language, cid) for cid in candidates
        )

    return Instance(
        id=instance_id,
        language=language,
        sentence=sentence,
        compound=compound,
        candidates=tuple(candidates),
        captions=captions,
        gold_sentence_type=gold_type,
        gold_order=gold_order,
        candidate_paths=candidate_paths,
    )

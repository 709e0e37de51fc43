"""Readers for the dataset TSV, schema config, and lexicon TSV formats."""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass

from .contract import normalize_idiom
from .errors import DataError


@dataclass(frozen=True)
class Row:
    """One usable dataset row (malformed rows are skipped with a note)."""

    id: str
    language: str
    sentence: str
    compound: str
    candidates: tuple[str, ...]
    captions: tuple[str, ...] | None
    gold_order: tuple[str, ...] | None


@dataclass(frozen=True)
class Schema:
    sentence: str
    compound: str
    candidates: str | tuple[str, ...]
    id: str | None
    language: str | None
    captions: str | tuple[str, ...] | None
    gold_order: str | None
    list_separator: str

    @staticmethod
    def load(path: str) -> "Schema":
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
        cols = raw.get("columns", {})
        for required in ("sentence", "compound", "candidates"):
            if required not in cols:
                raise DataError(f"{path}: schema missing {required!r}")

        def col(name):
            value = cols.get(name)
            return tuple(value) if isinstance(value, list) else value

        return Schema(
            sentence=cols["sentence"],
            compound=cols["compound"],
            candidates=col("candidates"),
            id=cols.get("id"),
            language=cols.get("language"),
            captions=col("captions"),
            gold_order=cols.get("gold_order"),
            list_separator=raw.get("list_separator", ","),
        )


def _values(row: dict, spec, separator: str) -> list[str]:
    if spec is None:
        return []
    if isinstance(spec, tuple):
        return [(row.get(c) or "").strip() for c in spec]
    raw = (row.get(spec) or "").strip()
    return [p.strip() for p in raw.split(separator)] if raw else []


def read_rows(path: str, schema: Schema) -> list[Row]:
    rows: list[Row] = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh, delimiter="\t", quoting=csv.QUOTE_NONE)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: empty dataset") from None
        for number, cells in enumerate(reader, start=2):
            if not cells or all(not c.strip() for c in cells):
                continue
            record = dict(zip(header, cells))
            sentence = (record.get(schema.sentence) or "").strip()
            compound = (record.get(schema.compound) or "").strip()
            candidates = [c for c in _values(record, schema.candidates, schema.list_separator) if c]
            if not sentence or not compound or len(candidates) != 5:
                continue  # the pipeline rejects these rows; nothing to export
            captions = _values(record, schema.captions, schema.list_separator)
            captions_tuple = tuple(captions) if len(captions) == 5 and all(captions) else None
            order = _values(record, schema.gold_order, schema.list_separator)
            gold = tuple(order) if sorted(order) == sorted(candidates) else None
            language = (record.get(schema.language) or "").strip() or "und"
            rid = (record.get(schema.id) or "").strip() or f"row{number}"
            rows.append(
                Row(
                    id=rid,
                    language=language,
                    sentence=sentence,
                    compound=compound,
                    candidates=tuple(candidates),
                    captions=captions_tuple,
                    gold_order=gold,
                )
            )
    return rows


@dataclass(frozen=True)
class LexiconEntry:
    paraphrase: str
    definition: str | None
    fewshot: tuple[str, ...]


def read_lexicon(path: str | None) -> dict[tuple[str, str], LexiconEntry]:
    if path is None:
        return {}
    entries: dict[tuple[str, str], LexiconEntry] = {}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh, delimiter="\t", quoting=csv.QUOTE_NONE)
        header = [h.strip() for h in next(reader)]
        idx = {name: header.index(name) for name in header}
        for cells in reader:
            if not cells or all(not c.strip() for c in cells):
                continue

            def cell(name):
                pos = idx.get(name)
                return cells[pos].strip() if pos is not None and pos < len(cells) else ""

            language = cell("language")
            idiom = normalize_idiom(cell("idiom"))
            paraphrase = cell("paraphrase")
            if not language or not idiom or not paraphrase:
                continue
            fewshot = tuple(p.strip() for p in cell("fewshot").split("|") if p.strip())
            entries[(language, idiom)] = LexiconEntry(
                paraphrase, cell("definition") or None, fewshot
            )
    return entries


def resolve(path: str | None, base_dir: str) -> str | None:
    if path is None:
        return None
    return os.path.normpath(os.path.join(base_dir, path))

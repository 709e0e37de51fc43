"""Idiom lexicon and compound-to-paraphrase rewriting.

Rewriting is plain textual substitution: no article or agreement repair
("a important person" is left as-is), because downstream encoders
tolerate it and repair rules are language-specific scope creep. The
lexicon guarantees that no paraphrase contains its own idiom key, which
makes rewriting idempotent.
"""

from __future__ import annotations

import csv
import logging
import os
import re
from dataclasses import dataclass

from .errors import DuplicateKey, FormatError
from .dataset import LITERAL

log = logging.getLogger(__name__)

_LEXICON_COLUMNS = ("language", "idiom", "paraphrase", "definition", "fewshot")


def normalize_idiom(text: str) -> str:
    """Case-fold and collapse whitespace runs; lexicon keys live in this form."""
    return " ".join(text.casefold().split())


@dataclass(frozen=True)
class LexiconEntry:
    paraphrase: str
    definition: str | None = None
    fewshot: tuple[str, ...] = ()


def _is_token_infix(needle: list[str], haystack: list[str]) -> bool:
    n = len(needle)
    return any(haystack[i : i + n] == needle for i in range(len(haystack) - n + 1))


def _validate_entry(language: str, idiom: str, entry: LexiconEntry) -> None:
    """Reject entries that could break rewrite idempotence.

    Excluding the idiom as a substring of the paraphrase is necessary
    but not sufficient: substitution can also recreate the idiom by
    juxtaposing the paraphrase with surrounding text (idiom "a a",
    paraphrase "a", sentence "a a a"). The token-level checks below rule
    out every such boundary: no idiom prefix may end the paraphrase, no
    idiom suffix may start it, and the paraphrase may not appear inside
    the idiom.
    """
    paraphrase = normalize_idiom(entry.paraphrase)
    if not paraphrase:
        raise FormatError(f"empty paraphrase for {language}/{idiom!r}")
    if idiom in paraphrase:
        raise FormatError(f"paraphrase for {language}/{idiom!r} contains the idiom itself")
    i_tokens = idiom.split()
    p_tokens = paraphrase.split()
    if _is_token_infix(p_tokens, i_tokens):
        raise FormatError(f"paraphrase for {language}/{idiom!r} is a fragment of the idiom")
    for k in range(1, len(i_tokens)):
        if k <= len(p_tokens) and i_tokens[:k] == p_tokens[-k:]:
            raise FormatError(f"paraphrase for {language}/{idiom!r} ends with an idiom prefix")
        if k <= len(p_tokens) and i_tokens[-k:] == p_tokens[:k]:
            raise FormatError(f"paraphrase for {language}/{idiom!r} starts with an idiom suffix")


class IdiomLexicon:
    """Map from (language, normalized idiom) to paraphrase metadata."""

    def __init__(self, entries: dict[tuple[str, str], LexiconEntry]):
        for (language, idiom), entry in entries.items():
            if not idiom:
                raise FormatError("empty idiom key")
            if idiom != normalize_idiom(idiom):
                raise FormatError(f"idiom key {idiom!r} is not normalized")
            _validate_entry(language, idiom, entry)
        self._entries = dict(entries)

    def __len__(self) -> int:
        return len(self._entries)

    def get(self, language: str, compound: str) -> LexiconEntry | None:
        return self._entries.get((language, normalize_idiom(compound)))

    def items(self):
        return self._entries.items()

    @staticmethod
    def empty() -> "IdiomLexicon":
        return IdiomLexicon({})


def load_lexicon(path: str | os.PathLike[str]) -> IdiomLexicon:
    """Load a lexicon TSV with columns language, idiom, paraphrase,
    definition, fewshot (few-shot examples are ``|``-separated).

    Duplicate (language, idiom) keys raise :class:`DuplicateKey`; a
    paraphrase containing its own idiom raises :class:`FormatError`.
    """
    entries: dict[tuple[str, str], LexiconEntry] = {}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh, delimiter="\t", quoting=csv.QUOTE_NONE)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise FormatError(f"{path}: empty lexicon") from None
        for column in _LEXICON_COLUMNS[:3]:
            if column not in header:
                raise FormatError(f"{path}: lexicon missing column {column!r}")
        idx = {name: header.index(name) for name in header}

        def cell(cells: list[str], name: str) -> str:
            pos = idx.get(name)
            if pos is None or pos >= len(cells):
                return ""
            return cells[pos].strip()

        for lineno, cells in enumerate(reader, start=2):
            if not cells or all(not c.strip() for c in cells):
                continue
            language = cell(cells, "language")
            idiom = normalize_idiom(cell(cells, "idiom"))
            paraphrase = cell(cells, "paraphrase")
            if not language or not idiom or not paraphrase:
                raise FormatError(f"{path}:{lineno}: language, idiom and paraphrase required")
            key = (language, idiom)
            if key in entries:
                raise DuplicateKey(f"{path}:{lineno}: duplicate entry {language}/{idiom!r}")
            definition = cell(cells, "definition") or None
            fewshot = tuple(
                part.strip() for part in cell(cells, "fewshot").split("|") if part.strip()
            )
            entry = LexiconEntry(paraphrase, definition, fewshot)
            try:
                _validate_entry(language, idiom, entry)
            except FormatError as err:
                raise FormatError(f"{path}:{lineno}: {err}") from None
            entries[key] = entry
    return IdiomLexicon(entries)


@dataclass(frozen=True)
class RewriteResult:
    text: str
    applied: bool


def _compound_pattern(compound: str) -> re.Pattern[str]:
    # Tokens joined by \s+ tolerate internal whitespace runs but never
    # cross punctuation; \b keeps "big fish" out of "big fishes".
    tokens = [re.escape(tok) for tok in compound.split()]
    return re.compile(r"\b" + r"\s+".join(tokens) + r"\b", re.IGNORECASE)


def rewrite(
    sentence: str,
    compound: str,
    language: str,
    lexicon: IdiomLexicon,
    decision_label: str,
) -> RewriteResult:
    """Replace occurrences of ``compound`` with its lexicon paraphrase.

    Literal sentences are returned unchanged. Idiomatic sentences whose
    compound has no lexicon entry pass through with a logged miss.
    Matching is case-insensitive and whitespace-tolerant.
    """
    if decision_label == LITERAL:
        return RewriteResult(sentence, False)
    entry = lexicon.get(language, compound)
    if entry is None:
        log.info("no lexicon entry for %s/%r; sentence left unchanged", language, compound)
        return RewriteResult(sentence, False)
    rewritten, count = _compound_pattern(compound).subn(entry.paraphrase, sentence)
    if count == 0:
        return RewriteResult(sentence, False)
    return RewriteResult(rewritten, True)


def format_miss_line(instance_id: str, compound: str) -> str:
    """One line of the rewrite miss log."""
    return f"{instance_id}\t{compound}\tNO_ENTRY"

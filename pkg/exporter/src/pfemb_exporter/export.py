"""Key enumeration and PFEMB emission for all three streams.

The exported key set is a superset of everything the ranking pipeline
can request for the dataset: query texts are enumerated for both the
original and the rewritten sentence (typing happens at the pipeline's
runtime), typer features are always included, and query vectors are
written to every store that can serve as a query source.
"""

from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from . import contract
from .errors import DataError, ManifestError, ModelLoadError
from .inputs import LexiconEntry, Row, Schema, read_lexicon, read_rows
from .manifest import SYNTH, ExportManifest


@dataclass(frozen=True)
class TextDemand:
    """A text whose embedding is needed under one or more keys."""

    key: str
    text: str


def _query_texts(
    row: Row,
    lexicon: Mapping[tuple[str, str], LexiconEntry],
    templates: tuple[str, ...],
    few_shot: bool,
) -> list[str]:
    entry = lexicon.get((row.language, contract.normalize_idiom(row.compound)))
    definitions = (entry.definition,) if entry and entry.definition else ()
    fewshot = entry.fewshot if (few_shot and entry) else ()
    texts = contract.render_queries(
        row.sentence, row.compound, definitions, fewshot, templates
    )
    if entry is not None:
        rewritten = contract.rewrite_sentence(row.sentence, row.compound, entry.paraphrase)
        if rewritten is not None:
            texts += contract.render_queries(
                rewritten, entry.paraphrase, definitions, fewshot, templates
            )
    return texts


def enumerate_demands(
    rows: Iterable[Row],
    lexicon: Mapping[tuple[str, str], LexiconEntry],
    manifest: ExportManifest,
) -> dict[str, dict[str, TextDemand | str]]:
    """Per stream: key -> TextDemand for texts, or candidate id for images."""
    demand: dict[str, dict[str, TextDemand | str]] = {s: {} for s in manifest.streams}
    for row in rows:
        queries = [
            TextDemand(contract.query_key(text), text)
            for text in _query_texts(row, lexicon, manifest.templates, manifest.few_shot)
        ]
        feature = contract.feature_text(row.sentence, row.compound)
        feature_demand = TextDemand(contract.query_key(feature), feature)

        for stream in manifest.streams:
            bucket = demand[stream]
            if stream == "vision":
                for cid in row.candidates:
                    bucket[contract.image_key(cid)] = cid
                for q in queries:
                    bucket[q.key] = q
            elif stream == "text_vl":
                for q in queries:
                    bucket[q.key] = q
                if row.captions:
                    for slot, caption in enumerate(row.captions):
                        bucket[contract.caption_key(row.id, slot)] = TextDemand(
                            contract.caption_key(row.id, slot), caption
                        )
            elif stream == "text_m3":
                for q in queries:
                    bucket[q.key] = q
                bucket[feature_demand.key] = feature_demand
                if row.captions:
                    for slot, caption in enumerate(row.captions):
                        bucket[contract.caption_key(row.id, slot)] = TextDemand(
                            contract.caption_key(row.id, slot), caption
                        )
    return demand


# --------------------------------------------------------------------------
# Vector providers
# --------------------------------------------------------------------------


def _hash_rng(label: str) -> np.random.Generator:
    seed = int.from_bytes(hashlib.sha256(label.encode("utf-8")).digest()[:8], "big")
    return np.random.default_rng(seed)


def _unit(vec: np.ndarray) -> np.ndarray:
    norm = np.linalg.norm(vec)
    if norm == 0:
        raise DataError("degenerate zero vector")
    return vec / norm


class SynthProvider:
    """Deterministic pseudo-random unit vectors per (model, key).

    Vectors depend only on (seed, model id, key), never on enumeration
    order, so re-exports are byte-identical. Streams sharing a model id
    (vision and text_vl by default) share query vectors exactly, the way
    a shared text tower would.
    """

    def __init__(self, manifest: ExportManifest):
        self.manifest = manifest
        self._planted_direction: dict[str, np.ndarray] = {}

    def _base(self, model: str, key: str) -> np.ndarray:
        rng = _hash_rng(f"{self.manifest.seed}|{model}|{key}")
        return _unit(rng.standard_normal(self.manifest.dimension))

    def vector(self, model: str, key: str) -> np.ndarray:
        return self._base(model, key)

    # --- planted fixtures ---------------------------------------------------

    def _direction(self, model: str, instance_id: str) -> np.ndarray:
        cache_key = f"{model}|{instance_id}"
        if cache_key not in self._planted_direction:
            rng = _hash_rng(f"{self.manifest.seed}|plant|{cache_key}")
            self._planted_direction[cache_key] = _unit(
                rng.standard_normal(self.manifest.dimension)
            )
        return self._planted_direction[cache_key]

    def planted_query(self, model: str, instance_id: str, key: str) -> np.ndarray:
        direction = self._direction(model, instance_id)
        noise = self._base(model, "qnoise|" + key)
        return _unit(direction + 0.05 * noise)

    def planted_winner(self, model: str, instance_id: str, key: str) -> np.ndarray:
        direction = self._direction(model, instance_id)
        noise = self._base(model, "wnoise|" + key)
        return _unit(direction + 0.05 * noise)

    def planted_loser(self, model: str, instance_id: str, key: str) -> np.ndarray:
        # Orthogonal complement of the planted direction: cosine with the
        # query stays near zero, so the winner's margin is ~1.
        direction = self._direction(model, instance_id)
        raw = self._base(model, "lnoise|" + key)
        return _unit(raw - (raw @ direction) * direction)


class RealTextProvider:
    """Best-effort sentence-encoder backend (never exercised in CI)."""

    def __init__(self, model_id: str):
        try:
            from sentence_transformers import SentenceTransformer
        except ImportError as err:
            raise ModelLoadError(f"sentence-transformers unavailable: {err}") from err
        try:
            self._model = SentenceTransformer(model_id)
        except Exception as err:  # model download/load can fail many ways
            raise ModelLoadError(f"cannot load {model_id!r}: {err}") from err

    def encode(self, texts: list[str]) -> np.ndarray:
        return np.asarray(self._model.encode(texts, normalize_embeddings=True))


# --------------------------------------------------------------------------
# PFEMB emission
# --------------------------------------------------------------------------


def write_pfemb(path: str, dimension: int, entries: Mapping[str, np.ndarray]) -> None:
    """Canonical PFEMB writer: byte-sorted keys, shortest-repr floats."""
    ordered = sorted(entries, key=lambda k: k.encode("utf-8"))
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"PFEMB 1 {dimension} {len(ordered)}\n")
        for key in ordered:
            vec = entries[key]
            if vec.shape != (dimension,):
                raise DataError(f"vector for {key!r} has wrong dimension")
            fh.write(key + "\t" + " ".join(repr(float(v)) for v in vec) + "\n")


def _winner_slots(rows: list[Row], manifest: ExportManifest) -> dict[str, int]:
    if manifest.plant is None:
        return {}
    if manifest.plant == "gold":
        winners = {}
        for row in rows:
            if row.gold_order is None:
                raise ManifestError(f"plant=gold but row {row.id} has no gold order")
            winners[row.id] = row.candidates.index(row.gold_order[0])
        return winners
    winners = dict(manifest.plant)
    for rid, slot in winners.items():
        if not 0 <= slot < 5:
            raise ManifestError(f"planted slot {slot} for {rid} out of range")
    return winners


def export(manifest: ExportManifest) -> dict[str, str]:
    """Produce one PFEMB file per requested stream; returns output paths."""
    schema = Schema.load(manifest.schema)
    rows = read_rows(manifest.dataset, schema)
    if not rows:
        raise DataError(f"{manifest.dataset}: no usable rows")
    lexicon = read_lexicon(manifest.lexicon)
    demands = enumerate_demands(rows, lexicon, manifest)
    winners = _winner_slots(rows, manifest)

    if manifest.mode == SYNTH:
        vectors = _synth_vectors(rows, lexicon, demands, winners, manifest)
    else:
        vectors = _real_vectors(demands, manifest)

    outputs = {}
    for stream in manifest.streams:
        path = manifest.outputs[stream]
        write_pfemb(path, manifest.dimension, vectors[stream])
        outputs[stream] = path
    return outputs


def synth(manifest: ExportManifest, seed: int | None = None) -> dict[str, str]:
    """Deterministic synthetic export (optionally overriding the seed)."""
    if seed is not None:
        from dataclasses import replace

        manifest = replace(manifest, seed=seed, mode=SYNTH)
    return export(manifest)


def _synth_vectors(
    rows: list[Row],
    lexicon: Mapping[tuple[str, str], LexiconEntry],
    demands: dict[str, dict[str, TextDemand | str]],
    winners: dict[str, int],
    manifest: ExportManifest,
) -> dict[str, dict[str, np.ndarray]]:
    provider = SynthProvider(manifest)
    owner: dict[str, tuple[str, int]] = {}  # key -> (instance id, slot) for planted rows
    queries_of: dict[str, str] = {}  # query key -> instance id (planted rows only)
    for row in rows:
        if row.id not in winners:
            continue
        for slot, cid in enumerate(row.candidates):
            owner[contract.image_key(cid)] = (row.id, slot)
            owner[contract.caption_key(row.id, slot)] = (row.id, slot)
        for text in _query_texts(row, lexicon, manifest.templates, manifest.few_shot):
            queries_of[contract.query_key(text)] = row.id

    stores: dict[str, dict[str, np.ndarray]] = {}
    for stream, bucket in demands.items():
        model = manifest.model_for(stream)
        entries: dict[str, np.ndarray] = {}
        for key in bucket:
            if key in owner:
                instance_id, slot = owner[key]
                if winners[instance_id] == slot:
                    entries[key] = provider.planted_winner(model, instance_id, key)
                else:
                    entries[key] = provider.planted_loser(model, instance_id, key)
            elif key in queries_of:
                entries[key] = provider.planted_query(model, queries_of[key], key)
            else:
                entries[key] = provider.vector(model, key)
        stores[stream] = entries
    return stores


def _real_vectors(
    demands: dict[str, dict[str, TextDemand | str]],
    manifest: ExportManifest,
) -> dict[str, dict[str, np.ndarray]]:
    stores: dict[str, dict[str, np.ndarray]] = {}
    providers: dict[str, RealTextProvider] = {}
    for stream, bucket in demands.items():
        model = manifest.model_for(stream)
        image_keys = [k for k, v in bucket.items() if isinstance(v, str)]
        if image_keys:
            raise ModelLoadError(
                "real-mode image embedding is not supported by this exporter build; "
                "use synth mode or export the vision stream from an image tower dump"
            )
        if model not in providers:
            providers[model] = RealTextProvider(model)
        texts = [(k, v.text) for k, v in bucket.items()]  # type: ignore[union-attr]
        matrix = providers[model].encode([t for _, t in texts])
        if matrix.shape[1] != manifest.dimension:
            raise ManifestError(
                f"model {model!r} emits dimension {matrix.shape[1]}, "
                f"manifest says {manifest.dimension}"
            )
        stores[stream] = {key: matrix[i] for i, (key, _) in enumerate(texts)}
    return stores

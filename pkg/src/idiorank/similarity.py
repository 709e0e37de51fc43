"""Query construction, cosine scoring, and the per-instance score streams.

Three streams feed fusion: ``vision`` (query vs candidate images),
``text_m3`` (query vs captions under the multilingual text encoder) and
``text_vl`` (query vs captions under the vision-language text tower).
All functions here are pure over immutable inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from . import keys
from .dataset import Instance
from .embeddings import EmbeddingStore
from .errors import (
    DimensionMismatch,
    MissingCaptions,
    MissingEmbedding,
    NonPositiveTemperature,
    ZeroVector,
)

STREAM_NAMES = ("vision", "text_m3", "text_vl")

IMAGE_TEXT = "image_text"
TEXT_ONLY = "text_only"

# Ingredients only; the exact wording is configuration, not contract.
DEFAULT_TEMPLATES = (
    "{sentence}",
    'photo illustrating "{compound}": {sentence}',
    "{sentence} ({compound} means {definition})",
)

DEFAULT_MODE_WEIGHTS: dict[str, dict[str, float]] = {
    IMAGE_TEXT: {"vision": 0.6, "text_m3": 0.3, "text_vl": 0.1},
    TEXT_ONLY: {"vision": 0.0, "text_m3": 0.7, "text_vl": 0.3},
}


@dataclass(frozen=True)
class QuerySpec:
    """Everything needed to render the text queries for one instance."""

    sentence_text: str
    compound: str
    definitions: tuple[str, ...] = ()
    fewshot_examples: tuple[str, ...] = ()
    templates: tuple[str, ...] = DEFAULT_TEMPLATES

    def __post_init__(self) -> None:
        if not self.templates:
            raise ValueError("templates must be non-empty")


@dataclass(frozen=True)
class ScoreStream:
    """One named source of candidate-suitability scores.

    The pipeline always carries five scores (one per candidate slot);
    fusion itself is generic over the slot count.
    """

    name: str
    scores: tuple[float, ...]
    weight: float

    def __post_init__(self) -> None:
        if not self.scores:
            raise ValueError("empty score stream")
        if not all(math.isfinite(s) for s in self.scores):
            raise ValueError(f"stream {self.name!r} has non-finite scores")
        if not 0.0 <= self.weight <= 1.0:
            raise ValueError(f"stream weight must be in [0,1], got {self.weight}")


def cosine(a: Sequence[float] | np.ndarray, b: Sequence[float] | np.ndarray) -> float:
    """Cosine similarity of two nonzero vectors of equal dimension."""
    va = np.asarray(a, dtype=np.float64)
    vb = np.asarray(b, dtype=np.float64)
    if va.shape != vb.shape:
        raise DimensionMismatch(f"cosine: shapes {va.shape} vs {vb.shape}")
    na = float(np.linalg.norm(va))
    nb = float(np.linalg.norm(vb))
    if na == 0.0 or nb == 0.0:
        raise ZeroVector("cosine of a zero vector is undefined")
    value = float(np.dot(va, vb) / (na * nb))
    # Guard against |value| drifting past 1 by a few ulps.
    return max(-1.0, min(1.0, value))


def temperature_distribution(scores: Sequence[float], tau: float) -> tuple[float, ...]:
    """Softmax of ``scores / tau``; sharper for small tau.

    Never changes the ordering of the candidates, only the shape of the
    probability mass over them.
    """
    if tau <= 0:
        raise NonPositiveTemperature(f"tau must be positive, got {tau}")
    arr = np.asarray(scores, dtype=np.float64) / tau
    arr -= arr.max()  # stable softmax
    exps = np.exp(arr)
    probs = exps / exps.sum()
    return tuple(float(p) for p in probs)


def render_queries(spec: QuerySpec) -> tuple[str, ...]:
    """Expand the spec's templates into concrete query texts.

    A template containing ``{definition}`` is rendered once per available
    definition (and skipped when there is none). Few-shot examples modify
    the text of each query, not the query count: they are prepended as a
    shared prefix.
    """
    prefix = ""
    if spec.fewshot_examples:
        prefix = " ".join(spec.fewshot_examples) + " "
    rendered: list[str] = []
    for template in spec.templates:
        if "{definition}" in template:
            for definition in spec.definitions:
                rendered.append(
                    prefix
                    + template.format(
                        sentence=spec.sentence_text,
                        compound=spec.compound,
                        definition=definition,
                    )
                )
        else:
            rendered.append(
                prefix + template.format(sentence=spec.sentence_text, compound=spec.compound)
            )
    if not rendered:
        raise ValueError("no query could be rendered (definition-only templates, no definition)")
    for text in rendered:
        if not text.strip():
            raise ValueError("rendered query is empty")
    return tuple(rendered)


def build_query_embedding(
    spec: QuerySpec,
    store: EmbeddingStore,
    key_fn: Callable[[str], str] = keys.query_key,
) -> np.ndarray:
    """Mean of the rendered-query embeddings (the single query vector).

    With one template and no few-shot examples this is exactly that
    query's stored embedding.
    """
    vectors = []
    for text in render_queries(spec):
        key = key_fn(text)
        vec = store.get(key)
        if vec is None:
            raise MissingEmbedding(key, f"query text {text!r}")
        vectors.append(vec)
    return np.mean(vectors, axis=0)


def _caption_scores(
    instance: Instance, query: np.ndarray, store: EmbeddingStore, stream: str
) -> tuple[float, ...]:
    if instance.captions is None:
        raise MissingCaptions(f"instance {instance.id}: {stream} stream requires captions")
    scores = []
    for slot in range(len(instance.candidates)):
        key = keys.caption_key(instance.id, slot)
        vec = store.get(key)
        if vec is None:
            raise MissingEmbedding(key, f"instance {instance.id} caption slot {slot}")
        scores.append(cosine(query, vec))
    return tuple(scores)


def effective_weights(mode: str, weights: Mapping[str, float] | None) -> dict[str, float]:
    """Mode defaults overlaid with explicit weights; text_only forces
    the vision weight to zero."""
    if mode not in (IMAGE_TEXT, TEXT_ONLY):
        raise ValueError(f"unknown mode {mode!r}")
    w = dict(DEFAULT_MODE_WEIGHTS[mode])
    if weights is not None:
        w.update(weights)
    if mode == TEXT_ONLY:
        w["vision"] = 0.0
    return w


def compute_streams(
    instance: Instance,
    q_vl: np.ndarray | None,
    q_m3: np.ndarray | None,
    stores: Mapping[str, EmbeddingStore],
    mode: str,
    weights: Mapping[str, float] | None = None,
    q_vl_captions: np.ndarray | None = None,
) -> list[ScoreStream]:
    """Produce the ``[vision, text_m3, text_vl]`` score streams.

    A zero-weight stream is still present, with all scores zero, so
    downstream fusion sees a constant shape — but it costs no query or
    store lookups (in text_only mode the vision stream is always such a
    stream, and a baseline run needs no multilingual-caption store).
    ``q_vl_captions`` lets a caller score captions against a different
    vision-language query than the images (used when rewriting is
    restricted to the vision stream); it defaults to ``q_vl``.
    """
    w = effective_weights(mode, weights)
    if q_vl_captions is None:
        q_vl_captions = q_vl

    zeros = tuple(0.0 for _ in instance.candidates)
    streams: list[ScoreStream] = []

    if w["vision"] == 0.0:
        vision_scores = zeros
    else:
        if q_vl is None:
            raise MissingEmbedding("q_vl", f"instance {instance.id}: no vision query embedding")
        store = stores.get("vision")
        if store is None:
            raise MissingEmbedding("vision store", f"instance {instance.id}")
        scores = []
        for cid in instance.candidates:
            key = keys.image_key(cid)
            vec = store.get(key)
            if vec is None:
                raise MissingEmbedding(key, f"instance {instance.id} candidate {cid}")
            scores.append(cosine(q_vl, vec))
        vision_scores = tuple(scores)
    streams.append(ScoreStream("vision", vision_scores, w["vision"]))

    if w["text_m3"] == 0.0:
        streams.append(ScoreStream("text_m3", zeros, 0.0))
    else:
        if q_m3 is None:
            raise MissingEmbedding("q_m3", f"instance {instance.id}: no text query embedding")
        m3_store = stores.get("text_m3")
        if m3_store is None:
            raise MissingEmbedding("text_m3 store", f"instance {instance.id}")
        streams.append(
            ScoreStream(
                "text_m3", _caption_scores(instance, q_m3, m3_store, "text_m3"), w["text_m3"]
            )
        )

    if w["text_vl"] == 0.0:
        streams.append(ScoreStream("text_vl", zeros, 0.0))
    else:
        if q_vl_captions is None:
            raise MissingEmbedding("q_vl", f"instance {instance.id}: no vision-language query")
        vl_store = stores.get("text_vl")
        if vl_store is None:
            raise MissingEmbedding("text_vl store", f"instance {instance.id}")
        streams.append(
            ScoreStream(
                "text_vl",
                _caption_scores(instance, q_vl_captions, vl_store, "text_vl"),
                w["text_vl"],
            )
        )
    return streams

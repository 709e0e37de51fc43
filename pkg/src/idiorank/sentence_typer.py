"""Literal/idiomatic sentence typing.

Four sources produce a :class:`SentenceTypeDecision`:

* a from-scratch logistic regression over text-encoder features,
* a two-phase literal-first protocol against an external classifier
  (phase 1 elicits cached literal example sentences for the compound,
  phase 2 asks for a single-label decision),
* weighted ensemble voting over several decisions,
* a caption-frequency heuristic that never fails.

The external-classifier contract is transport-agnostic: vendors are
configuration values, never code paths. Tests use in-memory mocks.
"""

from __future__ import annotations

import json
import logging
import os
import re
import threading
from dataclasses import dataclass
from typing import Iterable, Protocol, Sequence

import numpy as np

from .dataset import IDIOMATIC, LITERAL, Instance
from .errors import (
    ClientUnavailable,
    DegenerateData,
    DimensionMismatch,
    EmptyInput,
    UnparseableResponse,
)

log = logging.getLogger(__name__)

SOURCE_LR = "lr"
SOURCE_LLM = "llm"
SOURCE_ENSEMBLE = "ensemble"
SOURCE_HEURISTIC = "heuristic"
SOURCE_GOLD = "gold"

DEFAULT_EPOCHS = 500
DEFAULT_LR_RATE = 0.5
DEFAULT_L2 = 1e-4
DEFAULT_EXAMPLE_COUNT = 3


@dataclass(frozen=True)
class SentenceTypeDecision:
    label: str
    source: str
    confidence: float

    def __post_init__(self) -> None:
        if self.label not in (LITERAL, IDIOMATIC):
            raise ValueError(f"bad label {self.label!r}")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence must be in [0,1], got {self.confidence}")


# --------------------------------------------------------------------------
# Logistic regression
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class LRModel:
    weights: np.ndarray
    bias: float
    l2_lambda: float
    trained_on: str = ""

    def to_dict(self) -> dict:
        return {
            "weights": [float(w) for w in self.weights],
            "bias": float(self.bias),
            "l2_lambda": float(self.l2_lambda),
            "trained_on": self.trained_on,
        }

    @staticmethod
    def from_dict(raw: dict) -> "LRModel":
        return LRModel(
            weights=np.asarray(raw["weights"], dtype=np.float64),
            bias=float(raw["bias"]),
            l2_lambda=float(raw.get("l2_lambda", 0.0)),
            trained_on=raw.get("trained_on", ""),
        )

    def save(self, path: str | os.PathLike[str]) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")

    @staticmethod
    def load(path: str | os.PathLike[str]) -> "LRModel":
        with open(path, "r", encoding="utf-8") as fh:
            return LRModel.from_dict(json.load(fh))


def _sigmoid(z: np.ndarray | float) -> np.ndarray | float:
    return 1.0 / (1.0 + np.exp(-np.asarray(z, dtype=np.float64)))


def lr_loss_and_grad(
    weights: np.ndarray,
    bias: float,
    features: np.ndarray,
    labels: np.ndarray,
    l2_lambda: float,
) -> tuple[float, np.ndarray, float]:
    """Mean L2-regularized negative log-likelihood and its gradient.

    Uses the log-sum-exp form ``log(1+e^z) - y*z`` so the loss and the
    analytic gradient stay exactly consistent (no probability clipping),
    which is what the finite-difference check relies on. The bias is not
    regularized.
    """
    z = features @ weights + bias
    nll = np.logaddexp(0.0, z) - labels * z
    loss = float(np.mean(nll) + 0.5 * l2_lambda * float(weights @ weights))
    residual = _sigmoid(z) - labels
    grad_w = features.T @ residual / len(labels) + l2_lambda * weights
    grad_b = float(np.mean(residual))
    return loss, grad_w, grad_b


def _as_training_arrays(
    examples: Sequence[tuple[Sequence[float], str | int]],
) -> tuple[np.ndarray, np.ndarray]:
    if not examples:
        raise DegenerateData("no training examples")
    vectors = []
    labels = []
    for vec, label in examples:
        vectors.append(np.asarray(vec, dtype=np.float64))
        if isinstance(label, str):
            if label not in (LITERAL, IDIOMATIC):
                raise ValueError(f"bad label {label!r}")
            labels.append(1.0 if label == IDIOMATIC else 0.0)
        else:
            labels.append(float(label))
    dim = vectors[0].shape
    if any(v.shape != dim for v in vectors):
        raise DimensionMismatch("training vectors have inconsistent dimensions")
    y = np.asarray(labels, dtype=np.float64)
    if len(set(y.tolist())) < 2:
        raise DegenerateData("training data contains a single class")
    return np.stack(vectors), y


def train_lr(
    examples: Sequence[tuple[Sequence[float], str | int]],
    epochs: int = DEFAULT_EPOCHS,
    lr_rate: float = DEFAULT_LR_RATE,
    l2_lambda: float = DEFAULT_L2,
    seed: int = 0,
    trained_on: str = "",
) -> LRModel:
    """Full-batch gradient descent from zero initialization.

    The step size halves whenever a step would increase the loss, so the
    per-epoch training loss is non-increasing. Training is deterministic;
    ``seed`` is accepted for interface stability but full-batch descent
    has no stochastic component.
    """
    del seed
    if epochs <= 0:
        raise ValueError(f"epochs must be positive, got {epochs}")
    if lr_rate <= 0:
        raise ValueError(f"lr_rate must be positive, got {lr_rate}")
    if l2_lambda < 0:
        raise ValueError(f"l2_lambda must be nonnegative, got {l2_lambda}")
    features, labels = _as_training_arrays(examples)

    weights = np.zeros(features.shape[1], dtype=np.float64)
    bias = 0.0
    step = lr_rate
    loss, grad_w, grad_b = lr_loss_and_grad(weights, bias, features, labels, l2_lambda)
    for _ in range(epochs):
        while True:
            new_w = weights - step * grad_w
            new_b = bias - step * grad_b
            new_loss, new_gw, new_gb = lr_loss_and_grad(
                new_w, new_b, features, labels, l2_lambda
            )
            if new_loss <= loss or step < 1e-12:
                break
            step *= 0.5
        if new_loss > loss:
            break  # step size exhausted; converged to numerical precision
        weights, bias = new_w, new_b
        loss, grad_w, grad_b = new_loss, new_gw, new_gb
    return LRModel(weights=weights, bias=bias, l2_lambda=l2_lambda, trained_on=trained_on)


def predict_lr(model: LRModel, feature: Sequence[float] | np.ndarray) -> SentenceTypeDecision:
    """Sigmoid probability of the idiomatic class; ties go to idiomatic.

    The label is decided on the raw margin (``w.x + b >= 0``) so the
    boundary is exact rather than subject to sigmoid rounding.
    """
    vec = np.asarray(feature, dtype=np.float64)
    if vec.shape != model.weights.shape:
        raise DimensionMismatch(
            f"feature has shape {vec.shape}, model expects {model.weights.shape}"
        )
    margin = float(model.weights @ vec + model.bias)
    p_idiomatic = float(_sigmoid(margin))
    label = IDIOMATIC if margin >= 0.0 else LITERAL
    return SentenceTypeDecision(
        label=label, source=SOURCE_LR, confidence=max(p_idiomatic, 1.0 - p_idiomatic)
    )


# --------------------------------------------------------------------------
# External classifier protocol
# --------------------------------------------------------------------------


class ClassifierClient(Protocol):
    """Request/response contract for the external classifier transport.

    ``request`` receives a payload dict with a ``phase`` of
    ``generate_examples``, ``classify`` or ``translate`` and returns a
    response dict. Implementations raise :class:`ClientUnavailable` when
    the backend cannot be reached.
    """

    def request(self, payload: dict) -> dict: ...


def encode_request(payload: dict) -> str:
    """Serialize one request as a line of structured text."""
    return json.dumps(payload, ensure_ascii=False, sort_keys=True)


def decode_response(line: str) -> dict:
    try:
        value = json.loads(line)
    except json.JSONDecodeError as err:
        raise UnparseableResponse(f"bad response line: {err}") from None
    if not isinstance(value, dict):
        raise UnparseableResponse("response line is not an object")
    return value


class LineCache:
    """Append-only, file-backed cache of text records keyed by
    (language, text). Hits are byte-stable across runs: a write for an
    already-present key is a no-op.

    File format: ``<language>\\t<key text>\\t<value>``, one value per
    line, UTF-8. Concurrent readers are fine; writes are serialized and
    creation is exactly-once per key even under concurrent workers.
    """

    def __init__(self, path: str | os.PathLike[str] | None = None):
        self._path = os.fspath(path) if path is not None else None
        self._entries: dict[tuple[str, str], list[str]] = {}
        self._lock = threading.Lock()
        self._key_locks: dict[tuple[str, str], threading.Lock] = {}
        if self._path is not None and os.path.exists(self._path):
            self._load()

    def _load(self) -> None:
        assert self._path is not None
        with open(self._path, "r", encoding="utf-8") as fh:
            for raw in fh:
                line = raw.rstrip("\n")
                if not line:
                    continue
                language, _, rest = line.partition("\t")
                text, _, value = rest.partition("\t")
                self._entries.setdefault((language, text), []).append(value)

    def get(self, language: str, text: str) -> list[str] | None:
        with self._lock:
            values = self._entries.get((language, text))
            return list(values) if values is not None else None

    def put(self, language: str, text: str, values: Iterable[str]) -> list[str]:
        """Store values for a key; a no-op when the key already exists."""
        values = list(values)
        with self._lock:
            existing = self._entries.get((language, text))
            if existing is not None:
                return list(existing)
            self._entries[(language, text)] = values
            if self._path is not None:
                with open(self._path, "a", encoding="utf-8") as fh:
                    for value in values:
                        fh.write(f"{language}\t{text}\t{value}\n")
            return values

    def get_or_create(self, language: str, text: str, factory) -> list[str]:
        """Return cached values, invoking ``factory`` at most once per key."""
        cached = self.get(language, text)
        if cached is not None:
            return cached
        with self._lock:
            key_lock = self._key_locks.setdefault((language, text), threading.Lock())
        with key_lock:
            cached = self.get(language, text)
            if cached is not None:
                return cached
            return self.put(language, text, factory())


# Literal example sentences are cached per (compound, language); the same
# machinery backs the translation cache keyed by (sentence, language).
LiteralExampleCache = LineCache


_LABEL_WORD = re.compile(r"\b(literal|idiomatic)\b", re.IGNORECASE)


def _parse_label(response: dict) -> str:
    raw = response.get("label")
    if not isinstance(raw, str) or not raw.strip():
        raise UnparseableResponse("response carries no label")
    stripped = raw.strip().lower()
    if stripped in (LITERAL, IDIOMATIC):
        return stripped
    # Brief reasoning is allowed as long as exactly one label appears.
    found = {m.group(1).lower() for m in _LABEL_WORD.finditer(raw)}
    if len(found) == 1:
        return found.pop()
    raise UnparseableResponse(f"cannot reduce {raw!r} to a single label")


def classify_literal_first(
    instance: Instance,
    client: ClassifierClient,
    cache: LineCache,
    example_count: int = DEFAULT_EXAMPLE_COUNT,
) -> SentenceTypeDecision:
    """Two-phase literal-first protocol.

    Phase 1 obtains (or reuses from cache) clearly literal example
    sentences for the (compound, language) pair. Phase 2 presents them
    with the target sentence and asks for a single-label decision. An
    unparseable phase-2 response is retried once, then treated as
    :class:`ClientUnavailable` so callers can fall back.
    """

    def generate() -> list[str]:
        response = client.request(
            {
                "phase": "generate_examples",
                "compound": instance.compound,
                "language": instance.language,
                "count": example_count,
            }
        )
        examples = response.get("examples")
        if not isinstance(examples, list) or not all(isinstance(e, str) for e in examples):
            raise ClientUnavailable("generate_examples returned no example list")
        return examples

    examples = cache.get_or_create(instance.language, instance.compound, generate)

    payload = {
        "phase": "classify",
        "compound": instance.compound,
        "language": instance.language,
        "sentence": instance.sentence,
        "examples": examples,
    }
    last_error: UnparseableResponse | None = None
    for _ in range(2):  # one retry
        response = client.request(payload)
        try:
            label = _parse_label(response)
        except UnparseableResponse as err:
            last_error = err
            continue
        confidence = float(response.get("confidence", 1.0))
        return SentenceTypeDecision(label=label, source=SOURCE_LLM, confidence=confidence)
    raise ClientUnavailable(f"classifier response unparseable after retry: {last_error}")


def ensemble_classify(
    decisions: Sequence[tuple[SentenceTypeDecision, float]],
    tie_label: str = IDIOMATIC,
) -> SentenceTypeDecision:
    """Weighted vote over decisions; confidence is the winning mass share."""
    if not decisions:
        raise EmptyInput("ensemble_classify needs at least one decision")
    mass = {LITERAL: 0.0, IDIOMATIC: 0.0}
    for decision, weight in decisions:
        if weight < 0:
            raise ValueError(f"negative ensemble weight {weight}")
        mass[decision.label] += weight
    total = mass[LITERAL] + mass[IDIOMATIC]
    if total <= 0:
        raise ValueError("ensemble weights sum to zero")
    if mass[IDIOMATIC] > mass[LITERAL]:
        winner = IDIOMATIC
    elif mass[LITERAL] > mass[IDIOMATIC]:
        winner = LITERAL
    else:
        winner = tie_label
    return SentenceTypeDecision(
        label=winner, source=SOURCE_ENSEMBLE, confidence=mass[winner] / total
    )


def heuristic_classify(
    instance: Instance,
    threshold_k: int = 2,
    markers: Sequence[str] = (),
) -> SentenceTypeDecision:
    """Caption-frequency heuristic with lexical-marker override.

    The compound occurring verbatim (case-folded) in at least
    ``threshold_k`` captions, or any marker occurring in the sentence,
    signals a literal use. Without captions the majority-class prior
    (idiomatic, confidence 0.5) is returned.
    """
    if threshold_k <= 0:
        raise ValueError(f"threshold_k must be positive, got {threshold_k}")
    if instance.captions is None:
        return SentenceTypeDecision(IDIOMATIC, SOURCE_HEURISTIC, 0.5)
    needle = instance.compound.casefold()
    occurrences = sum(1 for caption in instance.captions if needle in caption.casefold())
    sentence = instance.sentence.casefold()
    marker_hit = any(marker.casefold() in sentence for marker in markers if marker)
    label = LITERAL if occurrences >= threshold_k or marker_hit else IDIOMATIC
    confidence = 0.5 + 0.1 * min(occurrences, 5)
    return SentenceTypeDecision(label, SOURCE_HEURISTIC, confidence)


def gold_decision(instance: Instance) -> SentenceTypeDecision | None:
    if instance.gold_sentence_type is None:
        return None
    return SentenceTypeDecision(instance.gold_sentence_type, SOURCE_GOLD, 1.0)

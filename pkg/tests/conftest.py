"""Shared test helpers: deterministic vectors, tiny instances, mock clients."""

from __future__ import annotations

import hashlib

import numpy as np
import pytest

from idiorank.dataset import Instance
from idiorank.errors import ClientUnavailable


def seeded_vector(label: str, dim: int = 8, normalize: bool = True) -> np.ndarray:
    """Deterministic pseudo-random vector derived from a label string."""
    seed = int.from_bytes(hashlib.sha256(label.encode("utf-8")).digest()[:8], "big")
    rng = np.random.default_rng(seed)
    vec = rng.standard_normal(dim)
    if normalize:
        vec /= np.linalg.norm(vec)
    return vec


def make_instance(
    instance_id: str = "inst1",
    language: str = "en",
    sentence: str = "He is a big fish in the company.",
    compound: str = "big fish",
    candidates: tuple[str, ...] = ("i1", "i2", "i3", "i4", "i5"),
    captions: tuple[str, ...] | None = (
        "a person in an office",
        "a large fish in the sea",
        "a mountain at dawn",
        "a cat on a sofa",
        "a crowded street",
    ),
    gold_sentence_type: str | None = None,
    gold_order: tuple[str, ...] | None = None,
) -> Instance:
    return Instance(
        id=instance_id,
        language=language,
        sentence=sentence,
        compound=compound,
        candidates=candidates,
        captions=captions,
        gold_sentence_type=gold_sentence_type,
        gold_order=gold_order,
    )


class ScriptedClient:
    """Classifier-client mock driven by canned per-phase responses."""

    def __init__(self, label: str = "IDIOMATIC", examples: list[str] | None = None,
                 translations: dict[str, str] | None = None):
        self.label = label
        self.examples = examples if examples is not None else ["The fish was big."]
        self.translations = translations or {}
        self.calls: list[dict] = []

    def request(self, payload: dict) -> dict:
        self.calls.append(dict(payload))
        phase = payload.get("phase")
        if phase == "generate_examples":
            return {"examples": list(self.examples)}
        if phase == "classify":
            return {"label": self.label}
        if phase == "translate":
            sentence = payload.get("sentence", "")
            if sentence in self.translations:
                return {"translation": self.translations[sentence]}
            return {"translation": f"EN: {sentence}"}
        raise ClientUnavailable(f"unknown phase {phase!r}")

    def phase_calls(self, phase: str) -> list[dict]:
        return [c for c in self.calls if c.get("phase") == phase]


@pytest.fixture
def scripted_client() -> ScriptedClient:
    return ScriptedClient()

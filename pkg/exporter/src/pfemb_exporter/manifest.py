"""Export manifest: what to embed, with which models, into which files."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Mapping

from .contract import DEFAULT_TEMPLATES, KEY_SCHEME_VERSION
from .errors import KeySchemeMismatch, ManifestError

STREAMS = ("vision", "text_m3", "text_vl")

SYNTH = "synth"
REAL = "real"


@dataclass(frozen=True)
class ExportManifest:
    dataset: str
    schema: str
    outputs: Mapping[str, str]
    streams: tuple[str, ...] = STREAMS
    models: Mapping[str, str] = field(default_factory=dict)
    mode: str = SYNTH
    dimension: int = 16
    seed: int = 0
    lexicon: str | None = None
    key_scheme: str = KEY_SCHEME_VERSION
    templates: tuple[str, ...] = DEFAULT_TEMPLATES
    few_shot: bool = False
    plant: str | Mapping[str, int] | None = None

    def __post_init__(self) -> None:
        if self.key_scheme != KEY_SCHEME_VERSION:
            raise KeySchemeMismatch(
                f"manifest wants key scheme {self.key_scheme!r}, "
                f"this exporter produces {KEY_SCHEME_VERSION!r}"
            )
        if self.dimension <= 0:
            raise ManifestError(f"dimension must be positive, got {self.dimension}")
        if self.mode not in (SYNTH, REAL):
            raise ManifestError(f"unknown mode {self.mode!r}")
        unknown = set(self.streams) - set(STREAMS)
        if unknown:
            raise ManifestError(f"unknown streams: {sorted(unknown)}")
        missing = [s for s in self.streams if s not in self.outputs]
        if missing:
            raise ManifestError(f"no output path for streams: {missing}")
        if self.plant is not None and self.mode != SYNTH:
            raise ManifestError("planted embeddings require synth mode")

    def model_for(self, stream: str) -> str:
        # The vision-language text tower serves both the vision and the
        # text_vl stream, so shared query texts get identical vectors.
        default = {"vision": "vl-encoder", "text_vl": "vl-encoder", "text_m3": "m3-encoder"}
        return self.models.get(stream, default[stream])


def load_manifest(path: str | os.PathLike[str]) -> ExportManifest:
    path = os.fspath(path)
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    base = os.path.dirname(os.path.abspath(path))

    def _resolve(p):
        return os.path.normpath(os.path.join(base, p)) if p is not None else None

    for required in ("dataset", "schema", "outputs"):
        if required not in raw:
            raise ManifestError(f"{path}: manifest missing {required!r}")
    templates = raw.get("templates")
    plant = raw.get("plant")
    if isinstance(plant, dict):
        plant = {str(k): int(v) for k, v in plant.items()}
    return ExportManifest(
        dataset=_resolve(raw["dataset"]),
        schema=_resolve(raw["schema"]),
        outputs={k: _resolve(v) for k, v in raw["outputs"].items()},
        streams=tuple(raw.get("streams", STREAMS)),
        models=dict(raw.get("models", {})),
        mode=raw.get("mode", SYNTH),
        dimension=int(raw.get("dimension", 16)),
        seed=int(raw.get("seed", 0)),
        lexicon=_resolve(raw.get("lexicon")),
        key_scheme=str(raw.get("key_scheme", KEY_SCHEME_VERSION)),
        templates=tuple(templates) if templates else DEFAULT_TEMPLATES,
        few_shot=bool(raw.get("few_shot", False)),
        plant=plant,
    )

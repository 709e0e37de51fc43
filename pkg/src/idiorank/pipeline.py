"""End-to-end orchestration of the three system variants.

Per instance the pipeline runs: sentence typing (first available source
in the configured priority order), idiom rewriting for idiomatic cases,
query construction, the three similarity streams, an optional
cross-lingual blend, and weighted Borda fusion. Instances are
independent work units; runs are deterministic for fixed inputs at any
worker count.
"""

from __future__ import annotations

import json
import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np

from . import keys
from .dataset import IDIOMATIC, Dataset, Instance, SchemaConfig
from .embeddings import EmbeddingStore, load_embeddings
from .errors import IdiorankError, MissingEmbedding
from .fusion import FusionConfig, RankingResult, borda_fuse, combine_crosslingual
from .rewriter import IdiomLexicon, RewriteResult, format_miss_line, load_lexicon, rewrite
from .sentence_typer import (
    SOURCE_HEURISTIC,
    ClassifierClient,
    LineCache,
    LRModel,
    SentenceTypeDecision,
    classify_literal_first,
    ensemble_classify,
    gold_decision,
    heuristic_classify,
    predict_lr,
)
from .similarity import (
    DEFAULT_MODE_WEIGHTS,
    DEFAULT_TEMPLATES,
    IMAGE_TEXT,
    TEXT_ONLY,
    QuerySpec,
    build_query_embedding,
    compute_streams,
    effective_weights,
    render_queries,
)

log = logging.getLogger(__name__)

BASELINE = "baseline"
IMPROVED = "improved"
VARIANT_TEXT_ONLY = "text_only"
VARIANTS = (BASELINE, IMPROVED, VARIANT_TEXT_ONLY)

TYPER_SOURCES = ("gold", "lr", "llm_ensemble", "heuristic")

# The baseline ranker uses a single vision-language encoder for queries,
# images and captions, so its caption stream is text_vl.
BASELINE_WEIGHTS = {"vision": 0.6, "text_m3": 0.0, "text_vl": 0.4}


def default_variant_weights(variant: str) -> dict[str, float]:
    if variant == BASELINE:
        return dict(BASELINE_WEIGHTS)
    if variant == VARIANT_TEXT_ONLY:
        return dict(DEFAULT_MODE_WEIGHTS[TEXT_ONLY])
    return dict(DEFAULT_MODE_WEIGHTS[IMAGE_TEXT])


def variant_mode(variant: str) -> str:
    return TEXT_ONLY if variant == VARIANT_TEXT_ONLY else IMAGE_TEXT


@dataclass(frozen=True)
class PipelineConfig:
    """One run's complete configuration.

    Loaded from a single JSON file so runs are archivable and diffable;
    sparse CLI overrides mutate the raw dict before validation. Paths
    are resolved relative to the config file's directory.
    """

    variant: str = IMPROVED
    dataset: str | None = None
    schema: SchemaConfig | None = None
    lexicon: str | None = None
    embeddings: Mapping[str, str] = field(default_factory=dict)
    tau: float = 0.7
    typer_priority: tuple[str, ...] = ("heuristic",)
    fusion: FusionConfig = field(default_factory=FusionConfig)
    crosslingual: bool | tuple[str, ...] = False
    blend: float = 0.5
    few_shot: bool = False
    enable_rewrite: bool = True
    enable_typer: bool = True
    rewrite_scope: str = "all"
    workers: int = 1
    strict: bool = False
    heuristic_threshold_k: int = 2
    heuristic_markers: tuple[str, ...] = ()
    lr_model: str | None = None
    examples_cache: str | None = None
    translation_cache: str | None = None
    templates: tuple[str, ...] | None = None
    example_count: int = 3
    miss_log: str | None = None

    def __post_init__(self) -> None:
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.tau <= 0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if not self.typer_priority:
            raise ValueError("typer_priority must be non-empty")
        for source in self.typer_priority:
            if source not in TYPER_SOURCES:
                raise ValueError(f"unknown typer source {source!r}")
        if self.rewrite_scope not in ("all", "vision"):
            raise ValueError(f"unknown rewrite_scope {self.rewrite_scope!r}")
        if not 0.0 <= self.blend <= 1.0:
            raise ValueError(f"blend must be in [0,1], got {self.blend}")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")

    @property
    def mode(self) -> str:
        return variant_mode(self.variant)

    def crosslingual_enabled(self, language: str) -> bool:
        if language.lower().startswith("en"):
            return False
        if isinstance(self.crosslingual, bool):
            return self.crosslingual
        return language in self.crosslingual


_CONFIG_KEYS = {
    "variant",
    "dataset",
    "schema",
    "lexicon",
    "embeddings",
    "tau",
    "typer_priority",
    "fusion",
    "crosslingual",
    "blend",
    "few_shot",
    "enable_rewrite",
    "enable_typer",
    "rewrite_scope",
    "workers",
    "strict",
    "heuristic_threshold_k",
    "heuristic_markers",
    "lr_model",
    "examples_cache",
    "translation_cache",
    "templates",
    "example_count",
    "miss_log",
}

_FUSION_KEYS = {"weights", "confidence_adjust", "confidence_alpha", "aggregator", "rrf_k0"}


def config_from_dict(raw: dict, base_dir: str = ".") -> PipelineConfig:
    """Build a validated PipelineConfig from a raw JSON object.

    Unknown keys are errors, not warnings, so typos in config files and
    CLI overrides surface immediately.
    """
    unknown = set(raw) - _CONFIG_KEYS
    if unknown:
        raise IdiorankError(f"unknown config keys: {sorted(unknown)}")

    def _path(value):
        if value is None:
            return None
        return os.path.normpath(os.path.join(base_dir, value))

    variant = raw.get("variant", IMPROVED)
    fusion_raw = dict(raw.get("fusion", {}))
    unknown = set(fusion_raw) - _FUSION_KEYS
    if unknown:
        raise IdiorankError(f"unknown fusion config keys: {sorted(unknown)}")
    weights = fusion_raw.get("weights")
    if weights is None:
        weights = default_variant_weights(variant)
    fusion = FusionConfig(
        weights={str(k): float(v) for k, v in weights.items()},
        mode=variant_mode(variant),
        confidence_adjust=bool(fusion_raw.get("confidence_adjust", False)),
        confidence_alpha=float(fusion_raw.get("confidence_alpha", 1.0)),
        aggregator=fusion_raw.get("aggregator", "borda"),
        rrf_k0=float(fusion_raw.get("rrf_k0", 0.0)),
    )

    schema = None
    raw_schema = raw.get("schema")
    if isinstance(raw_schema, str):
        schema = SchemaConfig.from_file(_path(raw_schema))
    elif isinstance(raw_schema, dict):
        schema = SchemaConfig.from_dict(raw_schema)

    crosslingual = raw.get("crosslingual", False)
    if isinstance(crosslingual, list):
        crosslingual = tuple(str(lang) for lang in crosslingual)

    templates = raw.get("templates")
    if templates is not None:
        templates = tuple(str(t) for t in templates)

    return PipelineConfig(
        variant=variant,
        dataset=_path(raw.get("dataset")),
        schema=schema,
        lexicon=_path(raw.get("lexicon")),
        embeddings={k: _path(v) for k, v in raw.get("embeddings", {}).items()},
        tau=float(raw.get("tau", 0.7)),
        typer_priority=tuple(raw.get("typer_priority", ["heuristic"])),
        fusion=fusion,
        crosslingual=crosslingual,
        blend=float(raw.get("blend", 0.5)),
        few_shot=bool(raw.get("few_shot", False)),
        enable_rewrite=bool(raw.get("enable_rewrite", True)),
        enable_typer=bool(raw.get("enable_typer", True)),
        rewrite_scope=raw.get("rewrite_scope", "all"),
        workers=int(raw.get("workers", 1)),
        strict=bool(raw.get("strict", False)),
        heuristic_threshold_k=int(raw.get("heuristic_threshold_k", 2)),
        heuristic_markers=tuple(raw.get("heuristic_markers", [])),
        lr_model=_path(raw.get("lr_model")),
        examples_cache=_path(raw.get("examples_cache")),
        translation_cache=_path(raw.get("translation_cache")),
        templates=templates,
        example_count=int(raw.get("example_count", 3)),
        miss_log=_path(raw.get("miss_log")),
    )


def load_config(path: str | os.PathLike[str]) -> PipelineConfig:
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    return config_from_dict(raw, base_dir=os.path.dirname(os.path.abspath(path)))


@dataclass
class Resources:
    """Everything a run needs beyond the dataset itself."""

    stores: Mapping[str, EmbeddingStore]
    lexicon: IdiomLexicon = field(default_factory=IdiomLexicon.empty)
    lr_model: LRModel | None = None
    classifier_clients: tuple[tuple[ClassifierClient, float], ...] = ()
    example_cache: LineCache = field(default_factory=LineCache)
    translation_cache: LineCache = field(default_factory=LineCache)


def load_resources(
    config: PipelineConfig,
    classifier_clients: Sequence[tuple[ClassifierClient, float]] = (),
) -> Resources:
    """Materialize stores, lexicon, caches and the typer model from config paths."""
    stores = {name: load_embeddings(path) for name, path in config.embeddings.items()}
    lexicon = load_lexicon(config.lexicon) if config.lexicon else IdiomLexicon.empty()
    lr_model = LRModel.load(config.lr_model) if config.lr_model else None
    return Resources(
        stores=stores,
        lexicon=lexicon,
        lr_model=lr_model,
        classifier_clients=tuple(classifier_clients),
        example_cache=LineCache(config.examples_cache),
        translation_cache=LineCache(config.translation_cache),
    )


@dataclass(frozen=True)
class PredictionRecord:
    """Pipeline output for one instance."""

    instance_id: str
    decision: SentenceTypeDecision
    ranking: RankingResult
    variant: str
    rewrite_applied: bool = False
    rewrite_missed: bool = False  # idiomatic decision but no lexicon entry
    timing_ms: float = 0.0


@dataclass(frozen=True)
class Prediction:
    """The evaluation-facing subset of a prediction (also what the
    prediction TSV round-trips)."""

    instance_id: str
    sentence_type: str
    confidence: float
    order: tuple[str, ...]
    scores: tuple[float, ...]


def as_prediction(record: PredictionRecord) -> Prediction:
    return Prediction(
        instance_id=record.instance_id,
        sentence_type=record.decision.label,
        confidence=record.decision.confidence,
        order=record.ranking.order,
        scores=record.ranking.fused_scores,
    )


# --------------------------------------------------------------------------
# Typing stage
# --------------------------------------------------------------------------


def _llm_ensemble_decision(
    instance: Instance, config: PipelineConfig, resources: Resources
) -> SentenceTypeDecision | None:
    votes: list[tuple[SentenceTypeDecision, float]] = []
    for client, weight in resources.classifier_clients:
        try:
            decision = classify_literal_first(
                instance, client, resources.example_cache, config.example_count
            )
        except IdiorankError as err:
            log.warning("classifier client failed for %s: %s", instance.id, err)
            continue
        votes.append((decision, weight))
    if not votes:
        return None
    if len(votes) == 1:
        return votes[0][0]
    return ensemble_classify(votes)


def decide_sentence_type(
    instance: Instance, config: PipelineConfig, resources: Resources
) -> SentenceTypeDecision:
    """First available source in priority order; never fails.

    Source exhaustion falls back to the heuristic even when it is not
    listed. The baseline variant always types heuristically.
    """
    if not config.enable_typer:
        return SentenceTypeDecision(IDIOMATIC, SOURCE_HEURISTIC, 0.5)

    def heuristic() -> SentenceTypeDecision:
        return heuristic_classify(
            instance, config.heuristic_threshold_k, config.heuristic_markers
        )

    if config.variant == BASELINE:
        return heuristic()
    for source in config.typer_priority:
        if source == "gold":
            decision = gold_decision(instance)
            if decision is not None:
                return decision
        elif source == "lr":
            model = resources.lr_model
            if model is None:
                continue
            store = resources.stores.get("text_m3")
            if store is None:
                continue
            feature = store.get(keys.feature_key(instance.sentence, instance.compound))
            if feature is None or feature.shape != model.weights.shape:
                continue
            return predict_lr(model, feature)
        elif source == "llm_ensemble":
            decision = _llm_ensemble_decision(instance, config, resources)
            if decision is not None:
                return decision
        elif source == "heuristic":
            return heuristic()
    return heuristic()


# --------------------------------------------------------------------------
# Query construction
# --------------------------------------------------------------------------


def _build_specs(
    instance: Instance,
    config: PipelineConfig,
    resources: Resources,
    decision: SentenceTypeDecision,
) -> tuple[QuerySpec, QuerySpec, RewriteResult, bool]:
    """Return (vision-side spec, caption-side spec, rewrite outcome, lexicon miss)."""
    entry = resources.lexicon.get(instance.language, instance.compound)
    definitions = (entry.definition,) if entry and entry.definition else ()
    fewshot = entry.fewshot if (config.few_shot and entry) else ()
    templates = config.templates or DEFAULT_TEMPLATES

    rewriting_active = config.enable_rewrite and config.variant != BASELINE
    missed = False
    if rewriting_active:
        outcome = rewrite(
            instance.sentence, instance.compound, instance.language, resources.lexicon,
            decision.label,
        )
        missed = decision.label == IDIOMATIC and entry is None
    else:
        outcome = RewriteResult(instance.sentence, False)

    original_spec = QuerySpec(
        sentence_text=instance.sentence,
        compound=instance.compound,
        definitions=definitions,
        fewshot_examples=fewshot,
        templates=templates,
    )
    if not outcome.applied:
        return original_spec, original_spec, outcome, missed

    # After replacement the compound no longer appears in the sentence,
    # so the compound slot carries the paraphrase instead.
    rewritten_spec = replace(
        original_spec, sentence_text=outcome.text, compound=entry.paraphrase
    )
    if config.rewrite_scope == "vision":
        return rewritten_spec, original_spec, outcome, missed
    return rewritten_spec, rewritten_spec, outcome, missed


def _query_source_stream(weights: Mapping[str, float]) -> str:
    # The vision-language query is built from the vision store when the
    # vision stream participates, otherwise from the text_vl store; both
    # hold the same values for query keys (same text tower).
    return "vision" if weights["vision"] > 0.0 else "text_vl"


def _query_embeddings(
    vision_spec: QuerySpec,
    caption_spec: QuerySpec,
    stores: Mapping[str, EmbeddingStore],
    weights: Mapping[str, float],
) -> tuple[np.ndarray | None, np.ndarray | None, np.ndarray | None]:
    """Build only the query vectors that participating streams need."""
    q_vl = q_m3 = q_vl_captions = None
    if weights["vision"] > 0.0 or weights["text_vl"] > 0.0:
        source = _query_source_stream(weights)
        vl_store = stores.get(source)
        if vl_store is None:
            raise MissingEmbedding(f"{source} store", "required for query embedding")
        q_vl = build_query_embedding(vision_spec, vl_store)
        if caption_spec is not vision_spec and weights["text_vl"] > 0.0:
            q_vl_captions = build_query_embedding(caption_spec, vl_store)
    if weights["text_m3"] > 0.0:
        m3_store = stores.get("text_m3")
        if m3_store is None:
            raise MissingEmbedding("text_m3 store", "required for query embedding")
        q_m3 = build_query_embedding(caption_spec, m3_store)
    return q_vl, q_m3, q_vl_captions


# --------------------------------------------------------------------------
# Cross-lingual blending
# --------------------------------------------------------------------------

_TRANSLATION_TEMPLATE = ("{sentence}",)


def _translate_sentence(
    instance: Instance, config: PipelineConfig, resources: Resources
) -> str | None:
    if not resources.classifier_clients:
        log.info("crosslingual enabled but no classifier client; skipping %s", instance.id)
        return None
    client = resources.classifier_clients[0][0]

    def fetch() -> list[str]:
        response = client.request(
            {
                "phase": "translate",
                "language": instance.language,
                "sentence": instance.sentence,
                "target_language": "en",
            }
        )
        translation = response.get("translation")
        if not isinstance(translation, str) or not translation.strip():
            raise IdiorankError(f"no translation for instance {instance.id}")
        return [translation]

    try:
        values = resources.translation_cache.get_or_create(
            instance.language, instance.sentence, fetch
        )
    except IdiorankError as err:
        log.warning("translation failed for %s: %s", instance.id, err)
        return None
    return values[0]


# --------------------------------------------------------------------------
# Per-instance and per-dataset execution
# --------------------------------------------------------------------------


def run_instance(
    instance: Instance, config: PipelineConfig, resources: Resources
) -> PredictionRecord:
    """Execute the full pipeline for one instance."""
    started = time.perf_counter()
    try:
        decision = decide_sentence_type(instance, config, resources)
        vision_spec, caption_spec, outcome, missed = _build_specs(
            instance, config, resources, decision
        )
        weights = effective_weights(config.mode, config.fusion.weights)
        q_vl, q_m3, q_vl_captions = _query_embeddings(
            vision_spec, caption_spec, resources.stores, weights
        )
        streams = compute_streams(
            instance, q_vl, q_m3, resources.stores, config.mode,
            weights=config.fusion.weights, q_vl_captions=q_vl_captions,
        )

        if config.crosslingual_enabled(instance.language):
            translation = _translate_sentence(instance, config, resources)
            if translation is not None:
                spec = QuerySpec(
                    sentence_text=translation,
                    compound=instance.compound,
                    templates=_TRANSLATION_TEMPLATE,
                )
                tq_vl, tq_m3, _ = _query_embeddings(spec, spec, resources.stores, weights)
                translated = compute_streams(
                    instance, tq_vl, tq_m3, resources.stores, config.mode,
                    weights=config.fusion.weights,
                )
                streams = combine_crosslingual(streams, translated, config.blend)

        ranking = borda_fuse(streams, config.fusion, instance.candidates)
    except IdiorankError as err:
        raise type(err)(f"instance {instance.id}: {err}") from err
    elapsed_ms = (time.perf_counter() - started) * 1000.0
    return PredictionRecord(
        instance_id=instance.id,
        decision=decision,
        ranking=ranking,
        variant=config.variant,
        rewrite_applied=outcome.applied,
        rewrite_missed=missed,
        timing_ms=elapsed_ms,
    )


@dataclass(frozen=True)
class LanguageCoverage:
    processed: int = 0
    failed: int = 0


@dataclass(frozen=True)
class CoverageReport:
    """Per-language accounting of processed and failed instances."""

    per_language: dict[str, LanguageCoverage]
    failures: tuple[tuple[str, str, str], ...]  # (instance id, language, error)

    @property
    def processed(self) -> int:
        return sum(c.processed for c in self.per_language.values())

    @property
    def failed(self) -> int:
        return sum(c.failed for c in self.per_language.values())

    def to_tsv(self) -> str:
        lines = ["language\tprocessed\tfailed"]
        for language in sorted(self.per_language):
            cov = self.per_language[language]
            lines.append(f"{language}\t{cov.processed}\t{cov.failed}")
        lines.append(f"TOTAL\t{self.processed}\t{self.failed}")
        return "\n".join(lines) + "\n"


def run_dataset(
    dataset: Dataset, config: PipelineConfig, resources: Resources
) -> tuple[list[PredictionRecord], CoverageReport]:
    """Process every instance, isolating per-instance failures.

    In the default lenient mode a failing instance is recorded in the
    coverage report and the run continues; strict mode re-raises.
    Output order always matches input order regardless of worker count.
    """

    def work(instance: Instance):
        try:
            return instance, run_instance(instance, config, resources), None
        except IdiorankError as err:
            if config.strict:
                raise
            return instance, None, str(err)

    if config.workers == 1:
        results = [work(inst) for inst in dataset.instances]
    else:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(work, dataset.instances))

    records: list[PredictionRecord] = []
    counts: dict[str, dict[str, int]] = {}
    failures: list[tuple[str, str, str]] = []
    for instance, record, error in results:
        bucket = counts.setdefault(instance.language, {"processed": 0, "failed": 0})
        if record is not None:
            records.append(record)
            bucket["processed"] += 1
        else:
            bucket["failed"] += 1
            failures.append((instance.id, instance.language, error or "unknown error"))
            log.warning("instance %s failed: %s", instance.id, error)
    coverage = CoverageReport(
        per_language={
            lang: LanguageCoverage(c["processed"], c["failed"]) for lang, c in counts.items()
        },
        failures=tuple(failures),
    )
    if config.miss_log:
        compound_of = {inst.id: inst.compound for inst in dataset.instances}
        with open(config.miss_log, "w", encoding="utf-8", newline="\n") as fh:
            for record in records:
                if record.rewrite_missed:
                    fh.write(
                        format_miss_line(record.instance_id, compound_of[record.instance_id])
                        + "\n"
                    )
    return records, coverage


# --------------------------------------------------------------------------
# Prediction TSV
# --------------------------------------------------------------------------

_PREDICTION_COLUMNS = (
    "instance_id",
    "sentence_type",
    "confidence",
    "ranked_candidates",
    "borda_scores",
)


def write_predictions(
    records: Sequence[PredictionRecord],
    path: str | os.PathLike[str],
    timestamp: bool = True,
) -> None:
    """Write the prediction TSV; disable ``timestamp`` for byte-stable reruns."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if timestamp:
            fh.write(f"# generated_at={time.strftime('%Y-%m-%dT%H:%M:%S%z')}\n")
        fh.write("\t".join(_PREDICTION_COLUMNS) + "\n")
        for record in records:
            fh.write(
                "\t".join(
                    (
                        record.instance_id,
                        record.decision.label,
                        repr(record.decision.confidence),
                        ",".join(record.ranking.order),
                        ",".join(repr(s) for s in record.ranking.fused_scores),
                    )
                )
                + "\n"
            )


def read_predictions(path: str | os.PathLike[str]) -> list[Prediction]:
    predictions: list[Prediction] = []
    with open(path, "r", encoding="utf-8") as fh:
        header: list[str] | None = None
        for raw in fh:
            line = raw.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            cells = line.split("\t")
            if header is None:
                header = cells
                if tuple(header) != _PREDICTION_COLUMNS:
                    raise IdiorankError(f"{path}: unexpected prediction columns {header}")
                continue
            row = dict(zip(header, cells))
            predictions.append(
                Prediction(
                    instance_id=row["instance_id"],
                    sentence_type=row["sentence_type"],
                    confidence=float(row["confidence"]),
                    order=tuple(row["ranked_candidates"].split(",")),
                    scores=tuple(float(s) for s in row["borda_scores"].split(",")),
                )
            )
    if header is None:
        raise IdiorankError(f"{path}: empty prediction file")
    return predictions


# --------------------------------------------------------------------------
# Static embedding-demand enumeration
# --------------------------------------------------------------------------


def demanded_keys(
    dataset: Dataset, config: PipelineConfig, lexicon: IdiomLexicon
) -> dict[str, dict[str, str]]:
    """Every (stream, key) the pipeline may request for this dataset.

    Typing decisions happen at runtime, so both the original and the
    rewritten query variants are enumerated; the actual run requests a
    subset. Cross-lingual query keys depend on runtime translations and
    are not statically derivable.
    """
    mode = variant_mode(config.variant)
    weights = effective_weights(mode, config.fusion.weights)
    demand: dict[str, dict[str, str]] = {"vision": {}, "text_m3": {}, "text_vl": {}}
    templates = config.templates or DEFAULT_TEMPLATES
    rewriting = config.enable_rewrite and config.variant != BASELINE
    need_vl_query = weights["vision"] > 0.0 or weights["text_vl"] > 0.0

    for instance in dataset.instances:
        entry = lexicon.get(instance.language, instance.compound)
        definitions = (entry.definition,) if entry and entry.definition else ()
        fewshot = entry.fewshot if (config.few_shot and entry) else ()

        specs = [
            QuerySpec(
                sentence_text=instance.sentence,
                compound=instance.compound,
                definitions=definitions,
                fewshot_examples=fewshot,
                templates=templates,
            )
        ]
        if rewriting and entry is not None:
            outcome = rewrite(
                instance.sentence, instance.compound, instance.language, lexicon, IDIOMATIC
            )
            if outcome.applied:
                specs.append(
                    replace(specs[0], sentence_text=outcome.text, compound=entry.paraphrase)
                )

        query_keys = {}
        for spec in specs:
            for text in render_queries(spec):
                query_keys[keys.query_key(text)] = f"query for instance {instance.id}"

        if need_vl_query:
            demand[_query_source_stream(weights)].update(query_keys)
        if weights["text_m3"] > 0.0:
            demand["text_m3"].update(query_keys)

        if weights["vision"] > 0.0:
            for cid in instance.candidates:
                demand["vision"][keys.image_key(cid)] = (
                    f"instance {instance.id} candidate {cid}"
                )
        if instance.captions is not None:
            for slot in range(len(instance.candidates)):
                key = keys.caption_key(instance.id, slot)
                description = f"instance {instance.id} slot {slot}"
                if weights["text_m3"] > 0.0:
                    demand["text_m3"][key] = description
                if weights["text_vl"] > 0.0:
                    demand["text_vl"][key] = description

        if "lr" in config.typer_priority and config.enable_typer:
            demand["text_m3"][keys.feature_key(instance.sentence, instance.compound)] = (
                f"typer feature for instance {instance.id}"
            )
    return demand


@dataclass(frozen=True)
class ValidationReport:
    """validate-embeddings output: per-stream demand vs store contents."""

    requested: dict[str, int]
    missing: dict[str, tuple[tuple[str, str], ...]]  # stream -> ((key, description), ...)

    @property
    def total_requested(self) -> int:
        return sum(self.requested.values())

    @property
    def total_missing(self) -> int:
        return sum(len(v) for v in self.missing.values())


def validate_embeddings(
    dataset: Dataset,
    config: PipelineConfig,
    resources: Resources,
) -> ValidationReport:
    """Check that every key the pipeline will request exists in the stores."""
    demand = demanded_keys(dataset, config, resources.lexicon)
    requested: dict[str, int] = {}
    missing: dict[str, tuple[tuple[str, str], ...]] = {}
    for stream, wanted in demand.items():
        if not wanted:
            requested[stream] = 0
            missing[stream] = ()
            continue
        store = resources.stores.get(stream)
        requested[stream] = len(wanted)
        gaps = tuple(
            (key, description)
            for key, description in sorted(wanted.items())
            if store is None or key not in store
        )
        missing[stream] = gaps
    return ValidationReport(requested=requested, missing=missing)

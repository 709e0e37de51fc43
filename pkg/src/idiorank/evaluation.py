"""Ranking metrics, per-language reports, and the ablation sweep driver.

Top-1 accuracy asks only whether the top-ranked candidate matches the
gold top candidate; NDCG@5 credits partially correct orderings through
graded gains and a logarithmic position discount. The task never
publishes its grading, so the relevance profile is explicit
configuration and is written into every report header to keep numbers
comparable across runs.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import math
from dataclasses import dataclass, replace
from typing import Mapping, Sequence

from .dataset import Dataset
from .errors import MissingGold, NotAPermutation
from .pipeline import (
    PipelineConfig,
    Prediction,
    PredictionRecord,
    Resources,
    run_dataset,
    as_prediction,
)

EXPONENTIAL = "exponential"
LINEAR = "linear"

DEFAULT_GAINS = (4.0, 3.0, 2.0, 1.0, 0.0)


@dataclass(frozen=True)
class RelevanceProfile:
    """Graded gains assigned to gold positions 1..5."""

    gains: tuple[float, ...] = DEFAULT_GAINS
    gain_mode: str = EXPONENTIAL

    def __post_init__(self) -> None:
        if len(self.gains) != 5:
            raise ValueError("profile needs exactly 5 gains")
        if any(g < 0 for g in self.gains):
            raise ValueError("gains must be nonnegative")
        if any(a < b for a, b in zip(self.gains, self.gains[1:])):
            raise ValueError("gains must be nonincreasing")
        if not self.gains[0] > self.gains[-1]:
            raise ValueError("degenerate profile: first gain must exceed last")
        if self.gain_mode not in (EXPONENTIAL, LINEAR):
            raise ValueError(f"unknown gain mode {self.gain_mode!r}")

    def gain(self, relevance: float) -> float:
        if self.gain_mode == EXPONENTIAL:
            return 2.0**relevance - 1.0
        return relevance

    def describe(self) -> str:
        return f"gains={','.join(repr(g) for g in self.gains)};mode={self.gain_mode}"


def ndcg5(
    prediction_order: Sequence[str],
    gold_order: Sequence[str],
    profile: RelevanceProfile = RelevanceProfile(),
) -> float:
    """Normalized discounted cumulative gain over the five candidates."""
    if len(prediction_order) != 5 or len(gold_order) != 5:
        raise NotAPermutation("both orders must have exactly 5 candidates")
    if sorted(prediction_order) != sorted(gold_order) or len(set(gold_order)) != 5:
        raise NotAPermutation("orders are not permutations of the same candidates")
    relevance = {cid: profile.gains[pos] for pos, cid in enumerate(gold_order)}
    dcg = sum(
        profile.gain(relevance[cid]) / math.log2(i + 1)
        for i, cid in enumerate(prediction_order, start=1)
    )
    idcg = sum(
        profile.gain(relevance[cid]) / math.log2(i + 1)
        for i, cid in enumerate(gold_order, start=1)
    )
    return dcg / idcg


def _gold_map(gold: Dataset) -> dict[str, tuple[tuple[str, ...] | None, str | None]]:
    return {
        inst.id: (inst.gold_order, inst.gold_sentence_type) for inst in gold.instances
    }


def _as_predictions(
    predictions: Sequence[Prediction | PredictionRecord],
) -> list[Prediction]:
    return [
        as_prediction(p) if isinstance(p, PredictionRecord) else p for p in predictions
    ]


def top1(predictions: Sequence[Prediction | PredictionRecord], gold: Dataset) -> float:
    """Fraction of instances whose top-ranked candidate matches gold."""
    predictions = _as_predictions(predictions)
    if not predictions:
        raise MissingGold("no predictions to score")
    lookup = _gold_map(gold)
    hits = 0
    for pred in predictions:
        gold_order, _ = lookup.get(pred.instance_id, (None, None))
        if gold_order is None:
            raise MissingGold(f"no gold order for instance {pred.instance_id}")
        hits += pred.order[0] == gold_order[0]
    return hits / len(predictions)


def mean_ndcg5(
    predictions: Sequence[Prediction | PredictionRecord],
    gold: Dataset,
    profile: RelevanceProfile = RelevanceProfile(),
) -> float:
    predictions = _as_predictions(predictions)
    if not predictions:
        raise MissingGold("no predictions to score")
    lookup = _gold_map(gold)
    total = 0.0
    for pred in predictions:
        gold_order, _ = lookup.get(pred.instance_id, (None, None))
        if gold_order is None:
            raise MissingGold(f"no gold order for instance {pred.instance_id}")
        total += ndcg5(pred.order, gold_order, profile)
    return total / len(predictions)


def sentence_type_accuracy(
    predictions: Sequence[Prediction | PredictionRecord], gold: Dataset
) -> float:
    """Label accuracy over the instances that carry a gold sentence type."""
    predictions = _as_predictions(predictions)
    lookup = _gold_map(gold)
    matches = 0
    scored = 0
    for pred in predictions:
        _, gold_type = lookup.get(pred.instance_id, (None, None))
        if gold_type is None:
            continue
        scored += 1
        matches += pred.sentence_type == gold_type
    if scored == 0:
        raise MissingGold("no instance carries a gold sentence type")
    return matches / scored


@dataclass(frozen=True)
class LanguageMetrics:
    top1: float
    ndcg5: float
    sentence_type_accuracy: float | None
    processed: int
    failed: int


@dataclass(frozen=True)
class EvalReport:
    """Per-language metrics plus their unweighted macro average."""

    per_language: dict[str, LanguageMetrics]
    macro: LanguageMetrics
    profile: RelevanceProfile
    variant: str = "-"
    config_hash: str = "-"

    def to_tsv(self) -> str:
        header = (
            f"# config={self.config_hash} profile={self.profile.describe()}"
            f" variant={self.variant}\n"
        )
        lines = ["language\ttop1\tndcg5\tsentence_type_accuracy\tprocessed\tfailed"]

        def fmt(metrics: LanguageMetrics, label: str) -> str:
            st = "-" if metrics.sentence_type_accuracy is None else (
                f"{metrics.sentence_type_accuracy:.6f}"
            )
            return (
                f"{label}\t{metrics.top1:.6f}\t{metrics.ndcg5:.6f}\t{st}"
                f"\t{metrics.processed}\t{metrics.failed}"
            )

        for language in sorted(self.per_language):
            lines.append(fmt(self.per_language[language], language))
        lines.append(fmt(self.macro, "MACRO"))
        return header + "\n".join(lines) + "\n"


def config_digest(config: PipelineConfig) -> str:
    """Short stable digest of a run configuration for report headers."""
    blob = json.dumps(
        {
            "variant": config.variant,
            "tau": config.tau,
            "weights": dict(config.fusion.weights or {}),
            "aggregator": config.fusion.aggregator,
            "confidence_adjust": config.fusion.confidence_adjust,
            "rewrite": config.enable_rewrite,
            "typer": config.enable_typer,
            "few_shot": config.few_shot,
            "crosslingual": bool(config.crosslingual),
        },
        sort_keys=True,
    )
    return hashlib.sha1(blob.encode("utf-8")).hexdigest()[:12]


def evaluate(
    predictions: Sequence[Prediction | PredictionRecord],
    gold: Dataset,
    profile: RelevanceProfile = RelevanceProfile(),
    coverage: Mapping[str, tuple[int, int]] | None = None,
    variant: str = "-",
    config_hash: str = "-",
) -> EvalReport:
    """Group predictions by gold language and compute the report.

    ``coverage`` optionally supplies (processed, failed) counts per
    language; otherwise processed is the prediction count and failed 0.
    """
    predictions = _as_predictions(predictions)
    language_of = {inst.id: inst.language for inst in gold.instances}
    grouped: dict[str, list[Prediction]] = {}
    for pred in predictions:
        language = language_of.get(pred.instance_id)
        if language is None:
            raise MissingGold(f"prediction {pred.instance_id} not in gold dataset")
        grouped.setdefault(language, []).append(pred)

    per_language: dict[str, LanguageMetrics] = {}
    for language, preds in grouped.items():
        try:
            st_acc: float | None = sentence_type_accuracy(preds, gold)
        except MissingGold:
            st_acc = None
        processed, failed = (len(preds), 0)
        if coverage is not None and language in coverage:
            processed, failed = coverage[language]
        per_language[language] = LanguageMetrics(
            top1=top1(preds, gold),
            ndcg5=mean_ndcg5(preds, gold, profile),
            sentence_type_accuracy=st_acc,
            processed=processed,
            failed=failed,
        )

    if not per_language:
        raise MissingGold("nothing to evaluate")
    languages = sorted(per_language)
    st_values = [
        per_language[lang].sentence_type_accuracy
        for lang in languages
        if per_language[lang].sentence_type_accuracy is not None
    ]
    macro = LanguageMetrics(
        top1=sum(per_language[lang].top1 for lang in languages) / len(languages),
        ndcg5=sum(per_language[lang].ndcg5 for lang in languages) / len(languages),
        sentence_type_accuracy=(sum(st_values) / len(st_values)) if st_values else None,
        processed=sum(per_language[lang].processed for lang in languages),
        failed=sum(per_language[lang].failed for lang in languages),
    )
    return EvalReport(
        per_language=per_language,
        macro=macro,
        profile=profile,
        variant=variant,
        config_hash=config_hash,
    )


# --------------------------------------------------------------------------
# Ablation sweeps
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class AblationAxes:
    """Cartesian sweep axes; empty axes keep the base config's value."""

    taus: tuple[float, ...] = ()
    weight_sets: tuple[Mapping[str, float], ...] = ()
    aggregators: tuple[str, ...] = ()
    rewrite_toggles: tuple[bool, ...] = ()
    typer_toggles: tuple[bool, ...] = ()


@dataclass(frozen=True)
class AblationCell:
    params: dict[str, object]
    report: EvalReport | None
    error: str | None = None


def ablate(
    dataset: Dataset,
    base_config: PipelineConfig,
    axes: AblationAxes,
    resources: Resources,
    profile: RelevanceProfile = RelevanceProfile(),
) -> list[AblationCell]:
    """Run one pipeline per cell of the sweep grid and evaluate it.

    Cell failures are recorded, not raised, so a sweep always yields a
    complete table.
    """
    taus = axes.taus or (base_config.tau,)
    weight_sets = axes.weight_sets or (None,)
    aggregators = axes.aggregators or (base_config.fusion.aggregator,)
    rewrites = axes.rewrite_toggles or (base_config.enable_rewrite,)
    typers = axes.typer_toggles or (base_config.enable_typer,)

    cells: list[AblationCell] = []
    for tau, weights, aggregator, do_rewrite, do_typer in itertools.product(
        taus, weight_sets, aggregators, rewrites, typers
    ):
        fusion = replace(
            base_config.fusion,
            aggregator=aggregator,
            weights=dict(weights) if weights is not None else base_config.fusion.weights,
        )
        config = replace(
            base_config,
            tau=tau,
            fusion=fusion,
            enable_rewrite=do_rewrite,
            enable_typer=do_typer,
        )
        params: dict[str, object] = {
            "tau": tau,
            "weights": dict(weights) if weights is not None else "base",
            "aggregator": aggregator,
            "rewrite": do_rewrite,
            "typer": do_typer,
        }
        try:
            records, coverage = run_dataset(dataset, config, resources)
            report = evaluate(
                [as_prediction(r) for r in records],
                dataset,
                profile,
                coverage={
                    lang: (cov.processed, cov.failed)
                    for lang, cov in coverage.per_language.items()
                },
                variant=config.variant,
                config_hash=config_digest(config),
            )
            cells.append(AblationCell(params=params, report=report))
        except Exception as err:  # noqa: BLE001 - cell isolation is the contract
            cells.append(AblationCell(params=params, report=None, error=str(err)))
    return cells


def ablation_table(cells: Sequence[AblationCell]) -> str:
    """Render sweep results as a TSV table, one row per cell."""
    lines = ["tau\tweights\taggregator\trewrite\ttyper\ttop1\tndcg5\tstatus"]
    for cell in cells:
        weights = cell.params["weights"]
        weights_repr = (
            "base"
            if weights == "base"
            else ",".join(f"{k}={v}" for k, v in sorted(weights.items()))  # type: ignore[union-attr]
        )
        if cell.report is None:
            metrics = "-\t-\tFAILED: " + (cell.error or "?")
        else:
            metrics = (
                f"{cell.report.macro.top1:.6f}\t{cell.report.macro.ndcg5:.6f}\tok"
            )
        lines.append(
            f"{cell.params['tau']}\t{weights_repr}\t{cell.params['aggregator']}"
            f"\t{cell.params['rewrite']}\t{cell.params['typer']}\t{metrics}"
        )
    return "\n".join(lines) + "\n"

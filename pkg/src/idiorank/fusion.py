"""Rank aggregation: weighted Borda fusion over score streams.

Scores never enter fusion directly; each stream is first converted to
rank positions, which makes the result invariant under any strictly
monotone per-stream transformation. A candidate at rank ``p`` of ``m``
earns ``m - p`` Borda points (top gets ``m - 1``, bottom 0); points are
weighted per stream and summed. Reciprocal-rank scoring
(``1 / (k0 + p)``) is available as an alternative aggregator so the two
schemes can be compared in ablations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

from .errors import AllZeroWeights, NonFiniteScore, StreamMismatch
from .similarity import IMAGE_TEXT, TEXT_ONLY, DEFAULT_MODE_WEIGHTS, ScoreStream

BORDA = "borda"
RECIPROCAL_RANK = "rrf"

TIE_BY_CANDIDATE_ORDER = "by_candidate_order"


@dataclass(frozen=True)
class FusionConfig:
    """Stream weights and fusion behavior.

    ``weights`` overrides per-stream weights by name; streams absent
    from the map keep the weight they carry. Weights are renormalized to
    sum to 1 after any confidence adjustment.
    """

    weights: Mapping[str, float] | None = None
    mode: str = IMAGE_TEXT
    confidence_adjust: bool = False
    confidence_alpha: float = 1.0
    tie_break: str = TIE_BY_CANDIDATE_ORDER
    aggregator: str = BORDA
    rrf_k0: float = 0.0

    def __post_init__(self) -> None:
        if self.mode not in (IMAGE_TEXT, TEXT_ONLY):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.aggregator not in (BORDA, RECIPROCAL_RANK):
            raise ValueError(f"unknown aggregator {self.aggregator!r}")
        if self.confidence_alpha < 0:
            raise ValueError("confidence_alpha must be nonnegative")
        if self.tie_break != TIE_BY_CANDIDATE_ORDER:
            raise ValueError(f"unknown tie_break {self.tie_break!r}")

    @staticmethod
    def for_mode(mode: str, **overrides) -> "FusionConfig":
        return FusionConfig(weights=dict(DEFAULT_MODE_WEIGHTS[mode]), mode=mode, **overrides)


@dataclass(frozen=True)
class RankingResult:
    """Fused ranking plus per-stream diagnostics.

    ``order`` lists candidate ids best-first; ``fused_scores`` is aligned
    with ``order``. ``per_stream_ranks`` maps each stream to the rank
    position (1 = best) of every candidate *slot* in input order.
    """

    order: tuple[str, ...]
    fused_scores: tuple[float, ...]
    per_stream_ranks: dict[str, tuple[int, ...]] = field(default_factory=dict)
    adjusted_weights: dict[str, float] = field(default_factory=dict)

    @property
    def borda_scores(self) -> tuple[float, ...]:
        return self.fused_scores


def ranks_from_scores(scores: Sequence[float]) -> tuple[int, ...]:
    """Rank positions (1 = best) by descending score.

    Equal scores resolve by ascending candidate index, so the output is
    always a permutation of 1..m.
    """
    if not all(math.isfinite(s) for s in scores):
        raise NonFiniteScore(f"scores contain non-finite values: {scores}")
    by_score = sorted(range(len(scores)), key=lambda i: (-scores[i], i))
    ranks = [0] * len(scores)
    for position, index in enumerate(by_score, start=1):
        ranks[index] = position
    return tuple(ranks)


def _minmax_normalize(scores: Sequence[float]) -> list[float]:
    lo, hi = min(scores), max(scores)
    if hi == lo:
        return [0.0] * len(scores)
    return [(s - lo) / (hi - lo) for s in scores]


def _base_weights(streams: Sequence[ScoreStream], config: FusionConfig) -> dict[str, float]:
    weights = {}
    for stream in streams:
        if config.weights is not None and stream.name in config.weights:
            weights[stream.name] = float(config.weights[stream.name])
        else:
            weights[stream.name] = stream.weight
    return weights


def adjust_weights_by_confidence(
    streams: Sequence[ScoreStream], config: FusionConfig
) -> dict[str, float]:
    """Scale each stream's weight by its top-two confidence gap.

    The gap is measured on min-max normalized scores, so it lives in
    [0, 1] regardless of the stream's scale; a constant stream has gap 0.
    The result is renormalized to sum to 1.
    """
    base = _base_weights(streams, config)
    adjusted: dict[str, float] = {}
    for stream in streams:
        normalized = sorted(_minmax_normalize(stream.scores), reverse=True)
        gap = normalized[0] - normalized[1] if len(normalized) > 1 else 0.0
        adjusted[stream.name] = base[stream.name] * (1.0 + config.confidence_alpha * gap)
    total = 0.0
    for stream in streams:
        total += adjusted[stream.name]
    if total <= 0:
        raise AllZeroWeights("confidence adjustment left no positive weight")
    return {name: w / total for name, w in adjusted.items()}


def _rank_points(rank: int, m: int, config: FusionConfig) -> float:
    if config.aggregator == BORDA:
        return float(m - rank)
    return 1.0 / (config.rrf_k0 + rank)


def borda_fuse(
    streams: Sequence[ScoreStream],
    config: FusionConfig,
    candidates: Sequence[str] | None = None,
) -> RankingResult:
    """Fuse score streams into one ranking.

    Zero-weight streams contribute exactly nothing (their term is a true
    float zero), which is what makes a text-only run identical to an
    image+text run whose vision weight is forced to 0. Ties in the fused
    score resolve by ascending candidate index.
    """
    if not streams:
        raise AllZeroWeights("no streams to fuse")
    m = len(streams[0].scores)
    if any(len(s.scores) != m for s in streams):
        raise StreamMismatch("streams have differing candidate counts")
    if candidates is None:
        candidates = tuple(str(i) for i in range(m))
    if len(candidates) != m:
        raise StreamMismatch(f"{len(candidates)} candidates for {m}-slot streams")

    if config.confidence_adjust:
        weights = adjust_weights_by_confidence(streams, config)
    else:
        base = _base_weights(streams, config)
        total = 0.0
        for stream in streams:
            total += base[stream.name]
        if total <= 0:
            raise AllZeroWeights("all stream weights are zero")
        weights = {name: w / total for name, w in base.items()}
    if all(weights[s.name] == 0.0 for s in streams):
        raise AllZeroWeights("all stream weights are zero")

    per_stream_ranks = {s.name: ranks_from_scores(s.scores) for s in streams}
    fused = [0.0] * m
    for stream in streams:
        w = weights[stream.name]
        ranks = per_stream_ranks[stream.name]
        for slot in range(m):
            fused[slot] += w * _rank_points(ranks[slot], m, config)

    by_slot = sorted(range(m), key=lambda i: (-fused[i], i))
    order = tuple(candidates[i] for i in by_slot)
    ordered_scores = tuple(fused[i] for i in by_slot)
    return RankingResult(
        order=order,
        fused_scores=ordered_scores,
        per_stream_ranks=per_stream_ranks,
        adjusted_weights=weights,
    )


def combine_crosslingual(
    original: Sequence[ScoreStream],
    translated: Sequence[ScoreStream],
    blend: float = 0.5,
) -> list[ScoreStream]:
    """Blend per-stream scores computed on the original sentence with
    scores computed on its translation.

    Each side is min-max normalized independently before blending, so
    streams with different raw scales mix on equal footing. ``blend`` is
    the weight of the original side.
    """
    if not 0.0 <= blend <= 1.0:
        raise ValueError(f"blend must be in [0,1], got {blend}")
    if [s.name for s in original] != [s.name for s in translated]:
        raise StreamMismatch(
            f"stream names differ: {[s.name for s in original]} vs {[s.name for s in translated]}"
        )
    combined: list[ScoreStream] = []
    for orig, trans in zip(original, translated):
        if len(orig.scores) != len(trans.scores):
            raise StreamMismatch(f"stream {orig.name!r}: candidate counts differ")
        norm_orig = _minmax_normalize(orig.scores)
        norm_trans = _minmax_normalize(trans.scores)
        blended = tuple(
            blend * o + (1.0 - blend) * t for o, t in zip(norm_orig, norm_trans)
        )
        combined.append(replace(orig, scores=blended))
    return combined

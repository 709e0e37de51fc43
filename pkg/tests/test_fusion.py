"""Fusion: rank conversion, weighted Borda, confidence gaps, cross-lingual blend.

The brute-force aggregator here is written against the definition alone
(count-better ranking, per-stream points, weighted sum) and shares no
code with the implementation under test.
"""

import random

import pytest
from hypothesis import given, settings, strategies as st

from idiorank.errors import AllZeroWeights, NonFiniteScore, StreamMismatch
from idiorank.fusion import (
    FusionConfig,
    adjust_weights_by_confidence,
    borda_fuse,
    combine_crosslingual,
    ranks_from_scores,
)
from idiorank.similarity import ScoreStream


# --- independent oracle -----------------------------------------------------


def oracle_ranks(scores):
    """Rank = 1 + number of strictly better scores + earlier equal scores."""
    ranks = []
    for i, score in enumerate(scores):
        better = sum(1 for s in scores if s > score)
        earlier_ties = sum(1 for j in range(i) if scores[j] == score)
        ranks.append(1 + better + earlier_ties)
    return ranks


def oracle_borda(stream_scores, weights):
    """Weighted Borda fusion computed directly from the definition."""
    m = len(stream_scores[0])
    total_w = 0.0
    for w in weights:
        total_w += w
    fused = [0.0] * m
    for scores, weight in zip(stream_scores, weights):
        ranks = oracle_ranks(scores)
        for slot in range(m):
            fused[slot] += (weight / total_w) * (m - ranks[slot])
    order = sorted(range(m), key=lambda i: (-fused[i], i))
    return fused, order


# --- ranks_from_scores -------------------------------------------------------


class TestRanksFromScores:
    def test_spec_example_with_tie(self):
        assert ranks_from_scores([0.9, 0.1, 0.5, 0.5, 0.2]) == (1, 5, 2, 3, 4)

    def test_strictly_decreasing(self):
        assert ranks_from_scores([5, 4, 3, 2, 1]) == (1, 2, 3, 4, 5)

    def test_all_equal_resolved_by_index(self):
        assert ranks_from_scores([1.0] * 5) == (1, 2, 3, 4, 5)

    def test_non_finite_rejected(self):
        with pytest.raises(NonFiniteScore):
            ranks_from_scores([1.0, float("nan"), 0.0])

    def test_matches_oracle_on_random_tables(self):
        rng = random.Random(21)
        for _ in range(500):
            scores = [rng.choice([rng.uniform(-1, 1), 0.5]) for _ in range(5)]
            assert list(ranks_from_scores(scores)) == oracle_ranks(scores)


# --- borda_fuse ---------------------------------------------------------------


def _streams(tables, weights):
    names = ["vision", "text_m3", "text_vl"][: len(tables)]
    return [
        ScoreStream(name, tuple(scores), weight)
        for name, scores, weight in zip(names, tables, weights)
    ]


class TestBordaFuse:
    def test_single_stream_identity(self):
        scores = (0.3, 0.9, 0.1, 0.5, 0.4)
        result = borda_fuse(
            [ScoreStream("vision", scores, 1.0)],
            FusionConfig(weights={"vision": 1.0}),
            candidates=("a", "b", "c", "d", "e"),
        )
        ranks = ranks_from_scores(scores)
        expected_order = tuple(
            c for _, c in sorted(zip(ranks, ("a", "b", "c", "d", "e")))
        )
        assert result.order == expected_order

    def test_three_candidate_worked_example(self):
        # Ranks A=[1,2,3], B=[3,1,2]; weights 0.6/0.4; m=3.
        # c1 = .6*2 + .4*0 = 1.2, c2 = .6*1 + .4*2 = 1.4, c3 = .4*1 = 0.4.
        a = ScoreStream("vision", (3.0, 2.0, 1.0), 0.6)
        b = ScoreStream("text_m3", (1.0, 3.0, 2.0), 0.4)
        result = borda_fuse(
            [a, b], FusionConfig(weights={"vision": 0.6, "text_m3": 0.4}),
            candidates=("c1", "c2", "c3"),
        )
        assert result.order == ("c2", "c1", "c3")
        assert result.fused_scores == pytest.approx((1.4, 1.2, 0.4), abs=1e-12)

    def test_zero_weight_stream_contributes_nothing(self):
        main = ScoreStream("text_m3", (0.1, 0.9, 0.5, 0.3, 0.7), 0.7)
        noise = ScoreStream("vision", (0.99, 0.01, 0.5, 0.2, 0.8), 0.0)
        with_noise = borda_fuse([noise, main], FusionConfig())
        without = borda_fuse(
            [ScoreStream("vision", (0.0,) * 5, 0.0), main], FusionConfig()
        )
        assert with_noise.order == without.order
        assert with_noise.fused_scores == without.fused_scores

    def test_all_zero_weights_rejected(self):
        with pytest.raises(AllZeroWeights):
            borda_fuse([ScoreStream("vision", (1.0, 2.0, 3.0), 0.0)], FusionConfig())

    def test_matches_brute_force_oracle(self):
        rng = random.Random(77)
        for _ in range(2000):
            tables = [[rng.uniform(-1, 1) for _ in range(5)] for _ in range(3)]
            weights = [rng.uniform(0, 1) for _ in range(3)]
            if sum(weights) == 0:
                continue
            streams = _streams(tables, weights)
            result = borda_fuse(streams, FusionConfig(), candidates=("a", "b", "c", "d", "e"))
            fused, order = oracle_borda(tables, weights)
            assert [("a", "b", "c", "d", "e")[i] for i in order] == list(result.order)
            by_candidate = dict(zip(result.order, result.fused_scores))
            for slot, cid in enumerate(("a", "b", "c", "d", "e")):
                assert by_candidate[cid] == pytest.approx(fused[slot], abs=1e-12)

    def test_monotone_transform_invariance(self):
        rng = random.Random(5)
        for _ in range(200):
            tables = [[rng.uniform(-1, 1) for _ in range(5)] for _ in range(3)]
            weights = [rng.uniform(0.05, 1) for _ in range(3)]
            base = borda_fuse(_streams(tables, weights), FusionConfig())
            transformed_tables = []
            for scores in tables:
                a = rng.uniform(0.1, 3)
                b = rng.uniform(0.0, 2)
                c = rng.uniform(-1, 1)
                transformed_tables.append([a * s**3 + b * s + c for s in scores])
            transformed = borda_fuse(_streams(transformed_tables, weights), FusionConfig())
            assert transformed.order == base.order
            assert transformed.fused_scores == base.fused_scores

    def test_candidate_permutation_equivariance(self):
        rng = random.Random(31)
        candidates = ("a", "b", "c", "d", "e")
        for _ in range(200):
            tables = [[rng.uniform(-1, 1) for _ in range(5)] for _ in range(2)]
            weights = [0.6, 0.4]
            perm = list(range(5))
            rng.shuffle(perm)
            base = borda_fuse(
                _streams(tables, weights), FusionConfig(), candidates=candidates
            )
            permuted_tables = [[scores[p] for p in perm] for scores in tables]
            permuted_candidates = tuple(candidates[p] for p in perm)
            permuted = borda_fuse(
                _streams(permuted_tables, weights), FusionConfig(),
                candidates=permuted_candidates,
            )
            # Ties are broken in each frame's own index order, so compare
            # only when fused scores are tie-free.
            if len(set(base.fused_scores)) == 5:
                assert permuted.order == base.order

    def test_rrf_aggregator_selectable(self):
        scores = (0.9, 0.5, 0.1)
        config = FusionConfig(weights={"vision": 1.0}, aggregator="rrf", rrf_k0=0.0)
        result = borda_fuse([ScoreStream("vision", scores, 1.0)], config, ("x", "y", "z"))
        assert result.order == ("x", "y", "z")
        assert result.fused_scores == pytest.approx((1.0, 0.5, 1 / 3), abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(
    st.lists(
        st.lists(st.floats(-1, 1, allow_nan=False), min_size=5, max_size=5),
        min_size=1,
        max_size=4,
    ),
    st.integers(0, 2**32 - 1),
)
def test_borda_agrees_with_oracle_property(tables, seed):
    rng = random.Random(seed)
    weights = [rng.uniform(0.01, 1.0) for _ in tables]
    streams = [
        ScoreStream(f"s{i}", tuple(scores), 1.0) for i, scores in enumerate(tables)
    ]
    config = FusionConfig(weights={f"s{i}": w for i, w in enumerate(weights)})
    result = borda_fuse(streams, config)
    fused, order = oracle_borda(tables, weights)
    assert [str(i) for i in order] == list(result.order)


# --- confidence adjustment ----------------------------------------------------


class TestConfidenceAdjust:
    def test_alpha_zero_keeps_weights(self):
        streams = _streams([[1, 2, 3, 4, 5], [5, 4, 3, 2, 1]], [0.5, 0.5])
        config = FusionConfig(
            weights={"vision": 0.5, "text_m3": 0.5}, confidence_adjust=True,
            confidence_alpha=0.0,
        )
        adjusted = adjust_weights_by_confidence(streams, config)
        assert adjusted["vision"] == pytest.approx(0.5, abs=1e-12)
        assert adjusted["text_m3"] == pytest.approx(0.5, abs=1e-12)

    def test_gap_one_vs_constant_worked_example(self):
        # Constant stream: gap 0 -> w' = .5; two-point stream with max gap:
        # normalized scores {1, 0,...} -> gap 1 -> w' = .5*(1+1) = 1.
        # Renormalized: 1/3 and 2/3.
        constant = ScoreStream("vision", (0.4,) * 5, 0.5)
        confident = ScoreStream("text_m3", (9.0, 1.0, 1.0, 1.0, 1.0), 0.5)
        config = FusionConfig(
            weights={"vision": 0.5, "text_m3": 0.5},
            confidence_adjust=True, confidence_alpha=1.0,
        )
        adjusted = adjust_weights_by_confidence([constant, confident], config)
        assert adjusted["vision"] == pytest.approx(1 / 3, abs=1e-12)
        assert adjusted["text_m3"] == pytest.approx(2 / 3, abs=1e-12)

    def test_equal_gaps_cancel(self):
        streams = _streams(
            [[1, 0, 0.2, 0.2, 0.2], [10, 0, 2, 2, 2], [3, 0, 0.6, 0.6, 0.6]],
            [0.6, 0.3, 0.1],
        )
        config = FusionConfig(
            weights={"vision": 0.6, "text_m3": 0.3, "text_vl": 0.1},
            confidence_adjust=True, confidence_alpha=2.0,
        )
        adjusted = adjust_weights_by_confidence(streams, config)
        assert adjusted["vision"] == pytest.approx(0.6, abs=1e-12)
        assert adjusted["text_m3"] == pytest.approx(0.3, abs=1e-12)
        assert adjusted["text_vl"] == pytest.approx(0.1, abs=1e-12)

    def test_output_is_normalized_and_nonnegative(self):
        rng = random.Random(17)
        for _ in range(200):
            tables = [[rng.uniform(-1, 1) for _ in range(5)] for _ in range(3)]
            weights = [rng.uniform(0.01, 1) for _ in range(3)]
            config = FusionConfig(confidence_adjust=True, confidence_alpha=rng.uniform(0, 3))
            adjusted = adjust_weights_by_confidence(_streams(tables, weights), config)
            assert sum(adjusted.values()) == pytest.approx(1.0, abs=1e-12)
            assert all(w >= 0 for w in adjusted.values())


# --- cross-lingual blending ----------------------------------------------------


class TestCombineCrosslingual:
    def _pair(self):
        original = _streams([[0.2, 0.8, 0.5, 0.1, 0.9], [1, 2, 3, 4, 5]], [0.6, 0.4])
        translated = _streams([[0.9, 0.1, 0.4, 0.6, 0.2], [5, 3, 1, 2, 4]], [0.6, 0.4])
        return original, translated

    def test_blend_one_is_normalized_original(self):
        original, translated = self._pair()
        combined = combine_crosslingual(original, translated, blend=1.0)
        for orig, out in zip(original, combined):
            lo, hi = min(orig.scores), max(orig.scores)
            expected = tuple((s - lo) / (hi - lo) for s in orig.scores)
            assert out.scores == pytest.approx(expected, abs=1e-12)

    def test_blend_zero_is_normalized_translated(self):
        original, translated = self._pair()
        combined = combine_crosslingual(original, translated, blend=0.0)
        for trans, out in zip(translated, combined):
            lo, hi = min(trans.scores), max(trans.scores)
            expected = tuple((s - lo) / (hi - lo) for s in trans.scores)
            assert out.scores == pytest.approx(expected, abs=1e-12)

    def test_identical_inputs_fixed_point(self):
        original, _ = self._pair()
        for blend in (0.0, 0.3, 0.5, 1.0):
            combined = combine_crosslingual(original, original, blend=blend)
            for orig, out in zip(original, combined):
                lo, hi = min(orig.scores), max(orig.scores)
                expected = tuple((s - lo) / (hi - lo) for s in orig.scores)
                assert out.scores == pytest.approx(expected, abs=1e-12)

    def test_mismatched_names_rejected(self):
        original, translated = self._pair()
        with pytest.raises(StreamMismatch):
            combine_crosslingual(original, list(reversed(translated)))

    def test_weights_preserved(self):
        original, translated = self._pair()
        combined = combine_crosslingual(original, translated, 0.5)
        assert [s.weight for s in combined] == [s.weight for s in original]

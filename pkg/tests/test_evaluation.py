"""Metrics: NDCG@5 against an independent oracle, Top-1, macro averaging."""

import itertools
import math

import pytest

from idiorank.dataset import Dataset, Instance
from idiorank.errors import MissingGold, NotAPermutation
from idiorank.evaluation import (
    EXPONENTIAL,
    LINEAR,
    LanguageMetrics,
    RelevanceProfile,
    evaluate,
    mean_ndcg5,
    ndcg5,
    sentence_type_accuracy,
    top1,
)
from idiorank.pipeline import Prediction

CANDS = ("a", "b", "c", "d", "e")


def oracle_ndcg(pred, gold, gains, exponential):
    """Straight-from-the-definition NDCG, no shared code with ndcg5."""
    rel = {cid: gains[i] for i, cid in enumerate(gold)}

    def gain(r):
        return 2.0**r - 1.0 if exponential else r

    def dcg(order):
        total = 0.0
        for position, cid in enumerate(order, start=1):
            total += gain(rel[cid]) / (math.log(position + 1) / math.log(2))
        return total

    return dcg(pred) / dcg(gold)


class TestNdcg5:
    def test_gold_scores_exactly_one(self):
        assert ndcg5(CANDS, CANDS) == 1.0

    def test_reversed_gold_oracle_value(self):
        value = ndcg5(tuple(reversed(CANDS)), CANDS)
        oracle = oracle_ndcg(tuple(reversed(CANDS)), CANDS, (4, 3, 2, 1, 0), True)
        assert value == pytest.approx(oracle, abs=1e-12)
        assert value == pytest.approx(0.5128, abs=1e-4)

    @pytest.mark.parametrize("mode", [EXPONENTIAL, LINEAR])
    def test_all_120_permutations_match_oracle(self, mode):
        profile = RelevanceProfile(gain_mode=mode)
        for perm in itertools.permutations(CANDS):
            expected = oracle_ndcg(perm, CANDS, profile.gains, mode == EXPONENTIAL)
            assert ndcg5(perm, CANDS, profile) == pytest.approx(expected, abs=1e-12)

    def test_range_and_uniqueness_of_top(self):
        profile = RelevanceProfile()
        values = {perm: ndcg5(perm, CANDS, profile) for perm in itertools.permutations(CANDS)}
        assert all(0.0 <= v <= 1.0 for v in values.values())
        top = [perm for perm, v in values.items() if v == 1.0]
        assert top == [CANDS]  # distinct gains: only gold scores 1.0

    def test_early_swap_hurts_more_than_late_swap(self):
        late = list(CANDS)
        late[3], late[4] = late[4], late[3]
        early = list(CANDS)
        early[0], early[1] = early[1], early[0]
        assert ndcg5(tuple(late), CANDS) > ndcg5(tuple(early), CANDS)

    def test_promoting_higher_gain_never_decreases(self):
        profile = RelevanceProfile()
        rel = {cid: profile.gains[i] for i, cid in enumerate(CANDS)}
        for perm in itertools.permutations(CANDS):
            base = ndcg5(perm, CANDS, profile)
            for i in range(4):
                if rel[perm[i + 1]] > rel[perm[i]]:
                    swapped = list(perm)
                    swapped[i], swapped[i + 1] = swapped[i + 1], swapped[i]
                    assert ndcg5(tuple(swapped), CANDS, profile) >= base

    def test_relabeling_equivariance(self):
        mapping = dict(zip(CANDS, ("v", "w", "x", "y", "z")))
        pred = ("c", "a", "e", "b", "d")
        relabeled_pred = tuple(mapping[c] for c in pred)
        relabeled_gold = tuple(mapping[c] for c in CANDS)
        assert ndcg5(pred, CANDS) == ndcg5(relabeled_pred, relabeled_gold)

    def test_not_a_permutation_rejected(self):
        with pytest.raises(NotAPermutation):
            ndcg5(("a", "b", "c", "d", "d"), CANDS)
        with pytest.raises(NotAPermutation):
            ndcg5(("a", "b", "c", "d", "x"), CANDS)
        with pytest.raises(NotAPermutation):
            ndcg5(("a", "b", "c", "d"), ("a", "b", "c", "d"))


def test_profile_validation():
    with pytest.raises(ValueError):
        RelevanceProfile(gains=(1, 2, 3, 4, 5))  # increasing
    with pytest.raises(ValueError):
        RelevanceProfile(gains=(1, 1, 1, 1, 1))  # degenerate
    with pytest.raises(ValueError):
        RelevanceProfile(gains=(4, 3, 2, 1, -1))
    with pytest.raises(ValueError):
        RelevanceProfile(gain_mode="cubic")


def _instance(i, language="en", gold_order=CANDS, gold_type="idiomatic"):
    cands = tuple(f"{c}{i}" for c in CANDS)
    order = tuple(f"{c}{i}" for c in gold_order)
    return Instance(
        id=f"inst{i}",
        language=language,
        sentence=f"sentence {i}",
        compound="big fish",
        candidates=cands,
        gold_sentence_type=gold_type,
        gold_order=order,
    )


def _prediction(inst, order=None, label="idiomatic"):
    return Prediction(
        instance_id=inst.id,
        sentence_type=label,
        confidence=1.0,
        order=order or inst.gold_order,
        scores=(4.0, 3.0, 2.0, 1.0, 0.0),
    )


def _dataset(instances):
    counts = {}
    for inst in instances:
        counts[inst.language] = counts.get(inst.language, 0) + 1
    return Dataset(tuple(instances), counts)


class TestTop1:
    def test_all_match(self):
        instances = [_instance(i) for i in range(4)]
        preds = [_prediction(inst) for inst in instances]
        assert top1(preds, _dataset(instances)) == 1.0

    def test_none_match(self):
        instances = [_instance(i) for i in range(4)]
        preds = [
            _prediction(inst, order=tuple(reversed(inst.gold_order)))
            for inst in instances
        ]
        assert top1(preds, _dataset(instances)) == 0.0

    def test_three_of_five(self):
        instances = [_instance(i) for i in range(5)]
        preds = []
        for i, inst in enumerate(instances):
            if i < 3:
                preds.append(_prediction(inst))
            else:
                preds.append(_prediction(inst, order=tuple(reversed(inst.gold_order))))
        assert top1(preds, _dataset(instances)) == pytest.approx(0.6)

    def test_missing_gold_rejected(self):
        inst = Instance(
            id="nogold", language="en", sentence="s", compound="c", candidates=CANDS
        )
        with pytest.raises(MissingGold):
            top1([_prediction(_instance(0), order=CANDS)], _dataset([inst]))


class TestSentenceTypeAccuracy:
    def test_all_correct(self):
        instances = [_instance(i) for i in range(3)]
        preds = [_prediction(inst, label="idiomatic") for inst in instances]
        assert sentence_type_accuracy(preds, _dataset(instances)) == 1.0

    def test_half_correct(self):
        instances = [
            _instance(0, gold_type="idiomatic"),
            _instance(1, gold_type="literal"),
        ]
        preds = [_prediction(inst, label="idiomatic") for inst in instances]
        assert sentence_type_accuracy(preds, _dataset(instances)) == 0.5

    def test_empty_gold_subset_rejected(self):
        instances = [_instance(0, gold_type=None)]
        preds = [_prediction(instances[0])]
        with pytest.raises(MissingGold):
            sentence_type_accuracy(preds, _dataset(instances))


class TestEvaluateReport:
    def test_macro_is_unweighted_language_mean(self):
        # de: 2 instances both right; fr: 2 instances both wrong at rank 1.
        de = [_instance(i, language="de") for i in (0, 1)]
        fr = [_instance(i, language="fr") for i in (2, 3)]
        swapped = ("b", "a", "c", "d", "e")
        preds = [_prediction(inst) for inst in de] + [
            _prediction(inst, order=tuple(f"{c}{i}" for c in swapped))
            for i, inst in zip((2, 3), fr)
        ]
        report = evaluate(preds, _dataset(de + fr))
        assert report.per_language["de"].top1 == 1.0
        assert report.per_language["fr"].top1 == 0.0
        assert report.macro.top1 == pytest.approx(0.5)
        expected_ndcg = (
            report.per_language["de"].ndcg5 + report.per_language["fr"].ndcg5
        ) / 2
        assert report.macro.ndcg5 == pytest.approx(expected_ndcg, abs=1e-12)

    def test_tsv_contains_header_and_macro(self):
        instances = [_instance(0)]
        report = evaluate([_prediction(instances[0])], _dataset(instances),
                          variant="improved", config_hash="abc123")
        text = report.to_tsv()
        assert text.startswith("# config=abc123 profile=")
        assert "variant=improved" in text.splitlines()[0]
        assert text.splitlines()[1].startswith("language\t")
        assert any(line.startswith("MACRO\t") for line in text.splitlines())

    def test_unknown_prediction_rejected(self):
        instances = [_instance(0)]
        stray = Prediction("ghost", "literal", 1.0, CANDS, (0,) * 5)
        with pytest.raises(MissingGold):
            evaluate([stray], _dataset(instances))

    def test_mean_ndcg_consistency(self):
        instances = [_instance(i) for i in range(3)]
        preds = [_prediction(inst) for inst in instances]
        assert mean_ndcg5(preds, _dataset(instances)) == pytest.approx(1.0)


def test_language_metrics_is_plain_record():
    metrics = LanguageMetrics(0.5, 0.7, None, 10, 0)
    assert metrics.top1 == 0.5 and metrics.failed == 0

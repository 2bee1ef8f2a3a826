import numpy as np
import pytest

from gtseg.metrics.segmentation import (
    MetricsReport,
    aggregate_folds,
    auc,
    confusion,
    report,
    reports_frame,
)


def _pairwise_auc(scores, labels):
    pos, neg = scores[labels == 1], scores[labels == 0]
    diff = pos[:, None] - neg[None, :]
    return float(np.mean((diff > 0) + 0.5 * (diff == 0)))


def test_confusion_counts():
    pred = np.array([1, 1, 1, 1, 0, 0, 0, 0, 0, 0])
    truth = np.array([1, 1, 1, 0, 1, 0, 0, 0, 0, 0])
    assert confusion(pred, truth) == (3, 1, 5, 1)


def test_report_on_a_hand_worked_case():
    rep = report((3, 1, 5, 1))
    assert rep.acc == pytest.approx(0.8)
    assert rep.se == pytest.approx(0.75)
    assert rep.sp == pytest.approx(5 / 6)
    assert rep.js == pytest.approx(0.6)
    assert rep.dice == pytest.approx(0.75)
    assert rep.f1 == rep.dice
    assert rep.auc is None and rep.flags == ()
    assert rep.total == 10


def test_dice_and_jaccard_are_related():
    rng = np.random.default_rng(0)
    for _ in range(50):
        tp, fp, tn, fn = rng.integers(0, 50, size=4) + 1
        rep = report((tp, fp, tn, fn))
        assert rep.dice == pytest.approx(2 * rep.js / (1 + rep.js), rel=1e-12)


def test_empty_denominators_are_flagged():
    rep = report((0, 0, 10, 0))
    assert rep.dice == 1.0 and rep.js == 1.0 and rep.se == 1.0
    assert rep.flags == ("dice", "js", "se")
    assert rep.as_dict()["flags"] == "dice;js;se"
    assert report((4, 0, 0, 0)).flags == ("sp",)


def test_report_rejects_bad_counts():
    with pytest.raises(ValueError):
        report((0, 0, 0, 0))
    with pytest.raises(ValueError):
        report((1, -1, 0, 0))
    with pytest.raises(ValueError):
        report((1, 0, 1, 0), probs=np.array([0.5, 0.5]))


def test_auc_on_small_cases():
    assert auc([0.5, 0.5], [0, 1]) == pytest.approx(0.5)
    assert auc([0.1, 0.4, 0.35, 0.8], [0, 0, 1, 1]) == pytest.approx(0.75)
    assert auc([0.9, 0.1], [1, 0]) == pytest.approx(1.0)
    assert auc([0.9, 0.1], [0, 1]) == pytest.approx(0.0)


def test_auc_matches_pairwise_definition():
    rng = np.random.default_rng(1)
    for _ in range(100):
        n = int(rng.integers(4, 60))
        labels = rng.integers(0, 2, size=n)
        labels[:2] = [0, 1]
        scores = np.round(rng.uniform(size=n), 1)
        assert auc(scores, labels) == pytest.approx(_pairwise_auc(scores, labels), abs=1e-12)


def test_auc_of_inverted_scores_is_the_complement():
    rng = np.random.default_rng(6)
    probs = np.round(rng.uniform(size=(16, 16)), 2)
    truth = (rng.uniform(size=(16, 16)) < 0.3).astype(np.uint8)
    assert auc(1.0 - probs, truth) == pytest.approx(1.0 - auc(probs, truth), abs=1e-12)


def test_report_ignores_pixel_order():
    rng = np.random.default_rng(7)
    probs = np.round(rng.uniform(size=(12, 12)), 2)
    truth = (rng.uniform(size=(12, 12)) < 0.4).astype(np.uint8)
    order = rng.permutation(probs.size)
    shuffled_probs, shuffled_truth = probs.ravel()[order], truth.ravel()[order]

    base = report(confusion(probs >= 0.5, truth), probs, truth)
    shuffled = report(confusion(shuffled_probs >= 0.5, shuffled_truth), shuffled_probs, shuffled_truth)
    assert (shuffled.tp, shuffled.fp, shuffled.tn, shuffled.fn) == (base.tp, base.fp, base.tn, base.fn)
    for name in ("acc", "se", "sp", "js", "dice", "f1", "auc"):
        assert getattr(shuffled, name) == pytest.approx(getattr(base, name), abs=1e-12)


def test_auc_needs_both_classes():
    with pytest.raises(ValueError):
        auc([0.2, 0.3], [1, 1])
    with pytest.raises(ValueError):
        auc([0.2, 0.3, 0.4], [0, 1])


def test_report_with_probabilities_sets_auc():
    truth = np.array([[0, 1], [1, 0]])
    probs = np.array([[0.2, 0.9], [0.6, 0.4]])
    rep = report(confusion(probs >= 0.5, truth), probs, truth)
    assert rep.auc == pytest.approx(1.0)
    assert rep.dice == 1.0


def test_confusion_rejects_non_binary_and_mismatched_inputs():
    with pytest.raises(ValueError):
        confusion(np.array([0, 2]), np.array([0, 1]))
    with pytest.raises(ValueError):
        confusion(np.zeros((2, 2)), np.zeros((2, 3)))


def test_aggregate_uses_population_std():
    reports = [report((tp, 10 - tp, 10, 0)) for tp in (2, 4, 6)]
    stats = aggregate_folds(reports)
    dice = np.array([r.dice for r in reports])
    assert stats["dice"]["mean"] == pytest.approx(dice.mean())
    assert stats["dice"]["std"] == pytest.approx(dice.std())
    assert "auc" not in stats


def test_reports_frame_appends_summary_row():
    reports = [report((3, 1, 5, 1)), report((4, 0, 6, 0))]
    frame = reports_frame(["0", "1"], reports)
    assert list(frame["fold"]) == ["0", "1", "mean±std"]
    assert frame.iloc[-1]["dice"] == f"{0.875:.6f}±{0.125:.6f}"
    with pytest.raises(ValueError):
        reports_frame(["0"], reports)


def test_metrics_report_is_immutable():
    rep = report((1, 0, 1, 0))
    assert isinstance(rep, MetricsReport)
    with pytest.raises(AttributeError):
        rep.dice = 0.0

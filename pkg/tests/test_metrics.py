from fractions import Fraction

import numpy as np
import pytest

from shotfit.corpus import Corpus, Review
from shotfit.errors import LabelError, ShotfitError
from shotfit.metrics import (
    EvalReport, confusion_matrix, dialect_breakdown, evaluate_labels, f1_report,
    format_dialect_table, format_duration,
)


def oracle_scores(gold, pred, classes):
    """Exact per-class F1 by direct counting over example pairs."""
    f1 = {}
    for c in classes:
        tp = sum(g == c and p == c for g, p in zip(gold, pred))
        fp = sum(g != c and p == c for g, p in zip(gold, pred))
        fn = sum(g == c and p != c for g, p in zip(gold, pred))
        f1[c] = Fraction(2 * tp, 2 * tp + fp + fn) if tp else Fraction(0)
    support = {c: sum(g == c for g in gold) for c in classes}
    present = [c for c in classes if support[c]]
    macro = sum(f1[c] for c in present) / len(present)
    weighted = sum(f1[c] * support[c] for c in present) / sum(support.values())
    return f1, macro, weighted


def test_hand_case():
    cm = confusion_matrix("AABB", "ABBB", "AB")
    assert cm.counts.tolist() == [[1, 1], [0, 2]]
    r = f1_report(cm)
    assert r.per_class["A"]["f1"] == pytest.approx(2 / 3, abs=1e-12)
    assert r.per_class["B"]["f1"] == pytest.approx(4 / 5, abs=1e-12)
    assert r.macro_f1 == pytest.approx(11 / 15, abs=1e-12)


def test_matches_direct_counting_oracle():
    rng = np.random.default_rng(0)
    classes = ["x", "y", "z"]
    for _ in range(100):
        n = int(rng.integers(1, 60))
        gold = list(rng.choice(classes, n))
        pred = list(rng.choice(classes, n))
        r = evaluate_labels(gold, pred, classes)
        f1, macro, weighted = oracle_scores(gold, pred, classes)
        for c in classes:
            assert abs(r.per_class[c]["f1"] - float(f1[c])) <= 1e-12
        assert abs(r.macro_f1 - float(macro)) <= 1e-12
        assert abs(r.weighted_f1 - float(weighted)) <= 1e-12


def test_invariant_under_example_and_class_permutation():
    rng = np.random.default_rng(1)
    gold = list(rng.choice(list("abc"), 40))
    pred = list(rng.choice(list("abc"), 40))
    base = evaluate_labels(gold, pred, "abc")
    perm = rng.permutation(40)
    shuffled = evaluate_labels([gold[i] for i in perm], [pred[i] for i in perm], "abc")
    reordered = evaluate_labels(gold, pred, "cab")
    for other in (shuffled, reordered):
        assert other.macro_f1 == pytest.approx(base.macro_f1, abs=1e-15)
        assert other.weighted_f1 == pytest.approx(base.weighted_f1, abs=1e-15)


def test_simple_cases():
    perfect = evaluate_labels("abcab", "abcab", "abc")
    assert perfect.macro_f1 == 1.0 and all(s["f1"] == 1 for s in perfect.per_class.values())
    assert evaluate_labels("aabb", "bbaa", "ab").macro_f1 == 0.0
    cm = confusion_matrix(["a"], ["b"], "ab")
    assert cm.counts.sum() == 1 and np.count_nonzero(cm.counts) == 1
    diag = confusion_matrix("aab", "aab", "ab").counts
    assert diag.tolist() == [[2, 0], [0, 1]]


def test_zero_support_class_excluded_from_averages():
    r = evaluate_labels("aab", "aac", "abc")
    assert r.per_class["c"] == {"precision": 0.0, "recall": 0.0, "f1": 0.0}
    assert r.macro_f1 == pytest.approx((1 + 0) / 2)


def test_confusion_errors():
    with pytest.raises(LabelError):
        confusion_matrix("ab", "a", "ab")
    with pytest.raises(LabelError):
        confusion_matrix("az", "aa", "ab")
    with pytest.raises(LabelError):
        confusion_matrix("", "", "ab")


def _corpus(spec):
    return Corpus(tuple(Review(f"r{i}", "t", d, g) for i, (d, g, _) in enumerate(spec)))


# 12 examples over two dialects; per-dialect F1 counted by hand below
TWELVE = [
    ("darija", "pos", "pos"), ("darija", "pos", "pos"), ("darija", "pos", "neg"),
    ("darija", "neg", "neg"), ("darija", "neg", "neg"), ("darija", "neu", "pos"),
    ("saudi", "pos", "pos"), ("saudi", "neg", "neu"), ("saudi", "neg", "neg"),
    ("saudi", "neu", "neu"), ("saudi", "neu", "neu"), ("saudi", "neu", "pos"),
]


def test_twelve_example_two_dialect_fixture():
    report = dialect_breakdown(_corpus(TWELVE), [p for *_, p in TWELVE], ("pos", "neg", "neu"))
    darija, saudi = report.per_dialect["darija"], report.per_dialect["saudi"]
    # darija: pos tp2 fp1 fn1 -> 2/3; neg tp2 fp1 fn0 -> 4/5; neu tp0 -> 0
    assert darija.per_class["pos"]["f1"] == pytest.approx(2 / 3)
    assert darija.per_class["neg"]["f1"] == pytest.approx(4 / 5)
    assert darija.per_class["neu"]["f1"] == 0.0
    assert darija.macro_f1 == pytest.approx((2 / 3 + 4 / 5) / 3)
    # saudi: pos tp1 fp1 fn0 -> 2/3; neg tp1 fp0 fn1 -> 2/3; neu tp2 fp1 fn1 -> 2/3
    for lab in ("pos", "neg", "neu"):
        assert saudi.per_class[lab]["f1"] == pytest.approx(2 / 3)
    assert darija.n_examples + saudi.n_examples == report.n_examples == 12


def test_symmetric_dialects_match_overall():
    half = [("darija", "a", "a"), ("darija", "a", "b"), ("darija", "b", "b")]
    spec = half + [("saudi", g, p) for _, g, p in half]
    report = dialect_breakdown(_corpus(spec), [p for *_, p in spec], "ab")
    for child in report.per_dialect.values():
        assert child.per_class == report.per_class


def test_single_dialect_child_equals_parent():
    spec = [("saudi", "a", "a"), ("saudi", "b", "a")]
    report = dialect_breakdown(_corpus(spec), ["a", "a"], "ab", duration_seconds=3.0)
    (child,) = report.per_dialect.values()
    assert child.to_dict() == dict(report.to_dict(), per_dialect={})


def test_missing_prediction_named():
    with pytest.raises(ShotfitError, match="r1"):
        dialect_breakdown(_corpus([("saudi", "a", "a"), ("saudi", "b", "b")]), ["a", None], "ab")


def test_report_round_trip_and_table():
    report = dialect_breakdown(_corpus(TWELVE), [p for *_, p in TWELVE], ("pos", "neg", "neu"), 8172.4)
    assert EvalReport.from_dict(report.to_dict()).to_dict() == report.to_dict()
    table = format_dialect_table(report)
    assert table.splitlines()[0].split() == ["Dialect", "Class", "F1", "%"]
    assert len(table.splitlines()) == 1 + 6 + 3
    assert "02:16:12" in table


def test_format_duration():
    assert format_duration(0) == "00:00:00"
    assert format_duration(8172) == "02:16:12"
    assert format_duration(59.6) == "00:01:00"

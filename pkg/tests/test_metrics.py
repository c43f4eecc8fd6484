import pytest
from hypothesis import given, strategies as st

from autoaim.geometry import BBox
from autoaim.metrics import (EvalCounts, LabeledBox, average_precision, count, match_frame,
                             mean_ap, precision, recall)


@pytest.mark.parametrize("tp,fp,want", [(9, 1, 0.9), (4, 0, 1.0), (0, 5, 0.0), (0, 0, None)])
def test_precision(tp, fp, want):
    assert precision(EvalCounts(TP=tp, FP=fp)) == want


@pytest.mark.parametrize("tp,fn,want", [(9, 3, 0.75), (2, 0, 1.0), (0, 1, 0.0), (0, 0, None)])
def test_recall(tp, fn, want):
    assert recall(EvalCounts(TP=tp, FN=fn)) == want


def box(x, y, s=10):
    return BBox(x, y, x + s, y + s)


def test_perfect_detector_and_empty_detector():
    truths = [LabeledBox(0, 0, box(0, 0)), LabeledBox(0, 3, box(50, 50)),
              LabeledBox(1, 3, box(10, 10))]
    preds = [LabeledBox(t.frame, t.class_id, t.bbox, 0.9) for t in truths]
    assert mean_ap(preds, truths).mean_ap == 1.0
    assert mean_ap([], truths).mean_ap == 0.0


def test_hand_enumerated_pr_curve():
    truths = [LabeledBox(0, 0, box(0, 0)), LabeledBox(0, 0, box(50, 50))]
    preds = [LabeledBox(0, 0, box(0, 0), 0.9), LabeledBox(0, 0, box(200, 200), 0.8),
             LabeledBox(0, 0, box(50, 50), 0.7)]
    assert mean_ap(preds, truths).mean_ap == pytest.approx(0.5 + (2 / 3) * 0.5, abs=1e-12)
    assert average_precision([0.9, 0.8, 0.7], [True, False, True], 2) == pytest.approx(5 / 6)


def test_classes_without_truth_are_excluded():
    truths = [LabeledBox(0, 1, box(0, 0))]
    preds = [LabeledBox(0, 1, box(0, 0), 0.5), LabeledBox(0, 4, box(30, 30), 0.5)]
    res = mean_ap(preds, truths)
    assert res.excluded == [4] and res.per_class == {1: 1.0}


def test_ap_needs_truth():
    with pytest.raises(ValueError):
        average_precision([0.5], [True], 0)


def test_greedy_matching_by_confidence():
    t = [LabeledBox(0, 0, box(0, 0))]
    p = [LabeledBox(0, 0, box(1, 0), 0.3), LabeledBox(0, 0, box(2, 0), 0.9)]
    assert match_frame(p, t) == [False, True]


def test_wrong_class_or_frame_never_matches():
    t = [LabeledBox(0, 0, box(0, 0))]
    p = [LabeledBox(0, 1, box(0, 0), 0.9), LabeledBox(1, 0, box(0, 0), 0.9)]
    c = count(p, t)
    assert c[0].TP == 0 and c[0].FN == 1 and c[0].FP == 1 and c[1].FP == 1


lb = st.builds(lambda f, c, x, y, s, conf: LabeledBox(float(f), c, box(x, y, s), conf),
               st.integers(0, 2), st.integers(0, 2), st.floats(0, 100), st.floats(0, 100),
               st.floats(5, 30), st.floats(0, 1))


@given(st.lists(lb, max_size=8), st.lists(lb, max_size=8), st.sampled_from([0.3, 0.5, 0.75]))
def test_count_conservation(preds, truths, thr):
    counts = count(preds, truths, thr)
    for cls in {b.class_id for b in preds + truths}:
        c = counts[cls]
        assert c.TP + c.FN == sum(t.class_id == cls for t in truths)
        assert c.TP + c.FP == sum(p.class_id == cls for p in preds)


@given(st.lists(lb, max_size=8), st.lists(lb, min_size=1, max_size=8))
def test_map_in_unit_interval(preds, truths):
    m = mean_ap(preds, truths).mean_ap
    assert 0.0 <= m <= 1.0

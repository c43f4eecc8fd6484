"""Detector scoring: precision, recall and all-points-interpolated mAP."""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .geometry import BBox, iou


@dataclass
class EvalCounts:
    TP: int = 0
    FP: int = 0
    FN: int = 0
    iou_threshold: float = 0.5

    def __add__(self, other: "EvalCounts") -> "EvalCounts":
        return EvalCounts(self.TP + other.TP, self.FP + other.FP, self.FN + other.FN,
                          self.iou_threshold)


def precision(c: EvalCounts) -> float | None:
    """TP / (TP + FP); ``None`` when nothing was predicted."""
    n = c.TP + c.FP
    return None if n == 0 else c.TP / n


def recall(c: EvalCounts) -> float | None:
    """TP / (TP + FN); ``None`` when there is no ground truth."""
    n = c.TP + c.FN
    return None if n == 0 else c.TP / n


@dataclass(frozen=True)
class LabeledBox:
    """A box on one frame; ``confidence`` is ignored for ground truth."""

    frame: float
    class_id: int
    bbox: BBox
    confidence: float = 1.0


def match_frame(preds: Sequence[LabeledBox], truths: Sequence[LabeledBox],
                iou_threshold: float = 0.5) -> list[bool]:
    """Greedy matching by descending confidence; returns a TP flag per prediction.

    Each prediction takes the unmatched truth of highest IoU, provided the IoU
    reaches the threshold.
    """
    order = sorted(range(len(preds)), key=lambda i: -preds[i].confidence)
    used = [False] * len(truths)
    flags = [False] * len(preds)
    for i in order:
        best, best_j = -1.0, -1
        for j, t in enumerate(truths):
            if used[j]:
                continue
            o = iou(preds[i].bbox, t.bbox)
            if o >= iou_threshold and o > best:
                best, best_j = o, j
        if best_j >= 0:
            used[best_j] = True
            flags[i] = True
    return flags


def _group(boxes: Iterable[LabeledBox]):
    g = defaultdict(list)
    for b in boxes:
        g[(b.class_id, b.frame)].append(b)
    return g


def count(preds: Iterable[LabeledBox], truths: Iterable[LabeledBox],
          iou_threshold: float = 0.5) -> dict[int, EvalCounts]:
    """Per-class TP/FP/FN over all frames."""
    gp, gt = _group(preds), _group(truths)
    out: dict[int, EvalCounts] = {}
    for key in set(gp) | set(gt):
        cls = key[0]
        p, t = gp.get(key, []), gt.get(key, [])
        flags = match_frame(p, t, iou_threshold)
        tp = sum(flags)
        c = out.setdefault(cls, EvalCounts(iou_threshold=iou_threshold))
        c.TP += tp
        c.FP += len(p) - tp
        c.FN += len(t) - tp
    return out


def average_precision(confidences: Sequence[float], tp_flags: Sequence[bool], n_truth: int) -> float:
    """Area under the precision/recall curve with the precision envelope."""
    if n_truth == 0:
        raise ValueError("AP undefined without ground truth")
    if len(confidences) == 0:
        return 0.0
    order = np.argsort(-np.asarray(confidences, float), kind="stable")
    tp = np.asarray(tp_flags, float)[order]
    ctp = np.cumsum(tp)
    cfp = np.cumsum(1.0 - tp)
    rec = ctp / n_truth
    prec = ctp / (ctp + cfp)
    mrec = np.concatenate([[0.0], rec])
    mpre = np.concatenate([[0.0], prec])
    mpre = np.maximum.accumulate(mpre[::-1])[::-1]
    return float(np.sum((mrec[1:] - mrec[:-1]) * mpre[1:]))


@dataclass
class MapResult:
    mean_ap: float | None
    per_class: dict[int, float]
    excluded: list[int] = field(default_factory=list)


def mean_ap(preds: Iterable[LabeledBox], truths: Iterable[LabeledBox],
            iou_threshold: float = 0.5) -> MapResult:
    """Mean over classes with ground truth of the all-points AP.

    Classes that only appear in predictions are excluded and listed.
    """
    preds, truths = list(preds), list(truths)
    gp, gt = _group(preds), _group(truths)
    conf = defaultdict(list)
    flags = defaultdict(list)
    n_truth = defaultdict(int)
    for t in truths:
        n_truth[t.class_id] += 1
    for key in set(gp) | set(gt):
        p = gp.get(key, [])
        f = match_frame(p, gt.get(key, []), iou_threshold)
        conf[key[0]].extend(b.confidence for b in p)
        flags[key[0]].extend(f)
    per_class = {c: average_precision(conf[c], flags[c], n) for c, n in sorted(n_truth.items())}
    excluded = sorted(c for c in conf if c not in n_truth)
    m = float(np.mean(list(per_class.values()))) if per_class else None
    return MapResult(m, per_class, excluded)

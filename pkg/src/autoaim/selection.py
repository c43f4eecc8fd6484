"""Weighted choice of the armor plate to engage, and its predicted aim point."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .association import Track
from .estimation import MeasurementHistory, kalman_at_filter
from .geometry import ARMOR_CLASSES


@dataclass
class SelectionConfig:
    K_dis: float = 0.7
    K_area: float = 0.3
    middle_x: float = 320.0
    middle_y: float = 240.0
    hit_bonus: float = 0.2
    hit_window: float = 2.0

    def __post_init__(self):
        if self.K_dis + self.K_area <= 0:
            raise ValueError("K_dis + K_area must be positive")
        if not (self.middle_x > 0 and self.middle_y > 0):
            raise ValueError("image center must be positive")

    @classmethod
    def for_image(cls, width: float, height: float, **kw) -> "SelectionConfig":
        return cls(middle_x=width / 2, middle_y=height / 2, **kw)


@dataclass
class SelectedTarget:
    track_id: int
    x_ret: float
    y_ret: float
    w_ret: float
    h_ret: float
    weight: float
    x_pred: float | None = None
    y_pred: float | None = None


def targetable(tracks: Sequence[Track]) -> list[Track]:
    return [t for t in tracks if t.class_id in ARMOR_CLASSES]


def select(candidates: Sequence[Track], cfg: SelectionConfig, t: float | None = None,
           centers: Sequence[tuple[float, float]] | None = None) -> SelectedTarget | None:
    """Pick the minimum-weight candidate.

    weight = K_dis * dis / max_dis + K_area * (1 - area / max_area), minus
    ``hit_bonus`` for tracks struck within the last ``hit_window`` seconds
    (only when ``t`` is given).  Ties keep the first candidate.  ``centers``
    overrides each candidate's pixel center (defaults to the track estimate).
    """
    if not candidates:
        return None
    if centers is None:
        centers = [c.center for c in candidates]
    rows = []
    max_area = 0.0
    max_dis = 0.0
    for trk, (cx, cy) in zip(candidates, centers):
        x1 = cx - cfg.middle_x
        y1 = cfg.middle_y - cy
        dis = math.hypot(x1, y1)
        area = trk.w * trk.h
        max_area = max(max_area, area)
        max_dis = max(max_dis, dis)
        rows.append((trk, x1, y1, dis, area))

    best = None
    min_weight = math.inf
    for trk, x1, y1, dis, area in rows:
        n_dis = dis / max_dis if max_dis > 0 else 0.0
        n_area = 1.0 - area / max_area if max_area > 0 else 0.0
        weight = cfg.K_dis * n_dis + cfg.K_area * n_area
        if t is not None and trk.hit_recently(t, cfg.hit_window):
            weight -= cfg.hit_bonus
        if weight < min_weight:
            min_weight = weight
            best = SelectedTarget(trk.track_id, x1 / cfg.middle_x, y1 / cfg.middle_y,
                                  trk.w, trk.h, weight)
    return best


def predict_aim(sel: SelectedTarget, hx: MeasurementHistory, hy: MeasurementHistory,
                dt: float, lead: float | None = None) -> tuple[float, float]:
    """Append the selection to the histories and filter them.

    An empty history is seeded with three copies of the current sample.  The
    estimate is carried ``lead`` seconds ahead (one pipeline period by default).
    """
    if len(hx) == 0 and len(hy) == 0:
        for _ in range(2):
            hx.append(sel.x_ret)
            hy.append(sel.y_ret)
    hx.append(sel.x_ret)
    hy.append(sel.y_ret)
    x_pred, y_pred = kalman_at_filter(hx, hy, dt, lead=dt if lead is None else lead)
    sel.x_pred, sel.y_pred = x_pred, y_pred
    return x_pred, y_pred

import math

import pytest
from hypothesis import assume, given, strategies as st

from autoaim.association import Track
from autoaim.estimation import KalmanFilter1D, MeasurementHistory
from autoaim.selection import SelectedTarget, SelectionConfig, predict_aim, select, targetable


def trk(tid, cx, cy, w, h, cls=1):
    return Track(tid, cls, KalmanFilter1D(0.02, x0=cx), KalmanFilter1D(0.02, x0=cy), w, h)


CFG = SelectionConfig()


def test_single_candidate_selected():
    s = select([trk(7, 10, 470, 5, 5)], CFG)
    assert s.track_id == 7
    assert s.x_ret == pytest.approx(-310 / 320) and s.y_ret == pytest.approx(-230 / 240)


def test_weighted_example():
    a = trk(1, 420, 240, 20, 20)     # dist 100, area 400
    b = trk(2, 520, 240, 40, 20)     # dist 200, area 800
    s = select([a, b], CFG)
    assert s.track_id == 1
    assert s.weight == pytest.approx(0.5)
    s = select([b, a], CFG)
    assert s.track_id == 1
    # B alone against A: B's weight is 0.7 * 1.0 + 0.3 * 0
    only_b = select([b], SelectionConfig(K_dis=0.7, K_area=0.3))
    assert only_b.weight == pytest.approx(0.7)


def test_tie_keeps_first():
    s = select([trk(1, 400, 200, 10, 10), trk(2, 400, 200, 10, 10)], CFG)
    assert s.track_id == 1


def test_all_centered_is_not_degenerate():
    s = select([trk(1, 320, 240, 10, 10), trk(2, 320, 240, 20, 10)], CFG)
    assert s.track_id == 2 and s.weight == 0.0


def test_recent_hit_gets_priority():
    a = trk(1, 400, 240, 20, 20)
    b = trk(2, 420, 240, 20, 20)
    b.record_hit(1.0)
    assert select([a, b], CFG, t=1.5).track_id == 2
    assert select([a, b], CFG, t=3.5).track_id == 1      # outside the 2 s window
    assert select([a, b], CFG).track_id == 1             # no clock, no bonus


def test_targetable_filters_non_armor():
    ts = [trk(1, 0, 0, 1, 1, cls=0), trk(2, 0, 0, 1, 1, cls=5), trk(3, 0, 0, 1, 1, cls=9)]
    assert [t.track_id for t in targetable(ts)] == [1]


def test_config_rejects_degenerate_values():
    with pytest.raises(ValueError):
        SelectionConfig(K_dis=0, K_area=0)
    with pytest.raises(ValueError):
        SelectionConfig(middle_x=0)


cand = st.tuples(st.floats(0, 640), st.floats(0, 480), st.floats(1, 100), st.floats(1, 100))


@given(st.lists(cand, min_size=1, max_size=6), st.floats(0.1, 10))
def test_selection_invariant_under_area_scaling(cs, k):
    base = [trk(i, x, y, w, h) for i, (x, y, w, h) in enumerate(cs)]
    scaled = [trk(i, x, y, w * k, h) for i, (x, y, w, h) in enumerate(cs)]
    a, b = select(base, CFG), select(scaled, CFG)
    weights = sorted(_weights(base))
    assume(len(weights) < 2 or weights[1] - weights[0] > 1e-9)
    assert a.track_id == b.track_id


@given(st.lists(cand, min_size=1, max_size=6), st.floats(0.1, 3))
def test_selection_invariant_under_distance_scaling(cs, k):
    base = [trk(i, x, y, w, h) for i, (x, y, w, h) in enumerate(cs)]
    scaled = [trk(i, 320 + (x - 320) * k, 240 + (y - 240) * k, w, h)
              for i, (x, y, w, h) in enumerate(cs)]
    weights = sorted(_weights(base))
    assume(len(weights) < 2 or weights[1] - weights[0] > 1e-9)
    assert select(base, CFG).track_id == select(scaled, CFG).track_id


def _weights(ts, cfg=CFG):
    """Reference weights, computed directly from the definition."""
    dis = [math.hypot(c.center[0] - cfg.middle_x, c.center[1] - cfg.middle_y) for c in ts]
    area = [c.w * c.h for c in ts]
    md, ma = max(dis), max(area)
    return [cfg.K_dis * (d / md if md > 0 else 0.0) + cfg.K_area * (1 - a / ma)
            for d, a in zip(dis, area)]


def test_weights_match_reference():
    ts = [trk(1, 400, 200, 10, 20), trk(2, 100, 50, 30, 30), trk(3, 330, 250, 5, 5)]
    s = select(ts, CFG)
    w = _weights(ts)
    assert s.weight == pytest.approx(min(w))
    assert s.track_id == ts[w.index(min(w))].track_id


@given(st.lists(cand, min_size=1, max_size=6), st.floats(0, 0.5))
def test_weight_bounds(cs, bonus):
    cfg = SelectionConfig(hit_bonus=bonus)
    ts = [trk(i, x, y, w, h) for i, (x, y, w, h) in enumerate(cs)]
    for t in ts[::2]:
        t.record_hit(0.0)
    s = select(ts, cfg, t=0.5)
    assert -bonus - 1e-12 <= s.weight <= cfg.K_dis + cfg.K_area + 1e-12
    assert abs(s.x_ret) <= 1 + 1e-9 and abs(s.y_ret) <= 1 + 1e-9


@given(st.lists(cand, min_size=1, max_size=5))
def test_closest_and_largest_always_wins(cs):
    ts = [trk(i, x, y, w, h) for i, (x, y, w, h) in enumerate(cs)]
    best = trk(99, 321, 240, 200, 200)
    assert select(ts + [best], CFG).track_id == 99


@given(st.lists(cand, min_size=3, max_size=6))
def test_removing_unselected_candidate_keeps_choice(cs):
    ts = [trk(i, x, y, w, h) for i, (x, y, w, h) in enumerate(cs)]
    w = _weights(ts)
    assume(sorted(w)[1] - sorted(w)[0] > 1e-9)
    chosen = select(ts, CFG).track_id
    dis = [math.hypot(t.center[0] - 320, t.center[1] - 240) for t in ts]
    area = [t.w * t.h for t in ts]
    for k, t in enumerate(ts):
        if t.track_id == chosen:
            continue
        rest = ts[:k] + ts[k + 1:]
        rd, ra = dis[:k] + dis[k + 1:], area[:k] + area[k + 1:]
        if max(rd) == max(dis) and max(ra) == max(area):
            assert select(rest, CFG).track_id == chosen


def _sel(x, y):
    return SelectedTarget(1, x, y, 10, 10, 0.0)


def test_predict_stationary_history():
    hx, hy = MeasurementHistory(30, [0.2] * 5), MeasurementHistory(30, [-0.1] * 5)
    x, y = predict_aim(_sel(0.2, -0.1), hx, hy, 0.02)
    assert x == pytest.approx(0.2, abs=1e-5) and y == pytest.approx(-0.1, abs=1e-5)


def test_predict_leads_linear_drift():
    hx = MeasurementHistory(30, [0.0, 0.1, 0.2])
    hy = MeasurementHistory(30, [0.0, 0.0, 0.0])
    x, _ = predict_aim(_sel(0.3, 0.0), hx, hy, 0.1)
    assert x >= 0.3


def test_predict_bootstrap_from_empty_history():
    hx, hy = MeasurementHistory(), MeasurementHistory()
    s = _sel(0.4, 0.25)
    x, y = predict_aim(s, hx, hy, 0.02)
    assert len(hx) == 3 and list(hx) == [0.4] * 3
    assert x == pytest.approx(0.4, abs=1e-5) and y == pytest.approx(0.25, abs=1e-5)
    assert (s.x_pred, s.y_pred) == (x, y)

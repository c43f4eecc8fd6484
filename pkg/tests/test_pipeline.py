import math

import pytest

from autoaim.config import PipelineConfig
from autoaim.geometry import BBox, Detection
from autoaim.pipeline import AimPipeline


def armor(t, cx=400.0, cy=200.0, w=40.0, h=16.0, cls=1):
    return Detection(t, cls, BBox.from_center(cx, cy, w, h))


def feed(pipe, n, **kw):
    out = None
    for k in range(n):
        out = pipe.step([armor(0.02 * k, **kw)], 0.02 * k, 0.02)
    return out


def test_no_target_until_confirmed():
    pipe = AimPipeline()
    assert pipe.step([armor(0.0)], 0.0, 0.02).selected is None
    assert pipe.step([armor(0.02)], 0.02, 0.02).selected is None
    out = pipe.step([armor(0.04)], 0.04, 0.02)
    assert out.selected is not None and out.selected.track_id == 1


def test_non_armor_is_never_selected():
    pipe = AimPipeline()
    out = feed(pipe, 6, cls=5)
    assert out.selected is None and out.command.d_yaw == 0.0


def test_range_and_pitch_compensation():
    pipe = AimPipeline()
    out = feed(pipe, 4, h=32.0)
    assert out.distance_cm == pytest.approx(60.0)          # 320 px focal * 6 cm / 32 px
    drop = pipe.drop_model.predict(60.0)
    assert out.pitch_comp == pytest.approx(math.atan(drop / 320.0))


def test_stationary_prediction_matches_offset():
    pipe = AimPipeline()
    out = feed(pipe, 10)
    assert out.selected.x_pred == pytest.approx(80 / 320, abs=1e-4)
    assert out.selected.y_pred == pytest.approx(40 / 240, abs=1e-4)


def test_prediction_disabled_uses_raw_offset():
    cfg = PipelineConfig()
    cfg.prediction = False
    pipe = AimPipeline(cfg)
    out = feed(pipe, 4)
    assert out.selected.x_pred == pytest.approx(0.25)
    assert len(pipe.hx) == 0


def test_losing_the_target_resets_controller_state():
    pipe = AimPipeline()
    feed(pipe, 5)
    assert pipe.controllers.yaw.primed and len(pipe.hx) > 0
    out = pipe.step([], 0.2, 0.02)
    assert out.selected is None
    assert not pipe.controllers.yaw.primed and len(pipe.hx) == 0


def test_moving_target_prediction_leads():
    pipe = AimPipeline()
    out = None
    for k in range(15):
        out = pipe.step([armor(0.02 * k, cx=300 + 4 * k)], 0.02 * k, 0.02)
    raw = out.selected.x_ret
    assert out.selected.x_pred > raw

"""Detections in, gimbal commands out: one object wiring every stage together."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

from . import ballistics
from .association import Tracker, TrackerConfig, TrackerReport
from .ballistics import DropModel, ExtrapolationWarning
from .config import PipelineConfig
from .control import AxisPair, GimbalCommand, PidFfController, aim_to_command, design_lowpass, identity_fir
from .estimation import MeasurementHistory, kalman_at_filter
from .geometry import ARMOR_CLASSES, CameraModel, Detection, GeometryError, estimate_distance
from .selection import SelectedTarget, SelectionConfig, select


@dataclass
class StepOutput:
    report: TrackerReport
    selected: SelectedTarget | None
    command: GimbalCommand
    pitch_comp: float = 0.0
    distance_cm: float | None = None
    aim_yaw: float | None = None      # absolute predicted target angles, rad
    aim_pitch: float | None = None


def default_drop_model(cfg: PipelineConfig) -> DropModel:
    b = cfg.ballistics
    if b.data:
        samples = ballistics.read_drop_csv(b.data)
    else:
        samples = ballistics.synthetic_drops(seed=b.synthetic_seed)
    return ballistics.fit(samples, b.model)


class AimPipeline:
    """Track, select, predict, compensate and control, one frame per ``step``.

    Target positions are filtered as absolute gimbal angles: each normalized
    image offset is combined with the IMU pose recorded at capture time.
    """

    def __init__(self, cfg: PipelineConfig | None = None, drop_model: DropModel | None = None):
        cfg = (cfg or PipelineConfig()).validate()
        self.cfg = cfg
        c = cfg.camera
        self.cam = CameraModel(c.width, c.height, c.fov_h, c.mount_offset_forward, c.mount_offset_up)
        t = cfg.tracking
        self.tracker = Tracker(TrackerConfig(
            dt=cfg.estimation.dt, lam=t.lam, iou_gate=t.iou_gate, max_age=t.max_age,
            n_init=t.n_init, std_acc=t.std_acc, std_meas=t.std_meas, init_vel_var=t.init_vel_var,
            reacquire_after=t.reacquire_after, reacquire_radius=t.reacquire_radius,
            image_size=(float(c.width), float(c.height))))
        s = cfg.selection
        self.sel_cfg = SelectionConfig.for_image(c.width, c.height, K_dis=s.K_dis, K_area=s.K_area,
                                                 hit_bonus=s.hit_bonus, hit_window=s.hit_window)
        self.drop_model = drop_model if drop_model is not None else default_drop_model(cfg)
        k = cfg.control
        mk = lambda: PidFfController(k.Kp, k.Ki, k.Kd, k.Kf, k.rate_limit, k.enhancement_threshold)
        self.controllers = AxisPair(mk(), mk())
        mkf = (lambda: identity_fir()) if k.fir_identity else (lambda: design_lowpass(k.fir_order, k.fir_cutoff))
        self.fir_x, self.fir_y = mkf(), mkf()
        n = cfg.estimation.history
        self.hx, self.hy = MeasurementHistory(n), MeasurementHistory(n)
        self.current: int | None = None

    def _idle(self) -> None:
        self.controllers.yaw.reset()
        self.controllers.pitch.reset()
        self.fir_x.reset()
        self.fir_y.reset()
        self.hx.clear()
        self.hy.clear()
        self.current = None

    def _compensation(self, class_id: int, h_px: float) -> tuple[float | None, float]:
        H_r = self.cfg.ballistics.armor_height_cm.get(class_id)
        if H_r is None:
            return None, 0.0
        try:
            dist = estimate_distance(self.cam, h_px, H_r)
        except GeometryError:
            return None, 0.0
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ExtrapolationWarning)
            drop = ballistics.predict_drop(self.drop_model, dist)
        return dist, ballistics.drop_to_pitch(self.cam, drop)

    def step(self, detections: Sequence[Detection], t: float, dt: float,
             capture_pose: tuple[float, float] = (0.0, 0.0),
             pose: tuple[float, float] = (0.0, 0.0)) -> StepOutput:
        """Advance one frame.

        ``capture_pose`` is the (yaw, pitch) of the gimbal when the frame was
        exposed, ``pose`` its current (yaw, pitch); ``dt`` is the control tick.
        """
        report = self.tracker.step(detections)
        cands = [trk for trk in self.tracker.confirmed_tracks
                 if trk.class_id in ARMOR_CLASSES and trk.time_since_update == 0]
        sel = select(cands, self.sel_cfg, t=t, centers=[c.last_center for c in cands])
        if sel is None:
            self._idle()
            return StepOutput(report, None, GimbalCommand(0.0, 0.0))
        if sel.track_id != self.current:
            self._idle()
            self.current = sel.track_id

        cam = self.cam
        mx, my = self.sel_cfg.middle_x, self.sel_cfg.middle_y
        ax = capture_pose[0] + math.atan(sel.x_ret * mx / cam.focal_px)
        ay = capture_pose[1] + math.atan(sel.y_ret * my / cam.focal_px)
        est = self.cfg.estimation
        if self.cfg.prediction:
            if len(self.hx) == 0:
                for _ in range(2):
                    self.hx.append(ax)
                    self.hy.append(ay)
            self.hx.append(ax)
            self.hy.append(ay)
            lead = est.dt if est.lead is None else est.lead
            px, py = kalman_at_filter(self.hx, self.hy, est.dt, lead=lead,
                                      acc_floor=est.std_acc_floor, meas_floor=est.std_meas_floor)
        else:
            px, py = ax, ay

        def norm(angle: float, half: float) -> float:
            v = math.tan(max(min(angle, 1.5), -1.5)) * cam.focal_px / half
            return max(min(v, 1.0), -1.0)

        sel.x_pred = norm(px - pose[0], mx)
        sel.y_pred = norm(py - pose[1], my)
        trk = self.tracker.get(sel.track_id)
        dist, pitch_comp = self._compensation(trk.class_id, sel.h_ret)
        cmd = aim_to_command(sel.x_pred, sel.y_pred, pitch_comp, self.controllers,
                             self.fir_x, self.fir_y, dt, feedforward=(px, py), cam=cam)
        return StepOutput(report, sel, cmd, pitch_comp, dist, px, py)

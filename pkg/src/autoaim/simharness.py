"""Deterministic closed-loop simulation of the aiming pipeline."""
from __future__ import annotations

import csv
import hashlib
import io
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import ballistics
from .config import PipelineConfig
from .control import GimbalCommand, aim_to_command
from .geometry import BBox, CameraModel, Detection, NUM_CLASSES, Pose, camera_rotation
from .metrics import LabeledBox, count, mean_ap, precision, recall
from .pipeline import AimPipeline
from .scenario import Scenario

TICKLOG_HEADER = ["t", "target_id", "gt_x", "gt_y", "det_count", "sel_track", "x_pred", "y_pred",
                  "d_yaw", "d_pitch", "plant_yaw", "plant_pitch", "aim_err_px"]


@dataclass
class GimbalPlant:
    """Two-axis gimbal driven by accumulated rate increments.

    The commanded rate is the running sum of ``GimbalCommand`` increments; the
    actual rate follows it with a first-order lag and is clipped to
    ``max_slew``.
    """

    yaw: float = 0.0
    pitch: float = 0.0
    tau: float = 0.03
    max_slew: float = 8.0
    rate_yaw: float = 0.0
    rate_pitch: float = 0.0
    cmd_yaw: float = 0.0
    cmd_pitch: float = 0.0

    def apply(self, cmd: GimbalCommand) -> None:
        self.cmd_yaw += cmd.d_yaw
        self.cmd_pitch += cmd.d_pitch

    def hold(self) -> None:
        self.cmd_yaw = self.cmd_pitch = 0.0

    def step(self, dt: float) -> None:
        a = 1.0 - math.exp(-dt / self.tau)
        s = self.max_slew
        self.rate_yaw = min(max(self.rate_yaw + a * (self.cmd_yaw - self.rate_yaw), -s), s)
        self.rate_pitch = min(max(self.rate_pitch + a * (self.cmd_pitch - self.rate_pitch), -s), s)
        self.yaw += self.rate_yaw * dt
        self.pitch += self.rate_pitch * dt


@dataclass
class TickLog:
    t: float
    target_id: int
    gt_x: float
    gt_y: float
    det_count: int
    sel_track: int
    x_pred: float
    y_pred: float
    d_yaw: float
    d_pitch: float
    plant_yaw: float
    plant_pitch: float
    aim_err_px: float

    def row(self) -> list[str]:
        def f(v):
            if isinstance(v, float):
                return "" if math.isnan(v) else repr(v)
            return str(v)
        return [f(getattr(self, k)) for k in TICKLOG_HEADER]


@dataclass
class SimResult:
    logs: list[TickLog]
    summary: dict
    detections: list[Detection] = field(default_factory=list)
    truths: list[LabeledBox] = field(default_factory=list)
    track_ids: dict[int, list[int]] = field(default_factory=dict)
    pipeline: AimPipeline | None = None

    def csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(TICKLOG_HEADER)
        for r in self.logs:
            w.writerow(r.row())
        return buf.getvalue()

    def digest(self) -> str:
        return hashlib.sha256(self.csv_text().encode()).hexdigest()


def true_drop_px(distance_cm: float) -> float:
    """Drop curve used to generate both the synthetic fit data and the impacts."""
    return float(np.polynomial.polynomial.polyval(distance_cm, (0.5, 5.0e-3, 2.0e-5, 0.0, 1.0e-10)))


def project(cam: CameraModel, yaw: float, pitch: float, point_m: np.ndarray,
            size_cm: tuple[float, float]):
    """Pixel center, size and range (cm) of a world point seen from the gimbal.

    Gimbal yaw is positive to the right and pitch positive up.  Returns None
    when the point is behind the camera.
    """
    rot = camera_rotation(Pose(yaw=-yaw, pitch=-pitch))
    cam_pos = rot @ cam.mount_offset
    p = rot.T @ (np.asarray(point_m, float) * 100.0 - cam_pos)
    if p[2] <= 1.0:
        return None
    f = cam.focal_px
    u = cam.width / 2 + f * p[0] / p[2]
    v = cam.height / 2 - f * p[1] / p[2]
    z = float(p[2])
    return float(u), float(v), f * size_cm[0] / z, f * size_cm[1] / z, float(np.linalg.norm(p))


@dataclass
class _Frame:
    t: float
    pose: tuple[float, float]
    detections: list[Detection]
    origins: list[int]          # truth index per detection, -1 for false positives
    truths: list[LabeledBox]


def _render(scn: Scenario, cam: CameraModel, t: float, pose, rng) -> tuple[_Frame, dict]:
    noise = scn.noise
    dets, origins, truths, visible = [], [], [], {}
    for idx, spec in enumerate(scn.targets):
        if not spec.alive(t):
            continue
        pr = project(cam, pose[0], pose[1], spec.path.position(t), spec.size_cm)
        if pr is None:
            continue
        u, v, w, h, rng_cm = pr
        if not (0 <= u < cam.width and 0 <= v < cam.height) or w < 1 or h < 1:
            continue
        visible[idx] = (u, v, w, h, rng_cm)
        if spec.occluded(t):
            continue
        truths.append(LabeledBox(t, spec.class_id, BBox.from_center(u, v, w, h)))
        # draw every variate so the stream does not depend on which branch runs
        miss = rng.random() < noise.miss_prob
        du, dv = rng.normal(0.0, noise.center_sigma, 2)
        dw, dh = rng.normal(0.0, noise.size_sigma, 2)
        conf = float(rng.uniform(0.6, 1.0))
        if miss:
            continue
        box = BBox.from_center(u + du, v + dv, max(w + dw, 1.0), max(h + dh, 1.0))
        dets.append(Detection(t, spec.class_id, box, conf))
        origins.append(idx)
    for _ in range(int(rng.poisson(noise.false_positive_rate))):
        w, h = rng.uniform(8, 30, 2)
        u = rng.uniform(w / 2, cam.width - w / 2)
        v = rng.uniform(h / 2, cam.height - h / 2)
        cls = int(rng.integers(0, NUM_CLASSES))
        conf = float(rng.uniform(0.3, 0.7))
        dets.append(Detection(t, cls, BBox.from_center(u, v, w, h), conf))
        origins.append(-1)
    return _Frame(t, pose, dets, origins, truths), visible


def run(scenario: Scenario, config: PipelineConfig | None = None,
        drop_model: ballistics.DropModel | None = None, fire_interval: float = 0.1) -> SimResult:
    """Simulate ``scenario`` tick by tick.

    Per tick: render the frame exposed ``latency_ticks`` earlier, step the
    pipeline, apply the command and advance the plant.  A strike is recorded on
    the selected track whenever the impact point falls inside the target box
    (at most once per ``fire_interval``).
    """
    cfg = (config or PipelineConfig()).validate()
    pipe = AimPipeline(cfg, drop_model)
    cam = pipe.cam
    rng = np.random.default_rng(scenario.seed)
    plant = GimbalPlant(tau=cfg.plant.tau, max_slew=cfg.plant.max_slew)
    dt = scenario.tick
    L = scenario.latency_ticks
    frames: list[_Frame] = []
    logs: list[TickLog] = []
    all_dets: list[Detection] = []
    truths: list[LabeledBox] = []
    track_ids: dict[int, list[int]] = {i: [] for i in range(len(scenario.targets))}
    last_fire = -math.inf
    hits = 0

    for k in range(scenario.n_ticks):
        t = k * dt
        pose_now = (plant.yaw, plant.pitch)
        frame, visible = _render(scenario, cam, t, pose_now, rng)
        frames.append(frame)
        cap = frames[k - L] if k >= L else _Frame(t, pose_now, [], [], [])
        if k >= L:
            all_dets.extend(cap.detections)
            truths.extend(cap.truths)
        out = pipe.step(cap.detections, t, dt, capture_pose=cap.pose, pose=pose_now)

        det_origin = {}
        for tid, j in out.report.matched:
            o = cap.origins[j]
            det_origin[tid] = o
            confirmed = pipe.tracker.get(tid).confirmed
            if o >= 0 and confirmed and (not track_ids[o] or track_ids[o][-1] != tid):
                track_ids[o].append(tid)

        target = -1
        if out.selected is not None:
            target = det_origin.get(out.selected.track_id, -1)
        if target not in visible:
            target = min(visible) if visible else -1
        gt_x = gt_y = err = math.nan
        if target >= 0:
            u, v, w, h, rng_cm = visible[target]
            gt_x, gt_y = u, v
            aim_u, aim_v = cam.width / 2, cam.height / 2 + true_drop_px(rng_cm)
            err = math.hypot(u - aim_u, v - aim_v)
            if (out.selected is not None and abs(u - aim_u) < w / 2 and abs(v - aim_v) < h / 2
                    and t - last_fire >= fire_interval):
                pipe.tracker.get(out.selected.track_id).record_hit(t)
                last_fire = t
                hits += 1

        if out.selected is None:
            plant.hold()
        else:
            plant.apply(out.command)
        plant.step(dt)
        sel = out.selected
        logs.append(TickLog(
            t, target, gt_x, gt_y, len(cap.detections),
            -1 if sel is None else sel.track_id,
            math.nan if sel is None else sel.x_pred,
            math.nan if sel is None else sel.y_pred,
            out.command.d_yaw, out.command.d_pitch, plant.yaw, plant.pitch, err))

    return SimResult(logs, summarize(logs, all_dets, truths, track_ids, hits, cfg.settle_time),
                     all_dets, truths, track_ids, pipe)


def summarize(logs: Sequence[TickLog], dets: Sequence[Detection], truths: Sequence[LabeledBox],
              track_ids: dict[int, list[int]], hits: int = 0, settle_time: float = 1.0) -> dict:
    if not logs:
        return {}
    errs = [r.aim_err_px for r in logs if r.t >= settle_time and not math.isnan(r.aim_err_px)]
    preds = [LabeledBox(d.t, d.class_id, d.bbox, d.confidence) for d in dets]
    counts = count(preds, truths)
    total = sum(counts.values(), start=type(next(iter(counts.values())))()) if counts else None
    m = mean_ap(preds, truths) if truths else None
    return {
        "ticks": len(logs),
        "mean_aim_err_px": float(np.mean(errs)) if errs else None,
        "id_switches": sum(max(len(v) - 1, 0) for v in track_ids.values()),
        "track_ids": {str(k): v for k, v in track_ids.items()},
        "hits": hits,
        "detector_precision": precision(total) if total else None,
        "detector_recall": recall(total) if total else None,
        "detector_map50": None if m is None else m.mean_ap,
    }


def step_response(step_rad: float = 0.2, duration: float = 3.0, dt: float = 0.02,
                  config: PipelineConfig | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Yaw trajectory of the default gimbal loop answering a fixed angular step.

    The target sits ``step_rad`` to the right of the initial heading; the error
    seen by the controller is its image offset, exactly as the pipeline would
    produce it with a perfect detector and no latency.
    """
    cfg = (config or PipelineConfig()).validate()
    pipe = AimPipeline(cfg)
    cam = pipe.cam
    plant = GimbalPlant(tau=cfg.plant.tau, max_slew=cfg.plant.max_slew)
    n = int(round(duration / dt))
    ts = np.arange(1, n + 1) * dt
    yaw = np.empty(n)
    for k in range(n):
        x_err = math.tan(step_rad - plant.yaw) * cam.focal_px / (cam.width / 2)
        cmd = aim_to_command(x_err, 0.0, 0.0, pipe.controllers, pipe.fir_x, pipe.fir_y, dt,
                             (step_rad, 0.0), cam)
        plant.apply(cmd)
        plant.step(dt)
        yaw[k] = plant.yaw
    return ts, yaw


def settling_time(ts: np.ndarray, y: np.ndarray, target: float, band: float = 0.02) -> float | None:
    """First time after which ``y`` stays within ``band`` (relative) of ``target``."""
    outside = np.nonzero(np.abs(np.asarray(y) - target) > band * abs(target))[0]
    if outside.size == 0:
        return 0.0
    last = outside[-1]
    if last == len(y) - 1:
        return None
    return float(ts[last])

"""Pipeline configuration: nested dataclasses loaded from / dumped to YAML."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml


class ConfigError(ValueError):
    pass


@dataclass
class CameraConfig:
    width: int = 640
    height: int = 480
    fov_h: float = 90.0
    mount_offset_forward: float = 10.0
    mount_offset_up: float = 6.0


@dataclass
class TrackingConfig:
    lam: float = 0.5
    iou_gate: float = 0.1
    max_age: int = 30
    n_init: int = 3
    std_acc: float = 200.0
    std_meas: float = 2.0
    init_vel_var: float = 1.0e4
    reacquire_after: int = 1
    reacquire_radius: float = 160.0


@dataclass
class EstimationConfig:
    detector_period: float = 0.015
    tracker_period: float = 0.005
    history: int = 30
    lead: float | None = None          # seconds; None means one pipeline period
    std_acc_floor: float = 1e-3
    std_meas_floor: float = 1e-3

    @property
    def dt(self) -> float:
        return self.detector_period + self.tracker_period


@dataclass
class SelectionWeights:
    K_dis: float = 0.7
    K_area: float = 0.3
    hit_bonus: float = 0.2
    hit_window: float = 2.0


@dataclass
class BallisticsConfig:
    model: str = "knn"
    data: str | None = None            # drop CSV; None fits synthetic quartic data
    synthetic_seed: int = 0
    armor_height_cm: dict[int, float] = field(default_factory=lambda: {
        0: 6.0, 1: 6.0, 2: 6.0, 3: 24.0, 4: 24.0, 5: 3.0, 6: 3.0,
        7: 30.0, 8: 30.0, 9: 6.0, 10: 24.0})


@dataclass
class ControlConfig:
    Kp: float = 6.0
    Ki: float = 0.5
    Kd: float = 0.4
    Kf: float = 0.5
    rate_limit: float = 100.0
    enhancement_threshold: float = 1e-4
    fir_order: int = 8
    fir_cutoff: float = 0.15
    fir_identity: bool = False


@dataclass
class PlantConfig:
    tau: float = 0.03
    max_slew: float = 8.0


@dataclass
class PipelineConfig:
    camera: CameraConfig = field(default_factory=CameraConfig)
    tracking: TrackingConfig = field(default_factory=TrackingConfig)
    estimation: EstimationConfig = field(default_factory=EstimationConfig)
    selection: SelectionWeights = field(default_factory=SelectionWeights)
    ballistics: BallisticsConfig = field(default_factory=BallisticsConfig)
    control: ControlConfig = field(default_factory=ControlConfig)
    plant: PlantConfig = field(default_factory=PlantConfig)
    prediction: bool = True
    settle_time: float = 1.0

    def validate(self) -> "PipelineConfig":
        c = self
        checks = [
            (c.camera.width > 0 and c.camera.height > 0, "camera resolution must be positive"),
            (0 < c.camera.fov_h < 180, "camera.fov_h must lie in (0, 180)"),
            (c.tracking.lam >= 0, "tracking.lam must be >= 0"),
            (0 <= c.tracking.iou_gate <= 1, "tracking.iou_gate must lie in [0, 1]"),
            (c.tracking.max_age >= 0, "tracking.max_age must be >= 0"),
            (c.estimation.dt > 0, "estimation periods must sum to a positive dt"),
            (c.estimation.history >= 3, "estimation.history must be >= 3"),
            (c.selection.K_dis + c.selection.K_area > 0, "K_dis + K_area must be positive"),
            (c.control.rate_limit > 0, "control.rate_limit must be positive"),
            (c.control.fir_order >= 2 and c.control.fir_order % 2 == 0, "control.fir_order must be even and >= 2"),
            (0 < c.control.fir_cutoff < 0.5, "control.fir_cutoff must lie in (0, 0.5)"),
            (c.plant.tau > 0 and c.plant.max_slew > 0, "plant.tau and plant.max_slew must be positive"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ConfigError(msg)
        return self

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def _merge(cls, data: dict | None, path: str = ""):
    obj = cls()
    if data is None:
        return obj
    if not isinstance(data, dict):
        raise ConfigError(f"section {path or '<root>'} must be a mapping")
    names = {f.name: f for f in dataclasses.fields(cls)}
    for key, val in data.items():
        if key not in names:
            raise ConfigError(f"unknown config key {path + key!r}")
        cur = getattr(obj, key)
        if dataclasses.is_dataclass(cur):
            setattr(obj, key, _merge(type(cur), val, f"{path}{key}."))
        elif isinstance(cur, dict):
            merged = dict(cur)
            merged.update({int(k): float(v) for k, v in (val or {}).items()})
            setattr(obj, key, merged)
        else:
            setattr(obj, key, val)
    return obj


def config_from_dict(data: dict | None) -> PipelineConfig:
    try:
        return _merge(PipelineConfig, data).validate()
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc


def load_yaml(path: str | Path | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from exc
    return data or {}


def load_config(path: str | Path | None) -> PipelineConfig:
    return config_from_dict(load_yaml(path))


def dump_config(cfg: PipelineConfig) -> str:
    return yaml.safe_dump(cfg.to_dict(), sort_keys=False)

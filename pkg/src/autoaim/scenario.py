"""Synthetic arena scenarios: target motion, occlusion and detector noise."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .config import ConfigError, load_yaml
from .geometry import NUM_CLASSES


@dataclass
class Path3:
    """Target path in the launcher frame, meters (x right, y up, z forward).

    kind ``constant_velocity``: ``start + velocity * t``
    kind ``sinusoidal``: ``center + amplitude * sin(2 pi t / period + phase)``
    kind ``waypoint``: piecewise-linear through ``points`` at ``speed`` m/s,
    holding the last point.
    """

    kind: str = "constant_velocity"
    start: tuple[float, float, float] = (0.0, 0.0, 3.0)
    velocity: tuple[float, float, float] = (0.0, 0.0, 0.0)
    center: tuple[float, float, float] = (0.0, 0.0, 3.0)
    amplitude: tuple[float, float, float] = (0.5, 0.0, 0.0)
    period: float = 2.0
    phase: float = 0.0
    points: list[tuple[float, float, float]] = field(default_factory=list)
    speed: float = 1.0

    def __post_init__(self):
        if self.kind not in ("constant_velocity", "sinusoidal", "waypoint"):
            raise ConfigError(f"unknown path kind {self.kind!r}")
        if self.kind == "sinusoidal" and not self.period > 0:
            raise ConfigError("sinusoidal period must be positive")
        if self.kind == "waypoint" and (len(self.points) < 1 or not self.speed > 0):
            raise ConfigError("waypoint path needs points and a positive speed")

    def position(self, t: float) -> np.ndarray:
        if self.kind == "constant_velocity":
            return np.asarray(self.start, float) + np.asarray(self.velocity, float) * t
        if self.kind == "sinusoidal":
            s = math.sin(2 * math.pi * t / self.period + self.phase)
            return np.asarray(self.center, float) + np.asarray(self.amplitude, float) * s
        pts = np.asarray(self.points, float)
        remaining = self.speed * max(t, 0.0)
        for a, b in zip(pts[:-1], pts[1:]):
            seg = float(np.linalg.norm(b - a))
            if remaining <= seg and seg > 0:
                return a + (b - a) * (remaining / seg)
            remaining -= seg
        return pts[-1].copy()


@dataclass
class TargetSpec:
    class_id: int = 1
    path: Path3 = field(default_factory=Path3)
    spawn: float = 0.0
    despawn: float | None = None
    occlusions: list[tuple[float, float]] = field(default_factory=list)
    size_cm: tuple[float, float] = (13.5, 6.0)

    def __post_init__(self):
        if not 0 <= self.class_id < NUM_CLASSES:
            raise ConfigError(f"class_id {self.class_id} out of range")
        for a, b in self.occlusions:
            if b < a:
                raise ConfigError("occlusion interval must have start <= end")

    def alive(self, t: float) -> bool:
        return t >= self.spawn and (self.despawn is None or t < self.despawn)

    def occluded(self, t: float) -> bool:
        return any(a <= t < b for a, b in self.occlusions)


@dataclass
class NoiseSpec:
    center_sigma: float = 1.0
    size_sigma: float = 0.3
    miss_prob: float = 0.0
    false_positive_rate: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.miss_prob <= 1.0:
            raise ConfigError("miss_prob must lie in [0, 1]")
        if self.false_positive_rate < 0 or self.center_sigma < 0 or self.size_sigma < 0:
            raise ConfigError("noise parameters must be nonnegative")


@dataclass
class Scenario:
    duration: float = 8.0
    tick: float = 0.02
    targets: list[TargetSpec] = field(default_factory=list)
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    seed: int = 0
    latency_ticks: int = 2

    def __post_init__(self):
        if not self.tick > 0:
            raise ConfigError("tick must be positive")
        if self.duration < 0:
            raise ConfigError("duration must be nonnegative")
        if self.latency_ticks < 0:
            raise ConfigError("latency_ticks must be nonnegative")

    @property
    def n_ticks(self) -> int:
        return int(round(self.duration / self.tick))

    def with_seed(self, seed: int) -> "Scenario":
        return Scenario(self.duration, self.tick, self.targets, self.noise, seed, self.latency_ticks)


def _tuple3(v, name) -> tuple[float, float, float]:
    v = tuple(float(x) for x in v)
    if len(v) != 3:
        raise ConfigError(f"{name} must have three components")
    return v


def scenario_from_dict(d: dict) -> Scenario:
    try:
        targets = []
        for t in d.get("targets", []) or []:
            p = dict(t.get("path", {}))
            for key in ("start", "velocity", "center", "amplitude"):
                if key in p:
                    p[key] = _tuple3(p[key], key)
            if "points" in p:
                p["points"] = [_tuple3(q, "points") for q in p["points"]]
            targets.append(TargetSpec(
                class_id=int(t.get("class_id", 1)),
                path=Path3(**p),
                spawn=float(t.get("spawn", 0.0)),
                despawn=None if t.get("despawn") is None else float(t["despawn"]),
                occlusions=[(float(a), float(b)) for a, b in t.get("occlusions", []) or []],
                size_cm=tuple(float(x) for x in t.get("size_cm", (13.5, 6.0))),
            ))
        noise = NoiseSpec(**(d.get("noise") or {}))
        return Scenario(
            duration=float(d.get("duration", 8.0)),
            tick=float(d.get("tick", 0.02)),
            targets=targets,
            noise=noise,
            seed=int(d.get("seed", 0)),
            latency_ticks=int(d.get("latency_ticks", 2)),
        )
    except ConfigError:
        raise
    except (TypeError, ValueError, AttributeError) as exc:
        raise ConfigError(f"invalid scenario: {exc}") from exc


def load_scenario(path: str | Path) -> Scenario:
    return scenario_from_dict(load_yaml(path))


def strafe_scenario(seed: int = 0, duration: float = 8.0, amplitude: float = 0.6,
                    period: float = 2.0, distance: float = 3.0, **noise) -> Scenario:
    """One armor strafing sideways in front of the launcher."""
    path = Path3("sinusoidal", center=(0.0, 0.0, distance), amplitude=(amplitude, 0.0, 0.0),
                 period=period)
    return Scenario(duration, 0.02, [TargetSpec(1, path)], NoiseSpec(**noise), seed)


def stationary_scenario(seed: int = 0, duration: float = 2.0, at=(0.0, 0.0, 3.0),
                        **noise) -> Scenario:
    noise = {"center_sigma": 0.0, "size_sigma": 0.0, **noise}
    path = Path3("constant_velocity", start=tuple(at))
    return Scenario(duration, 0.02, [TargetSpec(1, path)], NoiseSpec(**noise), seed)


def crossing_scenario(seed: int = 0, duration: float = 4.0, speed: float = 0.4,
                      classes: Sequence[int] = (1, 2), **noise) -> Scenario:
    """Two armors on straight lines that cross in front of the launcher."""
    a = Path3("constant_velocity", start=(-0.8, 0.05, 3.0), velocity=(speed, 0.0, 0.0))
    b = Path3("constant_velocity", start=(0.8, -0.05, 3.0), velocity=(-speed, 0.0, 0.0))
    return Scenario(duration, 0.02, [TargetSpec(classes[0], a), TargetSpec(classes[1], b)],
                    NoiseSpec(**noise), seed)

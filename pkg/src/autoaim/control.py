"""Gimbal command generation: FIR smoothing followed by an incremental PID
with a thresholded feedforward term and a rate limit."""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .geometry import CameraModel


class FirFilter:
    """Direct-form FIR: ``y[n] = sum_k h[k] x[n-k]`` with a zero-filled delay line."""

    def __init__(self, h: Sequence[float]):
        h = np.asarray(h, dtype=float)
        if h.ndim != 1 or h.size == 0 or not np.all(np.isfinite(h)):
            raise ValueError("FIR coefficients must be a non-empty finite 1-D sequence")
        self.h = h
        self._hist: deque[float] = deque([0.0] * h.size, maxlen=h.size)

    @property
    def order(self) -> int:
        return self.h.size - 1

    def reset(self) -> None:
        self._hist.extend([0.0] * self.h.size)

    def step(self, x: float) -> float:
        self._hist.appendleft(float(x))
        return float(np.dot(self.h, self._hist))

    def run(self, xs) -> np.ndarray:
        return np.array([self.step(x) for x in xs])


def fir_step(f: FirFilter, x: float) -> float:
    return f.step(x)


def identity_fir() -> FirFilter:
    return FirFilter([1.0])


def design_lowpass(order: int = 8, cutoff: float = 0.15) -> FirFilter:
    """Hamming-windowed sinc low-pass with unit DC gain.

    ``cutoff`` is in cycles per sample, 0 < cutoff < 0.5; ``order`` must be even.
    """
    if order < 2 or order % 2:
        raise ValueError(f"order must be even and >= 2, got {order}")
    if not 0.0 < cutoff < 0.5:
        raise ValueError(f"cutoff must lie in (0, 0.5), got {cutoff}")
    n = np.arange(order + 1) - order / 2
    h = 2 * cutoff * np.sinc(2 * cutoff * n) * np.hamming(order + 1)
    h /= h.sum()
    h = (h + h[::-1]) / 2
    return FirFilter(h)


@dataclass
class PidFfController:
    Kp: float = 6.0
    Ki: float = 0.5
    Kd: float = 0.4
    Kf: float = 0.5
    rate_limit: float = 100.0
    enhancement_threshold: float = 1e-4
    output_limit: float = math.inf
    integral: float = 0.0
    e1: float = 0.0
    e2: float = 0.0
    F1: float = 0.0
    F2: float = 0.0
    output: float = 0.0
    primed: bool = False

    @property
    def integral_limit(self) -> float:
        return self.rate_limit / max(self.Ki, 1e-9)

    def reset(self) -> None:
        self.integral = self.e1 = self.e2 = self.F1 = self.F2 = self.output = 0.0
        self.primed = False

    def step(self, setpoint: float, measured: float, F: float = 0.0, dt: float = 0.02) -> float:
        """Return the rate-limited increment and accumulate it into ``output``."""
        if not dt > 0:
            raise ValueError(f"dt must be positive, got {dt}")
        if not self.primed:
            # start the feedforward history at the first value so it does not kick
            self.F1 = self.F2 = F
            self.primed = True
        e = setpoint - measured
        lim = self.integral_limit
        new_int = min(max(self.integral + e * dt, -lim), lim)
        d_int = new_int - self.integral
        self.integral = new_int

        du = (self.Kp * (e - self.e1)
              + self.Ki * d_int
              + self.Kd * (e - 2 * self.e1 + self.e2) / dt)
        ddF = F - 2 * self.F1 + self.F2
        if abs(ddF) > self.enhancement_threshold:
            du += self.Kf * ddF / dt
        cap = self.rate_limit * dt
        du = min(max(du, -cap), cap)
        if math.isfinite(self.output_limit):
            new_out = min(max(self.output + du, -self.output_limit), self.output_limit)
            du = new_out - self.output
        self.output += du
        self.e2, self.e1 = self.e1, e
        self.F2, self.F1 = self.F1, F
        return du


def pid_step(c: PidFfController, setpoint: float, measured: float, F: float, dt: float) -> float:
    return c.step(setpoint, measured, F, dt)


@dataclass(frozen=True)
class GimbalCommand:
    """Per-tick controller increments for each axis.

    The increments accumulate into the commanded angular rate of the gimbal
    (see ``simharness.GimbalPlant``).
    """

    d_yaw: float
    d_pitch: float


def offset_to_angle(err: float, half_extent: float, focal_px: float) -> float:
    """Angle of a normalized image offset seen through a pinhole camera."""
    return math.atan(err * half_extent / focal_px)


@dataclass
class AxisPair:
    yaw: PidFfController = field(default_factory=PidFfController)
    pitch: PidFfController = field(default_factory=PidFfController)


def aim_to_command(x_err: float, y_err: float, pitch_comp: float, controllers: AxisPair,
                   fir_x: FirFilter, fir_y: FirFilter, dt: float,
                   feedforward: tuple[float, float] = (0.0, 0.0),
                   cam: CameraModel | None = None) -> GimbalCommand:
    """Turn normalized aim offsets into one tick of gimbal increments.

    Offsets are converted to angles when ``cam`` is given (otherwise used as
    is), FIR-smoothed, and the ballistic pitch compensation is added to the
    pitch setpoint.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    if cam is not None:
        x_err = offset_to_angle(x_err, cam.width / 2, cam.focal_px)
        y_err = offset_to_angle(y_err, cam.height / 2, cam.focal_px)
    sx = fir_x.step(x_err)
    sy = fir_y.step(y_err)
    d_yaw = controllers.yaw.step(sx, 0.0, feedforward[0], dt)
    d_pitch = controllers.pitch.step(sy + pitch_comp, 0.0, feedforward[1], dt)
    return GimbalCommand(d_yaw, d_pitch)

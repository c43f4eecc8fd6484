"""Two-state (position, velocity) Kalman filter and the self-tuning history filter."""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Iterable

import numpy as np

STD_ACC_FLOOR = 1e-3
STD_MEAS_FLOOR = 1e-3


class InsufficientHistoryError(ValueError):
    pass


@dataclass
class KalmanParams:
    dt: float
    u: float = 0.0
    std_acc: float = 1.0
    std_meas: float = 1.0
    acc_floor: float = STD_ACC_FLOOR
    meas_floor: float = STD_MEAS_FLOOR

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not (self.acc_floor > 0 and self.meas_floor > 0):
            raise ValueError("std floors must be positive")
        self.std_acc = max(float(self.std_acc), self.acc_floor)
        self.std_meas = max(float(self.std_meas), self.meas_floor)


class KalmanFilter1D:
    """Constant-velocity filter on one axis with an optional control input.

    State ``X = [position, velocity]`` starts at zero with ``P = I``.
    """

    def __init__(self, dt: float, u: float = 0.0, std_acc: float = 1.0,
                 std_meas: float = 1.0, x0: float | None = None,
                 params: KalmanParams | None = None):
        if params is None:
            params = KalmanParams(dt, u, std_acc, std_meas)
        dt = params.dt
        self.params = params
        self.dt = params.dt
        self.u = params.u
        self.F = np.array([[1.0, dt], [0.0, 1.0]])
        self.B = np.array([dt ** 2 / 2, dt])
        self.H = np.array([[1.0, 0.0]])
        self.Q = np.array([[dt ** 4 / 4, dt ** 3 / 2],
                           [dt ** 3 / 2, dt ** 2]]) * params.std_acc ** 2
        self.R = params.std_meas ** 2
        self.X = np.zeros(2)
        self.P = np.eye(2)
        if x0 is not None:
            self.X[0] = x0

    @classmethod
    def from_params(cls, p: KalmanParams, x0: float | None = None) -> "KalmanFilter1D":
        return cls(p.dt, x0=x0, params=p)

    @property
    def position(self) -> float:
        return float(self.X[0])

    @property
    def velocity(self) -> float:
        return float(self.X[1])

    def predict(self, u: float | None = None) -> np.ndarray:
        u = self.u if u is None else u
        self.X = self.F @ self.X + self.B * u
        P = self.F @ self.P @ self.F.T + self.Q
        self.P = (P + P.T) / 2
        return self.X

    def update(self, z: float) -> np.ndarray:
        if not math.isfinite(z):
            raise ValueError(f"non-finite measurement {z!r}")
        y = z - (self.H @ self.X)[0]
        S = self.R + (self.H @ self.P @ self.H.T)[0, 0]
        K = (self.P @ self.H.T)[:, 0] / S
        self.X = self.X + K * y
        P = (np.eye(2) - np.outer(K, self.H[0])) @ self.P
        self.P = (P + P.T) / 2
        self.last_gain = K
        return self.X

    def process(self, z: float) -> np.ndarray:
        """One predict/update cycle; returns a copy of the posterior state."""
        self.predict()
        return self.update(z).copy()


class MeasurementHistory:
    """Bounded, time-ordered buffer of scalar measurements for one axis."""

    def __init__(self, capacity: int = 30, values: Iterable[float] = ()):
        if capacity < 3:
            raise ValueError("capacity must be at least 3")
        self.capacity = capacity
        self._buf: deque[float] = deque(maxlen=capacity)
        for v in values:
            self.append(v)

    def append(self, value: float) -> None:
        self._buf.append(float(value))

    def clear(self) -> None:
        self._buf.clear()

    def __len__(self) -> int:
        return len(self._buf)

    def __iter__(self):
        return iter(self._buf)

    def as_array(self) -> np.ndarray:
        return np.fromiter(self._buf, dtype=float, count=len(self._buf))


def estimate_params(meas: np.ndarray, dt: float, acc_floor: float = STD_ACC_FLOOR,
                    meas_floor: float = STD_MEAS_FLOOR) -> KalmanParams:
    """Derive (u, std_acc, std_meas) from a measurement history."""
    if len(meas) < 3:
        raise InsufficientHistoryError(f"need at least 3 measurements, got {len(meas)}")
    u = float(np.mean(np.diff(meas))) / dt
    std_acc = float(np.std(np.diff(meas, 2))) / dt ** 2
    std_meas = float(np.std(meas))
    return KalmanParams(dt, u, std_acc, std_meas, acc_floor, meas_floor)


def _replay(meas: np.ndarray, p: KalmanParams) -> tuple[list[float], list[float]]:
    # KalmanFilter1D.process unrolled on scalars; P = [[a, b], [b, c]]
    dt, u = p.dt, p.u
    qa = dt ** 4 / 4 * p.std_acc ** 2
    qb = dt ** 3 / 2 * p.std_acc ** 2
    qc = dt ** 2 * p.std_acc ** 2
    R = p.std_meas ** 2
    x0 = x1 = 0.0
    a, b, c = 1.0, 0.0, 1.0
    bu0, bu1 = dt * dt / 2 * u, dt * u
    for z in meas.tolist():
        x0, x1 = x0 + dt * x1 + bu0, x1 + bu1
        a, b, c = a + 2 * dt * b + dt * dt * c + qa, b + dt * c + qb, c + qc
        S = R + a
        k0, k1 = a / S, b / S
        y = z - x0
        x0, x1 = x0 + k0 * y, x1 + k1 * y
        a, b, c = (1 - k0) * a, ((1 - k0) * b + (b - k1 * a)) / 2, c - k1 * b
    return [x0, x1], [[a, b], [b, c]]


def filter_history(meas, dt: float, **floors) -> KalmanFilter1D:
    """Build a fresh filter from the history's statistics and replay the history.

    Equivalent to calling ``process`` on every sample of a new
    ``KalmanFilter1D``; the replay runs on scalars for speed.
    """
    meas = np.asarray(meas, dtype=float)
    p = estimate_params(meas, dt, **floors)
    kf = KalmanFilter1D.from_params(p)
    X, P = _replay(meas, p)
    kf.X = np.array(X)
    kf.P = np.array(P)
    return kf


def kalman_at_filter(hx, hy, dt: float, lead: float = 0.0, **floors) -> tuple[float, float]:
    """Filtered position of each axis after replaying its history.

    ``lead`` (seconds) extrapolates the final state along its velocity
    estimate; zero returns the filtered position of the last sample.
    """
    out = []
    for h in (hx, hy):
        arr = h.as_array() if isinstance(h, MeasurementHistory) else np.asarray(h, float)
        kf = filter_history(arr, dt, **floors)
        out.append(kf.position + kf.velocity * lead)
    return out[0], out[1]

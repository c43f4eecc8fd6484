"""
Smoothing and predicting a target offset
========================================

A constant-velocity Kalman filter per image axis, and the history-driven
variant the aiming pipeline runs every frame.
"""
# %%
import numpy as np

from autoaim.estimation import KalmanFilter1D, MeasurementHistory, kalman_at_filter

rng = np.random.default_rng(0)
dt, n = 0.02, 500
truth = 0.1 + 0.5 * dt * np.arange(n)
z = truth + rng.normal(0.0, 0.02, n)

# %%
# Filtering a noisy straight-line track cuts the position error roughly in
# half compared with the raw measurements.
kf = KalmanFilter1D(dt, std_acc=0.5, std_meas=0.02)
est = np.array([kf.process(zi)[0] for zi in z])
rmse = lambda e: float(np.sqrt(np.mean(e ** 2)))
print(f"raw RMSE      {rmse(z - truth):.4f}")
print(f"filtered RMSE {rmse(est - truth):.4f}")
print(f"velocity estimate {kf.velocity:.3f} (true 0.5)")

# %%
# The pipeline keeps a short history of offsets and refits the filter noise
# from it each frame.  Leading the estimate by one pipeline period places the
# aim point where the target will be when the command takes effect.
hx = MeasurementHistory(30)
hy = MeasurementHistory(30)
for k in range(12):
    hx.append(0.1 * k)
    hy.append(0.0)
now, _ = kalman_at_filter(hx, hy, dt=0.1)
ahead, _ = kalman_at_filter(hx, hy, dt=0.1, lead=0.1)
print(f"last sample 1.1, filtered {now:.3f}, one period ahead {ahead:.3f}")

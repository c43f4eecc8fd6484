"""
Gimbal control
==============

A linear-phase FIR smooths the aim error before an incremental PID with
feedforward turns it into rate increments for the gimbal.
"""
# %%
import numpy as np

from autoaim.control import PidFfController, design_lowpass
from autoaim.simharness import settling_time, step_response

fir = design_lowpass(order=8, cutoff=0.1)
print("taps:", np.round(fir.h, 4))
print("DC gain:", round(float(fir.h.sum()), 12))

# %%
# Low frequencies pass, high frequencies are suppressed.
n = np.arange(600)
for f in (0.02, 0.1, 0.4):
    y = design_lowpass(8, 0.1).run(np.sin(2 * np.pi * f * n))
    print(f"{f:4.2f} cycles/sample -> amplitude {np.max(np.abs(y[100:])):.3f}")

# %%
# Each increment is clamped to the rate limit times the tick.
c = PidFfController(Kp=10, Ki=0, Kd=0, Kf=0, rate_limit=5)
c.step(0, 0, 0, 1.0)
print("clamped increment:", c.step(100, 0, 0, 1.0))

# %%
# Closed loop on the simulated gimbal: a 0.2 rad step to the right.
ts, yaw = step_response(0.2, duration=3.0)
print(f"settles into +/-2% after {settling_time(ts, yaw, 0.2):.2f} s, "
      f"overshoot {100 * (yaw.max() / 0.2 - 1):.1f}%")
for t in (0.1, 0.2, 0.3, 0.5, 1.0):
    print(f"t={t:.1f} s yaw={yaw[int(round(t / 0.02)) - 1]:.4f}")

"""
Choosing which plate to engage
==============================

Candidates are ranked by distance from the image center and by apparent size.
Plates struck recently get a bonus.
"""
# %%
from autoaim.association import Track
from autoaim.estimation import KalmanFilter1D, MeasurementHistory
from autoaim.selection import SelectionConfig, predict_aim, select


def plate(tid, cx, cy, w, h):
    return Track(tid, 1, KalmanFilter1D(0.02, x0=cx), KalmanFilter1D(0.02, x0=cy), w, h)


cfg = SelectionConfig()
near_small = plate(1, 420, 240, 20, 20)     # 100 px from center, 400 px^2
far_big = plate(2, 520, 240, 40, 20)        # 200 px from center, 800 px^2

# %%
# Distance carries 70% of the score, so the nearer plate wins.
s = select([near_small, far_big], cfg)
print(f"selected track {s.track_id} with weight {s.weight:.2f}")

# %%
# A hit on the far plate in the last 2 seconds lowers its weight by the hit
# bonus; with a bonus of 0.3 that is enough to switch to it.
far_big.record_hit(0.5)
s = select([near_small, far_big], SelectionConfig(hit_bonus=0.3), t=1.0)
print(f"after a recent hit: track {s.track_id}, weight {s.weight:.2f}")

# %%
# The selected offset feeds the per-axis history and is projected forward.
hx, hy = MeasurementHistory(), MeasurementHistory()
for x in (0.0, 0.1, 0.2):
    hx.append(x)
    hy.append(0.0)
s.x_ret, s.y_ret = 0.3, 0.0
print("predicted aim offset: (%.3f, %.3f)" % predict_aim(s, hx, hy, dt=0.1))

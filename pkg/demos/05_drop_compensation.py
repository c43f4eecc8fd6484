"""
Fitting the pellet drop curve
=============================

Four regressors map range to vertical drop in pixels; the drop becomes a
pitch offset for the gimbal.
"""
# %%
from autoaim import ballistics
from autoaim.geometry import CameraModel

samples = ballistics.synthetic_drops(n=200, sigma=0.1, seed=0)
train, hold = ballistics.split(samples, 0.8, seed=0)
print(f"{len(train)} training samples, {len(hold)} held out")

# %%
# Scores on the held-out fifth.  All four families explain well over 98% of
# the variance on this smooth curve.
print(f"{'model':8s} {'MSE':>10s} {'RMSE':>10s} {'R2':>10s}")
models = {}
for spec in ("poly4", "poly5", "knn", "svr"):
    models[spec] = ballistics.fit(train, spec)
    r = ballistics.score(models[spec], hold)
    print(f"{spec:8s} {r.mse:10.6f} {r.rmse:10.6f} {r.r2:10.6f}")

# %%
# Converting a predicted drop into a pitch correction.
cam = CameraModel()
for d in (100, 250, 400):
    drop = models["knn"].predict(d)
    pitch = ballistics.drop_to_pitch(cam, drop)
    print(f"{d} cm: drop {drop:5.2f} px -> pitch {pitch * 1000:5.2f} mrad")

"""
Multi-target tracking
=====================

Optimal assignment of detections to tracks, track confirmation and removal,
and re-acquisition of a track after a missed frame.
"""
# %%
import numpy as np

from autoaim.association import Tracker, TrackerConfig, hungarian
from autoaim.geometry import BBox, Detection

# %%
# The assignment solver handles rectangular matrices; the leftover column is
# a detection that will start a new track.
a = hungarian(np.array([[1.0, 5.0, 5.0], [5.0, 1.0, 5.0]]))
print("pairs", a.pairs, "unmatched detections", a.unmatched_cols, "cost", a.cost)


def det(t, cx, cy, cls=1):
    return Detection(t, cls, BBox.from_center(cx, cy, 40, 16))


# %%
# Two plates move apart.  Tracks are confirmed after three consecutive hits.
tracker = Tracker(TrackerConfig(max_age=5))
for k in range(4):
    rep = tracker.step([det(0.02 * k, 200 - 3 * k, 240), det(0.02 * k, 440 + 3 * k, 240, cls=2)])
    print(f"frame {k}: matched {rep.matched} new {rep.new_tracks}")
print("confirmed:", [t.track_id for t in tracker.confirmed_tracks])

# %%
# Plate 2 vanishes.  It is kept as MISSING for ``max_age`` frames, then removed.
for k in range(4, 11):
    rep = tracker.step([det(0.02 * k, 200 - 3 * k, 240)])
    print(f"frame {k}: missing {rep.missing} removed {rep.removed}")

# %%
# After one missed frame, plate 1 reappears too far away to overlap its
# prediction.  The region search still finds it, so it keeps its id.
tracker.step([])
rep = tracker.step([det(0.24, 120, 240)])
print("re-acquired:", rep.reacquired, "new tracks:", rep.new_tracks)

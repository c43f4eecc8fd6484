"""
Camera geometry
===============

From a bounding box to a range estimate and a point in the launcher frame.
"""
# %%
# The default camera is a 640x480 sensor with a 90 degree horizontal field
# of view, so its focal length works out to 320 pixels.
import math

from autoaim.geometry import BBox, CameraModel, Pose, estimate_distance, iou, to_world

cam = CameraModel()
print(f"focal length: {cam.focal_px:.1f} px")

# %%
# An armor plate is 6 cm tall.  When it spans 32 pixels, similar triangles
# put it 60 cm away; halving the pixel height doubles the range.
for h_px in (64, 32, 16):
    print(f"{h_px:3d} px tall -> {estimate_distance(cam, h_px, 6.0):6.1f} cm")

# %%
# Back-projection turns a centered pixel offset and a range into a 3D point.
# The camera sits 10 cm ahead of and 6 cm above the launcher, and that offset
# turns with the gimbal.
box = BBox.from_center(400, 200, 40, 16)
x_cnn, y_cnn = cam.centered(*box.center)
D = estimate_distance(cam, box.height, 6.0)
for yaw in (0.0, math.radians(30)):
    p = to_world(cam, Pose(yaw=yaw), x_cnn, y_cnn, D)
    print(f"yaw {math.degrees(yaw):4.0f} deg -> ({p.x:7.2f}, {p.y:6.2f}, {p.z:7.2f}) cm")

# %%
# Overlap between boxes is the basis of frame-to-frame association.
a = BBox(0, 0, 10, 10)
print("IoU with itself:", iou(a, a))
print("IoU with a box twice as tall:", iou(a, BBox(0, 0, 10, 20)))

"""Camera model, bounding boxes, range estimation and gimbal-frame rotation.

Image coordinates have their origin at the top-left corner.  Offsets fed to the
3D helpers are measured from the image center with +x to the right and +y up.
World points use the same axis naming as the camera: x right, y up, z forward.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

#: Class list of the detector, indexed by ``class_id``.
CLASS_NAMES = (
    "CyanArmor",
    "RedArmor",
    "BlueArmor",
    "RedArmy",
    "BlueArmy",
    "RedEar",
    "BlueEar",
    "RedBase",
    "BlueBase",
    "DeadArmor",
    "DeadArmy",
)
NUM_CLASSES = len(CLASS_NAMES)

#: Classes a shot may be aimed at.  Ears and dead plates are excluded.
ARMOR_CLASSES = frozenset({0, 1, 2})


class GeometryError(ValueError):
    """Raised on degenerate geometric input (empty boxes, non-positive range)."""


@dataclass(frozen=True)
class BBox:
    x1: float
    y1: float
    x2: float
    y2: float

    def __post_init__(self):
        vals = (self.x1, self.y1, self.x2, self.y2)
        if not all(math.isfinite(v) for v in vals):
            raise GeometryError(f"non-finite box {vals}")
        if not (self.x1 < self.x2 and self.y1 < self.y2):
            raise GeometryError(f"degenerate box {vals}")

    @classmethod
    def from_center(cls, cx: float, cy: float, w: float, h: float) -> "BBox":
        return cls(cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2)

    @property
    def width(self) -> float:
        return self.x2 - self.x1

    @property
    def height(self) -> float:
        return self.y2 - self.y1

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def center(self) -> tuple[float, float]:
        return (self.x1 + self.x2) / 2, (self.y1 + self.y2) / 2


@dataclass(frozen=True)
class Detection:
    t: float
    class_id: int
    bbox: BBox
    confidence: float = 1.0

    def __post_init__(self):
        if not 0 <= self.class_id < NUM_CLASSES:
            raise GeometryError(f"class_id {self.class_id} outside 0..{NUM_CLASSES - 1}")
        if not 0.0 <= self.confidence <= 1.0:
            raise GeometryError(f"confidence {self.confidence} outside [0, 1]")

    @property
    def class_name(self) -> str:
        return CLASS_NAMES[self.class_id]


@dataclass(frozen=True)
class CameraModel:
    """Pinhole camera; the focal length is expressed in pixels.

    Defaults describe a 640x480 sensor with a 90 degree horizontal field of
    view, mounted 10 cm ahead of and 6 cm above the launcher.
    """

    width: int = 640
    height: int = 480
    fov_h: float = 90.0
    mount_offset_forward: float = 10.0
    mount_offset_up: float = 6.0
    focal_px: float = field(init=False)

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise GeometryError("camera resolution must be positive")
        if not 0.0 < self.fov_h < 180.0:
            raise GeometryError("fov_h must lie in (0, 180) degrees")
        focal = (self.width / 2) / math.tan(math.radians(self.fov_h) / 2)
        object.__setattr__(self, "focal_px", focal)

    @property
    def center(self) -> tuple[float, float]:
        return self.width / 2, self.height / 2

    @property
    def mount_offset(self) -> np.ndarray:
        return np.array([0.0, self.mount_offset_up, self.mount_offset_forward])

    def centered(self, u: float, v: float) -> tuple[float, float]:
        """Convert top-left pixel coordinates to center offsets (y up)."""
        cx, cy = self.center
        return u - cx, cy - v


def _wrap(angle: float) -> float:
    # map into (-pi, pi]
    a = math.remainder(angle, 2 * math.pi)
    return math.pi if a == -math.pi else a


@dataclass(frozen=True)
class Pose:
    """Gimbal orientation from the IMU, radians."""

    roll: float = 0.0
    pitch: float = 0.0
    yaw: float = 0.0

    def __post_init__(self):
        for name in ("roll", "pitch", "yaw"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise GeometryError(f"non-finite {name}")
            object.__setattr__(self, name, _wrap(v))


@dataclass(frozen=True)
class Point3:
    x: float
    y: float
    z: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])


def iou(a: BBox, b: BBox) -> float:
    iw = min(a.x2, b.x2) - max(a.x1, b.x1)
    ih = min(a.y2, b.y2) - max(a.y1, b.y1)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    return inter / (a.area + b.area - inter)


def estimate_distance(cam: CameraModel, h_cnn: float, H_r: float) -> float:
    """Range (cm) to an object of real height ``H_r`` cm spanning ``h_cnn`` px."""
    if not h_cnn > 0:
        raise GeometryError(f"pixel height must be positive, got {h_cnn}")
    if not H_r > 0:
        raise GeometryError(f"real height must be positive, got {H_r}")
    return cam.focal_px * H_r / h_cnn


def rotation_matrix(p: Pose) -> np.ndarray:
    """Body-frame rotation R = Rz(yaw) @ Ry(pitch) @ Rx(roll).

    Intrinsic Z-Y-X order in a body frame with x forward, y left, z up.
    """
    cr, sr = math.cos(p.roll), math.sin(p.roll)
    cp, sp = math.cos(p.pitch), math.sin(p.pitch)
    cy, sy = math.cos(p.yaw), math.sin(p.yaw)
    rz = np.array([[cy, -sy, 0.0], [sy, cy, 0.0], [0.0, 0.0, 1.0]])
    ry = np.array([[cp, 0.0, sp], [0.0, 1.0, 0.0], [-sp, 0.0, cp]])
    rx = np.array([[1.0, 0.0, 0.0], [0.0, cr, -sr], [0.0, sr, cr]])
    return rz @ ry @ rx


# camera axes (right, up, forward) -> body axes (forward, left, up)
_CAM_TO_BODY = np.array([[0.0, 0.0, 1.0], [-1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])


def camera_rotation(p: Pose) -> np.ndarray:
    """The gimbal rotation expressed in camera-style axes (x right, y up, z forward)."""
    return _CAM_TO_BODY.T @ rotation_matrix(p) @ _CAM_TO_BODY


def to_world(cam: CameraModel, p: Pose, x_cnn: float, y_cnn: float, D: float,
             include_mount: bool = True) -> Point3:
    """Back-project a centered pixel offset at range ``D`` into the world frame.

    The mount offset is rotated with the gimbal before being added, so the
    returned point is relative to the launcher.
    """
    if not D > 0:
        raise GeometryError(f"range must be positive, got {D}")
    f = cam.focal_px
    p_cam = np.array([x_cnn * D / f, y_cnn * D / f, D])
    rot = camera_rotation(p)
    out = rot @ p_cam
    if include_mount:
        out = out + rot @ cam.mount_offset
    return Point3(*map(float, out))

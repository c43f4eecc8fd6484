"""Line-delimited JSON detection streams and CSV outputs."""
from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable

from .geometry import BBox, Detection, GeometryError

DETECTION_FIELDS = ("t", "class_id", "x1", "y1", "x2", "y2", "conf")


class StreamFormatError(ValueError):
    pass


def detection_to_record(d: Detection) -> dict:
    b = d.bbox
    return {"t": d.t, "class_id": d.class_id, "x1": b.x1, "y1": b.y1, "x2": b.x2, "y2": b.y2,
            "conf": d.confidence}


def record_to_detection(rec: dict) -> Detection:
    if not isinstance(rec, dict) or set(rec) != set(DETECTION_FIELDS):
        got = sorted(rec) if isinstance(rec, dict) else type(rec).__name__
        raise StreamFormatError(f"expected fields {list(DETECTION_FIELDS)}, got {got}")
    cls = rec["class_id"]
    if isinstance(cls, bool) or not isinstance(cls, int):
        raise StreamFormatError("class_id must be an integer")
    try:
        box = BBox(float(rec["x1"]), float(rec["y1"]), float(rec["x2"]), float(rec["y2"]))
        return Detection(float(rec["t"]), cls, box, float(rec["conf"]))
    except (TypeError, GeometryError) as exc:
        raise StreamFormatError(str(exc)) from exc


def read_detections(path: str | Path) -> list[Detection]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                out.append(record_to_detection(json.loads(line)))
            except (json.JSONDecodeError, StreamFormatError) as exc:
                raise StreamFormatError(f"{path}:{n}: {exc}") from exc
    return out


def write_detections(path: str | Path, dets: Iterable[Detection]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for d in dets:
            fh.write(json.dumps(detection_to_record(d)) + "\n")


def group_frames(dets: Iterable[Detection]) -> list[tuple[float, list[Detection]]]:
    """Group a stream into frames by timestamp; rejects time going backwards."""
    frames: list[tuple[float, list[Detection]]] = []
    for d in dets:
        if frames and d.t < frames[-1][0]:
            raise StreamFormatError(f"timestamp {d.t} earlier than {frames[-1][0]}")
        if frames and d.t == frames[-1][0]:
            frames[-1][1].append(d)
        else:
            frames.append((d.t, [d]))
    return frames

"""Detection-to-track association: gated IoU + appearance cost, Hungarian
matching, the track lifecycle and bisection search for lost targets."""
from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .estimation import KalmanFilter1D
from .geometry import BBox, Detection, iou

#: Marker for gated (disallowed) pairs in a cost matrix.
FORBIDDEN = math.inf


class TrackStatus(enum.Enum):
    ACTIVE = "ACTIVE"
    MISSING = "MISSING"
    REMOVED = "REMOVED"


# ---------------------------------------------------------------------------
# Hungarian algorithm
# ---------------------------------------------------------------------------

def _solve_square_or_wide(c: np.ndarray) -> np.ndarray:
    """Shortest augmenting path assignment for an n x m matrix with n <= m.

    Returns ``col_of_row`` of length n.  Kuhn-Munkres with dual potentials,
    O(n^2 m).
    """
    n, m = c.shape
    u = np.zeros(n + 1)
    v = np.zeros(m + 1)
    p = np.zeros(m + 1, dtype=int)    # p[j]: row (1-based) matched to column j
    way = np.zeros(m + 1, dtype=int)
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = np.full(m + 1, np.inf)
        used = np.zeros(m + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = p[j0]
            free = ~used[1:]
            cols = np.nonzero(free)[0] + 1
            cur = c[i0 - 1, cols - 1] - u[i0] - v[cols]
            better = cur < minv[cols]
            minv[cols[better]] = cur[better]
            way[cols[better]] = j0
            k = np.argmin(minv[cols])
            j1 = cols[k]
            delta = minv[j1]
            u[p[used]] += delta
            v[used] -= delta
            minv[~used] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
    col_of_row = np.full(n, -1, dtype=int)
    for j in range(1, m + 1):
        if p[j]:
            col_of_row[p[j] - 1] = j - 1
    return col_of_row


@dataclass
class Assignment:
    pairs: list[tuple[int, int]]
    unmatched_rows: list[int]
    unmatched_cols: list[int]
    cost: float


def hungarian(cost) -> Assignment:
    """Minimum-cost assignment on a (possibly rectangular) cost matrix.

    The reported cost is the correctly rounded sum of the matched entries, so
    it does not depend on summation order.

    Entries equal to ``FORBIDDEN`` (inf) are never matched.  Among all
    matchings the result first maximizes the number of allowed pairs, then
    minimizes their total cost.
    """
    c = np.asarray(cost, dtype=float)
    if c.ndim != 2:
        raise ValueError("cost matrix must be 2-D")
    n, m = c.shape
    if n == 0 or m == 0:
        return Assignment([], list(range(n)), list(range(m)), 0.0)
    allowed = np.isfinite(c)
    if np.any(c[allowed] < 0):
        raise ValueError("costs must be nonnegative")
    # a sentinel larger than any complete allowed matching
    big = (c[allowed].sum() if allowed.any() else 0.0) + 1.0
    work = np.where(allowed, c, big)
    if n <= m:
        col_of_row = _solve_square_or_wide(work)
        pairs = [(i, int(j)) for i, j in enumerate(col_of_row)]
    else:
        row_of_col = _solve_square_or_wide(work.T)
        pairs = sorted((int(i), j) for j, i in enumerate(row_of_col))
    pairs = [(i, j) for i, j in pairs if allowed[i, j]]
    rows = {i for i, _ in pairs}
    cols = {j for _, j in pairs}
    return Assignment(
        pairs,
        [i for i in range(n) if i not in rows],
        [j for j in range(m) if j not in cols],
        math.fsum(c[i, j] for i, j in pairs),
    )


def brute_force_assignment(cost) -> float:
    """Exhaustive minimum over injective maps; reference for small matrices."""
    c = np.asarray(cost, dtype=float)
    n, m = c.shape
    if n == 0 or m == 0:
        return 0.0
    if n > m:
        c = c.T
        n, m = m, n
    return min(math.fsum(c[i, j] for i, j in enumerate(p))
               for p in itertools.permutations(range(m), n))


# ---------------------------------------------------------------------------
# Tracks and costs
# ---------------------------------------------------------------------------

@dataclass
class Track:
    track_id: int
    class_id: int
    kx: KalmanFilter1D
    ky: KalmanFilter1D
    w: float
    h: float
    status: TrackStatus = TrackStatus.ACTIVE
    age: int = 0
    time_since_update: int = 0
    hits: int = 1
    confirmed: bool = False
    last_t: float = 0.0
    last_center: tuple[float, float] = (0.0, 0.0)
    hit_history: list[float] = field(default_factory=list)

    @property
    def center(self) -> tuple[float, float]:
        return self.kx.position, self.ky.position

    @property
    def velocity(self) -> tuple[float, float]:
        return self.kx.velocity, self.ky.velocity

    @property
    def bbox(self) -> BBox:
        cx, cy = self.center
        return BBox.from_center(cx, cy, max(self.w, 1e-6), max(self.h, 1e-6))

    def record_hit(self, t: float) -> None:
        self.hit_history.append(t)

    def hit_recently(self, t: float, window: float) -> bool:
        return any(t - window <= th <= t for th in self.hit_history)


AppearanceMetric = Callable[[Track, Detection], float]


def class_appearance(track: Track, det: Detection) -> float:
    """Default appearance distance: 0 for the same class (and color), 1 otherwise."""
    return 0.0 if track.class_id == det.class_id else 1.0


def build_cost(tracks: Sequence[Track], detections: Sequence[Detection], lam: float = 0.5,
               gate: float = 0.1, appearance: AppearanceMetric = class_appearance) -> np.ndarray:
    """Cost (1 - IoU) + lam * appearance for each track/detection pair.

    Pairs whose IoU falls below ``gate`` are set to ``FORBIDDEN``.
    """
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    c = np.full((len(tracks), len(detections)), FORBIDDEN)
    for i, trk in enumerate(tracks):
        box = trk.bbox
        for j, det in enumerate(detections):
            overlap = iou(box, det.bbox)
            if overlap < gate or overlap == 0.0:
                continue
            a = min(max(appearance(trk, det), 0.0), 1.0)
            c[i, j] = (1.0 - overlap) + lam * a
    return c


# ---------------------------------------------------------------------------
# Re-acquisition
# ---------------------------------------------------------------------------

def reacquire(track: Track, bound: BBox | tuple[float, float, float, float],
              box_size: tuple[float, float] | None = None) -> list[tuple[float, float, float, float]]:
    """Search regions for a lost track, finest first.

    The bound is bisected repeatedly; each level's region is centered on the
    Kalman-predicted position, pushed a quarter of its extent along the
    direction of motion, and clipped to the bound.  Halving stops once a
    dimension would drop below the detection box size.  Regions are returned
    from the smallest (closest to the prediction) to the whole bound.
    """
    bx1, by1, bx2, by2 = _coords(bound)
    bw, bh = bx2 - bx1, by2 - by1
    bw_box, bh_box = box_size if box_size is not None else (track.w, track.h)
    px, py = track.center
    px = min(max(px, bx1), bx2)
    py = min(max(py, by1), by2)
    if bw <= 0 or bh <= 0:
        return [(bx1, by1, bx2, by2)]
    vx, vy = track.velocity
    speed = math.hypot(vx, vy)
    dx, dy = (vx / speed, vy / speed) if speed > 1e-9 else (0.0, 0.0)

    sizes = [(bw, bh)]
    w, h = bw, bh
    while True:
        nw = w / 2 if w / 2 >= bw_box else w
        nh = h / 2 if h / 2 >= bh_box else h
        if (nw, nh) == (w, h):
            break
        w, h = nw, nh
        sizes.append((w, h))

    regions = []
    for w, h in sizes:
        cx = px + dx * w / 4
        cy = py + dy * h / 4
        x1 = min(max(cx - w / 2, bx1), bx2 - w)
        y1 = min(max(cy - h / 2, by1), by2 - h)
        regions.append((x1, y1, x1 + w, y1 + h))
    regions.reverse()
    return regions


def _coords(b) -> tuple[float, float, float, float]:
    if isinstance(b, BBox):
        return b.x1, b.y1, b.x2, b.y2
    x1, y1, x2, y2 = b
    return float(x1), float(y1), float(x2), float(y2)


# ---------------------------------------------------------------------------
# Tracker
# ---------------------------------------------------------------------------

@dataclass
class TrackerConfig:
    dt: float = 0.02
    lam: float = 0.5
    iou_gate: float = 0.1
    max_age: int = 30
    n_init: int = 3
    std_acc: float = 200.0
    std_meas: float = 2.0
    init_vel_var: float = 1.0e4
    reacquire_after: int = 1
    reacquire_radius: float = 160.0
    image_size: tuple[float, float] = (640.0, 480.0)


@dataclass
class TrackerReport:
    matched: list[tuple[int, int]]
    new_tracks: list[int]
    missing: list[int]
    removed: list[int]
    reacquired: list[int] = field(default_factory=list)


class Tracker:
    """Multi-target tracker stepped once per frame."""

    def __init__(self, config: TrackerConfig | None = None,
                 appearance: AppearanceMetric = class_appearance):
        self.config = config or TrackerConfig()
        self.appearance = appearance
        self.tracks: list[Track] = []
        self.removed: list[Track] = []
        self._next_id = 1
        self.frame = 0
        self._last_t = -math.inf

    def _new_track(self, det: Detection) -> Track:
        cfg = self.config
        cx, cy = det.bbox.center
        kx = KalmanFilter1D(cfg.dt, 0.0, cfg.std_acc, cfg.std_meas, x0=cx)
        ky = KalmanFilter1D(cfg.dt, 0.0, cfg.std_acc, cfg.std_meas, x0=cy)
        for kf in (kx, ky):
            kf.P = np.diag([cfg.std_meas ** 2, cfg.init_vel_var])
        trk = Track(self._next_id, det.class_id, kx, ky, det.bbox.width, det.bbox.height,
                    last_t=det.t, last_center=(cx, cy))
        trk.confirmed = cfg.n_init <= 1
        self._next_id += 1
        return trk

    def _apply(self, trk: Track, det: Detection) -> None:
        cx, cy = det.bbox.center
        trk.kx.update(cx)
        trk.ky.update(cy)
        trk.w, trk.h = det.bbox.width, det.bbox.height
        trk.hits = trk.hits + 1 if trk.time_since_update == 0 else 1
        trk.time_since_update = 0
        trk.status = TrackStatus.ACTIVE
        trk.last_t = det.t
        trk.last_center = (cx, cy)
        if trk.hits >= self.config.n_init:
            trk.confirmed = True

    @property
    def n_created(self) -> int:
        return self._next_id - 1

    @property
    def confirmed_tracks(self) -> list[Track]:
        return [t for t in self.tracks if t.confirmed]

    def get(self, track_id: int) -> Track | None:
        for t in itertools.chain(self.tracks, self.removed):
            if t.track_id == track_id:
                return t
        return None

    def step(self, detections: Sequence[Detection]) -> TrackerReport:
        cfg = self.config
        if detections:
            t_now = min(d.t for d in detections)
            if t_now < self._last_t:
                raise ValueError("detections must arrive in time order")
            self._last_t = max(d.t for d in detections)
        self.frame += 1
        for trk in self.tracks:
            trk.kx.predict(0.0)
            trk.ky.predict(0.0)
            trk.age += 1

        # recently updated tracks get first claim on ties
        order = sorted(range(len(self.tracks)), key=lambda i: self.tracks[i].time_since_update)
        tracks = [self.tracks[i] for i in order]
        dets = list(detections)
        result = hungarian(build_cost(tracks, dets, cfg.lam, cfg.iou_gate, self.appearance))
        matched = []
        for i, j in result.pairs:
            self._apply(tracks[i], dets[j])
            matched.append((tracks[i].track_id, j))
        free_tracks = [tracks[i] for i in result.unmatched_rows]
        free_dets = list(result.unmatched_cols)

        reacquired = self._reacquire(free_tracks, dets, free_dets, matched)

        report = TrackerReport(matched, [], [], [], reacquired)
        for trk in free_tracks:
            if any(trk.track_id == tid for tid in reacquired):
                continue
            trk.time_since_update += 1
            trk.hits = 0
            if not trk.confirmed or trk.time_since_update > cfg.max_age:
                trk.status = TrackStatus.REMOVED
                report.removed.append(trk.track_id)
            else:
                trk.status = TrackStatus.MISSING
                report.missing.append(trk.track_id)
        for j in free_dets:
            trk = self._new_track(dets[j])
            self.tracks.append(trk)
            report.new_tracks.append(trk.track_id)
        self.removed.extend(t for t in self.tracks if t.status is TrackStatus.REMOVED)
        self.tracks = [t for t in self.tracks if t.status is not TrackStatus.REMOVED]
        return report

    def _reacquire(self, free_tracks: list[Track], dets: list[Detection],
                   free_dets: list[int], matched: list) -> list[int]:
        cfg = self.config
        lost = [t for t in free_tracks
                if t.confirmed and t.time_since_update + 1 >= cfg.reacquire_after]
        if not lost or not free_dets:
            return []
        W, H = cfg.image_size
        r = cfg.reacquire_radius
        cost = np.full((len(lost), len(free_dets)), FORBIDDEN)
        for i, trk in enumerate(lost):
            lx, ly = trk.last_center
            bound = (max(0.0, lx - r), max(0.0, ly - r), min(W, lx + r), min(H, ly + r))
            regions = reacquire(trk, bound)
            for jj, j in enumerate(free_dets):
                det = dets[j]
                if det.class_id != trk.class_id:
                    continue
                cx, cy = det.bbox.center
                for level, (x1, y1, x2, y2) in enumerate(regions):
                    if x1 <= cx <= x2 and y1 <= cy <= y2:
                        px, py = trk.center
                        cost[i, jj] = level + math.hypot(cx - px, cy - py) / (2 * r + 1)
                        break
        res = hungarian(cost)
        out = []
        taken = []
        for i, jj in res.pairs:
            j = free_dets[jj]
            trk = lost[i]
            # restart the filter at the re-found position; velocity from the gap
            cx, cy = dets[j].bbox.center
            gap = max((trk.time_since_update + 1) * cfg.dt, cfg.dt)
            for kf, z, z0 in ((trk.kx, cx, trk.last_center[0]), (trk.ky, cy, trk.last_center[1])):
                kf.X = np.array([z, (z - z0) / gap])
                kf.P = np.diag([cfg.std_meas ** 2, cfg.init_vel_var])
            trk.time_since_update = 0
            self._apply(trk, dets[j])
            matched.append((trk.track_id, j))
            out.append(trk.track_id)
            taken.append(j)
        for j in taken:
            free_dets.remove(j)
        return out

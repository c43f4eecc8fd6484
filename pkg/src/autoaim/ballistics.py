"""Pellet drop compensation.

Measured ``(distance_cm, drop_px)`` pairs are fitted with a polynomial, KNN
or RBF support-vector regressor.  The fitted drop is turned into a pitch
offset through the camera's pixel focal length.
"""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .geometry import CameraModel


class BallisticsError(ValueError):
    pass


class InsufficientSamplesError(BallisticsError):
    pass


class RankDeficientError(BallisticsError):
    pass


class ExtrapolationWarning(UserWarning):
    pass


@dataclass(frozen=True)
class DropSample:
    distance_cm: float
    drop_px: float

    def __post_init__(self):
        if not (math.isfinite(self.distance_cm) and self.distance_cm > 0):
            raise BallisticsError(f"distance must be positive, got {self.distance_cm}")
        if not math.isfinite(self.drop_px):
            raise BallisticsError("drop must be finite")


@dataclass(frozen=True)
class ModelKind:
    name: str                 # "poly", "knn" or "svr"
    degree: int = 4
    k: int = 3
    C: float = 100.0
    epsilon: float = 0.01
    gamma: float = 1.0

    @classmethod
    def parse(cls, spec: str) -> "ModelKind":
        """``poly4``, ``poly5``, ``knn``, ``knn5``, ``svr``."""
        s = spec.strip().lower()
        if s.startswith("poly"):
            return cls("poly", degree=int(s[4:] or 4))
        if s.startswith("knn"):
            return cls("knn", k=int(s[3:] or 3))
        if s == "svr":
            return cls("svr")
        raise BallisticsError(f"unknown model kind {spec!r}")

    @property
    def label(self) -> str:
        if self.name == "poly":
            return f"poly{self.degree}"
        if self.name == "knn":
            return f"knn{self.k}"
        return "svr"


def poly(degree: int) -> ModelKind:
    return ModelKind("poly", degree=degree)


def knn(k: int = 3) -> ModelKind:
    return ModelKind("knn", k=k)


def svr(C: float = 100.0, epsilon: float = 0.01, gamma: float = 1.0) -> ModelKind:
    return ModelKind("svr", C=C, epsilon=epsilon, gamma=gamma)


@dataclass
class DropModel:
    kind: ModelKind
    x_mean: float = 0.0
    x_scale: float = 1.0
    y_mean: float = 0.0
    y_scale: float = 1.0
    coef: np.ndarray | None = None          # poly: beta_0..beta_n in standardized x
    train_x: np.ndarray | None = None
    train_y: np.ndarray | None = None
    alpha: np.ndarray | None = None         # svr
    alpha_star: np.ndarray | None = None
    bias: float = 0.0
    x_range: tuple[float, float] = (0.0, math.inf)
    fitted: bool = False

    def predict(self, distance_cm) -> np.ndarray | float:
        return predict_drop(self, distance_cm)


@dataclass
class FitReport:
    mse: float
    rmse: float
    mae: float
    r2: float | None      # None when the holdout has zero variance
    n: int = 0

    def as_row(self) -> dict:
        return {"mse": self.mse, "rmse": self.rmse, "mae": self.mae,
                "r2": "undefined" if self.r2 is None else self.r2, "n": self.n}


def _arrays(samples: Sequence[DropSample]) -> tuple[np.ndarray, np.ndarray]:
    x = np.array([s.distance_cm for s in samples], dtype=float)
    y = np.array([s.drop_px for s in samples], dtype=float)
    return x, y


def _rbf(a: np.ndarray, b: np.ndarray, gamma: float) -> np.ndarray:
    return np.exp(-gamma * (a[:, None] - b[None, :]) ** 2)


def _svr_dual(K: np.ndarray, y: np.ndarray, C: float, eps: float,
              tol: float = 1e-6, max_sweeps: int = 500) -> np.ndarray:
    """Coordinate descent on beta = alpha - alpha* for the epsilon-insensitive dual.

    minimize 0.5 b'Kb - y'b + eps |b|_1  s.t. |b_i| <= C.  The bias is folded
    into the kernel (K + 1), which removes the equality constraint.
    """
    n = len(y)
    beta = np.zeros(n)
    f = np.zeros(n)   # K @ beta
    diag = np.diag(K)
    for _ in range(max_sweeps):
        biggest = 0.0
        for i in range(n):
            g = y[i] - (f[i] - diag[i] * beta[i])
            new = np.sign(g) * max(abs(g) - eps, 0.0) / diag[i]
            new = min(max(new, -C), C)
            d = new - beta[i]
            if d != 0.0:
                f += d * K[:, i]
                beta[i] = new
                biggest = max(biggest, abs(d))
        if biggest < tol:
            break
    return beta


def fit(samples: Sequence[DropSample], kind: ModelKind | str) -> DropModel:
    if isinstance(kind, str):
        kind = ModelKind.parse(kind)
    x, y = _arrays(samples)
    n = len(x)
    m = DropModel(kind, x_range=(float(x.min()) if n else 0.0, float(x.max()) if n else 0.0))
    if kind.name == "poly":
        if n < kind.degree + 1:
            raise InsufficientSamplesError(f"poly{kind.degree} needs {kind.degree + 1} samples, got {n}")
        m.x_mean = float(x.mean())
        m.x_scale = float(x.std()) or 1.0
        xs = (x - m.x_mean) / m.x_scale
        V = np.vander(xs, kind.degree + 1, increasing=True)
        if np.linalg.matrix_rank(V) < kind.degree + 1:
            raise RankDeficientError("too few distinct distances for the requested degree")
        m.coef, *_ = np.linalg.lstsq(V, y, rcond=None)
    elif kind.name == "knn":
        if kind.k < 1 or n < kind.k:
            raise InsufficientSamplesError(f"knn needs at least k={kind.k} samples, got {n}")
        order = np.lexsort((y, x))
        m.train_x, m.train_y = x[order], y[order]
    elif kind.name == "svr":
        if n < 2:
            raise InsufficientSamplesError("svr needs at least 2 samples")
        m.x_mean, m.x_scale = float(x.mean()), float(x.std()) or 1.0
        m.y_mean, m.y_scale = float(y.mean()), float(y.std()) or 1.0
        xs = (x - m.x_mean) / m.x_scale
        ys = (y - m.y_mean) / m.y_scale
        K = _rbf(xs, xs, kind.gamma) + 1.0
        beta = _svr_dual(K, ys, kind.C, kind.epsilon)
        m.train_x = xs
        m.alpha = np.maximum(beta, 0.0)
        m.alpha_star = np.maximum(-beta, 0.0)
        m.bias = float(beta.sum())
    else:
        raise BallisticsError(f"unknown model kind {kind.name!r}")
    m.fitted = True
    return m


def _knn_one(m: DropModel, q: float) -> float:
    d = np.abs(m.train_x - q)
    kth = np.partition(d, m.kind.k - 1)[m.kind.k - 1]
    # every sample tied with the k-th neighbour joins the average
    chosen = np.sort(m.train_y[d <= kth])
    return float(chosen.mean())


def predict_drop(m: DropModel, distance_cm):
    if not m.fitted:
        raise BallisticsError("model is not fitted")
    q = np.atleast_1d(np.asarray(distance_cm, dtype=float))
    lo, hi = m.x_range
    if np.any(q < 0.5 * lo) or np.any(q > 1.5 * hi):
        warnings.warn(f"distance outside fitted range [{lo}, {hi}]", ExtrapolationWarning, stacklevel=2)
    name = m.kind.name
    if name == "poly":
        xs = (q - m.x_mean) / m.x_scale
        out = np.vander(xs, len(m.coef), increasing=True) @ m.coef
    elif name == "knn":
        out = np.array([_knn_one(m, v) for v in q])
    else:
        xs = (q - m.x_mean) / m.x_scale
        beta = m.alpha - m.alpha_star
        out = (_rbf(xs, m.train_x, m.kind.gamma) @ beta + m.bias) * m.y_scale + m.y_mean
    if np.ndim(distance_cm) == 0:
        return float(out[0])
    return out


def metrics(y_true, y_pred) -> FitReport:
    y = np.asarray(y_true, dtype=float)
    yh = np.asarray(y_pred, dtype=float)
    if y.size == 0:
        raise BallisticsError("empty holdout")
    resid = y - yh
    sse = float(np.sum(resid ** 2))
    mse = sse / y.size
    sst = float(np.sum((y - y.mean()) ** 2))
    r2 = None if sst == 0.0 else 1.0 - sse / sst
    return FitReport(mse, math.sqrt(mse), float(np.mean(np.abs(resid))), r2, int(y.size))


def score(m: DropModel, holdout: Sequence[DropSample]) -> FitReport:
    if not holdout:
        raise BallisticsError("empty holdout")
    x, y = _arrays(holdout)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ExtrapolationWarning)
        pred = predict_drop(m, x)
    return metrics(y, pred)


def split(samples: Sequence[DropSample], train_frac: float = 0.8,
          seed: int = 0) -> tuple[list[DropSample], list[DropSample]]:
    """Deterministic shuffled train/holdout split."""
    idx = np.random.default_rng(seed).permutation(len(samples))
    cut = int(round(train_frac * len(samples)))
    return [samples[i] for i in idx[:cut]], [samples[i] for i in idx[cut:]]


def drop_to_pitch(cam: CameraModel, drop_px: float) -> float:
    """Pitch offset (rad) that moves the aim point by ``drop_px`` pixels."""
    return math.atan(drop_px / cam.focal_px)


def synthetic_drops(n: int = 200, sigma: float = 0.1, seed: int = 0,
                    d_min: float = 50.0, d_max: float = 450.0,
                    coeffs: Sequence[float] = (0.5, 5.0e-3, 2.0e-5, 0.0, 1.0e-10)) -> list[DropSample]:
    """Noisy samples of a quartic drop curve (coefficients in increasing powers of cm)."""
    rng = np.random.default_rng(seed)
    d = np.sort(rng.uniform(d_min, d_max, n))
    y = np.polynomial.polynomial.polyval(d, coeffs) + rng.normal(0.0, sigma, n)
    return [DropSample(float(a), float(b)) for a, b in zip(d, y)]


def read_drop_csv(path: str | Path) -> list[DropSample]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["distance_cm", "drop_px"]:
            raise BallisticsError("drop CSV header must be 'distance_cm,drop_px'")
        return [DropSample(float(r["distance_cm"]), float(r["drop_px"])) for r in reader]


def write_drop_csv(path: str | Path, samples: Iterable[DropSample]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["distance_cm", "drop_px"])
        for s in samples:
            w.writerow([repr(s.distance_cm), repr(s.drop_px)])


def write_report_csv(path: str | Path, rows: dict[str, FitReport]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["model", "split", "mse", "rmse", "mae", "r2", "n"])
        for label, rep in rows.items():
            model, _, part = label.partition(":")
            r = rep.as_row()
            w.writerow([model, part or "holdout", r["mse"], r["rmse"], r["mae"], r["r2"], r["n"]])

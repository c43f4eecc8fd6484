"""Command line entry point: ``autoaim {track,simulate,fit,eval}``.

Exit codes: 0 success, 1 validation error, 2 runtime error.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from pathlib import Path

from . import ballistics, simharness
from .ballistics import BallisticsError
from .config import ConfigError, dump_config, load_config
from .geometry import Detection, GeometryError
from .io import StreamFormatError, group_frames, read_detections, write_detections
from .metrics import LabeledBox, count, mean_ap, precision, recall
from .pipeline import AimPipeline
from .scenario import load_scenario

log = logging.getLogger("autoaim")

EXIT_OK, EXIT_VALIDATION, EXIT_RUNTIME = 0, 1, 2

VALIDATION_ERRORS = (ConfigError, BallisticsError, GeometryError, StreamFormatError,
                     FileNotFoundError, IsADirectoryError)


def _fmt(v) -> str:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    return repr(v) if isinstance(v, float) else str(v)


def cmd_track(args) -> int:
    cfg = load_config(args.config)
    frames = group_frames(read_detections(args.input))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    pipe = AimPipeline(cfg)
    dt = cfg.estimation.dt
    with open(out / "tracks.csv", "w", newline="", encoding="utf-8") as ft, \
            open(out / "selection.csv", "w", newline="", encoding="utf-8") as fs:
        wt = csv.writer(ft, lineterminator="\n")
        ws = csv.writer(fs, lineterminator="\n")
        wt.writerow(["t", "track_id", "class_id", "status", "confirmed", "cx", "cy", "w", "h"])
        ws.writerow(["t", "sel_track", "x_ret", "y_ret", "x_pred", "y_pred", "distance_cm",
                     "pitch_comp", "d_yaw", "d_pitch"])
        for t, dets in frames:
            res = pipe.step(dets, t, dt)
            for trk in pipe.tracker.tracks:
                cx, cy = trk.center
                wt.writerow([_fmt(t), trk.track_id, trk.class_id, trk.status.value,
                             int(trk.confirmed), _fmt(cx), _fmt(cy), _fmt(trk.w), _fmt(trk.h)])
            s = res.selected
            ws.writerow([_fmt(t), -1 if s is None else s.track_id,
                         _fmt(s and s.x_ret), _fmt(s and s.y_ret), _fmt(s and s.x_pred),
                         _fmt(s and s.y_pred), _fmt(res.distance_cm), _fmt(res.pitch_comp),
                         _fmt(res.command.d_yaw), _fmt(res.command.d_pitch)])
    print(f"{len(frames)} frames, {pipe.tracker.n_created} tracks created, "
          f"{len(pipe.tracker.removed)} removed")
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    scn = load_scenario(args.scenario)
    if args.seed is not None:
        scn = scn.with_seed(args.seed)
    res = simharness.run(scn, cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "ticklog.csv").write_text(res.csv_text(), encoding="utf-8")
    (out / "summary.json").write_text(json.dumps(res.summary, indent=2, sort_keys=True) + "\n",
                                      encoding="utf-8")
    write_detections(out / "detections.jsonl", res.detections)
    write_detections(out / "truth.jsonl", [
        Detection(b.frame, b.class_id, b.bbox, 1.0) for b in res.truths])
    (out / "config.yaml").write_text(dump_config(cfg), encoding="utf-8")
    print(json.dumps({k: res.summary.get(k) for k in ("ticks", "mean_aim_err_px", "id_switches", "hits")}))
    return EXIT_OK


def cmd_fit(args) -> int:
    samples = ballistics.read_drop_csv(args.data)
    train, hold = ballistics.split(samples, 0.8, args.seed)
    model = ballistics.fit(train, args.model)
    kind = ballistics.ModelKind.parse(args.model)
    rows = {f"{kind.label}:train": ballistics.score(model, train)}
    if hold:
        rows[f"{kind.label}:holdout"] = ballistics.score(model, hold)
    if args.report:
        ballistics.write_report_csv(args.report, rows)
    for label, rep in rows.items():
        r2 = "undefined" if rep.r2 is None else f"{rep.r2:.7f}"
        print(f"{label:16s} mse={rep.mse:.7f} rmse={rep.rmse:.7f} mae={rep.mae:.7f} r2={r2}")
    return EXIT_OK


def cmd_eval(args) -> int:
    to_boxes = lambda ds: [LabeledBox(d.t, d.class_id, d.bbox, d.confidence) for d in ds]
    preds = to_boxes(read_detections(args.pred))
    truths = to_boxes(read_detections(args.truth))
    counts = count(preds, truths, args.iou)
    m = mean_ap(preds, truths, args.iou)
    result = {"iou": args.iou, "mAP": m.mean_ap, "excluded_classes": m.excluded, "classes": {}}
    for cls in sorted(counts):
        c = counts[cls]
        result["classes"][str(cls)] = {"TP": c.TP, "FP": c.FP, "FN": c.FN,
                                       "precision": precision(c), "recall": recall(c),
                                       "AP": m.per_class.get(cls)}
    print(json.dumps(result, indent=2))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="autoaim", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("track", help="run the pipeline over a recorded detection stream")
    t.add_argument("--input", required=True)
    t.add_argument("--config")
    t.add_argument("--out", required=True)
    t.set_defaults(func=cmd_track)

    s = sub.add_parser("simulate", help="closed-loop simulation of a scenario")
    s.add_argument("--scenario", required=True)
    s.add_argument("--config")
    s.add_argument("--seed", type=int)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_simulate)

    f = sub.add_parser("fit", help="fit a drop-compensation model to a CSV")
    f.add_argument("--data", required=True)
    f.add_argument("--model", default="knn", choices=["poly4", "poly5", "knn", "svr"])
    f.add_argument("--report")
    f.add_argument("--seed", type=int, default=0)
    f.set_defaults(func=cmd_fit)

    e = sub.add_parser("eval", help="precision / recall / mAP of predictions against truth")
    e.add_argument("--pred", required=True)
    e.add_argument("--truth", required=True)
    e.add_argument("--iou", type=float, default=0.5)
    e.set_defaults(func=cmd_eval)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_VALIDATION
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except VALIDATION_ERRORS as exc:
        log.error("%s", exc)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except Exception as exc:  # noqa: BLE001
        log.exception("runtime failure")
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())

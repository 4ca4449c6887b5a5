"""Single entry point: corpus, vision, eval, sim, serve and demo subcommands.

Exit codes: 0 success, 1 domain error, 2 usage error. Machine-readable output
goes to stdout, progress and diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from tollgate import __version__
from tollgate.corpus import font
from tollgate.corpus.dataset import generate_corpus, read_manifest, split_dataset
from tollgate.imaging import read_pgm
from tollgate.metrics import (
    NoGroundTruthError,
    evaluate,
    final_smoothed,
    ema_smooth,
    load_boxes_json,
    load_series_csv,
    report_table,
    report_to_json,
)
from tollgate.model import DomainError
from tollgate.sim import (
    BadFractionsError,
    DirectTarget,
    HttpTarget,
    SimConfig,
    TargetUnavailableError,
    run as sim_run,
)
from tollgate.vision import NoGlyphsError, NoPlateFoundError, append_csv, recognize


def _log(message: str) -> None:
    print(message, file=sys.stderr)


def cmd_corpus_generate(args) -> int:
    generate_corpus(
        count=args.count,
        plate_length=args.length,
        seed=args.seed,
        out_dir=args.out,
        noise_rate=args.noise,
    )
    _log(f"wrote {args.count} scenes to {args.out}")
    return 0


def cmd_corpus_split(args) -> int:
    rows = read_manifest(args.dir)
    split = split_dataset([r[0] for r in rows], args.test, args.seed)
    payload = {"train": list(split.train), "test": list(split.test)}
    text = json.dumps(payload, indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        _log(f"split {len(split.train)}/{len(split.test)} written to {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def cmd_vision_recognize(args) -> int:
    image = read_pgm(args.image)
    reading = recognize(image, image_id=Path(args.image).stem)
    if args.csv:
        append_csv(reading, args.csv)
    b = reading.detection.box
    payload = {
        "image_id": reading.image_id,
        "raw_text": reading.raw_text,
        "plate_text": reading.filtered_text,
        "confidence": round(reading.mean_char_score, 4),
        "box": [b.xmin, b.ymin, b.xmax, b.ymax],
        "detector_score": round(reading.detection.score, 4),
    }
    sys.stdout.write(json.dumps(payload, indent=2) + "\n")
    return 0


def cmd_vision_batch(args) -> int:
    images = sorted(Path(args.dir).glob("*.pgm"))
    if not images:
        _log(f"no .pgm files under {args.dir}")
        return 1
    done = failed = 0
    for path in images:
        try:
            reading = recognize(read_pgm(path), image_id=path.stem)
        except (NoPlateFoundError, NoGlyphsError) as exc:
            _log(f"{path.name}: {exc}")
            failed += 1
            continue
        append_csv(reading, args.csv)
        done += 1
    _log(f"recognized {done} images ({failed} unreadable) -> {args.csv}")
    return 0


def cmd_eval_detections(args) -> int:
    dets, scored = load_boxes_json(args.dets)
    truths, truth_scored = load_boxes_json(args.truths)
    if not scored or truth_scored:
        _log("expected --dets with scores and --truths without")
        return 1
    report = evaluate(dets, truths)
    if args.report:
        Path(args.report).write_text(report_to_json(report), encoding="utf-8")
    sys.stdout.write(report_to_json(report) if args.json else report_table(report))
    return 0


def cmd_eval_smooth(args) -> int:
    series = load_series_csv(args.series)
    smoothed = ema_smooth(series, args.weight)
    final = final_smoothed(series, args.weight)
    if args.json:
        payload = {
            "name": series.name,
            "weight": args.weight,
            "final": final,
            "points": [{"step": s, "value": v} for s, v in smoothed.points],
        }
        sys.stdout.write(json.dumps(payload, indent=2) + "\n")
    else:
        last_step = series.points[-1][0]
        sys.stdout.write(f"{series.name:<24}smoothed after {last_step} steps: {final:.5g}\n")
    return 0


def cmd_sim_run(args) -> int:
    config = SimConfig.from_file(args.config)
    if args.target:
        from tollgate.service.config import ServiceConfig

        if not args.service_config:
            _log("--target needs --service-config for the admin login and plaza keys")
            return 1
        svc = ServiceConfig.from_file(args.service_config)
        target = HttpTarget(args.target, svc.admin_email, svc.admin_password,
                            svc.plaza_keys, deadline_ticks=svc.deadline_ticks)
    else:
        target = DirectTarget(plazas=config.plazas)
    event_log: list = [] if args.events_csv else None
    report = sim_run(config, target, event_log=event_log)
    if args.events_csv and event_log is not None:
        import csv

        with open(args.events_csv, "w", encoding="utf-8", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(event_log[0].keys()))
            writer.writeheader()
            writer.writerows(event_log)
        _log(f"event log -> {args.events_csv}")
    sys.stdout.write(report.to_json() if args.json else report.table())
    return 0


def cmd_serve(args) -> int:
    from tollgate.service.api import serve

    serve(args.config)
    return 0


def cmd_demo(args) -> int:
    config = SimConfig(seed=42, n_vehicles=50, rfid_read_failure_rate=0.05,
                       scene_noise_rate=0.02, plazas=("P1", "P2"))
    _log("running a 50-vehicle simulation against an in-process service...")
    report = sim_run(config, DirectTarget(plazas=config.plazas))
    sys.stdout.write(report.to_json() if args.json else report.table())
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tollgate")
    parser.add_argument("--version", action="version",
                        version=f"tollgate {__version__} (font v{font.FONT_VERSION})")
    sub = parser.add_subparsers(dest="command", required=True)

    corpus = sub.add_parser("corpus", help="synthetic plate corpus").add_subparsers(
        dest="subcommand", required=True)
    gen = corpus.add_parser("generate", help="write scenes, VOC XML and a manifest")
    gen.add_argument("--count", type=int, default=433)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", required=True)
    gen.add_argument("--length", type=int, default=None, help="fixed plate length (default 4-8)")
    gen.add_argument("--noise", type=float, default=0.0, help="salt-and-pepper rate")
    gen.set_defaults(fn=cmd_corpus_generate)
    spl = corpus.add_parser("split", help="seeded train/test split of a corpus dir")
    spl.add_argument("--dir", required=True)
    spl.add_argument("--test", type=int, default=22)
    spl.add_argument("--seed", type=int, default=0)
    spl.add_argument("--out", default=None)
    spl.set_defaults(fn=cmd_corpus_split)

    vision = sub.add_parser("vision", help="plate recognition").add_subparsers(
        dest="subcommand", required=True)
    rec = vision.add_parser("recognize", help="read one PGM image")
    rec.add_argument("image")
    rec.add_argument("--csv", default=None)
    rec.set_defaults(fn=cmd_vision_recognize)
    batch = vision.add_parser("batch", help="recognize every PGM in a directory")
    batch.add_argument("dir")
    batch.add_argument("--csv", required=True)
    batch.set_defaults(fn=cmd_vision_batch)

    ev = sub.add_parser("eval", help="detection metrics and log smoothing").add_subparsers(
        dest="subcommand", required=True)
    det = ev.add_parser("detections", help="AP/AR report from detections + truths JSON")
    det.add_argument("--dets", required=True)
    det.add_argument("--truths", required=True)
    det.add_argument("--report", default=None)
    det.add_argument("--json", action="store_true")
    det.set_defaults(fn=cmd_eval_detections)
    sm = ev.add_parser("smooth", help="debiased exponential smoothing of step,value CSV")
    sm.add_argument("--series", required=True)
    sm.add_argument("--weight", type=float, default=0.6)
    sm.add_argument("--json", action="store_true")
    sm.set_defaults(fn=cmd_eval_smooth)

    simp = sub.add_parser("sim", help="traffic simulation").add_subparsers(
        dest="subcommand", required=True)
    runp = simp.add_parser("run", help="drive an engine or a running service")
    runp.add_argument("--config", required=True)
    runp.add_argument("--target", default=None, help="service base URL (default: in-process)")
    runp.add_argument("--service-config", default=None)
    runp.add_argument("--json", action="store_true")
    runp.add_argument("--events-csv", default=None)
    runp.set_defaults(fn=cmd_sim_run)

    serve_p = sub.add_parser("serve", help="run the central service")
    serve_p.add_argument("--config", required=True)
    serve_p.set_defaults(fn=cmd_serve)

    demo = sub.add_parser("demo", help="end-to-end demo against an in-process service")
    demo.add_argument("--json", action="store_true")
    demo.set_defaults(fn=cmd_demo)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (DomainError, NoPlateFoundError, NoGlyphsError, NoGroundTruthError,
            BadFractionsError, TargetUnavailableError, ValueError, OSError) as exc:
        _log(f"error: {exc}")
        return 1


if __name__ == "__main__":
    sys.exit(main())

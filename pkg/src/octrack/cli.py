"""Command-line interface.

Subcommands:
  gen    scenario spec (JSON) -> gt/detection/embedding files
  track  detections + embeddings + config -> MOT result file
  eval   gt + results -> report, per-event CSV, duration histogram
  sweep  threshold grid -> CSV + heatmap figures
  suite  seeded acceptance suite; exit code signals pass/fail

Exit codes: 0 success, 1 input error, 2 acceptance-suite failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import figures, mot_io, sweep as sweep_mod, suite as suite_mod
from .config import ConfigError, TrackerConfig, load_config
from .evaluation import evaluate
from .mot_io import ParseError
from .synth import GenerationError, generate, spec_from_json


def _load_cfg(path) -> TrackerConfig:
    return load_config(path) if path else TrackerConfig()


def cmd_gen(args) -> int:
    spec = spec_from_json(Path(args.spec).read_text(encoding="utf-8"))
    bundle = generate(spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    gt_rows = []
    for ident in bundle.gt.identities():
        for frame, box in sorted(bundle.gt.boxes[ident].items()):
            gt_rows.append((frame, ident, box, 1.0))
    mot_io.write_results(gt_rows, out / "gt.txt")
    mot_io.write_detections(bundle.detections, out / "det.txt")

    emb_table = {(f, d.source_index): d.feature
                 for f, dets in bundle.detections.items() for d in dets}
    if args.binary_embeddings:
        mot_io.write_embeddings_binary(emb_table, out / "emb.bin",
                                       bundle.meta["dim"])
    else:
        mot_io.write_embeddings_csv(emb_table, out / "emb.csv")
    print(f"wrote gt/detections/embeddings for {spec.n_frames} frames to {out}")
    return 0


def cmd_track(args) -> int:
    config = _load_cfg(args.config)
    detections = mot_io.read_detections(args.detections, args.embeddings)
    from .pipeline import run_pipeline

    rows = run_pipeline(detections, config)
    mot_io.write_results(rows, args.out)
    print(f"wrote {len(rows)} result rows to {args.out}")
    return 0


def cmd_eval(args) -> int:
    gt = mot_io.read_trajectories(args.gt, role="ground-truth")
    pred = mot_io.read_trajectories(args.results, role="prediction")
    report = evaluate(gt, pred, tau_long=args.tau_long)

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.txt").write_text(report.to_text(), encoding="utf-8")
    (out / "events.csv").write_text(report.events_csv(), encoding="utf-8")
    figures.render_duration_histogram(report.events, out / "duration_hist.png",
                                      tau_long=args.tau_long)
    sys.stdout.write(report.to_text())
    return 0


def cmd_sweep(args) -> int:
    grid = json.loads(Path(args.grid).read_text(encoding="utf-8"))
    config = _load_cfg(args.config)
    specs = suite_mod.build_crossing_suite(n=args.scenarios,
                                           master_seed=args.master_seed)
    rows = sweep_mod.sweep(grid, specs, config, workers=args.workers)

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "sweep.csv").write_text(sweep_mod.rows_to_csv(rows), encoding="utf-8")

    varying = [k for k, v in grid.items()
               if len(v) > 1 and all(isinstance(x, (int, float)) for x in v)]
    if len(varying) == 2:
        for metric in ("idf1", "switch_mean", "long_ratio"):
            figures.render_sweep_heatmap(rows, varying[0], varying[1], metric,
                                         out / f"heatmap_{metric}.png")
    print(f"wrote {len(rows)} sweep rows to {out / 'sweep.csv'}")
    return 0


def cmd_suite(args) -> int:
    config = _load_cfg(args.config)
    checks, agg_c, agg_b, lines = suite_mod.run_acceptance_suite(
        config, master_seed=args.master_seed)
    text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    if args.out_dir:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "suite_report.txt").write_text(text, encoding="utf-8")
        figures.render_suite_comparison(agg_b, agg_c,
                                        out / "suite_comparison.png")
    return 0 if all(c.passed for c in checks) else 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="octrack",
        description="Overlap-aware multi-object tracking with post-association "
                    "identity correction")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="render a scenario spec to files")
    p.add_argument("spec", help="scenario spec JSON file")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--binary-embeddings", action="store_true",
                   help="write the packed binary sidecar instead of CSV")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("track", help="run the tracker over a detection file")
    p.add_argument("--detections", required=True)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--config", default=None, help="key=value config file")
    p.add_argument("--out", required=True, help="MOT result file to write")
    p.set_defaults(func=cmd_track)

    p = sub.add_parser("eval", help="score results against ground truth")
    p.add_argument("--gt", required=True)
    p.add_argument("--results", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--tau-long", type=int, default=10)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="threshold/similarity/stage ablation sweep")
    p.add_argument("--grid", required=True, help="JSON {param: [values...]}")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--scenarios", type=int, default=20,
                   help="number of crossing scenarios per cell")
    p.add_argument("--master-seed", type=int,
                   default=suite_mod.DEFAULT_MASTER_SEED)
    p.add_argument("--workers", type=int, default=None,
                   help="override FC_TRACK_THREADS / cpu count")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("suite", help="run the seeded acceptance suite")
    p.add_argument("--out-dir", default=None)
    p.add_argument("--config", default=None)
    p.add_argument("--master-seed", type=int,
                   default=suite_mod.DEFAULT_MASTER_SEED)
    p.set_defaults(func=cmd_suite)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ParseError, GenerationError, FileNotFoundError,
            json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

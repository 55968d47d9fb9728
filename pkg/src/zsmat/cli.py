"""Command-line front end: synth | threshold | track | eval | report.

Exit codes: 0 on success, 1 on validation or configuration errors, 2 when a
segmenter failure aborts tracking.
"""

from __future__ import annotations

import argparse
import json
import shlex
import sys
from pathlib import Path

from .conformance import run_conformance, transport_exchange
from .errors import ConfigError, TrackingAbort, ValidationError
from .formats import (
    MotRow,
    config_to_text,
    load_config,
    load_detections,
    load_mot,
    mot_table,
    save_detections,
    save_mot,
)
from .metrics import SequenceEval, aggregate, evaluate
from .pipeline import (
    events_to_json_lines,
    results_to_mot_rows,
    threshold_report_to_dict,
    compute_threshold,
    track_sequence,
)
from .presets import PRESETS
from .protocol import SubprocessTransport, TcpTransport, WireSession
from .report import build_report
from .world import generate, oracle_session, scenario_from_dict, scenario_to_dict
from . import __version__


def _load_scenario(path: Path):
    with open(path, "r", encoding="utf-8") as fh:
        return scenario_from_dict(json.load(fh))


def cmd_synth(args) -> int:
    if (args.scenario is None) == (args.preset is None):
        raise ConfigError("give exactly one of --scenario or --preset")
    if args.preset is not None:
        if args.preset not in PRESETS:
            raise ConfigError(f"unknown preset {args.preset!r}; choose from {sorted(PRESETS)}")
        cfg = PRESETS[args.preset]() if args.seed is None else PRESETS[args.preset](seed=args.seed)
    else:
        cfg = _load_scenario(Path(args.scenario))
        if args.seed is not None:
            cfg = scenario_from_dict({**scenario_to_dict(cfg), "seed": args.seed})
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    gt, detections = generate(cfg)
    save_detections(out / "detections.jsonl", {f: d for f, d in enumerate(detections)})
    save_mot(
        out / "gt.txt",
        [
            MotRow(frame=r.frame, track_id=r.object_id, bbox=r.bbox, conf=1.0, cls=1, visibility=r.visibility)
            for r in gt.rows
        ],
    )
    (out / "scenario.json").write_text(json.dumps(scenario_to_dict(cfg), indent=2) + "\n")
    print(f"wrote {out / 'gt.txt'}, {out / 'detections.jsonl'}, {out / 'scenario.json'}")
    return 0


def cmd_threshold(args) -> int:
    cfg = load_config(args.config)
    by_frame = load_detections(args.detections)
    report = compute_threshold(by_frame, cfg)
    print(f"tau = {report.tau:.6f}  (mode={report.mode}, scores={report.n_scores})")
    if report.split is not None:
        s = report.split
        print(f"clusters: mu1={s.mu1:.4f} (n={s.n1})  mu2={s.mu2:.4f} (n={s.n2})")
    print("bin_lo,bin_hi,count,cluster")
    for row in report.histogram:
        print(f"{row['lo']:.3f},{row['hi']:.3f},{row['count']},{row['cluster']}")
    if args.out:
        Path(args.out).write_text(json.dumps(threshold_report_to_dict(report), indent=2) + "\n")
    return 0


def _open_segmenter(spec: str, detections_path: Path):
    """Build a session plus the sequence geometry from a segmenter spec.

    ``oracle`` (scenario.json next to the detections file), ``oracle:PATH``,
    ``exec:COMMAND`` or ``tcp:HOST:PORT``.  For wire segmenters the geometry
    must come from --size/--frames.
    """
    if spec == "oracle" or spec.startswith("oracle:"):
        if ":" in spec:
            scenario_path = Path(spec.split(":", 1)[1])
        else:
            scenario_path = detections_path.parent / "scenario.json"
        if not scenario_path.exists():
            raise ConfigError(f"oracle segmenter needs a scenario file, {scenario_path} not found")
        scenario = _load_scenario(scenario_path)
        return oracle_session(scenario), (scenario.width, scenario.height, scenario.frames)
    if spec.startswith("exec:"):
        return WireSession(SubprocessTransport(shlex.split(spec[5:]))), None
    if spec.startswith("tcp:"):
        host, _, port = spec[4:].rpartition(":")
        if not host or not port.isdigit():
            raise ConfigError(f"tcp segmenter spec must be tcp:HOST:PORT, got {spec!r}")
        return WireSession(TcpTransport(host, int(port))), None
    raise ConfigError(f"unknown segmenter spec {spec!r}")


def cmd_track(args) -> int:
    cfg = load_config(args.config)
    detections_path = Path(args.detections)
    by_frame = load_detections(detections_path)
    session, geometry = _open_segmenter(args.segmenter, detections_path)
    if geometry is None:
        if args.size is None or args.frames is None:
            raise ConfigError("wire segmenters need --size WxH and --frames N")
        try:
            w, h = (int(v) for v in args.size.lower().split("x"))
        except ValueError:
            raise ConfigError(f"--size must look like 640x480, got {args.size!r}") from None
        geometry = (w, h, args.frames)
    width, height, frames = geometry

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    results, report = track_sequence(
        by_frame, session, args.sequence_id, width, height, frames, cfg
    )
    save_mot(out / "results.txt", results_to_mot_rows(results))
    (out / "events.jsonl").write_text("\n".join(events_to_json_lines(results)) + "\n")
    (out / "threshold.json").write_text(
        json.dumps(threshold_report_to_dict(report), indent=2) + "\n"
    )
    (out / "run_config.txt").write_text(config_to_text(cfg))
    n_outputs = sum(len(r.outputs) for r in results)
    print(f"tracked {frames} frames, tau={report.tau:.4f}, wrote {n_outputs} boxes to {out / 'results.txt'}")
    return 0


def _eval_pairs(gt_path: Path, pred_path: Path) -> list[tuple[str, Path, Path]]:
    if gt_path.is_dir() != pred_path.is_dir():
        raise ValidationError("--gt and --pred must both be files or both be directories")
    if not gt_path.is_dir():
        return [(gt_path.stem, gt_path, pred_path)]
    pairs = []
    for gt_file in sorted(gt_path.glob("*.txt")):
        pred_file = pred_path / gt_file.name
        if not pred_file.exists():
            raise ValidationError(f"prediction file missing for sequence {gt_file.name}")
        pairs.append((gt_file.stem, gt_file, pred_file))
    if not pairs:
        raise ValidationError(f"no .txt ground-truth files found in {gt_path}")
    return pairs


def _eval_to_dict(e: SequenceEval) -> dict:
    return {
        "hota": e.hota,
        "deta": e.deta,
        "assa": e.assa,
        "detre": e.detre,
        "loca": e.loca,
        "mota": e.mota,
        "idf1": e.idf1,
        "idsw": e.idsw,
    }


_EVAL_HEADER = f"{'sequence':<20}{'HOTA':>8}{'DetA':>8}{'AssA':>8}{'DetRe':>8}{'LocA':>8}{'MOTA':>8}{'IDF1':>8}{'IDSW':>6}"


def _eval_line(name: str, e: SequenceEval) -> str:
    return (
        f"{name:<20}{e.hota:>8.3f}{e.deta:>8.3f}{e.assa:>8.3f}{e.detre:>8.3f}"
        f"{e.loca:>8.3f}{e.mota:>8.3f}{e.idf1:>8.3f}{e.idsw:>6d}"
    )


def cmd_eval(args) -> int:
    pairs = _eval_pairs(Path(args.gt), Path(args.pred))
    per_seq: dict[str, SequenceEval] = {}
    weights: list[float] = []
    for name, gt_file, pred_file in pairs:
        gt_rows = load_mot(gt_file)
        pred_rows = load_mot(pred_file)
        per_seq[name] = evaluate(mot_table(gt_rows), mot_table(pred_rows))
        weights.append(len(gt_rows))
    pooled = aggregate(list(per_seq.values()), weights)

    lines = [_EVAL_HEADER]
    for name, e in per_seq.items():
        lines.append(_eval_line(name, e))
    lines.append(_eval_line("POOLED", pooled))
    table = "\n".join(lines)
    print(table)

    payload = {
        "sequences": {name: _eval_to_dict(e) for name, e in per_seq.items()},
        "pooled": _eval_to_dict(pooled),
        "weights": {name: w for (name, _, _), w in zip(pairs, weights)},
    }
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    json_path = out if out.suffix == ".json" else out.with_suffix(".json")
    json_path.write_text(json.dumps(payload, indent=2) + "\n")
    json_path.with_suffix(".txt").write_text(table + "\n")
    return 0


def cmd_report(args) -> int:
    paths = build_report([Path(r) for r in args.runs], Path(args.out))
    for p in paths:
        print(f"wrote {p}")
    return 0


def cmd_conform(args) -> int:
    transport = SubprocessTransport(shlex.split(args.command))
    try:
        w, h = (int(v) for v in args.size.lower().split("x"))
    except ValueError:
        raise ConfigError(f"--size must look like 640x480, got {args.size!r}") from None
    violations = run_conformance(
        transport_exchange(transport), w, h, args.frames, seed=args.seed
    )
    transport.close()
    if violations:
        for v in violations:
            print(f"VIOLATION: {v}")
        return 1
    print("conformance: ok")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="zs-mat", description=__doc__)
    parser.add_argument("--version", action="version", version=f"zs-mat {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic sequence (GT, detections, scenario echo)")
    p.add_argument("--scenario", help="scenario JSON file")
    p.add_argument("--preset", help=f"built-in scenario: {', '.join(sorted(PRESETS))}")
    p.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("threshold", help="compute the sequence detection threshold")
    p.add_argument("--detections", required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--out", default=None, help="also write the report as JSON")
    p.set_defaults(func=cmd_threshold)

    p = sub.add_parser("track", help="run the tracking pipeline over a detections file")
    p.add_argument("--detections", required=True)
    p.add_argument("--segmenter", required=True, help="oracle[:scenario.json] | exec:CMD | tcp:HOST:PORT")
    p.add_argument("--config", default=None)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--sequence-id", default="seq")
    p.add_argument("--size", default=None, help="frame size WxH (wire segmenters)")
    p.add_argument("--frames", type=int, default=None, help="frame count (wire segmenters)")
    p.set_defaults(func=cmd_track)

    p = sub.add_parser("eval", help="evaluate tracking results against ground truth")
    p.add_argument("--gt", required=True, help="GT file or directory of files")
    p.add_argument("--pred", required=True, help="results file or directory")
    p.add_argument("--out", required=True, help="report path prefix (.json/.txt)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("report", help="plot-data tables from finished run directories")
    p.add_argument("--runs", nargs="+", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("conform", help="run the protocol conformance suite against a segmenter command")
    p.add_argument("--command", required=True, help="segmenter server command line (stdio transport)")
    p.add_argument("--size", default="64x48")
    p.add_argument("--frames", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_conform)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValidationError, ConfigError, FileNotFoundError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except TrackingAbort as e:
        print(f"tracking aborted: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

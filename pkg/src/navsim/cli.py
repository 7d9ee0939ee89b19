"""Command line entry point.

Subcommands: calibrate (stamp a metric reference onto a map), tables
(evaluate bundled or external checkpoint fixtures), replay (stream
guidance over a recorded frame log), evaluate (synthetic next-step
accuracy), serve (interactive walkthrough over WebSocket).

stdout carries data only; diagnostics go to stderr. Exit codes: 0
success, 1 validation or domain failure, 2 usage error.
"""

import argparse
import os
import statistics
import sys
from pathlib import Path

from . import evaluation, service
from .calibration import REFERENCE_STEP, table_to_csv
from .errors import NavsimError
from .guidance import GuidanceConfig, Orientation
from .mapio import load_map, load_replay, bind_replay, save_map
from .session import SessionMode, start_session

ENV_SEED = "NAVSIM_SEED"


def _load_map_file(path: str):
    return load_map(Path(path).read_bytes())


def cmd_calibrate(args) -> int:
    world = _load_map_file(args.map)
    world.scale_reference_cm = float(args.reference_cm)
    out = Path(args.out) if args.out else Path(args.map)
    out.write_bytes(save_map(world))
    print(f"{args.reference_cm / REFERENCE_STEP:.9g} cm per map unit")
    return 0


def _format_table(report: evaluation.TableReport) -> str:
    lines = [f"[{report.map_name}] reference {report.reference_cm:.9g} cm per 0.1 units"]
    lines.append("label  map_distance  approx_cm  actual_cm  error_cm")
    for r in report.rows:
        lines.append(
            f"{r.label:<6} {r.map_distance:<13.9g} {r.approx_cm:<10.1f}"
            f" {r.actual_cm:<10.9g} {r.error_cm:.1f}"
        )
    lines.append(f"table MAE {report.mae_cm:.2f}")
    return "\n".join(lines)


def cmd_tables(args) -> int:
    if args.fixtures:
        paths = sorted(Path(args.fixtures).glob("*.json"))
        if not paths:
            raise NavsimError(f"no fixture maps found in {args.fixtures}")
        worlds = [load_map(p.read_bytes()) for p in paths]
    else:
        worlds = None
    tables, mae = evaluation.reproduce_checkpoint_tables(worlds)
    if args.csv:
        all_rows = [row for t in tables for row in t.rows]
        sys.stdout.write(table_to_csv(all_rows))
    else:
        for t in tables:
            print(_format_table(t))
            print()
    print(f"MAE {mae:.2f}")
    return 0


def _config_from(args) -> GuidanceConfig:
    return GuidanceConfig(
        deviation_threshold_cm=args.threshold_cm,
        obstacle_threshold_cm=args.threshold_cm,
        lookahead=args.lookahead,
        orientation=Orientation(args.orientation),
    )


def cmd_replay(args) -> int:
    world = _load_map_file(args.map)
    frames = load_replay(Path(args.log).read_bytes())
    bind_replay(frames, world)
    cfg = _config_from(args)
    session = start_session(world, cfg, SessionMode.ONLINE)
    out = open(args.out, "w", encoding="utf-8") if args.out else sys.stdout
    try:
        out.write(
            f"# threshold_cm={args.threshold_cm:.9g} lookahead={args.lookahead}"
            f" orientation={args.orientation}\n"
        )
        for frame in frames:
            out.write(session.process_frame(frame).to_json_line() + "\n")
    finally:
        if args.out:
            out.close()
    return 0


def cmd_evaluate(args) -> int:
    base_seed = int(os.environ.get(ENV_SEED, "0"))
    seeds = [base_seed + i for i in range(args.seeds)]
    cfg = GuidanceConfig(
        lookahead=args.k,
        colinear_epsilon=evaluation.EVAL_COLINEAR_EPSILON,
        orientation=Orientation(args.orientation),
    )
    shape_keys = list(evaluation.SHAPES) if args.shape == "all" else [args.shape]

    all_reports = []
    for key in shape_keys:
        reports = evaluation.accuracy_over_seeds(
            evaluation.SHAPES[key], args.noise_sigma, seeds, cfg
        )
        all_reports.extend(reports)
        for r in reports:
            print(
                f"{r.map_name} keyframes={r.total} tp={r.true_positives}"
                f" accuracy={r.accuracy_percent:.2f}%"
            )
        if len(reports) > 1:
            values = [r.accuracy_percent for r in reports]
            print(
                f"{key} mean={statistics.mean(values):.2f}%"
                f" stddev={statistics.pstdev(values):.2f}% over {len(values)} seeds"
            )
    if len(shape_keys) > 1:
        unweighted, weighted = evaluation.overall_accuracy(all_reports)
        print(f"overall unweighted={unweighted:.2f}% weighted={weighted:.2f}%")
    return 0


def cmd_serve(args) -> int:
    world = _load_map_file(args.map)
    cfg = _config_from(args)
    server = service.serve(world, cfg, host=args.host, port=args.port)
    host, port = server.socket.getsockname()[:2]
    print(f"serving {world.name} on ws://{host}:{port}")
    sys.stdout.flush()
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        print("interrupted", file=sys.stderr)
    finally:
        server.shutdown()
    return 0


def _positive_float(text: str) -> float:
    value = float(text)
    if value <= 0:
        raise argparse.ArgumentTypeError(f"{text} must be > 0")
    return value


def _non_negative_float(text: str) -> float:
    value = float(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"{text} must be >= 0")
    return value


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"{text} must be >= 1")
    return value


def _add_guidance_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--threshold-cm", type=_positive_float, default=60.0,
                   help="alert threshold in centimetres (default 60)")
    p.add_argument("--lookahead", type=_positive_int, default=5,
                   help="keyframes looked ahead for the turn test (default 5)")
    p.add_argument("--orientation", choices=[o.value for o in Orientation],
                   default=Orientation.PLAN_VIEW.value,
                   help="cross-product sign convention (default plan_view)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="navsim",
        description="Path-following guidance tools over monocular SLAM maps.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("calibrate", help="stamp a metric scale reference onto a map")
    p.add_argument("--map", required=True)
    p.add_argument("--reference-cm", type=_positive_float, required=True,
                   help="centimetres that 0.1 map units correspond to")
    p.add_argument("--out", help="write here instead of updating --map in place")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("tables", help="evaluate checkpoint tables on fixture maps")
    p.add_argument("--fixtures", help="directory of map files (default: bundled)")
    p.add_argument("--csv", action="store_true", help="machine-readable output")
    p.set_defaults(func=cmd_tables)

    p = sub.add_parser("replay", help="stream guidance over a recorded frame log")
    p.add_argument("--map", required=True)
    p.add_argument("--log", required=True)
    _add_guidance_flags(p)
    p.add_argument("--out", help="write guidance stream here instead of stdout")
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("evaluate", help="next-step accuracy on synthetic maps")
    p.add_argument("--shape", required=True,
                   choices=[*evaluation.SHAPES.keys(), "all"])
    p.add_argument("--noise-sigma", type=_non_negative_float, default=0.0,
                   help="lateral keyframe noise in map units (default 0)")
    p.add_argument("--seeds", type=_positive_int, default=1,
                   help="number of seeds starting at the base seed (default 1)")
    p.add_argument("--k", type=_positive_int, default=5,
                   help="lookahead keyframe count (default 5)")
    p.add_argument("--orientation", choices=[o.value for o in Orientation],
                   default=Orientation.PLAN_VIEW.value)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("serve", help="interactive walkthrough over WebSocket")
    p.add_argument("--map", required=True)
    p.add_argument("--host", default=service.DEFAULT_HOST)
    p.add_argument("--port", type=int, default=service.DEFAULT_PORT)
    _add_guidance_flags(p)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except NavsimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

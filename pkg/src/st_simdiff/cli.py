"""Command-line interface: compress, stats, sweep, gen, bench.

Exit codes are part of the contract:
  0  success
  2  usage errors (argparse: unknown flags, malformed values, empty grids)
  3  input/output or container format errors
  4  validation errors (bad parameter values, shapes, empty domains)
  5  internal errors (reference guards, resource exhaustion, bugs)
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time

from . import SCHEMA_VERSION, __version__
from .bench import BASELINE, doubling_ratios, run_quadratic_baseline, run_scaling
from .budget import ExternalScores, MeanCosineProxy, UniformImportance
from .communities import threshold_components
from .errors import FormatError, StSimDiffError, ValidationError
from .events import FixedThreshold, PercentileThreshold, resolve_threshold, temporal_diff_profile
from .graph import build_graph, edge_stats
from .grid import MovingPatch, SyntheticSpec, generate_synthetic, load_grid, save_grid, validate_grid
from .pipeline import SelectionConfig, run_pipeline

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_FORMAT = 3
EXIT_VALIDATION = 4
EXIT_INTERNAL = 5

_EPILOG = __doc__[__doc__.index("Exit codes"):]

_DEFAULT_TAU_SIM_GRID = "0.6,0.7,0.8,0.85,0.9,0.95"
_DEFAULT_TAU_DIFF_GRID = "0.1,0.2,0.3,0.4"
_DEFAULT_BENCH_SIZES = "16384,32768,65536,131072,262144"


def _importance_arg(text: str):
    if text == "proxy":
        return MeanCosineProxy()
    if text == "uniform":
        return UniformImportance()
    if text.startswith("external:"):
        path = text[len("external:"):]
        if not path:
            raise argparse.ArgumentTypeError("external importance needs a path")
        return ExternalScores(path=path)
    raise argparse.ArgumentTypeError(
        f"importance must be proxy, uniform, or external:PATH, got {text!r}"
    )


def _cap_arg(text: str):
    if text == "auto":
        return None
    try:
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"community cap must be 'auto' or an integer, got {text!r}")


def _float_list(text: str) -> list[float]:
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated float list: {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("grid must be nonempty")
    return values


def _int_list(text: str) -> list[int]:
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated integer list: {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("size list must be nonempty")
    return values


def _patch_arg(text: str) -> MovingPatch:
    parts = text.split(",")
    if len(parts) != 7:
        raise argparse.ArgumentTypeError(
            "patch spec is rows,cols,row0,col0,drow,dcol,offset"
        )
    try:
        rows, cols, row0, col0, drow, dcol = (int(v) for v in parts[:6])
        offset = float(parts[6])
    except ValueError:
        raise argparse.ArgumentTypeError(f"malformed patch spec {text!r}")
    return MovingPatch(rows=rows, cols=cols, row0=row0, col0=col0,
                       drow=drow, dcol=dcol, offset=offset)


def _selection_flags() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--ratio", type=float, default=0.3,
                        help="token retain ratio in (0, 1] (default 0.3)")
    parent.add_argument("--tau-sim", type=float, default=0.8,
                        help="similarity threshold for community edges (default 0.8)")
    parent.add_argument("--tau-diff", type=float, default=0.2,
                        help="temporal difference threshold, fixed mode (default 0.2)")
    parent.add_argument("--diff-mode", choices=("fixed", "percentile"), default="fixed",
                        help="how the event threshold is chosen (default fixed)")
    parent.add_argument("--percentile", type=float, default=95.0,
                        help="difference-score percentile for percentile mode (default 95)")
    parent.add_argument("--community-cap", type=_cap_arg, default=None, metavar="auto|K",
                        help="max community size before split (default auto = ceil(sqrt(N)))")
    parent.add_argument("--importance", type=_importance_arg, default=MeanCosineProxy(),
                        metavar="proxy|uniform|external:PATH",
                        help="importance provider for budget trim/fill (default proxy)")
    parent.add_argument("--no-fill", action="store_true",
                        help="do not fill up to the budget when candidates fall short")
    parent.add_argument("--threads", type=int, default=None,
                        help="worker threads (default: ST_SIMDIFF_THREADS or 1)")
    return parent


def _config_from_args(args: argparse.Namespace) -> SelectionConfig:
    if args.diff_mode == "percentile":
        diff = PercentileThreshold(p=args.percentile)
    else:
        diff = FixedThreshold(tau_diff=args.tau_diff)
    return SelectionConfig(
        ratio=args.ratio,
        tau_sim=args.tau_sim,
        diff_mode=diff,
        community_cap=args.community_cap,
        importance=args.importance,
        fill=not args.no_fill,
        threads=args.threads,
    )


def _load(path: str):
    try:
        return load_grid(path)
    except StSimDiffError as exc:
        exc.stage = "load"
        raise


def _write_text(path: str | None, text: str) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(text)


def cmd_compress(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    grid = _load(args.input)
    result = run_pipeline(grid, config)
    _write_text(args.output, json.dumps(result.to_dict(), indent=2) + "\n")
    print(
        f"n={result.n} n_target={result.n_target} rep={result.rep_count} "
        f"event={result.event_count} fill={result.fill_count} "
        f"wall_ms={result.timing.get('total_ms', 0.0)}",
        file=sys.stderr,
    )
    return EXIT_OK


def cmd_stats(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    grid = _load(args.input)
    graph = build_graph(grid, threads=config.resolved_threads())
    partition = threshold_components(graph, config.tau_sim)
    size_hist: dict[str, int] = {}
    for size in sorted(partition.sizes().tolist()):
        size_hist[str(size)] = size_hist.get(str(size), 0) + 1
    try:
        tau_diff = resolve_threshold(config.diff_mode, graph)
    except StSimDiffError as exc:
        exc.stage = "dets"
        raise
    doc = {
        "schema_version": SCHEMA_VERSION,
        "n": grid.n_tokens,
        "frames": grid.frames,
        "height": grid.height,
        "width": grid.width,
        "dim": grid.dim,
        "grid": validate_grid(grid).to_dict(),
        "edges": edge_stats(graph).to_dict(),
        "communities": partition.m,
        "community_sizes": size_hist,
        "resolved_tau_diff": tau_diff,
        "temporal_diff": [fs.to_dict() for fs in temporal_diff_profile(graph, tau_diff)],
        "config": config.echo(),
    }
    _write_text(args.output, json.dumps(doc, indent=2) + "\n")
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    grid = _load(args.input)
    rows = []
    for tau_sim in args.tau_sim:
        for tau_diff in args.tau_diff:
            config = SelectionConfig(
                ratio=args.ratio,
                tau_sim=tau_sim,
                diff_mode=FixedThreshold(tau_diff=tau_diff),
                threads=args.threads,
            )
            start = time.perf_counter()
            result = run_pipeline(grid, config)
            wall_ms = (time.perf_counter() - start) * 1e3
            rows.append({
                "tau_sim": tau_sim,
                "tau_diff": tau_diff,
                "rep_count": result.rep_count,
                "event_count": result.event_count,
                "overlap": result.overlap_count,
                "fill_count": result.fill_count,
                "communities": result.communities,
                "wall_ms": round(wall_ms, 3),
            })
    _write_csv(args.output, rows)
    return EXIT_OK


def _write_csv(path: str | None, rows: list[dict]) -> None:
    if not rows:
        return

    def emit(handle) -> None:
        writer = csv.DictWriter(handle, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)

    if path in (None, "-"):
        emit(sys.stdout)
        return
    with open(path, "w", encoding="utf-8", newline="") as handle:
        emit(handle)


def cmd_gen(args: argparse.Namespace) -> int:
    spec = SyntheticSpec(
        frames=args.frames,
        height=args.height,
        width=args.width,
        dim=args.dim,
        seed=args.seed,
        patches=tuple(args.patch or ()),
        cuts=tuple(args.cut or ()),
        noise=args.noise,
    )
    save_grid(generate_synthetic(spec), args.output)
    print(f"wrote {args.output}", file=sys.stderr)
    return EXIT_OK


def cmd_bench(args: argparse.Namespace) -> int:
    records = run_scaling(args.sizes, d=args.dim, reps=args.reps, threads=args.threads)
    baseline_sizes = [n for n in args.sizes if n <= args.baseline_max]
    if baseline_sizes:
        records += run_quadratic_baseline(
            baseline_sizes, d=args.dim, reps=args.reps, threads=args.threads
        )
    rows = [
        {
            "n": rec.n,
            "d": rec.d,
            "threads": rec.threads,
            "stage": stage,
            "median_ms": ms,
            "reps": rec.reps,
        }
        for rec in records
        for stage, ms in rec.stage_items()
    ]
    _write_csv(args.output, rows)
    for label in ("pipeline", BASELINE):
        subset = [r for r in records if r.label == label]
        ratios = doubling_ratios(subset)
        if ratios:
            worst = max(ratio for _, _, ratio in ratios)
            print(f"{label} max doubling ratio: {worst:.2f}", file=sys.stderr)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="st-simdiff",
        description="Training-free video token selection over a spatio-temporal graph.",
        epilog=_EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument(
        "--version", action="version",
        version=f"st-simdiff {__version__} (schema {SCHEMA_VERSION})",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sel = _selection_flags()

    p_compress = sub.add_parser(
        "compress", parents=[sel],
        help="select tokens from an STSD tensor, emit the result as JSON",
    )
    p_compress.add_argument("input", help="input STSD file")
    p_compress.add_argument("--output", "-o", default="-", help="JSON path or - for stdout")
    p_compress.set_defaults(func=cmd_compress)

    p_stats = sub.add_parser(
        "stats", parents=[sel],
        help="emit graph, community, and temporal-difference diagnostics as JSON",
    )
    p_stats.add_argument("input", help="input STSD file")
    p_stats.add_argument("--output", "-o", default="-", help="JSON path or - for stdout")
    p_stats.set_defaults(func=cmd_stats)

    p_sweep = sub.add_parser(
        "sweep", help="run the pipeline over threshold grids, emit one CSV row each"
    )
    p_sweep.add_argument("input", help="input STSD file")
    p_sweep.add_argument("--tau-sim", type=_float_list, default=_float_list(_DEFAULT_TAU_SIM_GRID),
                         metavar="V,V,...", help=f"grid (default {_DEFAULT_TAU_SIM_GRID})")
    p_sweep.add_argument("--tau-diff", type=_float_list, default=_float_list(_DEFAULT_TAU_DIFF_GRID),
                         metavar="V,V,...", help=f"grid (default {_DEFAULT_TAU_DIFF_GRID})")
    p_sweep.add_argument("--ratio", type=float, default=0.3)
    p_sweep.add_argument("--threads", type=int, default=None)
    p_sweep.add_argument("--output", "-o", default="-", help="CSV path or - for stdout")
    p_sweep.set_defaults(func=cmd_sweep)

    p_gen = sub.add_parser("gen", help="write a synthetic STSD fixture")
    p_gen.add_argument("output", help="destination STSD file")
    p_gen.add_argument("--frames", type=int, default=8)
    p_gen.add_argument("--height", type=int, default=4)
    p_gen.add_argument("--width", type=int, default=4)
    p_gen.add_argument("--dim", type=int, default=16)
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--cut", type=int, action="append",
                       help="scene cut at this frame (repeatable, frames start at 1)")
    p_gen.add_argument("--noise", type=float, default=0.0)
    p_gen.add_argument("--patch", type=_patch_arg, action="append",
                       metavar="rows,cols,row0,col0,drow,dcol,offset",
                       help="moving patch spec (repeatable)")
    p_gen.set_defaults(func=cmd_gen)

    p_bench = sub.add_parser("bench", help="time the pipeline and the quadratic baseline")
    p_bench.add_argument("--sizes", type=_int_list, default=_int_list(_DEFAULT_BENCH_SIZES),
                         metavar="N,N,...", help=f"token counts (default {_DEFAULT_BENCH_SIZES})")
    p_bench.add_argument("--dim", type=int, default=64)
    p_bench.add_argument("--reps", type=int, default=5)
    p_bench.add_argument("--threads", type=int, default=1)
    p_bench.add_argument("--baseline-max", type=int, default=32768,
                         help="run the quadratic baseline only up to this size (0 disables)")
    p_bench.add_argument("--output", "-o", default="-", help="CSV path or - for stdout")
    p_bench.set_defaults(func=cmd_bench)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FormatError as exc:
        print(f"error [{getattr(exc, 'stage', 'load')}]: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except ValidationError as exc:
        print(f"error [{getattr(exc, 'stage', 'config')}]: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error [io]: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except StSimDiffError as exc:
        print(f"error [{getattr(exc, 'stage', 'internal')}]: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {exc!r}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())

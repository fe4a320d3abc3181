"""Command-line interface: run missions, compare explorers, compute the
estimator statistics, and render worlds.

Exit codes: 0 success (mission DONE), 1 usage/config errors, 2 mission
INCOMPLETE (watchdog) or a failed run inside a batch.
"""

from __future__ import annotations

import argparse
import os
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from .config import ConfigError, load_config
from .metrics import (
    REFERENCE_TABLE1,
    aggregate_report,
    parse_csv_column,
    render_map_pgm,
    welch_t_test,
)
from .mission import run_mission
from .world import WorldParseError, load_world

OUT_ENV = "RESCUESIM_OUT"


def _out_root(args) -> Path:
    if getattr(args, "out", None):
        return Path(args.out)
    return Path(os.environ.get(OUT_ENV, "out"))


def _resolve_world(name: str) -> tuple[str, str]:
    """World file text and a short name; bare names map to bundled worlds."""
    path = Path(name)
    if path.exists():
        return path.read_text(encoding="utf-8"), path.stem
    bare = name.removesuffix(".txt")
    candidate = resources.files("rescuesim") / "worlds" / f"{bare}.txt"
    if candidate.is_file():
        return candidate.read_text(encoding="utf-8"), bare
    raise FileNotFoundError(f"world file not found: {name}")


def _load_setup(args):
    text, world_name = _resolve_world(args.world)
    world = load_world(text)
    overrides = []
    for item in args.set or []:
        if "=" not in item:
            raise ConfigError(f"--set needs key=value, got {item!r}")
        key, value = item.split("=", 1)
        overrides.append((key.strip(), value.strip()))
    config = load_config(args.config, overrides)
    return world, world_name, config


def _write_run_outputs(report, out_dir: Path):
    from .figures import save_error_figure, save_map_figure

    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "report.json").write_text(report.to_json())
    grid = report.final_map
    truth = [(v["truth"][0], v["truth"][1]) for v in report.tag_results.values()]
    ckf = [(v["ckf"][0], v["ckf"][1]) for v in report.tag_results.values() if "ckf" in v]
    last = [(v["last"][0], v["last"][1]) for v in report.tag_results.values() if "last" in v]
    (out_dir / "final_map.pgm").write_bytes(render_map_pgm(grid, tags_xy=truth))
    save_map_figure(
        grid, out_dir / "final_map.png",
        tags_truth=truth, tags_ckf=ckf, tags_last=last,
        title=f"{report.world_name} / {report.explorer} / seed {report.seed}",
    )
    save_error_figure(report.tag_results, out_dir / "tag_errors.png",
                      title=f"{report.world_name} seed {report.seed}")


def cmd_run(args) -> int:
    world, world_name, config = _load_setup(args)
    out_dir = _out_root(args)
    report = run_mission(world, config, args.seed, explorer=args.explorer,
                         world_name=world_name, out_dir=out_dir)
    _write_run_outputs(report, out_dir)
    found = len(report.detected_tags)
    expected = len(report.expected_tags)
    print(f"{report.status}: {found}/{expected} tags, "
          f"exploration {report.exploration_time}s, total {report.total_time}s")
    print(f"outputs in {out_dir}")
    return 0 if report.status == "DONE" else 2


def cmd_compare(args) -> int:
    world, world_name, config = _load_setup(args)
    seeds = _parse_seeds(args.seeds)
    out_dir = _out_root(args)
    out_dir.mkdir(parents=True, exist_ok=True)
    reports = []
    failed = False
    for seed in seeds:
        for explorer in ("nbv", "greedy"):
            report = run_mission(world, config, seed, explorer=explorer,
                                 world_name=world_name)
            reports.append(report)
            if report.status != "DONE":
                failed = True
            print(f"seed {seed} {explorer}: {report.status} "
                  f"exploration {report.exploration_time}s")
    csv_text = aggregate_report(reports)
    (out_dir / "compare.csv").write_text(csv_text)

    from .figures import save_compare_figure
    rows = [{"explorer": r.explorer, "seed": r.seed,
             "exploration_time": r.exploration_time} for r in reports]
    save_compare_figure(rows, out_dir / "exploration_times.png",
                        title=f"{world_name}: exploration time by seed")

    for explorer in ("nbv", "greedy"):
        times = [r.exploration_time for r in reports
                 if r.explorer == explorer and r.exploration_time is not None]
        if times:
            print(f"{explorer}: mean exploration time {np.mean(times):.1f}s "
                  f"over {len(times)} runs")
    print(f"outputs in {out_dir}")
    return 2 if failed else 0


def cmd_stats(args) -> int:
    if args.paper_table1:
        table = REFERENCE_TABLE1[args.paper_table1]
        a, b = table["ckf"], table["last"]
        label_a, label_b = "ckf", "last"
    else:
        if not args.csv:
            print("stats needs --paper-table1 or --csv", file=sys.stderr)
            return 1
        text = Path(args.csv).read_text(encoding="utf-8")
        a = parse_csv_column(text, args.col_a)
        b = parse_csv_column(text, args.col_b)
        label_a, label_b = args.col_a, args.col_b
    result = welch_t_test(a, b)
    print(f"mean({label_a}) = {result.mean_a:.4f}   mean({label_b}) = {result.mean_b:.4f}")
    print(f"t = {result.t_statistic:.4f}   df = {result.degrees_of_freedom:.2f}")
    print(f"one-sided p (H1: {label_a} < {label_b}) = {result.p_value:.4f}")
    return 0


def cmd_render(args) -> int:
    text, world_name = _resolve_world(args.world)
    world = load_world(text)
    out_dir = _out_root(args)
    out_dir.mkdir(parents=True, exist_ok=True)
    tags = [(float(t.position[0]), float(t.position[1])) for t in world.tags]
    pgm_path = out_dir / f"{world_name}.pgm"
    pgm_path.write_bytes(render_map_pgm(world.truth_grid, tags_xy=tags))

    from .figures import save_map_figure
    png_path = out_dir / f"{world_name}.png"
    save_map_figure(world.truth_grid, png_path, tags_truth=tags, title=world_name)
    print(f"wrote {pgm_path} and {png_path}")
    return 0


def _parse_seeds(spec: str) -> list[int]:
    spec = spec.strip()
    if ":" in spec:
        lo, hi = spec.split(":", 1)
        return list(range(int(lo), int(hi)))
    return [int(s) for s in spec.replace(",", " ").split()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rescuesim",
        description="Deterministic exploration and tag-localization missions "
                    "on occupancy-grid worlds.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one mission")
    run.add_argument("--world", required=True, help="world file or bundled name")
    run.add_argument("--explorer", choices=("nbv", "greedy"), default="nbv")
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--config", default=None, help="key = value config file")
    run.add_argument("--set", action="append", metavar="KEY=VALUE",
                     help="override one config value (repeatable)")
    run.add_argument("--out", default=None, help=f"output dir (default ${OUT_ENV} or ./out)")
    run.set_defaults(func=cmd_run)

    compare = sub.add_parser("compare", help="run both explorers over seeds")
    compare.add_argument("--world", required=True)
    compare.add_argument("--seeds", default="0:5",
                         help="comma list or lo:hi range (default 0:5)")
    compare.add_argument("--config", default=None)
    compare.add_argument("--set", action="append", metavar="KEY=VALUE")
    compare.add_argument("--out", default=None)
    compare.set_defaults(func=cmd_compare)

    stats = sub.add_parser("stats", help="Welch one-sided comparison of two samples")
    stats.add_argument("--paper-table1", choices=("world", "house"), default=None,
                       help="run the bundled benchmark columns as a self-check")
    stats.add_argument("--csv", default=None)
    stats.add_argument("--col-a", default="mean_ckf_error")
    stats.add_argument("--col-b", default="mean_last_error")
    stats.set_defaults(func=cmd_stats)

    render = sub.add_parser("render", help="render a world file to PGM and PNG")
    render.add_argument("--world", required=True)
    render.add_argument("--out", default=None)
    render.set_defaults(func=cmd_render)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, WorldParseError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""Command-line harness.

Exit codes: 0 success, 2 usage error, 3 data error, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import itertools
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from .autonomy import AutonomyConfig, run_autonomous
from .episode import downsample, load_episode, save_episode
from .errors import DataError, NoCycles, NumericError, UnsupportedVariant
from .matrix import load_spec, run_matrix
from .metrics import metric_corridor, metric_cycle_variance, metric_sync
from .plot import emit_plot
from .seqmodel import ModelConfig, load_model, save_model, train
from .tasks import make_task, task_from_metadata
from .teleop import run_demo

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4


class UsageError(Exception):
    pass


def _value(text: str):
    try:
        return float(text)
    except ValueError:
        return text


def parse_task(text: str, duration: float | None = None):
    """``kind`` or ``kind:key=value,key=value`` (e.g. ``draw:angle_deg=20,shift=0.05``)."""
    kind, _, rest = text.partition(":")
    params = {}
    for item in filter(None, rest.split(",")):
        key, sep, value = item.partition("=")
        if not sep:
            raise UsageError(f"task parameter {item!r} is not key=value")
        params[key.strip()] = _value(value.strip())
    try:
        return make_task(kind, duration=duration, **params)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad task {text!r}: {exc}") from None


def parse_grid(text: str) -> list[dict]:
    """``key=v1,v2;key2=v3`` to the list of grid cells (cartesian product)."""
    grid = {}
    for part in filter(None, text.split(";")):
        key, sep, values = part.partition("=")
        if not sep:
            raise UsageError(f"grid entry {part!r} is not key=v1,v2,...")
        grid[key.strip()] = [_value(v.strip()) for v in values.split(",") if v.strip()]
    keys = list(grid)
    return [dict(zip(keys, vals)) for vals in itertools.product(*(grid[k] for k in keys))]


def _episode_files(paths: list[str]) -> list[Path]:
    out = []
    for p in map(Path, paths):
        out.extend(sorted(p.glob("*.csv")) if p.is_dir() else [p])
    if not out:
        raise UsageError("no episode files given")
    return out


def cmd_demo(args) -> None:
    cells = parse_grid(args.grid) if args.grid else [{}]
    out = Path(args.out)
    for ci, cell in enumerate(cells):
        try:
            task = make_task(args.task, duration=args.duration, **cell)
        except (TypeError, ValueError) as exc:
            raise UsageError(f"bad grid cell {cell}: {exc}") from None
        for trial in range(args.trials):
            ep = run_demo(task, seed=args.seed + 1000 * ci + trial)
            path = out / f"demo_{args.task}_{ci:02d}_{trial}.csv"
            save_episode(ep, path)
            print(path)


def cmd_train(args) -> None:
    data = [downsample(load_episode(p)) for p in _episode_files(args.data)]
    try:
        cfg = ModelConfig(variant=args.variant, ar=args.ar, layers=args.layers, units=args.units,
                          window=args.window, batch=args.batch, epochs=args.epochs, lr=args.lr,
                          ar_period=args.ar_period, seed=args.seed)
    except (ValueError, UnsupportedVariant) as exc:
        raise UsageError(str(exc)) from None
    model, report = train(data, cfg)
    save_model(model, args.out)
    loss_path = Path(str(args.out) + ".loss.csv")
    with open(loss_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["epoch", "loss"])
        w.writerows([i + 1, repr(v)] for i, v in enumerate(report.losses))
    print(f"{cfg.label}: final loss {report.losses[-1]:.6g} -> {args.out}")


def cmd_run(args) -> None:
    model = load_model(args.model)
    task = parse_task(args.task, args.duration)
    ep = run_autonomous(model, task, AutonomyConfig(max_duration=max(60.0, task.duration)), args.seed)
    save_episode(ep, args.out)
    print(args.out)


def cmd_eval(args) -> None:
    ep = load_episode(args.episode)
    if args.task:
        task = parse_task(args.task, float(ep.meta.get("duration", len(ep) * 1e-3)))
    else:
        try:
            task = task_from_metadata(ep.meta)
        except (KeyError, ValueError) as exc:
            raise UsageError(f"episode has no usable task metadata ({exc}); pass --task") from None
    rows = []
    res = metric_corridor(ep, task)
    rows.append(("success", int(res.success)))
    rows.append(("diagnostics", ";".join(res.diagnostics)))
    rows.extend(sorted(res.values.items()))
    if ep.meta.get("mode") == "demo":
        s = metric_sync(ep)
        for j in range(3):
            rows.append((f"mean_pos_err{j + 1}", repr(float(s.mean_pos_err[j]))))
            rows.append((f"max_pos_err{j + 1}", repr(float(s.max_pos_err[j]))))
            rows.append((f"mean_force_sum{j + 1}", repr(float(s.mean_force_sum[j]))))
    if task.kind == "write":
        try:
            rows.append(("cycle_dev", repr(metric_cycle_variance(ep, task))))
        except NoCycles:
            rows.append(("cycle_dev", ""))
    out = sys.stdout if args.out in (None, "-") else open(args.out, "w", newline="")
    try:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["metric", "value"])
        w.writerows(rows)
    finally:
        if out is not sys.stdout:
            out.close()


def cmd_matrix(args) -> None:
    spec = load_spec(args.spec)
    if args.epochs is not None:
        spec = replace(spec, epochs=args.epochs, epochs_ar=args.epochs)
    report = run_matrix(spec, args.out, log=lambda m: print(m, flush=True))
    print(f"{len(report.trials)} autonomous trials -> {args.out}")


def cmd_plot(args) -> None:
    cols = [c.strip() for c in args.columns.split(",")] if args.columns else None
    emit_plot(args.csv, args.out, cols, args.title or "", args.log_y)


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    p = argparse.ArgumentParser(prog="bcil", description="Bilateral-control imitation learning bench.",
                                formatter_class=fmt)
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("demo", help="record scripted 4ch bilateral demonstrations", formatter_class=fmt)
    d.add_argument("--task", required=True, choices=["draw", "erase", "write", "free"])
    d.add_argument("--grid", default="", help="task parameter grid, e.g. 'angle_deg=0,20,40;shift=0'")
    d.add_argument("--trials", type=int, default=1, help="demonstrations per grid cell")
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--duration", type=float, default=None, help="s; task default when omitted")
    d.add_argument("--out", required=True, help="output directory")
    d.set_defaults(func=cmd_demo)

    t = sub.add_parser("train", help="train one model on demonstration episodes", formatter_class=fmt)
    t.add_argument("--variant", choices=["S2S", "S2M", "SM2SM"], default="SM2SM")
    t.add_argument("--ar", action="store_true", help="autoregressive (free-running) learning")
    t.add_argument("--ar-period", type=int, default=10, help="ground-truth re-anchoring period, steps")
    t.add_argument("--layers", type=int, default=6)
    t.add_argument("--units", type=int, default=50)
    t.add_argument("--window", type=int, default=150, help="rows per training window")
    t.add_argument("--batch", type=int, default=100)
    t.add_argument("--epochs", type=int, default=100)
    t.add_argument("--lr", type=float, default=1e-3)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--data", nargs="+", required=True, help="episode CSV files or directories")
    t.add_argument("--out", required=True, help="checkpoint path")
    t.set_defaults(func=cmd_train)

    r = sub.add_parser("run", help="autonomous run of a trained model", formatter_class=fmt)
    r.add_argument("--model", required=True)
    r.add_argument("--task", required=True, help="kind[:key=value,...], e.g. draw:angle_deg=20")
    r.add_argument("--duration", type=float, default=None, help="s; task default when omitted")
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--out", required=True)
    r.set_defaults(func=cmd_run)

    e = sub.add_parser("eval", help="metrics of one episode", formatter_class=fmt)
    e.add_argument("--episode", required=True)
    e.add_argument("--task", default=None, help="override the task recorded in the episode")
    e.add_argument("--out", default="-", help="CSV path, '-' for stdout")
    e.set_defaults(func=cmd_eval)

    m = sub.add_parser("matrix", help="run a full experiment spec", formatter_class=fmt)
    m.add_argument("--spec", required=True, help="INI experiment spec")
    m.add_argument("--epochs", type=int, default=None, help="override epochs for every model")
    m.add_argument("--out", required=True, help="output directory")
    m.set_defaults(func=cmd_matrix)

    pl = sub.add_parser("plot", help="SVG line plot of a CSV", formatter_class=fmt)
    pl.add_argument("--csv", required=True)
    pl.add_argument("--out", required=True)
    pl.add_argument("--columns", default=None, help="comma-separated series (default: all)")
    pl.add_argument("--title", default=None)
    pl.add_argument("--log-y", action="store_true")
    pl.set_defaults(func=cmd_plot)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"bcil: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, OSError) as exc:
        print(f"bcil: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericError as exc:
        print(f"bcil: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

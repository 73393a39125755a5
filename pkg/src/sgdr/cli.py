"""Command-line entry point: ``sgdr {schedule-dump,train,ensemble,compare}``.

Every command exits 0 on success and 1 with a one-line diagnostic on
stderr otherwise. CSV outputs are written to a temporary file and renamed
into place, so a failed command never leaves a headerless file behind.
Multi-part CSV outputs are blocks separated by one blank line, each block
with its own header.
"""
from __future__ import annotations

import argparse
import csv
import glob
import io
import json
import os
import sys
from pathlib import Path
from typing import List, Sequence

from .compare import compare
from .config import ConfigError, parse_config
from .data import Dataset, load_csv, make_blobs, make_spirals
from .ensemble import ensemble_evaluate, load_members, sweep
from .model import load_snapshot
from .schedule import dump_curve, make_schedule
from .trainer import DivergenceError, evaluate, float_precision, run_training, split_dataset


class CliError(Exception):
    pass


def _g(value, precision: int) -> str:
    return f"{float(value):.{precision}g}"


def _write_atomic(path, blocks: Sequence[Sequence[Sequence]]) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    for i, block in enumerate(blocks):
        if i:
            buf.write("\n")
        writer.writerows(block)
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", encoding="utf-8", newline="") as fh:
        fh.write(buf.getvalue())
    os.replace(tmp, path)


def read_csv_blocks(path) -> List[List[List[str]]]:
    """Inverse of the blank-line-separated block layout used by the CLI."""
    blocks, current = [], []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.reader(fh):
            if not row:
                if current:
                    blocks.append(current)
                current = []
            else:
                current.append(row)
    if current:
        blocks.append(current)
    return blocks


def _milestones(text: str):
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise CliError(f"--milestones must be comma-separated integers, got {text!r}") from None


def cmd_schedule_dump(args) -> None:
    try:
        schedule = make_schedule(
            args.schedule,
            eta_max=args.eta_max,
            eta_min=args.eta_min,
            t0=args.t0,
            t_mult=args.t_mult,
            restart_decay=args.restart_decay,
            eta0=args.eta0,
            drop_factor=args.drop_factor,
            milestones=_milestones(args.milestones) if args.milestones is not None else None,
        )
        rows = dump_curve(schedule, args.epochs, args.steps_per_epoch)
    except ValueError as exc:
        raise CliError(str(exc)) from None
    p = float_precision()
    table = [["epoch_time", "lr", "restarted"]]
    table += [[f"{t:.6f}", _g(lr, p), "1" if r else "0"] for t, lr, r in rows]
    _write_atomic(args.out, [table])


def cmd_train(args) -> None:
    config = parse_config(args.config)
    try:
        result = run_training(config, args.out_dir)
    except DivergenceError as exc:
        raise CliError(f"diverged: {exc}; records up to epoch {exc.epoch - 1} kept in {args.out_dir}/records.csv")
    print(
        f"trained {config.total_epochs} epochs; restarts at {result.restart_epochs}; "
        f"incumbent from epoch {result.incumbent.epoch}; outputs in {args.out_dir}"
    )


def _parse_generator(text: str) -> Dataset:
    kind, _, rest = text.partition(":")
    params = {}
    for item in filter(None, (s.strip() for s in rest.split(","))):
        key, sep, value = item.partition("=")
        if not sep:
            raise CliError(f"bad generator parameter {item!r}; expected key=value")
        params[key.strip()] = float(value) if "." in value or "e" in value.lower() else int(value)
    try:
        if kind == "spirals":
            return make_spirals(**params)
        if kind == "blobs":
            return make_blobs(**params)
    except TypeError as exc:
        raise CliError(f"bad generator parameters for {kind}: {exc}") from None
    raise CliError(f"unknown generator {kind!r}; expected spirals:... or blobs:...")


def _load_data(args) -> Dataset:
    if args.config:
        return split_dataset(parse_config(args.config))[1]
    if not args.data:
        raise CliError("need --data FILE|GENERATOR or --config FILE")
    if Path(args.data).exists():
        return load_csv(args.data)
    if ":" in args.data or args.data in ("spirals", "blobs"):
        return _parse_generator(args.data)
    raise CliError(f"--data {args.data!r} is neither a file nor a generator spec")


def _expand_snapshots(items: Sequence[str]) -> List[str]:
    out = []
    for item in items:
        for part in filter(None, item.split(",")):
            matches = glob.glob(part)
            if not matches and not Path(part).exists():
                raise CliError(f"no snapshot matches {part!r}")
            out.extend(matches or [part])
    return sorted(set(out))


def _run_snapshots(run_dir: Path) -> List[str]:
    """Period-end snapshots of one train output directory, oldest first."""
    meta_path = run_dir / "meta.json"
    if not meta_path.exists():
        raise CliError(f"{run_dir}: no meta.json; not a train output directory")
    meta = json.loads(meta_path.read_text(encoding="utf-8"))
    snaps = sorted((s for s in meta["snapshots"] if not s["partial"]), key=lambda s: s["epoch"])
    return [str(run_dir / s["file"]) for s in snaps]


def cmd_ensemble(args) -> None:
    dataset = _load_data(args)
    p = float_precision()
    if args.runs:
        runs = [_run_snapshots(Path(d)) for d in args.runs]
        table = [["N", "M", "n_members", "loss", "error"]]
        for n, m, k, ce, err in sweep(runs, dataset, range(1, len(runs) + 1), (1, 2, 3)):
            table.append([str(n), str(m), str(k), _g(ce, p), _g(err, p)])
        _write_atomic(args.out, [table])
        return
    if not args.snapshots:
        raise CliError("need --snapshots or --runs")
    paths = _expand_snapshots(args.snapshots)
    load_members(paths)
    ce, err = ensemble_evaluate(paths, dataset)
    members = [["member", "loss", "error"]]
    for path in paths:
        m_ce, m_err = evaluate(load_snapshot(path), dataset)
        members.append([path, _g(m_ce, p), _g(m_err, p)])
    _write_atomic(args.out, [[["n_members", "loss", "error"], [str(len(paths)), _g(ce, p), _g(err, p)]], members])


def cmd_compare(args) -> None:
    baseline = parse_config(args.baseline)
    candidate = parse_config(args.sgdr)
    try:
        seeds = [int(s) for s in args.seeds.split(",") if s.strip()]
    except ValueError:
        raise CliError(f"--seeds must be comma-separated integers, got {args.seeds!r}") from None
    result = compare(baseline, candidate, seeds, args.threshold, jobs=args.jobs)
    p = float_precision()
    b, s = result.names
    curves = [["epoch", f"{b}_median_error", f"{s}_median_error", f"{b}_median_incumbent_error", f"{s}_median_incumbent_error"]]
    cols = [result.median_curve(b, False), result.median_curve(s, False), result.median_curve(b), result.median_curve(s)]
    for e in range(len(cols[0])):
        curves.append([str(e + 1)] + [_g(c[e], p) for c in cols])
    per_seed = [["schedule", "seed", "final_error", "final_incumbent_error", "threshold", "first_epoch_at_or_below_threshold"]]
    for name in result.names:
        for run, first in zip(result.runs[name], result.first_epochs(name)):
            per_seed.append(
                [name, str(run.seed), _g(run.final_error, p), _g(run.final_incumbent_error, p), _g(result.threshold, p),
                 "" if first is None else str(first)]
            )
    _write_atomic(args.out, [curves, per_seed])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sgdr", description="SGD with warm restarts: schedules, training, ensembles")
    sub = parser.add_subparsers(dest="command", required=True)

    d = sub.add_parser("schedule-dump", help="write the per-batch learning-rate trace of a schedule")
    d.add_argument("--schedule", choices=("cosine", "step", "const"), required=True)
    d.add_argument("--eta-max", type=float, default=0.05)
    d.add_argument("--eta-min", type=float, default=0.0)
    d.add_argument("--t0", type=float, default=10.0)
    d.add_argument("--t-mult", type=float, default=2.0)
    d.add_argument("--restart-decay", type=float, default=1.0)
    d.add_argument("--eta0", type=float, default=0.1, help="initial rate for step, the rate for const")
    d.add_argument("--drop-factor", type=float, default=0.2)
    d.add_argument("--milestones", default="60,120,160")
    d.add_argument("--epochs", type=int, required=True)
    d.add_argument("--steps-per-epoch", type=int, required=True)
    d.add_argument("--out", required=True)
    d.set_defaults(func=cmd_schedule_dump)

    t = sub.add_parser("train", help="train one configuration")
    t.add_argument("--config", required=True)
    t.add_argument("--out-dir", required=True)
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("ensemble", help="evaluate a snapshot ensemble")
    e.add_argument("--snapshots", nargs="+", help="snapshot files, globs or comma-separated lists")
    e.add_argument("--runs", nargs="+", help="train output directories for an N x M sweep")
    e.add_argument("--data", help="CSV file or generator spec such as spirals:per_arm=500,noise=0.1,seed=3")
    e.add_argument("--config", help="evaluate on the held-out split of this training config")
    e.add_argument("--out", required=True)
    e.set_defaults(func=cmd_ensemble)

    c = sub.add_parser("compare", help="baseline vs SGDR over several seeds")
    c.add_argument("--baseline", required=True, help="baseline training config")
    c.add_argument("--sgdr", required=True, help="candidate training config")
    c.add_argument("--seeds", default="0,1,2,3,4")
    c.add_argument("--threshold", type=float, default=None, help="target error (default: baseline median final)")
    c.add_argument("--jobs", type=int, default=1)
    c.add_argument("--out", required=True)
    c.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (CliError, ConfigError, ValueError, OSError, RuntimeError) as exc:
        print(f"sgdr {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

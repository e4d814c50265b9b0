"""Command-line harness: train, select, eval, curves, and sweep.

Datasets are given either as a CSV path (contract in datasets.py) or as a
toy spec "toy:KIND[:N_INLIERS:N_ANOMALIES]". Exit codes: 0 success,
2 input error, 3 label-contract violation (no positive labels where they
are required), 4 partial sweep failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .datasets import (LabeledDataset, SplitSpec, load_csv, make_toy,
                       sample_labeled_fraction, stratified_split)
from .forest import ForestParams, fit_forest
from .metrics import NoPositivesError, average_precision, pr_curve
from .selection import (STRATEGIES, order_trees, prefix_ap_curve, rank_trees,
                        select_from_forest)
from .serialize import ModelFormatError, load_model, save_model, serialize

DEFAULT_FRACTIONS = (0.05, 0.10, 0.20, 0.40)
DEFAULT_REPETITIONS = 10
RANDOM_CURVE_REPEATS = 100

SWEEP_COLUMNS = ("dataset", "fraction", "repetition", "seed", "train_size",
                 "test_size", "baseline_ap", "tiws_ap", "selected_trees")


def derive_seed(*parts) -> int:
    """Stable 64-bit seed from heterogeneous parts (master seed, names...)."""
    h = hashlib.sha256()
    for part in parts:
        h.update(repr(part).encode())
        h.update(b"\x1f")
    return int.from_bytes(h.digest()[:8], "little")


def resolve_dataset(spec: str, seed: int) -> LabeledDataset:
    """Load a CSV path or generate a toy dataset from its spec string."""
    if spec.startswith("toy:"):
        parts = spec.split(":")
        kind = parts[1] if len(parts) > 1 else ""
        if len(parts) == 2:
            n_inliers, n_anomalies = 970, 30
        elif len(parts) == 4:
            try:
                n_inliers, n_anomalies = int(parts[2]), int(parts[3])
            except ValueError:
                raise ValueError(f"bad toy spec {spec!r}: sizes must be integers") from None
        else:
            raise ValueError(
                f"bad toy spec {spec!r}, expected toy:KIND[:N_INLIERS:N_ANOMALIES]"
            )
        return make_toy(kind, n_inliers, n_anomalies,
                        seed=derive_seed(seed, spec, "data"))
    return load_csv(spec)


def _forest_params(args, seed: int) -> ForestParams:
    return ForestParams(n_trees=args.trees, subsample_size=args.subsample,
                        max_depth=args.max_depth, seed=seed)


def _print_json(obj) -> None:
    print(json.dumps(obj))


def _write_rows(path, header, rows) -> None:
    lines = [",".join(header)]
    lines += [",".join(_format_cell(v) for v in row) for row in rows]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _format_cell(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


# ---------------------------------------------------------------- commands


def cmd_train(args) -> int:
    ds = resolve_dataset(args.data, args.seed)
    forest = fit_forest(ds.features, _forest_params(args, args.seed))
    n_bytes = save_model(forest, args.out)
    _print_json({
        "dataset": ds.name,
        "n": ds.n_rows,
        "d": ds.n_features,
        "trees": forest.n_trees,
        "subsample": forest.subsample_size,
        "bytes": n_bytes,
    })
    return 0


def cmd_select(args) -> int:
    forest = load_model(args.model)
    labeled = load_csv(args.labeled)
    if labeled.labels.sum() == 1:
        print(f"warning: ranking rests on a single positive label in "
              f"{args.labeled}", file=sys.stderr)
    reduced, result = select_from_forest(forest, labeled)
    save_model(reduced, args.out)
    payload = result.to_dict()
    _print_json(payload)
    if args.json:
        Path(args.json).write_text(json.dumps(payload, indent=2) + "\n",
                                   encoding="utf-8")
    return 0


def cmd_eval(args) -> int:
    forest = load_model(args.model)
    test = load_csv(args.data)
    scores = forest.score_samples(test.features, prefix_len=args.prefix)
    ap = average_precision(scores, test.labels)
    _print_json({"ap": ap, "n": test.n_rows})
    if args.pr_out:
        curve = pr_curve(scores, test.labels)
        _write_rows(args.pr_out, ("threshold", "precision", "recall"),
                    zip(curve.thresholds.tolist(), curve.precision.tolist(),
                        curve.recall.tolist()))
    return 0


def cmd_curves(args) -> int:
    strategies = [s.strip() for s in args.strategies.split(",") if s.strip()]
    for s in strategies:
        if s not in STRATEGIES:
            raise ValueError(f"unknown strategy {s!r}, expected among {STRATEGIES}")

    ds = resolve_dataset(args.data, args.seed)
    if args.labeled_fraction < 1.0:
        labeled = sample_labeled_fraction(ds, args.labeled_fraction,
                                          seed=derive_seed(args.seed, "labeled"))
    else:
        labeled = ds
    forest = fit_forest(ds.features,
                        _forest_params(args, derive_seed(args.seed, "forest")))
    per_tree_ap = rank_trees(forest, labeled)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    header = ("prefix_size", "ap_mean", "ap_min", "ap_max")
    for strategy in strategies:
        if strategy == "random":
            curves = []
            for rep in range(args.random_repeats):
                ranking = order_trees(per_tree_ap, "random",
                                      seed=derive_seed(args.seed, "random", rep))
                curves.append(prefix_ap_curve(forest, ranking, labeled))
            stacked = np.stack(curves)
            rows = zip(range(1, forest.n_trees + 1),
                       stacked.mean(axis=0).tolist(),
                       stacked.min(axis=0).tolist(),
                       stacked.max(axis=0).tolist())
        else:
            ranking = order_trees(per_tree_ap, strategy)
            curve = prefix_ap_curve(forest, ranking, labeled)
            values = curve.tolist()
            rows = zip(range(1, forest.n_trees + 1), values, values, values)
        _write_rows(out_dir / f"curve_{strategy}.csv", header, rows)
    return 0


def _run_sweep_cell(task: dict) -> dict:
    """One (dataset, fraction, repetition) cell; runs in a worker process."""
    started = time.perf_counter()
    master = task["seed"]
    name, fraction, rep = task["name"], task["fraction"], task["repetition"]
    cell_seed = derive_seed(master, name, fraction, rep)

    ds = resolve_dataset(task["data"], master)
    train, test = stratified_split(
        ds, SplitSpec(test_fraction=0.5, seed=derive_seed(cell_seed, "split")))
    labeled = sample_labeled_fraction(train, fraction,
                                      seed=derive_seed(cell_seed, "labeled"))
    params = ForestParams(n_trees=task["trees"],
                          subsample_size=task["subsample"],
                          max_depth=task["max_depth"],
                          seed=derive_seed(cell_seed, "forest"))
    forest = fit_forest(train.features, params)
    reduced, result = select_from_forest(forest, labeled)

    baseline_ap = average_precision(forest.score_samples(test.features),
                                    test.labels)
    tiws_ap = average_precision(reduced.score_samples(test.features),
                                test.labels)
    return {
        "dataset": name,
        "fraction": fraction,
        "repetition": rep,
        "seed": cell_seed,
        "train_size": train.n_rows,
        "test_size": test.n_rows,
        "baseline_ap": baseline_ap,
        "tiws_ap": tiws_ap,
        "selected_trees": result.selected_size,
        "wall_time_s": time.perf_counter() - started,
    }


def _dataset_display_name(spec: str) -> str:
    if spec.startswith("toy:"):
        return spec.split(":")[1]
    return Path(spec).stem


def cmd_sweep(args) -> int:
    fractions = [float(f) for f in args.fractions.split(",") if f.strip()]
    for f in fractions:
        if not 0.0 < f <= 1.0:
            raise ValueError(f"labeled fraction must be in (0, 1], got {f}")
    if args.repetitions < 1:
        raise ValueError("repetitions must be >= 1")

    tasks = []
    for spec in args.data:
        name = _dataset_display_name(spec)
        for fraction in fractions:
            for rep in range(args.repetitions):
                tasks.append({
                    "data": spec, "name": name, "fraction": fraction,
                    "repetition": rep, "seed": args.seed,
                    "trees": args.trees, "subsample": args.subsample,
                    "max_depth": args.max_depth,
                })

    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            outcomes = list(pool.map(_guarded_sweep_cell, tasks))
    else:
        outcomes = [_guarded_sweep_cell(task) for task in tasks]

    records, failures = [], []
    for task, (record, error) in zip(tasks, outcomes):
        if record is not None:
            records.append(record)
        else:
            failures.append((task, error))

    for task, error in failures:
        print(f"sweep cell failed: dataset={task['name']} "
              f"fraction={task['fraction']} repetition={task['repetition']}: "
              f"{error}", file=sys.stderr)

    records.sort(key=lambda r: (r["dataset"], r["fraction"], r["repetition"]))
    _write_rows(args.out, SWEEP_COLUMNS,
                [[r[c] for c in SWEEP_COLUMNS] for r in records])
    if args.timings:
        _write_rows(args.timings,
                    ("dataset", "fraction", "repetition", "wall_time_s"),
                    [[r["dataset"], r["fraction"], r["repetition"],
                      r["wall_time_s"]] for r in records])
    total = sum(r["wall_time_s"] for r in records)
    print(f"sweep: {len(records)} cells ok, {len(failures)} failed, "
          f"{total:.2f}s total cell time", file=sys.stderr)
    return 4 if failures else 0


def _guarded_sweep_cell(task: dict):
    try:
        return _run_sweep_cell(task), None
    except Exception as exc:  # keep the sweep going, report at the end
        return None, f"{type(exc).__name__}: {exc}"


# ------------------------------------------------------------------ parser


def _add_forest_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--trees", type=int, default=100,
                   help="number of isolation trees (default 100)")
    p.add_argument("--subsample", type=int, default=256,
                   help="subsample size per tree (default 256)")
    p.add_argument("--max-depth", type=int, default=None,
                   help="tree depth limit (default: ceil(log2(subsample)))")
    p.add_argument("--seed", type=int, default=0,
                   help="master seed (default 0)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tiwsforest",
        description="Isolation forest training, weakly supervised tree "
                    "selection, and evaluation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="fit a forest and write a .tiws model")
    p.add_argument("data", help="CSV path or toy spec")
    p.add_argument("--out", required=True, help="output model path (.tiws)")
    _add_forest_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("select",
                       help="rank trees on labeled data and keep the best prefix")
    p.add_argument("model", help="input .tiws model")
    p.add_argument("labeled", help="labeled CSV used for ranking")
    p.add_argument("--out", required=True, help="output reduced model path")
    p.add_argument("--json", default=None,
                   help="also write the selection diagnostics to this file")
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("eval", help="average precision of a model on labeled data")
    p.add_argument("model", help=".tiws model")
    p.add_argument("data", help="labeled test CSV")
    p.add_argument("--pr-out", default=None,
                   help="write the PR curve as CSV (threshold,precision,recall)")
    p.add_argument("--prefix", type=int, default=None,
                   help="score with only the first N trees")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("curves",
                       help="prefix AP curves under best/worst/random orderings")
    p.add_argument("data", help="CSV path or toy spec")
    p.add_argument("--out", required=True, help="output directory for curve CSVs")
    p.add_argument("--strategies", default="best,worst,random")
    p.add_argument("--labeled-fraction", type=float, default=1.0,
                   help="stratified fraction of the data used for ranking "
                        "(default 1.0 = all labels)")
    p.add_argument("--random-repeats", type=int, default=RANDOM_CURVE_REPEATS,
                   help="permutations aggregated for the random strategy")
    _add_forest_flags(p)
    p.set_defaults(func=cmd_curves)

    p = sub.add_parser("sweep",
                       help="dataset x fraction x repetition protocol, CSV out")
    p.add_argument("--data", action="append", required=True,
                   help="CSV path or toy spec (repeatable)")
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--fractions",
                   default=",".join(str(f) for f in DEFAULT_FRACTIONS),
                   help="comma-separated labeled fractions")
    p.add_argument("--repetitions", type=int, default=DEFAULT_REPETITIONS)
    p.add_argument("--jobs", type=int, default=1,
                   help="parallel worker processes (default 1)")
    p.add_argument("--timings", default=None,
                   help="write per-cell wall times to this CSV "
                        "(kept out of the main CSV, which is deterministic)")
    _add_forest_flags(p)
    p.set_defaults(func=cmd_sweep)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except NoPositivesError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (OSError, ValueError, ModelFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

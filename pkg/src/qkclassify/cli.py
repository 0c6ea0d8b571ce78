"""Command-line entry point: ``qkclassify <verb> [--config FILE] [flags]``.

Verbs map onto pipeline stages. Each one reruns the stages before it, so
any verb works from a bare config:

  preprocess  load + text pipeline + normalize  -> features.csv
  select      ... + RFE/LASSO ranking           -> selection.csv, features_selected.csv
  kernel      ... + Gram matrix per model       -> gram_<model>.csv
  train       ... + one fit per model           -> model_<name>.json
  evaluate    full CV / holdout comparison      -> report.json, metrics.csv, roc.csv, gram_*.csv
  sweep       holdout precision for k_min..k_max -> sweep.csv

Exit status is 0 on success, 1 when a pipeline stage fails and 2 for a bad
config or command line.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys

from . import __version__, experiment
from .config import ConfigError, ExperimentConfig, load_config, validate, with_master_seed

VERBS = ("preprocess", "select", "kernel", "train", "evaluate", "sweep")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI experiment config (defaults apply when omitted)")
    common.add_argument("--seed", type=int, help="master seed; overrides [run] seed")
    common.add_argument("--out", help="output directory; overrides [run] out")
    common.add_argument("--mode", choices=("exact", "sampled"), help="kernel estimation mode")
    common.add_argument("--shots", type=int, help="shots per kernel entry in sampled mode")
    common.add_argument("--gram-dir", help="read gram_<model>.csv from here instead of simulating "
                                           "(train and evaluate only)")
    parser = argparse.ArgumentParser(prog="qkclassify", description="Quantum-kernel classification experiments.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="verb", required=True)
    helps = {
        "preprocess": "load, clean and normalize the dataset",
        "select": "rank features with RFE and LASSO",
        "kernel": "compute and export Gram matrices",
        "train": "fit each rostered model once",
        "evaluate": "cross-validated (or holdout) model comparison",
        "sweep": "holdout precision over a range of feature counts",
    }
    for verb in VERBS:
        sub.add_parser(verb, parents=[common], help=helps[verb])
    return parser


def resolve_config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    if args.seed is not None:
        cfg = with_master_seed(cfg, args.seed)
    if args.out is not None:
        cfg = dataclasses.replace(cfg, run=dataclasses.replace(cfg.run, out=args.out))
    kern = cfg.kernel
    if args.mode is not None:
        kern = dataclasses.replace(kern, mode=args.mode)
    if args.shots is not None:
        kern = dataclasses.replace(kern, shots=args.shots)
    cfg = dataclasses.replace(cfg, kernel=kern)
    validate(cfg)
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
    except ConfigError as exc:
        print(f"qkclassify: [config] {exc}", file=sys.stderr)
        return 2
    if args.gram_dir and args.verb not in ("train", "evaluate"):
        print(f"qkclassify: [config] --gram-dir is not used by '{args.verb}'", file=sys.stderr)
        return 2
    try:
        if args.verb == "preprocess":
            run = experiment.export_features(cfg)
        elif args.verb == "select":
            run = experiment.export_selection(cfg)
        elif args.verb == "kernel":
            run = experiment.export_kernels(cfg)
        elif args.verb == "train":
            run = experiment.fit_models(cfg, gram_dir=args.gram_dir)
        elif args.verb == "evaluate":
            run = experiment.run_experiment(cfg, gram_dir=args.gram_dir, write_grams=args.gram_dir is None)
        else:
            run = experiment.sweep_features(cfg)
    except experiment.StageError as exc:
        print(f"qkclassify: {exc}", file=sys.stderr)
        return 1
    print(f"{args.verb}: wrote {', '.join(run['outputs'])} to {cfg.run.out}")
    if args.verb == "evaluate":
        for name, acc in run["comparison"]["mean_accuracy"].items():
            print(f"  {name:20s} accuracy {acc:.4f}" if acc is not None else f"  {name:20s} accuracy undefined")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

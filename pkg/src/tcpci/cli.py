"""Command-line surface wiring the pipeline end to end.

Subcommands: ingest, extract, train, prioritize, evaluate, decay, synth.
Exit codes: 0 success, 2 input/schema error, 3 insufficient history,
4 internal invariant violation.  stdout carries primary payloads only;
diagnostics go to stderr as ``error: ...`` lines.

Every flag has a JSON config-file equivalent (``--config``); explicit
flags win over config values.
"""

from __future__ import annotations

import argparse
import json
import shutil
import sys
from pathlib import Path

from .errors import (
    InputError,
    InsufficientHistoryError,
    InvalidConfigError,
    NoFailedBuildsError,
    TcpciError,
)
from .evaluation import (
    DEFAULT_HEURISTIC,
    decay_experiment,
    remove_frequent_failers,
    run_pipeline_eval,
)
from .features import FeatureExtractor, RecWindow
from .ingest import DatasetLayout, ingest_exec_records, write_dataset
from .matrix import stack_matrices
from .ranker import Hyperparams, RankModel, rank_tests, train_ranker
from .synth import SynthConfig, load_sources, write_synthetic_dataset

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_HISTORY = 3
EXIT_INTERNAL = 4


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", type=Path, default=None, help="JSON config file")
    p.add_argument("--jobs", type=int, default=None, help="worker bound (serial run is equivalent)")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--impact-depth", type=int, default=None)
    p.add_argument("--recent-window", type=int, default=None)


def _add_hyperparams(p: argparse.ArgumentParser):
    p.add_argument("--bags", type=int, default=None)
    p.add_argument("--trees-per-bag", type=int, default=None)
    p.add_argument("--max-leaves", type=int, default=None)
    p.add_argument("--shrinkage", type=float, default=None)
    p.add_argument("--sample-rate", type=float, default=None)
    p.add_argument("--feature-rate", type=float, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tcpci")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate and normalize a dataset")
    p.add_argument("source", type=Path, help="dataset directory (optionally a git repo)")
    p.add_argument("dest", type=Path, help="output dataset directory")
    _add_common(p)

    p = sub.add_parser("extract", help="write features/build_<id>.csv")
    p.add_argument("dataset", type=Path)
    p.add_argument("--build", type=int, required=True)
    p.add_argument("--out", type=Path, default=None)
    _add_common(p)

    p = sub.add_parser("train", help="train on failed builds before --until")
    p.add_argument("dataset", type=Path)
    p.add_argument("--until", type=int, required=True)
    p.add_argument("--out", type=Path, required=True)
    _add_common(p)
    _add_hyperparams(p)

    p = sub.add_parser("prioritize", help="print ranked test paths for a build")
    p.add_argument("dataset", type=Path)
    p.add_argument("--build", type=int, required=True)
    p.add_argument("--model", type=Path, required=True)
    _add_common(p)

    p = sub.add_parser("evaluate", help="train-on-prior evaluation; emits apfdc.csv/timing.csv")
    p.add_argument("dataset", type=Path)
    p.add_argument("--heuristic", type=str, default=None)
    p.add_argument("--max-builds", type=int, default=None)
    p.add_argument("--out", type=Path, default=None)
    p.add_argument("--keep-outliers", action="store_true")
    _add_common(p)
    _add_hyperparams(p)

    p = sub.add_parser("decay", help="retraining-window decay experiment; emits decay.csv")
    p.add_argument("dataset", type=Path)
    p.add_argument("--max-rw", type=int, default=None)
    p.add_argument("--max-builds", type=int, default=None)
    p.add_argument("--out", type=Path, default=None)
    p.add_argument("--keep-outliers", action="store_true")
    _add_common(p)
    _add_hyperparams(p)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--config", type=Path, default=None, help="JSON generator config")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--jobs", type=int, default=None)
    return parser


def _load_config(path: Path | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as f:
            cfg = json.load(f)
    except FileNotFoundError as exc:
        raise InvalidConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise InvalidConfigError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(cfg, dict):
        raise InvalidConfigError(f"{path}: config must be a JSON object")
    return cfg


def _opt(args, cfg: dict, name: str, default):
    """Flag value if given, else config value, else default."""
    value = getattr(args, name, None)
    if value is not None:
        return value
    return cfg.get(name, default)


def _hyperparams(args, cfg: dict) -> Hyperparams:
    return Hyperparams(
        n_bags=_opt(args, cfg, "bags", 150),
        trees_per_bag=_opt(args, cfg, "trees_per_bag", 5),
        max_leaves=_opt(args, cfg, "max_leaves", 200),
        shrinkage=_opt(args, cfg, "shrinkage", 0.2),
        sample_rate=_opt(args, cfg, "sample_rate", 0.5),
        feature_rate=_opt(args, cfg, "feature_rate", 0.3),
    )


def _load(dataset: Path, filter_outliers: bool = False):
    layout = DatasetLayout(dataset)
    history = ingest_exec_records(layout)
    if filter_outliers:
        history, removed = remove_frequent_failers(history)
        if removed:
            print(f"removed {len(removed)} frequently-failing tests", file=sys.stderr)
    return layout, history


def _extractor_kwargs(args, cfg: dict) -> dict:
    return {
        "rec_window": RecWindow(_opt(args, cfg, "recent_window", 6)),
        "impact_depth": _opt(args, cfg, "impact_depth", 1),
    }


def _cmd_ingest(args, cfg: dict) -> int:
    layout = DatasetLayout(args.source, repo=args.source)
    history = ingest_exec_records(layout)
    write_dataset(history, args.dest)
    src = layout.src_dir
    if src is not None and src != args.dest / "src":
        shutil.copytree(src, args.dest / "src", dirs_exist_ok=True)
    print(f"{len(history.builds)} builds, {len(history.commits)} commits")
    return EXIT_OK


def _cmd_extract(args, cfg: dict) -> int:
    layout, history = _load(args.dataset)
    if args.build not in history:
        raise InputError(f"build {args.build} not in dataset")
    extractor = FeatureExtractor(history, load_sources(layout), **_extractor_kwargs(args, cfg))
    matrix = extractor.matrix(args.build)
    out = args.out or args.dataset / "features" / f"build_{args.build}.csv"
    matrix.write_csv(out)
    print(out)
    return EXIT_OK


def _cmd_train(args, cfg: dict) -> int:
    layout, history = _load(args.dataset)
    train_builds = [b for b in history.failed_builds if b.id < args.until]
    if not train_builds:
        raise NoFailedBuildsError(f"no failed builds before {args.until}")
    extractor = FeatureExtractor(history, load_sources(layout), **_extractor_kwargs(args, cfg))
    X, y = stack_matrices([extractor.matrix(b.id) for b in train_builds])
    model = train_ranker(X, y, _hyperparams(args, cfg), seed=_opt(args, cfg, "seed", 0))
    args.out.parent.mkdir(parents=True, exist_ok=True)
    args.out.write_text(model.to_json(), encoding="utf-8")
    print(args.out)
    return EXIT_OK


def _cmd_prioritize(args, cfg: dict) -> int:
    layout, history = _load(args.dataset)
    if args.build not in history:
        raise InputError(f"build {args.build} not in dataset")
    try:
        model = RankModel.from_json(args.model.read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise InputError(f"model file not found: {args.model}") from exc
    extractor = FeatureExtractor(history, load_sources(layout), **_extractor_kwargs(args, cfg))
    for test in rank_tests(model, extractor.matrix(args.build)):
        print(test)
    return EXIT_OK


def _cmd_evaluate(args, cfg: dict) -> int:
    layout, history = _load(args.dataset, filter_outliers=not args.keep_outliers)
    report = run_pipeline_eval(
        history,
        load_sources(layout),
        _hyperparams(args, cfg),
        seed=_opt(args, cfg, "seed", 0),
        max_builds=_opt(args, cfg, "max_builds", 50),
        heuristic=_opt(args, cfg, "heuristic", DEFAULT_HEURISTIC),
        **_extractor_kwargs(args, cfg),
    )
    out = args.out or args.dataset / "reports"
    report.write(out)
    for strategy, (mean, sd) in report.summary().items():
        print(f"{strategy}: mean APFD_C {mean:.4f} (sd {sd:.4f})")
    return EXIT_OK


def _cmd_decay(args, cfg: dict) -> int:
    layout, history = _load(args.dataset, filter_outliers=not args.keep_outliers)
    curve = decay_experiment(
        history,
        load_sources(layout),
        _hyperparams(args, cfg),
        seed=_opt(args, cfg, "seed", 0),
        max_builds=_opt(args, cfg, "max_builds", 50),
        max_rw=_opt(args, cfg, "max_rw", 11),
        **_extractor_kwargs(args, cfg),
    )
    out = args.out or args.dataset / "reports" / "decay.csv"
    curve.write(out)
    print(f"slope over RW: {curve.slope():+.6f}")
    return EXIT_OK


def _cmd_synth(args, cfg: dict) -> int:
    cfg = dict(cfg)
    seed = _opt(args, cfg, "seed", 0)
    cfg.pop("seed", None)
    known = set(SynthConfig.__dataclass_fields__)
    unknown = set(cfg) - known
    if unknown:
        raise InvalidConfigError(f"unknown generator config keys: {sorted(unknown)}")
    try:
        config = SynthConfig(**cfg)
    except (TypeError, ValueError) as exc:
        raise InvalidConfigError(str(exc)) from exc
    layout, _ = write_synthetic_dataset(args.out, config, seed=seed)
    print(layout.root)
    return EXIT_OK


_COMMANDS = {
    "ingest": _cmd_ingest,
    "extract": _cmd_extract,
    "train": _cmd_train,
    "prioritize": _cmd_prioritize,
    "evaluate": _cmd_evaluate,
    "decay": _cmd_decay,
    "synth": _cmd_synth,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _load_config(args.config)
        return _COMMANDS[args.command](args, cfg)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (InsufficientHistoryError, NoFailedBuildsError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_HISTORY
    except TcpciError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())

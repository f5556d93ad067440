"""Command-line entry point for the timing-prediction pipeline.

Subcommands: extract, synth, train, cv, grid, eval, predict. Exit codes are
fixed for scripting: 0 success, 1 usage error, 2 data or parse error, 3
numeric failure (training loss became non-finite). Human-readable messages
go to standard error; machine-readable rows go to files or standard output.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import experiment, neuralnet
from .dataset import (
    Dataset,
    default_cost_model,
    load_cost_model,
    load_dataset,
    save_dataset,
    synthesize_corpus,
)
from .errors import (
    EarlyWcetError,
    NonFiniteLossError,
    SchemaMismatchError,
)
from .fileio import atomic_write_text, read_text
from .neuralnet import NetworkConfig, TrainConfig
from .vmir import (
    FEATURE_NAMES,
    extract_features,
    extract_features_batch,
    feature_csv_text,
    parse_vmir_file,
    render_vmir,
    write_feature_csv,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems via UsageError instead of exiting."""

    def error(self, message):
        raise UsageError(f"{message}\n{self.format_usage()}")


def _info(message: str) -> None:
    print(message, file=sys.stderr)


def _load_json_config(path) -> dict:
    try:
        data = json.loads(read_text(path))
    except json.JSONDecodeError as exc:
        raise SchemaMismatchError("json", f"{path}: {exc}") from exc
    if not isinstance(data, dict):
        raise SchemaMismatchError("json", f"{path}: expected an object")
    return data


_TRAIN_CONFIG_KEYS = {
    "hidden_widths", "leaky_slope", "l2_beta", "linear_output",
    "learning_rate", "epochs", "batch_size", "seed",
    "beta1", "beta2", "epsilon",
}


def _resolve_train_settings(args, n_samples: int) -> tuple[NetworkConfig, TrainConfig]:
    """Merge config-file values and CLI flags; flags win."""
    file_conf: dict = {}
    if getattr(args, "config", None):
        file_conf = _load_json_config(args.config)
        unknown = set(file_conf) - _TRAIN_CONFIG_KEYS
        if unknown:
            raise SchemaMismatchError(sorted(unknown)[0], "unknown training-config field")
    seed = args.seed if args.seed is not None else int(file_conf.get("seed", 0))
    lr = args.lr if args.lr is not None else float(file_conf.get("learning_rate", 0.01))
    epochs = args.epochs if args.epochs is not None else int(file_conf.get("epochs", 100))
    batch = args.batch if args.batch is not None else file_conf.get("batch_size")
    if batch is None:
        batch = experiment.default_batch_size(n_samples)
    config = NetworkConfig(
        hidden_widths=tuple(file_conf.get("hidden_widths", (32, 32, 32))),
        leaky_slope=float(file_conf.get("leaky_slope", 0.01)),
        l2_beta=float(file_conf.get("l2_beta", 0.01)),
        linear_output=bool(file_conf.get("linear_output", False)),
        init_seed=seed,
    )
    tc = TrainConfig(
        learning_rate=lr,
        batch_size=int(batch),
        epochs=epochs,
        shuffle_seed=seed,
        beta1=float(file_conf.get("beta1", 0.9)),
        beta2=float(file_conf.get("beta2", 0.999)),
        epsilon=float(file_conf.get("epsilon", 1e-8)),
    )
    return config, tc


# --- subcommands -------------------------------------------------------------


def cmd_extract(args) -> int:
    if not args.inputs:
        raise UsageError("extract: at least one VMIR file is required")
    rows = extract_features_batch(args.inputs)
    if args.out:
        write_feature_csv(args.out, rows)
        _info(f"wrote {len(rows)} feature rows to {args.out}")
    else:
        sys.stdout.write(feature_csv_text(rows))
    return EXIT_OK


def cmd_synth(args) -> int:
    if args.count < 1:
        raise UsageError("synth: --count must be positive")
    if args.config:
        cost_model, config_seed = load_cost_model(args.config)
    else:
        cost_model, config_seed = default_cost_model(), None
    seed = args.seed if args.seed is not None else (config_seed or 0)
    dataset, programs = synthesize_corpus(args.count, seed, cost_model)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for program in programs:
        atomic_write_text(out_dir / f"{program.name}.vmir", render_vmir(program))
    save_dataset(out_dir / "dataset.csv", dataset)
    _info(
        f"synthesized {len(programs)} programs into {out_dir} "
        f"(labels in {out_dir / 'dataset.csv'})"
    )
    return EXIT_OK


def _print_train_rmse(params, dataset: Dataset) -> None:
    pct = 100 * experiment.model_rmse(params, dataset)
    raw = experiment.model_rmse(params, dataset, raw=True)
    _info(f"final train RMSE: {pct:.3f}% (normalized), {raw:.1f} cycles (raw)")


def cmd_train(args) -> int:
    dataset = load_dataset(args.dataset)
    config, tc = _resolve_train_settings(args, len(dataset))
    params, curve = experiment.train_on_dataset(dataset, config, tc)
    neuralnet.save_model(args.model, params)
    if args.curve:
        text = experiment.single_curve_csv_text(
            tc.learning_rate, config.hidden_widths[0], curve
        )
        atomic_write_text(args.curve, text)
    _print_train_rmse(params, dataset)
    _info(f"model written to {args.model}")
    return EXIT_OK


def cmd_cv(args) -> int:
    dataset = load_dataset(args.dataset)
    if args.folds < 2:
        raise UsageError("cv: --folds must be at least 2")
    config, tc = _resolve_train_settings(args, len(dataset))
    results = experiment.cross_validate(dataset, config, tc, args.folds, tc.shuffle_seed)
    print("fold,train_rmse_pct,val_rmse_pct")
    for r in results:
        print(f"{r.fold},{100 * r.train_rmse!r},{100 * r.val_rmse!r}")
    avg_train = sum(r.train_rmse for r in results) / len(results)
    avg_val = sum(r.val_rmse for r in results) / len(results)
    _info(
        f"{args.folds}-fold CV: avg train RMSE {100 * avg_train:.3f}%, "
        f"avg val RMSE {100 * avg_val:.3f}%"
    )
    return EXIT_OK


def cmd_grid(args) -> int:
    dataset = load_dataset(args.dataset)
    test_set = load_dataset(args.test)
    if args.grid:
        try:
            grid = experiment.GridSpec.from_json_dict(_load_json_config(args.grid))
        except ValueError as exc:
            raise UsageError(f"grid: {exc}") from exc
    else:
        grid = experiment.GridSpec(base_seed=args.seed if args.seed is not None else 0)
    batch = args.batch if args.batch is not None else experiment.default_batch_size(len(dataset))
    tc_base = TrainConfig(
        learning_rate=0.01,  # placeholder; replaced per configuration
        batch_size=batch,
        epochs=args.epochs if args.epochs is not None else 100,
    )
    reports = experiment.run_grid(
        dataset, test_set, grid, tc_base, folds=args.folds, jobs=args.jobs
    )
    experiment.emit_report(reports, args.out, args.curve)
    best_lr, best_width = experiment.select_best(reports)
    _info(f"ran {len(reports)} configurations; best: lr={best_lr!r} width={best_width}")
    _info(f"summary in {args.out}, learning curves in {args.curve}")
    return EXIT_OK


def cmd_eval(args) -> int:
    params = neuralnet.load_model(args.model)
    dataset = load_dataset(args.dataset)
    value = experiment.model_rmse(params, dataset, raw=args.raw_rmse)
    if args.raw_rmse:
        print(repr(value))
        _info(f"RMSE on {args.dataset}: {value:.1f} cycles (raw)")
    else:
        print(repr(100 * value))
        _info(f"RMSE on {args.dataset}: {100 * value:.3f}% (normalized)")
    return EXIT_OK


def cmd_predict(args) -> int:
    params = neuralnet.load_model(args.model)
    program = parse_vmir_file(args.program)
    features = extract_features(program)
    cycles = neuralnet.predict(params, features)
    print("name," + ",".join(FEATURE_NAMES) + ",predicted_cycles")
    counts = ",".join(str(c) for c in features.counts)
    print(f"{program.name},{counts},{cycles!r}")
    return EXIT_OK


# --- parser and dispatch ------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="earlywcet",
        description="Early worst-case execution time estimation from static features.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="count instruction categories in VMIR files")
    p.add_argument("inputs", nargs="*", help="VMIR program files")
    p.add_argument("--out", help="feature CSV output path (default: stdout)")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("synth", help="generate a labeled synthetic corpus")
    p.add_argument("--config", help="cost-model JSON file")
    p.add_argument("--count", type=int, required=True, help="number of programs")
    p.add_argument("--seed", type=int, help="corpus seed (overrides config seed)")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train a regressor on a labeled CSV")
    p.add_argument("--dataset", required=True, help="labeled CSV path")
    p.add_argument("--config", help="network/training config JSON")
    p.add_argument("--model", required=True, help="model JSON output path")
    p.add_argument("--curve", help="learning-curve CSV output path")
    p.add_argument("--lr", type=float, help="learning rate")
    p.add_argument("--epochs", type=int, help="training epochs")
    p.add_argument("--batch", type=int, help="mini-batch size")
    p.add_argument("--seed", type=int, help="init and shuffle seed")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("cv", help="k-fold cross-validation on a labeled CSV")
    p.add_argument("--dataset", required=True)
    p.add_argument("--config", help="network/training config JSON")
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--lr", type=float)
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch", type=int)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_cv)

    p = sub.add_parser("grid", help="hyperparameter grid search with CV and test pass")
    p.add_argument("--dataset", required=True, help="training CSV")
    p.add_argument("--test", required=True, help="held-out test CSV")
    p.add_argument("--grid", help="grid JSON file (defaults: 3 rates x 4 widths)")
    p.add_argument("--out", required=True, help="summary CSV output path")
    p.add_argument("--curve", required=True, help="learning-curve CSV output path")
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch", type=int)
    p.add_argument("--seed", type=int, help="base seed when no grid file is given")
    p.add_argument("--jobs", type=int, default=1, help="parallel configurations")
    p.set_defaults(func=cmd_grid)

    p = sub.add_parser("eval", help="evaluate a saved model on a labeled CSV")
    p.add_argument("--model", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--raw-rmse", action="store_true", help="report cycle-scale RMSE")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("predict", help="predict cycles for one VMIR program")
    p.add_argument("--model", required=True)
    p.add_argument("program", help="VMIR file")
    p.set_defaults(func=cmd_predict)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        _info(f"error: {exc}")
        return EXIT_USAGE
    except NonFiniteLossError as exc:
        _info(f"numeric failure: {exc}")
        return EXIT_NUMERIC
    except EarlyWcetError as exc:
        _info(f"error: {exc}")
        return EXIT_DATA
    except OSError as exc:
        _info(f"error: {exc}")
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())

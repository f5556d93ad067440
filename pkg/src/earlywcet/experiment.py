"""Evaluation protocol: k-fold cross-validation, the hyperparameter grid,
seeded repeats, and min/avg/max RMSE aggregation with CSV report emission.

Per configuration (learning rate x hidden width) the grid runs several
independently seeded repetitions; each repetition performs a full k-fold
cross-validation on the training corpus plus one train-on-everything pass
evaluated on the held-out test corpus. Train/validation aggregates range
over fold x repetition values, test aggregates over repetitions.
"""

from __future__ import annotations

import concurrent.futures
from dataclasses import dataclass, replace

import numpy as np

from .dataset import (
    Dataset,
    NormStats,
    fit_norm,
    kfold_split,
    normalize_features,
    normalize_labels,
)
from .errors import (
    EmptyInputError,
    EmptyReportsError,
    LengthMismatchError,
    MissingNormStatsError,
)
from .fileio import atomic_write_text
from .neuralnet import (
    LearningCurve,
    ModelParams,
    NetworkConfig,
    TrainConfig,
    forward,
    train,
)
from .seeding import derive_seeds

DEFAULT_LEARNING_RATES: tuple[float, ...] = (0.001, 0.01, 0.03)
DEFAULT_HIDDEN_WIDTHS: tuple[int, ...] = (16, 32, 64, 128)


def rmse(predictions, targets) -> float:
    """Root of the mean of the squared prediction errors."""
    predictions = np.asarray(predictions, dtype=np.float64).reshape(-1)
    targets = np.asarray(targets, dtype=np.float64).reshape(-1)
    if predictions.shape[0] != targets.shape[0]:
        raise LengthMismatchError(predictions.shape[0], targets.shape[0])
    if predictions.shape[0] == 0:
        raise EmptyInputError("rmse input")
    return float(np.sqrt(np.mean((predictions - targets) ** 2)))


def default_batch_size(n_samples: int) -> int:
    """10 for small corpora (< 100 samples), 40 otherwise."""
    return 10 if n_samples < 100 else 40


def train_on_dataset(
    dataset: Dataset,
    config: NetworkConfig,
    tc: TrainConfig,
    val_dataset: Dataset | None = None,
) -> tuple[ModelParams, LearningCurve]:
    """Fit normalization on `dataset`, train on it, attach the stats."""
    stats = fit_norm(dataset)
    x = normalize_features(stats, dataset.features_array())
    y = normalize_labels(stats, dataset.labels_array())
    x_val = y_val = None
    if val_dataset is not None:
        x_val = normalize_features(stats, val_dataset.features_array())
        y_val = normalize_labels(stats, val_dataset.labels_array())
    params, curve = train(x, y, config, tc, x_val, y_val)
    params.norm_stats = stats
    return params, curve


def model_rmse(params: ModelParams, dataset: Dataset, raw: bool = False) -> float:
    """RMSE of a trained model on a labeled dataset.

    Normalized label scale by default; `raw=True` reports cycle units.
    """
    stats = params.norm_stats
    if stats is None:
        raise MissingNormStatsError()
    predictions = forward(params, normalize_features(stats, dataset.features_array())).predictions
    if raw:
        span = stats.label_max - stats.label_min
        return rmse(predictions * span + stats.label_min, dataset.labels_array())
    return rmse(predictions, normalize_labels(stats, dataset.labels_array()))


@dataclass(frozen=True)
class FoldResult:
    fold: int
    train_rmse: float
    val_rmse: float
    norm_stats: NormStats


def cross_validate(
    dataset: Dataset,
    config: NetworkConfig,
    tc: TrainConfig,
    k: int,
    seed: int,
) -> list[FoldResult]:
    """k-fold cross-validation with normalization fitted per fold.

    For each fold, min-max statistics come from the k-1 training folds only;
    the held-out fold is normalized with those same statistics, so its labels
    never influence the scaling.
    """
    assignment = kfold_split(len(dataset), k, seed)
    features = dataset.features_array()
    labels = dataset.labels_array()
    results: list[FoldResult] = []
    for fold in range(k):
        val_idx = assignment.fold_indices(fold)
        train_idx = assignment.rest_indices(fold)
        stats = fit_norm(dataset.subset(train_idx))
        x = normalize_features(stats, features)
        y = normalize_labels(stats, labels)
        params, _ = train(x[train_idx], y[train_idx], config, tc)
        train_rmse = rmse(forward(params, x[train_idx]).predictions, y[train_idx])
        val_rmse = rmse(forward(params, x[val_idx]).predictions, y[val_idx])
        results.append(FoldResult(fold, train_rmse, val_rmse, stats))
    return results


@dataclass(frozen=True)
class GridSpec:
    learning_rates: tuple[float, ...] = DEFAULT_LEARNING_RATES
    hidden_widths: tuple[int, ...] = DEFAULT_HIDDEN_WIDTHS
    runs_per_config: int = 5
    base_seed: int = 0

    def __post_init__(self):
        if not self.learning_rates or not self.hidden_widths:
            raise ValueError("grid learning_rates and hidden_widths must be non-empty")
        if any(lr <= 0 for lr in self.learning_rates):
            raise ValueError("learning rates must be positive")
        if any(w < 1 for w in self.hidden_widths):
            raise ValueError("hidden widths must be positive")
        if self.runs_per_config < 1:
            raise ValueError("runs_per_config must be >= 1")

    def configurations(self) -> list[tuple[float, int]]:
        """All (lr, width) pairs, ordered by (lr, width)."""
        return [
            (lr, width)
            for lr in sorted(self.learning_rates)
            for width in sorted(self.hidden_widths)
        ]

    @classmethod
    def from_json_dict(cls, data: dict) -> "GridSpec":
        known = {"learning_rates", "hidden_widths", "runs_per_config", "base_seed"}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown grid fields: {sorted(unknown)}")
        return cls(
            learning_rates=tuple(data.get("learning_rates", DEFAULT_LEARNING_RATES)),
            hidden_widths=tuple(data.get("hidden_widths", DEFAULT_HIDDEN_WIDTHS)),
            runs_per_config=int(data.get("runs_per_config", 5)),
            base_seed=int(data.get("base_seed", 0)),
        )


@dataclass(frozen=True)
class SplitStats:
    min: float
    avg: float
    max: float

    @classmethod
    def of(cls, values) -> "SplitStats":
        values = [float(v) for v in values]
        return cls(min(values), float(np.mean(values)), max(values))


@dataclass(frozen=True)
class RunReport:
    """All RMSE observations for one (lr, width) configuration."""

    learning_rate: float
    hidden_width: int
    fold_train_rmse: tuple[tuple[float, ...], ...]  # [run][fold]
    fold_val_rmse: tuple[tuple[float, ...], ...]  # [run][fold]
    test_rmse: tuple[float, ...]  # [run]
    curves: tuple[LearningCurve, ...]  # [run], from the train-on-all pass

    @property
    def train_stats(self) -> SplitStats:
        return SplitStats.of(v for run in self.fold_train_rmse for v in run)

    @property
    def val_stats(self) -> SplitStats:
        return SplitStats.of(v for run in self.fold_val_rmse for v in run)

    @property
    def test_stats(self) -> SplitStats:
        return SplitStats.of(self.test_rmse)

    @property
    def avg_val_rmse(self) -> float:
        return self.val_stats.avg

    @property
    def avg_train_rmse(self) -> float:
        return self.train_stats.avg


def _run_config(
    dataset: Dataset,
    test_set: Dataset,
    lr: float,
    width: int,
    config_index: int,
    grid: GridSpec,
    tc_base: TrainConfig,
    folds: int,
) -> RunReport:
    fold_train: list[tuple[float, ...]] = []
    fold_val: list[tuple[float, ...]] = []
    test_values: list[float] = []
    curves: list[LearningCurve] = []
    for run in range(grid.runs_per_config):
        init_seed, shuffle_seed, fold_seed = derive_seeds(
            3, grid.base_seed, config_index, run
        )
        config = NetworkConfig(hidden_widths=(width,) * 3, init_seed=init_seed)
        tc = replace(tc_base, learning_rate=lr, shuffle_seed=shuffle_seed)
        cv = cross_validate(dataset, config, tc, folds, fold_seed)
        fold_train.append(tuple(r.train_rmse for r in cv))
        fold_val.append(tuple(r.val_rmse for r in cv))
        params, curve = train_on_dataset(dataset, config, tc, val_dataset=test_set)
        test_values.append(model_rmse(params, test_set))
        curves.append(curve)
    return RunReport(
        learning_rate=lr,
        hidden_width=width,
        fold_train_rmse=tuple(fold_train),
        fold_val_rmse=tuple(fold_val),
        test_rmse=tuple(test_values),
        curves=tuple(curves),
    )


def run_grid(
    dataset: Dataset,
    test_set: Dataset,
    grid: GridSpec,
    tc_base: TrainConfig,
    folds: int = 5,
    jobs: int = 1,
) -> list[RunReport]:
    """Run every grid configuration; reports come back ordered by (lr, width).

    Configurations are independent given the read-only datasets, so they may
    execute in parallel (`jobs` > 1); output order never depends on timing.
    """
    configurations = grid.configurations()
    args = [
        (dataset, test_set, lr, width, index, grid, tc_base, folds)
        for index, (lr, width) in enumerate(configurations)
    ]
    if jobs <= 1:
        return [_run_config(*a) for a in args]
    with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
        futures = [pool.submit(_run_config, *a) for a in args]
        return [f.result() for f in futures]


def select_best(reports: list[RunReport]) -> tuple[float, int]:
    """Configuration with the lowest average validation RMSE.

    Ties break on lower average training RMSE, then on report order.
    """
    if not reports:
        raise EmptyReportsError()
    best = min(
        range(len(reports)),
        key=lambda i: (reports[i].avg_val_rmse, reports[i].avg_train_rmse, i),
    )
    return reports[best].learning_rate, reports[best].hidden_width


def summary_csv_text(reports: list[RunReport]) -> str:
    lines = ["lr,width,split,min_rmse_pct,avg_rmse_pct,max_rmse_pct"]
    for report in reports:
        for split, stats in (
            ("train", report.train_stats),
            ("val", report.val_stats),
            ("test", report.test_stats),
        ):
            lines.append(
                f"{report.learning_rate!r},{report.hidden_width},{split},"
                f"{100 * stats.min!r},{100 * stats.avg!r},{100 * stats.max!r}"
            )
    return "\n".join(lines) + "\n"


_CURVE_HEADER = "lr,width,run,epoch,train_loss,val_loss"


def _curve_lines(lr: float, width: int, run: int, curve: LearningCurve) -> list[str]:
    lines = []
    for point in curve.points:
        val = "" if point.val_loss is None else repr(point.val_loss)
        lines.append(f"{lr!r},{width},{run},{point.epoch},{point.train_loss!r},{val}")
    return lines


def curves_csv_text(reports: list[RunReport]) -> str:
    lines = [_CURVE_HEADER]
    for report in reports:
        for run, curve in enumerate(report.curves):
            lines.extend(_curve_lines(report.learning_rate, report.hidden_width, run, curve))
    return "\n".join(lines) + "\n"


def single_curve_csv_text(lr: float, width: int, curve: LearningCurve) -> str:
    """Curve CSV for one standalone training run (run column 0)."""
    return "\n".join([_CURVE_HEADER, *_curve_lines(lr, width, 0, curve)]) + "\n"


def emit_report(reports: list[RunReport], summary_path, curves_path) -> None:
    """Write the summary and learning-curve CSVs (atomically, deterministically)."""
    if not reports:
        raise EmptyReportsError()
    atomic_write_text(summary_path, summary_csv_text(reports))
    atomic_write_text(curves_path, curves_csv_text(reports))

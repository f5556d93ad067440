"""Labeled datasets: loading, normalization, fold assignment, and synthesis.

A sample pairs a program's 12-entry static feature vector with a simulated
cycle count used as the training label. Min-max normalization statistics are
always fitted on training samples only; values outside the training range are
deliberately not clamped, since extrapolation is exactly the regime an early
timing estimate operates in.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    BadFoldCountError,
    DuplicateNameError,
    EmptyDatasetError,
    IoFailure,
    NonPositiveLabelError,
    SchemaMismatchError,
)
from .fileio import atomic_write_text, read_text
from .seeding import seeded_rng
from .vmir import (
    CANONICAL_MNEMONIC,
    FEATURE_NAMES,
    MNEMONIC_TABLE,
    N_FEATURES,
    Category,
    FeatureVector,
    Instruction,
    VmirProgram,
    extract_features,
)

LABELED_HEADER: tuple[str, ...] = ("name", *FEATURE_NAMES, "cycles")


@dataclass(frozen=True)
class Sample:
    name: str
    features: FeatureVector
    cycles: float

    def __post_init__(self):
        if not self.cycles > 0:
            raise ValueError(f"cycles must be positive, got {self.cycles!r}")


@dataclass(frozen=True)
class Dataset:
    samples: tuple[Sample, ...]
    feature_names: tuple[str, ...] = FEATURE_NAMES

    def __post_init__(self):
        seen = set()
        for sample in self.samples:
            if sample.name in seen:
                raise DuplicateNameError(sample.name)
            seen.add(sample.name)

    def __len__(self) -> int:
        return len(self.samples)

    def __iter__(self):
        return iter(self.samples)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(s.name for s in self.samples)

    def features_array(self) -> np.ndarray:
        """(n, 12) float64 matrix of raw counts."""
        return np.array([s.features.counts for s in self.samples], dtype=np.float64)

    def labels_array(self) -> np.ndarray:
        return np.array([s.cycles for s in self.samples], dtype=np.float64)

    def subset(self, indices: Sequence[int]) -> "Dataset":
        return Dataset(tuple(self.samples[int(i)] for i in indices))


def load_dataset(path) -> Dataset:
    """Read a labeled CSV (header `name,add,...,cmp,cycles`)."""
    text = read_text(path)
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise SchemaMismatchError("name", "missing (file is empty)") from None
    if tuple(header) != LABELED_HEADER:
        for column in LABELED_HEADER:
            if column not in header:
                raise SchemaMismatchError(column, "missing from header")
        for column in header:
            if column not in LABELED_HEADER:
                raise SchemaMismatchError(column, "unexpected in header")
        raise SchemaMismatchError(header[0], "columns out of order")
    samples: list[Sample] = []
    names: set[str] = set()
    for row_number, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(LABELED_HEADER):
            raise SchemaMismatchError(
                LABELED_HEADER[min(len(row), len(LABELED_HEADER) - 1)],
                f"row {row_number} has {len(row)} cells",
            )
        name = row[0]
        if name in names:
            raise DuplicateNameError(name)
        names.add(name)
        counts = []
        for column, cell in zip(FEATURE_NAMES, row[1:-1]):
            try:
                counts.append(int(cell))
            except ValueError:
                raise SchemaMismatchError(
                    column, f"row {row_number}: {cell!r} is not an integer"
                ) from None
        try:
            cycles = float(row[-1])
        except ValueError:
            raise SchemaMismatchError(
                "cycles", f"row {row_number}: {row[-1]!r} is not a number"
            ) from None
        if not cycles > 0:
            raise NonPositiveLabelError(row_number, cycles)
        samples.append(Sample(name, FeatureVector(tuple(counts)), cycles))
    return Dataset(tuple(samples))


def dataset_csv_text(dataset: Dataset) -> str:
    lines = [",".join(LABELED_HEADER)]
    for sample in dataset.samples:
        cells = [sample.name, *map(str, sample.features.counts), repr(sample.cycles)]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def save_dataset(path, dataset: Dataset) -> None:
    atomic_write_text(path, dataset_csv_text(dataset))


# --- normalization ----------------------------------------------------------


@dataclass
class NormStats:
    """Per-feature and label min/max, fitted on training samples only."""

    feature_min: np.ndarray
    feature_max: np.ndarray
    label_min: float
    label_max: float

    def __post_init__(self):
        self.feature_min = np.asarray(self.feature_min, dtype=np.float64)
        self.feature_max = np.asarray(self.feature_max, dtype=np.float64)
        if self.feature_min.shape != (N_FEATURES,) or self.feature_max.shape != (N_FEATURES,):
            raise ValueError("feature_min/feature_max must have 12 entries")
        if np.any(self.feature_min > self.feature_max) or self.label_min > self.label_max:
            raise ValueError("min exceeds max in normalization stats")

    def __eq__(self, other) -> bool:
        if not isinstance(other, NormStats):
            return NotImplemented
        return (
            np.array_equal(self.feature_min, other.feature_min)
            and np.array_equal(self.feature_max, other.feature_max)
            and self.label_min == other.label_min
            and self.label_max == other.label_max
        )

    def to_json_dict(self) -> dict:
        return {
            "feature_min": self.feature_min.tolist(),
            "feature_max": self.feature_max.tolist(),
            "label_min": self.label_min,
            "label_max": self.label_max,
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "NormStats":
        return cls(
            np.asarray(data["feature_min"], dtype=np.float64),
            np.asarray(data["feature_max"], dtype=np.float64),
            float(data["label_min"]),
            float(data["label_max"]),
        )


def fit_norm(train: Dataset) -> NormStats:
    """Min-max statistics over the training samples only."""
    if len(train) == 0:
        raise EmptyDatasetError()
    features = train.features_array()
    labels = train.labels_array()
    return NormStats(
        feature_min=features.min(axis=0),
        feature_max=features.max(axis=0),
        label_min=float(labels.min()),
        label_max=float(labels.max()),
    )


def normalize_features(stats: NormStats, x) -> np.ndarray:
    """Map features to [0,1] via training extrema.

    Constant columns (min == max) map to 0; out-of-range values are not
    clamped and may fall outside [0,1].
    """
    x = np.asarray(x, dtype=np.float64)
    span = stats.feature_max - stats.feature_min
    safe = np.where(span > 0, span, 1.0)
    scaled = (x - stats.feature_min) / safe
    return np.where(span > 0, scaled, 0.0)


def normalize_labels(stats: NormStats, y):
    span = stats.label_max - stats.label_min
    y = np.asarray(y, dtype=np.float64)
    if span > 0:
        return (y - stats.label_min) / span
    return np.zeros_like(y)


def apply_norm(stats: NormStats, sample: Sample) -> tuple[np.ndarray, float]:
    """Normalized feature row and label for one sample."""
    row = normalize_features(stats, sample.features.to_array())
    label = float(normalize_labels(stats, sample.cycles))
    return row, label


def denorm_label(stats: NormStats, y_norm):
    """Inverse of label normalization: y_norm * (max - min) + min."""
    result = np.asarray(y_norm, dtype=np.float64) * (stats.label_max - stats.label_min)
    result = result + stats.label_min
    return float(result) if np.ndim(y_norm) == 0 else result


# --- fold assignment --------------------------------------------------------


@dataclass(frozen=True)
class FoldAssignment:
    fold_of: np.ndarray
    k: int

    def fold_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.fold_of == fold)

    def rest_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.fold_of != fold)

    def fold_sizes(self) -> list[int]:
        return [int(np.sum(self.fold_of == f)) for f in range(self.k)]


def kfold_split(n: int, k: int, seed: int) -> FoldAssignment:
    """Seeded partition of range(n) into k folds whose sizes differ by <= 1.

    A seeded permutation of the indices is cut into k contiguous chunks; the
    first n % k chunks take the extra sample.
    """
    if not 1 < k <= n:
        raise BadFoldCountError(k, n)
    permutation = seeded_rng(seed).permutation(n)
    fold_of = np.empty(n, dtype=np.int64)
    start = 0
    for fold in range(k):
        size = n // k + (1 if fold < n % k else 0)
        fold_of[permutation[start : start + size]] = fold
        start += size
    return FoldAssignment(fold_of=fold_of, k=k)


# --- synthetic corpus -------------------------------------------------------


@dataclass(frozen=True)
class CostModel:
    """Cycle-cost oracle standing in for hardware measurement.

    cycles = sum(weights[i] * count[i]) + interaction_coeff * load * jump
             + Gaussian noise

    The load x jump product gives the labels a cache/branch-flavored
    nonlinearity a purely linear regressor cannot capture.
    """

    weights: tuple[float, ...]
    interaction_coeff: float = 0.0
    noise_stddev: float = 0.0

    def __post_init__(self):
        coerced = tuple(float(w) for w in self.weights)
        if len(coerced) != N_FEATURES:
            raise ValueError(f"expected {N_FEATURES} weights, got {len(coerced)}")
        if any(w <= 0 for w in coerced):
            raise ValueError("all cost weights must be positive")
        if self.noise_stddev < 0:
            raise ValueError("noise_stddev must be non-negative")
        object.__setattr__(self, "weights", coerced)


def expected_cycles(model: CostModel, features: FeatureVector) -> float:
    """Noise-free cost of a feature vector under the model."""
    linear = float(np.dot(model.weights, features.counts))
    interaction = (
        model.interaction_coeff
        * features[Category.LOAD]
        * features[Category.JUMP]
    )
    return linear + interaction


def default_cost_model() -> CostModel:
    """Cost model used by the demos and synthetic experiments.

    Weights are rough per-category cycle costs (division and memory traffic
    expensive, plain ALU ops cheap); the interaction coefficient is sized so
    the load x jump term carries a large share of the total cost, which is
    what makes these labels genuinely nonlinear in the counts.
    """
    return CostModel(
        weights=(2.0, 2.0, 4.0, 12.0, 1.5, 1.5, 6.0, 3.0, 2.5, 5.0, 4.5, 1.0),
        interaction_coeff=0.4,
        noise_stddev=25.0,
    )


def load_cost_model(path) -> tuple[CostModel, int | None]:
    """Read a cost-model JSON config; returns the model and its seed field."""
    try:
        data = json.loads(read_text(path))
    except json.JSONDecodeError as exc:
        raise IoFailure(path, f"invalid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise IoFailure(path, "cost model must be a JSON object")
    known = {"weights", "interaction_coeff", "noise_stddev", "seed"}
    for key in data:
        if key not in known:
            raise SchemaMismatchError(key, "unknown cost-model field")
    if "weights" not in data:
        raise SchemaMismatchError("weights", "missing from cost model")
    try:
        model = CostModel(
            weights=tuple(data["weights"]),
            interaction_coeff=float(data.get("interaction_coeff", 0.0)),
            noise_stddev=float(data.get("noise_stddev", 0.0)),
        )
    except (TypeError, ValueError) as exc:
        raise IoFailure(path, str(exc)) from exc
    seed = data.get("seed")
    return model, (int(seed) if seed is not None else None)


# Per-category count ranges for random programs. Deliberately spread over two
# orders of magnitude so some features sit in the hundreds while others stay
# in single digits.
_COUNT_RANGES: dict[Category, tuple[int, int]] = {
    Category.ADD: (20, 300),
    Category.SUB: (10, 150),
    Category.MUL: (5, 80),
    Category.DIV: (0, 10),
    Category.LOGIC: (5, 60),
    Category.SHIFT: (0, 40),
    Category.CALL: (0, 12),
    Category.RETURN: (1, 12),
    Category.JUMP: (5, 100),
    Category.LOAD: (30, 400),
    Category.STORE: (20, 250),
    Category.COMPARE: (5, 100),
}

_VARIANTS: dict[Category, tuple[str, ...]] = {
    Category.LOGIC: ("and", "or", "xor", "not"),
    Category.SHIFT: ("shl", "shr"),
    Category.JUMP: ("jmp", "br"),
}

_REGISTERS = tuple(f"r{i}" for i in range(16))


def _pick(rng: np.random.Generator, seq: Sequence[str]) -> str:
    return seq[int(rng.integers(0, len(seq)))]


def _operands(rng: np.random.Generator, mnemonic: str, labels: Sequence[str]) -> tuple[str, ...]:
    reg = lambda: _pick(rng, _REGISTERS)
    if mnemonic in ("add", "sub", "mul", "div", "and", "or", "xor", "shl", "shr"):
        return (reg(), reg(), reg())
    if mnemonic == "not":
        return (reg(), reg())
    if mnemonic == "cmp":
        return (reg(), reg())
    if mnemonic == "call":
        return (f"f{int(rng.integers(0, 10))}",)
    if mnemonic == "ret":
        return ()
    if mnemonic == "jmp":
        return (_pick(rng, labels),)
    if mnemonic == "br":
        return (reg(), _pick(rng, labels))
    if mnemonic in ("load", "store"):
        return (reg(), reg())
    raise AssertionError(mnemonic)


def _random_program(rng: np.random.Generator, name: str) -> VmirProgram:
    counts = {
        category: int(rng.integers(low, high + 1))
        for category, (low, high) in _COUNT_RANGES.items()
    }
    total = sum(counts.values())
    mnemonics: list[str] = []
    for category, count in counts.items():
        variants = _VARIANTS.get(category, (CANONICAL_MNEMONIC[category],))
        mnemonics.extend(_pick(rng, variants) for _ in range(count))
    order = rng.permutation(total)

    n_jumps = counts[Category.JUMP]
    n_labels = max(1, n_jumps // 8) if n_jumps else 0
    labels = [f"L{j}" for j in range(n_labels)]
    label_positions = {
        label: int(rng.integers(0, total + 1)) for label in labels
    }

    labels_at: dict[int, int] = {}
    for position in label_positions.values():
        labels_at[position] = labels_at.get(position, 0) + 1

    instructions: list[Instruction] = []
    line_number = 0
    for index in order:
        position = len(instructions)
        line_number += labels_at.get(position, 0) + 1
        mnemonic = mnemonics[int(index)]
        instructions.append(
            Instruction(
                MNEMONIC_TABLE[mnemonic],
                _operands(rng, mnemonic, labels),
                line_number,
                mnemonic,
            )
        )
    return VmirProgram(name, tuple(instructions), label_positions).validate()


def synthesize_corpus(
    count: int,
    seed: int,
    cost_model: CostModel,
    name_prefix: str = "prog",
) -> tuple[Dataset, list[VmirProgram]]:
    """Generate `count` random programs with cost-model labels.

    Deterministic under `seed`. Labels are the cost-model formula applied to
    each program's extracted features, plus Gaussian noise when the model has
    a positive noise_stddev (redrawn in the rare case a draw would make the
    label non-positive).
    """
    if count <= 0:
        raise ValueError(f"count must be positive, got {count}")
    rng = seeded_rng(seed)
    programs: list[VmirProgram] = []
    samples: list[Sample] = []
    for i in range(count):
        program = _random_program(rng, f"{name_prefix}{i:04d}")
        programs.append(program)
        base = expected_cycles(cost_model, extract_features(program))
        cycles = base
        if cost_model.noise_stddev > 0:
            cycles = base + rng.normal(0.0, cost_model.noise_stddev)
            while cycles <= 0:
                cycles = base + rng.normal(0.0, cost_model.noise_stddev)
        samples.append(Sample(program.name, extract_features(program), float(cycles)))
    return Dataset(tuple(samples)), programs

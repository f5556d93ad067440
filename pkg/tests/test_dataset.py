import json

import numpy as np
import pytest

from earlywcet.dataset import (
    CostModel,
    Dataset,
    NormStats,
    Sample,
    apply_norm,
    dataset_csv_text,
    default_cost_model,
    denorm_label,
    expected_cycles,
    fit_norm,
    kfold_split,
    load_cost_model,
    load_dataset,
    normalize_features,
    normalize_labels,
    save_dataset,
    synthesize_corpus,
)
from earlywcet.errors import (
    BadFoldCountError,
    DuplicateNameError,
    EmptyDatasetError,
    NonPositiveLabelError,
    SchemaMismatchError,
)
from earlywcet.vmir import Category, FeatureVector, extract_features


def make_sample(name, counts, cycles):
    return Sample(name, FeatureVector(tuple(counts)), cycles)


def column_dataset(values):
    """Dataset whose first feature column takes the given values."""
    samples = tuple(
        make_sample(f"s{i}", (v,) + (0,) * 11, 100.0 + i) for i, v in enumerate(values)
    )
    return Dataset(samples)


# --- CSV ----------------------------------------------------------------------


def test_save_load_round_trip(tmp_path, small_dataset):
    path = tmp_path / "data.csv"
    save_dataset(path, small_dataset)
    loaded = load_dataset(path)
    assert loaded.names == small_dataset.names
    assert np.array_equal(loaded.features_array(), small_dataset.features_array())
    assert np.array_equal(loaded.labels_array(), small_dataset.labels_array())


def test_load_rejects_non_positive_cycles(tmp_path, small_dataset):
    text = dataset_csv_text(small_dataset).splitlines()
    text[1] = ",".join(text[1].split(",")[:-1] + ["0"])
    path = tmp_path / "bad.csv"
    path.write_text("\n".join(text) + "\n")
    with pytest.raises(NonPositiveLabelError) as exc_info:
        load_dataset(path)
    assert exc_info.value.row == 2


def test_load_rejects_missing_column(tmp_path, small_dataset):
    lines = dataset_csv_text(small_dataset).splitlines()
    header = lines[0].split(",")
    cmp_index = header.index("cmp")
    dropped = [",".join(c for i, c in enumerate(line.split(",")) if i != cmp_index) for line in lines]
    path = tmp_path / "bad.csv"
    path.write_text("\n".join(dropped) + "\n")
    with pytest.raises(SchemaMismatchError) as exc_info:
        load_dataset(path)
    assert exc_info.value.column == "cmp"


def test_load_rejects_unknown_column(tmp_path, small_dataset):
    lines = dataset_csv_text(small_dataset).splitlines()
    lines[0] += ",flops"
    lines[1:] = [line + ",1" for line in lines[1:]]
    path = tmp_path / "bad.csv"
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(SchemaMismatchError) as exc_info:
        load_dataset(path)
    assert exc_info.value.column == "flops"


def test_load_rejects_duplicate_names(tmp_path, small_dataset):
    lines = dataset_csv_text(small_dataset).splitlines()
    lines[2] = lines[1]
    path = tmp_path / "bad.csv"
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(DuplicateNameError):
        load_dataset(path)


def test_load_rejects_non_integer_count(tmp_path, small_dataset):
    lines = dataset_csv_text(small_dataset).splitlines()
    cells = lines[1].split(",")
    cells[1] = "3.5"
    lines[1] = ",".join(cells)
    path = tmp_path / "bad.csv"
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(SchemaMismatchError) as exc_info:
        load_dataset(path)
    assert exc_info.value.column == "add"


# --- normalization -------------------------------------------------------------


def test_fit_norm_single_sample():
    dataset = Dataset((make_sample("a", range(12), 500.0),))
    stats = fit_norm(dataset)
    assert np.array_equal(stats.feature_min, stats.feature_max)
    assert stats.label_min == stats.label_max == 500.0


def test_fit_norm_column_extrema():
    stats = fit_norm(column_dataset([2, 6, 10]))
    assert stats.feature_min[0] == 2
    assert stats.feature_max[0] == 10


def test_fit_norm_empty():
    with pytest.raises(EmptyDatasetError):
        fit_norm(Dataset(()))


def test_fit_norm_uses_training_samples_only(small_dataset):
    stats = fit_norm(small_dataset)
    # adding unrelated "test" samples elsewhere cannot change fitted stats
    again = fit_norm(small_dataset)
    assert stats == again


def test_apply_norm_endpoints_and_midpoint():
    dataset = column_dataset([2, 6, 10])
    stats = fit_norm(dataset)
    low, _ = apply_norm(stats, dataset.samples[0])
    mid, _ = apply_norm(stats, dataset.samples[1])
    high, _ = apply_norm(stats, dataset.samples[2])
    assert low[0] == 0.0
    assert mid[0] == 0.5
    assert high[0] == 1.0


def test_apply_norm_constant_column_is_zero():
    dataset = column_dataset([4, 4, 4])
    stats = fit_norm(dataset)
    row, _ = apply_norm(stats, dataset.samples[1])
    assert row[0] == 0.0
    # other constant columns (all zero here) also map to zero
    assert np.all(row == 0.0)


def test_apply_norm_does_not_clamp():
    stats = fit_norm(column_dataset([2, 6, 10]))
    outside = normalize_features(stats, np.array([14.0] + [0.0] * 11))
    assert outside[0] == 1.5


def test_label_normalization_endpoints():
    dataset = column_dataset([1, 2, 3])  # labels 100, 101, 102
    stats = fit_norm(dataset)
    assert normalize_labels(stats, 100.0) == 0.0
    assert normalize_labels(stats, 102.0) == 1.0
    assert denorm_label(stats, 0.0) == 100.0
    assert denorm_label(stats, 1.0) == 102.0


def test_label_round_trip_tight():
    rng = np.random.default_rng(3)
    stats = NormStats(np.zeros(12), np.ones(12), 57.0, 9341.0)
    for value in rng.uniform(57.0, 9341.0, size=50):
        back = denorm_label(stats, float(normalize_labels(stats, value)))
        assert abs(back - value) <= 1e-12 * abs(value)


# --- folds ----------------------------------------------------------------------


def test_kfold_sizes_57_5():
    assignment = kfold_split(57, 5, seed=11)
    assert sorted(assignment.fold_sizes(), reverse=True) == [12, 12, 11, 11, 11]


def test_kfold_singletons():
    assignment = kfold_split(5, 5, seed=0)
    assert assignment.fold_sizes() == [1, 1, 1, 1, 1]


def test_kfold_deterministic():
    first = kfold_split(57, 5, seed=4)
    second = kfold_split(57, 5, seed=4)
    assert np.array_equal(first.fold_of, second.fold_of)
    third = kfold_split(57, 5, seed=5)
    assert not np.array_equal(first.fold_of, third.fold_of)


def test_kfold_partition_property():
    rng = np.random.default_rng(19)
    for _ in range(25):
        n = int(rng.integers(2, 120))
        k = int(rng.integers(2, n + 1))
        assignment = kfold_split(n, k, seed=int(rng.integers(0, 1 << 32)))
        gathered = np.concatenate([assignment.fold_indices(f) for f in range(k)])
        assert sorted(gathered.tolist()) == list(range(n))
        sizes = assignment.fold_sizes()
        assert max(sizes) - min(sizes) <= 1


@pytest.mark.parametrize("n,k", [(10, 1), (10, 11), (5, 0), (3, -1)])
def test_kfold_bad_counts(n, k):
    with pytest.raises(BadFoldCountError):
        kfold_split(n, k, seed=0)


# --- cost model and synthesis ----------------------------------------------------


def test_cost_model_validation():
    with pytest.raises(ValueError):
        CostModel(weights=(1.0,) * 11)
    with pytest.raises(ValueError):
        CostModel(weights=(1.0,) * 11 + (0.0,))
    with pytest.raises(ValueError):
        CostModel(weights=(1.0,) * 12, noise_stddev=-1.0)


def test_cost_model_json(tmp_path):
    path = tmp_path / "cost.json"
    path.write_text(json.dumps({
        "weights": [1.0] * 12,
        "interaction_coeff": 0.25,
        "noise_stddev": 5.0,
        "seed": 99,
    }))
    model, seed = load_cost_model(path)
    assert model.interaction_coeff == 0.25
    assert seed == 99


def test_cost_model_json_unknown_field(tmp_path):
    path = tmp_path / "cost.json"
    path.write_text(json.dumps({"weights": [1.0] * 12, "cache_size": 8192}))
    with pytest.raises(SchemaMismatchError):
        load_cost_model(path)


def test_synthesize_deterministic():
    model = default_cost_model()
    first, programs_a = synthesize_corpus(8, 123, model)
    second, programs_b = synthesize_corpus(8, 123, model)
    assert np.array_equal(first.labels_array(), second.labels_array())
    assert np.array_equal(first.features_array(), second.features_array())
    assert [len(p.instructions) for p in programs_a] == [len(p.instructions) for p in programs_b]
    different, _ = synthesize_corpus(8, 124, model)
    assert not np.array_equal(first.labels_array(), different.labels_array())


def test_synthesize_labels_match_cost_formula():
    model = CostModel(weights=(1.0,) * 12, interaction_coeff=1.0)
    dataset, programs = synthesize_corpus(6, 55, model)
    for sample, program in zip(dataset, programs):
        vector = extract_features(program)
        expected = vector.total + vector[Category.LOAD] * vector[Category.JUMP]
        assert sample.cycles == expected == expected_cycles(model, vector)


def test_synthesize_noisy_labels_positive_and_offset():
    base_model = CostModel(weights=(1.0,) * 12)
    noisy_model = CostModel(weights=(1.0,) * 12, noise_stddev=10.0)
    noisy, programs = synthesize_corpus(10, 77, noisy_model)
    assert np.all(noisy.labels_array() > 0)
    bases = np.array([expected_cycles(base_model, extract_features(p)) for p in programs])
    offsets = noisy.labels_array() - bases
    assert np.any(offsets != 0)
    assert np.max(np.abs(offsets)) < 100.0  # 10 sigma


def test_synthesize_count_must_be_positive():
    with pytest.raises(ValueError):
        synthesize_corpus(0, 1, default_cost_model())


def test_sample_requires_positive_cycles():
    with pytest.raises(ValueError):
        make_sample("x", (1,) * 12, 0.0)


def test_dataset_rejects_duplicate_names():
    sample = make_sample("dup", (1,) * 12, 5.0)
    with pytest.raises(DuplicateNameError):
        Dataset((sample, sample))


def test_dataset_subset_preserves_order(small_dataset):
    subset = small_dataset.subset([3, 1])
    assert subset.names == (small_dataset.names[3], small_dataset.names[1])

import pytest

from earlywcet.dataset import CostModel, synthesize_corpus

UNIT_WEIGHTS = (1.0,) * 12
REALISTIC_WEIGHTS = (2.0, 2.0, 4.0, 12.0, 1.5, 1.5, 6.0, 3.0, 2.5, 5.0, 4.5, 1.0)


@pytest.fixture
def linear_cost_model():
    """Purely linear, noise-free labels: cycles = dot(weights, counts)."""
    return CostModel(weights=REALISTIC_WEIGHTS)


@pytest.fixture
def linear_corpus(linear_cost_model):
    dataset, programs = synthesize_corpus(20, 90, linear_cost_model)
    return dataset, programs


@pytest.fixture
def small_dataset(linear_cost_model):
    dataset, _ = synthesize_corpus(12, 7, linear_cost_model)
    return dataset

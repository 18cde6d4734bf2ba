"""Shared fixtures: the seeded reference dataset and models trained on it.

Everything here is deterministic, so session scope is safe and keeps the
suite fast (the reference models are reused across many tests).
"""

import pytest

from hajjguard.classifiers import ModelSpec, train_model
from hajjguard.corpus import (default_generator_config, default_registry,
                              generate_synthetic)
from hajjguard.tuning import stratified_k_fold

REFERENCE_SEED = 42


@pytest.fixture(scope="session")
def registry():
    return default_registry()


@pytest.fixture(scope="session")
def reference_records():
    return generate_synthetic(default_generator_config(seed=REFERENCE_SEED))


@pytest.fixture(scope="session")
def reference_labels(reference_records):
    return [r.label for r in reference_records]


@pytest.fixture(scope="session")
def reference_plan(reference_labels):
    return stratified_k_fold(reference_labels, 10, seed=REFERENCE_SEED)


@pytest.fixture(scope="session")
def reference_svm(reference_records, reference_labels, registry):
    spec = ModelSpec(algorithm="svm", watchlist=registry.high_risk_permissions,
                     seed=REFERENCE_SEED)
    return train_model(reference_records, reference_labels, spec)


@pytest.fixture(scope="session")
def reference_rf(reference_records, reference_labels, registry):
    spec = ModelSpec(algorithm="rf", watchlist=registry.high_risk_permissions,
                     seed=REFERENCE_SEED)
    return train_model(reference_records, reference_labels, spec)


@pytest.fixture(scope="session")
def tiny_records():
    """Small labeled dataset for fast classifier and CV tests."""
    return generate_synthetic(default_generator_config(seed=7, n_official=20,
                                                       n_unofficial=20))


@pytest.fixture(scope="session")
def tiny_labels(tiny_records):
    return [r.label for r in tiny_records]

"""Session-wide fixtures: the default seeded cohort, encodings and models."""

import numpy as np
import pytest

import drugsurv as ds
from drugsurv.cohort import OUTCOME_INDEX


def outcome_indices(records):
    """Integer class index per record, in the fixed six-label order."""
    return np.array([OUTCOME_INDEX[r.outcome] for r in records])


@pytest.fixture(scope="session")
def detail42():
    return ds.synthesize_cohort_detailed(ds.dermbio_like_spec())


@pytest.fixture(scope="session")
def cohort42(detail42):
    return detail42.records


@pytest.fixture(scope="session")
def labels42(cohort42):
    return outcome_indices(cohort42)


@pytest.fixture(scope="session")
def retro_matrix(cohort42):
    schema = ds.derive_schema(cohort42, mode="retrospective")
    return ds.encode(cohort42, schema)


@pytest.fixture(scope="session")
def base_matrix(cohort42):
    schema = ds.derive_schema(cohort42, mode="baseline")
    return ds.encode(cohort42, schema)


@pytest.fixture(scope="session")
def glm42(retro_matrix):
    return ds.fit_model(retro_matrix, ds.ModelConfig(kind="glm"))


@pytest.fixture(scope="session")
def tree42(retro_matrix):
    return ds.fit_model(retro_matrix, ds.ModelConfig(kind="tree"))


@pytest.fixture(scope="session")
def length42(base_matrix):
    return ds.fit_model(base_matrix, ds.ModelConfig(kind="length_glm"))


@pytest.fixture(scope="session")
def cohort_csv(cohort42, tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "cohort.csv"
    ds.save_cohort(cohort42, path)
    return path

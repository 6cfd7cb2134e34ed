import numpy as np
import pytest

from causalsynth import ColumnSchema, Dataset, validate_schema


@pytest.fixture(scope="session")
def tiny_schema():
    return validate_schema(
        [
            ColumnSchema("X1", "binary", "covariate"),
            ColumnSchema("X2", "continuous", "covariate"),
            ColumnSchema("A", "binary", "treatment"),
            ColumnSchema("Y", "binary", "outcome"),
        ]
    )


@pytest.fixture
def tiny_dataset(tiny_schema):
    rows = np.array(
        [
            [0.0, 0.5, 1.0, 1.0],
            [1.0, -1.25, 0.0, 0.0],
            [1.0, 2.0, 1.0, 0.0],
            [0.0, 0.25, 0.0, 1.0],
        ]
    )
    return Dataset(tiny_schema, rows)

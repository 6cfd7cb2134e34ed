import numpy as np
import pytest

from causalsynth import (
    ColumnSchema,
    Dataset,
    Standardizer,
    ValidationError,
    fit_standardizer,
    load_table,
    schema_from_json,
    schema_to_json,
    subsample,
    validate_schema,
    write_table,
)


def _schema_w_a_y():
    return [
        ColumnSchema("W1", "binary", "covariate"),
        ColumnSchema("A", "binary", "treatment"),
        ColumnSchema("Y", "binary", "outcome"),
    ]


class TestSchema:
    def test_minimal_valid(self):
        validate_schema(_schema_w_a_y())

    @pytest.mark.parametrize(
        "mutation",
        [
            lambda s: s[:1] + s[2:],  # no treatment
            lambda s: s[:2] + [ColumnSchema("Y2", "binary", "outcome")] + s[2:],
            lambda s: [ColumnSchema("W1", "continuous", "treatment")] + s[1:],
            lambda s: [s[1], s[0], s[2]],  # wrong order
            lambda s: [ColumnSchema("A", "binary", "covariate")] + s[1:],  # dup name
        ],
    )
    def test_invalid_schemas_rejected(self, mutation):
        with pytest.raises(ValidationError):
            validate_schema(mutation(_schema_w_a_y()))

    def test_json_round_trip(self):
        schema = validate_schema(_schema_w_a_y())
        assert schema_from_json(schema_to_json(schema)) == schema


class TestLoadTable:
    def test_minimal_two_row_file(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("W1,A,Y\n0,1,1\n1,0,0\n")
        ds = load_table(path, _schema_w_a_y())
        assert (ds.n, ds.d) == (2, 1)
        assert ds.rows.tolist() == [[0.0, 1.0, 1.0], [1.0, 0.0, 0.0]]

    def test_binary_violation_names_row_and_column(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("W1,A,Y\n0,1,1\n0.5,0,0\n")
        with pytest.raises(ValidationError, match=r"row 2.*'W1'"):
            load_table(path, _schema_w_a_y())

    def test_header_order_mismatch(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("A,W1,Y\n1,0,1\n")
        with pytest.raises(ValidationError, match="header mismatch"):
            load_table(path, _schema_w_a_y())

    def test_non_finite_rejected(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("W1,A,Y\n0,1,nan\n")
        with pytest.raises(ValidationError, match="non-finite"):
            load_table(path, _schema_w_a_y())

    def test_round_trip_byte_identical(self, tmp_path):
        src = tmp_path / "src.csv"
        src.write_text("W1,A,Y\n0,1,1\n1,0,0\n")
        ds = load_table(src, _schema_w_a_y())
        dst = tmp_path / "dst.csv"
        write_table(ds, dst)
        assert dst.read_text().rstrip("\n") == src.read_text().rstrip("\n")

    def test_round_trip_continuous_values(self, tmp_path, tiny_dataset):
        first = tmp_path / "a.csv"
        write_table(tiny_dataset, first)
        reloaded = load_table(first, tiny_dataset.schema)
        second = tmp_path / "b.csv"
        write_table(reloaded, second)
        assert first.read_bytes() == second.read_bytes()
        assert np.array_equal(reloaded.rows, tiny_dataset.rows)


class TestDataset:
    def test_immutable_rows(self, tiny_dataset):
        with pytest.raises(ValueError):
            tiny_dataset.rows[0, 0] = 5.0

    def test_column_accessors(self, tiny_dataset):
        assert tiny_dataset.covariates.shape == (4, 2)
        assert tiny_dataset.treatment.tolist() == [1.0, 0.0, 1.0, 0.0]
        assert tiny_dataset.outcome.tolist() == [1.0, 0.0, 0.0, 1.0]

    def test_binary_column_validated(self, tiny_schema):
        rows = np.array([[0.0, 0.1, 0.5, 1.0]])
        with pytest.raises(ValidationError, match="binary column 'A'"):
            Dataset(tiny_schema, rows)


class TestStandardizer:
    def test_two_point_symmetry(self):
        schema = [
            ColumnSchema("X", "continuous", "covariate"),
            ColumnSchema("A", "binary", "treatment"),
            ColumnSchema("Y", "binary", "outcome"),
        ]
        ds = Dataset(schema, np.array([[0.0, 0, 0], [2.0, 1, 1]]))
        std = fit_standardizer(ds)
        assert std.mean[0] == pytest.approx(1.0)
        assert std.scale[0] == pytest.approx(np.sqrt(2.0))
        out = std.apply(ds.covariates)
        assert out[:, 0] == pytest.approx([-0.7071067811865475, 0.7071067811865475])

    def test_constant_column_falls_back_to_unit_scale(self):
        schema = [
            ColumnSchema("X", "continuous", "covariate"),
            ColumnSchema("A", "binary", "treatment"),
            ColumnSchema("Y", "binary", "outcome"),
        ]
        ds = Dataset(schema, np.array([[3.0, 0, 0], [3.0, 1, 1], [3.0, 0, 1]]))
        std = fit_standardizer(ds)
        assert std.scale[0] == 1.0
        assert std.apply(ds.covariates)[:, 0].tolist() == [0.0, 0.0, 0.0]

    def test_binary_pass_through(self, tiny_dataset):
        std = fit_standardizer(tiny_dataset)
        out = std.apply(tiny_dataset.covariates)
        assert np.array_equal(out[:, 0], tiny_dataset.covariates[:, 0])

    def test_fitted_columns_have_zero_mean_unit_sd(self):
        gen = np.random.Generator(np.random.PCG64(5))
        schema = [
            ColumnSchema("X1", "continuous", "covariate"),
            ColumnSchema("X2", "continuous", "covariate"),
            ColumnSchema("A", "binary", "treatment"),
            ColumnSchema("Y", "binary", "outcome"),
        ]
        rows = np.column_stack(
            [
                gen.normal(3.0, 2.5, 200),
                gen.normal(-1.0, 0.2, 200),
                gen.integers(0, 2, 200),
                gen.integers(0, 2, 200),
            ]
        ).astype(float)
        ds = Dataset(schema, rows)
        out = fit_standardizer(ds).apply(ds.covariates)
        assert abs(out[:, 0].mean()) < 1e-12 and abs(out[:, 1].mean()) < 1e-12
        assert abs(out[:, 0].std(ddof=1) - 1.0) < 1e-12
        assert abs(out[:, 1].std(ddof=1) - 1.0) < 1e-12

    def test_identity_helper(self):
        std = Standardizer.identity(("continuous", "continuous"))
        w = np.array([[3.0, 4.0]])
        assert np.array_equal(std.apply(w), w)


class TestSubsample:
    def test_full_draw_is_permutation(self, tiny_dataset):
        out = subsample(tiny_dataset, tiny_dataset.n, seed=3)
        assert sorted(map(tuple, out.rows.tolist())) == sorted(
            map(tuple, tiny_dataset.rows.tolist())
        )

    def test_deterministic_and_no_duplicates(self, tiny_dataset):
        a = subsample(tiny_dataset, 3, seed=11)
        b = subsample(tiny_dataset, 3, seed=11)
        assert np.array_equal(a.rows, b.rows)
        assert len({tuple(r) for r in a.rows.tolist()}) == 3

    def test_thousand_from_large_pool(self):
        schema = [
            ColumnSchema("X", "continuous", "covariate"),
            ColumnSchema("A", "binary", "treatment"),
            ColumnSchema("Y", "binary", "outcome"),
        ]
        gen = np.random.Generator(np.random.PCG64(1))
        rows = np.column_stack(
            [gen.normal(size=50_000), gen.integers(0, 2, 50_000), gen.integers(0, 2, 50_000)]
        ).astype(float)
        pool = Dataset(schema, rows)
        out = subsample(pool, 1000, seed=4)
        assert out.n == 1000

    def test_oversized_draw_rejected(self, tiny_dataset):
        with pytest.raises(ValidationError):
            subsample(tiny_dataset, tiny_dataset.n + 1, seed=0)

import numpy as np
import pytest

from fpimpute import data
from fpimpute.errors import DataError


def write(tmp_path, text, name="d.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_load_csv_two_continuous_columns(tmp_path):
    p = write(tmp_path, "a,b\n1,2\n3,4\n")
    ds = data.load_csv(p)
    assert np.array_equal(ds.values, [[1.0, 2.0], [3.0, 4.0]])
    assert ds.column_names == ["a", "b"]


def test_binary_labels_sorted(tmp_path):
    p = write(tmp_path, "ans\nyes\nno\nyes\n")
    ds = data.load_csv(p, schema_spec={"ans": "binary"})
    # label-sorted: no -> 0, yes -> 1
    assert np.array_equal(ds.values[:, 0], [1.0, 0.0, 1.0])
    assert ds.schema[0].labels == ["no", "yes"]


def test_categorical_declared_order(tmp_path):
    p = write(tmp_path, "level\nmid\nlow\nhigh\n")
    spec = {"level": ("categorical", ["low", "mid", "high"])}
    ds = data.load_csv(p, schema_spec=spec)
    assert np.array_equal(ds.values[:, 0], [1.0, 0.0, 2.0])


def test_ragged_row_reports_line(tmp_path):
    p = write(tmp_path, "a,b\n1,2\n3\n")
    with pytest.raises(DataError, match="line 3"):
        data.load_csv(p)


def test_unparsable_field_reports_position(tmp_path):
    p = write(tmp_path, "a\n1\nbogus\n")
    with pytest.raises(DataError, match="'a'"):
        data.load_csv(p, schema_spec={"a": "continuous"})


def test_undeclared_text_column_autodiscovers(tmp_path):
    p = write(tmp_path, "c\nred\nblue\nred\n")
    ds = data.load_csv(p)
    assert ds.schema[0].kind == "categorical"
    assert ds.schema[0].labels == ["blue", "red"]
    assert np.array_equal(ds.values[:, 0], [1.0, 0.0, 1.0])


def test_na_token_becomes_nan(tmp_path):
    p = write(tmp_path, "a,b\n1,NA\nNA,4\n")
    ds = data.load_csv(p)
    assert np.isnan(ds.values[0, 1]) and np.isnan(ds.values[1, 0])
    assert ds.values[0, 0] == 1.0


def test_load_is_stable(tmp_path):
    p = write(tmp_path, "a,b\n0.25,7\n-3,2.5\n")
    a = data.load_csv(p).values
    b = data.load_csv(p).values
    assert np.array_equal(a, b)


def test_minmax_basic_column():
    ds = data.Dataset(np.array([[1.0], [3.0], [5.0]]))
    norm, params = data.minmax_fit_transform(ds)
    assert np.allclose(norm.values[:, 0], [0.0, 0.5, 1.0])
    assert params == [(1.0, 5.0)]


def test_minmax_constant_column_maps_to_zero():
    ds = data.Dataset(np.array([[7.0], [7.0]]))
    norm, _ = data.minmax_fit_transform(ds)
    assert np.array_equal(norm.values[:, 0], [0.0, 0.0])


def test_minmax_apply_does_not_clip():
    test = data.Dataset(np.array([[6.0]]))
    out = data.minmax_apply(test, [(1.0, 5.0)])
    assert out.values[0, 0] == pytest.approx(1.25)


def test_minmax_fully_missing_feature_named():
    ds = data.Dataset(np.array([[np.nan], [np.nan]]), [data.FeatureSchema("width")])
    with pytest.raises(DataError, match="width"):
        data.minmax_fit_transform(ds)


def test_minmax_roundtrip_1e12():
    rng = np.random.default_rng(0)
    vals = rng.normal(scale=10, size=(40, 5))
    ds = data.Dataset(vals)
    norm, params = data.minmax_fit_transform(ds)
    back = data.denormalize(norm.values, params)
    assert np.max(np.abs(back - vals)) < 1e-12


def test_split_iris_sized():
    ds = data.Dataset(np.arange(128 * 4, dtype=float).reshape(128, 4))
    train, test = data.split(ds, 0.18, seed=3)
    assert test.n_rows == 23 and train.n_rows == 105


def test_split_is_partition():
    ds = data.Dataset(np.arange(4 * 2, dtype=float).reshape(4, 2))
    train, test = data.split(ds, 0.5, seed=1)
    assert train.n_rows == 2 and test.n_rows == 2
    rows = np.vstack([train.values, test.values])
    assert sorted(map(tuple, rows)) == sorted(map(tuple, ds.values))


def test_split_deterministic():
    ds = data.Dataset(np.random.default_rng(5).normal(size=(30, 3)))
    a = data.split(ds, 0.3, seed=9)
    b = data.split(ds, 0.3, seed=9)
    assert np.array_equal(a[0].values, b[0].values)
    assert np.array_equal(a[1].values, b[1].values)


def test_split_too_small():
    ds = data.Dataset(np.ones((1, 2)))
    with pytest.raises(DataError):
        data.split(ds, 0.5)


def test_write_csv_roundtrip(tmp_path):
    vals = np.array([[0.1, 2.0], [3.5, -1.25]])
    missing = np.array([[False, True], [False, False]])
    p = tmp_path / "out.csv"
    data.write_csv(p, vals, ["a", "b"], missing=missing)
    back = data.load_csv(p)
    assert np.isnan(back.values[0, 1])
    assert back.values[0, 0] == 0.1 and back.values[1, 1] == -1.25


def test_schema_sidecar_file(tmp_path):
    sidecar = write(tmp_path, "# columns\nsize continuous\ncolor categorical red green blue\n", "d.schema")
    spec = data.parse_schema_spec(sidecar)
    assert spec["color"].labels == ["red", "green", "blue"]
    assert spec["size"].kind == "continuous"


def test_binary_numeric_passthrough(tmp_path):
    p = write(tmp_path, "flag\n0\n1\n1\n")
    ds = data.load_csv(p, schema_spec={"flag": "binary"})
    assert np.array_equal(ds.values[:, 0], [0.0, 1.0, 1.0])
    assert ds.feature_kinds() == ["bernoulli"]


def test_binary_numeric_out_of_range_rejected(tmp_path):
    p = write(tmp_path, "flag\n0\n2\n")
    with pytest.raises(DataError, match="flag"):
        data.load_csv(p, schema_spec={"flag": "binary"})

import json

import numpy as np
import pytest

from fpimpute import masks
from fpimpute.data import Dataset
from fpimpute.errors import DataError, MaskGenerationError


def random_dataset(n=500, k=10, seed=0):
    return Dataset(np.random.default_rng(seed).random((n, k)))


def test_rate_attained_at_half():
    ds = random_dataset()
    for strategy in masks.STRATEGIES:
        m = masks.generate_mask(ds, 0.50, strategy, seed=7)
        assert abs(m.achieved_rate - 0.50) <= 0.005
        assert m.achieved_rate == m.missing.sum() / m.missing.size


def test_uniform_rows_all_or_nothing():
    ds = random_dataset(seed=1)
    m = masks.generate_mask(ds, 0.4, "mnar-uniform", seed=3)
    per_row = m.missing.sum(axis=1)
    assert set(np.unique(per_row)) <= {0, ds.n_features}
    assert (per_row == ds.n_features).any()


def test_anchor_gate_rows_never_masked():
    ds = random_dataset(seed=2)
    m = masks.generate_mask(ds, 0.5, "mnar-random", seed=11)
    a1, a2 = m.anchor_features
    assert a1 != a2
    vals = ds.values
    gated = (vals[:, a1] >= vals[:, a1].mean()) & (vals[:, a2] >= vals[:, a2].mean())
    assert not m.missing[gated].any()


def test_determinism():
    ds = random_dataset(seed=4)
    a = masks.generate_mask(ds, 0.25, "mnar-random", seed=5)
    b = masks.generate_mask(ds, 0.25, "mnar-random", seed=5)
    assert np.array_equal(a.missing, b.missing)
    assert a.anchor_features == b.anchor_features
    c = masks.generate_mask(ds, 0.25, "mnar-random", seed=6)
    assert not np.array_equal(a.missing, c.missing)


def test_unreachable_rate_reports_cap():
    # constant columns: no row is below any anchor mean, so nothing is maskable
    ds = Dataset(np.ones((60, 4)))
    with pytest.raises(MaskGenerationError, match="0.0"):
        masks.generate_mask(ds, 0.5, "mnar-uniform", seed=0)


def test_requires_fully_observed():
    vals = np.random.default_rng(0).random((20, 4))
    vals[3, 1] = np.nan
    with pytest.raises(DataError):
        masks.generate_mask(Dataset(vals), 0.3, "mnar-random", seed=0)


def test_requires_three_features():
    with pytest.raises(DataError):
        masks.generate_mask(Dataset(np.ones((10, 2))), 0.3, "mnar-random", seed=0)


def test_rate_sweep_both_strategies():
    ds = random_dataset(n=400, k=8, seed=9)
    for rate in (0.25, 0.5, 0.75):
        for strategy in masks.STRATEGIES:
            m = masks.generate_mask(ds, rate, strategy, seed=13)
            assert abs(m.achieved_rate - rate) <= 0.005, (rate, strategy)


def test_fill_mean_hand_case():
    vals = np.array([[0.2], [0.4], [1.0], [2.0]])
    missing = np.array([[False], [False], [True], [True]])
    fill = masks.fit_fill(vals, missing, "mean")
    out = masks.apply_fill(vals, missing, fill)
    assert out[2, 0] == pytest.approx(0.3) and out[3, 0] == pytest.approx(0.3)


def test_fill_zero():
    vals = np.random.default_rng(1).random((6, 3))
    missing = np.zeros_like(vals, dtype=bool)
    missing[0, 0] = missing[5, 2] = True
    fill = masks.fit_fill(vals, missing, "zero")
    out = masks.apply_fill(vals, missing, fill)
    assert out[0, 0] == 0.0 and out[5, 2] == 0.0


def test_fill_random_reproducible_standard_normal():
    vals = np.zeros((2000, 4))
    missing = np.random.default_rng(2).random((2000, 4)) < 0.5
    fill = masks.fit_fill(vals, missing, "random", seed=21)
    a = masks.apply_fill(vals, missing, fill)
    b = masks.apply_fill(vals, missing, fill)
    assert np.array_equal(a, b)
    drawn = a[missing]
    assert abs(drawn.mean()) < 0.1 and abs(drawn.std() - 1.0) < 0.1


def test_fill_median_even_count():
    vals = np.array([[1.0], [2.0], [3.0], [4.0], [0.0]])
    missing = np.array([[False], [False], [False], [False], [True]])
    fill = masks.fit_fill(vals, missing, "median")
    assert fill.constants[0] == pytest.approx(2.5)


def test_unmasked_cells_bit_exact():
    vals = np.random.default_rng(3).random((50, 5))
    m = masks.generate_mask(Dataset(vals), 0.4, "mnar-random", seed=8)
    filled, _ = masks.apply_mask(Dataset(vals), m, "mean")
    assert np.array_equal(filled[~m.missing], vals[~m.missing])


def test_fill_statistics_ignore_masked_cells():
    vals = np.array([[0.2], [0.4], [100.0]])
    missing = np.array([[False], [False], [True]])
    fill = masks.fit_fill(vals, missing, "mean")
    assert fill.constants[0] == pytest.approx(0.3)


def test_mask_roundtrip(tmp_path):
    ds = random_dataset(n=200, k=4, seed=6)
    m = masks.generate_mask(ds, 0.3, "mnar-random", seed=17)
    path = tmp_path / "m.csv"
    masks.save_mask(m, path, ds.column_names)
    back, meta = masks.load_mask_matrix(path)
    assert np.array_equal(back, m.missing)
    assert meta["strategy"] == "mnar-random"
    assert meta["anchor_features"] == list(m.anchor_features)
    assert meta["achieved_rate"] == m.achieved_rate


def test_load_mask_from_na_cells(tmp_path):
    path = tmp_path / "masked.csv"
    path.write_text("a,b\n1.0,NA\nNA,2.0\n")
    back, meta = masks.load_mask_matrix(path)
    assert np.array_equal(back, [[False, True], [True, False]])
    assert meta is None


def test_load_mask_rejects_garbage(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,b\nfoo,bar\n")
    with pytest.raises(DataError):
        masks.load_mask_matrix(path)

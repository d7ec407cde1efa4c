import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rfs.ingest import DataError, Dataset, load_csv, make_blobs, save_csv, split, standardize


def _write(path, text):
    path.write_text(text)
    return path


class TestLoad:
    def test_limit_keeps_first_rows(self, tmp_path):
        p = _write(tmp_path / "a.csv", "1,2,3\n4,5,6\n7,8,9\n")
        ds = load_csv(p, limit=2)
        assert ds.n == 2
        assert np.array_equal(ds.X, [[1, 2], [4, 5]]) and np.array_equal(ds.y, [3, 6])

    def test_class_mapping(self, tmp_path):
        p = _write(tmp_path / "a.csv", "label,x\n0,1.5\n1,2.5\n1,0.0\n")
        ds = load_csv(p, label_column="label", class_mapping="0:-1,1:1")
        assert ds.task == "classification"
        assert np.array_equal(ds.y, [-1, 1, 1])
        assert ds.feature_names == ("x",)

    def test_nan_names_line(self, tmp_path):
        p = _write(tmp_path / "a.csv", "x,y\n1,2\nNaN,3\n")
        with pytest.raises(DataError, match="line 3"):
            load_csv(p)

    def test_malformed_and_ragged(self, tmp_path):
        with pytest.raises(DataError, match="line 2"):
            load_csv(_write(tmp_path / "a.csv", "1,2\n1,abc\n"))
        with pytest.raises(DataError, match="line 2"):
            load_csv(_write(tmp_path / "b.csv", "1,2\n1,2,3\n"))

    def test_missing_column_and_file(self, tmp_path):
        with pytest.raises(DataError):
            load_csv(_write(tmp_path / "a.csv", "x,y\n1,2\n"), label_column="z")
        with pytest.raises(DataError):
            load_csv(tmp_path / "none.csv")

    def test_empty(self, tmp_path):
        with pytest.raises(DataError):
            load_csv(_write(tmp_path / "a.csv", "x,y\n"))

    def test_unmapped_label(self, tmp_path):
        with pytest.raises(DataError):
            load_csv(_write(tmp_path / "a.csv", "1,2\n3,7\n"), class_mapping={"2": -1.0})

    def test_data_dir(self, tmp_path, monkeypatch):
        _write(tmp_path / "d.csv", "1,2\n")
        monkeypatch.setenv("RFS_DATA_DIR", str(tmp_path))
        assert load_csv("d.csv").n == 1

    def test_roundtrip(self, tmp_path):
        rng = np.random.default_rng(0)
        ds = Dataset(rng.standard_normal((20, 3)), rng.standard_normal(20))
        save_csv(ds, tmp_path / "r.csv")
        back = load_csv(tmp_path / "r.csv")
        assert np.array_equal(back.X, ds.X) and np.array_equal(back.y, ds.y)


class TestStandardize:
    def test_two_point_column(self):
        ds, tr = standardize(Dataset([[1.0], [3.0]], [0.0, 1.0]))
        assert np.array_equal(ds.X[:, 0], [-1.0, 1.0])
        assert tr.mean[0] == 2.0 and tr.std[0] == 1.0

    def test_constant_column(self):
        ds, tr = standardize(Dataset([[5.0, 1.0], [5.0, 2.0], [5.0, 3.0]], [0, 0, 0]))
        assert np.array_equal(ds.X[:, 0], [0, 0, 0]) and tr.std[0] == 0.0

    def test_stored_transform_reproduces(self):
        rng = np.random.default_rng(1)
        raw = Dataset(rng.standard_normal((30, 4)) * 3 + 1, rng.standard_normal(30))
        ds, tr = standardize(raw)
        assert np.array_equal(tr.apply(raw).X, ds.X)

    def test_idempotent(self):
        rng = np.random.default_rng(2)
        ds, _ = standardize(Dataset(rng.standard_normal((40, 3)) * 7, np.zeros(40)))
        again, _ = standardize(ds)
        assert np.max(np.abs(again.X - ds.X)) < 1e-10

    def test_needs_two_rows(self):
        with pytest.raises(DataError):
            standardize(Dataset([[1.0]], [1.0]))


class TestSplit:
    def test_sizes(self):
        ds = Dataset(np.arange(100.0).reshape(-1, 1), np.arange(100.0))
        tr, te = split(ds, 0.8, seed=3)
        assert (tr.n, te.n) == (80, 20)

    def test_same_seed(self):
        ds = Dataset(np.arange(50.0).reshape(-1, 1), np.arange(50.0))
        a, b = split(ds, 0.5, 1), split(ds, 0.5, 1)
        assert np.array_equal(a[0].y, b[0].y)

    def test_degenerate(self):
        with pytest.raises(DataError):
            split(Dataset([[1.0], [2.0]], [1.0, 2.0]), 0.1, 0)
        with pytest.raises(DataError):
            split(Dataset([[1.0], [2.0]], [1.0, 2.0]), 1.0, 0)


@settings(max_examples=100, deadline=None)
@given(n=st.integers(2, 300), frac=st.floats(0.01, 0.99), seed=st.integers(0, 2**32 - 1))
def test_split_is_partition(n, frac, seed):
    ds = Dataset(np.arange(float(n)).reshape(-1, 1), np.arange(float(n)))
    try:
        tr, te = split(ds, frac, seed)
    except DataError:
        assert int(np.floor(frac * n + 1e-9)) in (0, n)
        return
    ids = np.concatenate([tr.y, te.y])
    assert sorted(ids) == list(range(n))
    assert tr.n == int(np.floor(frac * n + 1e-9))


class TestDataset:
    def test_rejects_nan_and_bad_labels(self):
        with pytest.raises(DataError):
            Dataset([[np.inf]], [1.0])
        with pytest.raises(DataError):
            Dataset([[1.0]], [0.0], task="classification")
        with pytest.raises(DataError):
            Dataset([[1.0], [2.0]], [1.0])

    def test_blobs(self):
        ds = make_blobs(500, d=14, separation=2.0, seed=0)
        assert ds.d == 14 and ds.task == "classification"
        assert set(np.unique(ds.y)) == {-1.0, 1.0}
        assert np.array_equal(make_blobs(50, seed=1).X, make_blobs(50, seed=1).X)

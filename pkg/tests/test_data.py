import numpy as np
import pytest

from tsedit.data import DataError, denormalize, gen_sines, load_csv


class TestGenSines:
    def test_values_in_unit_interval(self):
        for seed in range(5):
            ds = gen_sines(50, 24, 5, seed=seed)
            assert ds.series.min() >= 0.0 and ds.series.max() <= 1.0

    def test_fixed_seed_reproducible(self):
        a = gen_sines(10, 24, 5, seed=3)
        b = gen_sines(10, 24, 5, seed=3)
        assert np.array_equal(a.series, b.series)

    def test_default_shape(self):
        ds = gen_sines(7)
        assert ds.series.shape == (7, 24, 5)
        assert ds.seq_len == 24 and ds.channels == 5

    def test_mean_near_half(self):
        ds = gen_sines(1000, 24, 5, seed=0)
        means = ds.series.mean(axis=(0, 1))
        assert np.abs(means - 0.5).max() < 0.05

    def test_invalid_args(self):
        with pytest.raises(DataError):
            gen_sines(0)


class TestLoadCsv:
    def _write(self, path, rows, header=None):
        lines = ([header] if header else []) + [",".join(str(v) for v in r) for r in rows]
        path.write_text("\n".join(lines) + "\n")

    def test_windowing(self, tmp_path, rng):
        path = tmp_path / "two.csv"
        self._write(path, rng.uniform(0, 10, (48, 2)).tolist())
        ds = load_csv(path, 24)
        assert ds.series.shape == (2, 24, 2)

    def test_header_detected(self, tmp_path, rng):
        path = tmp_path / "h.csv"
        self._write(path, rng.uniform(0, 1, (24, 3)).tolist(), header="a,b,c")
        ds = load_csv(path, 24)
        assert ds.series.shape == (1, 24, 3)

    def test_constant_column_maps_to_half(self, tmp_path):
        path = tmp_path / "const.csv"
        rows = [[5.0, float(i)] for i in range(12)]
        self._write(path, rows)
        ds = load_csv(path, 12)
        np.testing.assert_allclose(ds.series[0, :, 0], 0.5)

    def test_normalize_round_trip(self, tmp_path, rng):
        path = tmp_path / "rt.csv"
        raw = rng.uniform(-50, 90, (24, 4))
        self._write(path, raw.tolist())
        ds = load_csv(path, 24)
        back = denormalize(ds.series[0], ds.norm)
        assert np.abs(back - raw).max() < 1e-12 * max(1.0, np.abs(raw).max())

    def test_ragged_rows_rejected(self, tmp_path):
        path = tmp_path / "ragged.csv"
        path.write_text("1,2\n3\n")
        with pytest.raises(DataError, match="row 1"):
            load_csv(path, 1)

    def test_non_numeric_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("1,2\n3,x\n")
        with pytest.raises(DataError, match="row 1"):
            load_csv(path, 1)

    def test_empty_rejected(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("")
        with pytest.raises(DataError, match="empty"):
            load_csv(path, 4)

    def test_row_count_multiple_of_window(self, tmp_path):
        path = tmp_path / "odd.csv"
        self._write(path, [[float(i)] for i in range(10)])
        with pytest.raises(DataError, match="multiple"):
            load_csv(path, 4)

    def test_column_count_checked(self, tmp_path):
        path = tmp_path / "cols.csv"
        self._write(path, [[1.0, 2.0]] * 4)
        with pytest.raises(DataError, match="columns"):
            load_csv(path, 4, channels=3)


class TestDenormalize:
    def test_identity_norm(self, rng):
        x = rng.uniform(0, 1, (10, 2))
        norm = np.array([[0.0, 1.0], [0.0, 1.0]])
        np.testing.assert_array_equal(denormalize(x, norm), x)

    def test_affine_value(self):
        out = denormalize(np.array([[0.5]]), np.array([[10.0, 20.0]]))
        assert out[0, 0] == pytest.approx(15.0)

    def test_channel_mismatch(self):
        with pytest.raises(DataError, match="channels"):
            denormalize(np.zeros((4, 2)), np.zeros((3, 2)))

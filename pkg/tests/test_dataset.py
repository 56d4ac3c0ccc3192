import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helios import dataset as ds
from helios.errors import EmptyDataset, ParseError, SchemaError
from helios.mpp import find_mpp
from helios.pv_model import STC


class TestGrid:
    def test_default_size_and_coverage(self, default_dataset):
        d = default_dataset
        assert len(d) == 1300
        assert (d.t_c.min(), d.t_c.max()) == (15.0, 40.0)
        assert (d.g.min(), d.g.max()) == (200.0, 1090.0)
        assert np.all(d.i_mp > 0)

    def test_default_g_step(self):
        g = ds.default_g_values()
        assert len(g) == 50
        assert np.diff(g) == pytest.approx(890 / 49)

    def test_single_cell(self, params):
        d = ds.generate_grid(params, [25.0], [1000.0])
        assert len(d) == 1
        assert d.i_mp[0] == pytest.approx(7.5764, rel=0.01)

    def test_order_t_outer(self, params):
        d = ds.generate_grid(params, [20.0, 30.0], [500.0, 900.0])
        assert list(zip(d.t_c, d.g)) == [(20.0, 500.0), (20.0, 900.0), (30.0, 500.0), (30.0, 900.0)]

    def test_rejects_unsorted(self, params):
        with pytest.raises(ValueError):
            ds.generate_grid(params, [30.0, 20.0], [500.0])
        with pytest.raises(ValueError):
            ds.generate_grid(params, [], [500.0])

    def test_rows_match_oracle(self, params, default_dataset):
        k = 337
        from helios.pv_model import EnvConditions

        r = find_mpp(params, EnvConditions.from_celsius(default_dataset.t_c[k], default_dataset.g[k]))
        assert default_dataset.i_mp[k] == r.i_mp


class TestSplit:
    def test_default_sizes(self, default_split):
        assert default_split.sizes() == (1105, 130, 65)

    def test_disjoint_and_complete(self, default_split):
        idx = np.concatenate(default_split.indices)
        assert sorted(idx) == list(range(1300))

    def test_deterministic(self, default_dataset):
        a = ds.shuffle_split(default_dataset, 42)
        b = ds.shuffle_split(default_dataset, 42)
        assert all(np.array_equal(x, y) for x, y in zip(a.indices, b.indices))
        assert a.train == b.train

    def test_seed_matters(self, default_dataset):
        a = ds.shuffle_split(default_dataset, 1)
        b = ds.shuffle_split(default_dataset, 2)
        assert not np.array_equal(a.indices[0], b.indices[0])

    def test_all_train(self, default_dataset):
        s = ds.shuffle_split(default_dataset, 0, (1.0, 0.0, 0.0))
        assert s.sizes() == (1300, 0, 0)

    def test_bad_fractions(self, default_dataset):
        with pytest.raises(ValueError):
            ds.shuffle_split(default_dataset, 0, (0.5, 0.2, 0.2))

    def test_empty(self):
        empty = ds.Dataset(np.array([]), np.array([]), np.array([]))
        with pytest.raises(EmptyDataset):
            ds.shuffle_split(empty, 0)

    @settings(max_examples=50, deadline=None)
    @given(n=st.integers(1, 400), seed=st.integers(0, 2**32 - 1), val=st.floats(0, 0.5), test=st.floats(0, 0.4))
    def test_split_sizes_property(self, n, seed, val, test):
        d = ds.Dataset(np.arange(n, dtype=float), np.zeros(n), np.ones(n))
        s = ds.shuffle_split(d, seed, (1 - val - test, val, test))
        n_tr, n_va, n_te = s.sizes()
        assert n_tr + n_va + n_te == n
        assert n_va == int(np.floor(val * n + 1e-9)) and n_te == int(np.floor(test * n + 1e-9))
        assert sorted(np.concatenate(s.indices)) == list(range(n))


class TestNoise:
    def test_zero_noise_identity(self, default_dataset):
        assert ds.add_awgn(default_dataset, 0.0, 0.0, seed=3) == default_dataset

    def test_targets_untouched(self, default_dataset):
        noisy = ds.add_awgn(default_dataset, 1.0, 10.0, seed=3)
        assert np.array_equal(noisy.i_mp, default_dataset.i_mp)
        assert not np.array_equal(noisy.g, default_dataset.g)

    def test_statistics(self, default_dataset):
        # standard error of the mean: 10/sqrt(1300) ~ 0.28, so +-1.0 is > 3.5 SE;
        # sample std of 1300 normals has relative SE ~ 2%, so +-8% is 4 SE
        noisy = ds.add_awgn(default_dataset, 0.0, 10.0, seed=11)
        delta = noisy.g - default_dataset.g
        assert abs(delta.mean()) <= 1.0
        assert abs(delta.std(ddof=1) - 10.0) <= 0.8
        assert np.array_equal(noisy.t_c, default_dataset.t_c)

    def test_seeds_differ(self, default_dataset):
        a = ds.add_awgn(default_dataset, 1.0, 10.0, seed=1)
        b = ds.add_awgn(default_dataset, 1.0, 10.0, seed=2)
        assert a != b
        assert a == ds.add_awgn(default_dataset, 1.0, 10.0, seed=1)

    def test_negative_sigma(self, default_dataset):
        with pytest.raises(ValueError):
            ds.add_awgn(default_dataset, -1.0, 0.0, 0)


class TestIO:
    def test_round_trip(self, default_dataset, tmp_path):
        path = tmp_path / "d.csv"
        ds.export_dataset(default_dataset, path)
        assert ds.import_dataset(path) == default_dataset
        raw = path.read_bytes()
        assert raw.startswith(b"T_degC,G_Wm2,Imp_A\n") and b"\r" not in raw

    def test_byte_identical_exports(self, default_dataset, tmp_path):
        ds.export_dataset(default_dataset, tmp_path / "a.csv")
        ds.export_dataset(default_dataset, tmp_path / "b.csv")
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()

    def test_missing_target_column(self):
        with pytest.raises(SchemaError):
            ds.from_csv("T_degC,G_Wm2\n25,1000\n")

    def test_parse_error_line(self):
        with pytest.raises(ParseError) as info:
            ds.from_csv("T_degC,G_Wm2,Imp_A\n25,1000,7.5\n25,x,7.5\n")
        assert info.value.line == 3

    def test_wrong_field_count(self):
        with pytest.raises(ParseError):
            ds.from_csv("T_degC,G_Wm2,Imp_A\n25,1000\n")

    def test_split_export(self, default_split, params, tmp_path):
        stem = tmp_path / "run"
        manifest = ds.export_split(default_split, stem, params, ds.grid_spec(ds.default_t_values(), ds.default_g_values()))
        for sfx in (".train.csv", ".val.csv", ".test.csv"):
            assert (tmp_path / f"run{sfx}").exists()
        meta = json.loads(manifest.read_text())
        assert meta["seed"] == 0
        assert meta["fractions"] == [0.85, 0.10, 0.05]
        assert meta["sizes"] == [1105, 130, 65]
        assert meta["params_sha256"] == params.digest()
        assert meta["grid"]["g_Wm2"] == {"min": 200.0, "max": 1090.0, "count": 50}
        back = ds.import_split(stem)
        assert back.train == default_split.train and back.test == default_split.test
        assert all(np.array_equal(a, b) for a, b in zip(back.indices, default_split.indices))

import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from helios.errors import SchemaError
from helios.mlp import MlpModel, NormSpec, forward, load_model, load_paper_weights, save_model

NORM = NormSpec((15.0, 40.0), (200.0, 1090.0), (1.5, 8.3))

# independent transcription of the published tables (rows in table order)
TABLE_BIAS_HIDDEN = [
    -0.0788662358905827, -0.199252461268044, 0.476703785811994, 0.0788437136945187, 0.0788437137489292,
    -0.0843897428619086, 0.0788437137616096, -0.0788437136323596, 0.0788437137854139, -0.0511645156192877,
    0.0521386721602554, 0.0788437137594562, 0.0788437137550028, 0.325165283314198, 0.199252475098178,
]
TABLE_W_T = [
    0.330659943126136, -0.243061055602675, -0.413686729890811, 0.0503908825102565, 0.0503908825336595,
    0.286942170255656, 0.0503908825390176, -0.0503908824834618, 0.0503908825490957, -0.194105547886448,
    -0.685142210229390, 0.0503908825379756, 0.0503908825362639, 0.796782784260382, 0.243060836205972,
]
TABLE_W_G = [
    0.375354867765757, -0.302898742825237, 0.124969405112560, -0.242889973645394, -0.242889973660344,
    -0.871006037765083, -0.242889973663920, 0.242889973628136, -0.242889973670382, -0.882406133751217,
    0.629560967118233, -0.242889973663218, -0.242889973662112, -0.181097405343480, 0.302898505989682,
]
TABLE_W_OUT = [
    0.526055556926590, -0.526712907336645, 0.560221719680131, -0.357268781908311, -0.357268781972241,
    -0.335049187325717, -0.357268781987367, 0.357268781834757, -0.357268782015078, 0.371791504344763,
    -0.318328545469931, -0.357268781984634, -0.357268781979911, -0.244907095063019, 0.526712952341475,
]


def random_model(seed, width=15):
    rng = np.random.default_rng(seed)
    return MlpModel.from_vector(rng.uniform(-1, 1, 4 * width + 1), width, NORM)


class TestForward:
    def test_zero_network_gives_target_midpoint(self):
        m = MlpModel.zeros(15, NORM)
        assert forward(m, 25.0, 1000.0) == pytest.approx((1.5 + 8.3) / 2, abs=1e-15)

    def test_pure(self):
        m = random_model(0)
        assert forward(m, 31.7, 640.0) == forward(m, 31.7, 640.0)

    def test_hand_computed(self):
        m = random_model(1)
        x = np.array([2 * (30 - 15) / 25 - 1, 2 * (700 - 200) / 890 - 1])
        h = [np.tanh(m.w_hidden[j] @ x + m.b_hidden[j]) for j in range(15)]
        y = sum(w * a for w, a in zip(m.w_out, h)) + m.b_out
        assert forward(m, 30.0, 700.0) == pytest.approx((y + 1) * (8.3 - 1.5) / 2 + 1.5, rel=1e-14)

    def test_vectorised(self):
        m = random_model(2)
        t, g = np.array([15.0, 27.5]), np.array([300.0, 900.0])
        assert np.allclose(forward(m, t, g), [forward(m, 15.0, 300.0), forward(m, 27.5, 900.0)])

    @given(t=st.floats(-100, 100), g=st.floats(0, 2000))
    def test_finite_output(self, t, g):
        assert np.isfinite(forward(random_model(3), t, g))


class TestConstruction:
    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            MlpModel(np.zeros((15, 2)), np.zeros(14), np.zeros(15), 0.0, NORM)
        with pytest.raises(ValueError):
            MlpModel(np.zeros((15, 3)), np.zeros(15), np.zeros(15), 0.0, NORM)
        with pytest.raises(ValueError):
            MlpModel.from_vector(np.zeros(60), 15, NORM)

    def test_non_finite(self):
        with pytest.raises(ValueError):
            MlpModel(np.full((15, 2), np.nan), np.zeros(15), np.zeros(15), 0.0, NORM)

    def test_vector_round_trip(self):
        m = random_model(4)
        assert MlpModel.from_vector(m.to_vector(), 15, NORM) == m
        assert m.n_params == 61

    def test_norm_needs_range(self):
        with pytest.raises(ValueError):
            NormSpec((1.0, 1.0), (0.0, 1.0), (0.0, 1.0))

    @given(x=st.floats(1.5, 8.3))
    def test_normalization_round_trip(self, x):
        assert NORM.denormalize_target(NORM.normalize_target(x)) == pytest.approx(x, rel=4e-16, abs=4e-15)


class TestPublishedWeights:
    def test_tables_transcribed(self):
        m = load_paper_weights()
        assert m.b_hidden.tolist() == TABLE_BIAS_HIDDEN
        assert m.w_hidden[:, 0].tolist() == TABLE_W_T
        assert m.w_hidden[:, 1].tolist() == TABLE_W_G
        assert m.w_out.tolist() == TABLE_W_OUT
        assert m.b_out == 0.1528

    def test_spot_values(self):
        m = load_paper_weights()
        assert m.b_hidden[2] == 0.476703785811994
        assert tuple(m.w_hidden[0]) == (0.330659943126136, 0.375354867765757)
        assert m.w_out[0] == 0.526055556926590

    def test_diagnostic_prediction_is_finite(self):
        # normalisation is a reconstruction; only report, never gate on 7.592 A
        assert np.isfinite(forward(load_paper_weights(), 25.0, 1000.0))


class TestPersistence:
    def test_round_trip(self, tmp_path):
        m = random_model(5)
        save_model(m, tmp_path / "m.json")
        assert load_model(tmp_path / "m.json") == m

    def test_published_model_round_trip(self, tmp_path):
        save_model(load_paper_weights(), tmp_path / "p.json")
        assert load_model(tmp_path / "p.json").b_hidden[2] == 0.476703785811994

    def test_schema_keys(self, tmp_path):
        save_model(random_model(6), tmp_path / "m.json")
        data = json.loads((tmp_path / "m.json").read_text())
        assert set(data) == {"version", "w_hidden", "b_hidden", "w_out", "b_out", "norm"}
        assert set(data["norm"]) == {"t", "g", "imp"}

    def test_truncated(self, tmp_path):
        save_model(random_model(7), tmp_path / "m.json")
        text = (tmp_path / "m.json").read_text()
        (tmp_path / "m.json").write_text(text[: len(text) // 2])
        with pytest.raises(SchemaError):
            load_model(tmp_path / "m.json")

    def test_wrong_version(self, tmp_path):
        save_model(random_model(8), tmp_path / "m.json")
        data = json.loads((tmp_path / "m.json").read_text())
        data["version"] = 99
        (tmp_path / "m.json").write_text(json.dumps(data))
        with pytest.raises(SchemaError):
            load_model(tmp_path / "m.json")

    def test_missing_field(self, tmp_path):
        save_model(random_model(9), tmp_path / "m.json")
        data = json.loads((tmp_path / "m.json").read_text())
        del data["w_out"]
        (tmp_path / "m.json").write_text(json.dumps(data))
        with pytest.raises(SchemaError):
            load_model(tmp_path / "m.json")

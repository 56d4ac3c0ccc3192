"""Write src/helios/data/paper_weights.json from the published weight tables.

The published tables carry no normalization. The reconstruction used here maps
T over [15, 40] degC, G over [200, 1090] W/m2 and I_mp over the default
dataset's range onto [-1, 1].
"""

import json
from pathlib import Path

from helios.dataset import generate_grid
from helios.mlp import MlpModel, NormSpec, model_to_dict
from helios.pv_model import load_params

HIDDEN_BIAS = [
    -0.0788662358905827,
    -0.199252461268044,
    0.476703785811994,
    0.0788437136945187,
    0.0788437137489292,
    -0.0843897428619086,
    0.0788437137616096,
    -0.0788437136323596,
    0.0788437137854139,
    -0.0511645156192877,
    0.0521386721602554,
    0.0788437137594562,
    0.0788437137550028,
    0.325165283314198,
    0.199252475098178,
]

HIDDEN_WEIGHTS = [  # (w_T, w_G)
    (0.330659943126136, 0.375354867765757),
    (-0.243061055602675, -0.302898742825237),
    (-0.413686729890811, 0.124969405112560),
    (0.0503908825102565, -0.242889973645394),
    (0.0503908825336595, -0.242889973660344),
    (0.286942170255656, -0.871006037765083),
    (0.0503908825390176, -0.242889973663920),
    (-0.0503908824834618, 0.242889973628136),
    (0.0503908825490957, -0.242889973670382),
    (-0.194105547886448, -0.882406133751217),
    (-0.685142210229390, 0.629560967118233),
    (0.0503908825379756, -0.242889973663218),
    (0.0503908825362639, -0.242889973662112),
    (0.796782784260382, -0.181097405343480),
    (0.243060836205972, 0.302898505989682),
]

OUTPUT_WEIGHTS = [
    0.526055556926590,
    -0.526712907336645,
    0.560221719680131,
    -0.357268781908311,
    -0.357268781972241,
    -0.335049187325717,
    -0.357268781987367,
    0.357268781834757,
    -0.357268782015078,
    0.371791504344763,
    -0.318328545469931,
    -0.357268781984634,
    -0.357268781979911,
    -0.244907095063019,
    0.526712952341475,
]

OUTPUT_BIAS = 0.1528


def main():
    data = generate_grid(load_params())
    norm = NormSpec((15.0, 40.0), (200.0, 1090.0), (float(data.i_mp.min()), float(data.i_mp.max())))
    model = MlpModel(HIDDEN_WEIGHTS, HIDDEN_BIAS, OUTPUT_WEIGHTS, OUTPUT_BIAS, norm)
    out = Path(__file__).resolve().parents[1] / "src" / "helios" / "data" / "paper_weights.json"
    out.write_text(json.dumps(model_to_dict(model), indent=1) + "\n")
    print(f"wrote {out}; I_mp range {norm.imp}")


if __name__ == "__main__":
    main()

"""One-hidden-layer tanh network mapping (T, G) to I_mp."""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from helios.errors import SchemaError
from helios.io_utils import atomic_write_text

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class NormSpec:
    """Min-max ranges mapped onto [-1, 1] for T, G and the I_mp target."""

    t: tuple[float, float]
    g: tuple[float, float]
    imp: tuple[float, float]

    def __post_init__(self):
        for name in ("t", "g", "imp"):
            lo, hi = getattr(self, name)
            if not hi > lo:
                raise ValueError(f"norm range for {name} needs max > min, got ({lo}, {hi})")
            object.__setattr__(self, name, (float(lo), float(hi)))

    @classmethod
    def fit(cls, t_c, g, i_mp) -> "NormSpec":
        """Ranges from data; a constant column gets a +-1 window around its value."""

        def rng(x):
            lo, hi = float(np.min(x)), float(np.max(x))
            return (lo - 1.0, hi + 1.0) if hi == lo else (lo, hi)

        return cls(rng(t_c), rng(g), rng(i_mp))

    def normalize_inputs(self, t_c, g) -> np.ndarray:
        return np.column_stack([_scale(t_c, self.t), _scale(g, self.g)])

    def normalize_target(self, i_mp):
        return _scale(i_mp, self.imp)

    def denormalize_target(self, y):
        lo, hi = self.imp
        return (np.asarray(y) + 1.0) * (hi - lo) / 2.0 + lo

    @property
    def target_half_range(self) -> float:
        return (self.imp[1] - self.imp[0]) / 2.0


def _scale(x, bounds):
    lo, hi = bounds
    return 2.0 * (np.asarray(x, dtype=float) - lo) / (hi - lo) - 1.0


@dataclass(frozen=True, eq=False)
class MlpModel:
    w_hidden: np.ndarray  # (width, 2), columns [w_T, w_G]
    b_hidden: np.ndarray
    w_out: np.ndarray
    b_out: float
    norm: NormSpec

    def __post_init__(self):
        w_hidden = np.array(self.w_hidden, dtype=float)
        b_hidden = np.array(self.b_hidden, dtype=float)
        w_out = np.array(self.w_out, dtype=float)
        if w_hidden.ndim != 2 or w_hidden.shape[1] != 2:
            raise ValueError(f"w_hidden must be (width, 2), got {w_hidden.shape}")
        width = w_hidden.shape[0]
        if width < 1 or b_hidden.shape != (width,) or w_out.shape != (width,):
            raise ValueError(
                f"inconsistent layer sizes: w_hidden {w_hidden.shape}, b_hidden {b_hidden.shape}, w_out {w_out.shape}"
            )
        b_out = float(self.b_out)
        if not (np.all(np.isfinite(w_hidden)) and np.all(np.isfinite(b_hidden)) and np.all(np.isfinite(w_out))):
            raise ValueError("model parameters must be finite")
        if not np.isfinite(b_out):
            raise ValueError("model parameters must be finite")
        for arr in (w_hidden, b_hidden, w_out):
            arr.setflags(write=False)
        object.__setattr__(self, "w_hidden", w_hidden)
        object.__setattr__(self, "b_hidden", b_hidden)
        object.__setattr__(self, "w_out", w_out)
        object.__setattr__(self, "b_out", b_out)

    @property
    def width(self) -> int:
        return self.w_hidden.shape[0]

    @property
    def n_params(self) -> int:
        return 4 * self.width + 1

    def __eq__(self, other) -> bool:
        if not isinstance(other, MlpModel):
            return NotImplemented
        return np.array_equal(self.to_vector(), other.to_vector()) and self.norm == other.norm

    def to_vector(self) -> np.ndarray:
        """Flat parameters: w_hidden row-major, b_hidden, w_out, b_out."""
        return np.concatenate([self.w_hidden.ravel(), self.b_hidden, self.w_out, [self.b_out]])

    @classmethod
    def from_vector(cls, theta, width: int, norm: NormSpec) -> "MlpModel":
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (4 * width + 1,):
            raise ValueError(f"expected {4 * width + 1} parameters, got {theta.shape}")
        return cls(
            w_hidden=theta[: 2 * width].reshape(width, 2),
            b_hidden=theta[2 * width : 3 * width],
            w_out=theta[3 * width : 4 * width],
            b_out=theta[-1],
            norm=norm,
        )

    @classmethod
    def zeros(cls, width: int, norm: NormSpec) -> "MlpModel":
        return cls.from_vector(np.zeros(4 * width + 1), width, norm)


def forward_normalized(model: MlpModel, x: np.ndarray) -> np.ndarray:
    hidden = np.tanh(x @ model.w_hidden.T + model.b_hidden)
    return hidden @ model.w_out + model.b_out


def forward(model: MlpModel, t_c, g):
    """Predicted I_mp (A); scalars in, float out; arrays in, array out."""
    scalar = np.ndim(t_c) == 0 and np.ndim(g) == 0
    x = model.norm.normalize_inputs(np.atleast_1d(t_c), np.atleast_1d(g))
    y = model.norm.denormalize_target(forward_normalized(model, x))
    return float(y[0]) if scalar else y


def model_to_dict(model: MlpModel) -> dict:
    return {
        "version": SCHEMA_VERSION,
        "w_hidden": model.w_hidden.tolist(),
        "b_hidden": model.b_hidden.tolist(),
        "w_out": model.w_out.tolist(),
        "b_out": model.b_out,
        "norm": {"t": list(model.norm.t), "g": list(model.norm.g), "imp": list(model.norm.imp)},
    }


def model_from_dict(data: dict) -> MlpModel:
    if not isinstance(data, dict):
        raise SchemaError("model JSON must be an object")
    if data.get("version") != SCHEMA_VERSION:
        raise SchemaError(f"unsupported model schema version {data.get('version')!r}")
    try:
        norm = data["norm"]
        return MlpModel(
            w_hidden=data["w_hidden"],
            b_hidden=data["b_hidden"],
            w_out=data["w_out"],
            b_out=data["b_out"],
            norm=NormSpec(tuple(norm["t"]), tuple(norm["g"]), tuple(norm["imp"])),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"malformed model JSON: {exc}") from exc


def save_model(model: MlpModel, path: str | Path) -> Path:
    return atomic_write_text(path, json.dumps(model_to_dict(model), indent=1) + "\n")


def load_model(path: str | Path) -> MlpModel:
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not valid JSON ({exc})") from exc
    return model_from_dict(data)


def load_paper_weights() -> MlpModel:
    """Published 2-15-1 weights; the bundled normalization is a reconstruction."""
    text = resources.files("helios.data").joinpath("paper_weights.json").read_text()
    return model_from_dict(json.loads(text))

"""Training corpus: (T, G) -> I_mp samples, seeded shuffle/split, input noise, CSV I/O.

On-disk layout is one sample per row (``T_degC,G_Wm2,Imp_A``); inputs and
target are separate columns rather than separate transposed matrices.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, NamedTuple

import numpy as np

from helios.errors import EmptyDataset, HeliosError, ParseError, SchemaError
from helios.io_utils import atomic_write_text
from helios.mpp import find_mpp
from helios.pv_model import EnvConditions, ModuleParams

HEADER = ["T_degC", "G_Wm2", "Imp_A"]
DEFAULT_FRACTIONS = (0.85, 0.10, 0.05)
SPLIT_SUFFIXES = {"train": ".train.csv", "validation": ".val.csv", "test": ".test.csv"}


def default_t_values() -> np.ndarray:
    return np.arange(15.0, 41.0, 1.0)


def default_g_values() -> np.ndarray:
    return np.linspace(200.0, 1090.0, 50)


class Sample(NamedTuple):
    t_c: float
    g: float
    i_mp: float


@dataclass(frozen=True, eq=False)
class Dataset:
    t_c: np.ndarray
    g: np.ndarray
    i_mp: np.ndarray

    def __post_init__(self):
        n = len(self.t_c)
        if len(self.g) != n or len(self.i_mp) != n:
            raise ValueError("column lengths differ")

    def __len__(self) -> int:
        return len(self.t_c)

    def __iter__(self) -> Iterator[Sample]:
        for t, g, i in zip(self.t_c, self.g, self.i_mp):
            yield Sample(float(t), float(g), float(i))

    def __eq__(self, other) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        return all(np.array_equal(a, b) for a, b in zip(self.columns(), other.columns()))

    def columns(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self.t_c, self.g, self.i_mp

    @property
    def inputs(self) -> np.ndarray:
        return np.column_stack([self.t_c, self.g])

    def take(self, idx) -> "Dataset":
        idx = np.asarray(idx, dtype=int)
        return Dataset(self.t_c[idx], self.g[idx], self.i_mp[idx])

    @classmethod
    def from_samples(cls, samples) -> "Dataset":
        arr = np.array([tuple(s) for s in samples], dtype=float).reshape(-1, 3)
        return cls(arr[:, 0].copy(), arr[:, 1].copy(), arr[:, 2].copy())


@dataclass(frozen=True)
class DataSplit:
    train: Dataset
    validation: Dataset
    test: Dataset
    seed: int
    fractions: tuple[float, float, float]
    indices: tuple[np.ndarray, np.ndarray, np.ndarray]

    def sizes(self) -> tuple[int, int, int]:
        return len(self.train), len(self.validation), len(self.test)


def _check_increasing(name, values):
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValueError(f"{name} must be non-empty")
    if np.any(np.diff(values) <= 0):
        raise ValueError(f"{name} must be strictly increasing")
    return values


def generate_grid(params: ModuleParams, t_values=None, g_values=None) -> Dataset:
    """Evaluate the MPP oracle on the Cartesian grid, T outer and G inner."""
    t_values = _check_increasing("t_values", default_t_values() if t_values is None else t_values)
    g_values = _check_increasing("g_values", default_g_values() if g_values is None else g_values)
    rows = []
    for t_c in t_values:
        for g in g_values:
            try:
                r = find_mpp(params, EnvConditions.from_celsius(float(t_c), float(g)))
            except HeliosError as exc:
                raise type(exc)(f"(t={t_c}, g={g}): {exc}") from exc
            rows.append((t_c, g, r.i_mp))
    return Dataset.from_samples(rows)


def shuffle_split(dataset: Dataset, seed: int, fractions=DEFAULT_FRACTIONS) -> DataSplit:
    """Seeded permutation, then validation/test sizes floored and the remainder to train."""
    fractions = tuple(float(f) for f in fractions)
    if len(fractions) != 3 or any(f < 0 for f in fractions) or abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError(f"fractions must be three non-negative ratios summing to 1, got {fractions}")
    n = len(dataset)
    if n == 0:
        raise EmptyDataset("cannot split an empty dataset")
    perm = np.random.default_rng(seed).permutation(n)
    # small slack so 0.1 * 1300 = 130.00000000000003 floors to 130, not below
    n_val = math.floor(fractions[1] * n + 1e-9)
    n_test = math.floor(fractions[2] * n + 1e-9)
    n_train = n - n_val - n_test
    idx = (perm[:n_train], perm[n_train : n_train + n_val], perm[n_train + n_val :])
    return DataSplit(
        train=dataset.take(idx[0]),
        validation=dataset.take(idx[1]),
        test=dataset.take(idx[2]),
        seed=seed,
        fractions=fractions,
        indices=idx,
    )


def add_awgn(dataset: Dataset, sigma_t: float, sigma_g: float, seed: int) -> Dataset:
    """Gaussian noise on the inputs only; targets stay clean."""
    if sigma_t < 0 or sigma_g < 0:
        raise ValueError("noise sigmas must be >= 0")
    rng = np.random.default_rng(seed)
    n = len(dataset)
    noise_t = rng.standard_normal(n) * sigma_t
    noise_g = rng.standard_normal(n) * sigma_g
    return Dataset(dataset.t_c + noise_t, dataset.g + noise_g, dataset.i_mp.copy())


def to_csv(dataset: Dataset) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(HEADER)
    for row in dataset:
        writer.writerow([format(x, ".17g") for x in row])
    return buf.getvalue()


def from_csv(text: str) -> Dataset:
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or [h.strip() for h in header] != HEADER:
        raise SchemaError(f"expected header {','.join(HEADER)}, got {header}")
    rows = []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != 3:
            raise ParseError(f"expected 3 fields, got {len(row)}", line=lineno)
        try:
            rows.append(tuple(float(x) for x in row))
        except ValueError as exc:
            raise ParseError(str(exc), line=lineno) from exc
    return Dataset.from_samples(rows)


def export_dataset(dataset: Dataset, path: str | Path) -> Path:
    return atomic_write_text(path, to_csv(dataset))


def import_dataset(path: str | Path) -> Dataset:
    return from_csv(Path(path).read_text(encoding="utf-8"))


def _split_paths(stem: str | Path) -> dict[str, Path]:
    stem = str(stem)
    return {k: Path(stem + sfx) for k, sfx in SPLIT_SUFFIXES.items()}


def export_split(split: DataSplit, stem: str | Path, params: ModuleParams | None = None, grid: dict | None = None):
    """Write ``<stem>.train.csv``, ``.val.csv``, ``.test.csv`` and ``<stem>.manifest.json``."""
    paths = _split_paths(stem)
    for key, path in paths.items():
        export_dataset(getattr(split, key), path)
    manifest = {
        "seed": split.seed,
        "fractions": list(split.fractions),
        "sizes": list(split.sizes()),
        "grid": grid,
        "params_sha256": params.digest() if params is not None else None,
        "files": {k: p.name for k, p in paths.items()},
        "indices": {k: [int(x) for x in ix] for k, ix in zip(SPLIT_SUFFIXES, split.indices)},
    }
    manifest_path = Path(str(stem) + ".manifest.json")
    atomic_write_text(manifest_path, json.dumps(manifest, indent=2) + "\n")
    return manifest_path


def import_split(stem: str | Path) -> DataSplit:
    stem = str(stem)
    if stem.endswith(".manifest.json"):
        stem = stem[: -len(".manifest.json")]
    manifest = json.loads(Path(stem + ".manifest.json").read_text())
    parts = {k: import_dataset(p) for k, p in _split_paths(stem).items()}
    return DataSplit(
        train=parts["train"],
        validation=parts["validation"],
        test=parts["test"],
        seed=manifest["seed"],
        fractions=tuple(manifest["fractions"]),
        indices=tuple(np.asarray(manifest["indices"][k], dtype=int) for k in SPLIT_SUFFIXES),
    )


def grid_spec(t_values, g_values) -> dict:
    t_values, g_values = np.asarray(t_values, float), np.asarray(g_values, float)
    return {
        "t_degC": {"min": float(t_values[0]), "max": float(t_values[-1]), "count": int(t_values.size)},
        "g_Wm2": {"min": float(g_values[0]), "max": float(g_values[-1]), "count": int(g_values.size)},
    }

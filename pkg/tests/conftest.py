import numpy as np
import pytest

from helios.dataset import generate_grid, shuffle_split
from helios.pv_model import STC, ModuleParams, load_params
from helios.trainer import TrainConfig, train


@pytest.fixture(scope="session")
def params() -> ModuleParams:
    return load_params()


@pytest.fixture(scope="session")
def default_dataset(params):
    return generate_grid(params)


@pytest.fixture(scope="session")
def default_split(default_dataset):
    return shuffle_split(default_dataset, seed=0)


@pytest.fixture(scope="session")
def trained(default_split):
    """(model, report) from bayesian_lm on the default split."""
    return train(default_split, TrainConfig(seed=0))


def curve_by_node_voltage(p: ModuleParams, t_k: float, g: float, n: int):
    """Exact (V, I) pairs of the I-V curve from a dense scan of x = V + I*Rs.

    The terminal current is explicit in x, so this needs no implicit solve and
    serves as an oracle independent of the Newton solver.
    """
    a = p.ideality * p.k_b * p.ns * t_k / p.q
    iph = (p.isc_ref + p.ki * (t_k - p.t_ref)) * g / p.g_ref
    i_rs = p.isc_ref / (np.exp(p.q * p.voc_ref / (p.ideality * p.ns * p.k_b * t_k)) - 1)
    i0 = i_rs * (t_k / p.t_ref) ** 3 * np.exp(p.q * p.eg0 * (1 / p.t_ref - 1 / t_k) / (p.ideality * p.k_b))
    x = np.linspace(0.0, 1.1 * p.voc_ref, n)
    i = iph - i0 * (np.exp(x / a) - 1) - x / p.rsh
    v = x - i * p.rs
    keep = (v >= 0) & (i >= 0)
    return v[keep], i[keep]


def dense_pmax(p, t_k, g, n=100_000):
    v, i = curve_by_node_voltage(p, t_k, g, n)
    k = int(np.argmax(v * i))
    return v[k], i[k], v[k] * i[k]


def independent_residual(p: ModuleParams, t_k, g, v, i):
    a = p.ideality * p.k_b * p.ns * t_k / p.q
    iph = (p.isc_ref + p.ki * (t_k - p.t_ref)) * g / p.g_ref
    i_rs = p.isc_ref / (np.exp(p.q * p.voc_ref / (p.ideality * p.ns * p.k_b * t_k)) - 1)
    i0 = i_rs * (t_k / p.t_ref) ** 3 * np.exp(p.q * p.eg0 * (1 / p.t_ref - 1 / t_k) / (p.ideality * p.k_b))
    return iph - i0 * (np.exp((v + i * p.rs) / a) - 1) - (v + i * p.rs) / p.rsh - i

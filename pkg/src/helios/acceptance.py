"""End-to-end acceptance checks driven by ``helios reproduce``."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from helios import dataset as ds
from helios.mlp import forward, load_paper_weights
from helios.mpp import find_mpp
from helios.pv_model import (
    STC,
    EnvConditions,
    ModuleParams,
    open_circuit_voltage,
    photo_current,
    residual,
    solve_output_current,
    sweep_iv,
)
from helios.sim import Scenario, run_simulation
from helios.trainer import TrainConfig, error_histogram, gradient, loss, train

# spot checks against the published weight tables: (array, index, value)
PAPER_WEIGHT_SPOTS = [
    ("b_hidden", (0,), -0.0788662358905827),
    ("b_hidden", (2,), 0.476703785811994),
    ("b_hidden", (14,), 0.199252475098178),
    ("w_hidden", (0, 0), 0.330659943126136),
    ("w_hidden", (0, 1), 0.375354867765757),
    ("w_hidden", (10, 0), -0.685142210229390),
    ("w_hidden", (14, 1), 0.302898505989682),
    ("w_out", (0,), 0.526055556926590),
    ("w_out", (9,), 0.371791504344763),
    ("w_out", (14,), 0.526712952341475),
]


@dataclass
class Outcome:
    number: int
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        return f"[{mark}] {self.number:>2}. {self.name}: {self.detail} ({self.seconds:.2f} s)"


class Context:
    """Shared artifacts (dataset, split, trained model) built lazily once."""

    def __init__(self, params: ModuleParams, seed: int = 0):
        self.params = params
        self.seed = seed
        self._data = self._split = self._model = self._report = None

    @property
    def data(self):
        if self._data is None:
            self._data = ds.generate_grid(self.params)
        return self._data

    @property
    def split(self):
        if self._split is None:
            self._split = ds.shuffle_split(self.data, self.seed)
        return self._split

    @property
    def model(self):
        if self._model is None:
            self._model, self._report = train(self.split, TrainConfig(seed=self.seed))
        return self._model

    @property
    def report(self):
        self.model
        return self._report


def c1_stc(ctx: Context):
    t0 = time.perf_counter()
    r = find_mpp(ctx.params, STC)
    dt = time.perf_counter() - t0
    ok = (
        abs(r.p_max - 200.017) <= 0.01 * 200.017
        and abs(r.v_mp - 26.4) <= 0.3
        and abs(r.i_mp - 7.5764) <= 0.01 * 7.5764
        and dt < 1.0
    )
    return ok, f"P={r.p_max:.4f} W, V={r.v_mp:.4f} V, I={r.i_mp:.5f} A"


def c2_solver(ctx: Context):
    p = ctx.params
    rng = np.random.default_rng(ctx.seed)
    worst = 0.0
    for _ in range(1000):
        env = EnvConditions.from_celsius(rng.uniform(15, 40), rng.uniform(200, 1090))
        v = rng.uniform(0, open_circuit_voltage(p, env))
        i = solve_output_current(p, env, v)
        worst = max(worst, abs(float(residual(p, env, v, i))))
    i0 = solve_output_current(p, STC, 0.0)
    iph = photo_current(p, STC)
    curve = sweep_iv(p, STC, 1.2 * p.voc_ref, 1000)
    k = int(np.argmax(curve.i <= 0))
    v_cross = curve.v[k - 1] - curve.i[k - 1] * (curve.v[k] - curve.v[k - 1]) / (curve.i[k] - curve.i[k - 1])
    signs = np.sign(np.diff(sweep_iv(p, STC, p.voc_ref, 1000).p))
    sign_changes = int(np.count_nonzero(np.diff(signs[signs != 0])))
    ok = (
        worst <= 1e-9
        and abs(i0 - iph) <= 0.005 * iph
        and abs(v_cross - p.voc_ref) <= 0.02 * p.voc_ref
        and sign_changes == 1
    )
    return ok, f"max|F|={worst:.2e} A, I(0)/Iph={i0 / iph:.5f}, Voc={v_cross:.3f} V, P-V sign changes={sign_changes}"


def c3_dataset(ctx: Context):
    d = ctx.data
    s1 = ctx.split
    s2 = ds.shuffle_split(ds.generate_grid(ctx.params), ctx.seed)
    same = all(ds.to_csv(getattr(s1, k)) == ds.to_csv(getattr(s2, k)) for k in ("train", "validation", "test"))
    ok = (
        len(d) == 1300
        and d.t_c.min() == 15.0
        and d.t_c.max() == 40.0
        and d.g.min() == 200.0
        and d.g.max() == 1090.0
        and s1.sizes() == (1105, 130, 65)
        and same
    )
    return ok, f"rows={len(d)}, sizes={s1.sizes()}, byte-identical={same}"


def c4_training(ctx: Context):
    rep = ctx.report
    i_pred = forward(ctx.model, 25.0, 1000.0)
    i_true = find_mpp(ctx.params, STC).i_mp
    dev = abs(i_pred - i_true) / i_true
    ok = rep.mse_test <= 5e-3 and dev <= 0.005
    return ok, f"test MSE={rep.mse_test:.3e} A^2, I_pred(25,1000)={i_pred:.5f} A ({100 * dev:.4f}% off)"


def c5_gradient(ctx: Context):
    from helios.mlp import MlpModel, NormSpec

    worst = 0.0
    for seed in range(10):
        rng = np.random.default_rng(100 + seed)
        norm = NormSpec((15.0, 40.0), (200.0, 1090.0), (1.0, 9.0))
        model = MlpModel.from_vector(rng.uniform(-1, 1, 61), 15, norm)
        batch = ds.Dataset(rng.uniform(15, 40, 20), rng.uniform(200, 1090, 20), rng.uniform(1, 9, 20))
        g = gradient(model, batch)
        theta = model.to_vector()
        fd = np.empty_like(theta)
        h = 1e-6
        for j in range(theta.size):
            e = np.zeros_like(theta)
            e[j] = h
            fd[j] = (
                loss(MlpModel.from_vector(theta + e, 15, norm), batch)
                - loss(MlpModel.from_vector(theta - e, 15, norm), batch)
            ) / (2 * h)
        worst = max(worst, float(np.linalg.norm(g - fd) / np.linalg.norm(fd)))
    return worst <= 1e-5, f"max relative error={worst:.2e}"


def c6_histogram(ctx: Context):
    rng = np.random.default_rng(ctx.seed)
    errors = np.concatenate([[-0.2222, 0.1968], rng.uniform(-0.2222, 0.1968, 500)])
    h = error_histogram(errors)
    width = (0.1968 - (-0.2222)) / 20
    counts = [0] * 20
    for e in errors:
        counts[min(int((e + 0.2222) // width), 19)] += 1
    ok = abs(h.bin_width - 0.02095) <= 1e-12 and list(h.counts) == counts
    return ok, f"bin width={h.bin_width:.6f}, counts match={list(h.counts) == counts}"


def c7_controllers(ctx: Context):
    p, model = ctx.params, ctx.model
    parts, ok = [], True
    for sc in (Scenario.constant(), Scenario.step()):
        eff = {c: run_simulation(p, sc, c, model).efficiency for c in ("nn", "po", "ic", "perfect")}
        ok &= eff["nn"] >= 0.99 and eff["nn"] > eff["po"] and eff["ic"] >= eff["po"] and abs(eff["perfect"] - 1) <= 1e-6
        parts.append(f"{sc.name}: " + ", ".join(f"{k}={v:.5f}" for k, v in eff.items()))
    return ok, "; ".join(parts)


def c8_paper_weights(ctx: Context):
    m = load_paper_weights()
    mismatches = [(a, i) for a, i, v in PAPER_WEIGHT_SPOTS if getattr(m, a)[i] != v]
    ok = not mismatches and m.b_out == 0.1528 and m.width == 15
    diag = forward(m, 25.0, 1000.0)
    return ok, f"spot mismatches={len(mismatches)}, b_out={m.b_out}; diagnostic I(25,1000)={diag:.4f} A (not gated)"


def c9_latency(ctx: Context):
    sc = Scenario.constant(duration=100.0)
    res = run_simulation(ctx.params, sc, "nn", ctx.model)
    mean_ms = 1e3 * float(np.mean(res.decision_seconds))
    return res.t.size == 1000 and mean_ms < 1.0, f"mean NN decision={mean_ms:.4f} ms over {res.t.size} steps"


CRITERIA = [
    (1, "STC operating point", c1_stc),
    (2, "solver properties", c2_solver),
    (3, "dataset reproduction", c3_dataset),
    (4, "training quality", c4_training),
    (5, "gradient oracle", c5_gradient),
    (6, "histogram arithmetic", c6_histogram),
    (7, "controller ordering", c7_controllers),
    (8, "published-weights transcription", c8_paper_weights),
    (9, "NN decision latency", c9_latency),
]


def run_all(params: ModuleParams, seed: int = 0) -> list[Outcome]:
    ctx = Context(params, seed)
    out = []
    start = time.perf_counter()
    for number, name, check in CRITERIA:
        t0 = time.perf_counter()
        try:
            ok, detail = check(ctx)
        except Exception as exc:  # a crashing criterion is a failing criterion
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        out.append(Outcome(number, name, bool(ok), detail, time.perf_counter() - t0))
    total = time.perf_counter() - start
    all_ok = all(o.passed for o in out) and total <= 600
    out.append(Outcome(10, "reproduce end-to-end", all_ok, f"criteria 1-9 in {total:.1f} s", total))
    return out

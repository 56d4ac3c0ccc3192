"""Closed-loop MPPT simulation with a quasi-static converter.

Each control period the commanded operating point is reached instantly; the
plant answers with the single-diode current at that voltage, and the ideal
MPP power for the same conditions is the efficiency denominator.
"""

from __future__ import annotations

import bisect
import csv
import io
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from helios.controllers import ControllerState, focv_reference, ic_step, po_step
from helios.errors import DegenerateCurve, HeliosError, InvalidController, ParseError, SchemaError
from helios.mlp import MlpModel, forward
from helios.mpp import MppResult, cached_mpp
from helios.pv_model import EnvConditions, ModuleParams, OperatingPoint, open_circuit_voltage, solve_output_current, solve_voltage

CONTROLLER_KINDS = ("nn", "po", "ic", "focv", "perfect")

# Figures quoted in the literature comparison; reported, never computed.
PAPER_REPORTED = {
    "nn": "99.8% (99.794%)",
    "po": "67.4%",
    "ic": "above 80%",
    "fuzzy": "up to 96%",
}


@dataclass(frozen=True)
class Scenario:
    times: tuple[float, ...]
    t_c: tuple[float, ...]
    g: tuple[float, ...]
    control_period: float = 0.1
    duration: float | None = None
    name: str = "scenario"

    def __post_init__(self):
        if not (len(self.times) == len(self.t_c) == len(self.g)) or not self.times:
            raise ValueError("scenario needs equally long, non-empty sample columns")
        if self.times[0] != 0.0 or any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise ValueError("sample times must start at 0 and strictly increase")
        if self.control_period <= 0:
            raise ValueError("control_period must be > 0")
        if self.duration is None:
            object.__setattr__(self, "duration", self.times[-1] + self.control_period)
        if self.duration <= 0:
            raise ValueError("duration must be > 0")

    @property
    def n_steps(self) -> int:
        return int(round(self.duration / self.control_period))

    def conditions_at(self, t: float) -> tuple[float, float]:
        """Zero-order hold on the sample table."""
        k = bisect.bisect_right(self.times, t + 1e-12) - 1
        return self.t_c[k], self.g[k]

    @classmethod
    def constant(cls, t_c=25.0, g=1000.0, duration=300.0, control_period=0.1, name="constant"):
        return cls((0.0,), (float(t_c),), (float(g),), control_period, duration, name)

    @classmethod
    def step(cls, t_c=25.0, g0=1000.0, g1=600.0, t_step=150.0, duration=300.0, control_period=0.1, name="step"):
        return cls((0.0, float(t_step)), (float(t_c),) * 2, (float(g0), float(g1)), control_period, duration, name)


def scenario_from_json(text: str, name: str = "scenario") -> Scenario:
    try:
        data = json.loads(text)
        samples = data["samples"]
        return Scenario(
            times=tuple(float(s["t_s"]) for s in samples),
            t_c=tuple(float(s["T_degC"]) for s in samples),
            g=tuple(float(s["G_Wm2"]) for s in samples),
            control_period=float(data.get("control_period_s", 0.1)),
            duration=float(data["duration_s"]) if "duration_s" in data else None,
            name=data.get("name", name),
        )
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise SchemaError(f"bad scenario JSON: {exc}") from exc


def scenario_from_csv(text: str, control_period: float = 0.1, duration=None, name="scenario") -> Scenario:
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or [h.strip() for h in header] != ["t_s", "T_degC", "G_Wm2"]:
        raise SchemaError("expected header t_s,T_degC,G_Wm2")
    rows = []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        try:
            rows.append(tuple(float(x) for x in row))
        except ValueError as exc:
            raise ParseError(str(exc), line=lineno) from exc
        if len(rows[-1]) != 3:
            raise ParseError("expected 3 fields", line=lineno)
    cols = list(zip(*rows)) if rows else [(), (), ()]
    return Scenario(tuple(cols[0]), tuple(cols[1]), tuple(cols[2]), control_period, duration, name)


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix.lower() == ".csv":
        return scenario_from_csv(text, name=path.stem)
    return scenario_from_json(text, name=path.stem)


def scenario_controllers(path: str | Path) -> list["ControllerConfig"]:
    """Optional ``controllers`` list embedded in a scenario JSON file."""
    path = Path(path)
    if path.suffix.lower() == ".csv":
        return []
    data = json.loads(path.read_text(encoding="utf-8"))
    return [ControllerConfig(**c) for c in data.get("controllers", [])]


@dataclass(frozen=True)
class ControllerConfig:
    kind: str
    step_v: float = 0.2
    epsilon: float = 0.01
    k: float = 0.80
    v_init: float = 15.0
    v_max: float | None = None
    name: str | None = None

    def __post_init__(self):
        if self.kind not in CONTROLLER_KINDS:
            raise InvalidController(f"unknown controller {self.kind!r}; choose from {CONTROLLER_KINDS}")

    @property
    def label(self) -> str:
        return self.name or self.kind


@dataclass
class SimResult:
    controller: str
    scenario: str
    t: np.ndarray
    v: np.ndarray
    i: np.ndarray
    p: np.ndarray
    p_mpp: np.ndarray
    v_ref: np.ndarray
    efficiency: float
    nn_fallbacks: int = 0
    decision_seconds: np.ndarray = field(default_factory=lambda: np.zeros(0), repr=False)

    def trace_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["t_s", "v_V", "i_A", "p_W", "p_mpp_W", "v_ref_V"])
        for row in zip(self.t, self.v, self.i, self.p, self.p_mpp, self.v_ref):
            writer.writerow([format(x, ".17g") for x in row])
        return buf.getvalue()


def _ideal(params: ModuleParams, env: EnvConditions) -> MppResult | None:
    try:
        return cached_mpp(params, env)
    except DegenerateCurve:
        return None


def nn_operating_voltage(params: ModuleParams, env: EnvConditions, model: MlpModel) -> tuple[float, bool]:
    """Voltage on the live curve delivering the predicted I_mp; (v, used_fallback)."""
    i_pred = forward(model, env.t_c, env.g)
    v = solve_voltage(params, env, i_pred)
    if v >= 0.0 and np.isfinite(v):
        return v, False
    ideal = _ideal(params, env)
    return (ideal.v_mp if ideal else 0.0), True


def run_simulation(
    params: ModuleParams,
    scenario: Scenario,
    controller: ControllerConfig | str,
    model: MlpModel | None = None,
) -> SimResult:
    if isinstance(controller, str):
        controller = ControllerConfig(controller)
    if controller.kind == "nn" and model is None:
        raise InvalidController("the nn controller needs a trained model")
    v_max = controller.v_max if controller.v_max is not None else params.voc_ref
    state = ControllerState(v_ref=min(max(controller.v_init, 0.0), v_max), v_max=v_max)

    n = scenario.n_steps
    cols = {k: np.empty(n) for k in ("t", "v", "i", "p", "p_mpp", "v_ref")}
    decision = np.zeros(n)
    fallbacks = 0
    for step in range(n):
        t = step * scenario.control_period
        t_c, g = scenario.conditions_at(t)
        env = EnvConditions.from_celsius(t_c, g)
        ideal = _ideal(params, env)

        tic = time.perf_counter()
        kind = controller.kind
        if kind == "nn":
            v_cmd, fb = nn_operating_voltage(params, env, model)
            fallbacks += fb
        elif kind == "perfect":
            v_cmd = ideal.v_mp if ideal else 0.0
        elif kind == "focv":
            v_cmd = focv_reference(open_circuit_voltage(params, env), controller.k)
        else:
            v_cmd = state.v_ref
        decision[step] = time.perf_counter() - tic

        try:
            i = solve_output_current(params, env, v_cmd)
        except HeliosError as exc:
            raise type(exc)(f"step {step} (t={t:.3f} s): {exc}") from exc
        p = v_cmd * i
        if kind == "po":
            state = po_step(state, OperatingPoint(v_cmd, i, p), controller.step_v)
        elif kind == "ic":
            state = ic_step(state, OperatingPoint(v_cmd, i, p), controller.step_v, controller.epsilon)

        cols["t"][step] = t
        cols["v"][step] = v_cmd
        cols["i"][step] = i
        cols["p"][step] = p
        cols["p_mpp"][step] = ideal.p_max if ideal else 0.0
        cols["v_ref"][step] = v_cmd

    total_ideal = float(np.sum(cols["p_mpp"]))
    efficiency = float(np.sum(cols["p"])) / total_ideal if total_ideal > 0 else 0.0
    return SimResult(
        controller=controller.label,
        scenario=scenario.name,
        efficiency=efficiency,
        nn_fallbacks=fallbacks,
        decision_seconds=decision,
        **cols,
    )


@dataclass
class Comparison:
    scenario: str
    measured: list[dict]
    errors: dict[str, str]

    def ranked(self) -> list[dict]:
        return sorted(self.measured, key=lambda r: -r["efficiency"])

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "measured": self.ranked(),
            "paper_reported": PAPER_REPORTED,
            "errors": self.errors,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def table(self) -> str:
        lines = [f"scenario: {self.scenario}", f"{'rank':<5}{'controller':<14}{'measured':>12}  paper-reported"]
        for rank, row in enumerate(self.ranked(), start=1):
            lit = PAPER_REPORTED.get(row["kind"], "-")
            lines.append(f"{rank:<5}{row['controller']:<14}{100 * row['efficiency']:>11.3f}%  {lit}")
        lines.append(f"{'-':<5}{'fuzzy':<14}{'n/a':>12}  {PAPER_REPORTED['fuzzy']}")
        for name, msg in self.errors.items():
            lines.append(f"error  {name}: {msg}")
        return "\n".join(lines)


def compare(
    params: ModuleParams,
    scenario: Scenario,
    controllers: list[ControllerConfig | str],
    model: MlpModel | None = None,
) -> Comparison:
    if len(controllers) < 2:
        raise ValueError("compare needs at least two controllers")
    measured, errors = [], {}
    for c in controllers:
        cfg = ControllerConfig(c) if isinstance(c, str) else c
        try:
            res = run_simulation(params, scenario, cfg, model)
        except HeliosError as exc:
            errors[cfg.label] = str(exc)
            continue
        measured.append({"controller": cfg.label, "kind": cfg.kind, "efficiency": res.efficiency})
    return Comparison(scenario=scenario.name, measured=measured, errors=errors)

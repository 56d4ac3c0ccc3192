"""Single-diode PV module model.

All physics runs in Kelvin. Public helpers that take temperatures in degrees
Celsius say so in their argument names (``t_c``).
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field, fields
from importlib import resources
from pathlib import Path

import numpy as np

from helios.errors import NoConvergence, NumericOverflow, SchemaError

KELVIN_OFFSET = 273.15
EXP_CAP = 700.0


@dataclass(frozen=True)
class ModuleParams:
    ns: int = 54
    isc_ref: float = 8.21
    voc_ref: float = 32.9
    rs: float = 0.221
    rsh: float = 415.405
    ki: float = 0.0032
    ideality: float = 1.3
    eg0: float = 1.1
    t_ref: float = 298.15
    g_ref: float = 1000.0
    q: float = 1.6e-19
    k_b: float = 1.3805e-23

    def __post_init__(self):
        if self.ns < 1:
            raise ValueError(f"ns must be >= 1, got {self.ns}")
        if self.rs < 0 or self.rsh <= 0:
            raise ValueError("require rs >= 0 and rsh > 0")
        if self.isc_ref <= 0 or self.voc_ref <= 0:
            raise ValueError("isc_ref and voc_ref must be positive")
        if not 0.5 <= self.ideality <= 2.5:
            raise ValueError(f"ideality {self.ideality} outside [0.5, 2.5]")
        if self.g_ref <= 0 or self.t_ref <= 0:
            raise ValueError("g_ref and t_ref must be positive")

    def thermal_voltage(self, t_k: float) -> float:
        """Modified thermal voltage n*k*Ns*T/q of the whole module (V)."""
        return self.ideality * self.k_b * self.ns * t_k / self.q

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ModuleParams":
        names = {f.name for f in fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise SchemaError(f"unknown ModuleParams fields: {sorted(unknown)}")
        missing = names - set(data)
        if missing:
            raise SchemaError(f"missing ModuleParams fields: {sorted(missing)}")
        kwargs = dict(data)
        kwargs["ns"] = int(kwargs["ns"])
        return cls(**kwargs)

    def digest(self) -> str:
        import hashlib

        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


def load_params(path: str | Path | None = None) -> ModuleParams:
    """Load ModuleParams from JSON; ``None`` loads the bundled datasheet defaults."""
    if path is None:
        text = resources.files("helios.data").joinpath("module_params.json").read_text()
    else:
        text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid params JSON: {exc}") from exc
    return ModuleParams.from_dict(data)


def save_params(params: ModuleParams, path: str | Path) -> None:
    from helios.io_utils import atomic_write_text

    atomic_write_text(path, json.dumps(params.to_dict(), indent=2) + "\n")


@dataclass(frozen=True)
class EnvConditions:
    t_k: float
    g: float

    def __post_init__(self):
        if not self.t_k > 0:
            raise ValueError(f"temperature must be > 0 K, got {self.t_k}")
        if not self.g >= 0:
            raise ValueError(f"irradiance must be >= 0, got {self.g}")

    @classmethod
    def from_celsius(cls, t_c: float, g: float) -> "EnvConditions":
        return cls(t_k=t_c + KELVIN_OFFSET, g=g)

    @property
    def t_c(self) -> float:
        return self.t_k - KELVIN_OFFSET


STC = EnvConditions(t_k=298.15, g=1000.0)


@dataclass(frozen=True)
class OperatingPoint:
    v: float
    i: float
    p: float

    @classmethod
    def at(cls, v: float, i: float) -> "OperatingPoint":
        return cls(v=v, i=i, p=v * i)


@dataclass(frozen=True)
class IVCurve:
    v: np.ndarray
    i: np.ndarray
    env: EnvConditions
    p: np.ndarray = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "p", self.v * self.i)
        if len(self.v) < 2 or self.v[0] != 0.0 or np.any(np.diff(self.v) <= 0):
            raise ValueError("voltages must start at 0 and be strictly increasing")

    @property
    def points(self) -> list[OperatingPoint]:
        return [OperatingPoint(float(v), float(i), float(p)) for v, i, p in zip(self.v, self.i, self.p)]

    def max_power_point(self) -> OperatingPoint:
        k = int(np.argmax(self.p))
        return OperatingPoint(float(self.v[k]), float(self.i[k]), float(self.p[k]))

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["v_V", "i_A", "p_W"])
        for v, i, p in zip(self.v, self.i, self.p):
            writer.writerow([format(v, ".17g"), format(i, ".17g"), format(p, ".17g")])
        return buf.getvalue()


def photo_current(params: ModuleParams, env: EnvConditions) -> float:
    return (params.isc_ref + params.ki * (env.t_k - params.t_ref)) * env.g / params.g_ref


def reverse_saturation_current(params: ModuleParams, t_k: float, exp_cap: float = EXP_CAP) -> float:
    if t_k <= 0:
        raise ValueError("t_k must be positive")
    arg = params.q * params.voc_ref / (params.ideality * params.ns * params.k_b * t_k)
    if arg > exp_cap:
        raise NumericOverflow(f"exponent {arg:.4g} exceeds cap {exp_cap}")
    denom = math.expm1(arg)
    if arg < 1e-12:
        raise NumericOverflow("reverse saturation current is singular (exponent -> 0)")
    return params.isc_ref / denom


def saturation_current(params: ModuleParams, t_k: float, exp_cap: float = EXP_CAP) -> float:
    i_rs = reverse_saturation_current(params, t_k, exp_cap)
    arg = params.q * params.eg0 * (1.0 / params.t_ref - 1.0 / t_k) / (params.ideality * params.k_b)
    if arg > exp_cap:
        raise NumericOverflow(f"exponent {arg:.4g} exceeds cap {exp_cap}")
    return i_rs * (t_k / params.t_ref) ** 3 * math.exp(arg)


def residual(params: ModuleParams, env: EnvConditions, v, i):
    """Implicit output-current equation F(I); zero on the I-V curve."""
    iph = photo_current(params, env)
    i0 = saturation_current(params, env.t_k)
    a = params.thermal_voltage(env.t_k)
    node = np.asarray(v) + np.asarray(i) * params.rs
    return iph - i0 * np.expm1(node / a) - node / params.rsh - i


def solve_output_current(
    params: ModuleParams,
    env: EnvConditions,
    v,
    tol: float = 1e-9,
    max_iter: int = 200,
    exp_cap: float = EXP_CAP,
):
    """Terminal current at voltage ``v`` (scalar or array).

    Bracketed Newton on F(I); a Newton iterate that leaves the bracket is
    halved back toward the current point, then replaced by bisection.
    """
    iph = photo_current(params, env)
    i0 = saturation_current(params, env.t_k, exp_cap)
    a = params.thermal_voltage(env.t_k)
    rs, rsh = params.rs, params.rsh
    if np.ndim(v) == 0:
        return _solve_scalar(float(v), iph, i0, a, rs, rsh, tol, max_iter, exp_cap)
    v = np.asarray(v, dtype=float)
    if np.any(v < 0):
        raise ValueError("voltage must be >= 0")

    def f_df(i):
        arg = (v + i * rs) / a
        if np.max(arg) > exp_cap:
            raise NumericOverflow(f"diode exponent {np.max(arg):.4g} exceeds cap {exp_cap}")
        e = np.exp(arg)
        f = iph - i0 * (e - 1.0) - (v + i * rs) / rsh - i
        df = -i0 * rs / a * e - rs / rsh - 1.0
        return f, df

    lo = np.full_like(v, -0.1)
    hi = np.full_like(v, 1.5 * iph + 1.0)
    # F is strictly decreasing in I: need F(lo) >= 0 >= F(hi).
    for _ in range(200):
        f_lo, _ = f_df(lo)
        bad = f_lo < 0
        if not bad.any():
            break
        lo = np.where(bad, 2.0 * lo - 1.0, lo)
    i = np.clip(np.full_like(v, iph), lo, hi)

    f, df = f_df(i)
    for _ in range(max_iter):
        active = np.abs(f) > 1e-13
        if not active.any():
            break
        lo = np.where(f > 0, i, lo)
        hi = np.where(f < 0, i, hi)
        step = -f / df
        trial = i + step
        for _ in range(3):
            outside = (trial <= lo) | (trial >= hi)
            if not outside.any():
                break
            step = np.where(outside, 0.5 * step, step)
            trial = i + step
        outside = (trial <= lo) | (trial >= hi)
        trial = np.where(outside, 0.5 * (lo + hi), trial)
        trial = np.where(active, trial, i)
        if np.array_equal(trial, i):
            break
        i = trial
        f, df = f_df(i)
    res = np.abs(f)
    if np.any(res > tol):
        k = int(np.argmax(res))
        raise NoConvergence(
            f"output-current solve failed at V={v[k]:.6g} (residual {res[k]:.3g})",
            residual=float(res[k]),
            voltage=float(v[k]),
        )
    return i


def _solve_scalar(v, iph, i0, a, rs, rsh, tol, max_iter, exp_cap):
    # pure-float twin of the array path; avoids numpy overhead per call
    if v < 0:
        raise ValueError("voltage must be >= 0")

    def f_df(i):
        arg = (v + i * rs) / a
        if arg > exp_cap:
            raise NumericOverflow(f"diode exponent {arg:.4g} exceeds cap {exp_cap}")
        e = math.exp(arg)
        return iph - i0 * (e - 1.0) - (v + i * rs) / rsh - i, -i0 * rs / a * e - rs / rsh - 1.0

    lo, hi = -0.1, 1.5 * iph + 1.0
    for _ in range(200):
        if f_df(lo)[0] >= 0:
            break
        lo = 2.0 * lo - 1.0
    i = min(max(iph, lo), hi)
    f, df = f_df(i)
    for _ in range(max_iter):
        if abs(f) <= 1e-13:
            break
        if f > 0:
            lo = i
        else:
            hi = i
        step = -f / df
        for _ in range(3):
            if lo < i + step < hi:
                break
            step *= 0.5
        trial = i + step
        if not lo < trial < hi:
            trial = 0.5 * (lo + hi)
        if trial == i:
            break
        i = trial
        f, df = f_df(i)
    if abs(f) > tol:
        raise NoConvergence(
            f"output-current solve failed at V={v:.6g} (residual {abs(f):.3g})", residual=abs(f), voltage=v
        )
    return i


def solve_voltage(params: ModuleParams, env: EnvConditions, i: float, tol: float = 1e-12) -> float:
    """Terminal voltage at which the module delivers current ``i``.

    Solves the diode-node equation in x = V + I*Rs, which is explicit in the
    terminal current, then returns V = x - I*Rs. The result is negative when
    ``i`` exceeds the short-circuit current (off the first-quadrant curve).
    """
    iph = photo_current(params, env)
    i0 = saturation_current(params, env.t_k)
    a = params.thermal_voltage(env.t_k)
    rsh = params.rsh
    d = iph - i
    x = a * math.log1p(d / i0) if d > 0 else d * rsh
    for _ in range(100):
        e = math.exp(min(x / a, EXP_CAP))
        g = d - i0 * (e - 1.0) - x / rsh
        dg = -i0 / a * e - 1.0 / rsh
        dx = -g / dg
        x += dx
        if abs(dx) <= tol * max(1.0, abs(x)):
            break
    else:
        raise NoConvergence(f"voltage solve failed for I={i:.6g}")
    return x - i * params.rs


def open_circuit_voltage(params: ModuleParams, env: EnvConditions) -> float:
    """V where the solved terminal current crosses zero (0 when dark)."""
    if photo_current(params, env) <= 0:
        return 0.0
    return max(solve_voltage(params, env, 0.0), 0.0)


def sweep_iv(params: ModuleParams, env: EnvConditions, v_max: float, n_points: int) -> IVCurve:
    if n_points < 2:
        raise ValueError("n_points must be >= 2")
    if v_max <= 0:
        raise ValueError("v_max must be positive")
    v = np.linspace(0.0, v_max, n_points)
    return IVCurve(v=v, i=solve_output_current(params, env, v), env=env)

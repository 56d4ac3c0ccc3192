"""Maximum-power-point search on the single-diode curve."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from helios.errors import DegenerateCurve, HeliosError, ParseError, SchemaError
from helios.pv_model import (
    EnvConditions,
    ModuleParams,
    open_circuit_voltage,
    solve_output_current,
)

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class MppConfig:
    v_tol: float = 1e-4
    coarse_points: int = 200

    def __post_init__(self):
        if self.v_tol <= 0:
            raise ValueError("v_tol must be positive")
        if self.coarse_points < 3:
            raise ValueError("coarse_points must be >= 3")


@dataclass(frozen=True)
class MppResult:
    v_mp: float
    i_mp: float
    p_max: float
    solver_evals: int
    env: EnvConditions


def golden_section_max(f, a: float, b: float, tol: float):
    """Maximise a unimodal ``f`` on [a, b]; returns (x, f(x), n_evals)."""
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    evals = 2
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
        evals += 1
    return (c, fc, evals) if fc >= fd else (d, fd, evals)


def find_mpp(params: ModuleParams, env: EnvConditions, cfg: MppConfig = MppConfig()) -> MppResult:
    voc = open_circuit_voltage(params, env)
    if voc <= 0:
        raise DegenerateCurve(f"no power available at T={env.t_c:.2f} C, G={env.g:g} W/m2")

    v_grid = np.linspace(0.0, voc, cfg.coarse_points)
    p_grid = v_grid * solve_output_current(params, env, v_grid)
    k = int(np.argmax(p_grid))
    if p_grid[k] <= 0:
        raise DegenerateCurve(f"max power {p_grid[k]:.3g} W <= 0")
    lo = v_grid[max(k - 1, 0)]
    hi = v_grid[min(k + 1, len(v_grid) - 1)]

    def power(v):
        return v * solve_output_current(params, env, v)

    v_best, p_best, evals = golden_section_max(power, lo, hi, cfg.v_tol)
    # the refined point must dominate both bracket endpoints
    for j in (max(k - 1, 0), min(k + 1, len(v_grid) - 1), k):
        if p_grid[j] > p_best:
            v_best, p_best = float(v_grid[j]), float(p_grid[j])
    i_best = solve_output_current(params, env, v_best)
    return MppResult(
        v_mp=float(v_best),
        i_mp=float(i_best),
        p_max=float(v_best * i_best),
        solver_evals=cfg.coarse_points + evals + 1,
        env=env,
    )


@lru_cache(maxsize=4096)
def cached_mpp(params: ModuleParams, env: EnvConditions) -> MppResult:
    return find_mpp(params, env)


def read_conditions_csv(text: str) -> list[tuple[float, float]]:
    """Parse ``t_C,g_Wm2`` rows."""
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or [c.strip() for c in rows[0]] != ["t_C", "g_Wm2"]:
        raise SchemaError("expected header t_C,g_Wm2")
    out = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        try:
            t_c, g = (float(x) for x in row)
        except ValueError as exc:
            raise ParseError(str(exc), line=lineno) from exc
        out.append((t_c, g))
    return out


def batch_mpp_csv(params: ModuleParams, text: str, cfg: MppConfig = MppConfig()) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["t_C", "g_Wm2", "v_mp_V", "i_mp_A", "p_max_W"])
    for t_c, g in read_conditions_csv(text):
        try:
            r = find_mpp(params, EnvConditions.from_celsius(t_c, g), cfg)
        except HeliosError as exc:
            raise type(exc)(f"(t={t_c}, g={g}): {exc}") from exc
        writer.writerow([repr(t_c), repr(g)] + [format(x, ".17g") for x in (r.v_mp, r.i_mp, r.p_max)])
    return buf.getvalue()

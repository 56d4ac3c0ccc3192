"""Hill-climbing and fractional-Voc MPPT baselines over a voltage reference.

Step functions are pure: they take a state and a measurement and return a new
state. Both hill climbers take one forced positive step on their first call so
that a divided difference exists before the decision logic engages.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from helios.pv_model import OperatingPoint


@dataclass(frozen=True)
class ControllerState:
    v_ref: float
    v_max: float
    last_v: float | None = None
    last_i: float | None = None
    last_p: float | None = None
    direction: int = 1

    def __post_init__(self):
        if self.direction not in (1, -1):
            raise ValueError("direction must be +1 or -1")
        if not 0.0 <= self.v_ref <= self.v_max:
            raise ValueError(f"v_ref {self.v_ref} outside [0, {self.v_max}]")

    @property
    def started(self) -> bool:
        return self.last_p is not None


def _clamp(v: float, v_max: float) -> float:
    return min(max(v, 0.0), v_max)


def _remember(state: ControllerState, measured: OperatingPoint, **changes) -> ControllerState:
    return replace(state, last_v=measured.v, last_i=measured.i, last_p=measured.p, **changes)


def po_step(state: ControllerState, measured: OperatingPoint, step_v: float = 0.2) -> ControllerState:
    """Perturb & Observe: keep direction while power rises, reverse otherwise."""
    if step_v <= 0:
        raise ValueError("step_v must be positive")
    if not state.started:
        return _remember(state, measured, direction=1, v_ref=_clamp(state.v_ref + step_v, state.v_max))
    direction = state.direction if measured.p - state.last_p > 0 else -state.direction
    v_ref = _clamp(state.v_ref + direction * step_v, state.v_max)
    return _remember(state, measured, direction=direction, v_ref=v_ref)


def ic_step(
    state: ControllerState, measured: OperatingPoint, step_v: float = 0.2, epsilon: float = 0.01
) -> ControllerState:
    """Incremental conductance: drive dI/dV + I/V to within +-epsilon of zero."""
    if step_v <= 0:
        raise ValueError("step_v must be positive")
    if epsilon < 0:
        raise ValueError("epsilon must be >= 0")
    if not state.started:
        return _remember(state, measured, direction=1, v_ref=_clamp(state.v_ref + step_v, state.v_max))

    dv = measured.v - state.last_v
    di = measured.i - state.last_i
    if dv == 0.0:
        move = 0 if di == 0.0 else (1 if di > 0 else -1)
    elif measured.v <= 0.0:
        move = 1
    else:
        slope_gap = di / dv + measured.i / measured.v
        move = 0 if abs(slope_gap) <= epsilon else (1 if slope_gap > 0 else -1)

    if move == 0:
        return _remember(state, measured)
    v_ref = _clamp(state.v_ref + move * step_v, state.v_max)
    return _remember(state, measured, direction=move, v_ref=v_ref)


def focv_reference(voc_measured: float, k: float = 0.80) -> float:
    if not 0.0 < k < 1.0:
        raise ValueError(f"FOCV fraction must be in (0, 1), got {k}")
    return k * voc_measured

"""Field-oriented speed/current control with a dc-link cell-count command.

The current loops run once per carrier period, the speed loop every
``speed_divider`` current steps. Field weakening is a voltage-margin PI that
only acts once the cell count is pinned at ``N_max``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .machine import MachineParams, MachineState
from .modulation import ModulationMethod, Variant, cells_required, required_dc_voltage

RATED_CURRENT_PEAK = math.sqrt(2.0) * 9.0


@dataclass(frozen=True)
class ControlGains:
    kp_d: float
    ki_d: float
    kp_q: float
    ki_q: float
    kp_speed: float
    ki_speed: float
    kp_fw: float = 0.02
    ki_fw: float = 40.0
    i_max: float = RATED_CURRENT_PEAK
    i_d_min: float = -RATED_CURRENT_PEAK
    fw_hysteresis: float = 0.05
    n_hysteresis: float = 0.0
    demand_filter_s: float = 0.0
    dt_current: float = 1e-4
    speed_divider: int = 10

    @classmethod
    def from_machine(cls, params: MachineParams, current_bw_hz: float = 500.0, speed_bw_hz: float = 20.0,
                     dt_current: float = 1e-4, speed_divider: int = 10, **kw) -> ControlGains:
        """Pole placement: PI zero cancels the R/L pole, speed PI sized on J/K_t."""
        wc = 2.0 * math.pi * current_bw_hz
        ws = 2.0 * math.pi * speed_bw_hz
        kp_speed = params.inertia * ws / params.torque_constant
        return cls(
            kp_d=params.l_d * wc, ki_d=params.r_s * wc,
            kp_q=params.l_q * wc, ki_q=params.r_s * wc,
            kp_speed=kp_speed, ki_speed=kp_speed * ws / 4.0,
            dt_current=dt_current, speed_divider=speed_divider, **kw,
        )


@dataclass
class FieldWeakeningState:
    active: bool = False
    integral: float = 0.0


@dataclass
class ControllerState:
    i_d_ref: float = 0.0
    i_q_ref: float = 0.0
    int_speed: float = 0.0
    int_d: float = 0.0
    int_q: float = 0.0
    fw: FieldWeakeningState = field(default_factory=FieldWeakeningState)
    n_target: int = 0
    u_dc_demand: float = 0.0
    u_dc_demand_filt: float = 0.0
    saturated: bool = False
    tick: int = 0


@dataclass(frozen=True)
class ControlOutput:
    v_d: float
    v_q: float
    n_target: int
    u_dc_demand: float


def field_weakening_step(demand: float, available: float, fw: FieldWeakeningState,
                         gains: ControlGains, dt: float) -> float:
    """Negative d-current reference from the dc-link voltage excess."""
    excess = demand - available
    if not fw.active:
        if excess <= 0.0:
            return 0.0
        fw.active = True
    limit = -gains.i_d_min
    fw.integral = min(max(fw.integral + gains.ki_fw * excess * dt, 0.0), limit)
    if fw.integral == 0.0 and demand < (1.0 - gains.fw_hysteresis) * available:
        fw.active = False
        return 0.0
    return -min(max(gains.kp_fw * excess + fw.integral, 0.0), limit)


def _clamp(x: float, lo: float, hi: float) -> float:
    return lo if x < lo else min(x, hi)


def control_step(ctrl: ControllerState, measured: MachineState, speed_ref: float,
                 method: ModulationMethod, params: MachineParams, gains: ControlGains,
                 u_dc: float, v_cell_avg: float, n_max: int) -> ControlOutput:
    """One current-loop period; updates ``ctrl`` in place."""
    dt = gains.dt_current
    if ctrl.tick % gains.speed_divider == 0:
        dts = dt * gains.speed_divider
        err = speed_ref - measured.omega_m
        iq_lim = math.sqrt(max(gains.i_max ** 2 - ctrl.i_d_ref ** 2, 0.0))
        raw = gains.kp_speed * err + ctrl.int_speed + gains.ki_speed * err * dts
        if -iq_lim < raw < iq_lim:
            ctrl.int_speed += gains.ki_speed * err * dts
        ctrl.i_q_ref = _clamp(raw, -iq_lim, iq_lim)
    ctrl.tick += 1

    we = params.pole_pairs * measured.omega_m
    ed = ctrl.i_d_ref - measured.i_d
    eq = ctrl.i_q_ref - measured.i_q
    ff_d = -we * params.l_q * measured.i_q
    ff_q = we * (params.l_d * measured.i_d + params.psi_pm)
    vd = gains.kp_d * ed + ctrl.int_d + gains.ki_d * ed * dt + ff_d
    vq = gains.kp_q * eq + ctrl.int_q + gains.ki_q * eq * dt + ff_q

    u1, _, demand = required_dc_voltage(vd, vq, method)
    available = n_max * v_cell_avg
    ctrl.u_dc_demand = demand
    # cell count follows the low-passed demand so pattern ripple in the
    # measured currents does not toggle units every period
    tau = gains.demand_filter_s
    if tau > 0.0:
        ctrl.u_dc_demand_filt += min(dt / tau, 1.0) * (demand - ctrl.u_dc_demand_filt)
    else:
        ctrl.u_dc_demand_filt = demand

    # voltage the inverter can actually produce right now
    if method.variant is Variant.OPP:
        v_lim = 0.5 * method.utilization_ratio * available
    else:
        v_lim = 0.5 * max(u_dc, 0.0)
    ctrl.saturated = u1 > v_lim
    if ctrl.saturated:
        scale = v_lim / u1 if u1 > 0.0 else 0.0
        vd *= scale
        vq *= scale
    else:
        ctrl.int_d += gains.ki_d * ed * dt
        ctrl.int_q += gains.ki_q * eq * dt

    i_d_ref = field_weakening_step(demand, available, ctrl.fw, gains, dt)
    ctrl.i_d_ref = max(i_d_ref, gains.i_d_min)

    if method.variant is Variant.PWM or ctrl.fw.active:
        ctrl.n_target = n_max
    else:
        d = ctrl.u_dc_demand_filt
        n = cells_required(d, v_cell_avg, n_max)
        # change level only once the demand clears the current one by a margin
        margin = gains.n_hysteresis * v_cell_avg
        if n > ctrl.n_target > 0:
            n = max(ctrl.n_target, cells_required(max(d - margin, 0.0), v_cell_avg, n_max))
        elif 0 < n < ctrl.n_target:
            n = min(ctrl.n_target, cells_required(d + margin, v_cell_avg, n_max))
        ctrl.n_target = n
    return ControlOutput(vd, vq, ctrl.n_target, demand)


def track_applied_voltage(ctrl: ControllerState, commanded: ControlOutput, v_d: float, v_q: float,
                          gain: float = 1.0) -> None:
    """Back-calculation anti-windup against the voltage the inverter really produced.

    With OPP the amplitude is fixed by the connected cells, not by the
    controller, so the integrators must follow what was applied.
    """
    ctrl.int_d += gain * (v_d - commanded.v_d)
    ctrl.int_q += gain * (v_q - commanded.v_q)


def steady_state_controller(params: MachineParams, gains: ControlGains, i_q: float) -> ControllerState:
    """Controller pre-loaded for operation at constant ``i_q`` with i_d = 0."""
    return ControllerState(i_q_ref=i_q, int_speed=i_q, int_q=params.r_s * i_q)


TELEMETRY_HEADER = ["t_s", "omega_rpm", "id_A", "iq_A", "id_ref", "iq_ref", "N", "N_target", "Udc_V", "fw_active"]

"""Post-hoc loss accounting on recorded steady-state windows.

Losses are an overlay on an ideal-switch circuit: inverter, MOSFET and
battery losses never feed back into the electrical solution, which keeps the
power-balance checks exact up to integration error.
"""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass

import numpy as np

from .machine import MachineParams
from .spectrum import fundamental_phasor, period_count


class AccountingError(ArithmeticError):
    """A loss residual came out negative; the model is inconsistent."""


@dataclass(frozen=True)
class IgbtParams:
    v_ce0: float = 0.9
    r_ce: float = 0.018
    v_f0: float = 1.0
    r_f: float = 0.015
    e_sw: float = 7e-3        # E_on + E_off at (i_ref, u_ref)
    i_ref: float = 50.0
    u_ref: float = 300.0

    def __post_init__(self):
        for k, v in asdict(self).items():
            if v < 0.0:
                raise ValueError(f"{k} must be >= 0")
        if not (self.i_ref > 0.0 and self.u_ref > 0.0):
            raise ValueError("reference current and voltage must be positive")


@dataclass(frozen=True)
class InverterLosses:
    conduction: float
    switching: float
    events: int

    @property
    def total(self) -> float:
        return self.conduction + self.switching


@dataclass(frozen=True)
class LossBreakdown:
    op: str
    method: str
    P_el_dc: float
    P_el_ac: float
    P_mot_f1: float
    P_mot_fh: float
    P_mech: float
    P_friction: float
    P_windage: float
    P_inv: float
    P_mosfet: float
    P_bat: float

    def closure_ac(self) -> float:
        """Relative mismatch of the machine-side decomposition."""
        parts = self.P_mot_f1 + self.P_mot_fh + self.P_mech + self.P_friction + self.P_windage
        return abs(self.P_el_ac - parts) / abs(self.P_el_ac)

    def closure_dc(self) -> float:
        return abs(self.P_el_dc - self.P_el_ac - self.P_inv) / abs(self.P_el_dc)


def inverter_losses(i_phase, s_phase, u_dc, dt: float, igbt: IgbtParams | None = None,
                    s_before=None) -> InverterLosses:
    """Conduction and switching losses of a two-level bridge, averaged over the window.

    ``i_phase`` holds the phase current during each step (``(n, 3)``),
    ``s_phase`` the pole states in {-1, +1}, ``u_dc`` the dc-link voltage per
    step (scalar or ``(n,)``). A leg with ``s = +1`` conducts through the
    upper IGBT when current flows out of the leg, otherwise through the upper
    diode; mirrored for ``s = -1``. Every pole toggle costs one reference
    switching energy scaled by current and voltage. ``s_before`` are the
    pole states just before the window so that a toggle at its first step
    is counted.
    """
    if igbt is None:
        igbt = IgbtParams()
    i = np.asarray(i_phase, dtype=float)
    s = np.asarray(s_phase)
    if i.shape != s.shape or i.ndim != 2:
        raise ValueError("current and switch traces must both be (n, 3)")
    n = i.shape[0]
    if n == 0:
        return InverterLosses(0.0, 0.0, 0)
    u = np.broadcast_to(np.asarray(u_dc, dtype=float), (n,))
    t_win = n * dt
    a = np.abs(i)
    igbt_on = (s * i) > 0.0
    p_cond = np.where(igbt_on, igbt.v_ce0 * a + igbt.r_ce * i * i, igbt.v_f0 * a + igbt.r_f * i * i)
    conduction = float(np.sum(p_cond)) * dt / t_win

    prev = np.vstack([s[:1] if s_before is None else np.asarray(s_before).reshape(1, -1), s[:-1]])
    toggles = s != prev
    scale = igbt.e_sw / (igbt.i_ref * igbt.u_ref)
    switching = float(np.sum(a[toggles] * np.broadcast_to(u[:, None], s.shape)[toggles])) * scale / t_win
    return InverterLosses(conduction, switching, int(np.count_nonzero(toggles)))


@dataclass(frozen=True)
class HarmonicContent:
    """Per-phase mean squares, averaged over phases."""

    i_rms_sq: float
    i1_rms_sq: float
    u_harm_sq: float       # sum over n > 1 of U_n^2 (rms), per phase

    @classmethod
    def from_traces(cls, v_phase, i_phase, fs: float, f1: float) -> HarmonicContent:
        v = np.asarray(v_phase, dtype=float)
        i = np.asarray(i_phase, dtype=float)
        period_count(v.shape[0], fs, f1)
        irs, i1s, uhs = [], [], []
        for k in range(v.shape[1]):
            vk, ik = v[:, k], i[:, k]
            v1 = fundamental_phasor(vk, fs, f1)
            i1 = fundamental_phasor(ik, fs, f1)
            irs.append(float(np.mean(ik * ik)) - float(np.mean(ik)) ** 2)
            i1s.append(0.5 * abs(i1) ** 2)
            vm = float(np.mean(vk))
            uhs.append(max(0.0, float(np.mean(vk * vk)) - vm * vm - 0.5 * abs(v1) ** 2))
        return cls(float(np.mean(irs)), float(np.mean(i1s)), float(np.mean(uhs)))


def harmonic_iron_losses(u_harm_sq: float, k_e: float, phases: int = 3) -> float:
    return phases * k_e * u_harm_sq


def machine_additional_losses(content: HarmonicContent, params: MachineParams, k_e: float) -> float:
    """Harmonic copper loss plus the iron-loss overlay ``k_e * sum U_n^2``."""
    copper = 3.0 * params.r_s * max(content.i_rms_sq - content.i1_rms_sq, 0.0)
    return copper + harmonic_iron_losses(content.u_harm_sq, k_e)


def friction_power(omega_m: float, params: MachineParams) -> float:
    return params.k_friction * omega_m * omega_m


def windage_power(omega_m: float, params: MachineParams) -> float:
    return params.k_windage * omega_m ** 4


def fundamental_machine_losses(u1_rms: float, i1_rms: float, cos_phi: float, p_mech: float,
                               omega_m: float, params: MachineParams):
    """Return ``(P_mot_f1, P_friction, P_windage)``.

    The fundamental electrical power ``3 U_1 I_1 cos(phi)`` is what turns
    into shaft power; whatever is left after mechanical output, friction and
    windage is the fundamental loss (copper plus iron). Harmonic power is
    booked separately as P_mot_fh.
    """
    p_fric = friction_power(omega_m, params)
    p_wind = windage_power(omega_m, params)
    residual = 3.0 * u1_rms * i1_rms * cos_phi - p_mech - p_fric - p_wind
    if residual < 0.0:
        raise AccountingError(f"negative fundamental loss residual {residual:.6g} W")
    return residual, p_fric, p_wind


def efficiency_delta(p_saved: float, p_el_dc_pwm: float) -> float:
    if not p_el_dc_pwm > 0.0:
        raise ValueError("PWM input power must be positive")
    return p_saved / p_el_dc_pwm


def calibrate_k_e(p_ac_pwm: float, p_ac_opwm: float, u_harm_pwm: float, u_harm_opwm: float,
                  target_w: float, phases: int = 3) -> float:
    """k_e making the PWM minus OPWM P_el,ac gap equal ``target_w``.

    ``p_ac_*`` are the plant powers without the iron overlay.
    """
    dh = phases * (u_harm_pwm - u_harm_opwm)
    if not dh > 0.0:
        raise AccountingError("PWM must carry more harmonic voltage than OPWM to calibrate k_e")
    k_e = (target_w - (p_ac_pwm - p_ac_opwm)) / dh
    if k_e < 0.0:
        raise AccountingError(f"calibration target {target_w} W already exceeded without iron overlay")
    return k_e


# ---------------------------------------------------------------------------
# Tabulated measurements (W, V) for the six operating points.

TABLE3_METHODS = ("PWM", "OPWM", "OPP")
TABLE3_UDC = {
    "OP1": (325.0, 153.0, 108.0), "OP2": (319.0, 191.0, 135.0), "OP3": (314.0, 223.0, 157.0),
    "OP4": (309.0, 248.0, 173.0), "OP5": (303.0, 265.0, 189.0), "OP6": (297.0, 273.0, 202.0),
}
TABLE3_P_EL_DC = {
    "OP1": (876.0, 846.0, 840.0), "OP2": (1143.0, 1104.0, 1096.0), "OP3": (1374.0, 1346.0, 1329.0),
    "OP4": (1628.0, 1603.0, 1575.0), "OP5": (1891.0, 1859.0, 1831.0), "OP6": (2115.0, 2083.0, 2063.0),
}
TABLE3_P_EL_AC = {
    "OP1": (825.0, 810.0, 812.0), "OP2": (1090.0, 1063.0, 1066.0), "OP3": (1320.0, 1300.0, 1297.0),
    "OP4": (1570.0, 1550.0, 1540.0), "OP5": (1830.0, 1800.0, 1790.0), "OP6": (2050.0, 2020.0, 2013.0),
}


@dataclass(frozen=True)
class DeltaEta:
    op: str
    method: str
    motor: float
    motor_inv: float


def table3_delta_eta() -> list[DeltaEta]:
    """Efficiency gains of OPWM and OPP over PWM from the tabulated powers."""
    out = []
    for op, dc in TABLE3_P_EL_DC.items():
        ac = TABLE3_P_EL_AC[op]
        for j, m in enumerate(TABLE3_METHODS[1:], start=1):
            out.append(DeltaEta(op, m, efficiency_delta(ac[0] - ac[j], dc[0]),
                                efficiency_delta(dc[0] - dc[j], dc[0])))
    return out


def table3_derived_values() -> list[float]:
    """All 24 Delta-eta figures: 6 OPs x 2 methods x (motor, motor + inverter)."""
    return [v for d in table3_delta_eta() for v in (d.motor, d.motor_inv)]


REPORT_HEADER = ["op", "method", "P_el_dc", "P_el_ac", "P_inv", "P_mot_fh", "P_mosfet", "P_bat",
                 "delta_eta_motor", "delta_eta_motor_inv", "delta_eta_total"]


@dataclass(frozen=True)
class ReportRow:
    loss: LossBreakdown
    delta_eta_motor: float
    delta_eta_motor_inv: float
    delta_eta_motor_inv_mosfet: float
    delta_eta_total: float


def delta_eta_levels(pwm: LossBreakdown, other: LossBreakdown) -> tuple[float, float, float, float]:
    """Gains at four accumulation levels: motor, +inverter, +MOSFET, +battery."""
    base = pwm.P_el_dc
    d_motor = efficiency_delta(pwm.P_el_ac - other.P_el_ac, base)
    d_inv = efficiency_delta(pwm.P_el_dc - other.P_el_dc, base)
    d_mos = efficiency_delta((pwm.P_el_dc + pwm.P_mosfet) - (other.P_el_dc + other.P_mosfet), base)
    tot_pwm = pwm.P_el_dc + pwm.P_mosfet + pwm.P_bat
    tot_oth = other.P_el_dc + other.P_mosfet + other.P_bat
    d_tot = efficiency_delta(tot_pwm - tot_oth, base)
    return d_motor, d_inv, d_mos, d_tot


def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, float) and math.isnan(x):
        return "nan"
    return f"{float(x):.6f}"


def write_report_csv(rows: list[ReportRow], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REPORT_HEADER)
        for r in rows:
            b = r.loss
            w.writerow([_fmt(x) for x in (b.op, b.method, b.P_el_dc, b.P_el_ac, b.P_inv, b.P_mot_fh,
                                          b.P_mosfet, b.P_bat, r.delta_eta_motor, r.delta_eta_motor_inv,
                                          r.delta_eta_total)])


def write_table3_csv(path) -> None:
    """Efficiency gains recomputed from the tabulated measurements (fractions)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["op", "method", "delta_eta_motor", "delta_eta_motor_inv"])
        for d in table3_delta_eta():
            w.writerow([d.op, d.method, _fmt(d.motor), _fmt(d.motor_inv)])

"""Scenario library: steady operating points, the acceleration run, balancing, sweeps."""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from ..cmc import (
    BALANCING_HEADER,
    DepletionError,
    apply_selection,
    mosfet_switching_losses,
    select_units,
    step_cells,
    voltage_spread,
    write_balancing_csv,
)
from ..config import Config
from ..control import TELEMETRY_HEADER
from ..losses import (
    AccountingError,
    HarmonicContent,
    InverterLosses,
    LossBreakdown,
    ReportRow,
    calibrate_k_e,
    delta_eta_levels,
    fundamental_machine_losses,
    harmonic_iron_losses,
    inverter_losses,
    write_report_csv,
    write_table3_csv,
)
from ..machine import FundamentalPower, dq_to_abc, fundamental_electrical_power
from ..modulation import Variant
from .engine import Engine, Models, Recorder, ScenarioError, build_models

RPM = math.pi / 30.0
METHODS = ("PWM", "OPWM", "OPP")


@dataclass(frozen=True)
class OperatingPointSpec:
    name: str
    speed_rpm: float
    torque_nm: float
    u1_rms: float | None = None      # phase rms expected, if known
    i1_rms: float | None = None
    cos_phi: float | None = None

    def __post_init__(self):
        if not 0.0 <= self.speed_rpm <= 1503.0:
            raise ValueError("operating-point speed must lie in 0..1503 rpm")
        if self.torque_nm < 0.0:
            raise ValueError("only motoring operation is modelled")


def operating_points(cfg: Config) -> list[OperatingPointSpec]:
    """The six tabulated points; tabulated U_1 is converted to phase rms per ``machine.u1_reading``."""
    to_phase = 1.0 / math.sqrt(3.0) if cfg["machine.u1_reading"] == "line" else 1.0
    speeds = cfg["ops.speed_rpm"]
    cols = (cfg["ops.u1_rms"], cfg["ops.i1_rms"], cfg["ops.cos_phi"])
    if any(len(c) != len(speeds) for c in cols):
        raise ValueError("operating-point columns differ in length")
    return [OperatingPointSpec(f"OP{j + 1}", speeds[j], cfg["ops.torque_nm"], cols[0][j] * to_phase,
                               cols[1][j], cols[2][j]) for j in range(len(speeds))]


@dataclass(frozen=True)
class WindowMeasurement:
    """Load-independent results of one recorded window; losses derive from it."""

    op: str
    method: str
    t_window: float
    f1: float
    omega_mean: float
    torque: float
    p_ac_plant: float
    p_dc_ideal: float
    p_copper: float
    content: HarmonicContent
    fundamental: FundamentalPower
    inverter: InverterLosses
    p_mosfet: float
    p_bat: float
    i_dc: float
    u_dc_mean: float
    n_mean: float
    unit_events: int
    t_steady: float

    @property
    def p_mech(self) -> float:
        return self.torque * self.omega_mean

    def breakdown(self, k_e: float, params) -> LossBreakdown:
        iron = harmonic_iron_losses(self.content.u_harm_sq, k_e)
        c = self.content
        p_fh = 3.0 * params.r_s * max(c.i_rms_sq - c.i1_rms_sq, 0.0) + iron
        fp = self.fundamental
        if self.f1 > 0.0:
            p_f1, p_fric, p_wind = fundamental_machine_losses(fp.u1_rms, fp.i1_rms, fp.cos_phi, self.p_mech,
                                                              self.omega_mean, params)
        else:
            p_f1, p_fric, p_wind = self.p_copper, 0.0, 0.0
        p_ac = self.p_ac_plant + iron
        return LossBreakdown(self.op, self.method, self.p_dc_ideal + iron + self.inverter.total, p_ac,
                             p_f1, p_fh, self.p_mech, p_fric, p_wind, self.inverter.total, self.p_mosfet,
                             self.p_bat)


@dataclass
class OperatingPointResult:
    measurement: WindowMeasurement
    loss: LossBreakdown
    k_e: float
    traces: dict = field(default_factory=dict, repr=False)

    def __iter__(self):
        # allows ``loss, traces = run_operating_point(...)``
        return iter((self.loss, self.traces))

    @property
    def fundamental_iron_residual(self) -> float:
        """P_mot_f1 minus fundamental copper loss; the plant has no iron, so ideally 0."""
        fp = self.measurement.fundamental
        return self.loss.P_mot_f1 - 3.0 * self.models_r_s * fp.i1_rms ** 2

    models_r_s: float = 0.0


def _abc(x: np.ndarray) -> np.ndarray:
    a, b, c = dq_to_abc(x[0], x[1], x[3])
    return np.array([a, b, c])


def _periods_steady(periods, ref, sim) -> bool:
    """Speed within tolerance in each of the last ``steady_periods`` periods and
    their mean power within tolerance of the preceding block of equal length.

    Comparing block means rather than single periods separates drift from the
    stationary period-to-period scatter that cell-count dithering causes.
    """
    k = sim.steady_periods
    if len(periods) < 2 * k:
        return False
    last = periods[-k:]
    w = np.array([q[1] for q in last])
    if np.any(np.abs(w - ref) > sim.speed_tol * abs(ref)):
        return False
    p_now = float(np.mean([q[0] for q in last]))
    p_before = float(np.mean([q[0] for q in periods[-2 * k:-k]]))
    scale = max(abs(p_now), 1e-9)
    return abs(p_now - p_before) / scale < sim.energy_tol


def _drive_to_steady(eng: Engine, ref: float, load: float, balancing: bool) -> None:
    """Step until D23 holds: per-period speed and mean power settled.

    Period boundaries are located by linear interpolation of the block-end
    samples of rotor angle, energy and speed integral, so the per-period
    figures do not depend on where a boundary falls inside a block.
    """
    sim = eng.models.sim
    if ref == 0.0:
        while eng.t < sim.settle_s:
            eng.step_block(ref, load, balancing)
        return
    prev = (eng.acc[2], eng.acc[0], eng.acc[5], eng.t)
    start = prev
    periods = []
    while True:
        eng.step_block(ref, load, balancing)
        now = (eng.acc[2], eng.acc[0], eng.acc[5], eng.t)
        while now[0] - start[0] >= 2.0 * math.pi:
            b = start[0] + 2.0 * math.pi
            f = (b - prev[0]) / (now[0] - prev[0])
            edge = tuple(p + f * (q - p) for p, q in zip(prev, now))
            span = edge[3] - start[3]
            periods.append(((edge[1] - start[1]) / span, (edge[2] - start[2]) / span))
            start = edge
            prev = edge
            if eng.t >= sim.settle_s and _periods_steady(periods, ref, sim):
                return
        prev = now
        if eng.t > sim.max_time_s:
            raise ScenarioError(f"no steady state within {sim.max_time_s} s at {ref / RPM:.1f} rpm")


def _record_window(eng: Engine, ref: float, load: float, balancing: bool):
    sim = eng.models.sim
    we = eng.models.machine.pole_pairs * abs(ref)
    if ref == 0.0:
        n_blocks = int(round(0.05 / eng.t_block))
        steps = n_blocks * eng.spc
        limit = 0.0
    else:
        limit = eng.acc[2] + 2.0 * math.pi * sim.window_periods
        steps = int(2.0 * math.pi * sim.window_periods / we / eng.dt * 1.05) + 4 * eng.spc
        n_blocks = None
    rec = Recorder.allocate(steps)
    s_before = eng.sw.copy()
    acc0 = eng.acc.copy()
    blk0 = replace(eng.blk)
    i0 = _abc(eng.x)
    blocks = 0
    while True:
        if rec.n + eng.spc > steps:
            raise ScenarioError("window longer than expected; speed is not steady")
        eng.step_block(ref, load, balancing, rec, limit)
        blocks += 1
        if n_blocks is not None and blocks >= n_blocks:
            break
        if limit > 0.0 and eng.acc[2] >= limit:
            break
    return rec, s_before, acc0, blk0, i0


def _analyze(eng: Engine, op: OperatingPointSpec, method: str, rec: Recorder, s_before, acc0, blk0,
             t_steady: float) -> tuple[WindowMeasurement, dict]:
    models = eng.models
    dt = eng.dt
    n = rec.n
    T = n * dt
    W = models.sim.window_periods
    f1 = W / T if op.speed_rpm > 0.0 else 0.0
    fs = 1.0 / dt
    i_start = rec.i[:n]
    i_next = np.vstack([i_start[1:], _abc(eng.x)[None, :]])
    i_mid = 0.5 * (i_start + i_next)
    s = rec.s[:n].astype(float)
    u_dc = rec.u_dc[:n]
    v_phase = 0.5 * u_dc[:, None] * (s - s.mean(axis=1, keepdims=True))
    if f1 > 0.0:
        fund = fundamental_electrical_power(v_phase, i_mid, fs, f1)
        content = HarmonicContent.from_traces(v_phase, i_mid, fs, f1)
    else:
        fund = FundamentalPower(0.0, 0.0, 1.0, 0.0)
        content = HarmonicContent(float(np.mean(i_mid ** 2)), 0.0, 0.0)
    d = eng.acc - acc0
    b = eng.blk
    inv = inverter_losses(i_mid, rec.s[:n], u_dc, dt, models.igbt, s_before)
    i_dc = d[1] / T
    events = b.unit_events - blk0.unit_events
    v_cell = (b.v_cell_int - blk0.v_cell_int) / T
    p_mos = (b.q_sq_mos - blk0.q_sq_mos) / T + mosfet_switching_losses(i_dc, events, T, v_cell,
                                                                       models.mosfet_t_switch)
    meas = WindowMeasurement(
        op=op.name, method=method, t_window=T, f1=f1, omega_mean=d[5] / T, torque=op.torque_nm,
        p_ac_plant=d[0] / T, p_dc_ideal=(b.e_dc - blk0.e_dc) / T, p_copper=d[4] / T, content=content,
        fundamental=fund, inverter=inv, p_mosfet=p_mos, p_bat=(b.e_bat - blk0.e_bat) / T, i_dc=i_dc,
        u_dc_mean=(b.udc_int - blk0.udc_int) / T, n_mean=(b.n_int - blk0.n_int) / T, unit_events=events,
        t_steady=t_steady,
    )
    traces = {"t": blk0.t + dt * np.arange(n), "i_abc": i_start.copy(), "s_abc": rec.s[:n].copy(),
              "u_dc": u_dc.copy(), "omega_m": rec.w[:n].copy(), "v_phase": v_phase}
    return meas, traces


def measure_operating_point(op: OperatingPointSpec, method, cfg: Config, *, models: Models | None = None,
                            advance=None, keep_traces: bool = True) -> tuple[WindowMeasurement, dict]:
    """Drive to steady state and evaluate one integer-period window."""
    models = models or build_models(cfg)
    mod = models.method(method)
    sim = models.sim
    cmc = models.cmc(cfg["sim.soc_init"], cfg["sim.soc_spread_mv"], cfg["cmc.n_units"], sim.seed)
    cmc.n_max = sim.n_max
    eng = Engine(models, mod, cmc, sim.n_max, advance=advance)
    ref = op.speed_rpm * RPM
    balancing = sim.balancing
    eng.preload(ref, op.torque_nm, balancing)
    _drive_to_steady(eng, ref, op.torque_nm, balancing)
    t_steady = eng.t
    rec, s_before, acc0, blk0, _ = _record_window(eng, ref, op.torque_nm, balancing)
    meas, traces = _analyze(eng, op, mod.variant.value, rec, s_before, acc0, blk0, t_steady)
    return meas, (traces if keep_traces else {})


def run_operating_point(op: OperatingPointSpec, method, cfg: Config, *, k_e: float | None = None,
                        models: Models | None = None, advance=None, keep_traces: bool = True
                        ) -> OperatingPointResult:
    models = models or build_models(cfg)
    meas, traces = measure_operating_point(op, method, cfg, models=models, advance=advance,
                                           keep_traces=keep_traces)
    k = cfg["losses.k_e"] if k_e is None else k_e
    return OperatingPointResult(meas, meas.breakdown(k, models.machine), k, traces, models.machine.r_s)


# ---------------------------------------------------------------------------
# Acceleration with variable dc link


@dataclass
class DriveTrace:
    header: list
    rows: list

    def column(self, name: str) -> np.ndarray:
        j = self.header.index(name)
        return np.array([r[j] for r in self.rows], dtype=float)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(self.header)
            for r in self.rows:
                w.writerow([str(v) if isinstance(v, (int, np.integer)) else f"{v:.6f}" for v in r])


def run_drive_scenario(cfg: Config, *, advance=None) -> DriveTrace:
    """Speed ramp from standstill with OPWM and a reduced unit limit."""
    d = cfg.section("drive")
    models = build_models(cfg)
    mod = models.method("OPWM")
    n_max = d["n_max"]
    cmc = models.cmc(d["soc_init"], cfg["sim.soc_spread_mv"], cfg["cmc.n_units"], models.sim.seed)
    cmc.n_max = n_max
    eng = Engine(models, mod, cmc, n_max, advance=advance)
    balancing = models.sim.balancing
    load = d["load_nm"]
    eng.preload(0.0, load, balancing)
    w_end = d["speed_rpm"] * RPM
    ramp = d["ramp_s"]
    total = ramp + d["hold_s"]
    n_blocks = int(round(total / eng.t_block))
    rows = []
    every = max(1, d["log_every"])
    for j in range(n_blocks):
        t = eng.t
        ref = w_end * min(t / ramp, 1.0) if ramp > 0.0 else w_end
        eng.step_block(ref, load, balancing)
        if j % every == every - 1:
            c = eng.ctrl
            rows.append((eng.t, eng.x[2] / RPM, float(eng.x[0]), float(eng.x[1]), c.i_d_ref, c.i_q_ref,
                         eng.cmc.n, c.n_target, eng.cmc.u_dc, int(c.fw.active)))
    return DriveTrace(list(TELEMETRY_HEADER), rows)


# ---------------------------------------------------------------------------
# Balancing under constant-current discharge


@dataclass
class BalancingResult:
    rows: list
    enabled: bool
    spread_initial: float
    spread_final: float
    spread_final_loaded: float

    def checkpoints(self, every_s: float = 60.0) -> np.ndarray:
        """Relaxed spread at whole-minute marks, including t = 0."""
        t = np.array([r[0] for r in self.rows])
        s = np.array([r[4] for r in self.rows])
        marks = np.arange(0.0, t[-1] + 1e-9, every_s)
        idx = np.searchsorted(t, marks - 1e-9)
        return s[idx]

    def write_csv(self, path) -> None:
        write_balancing_csv(self.rows, path)


def run_balancing_scenario(cfg: Config, *, enabled: bool | None = None) -> BalancingResult:
    b = cfg.section("balance")
    models = build_models(cfg)
    on = b["enabled"] if enabled is None else enabled
    state = models.cmc(b["soc_mean"], b["spread_mv"], b["n_max"], cfg["sim.seed"])
    n = b["n"]
    if not 0 < n < b["n_max"]:
        raise ScenarioError("balancing needs 0 < N < N_max")
    i_dc = b["current_a"]
    step = b["reselect_s"]
    n_steps = int(round(b["duration_min"] * 60.0 / step))
    state.i_dc = i_dc
    spread0 = voltage_spread(state)
    rows = []
    for j in range(n_steps + 1):
        t = j * step
        apply_selection(state, select_units(state, n, on))
        rows.append((t, state.n, state.u_dc, i_dc, voltage_spread(state), float(state.soc.min()),
                     float(state.soc.max())))
        if j == n_steps:
            break
        try:
            step_cells(state, i_dc, step)
        except DepletionError as exc:
            raise ScenarioError(str(exc)) from exc
    return BalancingResult(rows, on, spread0, rows[-1][4], voltage_spread(state, loaded=True))


BALANCING_COLUMNS = BALANCING_HEADER


# ---------------------------------------------------------------------------
# Method comparison over the operating points


@dataclass
class Comparison:
    measurements: dict          # (op, method) -> WindowMeasurement
    k_e: float
    losses: dict                # (op, method) -> LossBreakdown
    rows: list                  # ReportRow, PWM rows carry zero gains
    levels: dict                # (op, method) -> 4-tuple of gains

    def write_report(self, path) -> None:
        """Loss rows to ``path`` plus the tabulated reference block next to it."""
        path = Path(path)
        write_report_csv(self.rows, path)
        write_table3_csv(path.with_name(path.stem + "_table3.csv"))

    def write_plot_data(self, path) -> None:
        """Whitespace columns for gnuplot: one line per OP, gains in percent."""
        ops = sorted({k[0] for k in self.levels}, key=lambda s: int(s[2:]) if s[2:].isdigit() else s)
        names = ("motor", "motor_inv", "motor_inv_mosfet", "total")
        methods = [m for m in METHODS[1:] if any(k[1] == m for k in self.levels)]
        with open(path, "w") as fh:
            head = ["op"] + [f"{m}_{n}" for m in methods for n in names]
            fh.write("# " + " ".join(head) + "\n")
            for j, op in enumerate(ops, 1):
                vals = [f"{100.0 * v:.6f}" for m in methods for v in self.levels[(op, m)]]
                fh.write(" ".join([str(j)] + vals) + "\n")


def _measure_job(args):
    op, method, cfg = args
    meas, _ = measure_operating_point(op, method, cfg, keep_traces=False)
    return meas


def compare_methods(cfg: Config, ops: list[OperatingPointSpec] | None = None, *, methods=METHODS,
                    k_e: float | None = None, workers: int = 1, progress=None) -> Comparison:
    """All methods at all points; PWM is the reference for every gain."""
    ops = ops if ops is not None else operating_points(cfg)
    methods = tuple(str(getattr(m, "value", m)).upper() for m in methods)
    if "PWM" not in methods:
        raise ValueError("the comparison needs PWM as reference")
    jobs = [(op, m, cfg) for op in ops for m in methods]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            meas_list = list(pool.map(_measure_job, jobs))
    else:
        meas_list = []
        for job in jobs:
            meas_list.append(_measure_job(job))
            if progress:
                progress(job[0].name, job[1])
    meas = {(j[0].name, j[1]): m for j, m in zip(jobs, meas_list)}
    params = build_models(cfg).machine

    if k_e is None:
        k_e = cfg["losses.k_e"]
        if k_e <= 0.0:
            if "OPWM" not in methods:
                raise ValueError("k_e calibration needs OPWM at the first point")
            first = ops[0].name
            a, b = meas[(first, "PWM")], meas[(first, "OPWM")]
            k_e = calibrate_k_e(a.p_ac_plant, b.p_ac_plant, a.content.u_harm_sq, b.content.u_harm_sq,
                                cfg["losses.k_e_target_w"])
    losses = {k: m.breakdown(k_e, params) for k, m in meas.items()}
    rows, levels = [], {}
    for op in ops:
        ref = losses[(op.name, "PWM")]
        for m in methods:
            lb = losses[(op.name, m)]
            lv = (0.0, 0.0, 0.0, 0.0) if m == "PWM" else delta_eta_levels(ref, lb)
            if m != "PWM":
                levels[(op.name, m)] = lv
            rows.append(ReportRow(lb, lv[0], lv[1], lv[2], lv[3]))
    return Comparison(meas, k_e, losses, rows, levels)


__all__ = [
    "METHODS",
    "RPM",
    "AccountingError",
    "BalancingResult",
    "Comparison",
    "DriveTrace",
    "OperatingPointResult",
    "OperatingPointSpec",
    "Variant",
    "WindowMeasurement",
    "compare_methods",
    "measure_operating_point",
    "operating_points",
    "run_balancing_scenario",
    "run_drive_scenario",
    "run_operating_point",
]

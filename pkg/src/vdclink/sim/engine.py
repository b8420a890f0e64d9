"""Fixed-step engine: controller, cell-count update and plant kernel wired together.

Time advances in control blocks of one carrier period. Each block runs the
current controller once, updates the connected-unit count every
``n_divider`` blocks, then hands ``spc`` integration steps to the kernel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .. import kernel
from ..cmc import CmcState, OcvCurve, apply_selection, rate_limit_n, select_units, spread_soc, step_cells
from ..config import Config
from ..control import ControlGains, ControllerState, control_step, steady_state_controller, track_applied_voltage
from ..losses import IgbtParams
from ..machine import MachineParams, MachineState, drag_torque
from ..modulation import ModulationMethod, Variant, cells_required, required_dc_voltage
from ..opp import solve_angles


class ScenarioError(RuntimeError):
    """Scenario could not complete (no steady state, depleted cell, ...)."""


@dataclass(frozen=True)
class SimConfig:
    dt: float = 1e-6
    carrier_frequency: float = 10e3
    n_max: int = 90
    n_update_hz: float = 5000.0
    v_cell_filter_s: float = 0.01
    balancing: bool = True
    window_periods: int = 5
    steady_periods: int = 5
    speed_tol: float = 1e-3
    energy_tol: float = 1e-3
    settle_s: float = 0.05
    max_time_s: float = 4.0
    seed: int = 0

    def __post_init__(self):
        if not self.dt > 0.0:
            raise ValueError("dt must be positive")
        if self.dt > 1.0 / (20.0 * self.carrier_frequency) * (1 + 1e-9):
            raise ValueError("dt must resolve the carrier with at least 20 steps")
        spc = 1.0 / (self.carrier_frequency * self.dt)
        if abs(spc - round(spc)) > 1e-6 or round(spc) % 2:
            raise ValueError("carrier period must be an even number of steps")
        if self.window_periods < 5:
            raise ValueError("window must span at least 5 fundamental periods")
        nd = self.carrier_frequency / self.n_update_hz
        if self.n_update_hz > self.carrier_frequency or abs(nd - round(nd)) > 1e-9:
            raise ValueError("cell-count update rate must divide the carrier frequency")

    @property
    def steps_per_carrier(self) -> int:
        return int(round(1.0 / (self.carrier_frequency * self.dt)))

    @property
    def n_divider(self) -> int:
        return int(round(self.carrier_frequency / self.n_update_hz))


@dataclass(frozen=True)
class Models:
    """Everything that parameterizes one engine besides the modulation method."""

    sim: SimConfig
    machine: MachineParams
    gains: ControlGains
    igbt: IgbtParams
    ocv: OcvCurve
    n_units: int = 100
    n_parallel: int = 2
    r_cell: float = 0.04
    capacity_ah: float = 5.2
    mosfet_r_on: float = 0.85e-3
    mosfet_t_switch: float = 100e-9
    opwm_ratio: float = 0.9
    pattern_k: int = 9
    pattern_orders: tuple[int, ...] = (5, 7, 11, 13, 17, 19, 23, 25, 29)
    gains_opp: ControlGains | None = None
    opp_ripple_filter: bool = True
    opp_noise_shaping: bool = True

    def gains_for(self, method: ModulationMethod) -> ControlGains:
        if method.variant is Variant.OPP and self.gains_opp is not None:
            return self.gains_opp
        return self.gains

    def method(self, name) -> ModulationMethod:
        v = Variant(str(getattr(name, "value", name)).upper())
        fc = self.sim.carrier_frequency
        if v is Variant.PWM:
            return ModulationMethod.pwm(fc, self.opwm_ratio)
        if v is Variant.OPWM:
            return ModulationMethod.opwm(fc, self.opwm_ratio)
        return ModulationMethod.opp(solve_angles(self.pattern_k, self.pattern_orders, seed=self.sim.seed))

    def cmc(self, soc_mean: float, spread_mv: float, n_max: int, seed: int) -> CmcState:
        state = CmcState.uniform(self.n_units, soc_mean, n_max, self.n_parallel, self.ocv)
        state.capacity[:] = self.capacity_ah * self.n_parallel
        state.r_dc[:] = self.r_cell / self.n_parallel
        if spread_mv > 0.0:
            state.soc = spread_soc(self.n_units, soc_mean, spread_mv, self.ocv, seed)
        return state


def build_models(cfg: Config, **sim_overrides) -> Models:
    m = cfg.section("machine")
    machine = MachineParams(m["r_s"], m["l_d"], m["l_q"], m["psi_pm"], m["pole_pairs"], m["inertia"],
                            m["k_friction"], m["k_windage"])
    s = cfg.section("sim")
    c = cfg.section("cmc")
    sim = SimConfig(
        dt=s["dt"], carrier_frequency=cfg["modulation.carrier_hz"], n_max=s["n_max"],
        n_update_hz=c["n_update_hz"], v_cell_filter_s=c["v_cell_filter_s"], balancing=c["balancing"],
        window_periods=s["window_periods"], steady_periods=s["steady_periods"], speed_tol=s["speed_tol"],
        energy_tol=s["energy_tol"], settle_s=s["settle_s"], max_time_s=s["max_time_s"], seed=s["seed"],
    )
    if sim_overrides:
        sim = SimConfig(**{**sim.__dict__, **sim_overrides})
    k = cfg.section("control")
    common = {"dt_current": 1.0 / sim.carrier_frequency, "speed_divider": k["speed_divider"], "kp_fw": k["kp_fw"],
              "ki_fw": k["ki_fw"], "i_max": k["i_max"], "i_d_min": k["i_d_min"], "fw_hysteresis": k["fw_hysteresis"],
              "n_hysteresis": k["n_hysteresis_cells"], "demand_filter_s": k["demand_filter_s"]}
    gains = ControlGains.from_machine(machine, k["current_bw_hz"], k["speed_bw_hz"], **common)
    gains_opp = ControlGains.from_machine(machine, k["opp_current_bw_hz"], k["opp_speed_bw_hz"], **common)
    g = cfg.section("igbt")
    igbt = IgbtParams(g["v_ce0"], g["r_ce"], g["v_f0"], g["r_f"], g["e_sw"], g["i_ref"], g["u_ref"])
    return Models(
        sim=sim, machine=machine, gains=gains, igbt=igbt, ocv=OcvCurve(c["ocv_soc"], c["ocv_volts"]),
        n_units=c["n_units"], n_parallel=c["n_parallel"], r_cell=c["r_cell"], capacity_ah=c["capacity_ah"],
        mosfet_r_on=c["mosfet_r_on"], mosfet_t_switch=c["mosfet_t_switch"],
        opwm_ratio=cfg["modulation.opwm_ratio"], pattern_k=cfg["modulation.pattern_k"],
        pattern_orders=tuple(cfg["modulation.pattern_orders"]), gains_opp=gains_opp,
        opp_ripple_filter=k["opp_ripple_filter"], opp_noise_shaping=k["opp_noise_shaping"],
    )


@dataclass
class Accumulators:
    """Block-level integrals kept next to the kernel's per-step ones."""

    t: float = 0.0
    e_dc: float = 0.0          # int U_dc i_dc dt
    q_sq_mos: float = 0.0      # int n_units r_on i_dc^2 dt
    e_bat: float = 0.0         # int sum_connected r i_dc^2 dt
    unit_events: int = 0       # unit insert/bypass changes
    n_int: float = 0.0         # int N dt
    udc_int: float = 0.0       # int U_dc dt
    v_cell_int: float = 0.0    # int mean connected terminal voltage dt


@dataclass
class Recorder:
    i: np.ndarray
    s: np.ndarray
    w: np.ndarray
    u_dc: np.ndarray
    n: int = 0

    @classmethod
    def allocate(cls, steps: int) -> Recorder:
        return cls(np.zeros((steps, 3)), np.zeros((steps, 3), dtype=np.int8), np.zeros(steps), np.zeros(steps))


_EMPTY_I = np.zeros((0, 3))
_EMPTY_S = np.zeros((0, 3), dtype=np.int8)
_EMPTY_W = np.zeros(0)


@dataclass
class Engine:
    models: Models
    method: ModulationMethod
    cmc: CmcState
    n_max: int
    advance: object = None
    x: np.ndarray = field(default_factory=lambda: np.zeros(4))
    ctrl: ControllerState = field(default_factory=ControllerState)
    sw: np.ndarray = field(default_factory=lambda: np.full(3, -1, dtype=np.int64))
    acc: np.ndarray = field(default_factory=lambda: np.zeros(6))
    blk: Accumulators = field(default_factory=Accumulators)
    v_cell: float = 0.0
    k: int = 0
    block: int = 0
    ripple_filter: bool | None = None
    noise_shaping: bool | None = None

    def __post_init__(self):
        if self.advance is None:
            self.advance = kernel.advance
        sim = self.models.sim
        self.spc = sim.steps_per_carrier
        self.dt = sim.dt
        self.t_block = self.spc * self.dt
        self.params = self.models.machine.as_array()
        self.mode = 1 if self.method.variant is Variant.OPP else 0
        self.gains = self.models.gains_for(self.method)
        if self.ripple_filter is None:
            self.ripple_filter = self.models.opp_ripple_filter
        if self.noise_shaping is None:
            self.noise_shaping = self.models.opp_noise_shaping
        pat = self.method.pattern
        self.angles = np.asarray(pat.angles if pat is not None else (), dtype=float)
        if self.n_max > self.cmc.n_max:
            raise ValueError("engine N_max exceeds the converter limit")
        if self.v_cell <= 0.0:
            self.v_cell = float(np.mean(self.cmc.v_ocv))
        self._hist = np.zeros((2048, 2))
        self._residual = 0.0

    # -- state helpers -------------------------------------------------
    @property
    def t(self) -> float:
        return self.blk.t

    @property
    def omega(self) -> float:
        return float(self.x[2])

    def measured(self) -> MachineState:
        return MachineState(float(self.x[0]), float(self.x[1]), float(self.x[3]), float(self.x[2]))

    def _controller_input(self) -> MachineState:
        """Currents seen by the controller.

        Under OPP the low-order pattern harmonics appear in dq as ripple at
        multiples of six times the fundamental; a moving average over one
        sixth of a period removes it exactly in steady state.
        """
        st = self.measured()
        if self.mode != 1 or not self.ripple_filter:
            return st
        j = self.block % self._hist.shape[0]
        self._hist[j] = (st.i_d, st.i_q)
        we = abs(self.models.machine.pole_pairs * st.omega_m)
        m = 1 if we <= 0.0 else int(round(2.0 * math.pi / (6.0 * we) / self.t_block))
        m = max(1, min(m, self.block + 1, self._hist.shape[0]))
        idx = (j - np.arange(m)) % self._hist.shape[0]
        i_d, i_q = self._hist[idx].mean(axis=0)
        return MachineState(float(i_d), float(i_q), st.gamma, st.omega_m)

    def _connected_voltage(self) -> float:
        n = self.cmc.n
        if n == 0:
            return float(np.mean(self.cmc.v_ocv))
        return self.cmc.u_dc / n

    def preload(self, omega_m: float, load: float, balancing: bool) -> None:
        """Start at the steady state of ``omega_m`` and ``load`` with i_d = 0."""
        mp = self.models.machine
        i_q = (load + float(drag_torque(omega_m, mp))) / mp.torque_constant
        self.x[:] = (0.0, i_q, omega_m, 0.0)
        self.ctrl = steady_state_controller(mp, self.gains, i_q)
        we = mp.pole_pairs * omega_m
        v_d = -we * mp.l_q * i_q
        v_q = mp.r_s * i_q + we * mp.psi_pm
        _, _, demand = required_dc_voltage(v_d, v_q, self.method)
        v_avg = float(np.mean(self.cmc.v_ocv))
        if self.method.variant is Variant.PWM:
            n = self.n_max
        else:
            # level from the loaded cell voltage the controller will see
            p_dc = 1.5 * v_q * i_q
            n = cells_required(demand, v_avg, self.n_max)
            for _ in range(3):
                i_dc = p_dc / (n * v_avg) if n > 0 else 0.0
                n = cells_required(demand, v_avg - self.cmc.r_dc.mean() * i_dc, self.n_max)
        apply_selection(self.cmc, select_units(self.cmc, n, balancing and n < self.n_max))
        u_dc = self.cmc.u_dc
        self.cmc.i_dc = 1.5 * v_q * i_q / u_dc if u_dc > 0.0 else 0.0
        self.v_cell = self._connected_voltage()
        self.ctrl.n_target = n
        self._hist[:] = (0.0, i_q)
        self.ctrl.u_dc_demand = demand
        self.ctrl.u_dc_demand_filt = demand

    # -- stepping -------------------------------------------------------
    def step_block(self, speed_ref: float, load: float, balancing: bool,
                   rec: Recorder | None = None, angle_limit: float = 0.0) -> int:
        models = self.models
        cmc = self.cmc
        out = control_step(self.ctrl, self._controller_input(), speed_ref, self.method, models.machine, self.gains,
                           cmc.u_dc, self.v_cell, self.n_max)
        if self.block % models.sim.n_divider == 0:
            n_target = out.n_target
            if self.mode == 1 and self.noise_shaping and not self.ctrl.fw.active:
                # error feedback: the mean of N * v_cell follows the demand
                d_eff = out.u_dc_demand + self._residual
                n_target = cells_required(max(d_eff, 0.0), self.v_cell, self.n_max)
                self.ctrl.n_target = n_target
            n_new = rate_limit_n(cmc.n, n_target)
            if self.mode == 1:
                v = self.v_cell
                self._residual = min(max(d_eff - n_new * v, -2.0 * v), 2.0 * v) \
                    if self.noise_shaping and not self.ctrl.fw.active else 0.0
            active = select_units(cmc, n_new, balancing and not self.ctrl.fw.active)
            self.blk.unit_events += apply_selection(cmc, active)
        u_dc = cmc.u_dc
        u1 = math.hypot(out.v_d, out.v_q)
        theta = math.atan2(out.v_q, out.v_d)
        if self.mode == 0:
            m_a = min(2.0 * u1 / u_dc, 1.0) if u_dc > 0.0 else 0.0
            applied = 0.5 * m_a * u_dc
            if u1 > applied:
                # clipped after a unit dropped out; keep the integrators honest
                track_applied_voltage(self.ctrl, out, out.v_d * applied / u1, out.v_q * applied / u1)
        else:
            m_a = 0.0
        q0 = self.acc[1]
        if rec is None:
            ri, rs, rw, off = _EMPTY_I, _EMPTY_S, _EMPTY_W, 0
        else:
            ri, rs, rw, off = rec.i, rec.s, rec.w, rec.n
        done = self.advance(self.x, self.params, self.mode, m_a, theta, u_dc, load, self.dt, self.k, self.spc,
                            self.angles, self.spc, angle_limit, self.sw, self.acc, ri, rs, rw, off)
        if rec is not None:
            rec.u_dc[off:off + done] = u_dc
            rec.n += done
        if done == 0:
            return 0
        span = done * self.dt
        i_dc = (self.acc[1] - q0) / span
        b = self.blk
        b.e_dc += u_dc * i_dc * span
        b.q_sq_mos += cmc.n_units * models.mosfet_r_on * i_dc * i_dc * span
        b.e_bat += float(np.sum(cmc.r_dc[cmc.connected])) * i_dc * i_dc * span
        n_now = cmc.n
        b.n_int += n_now * span
        b.udc_int += u_dc * span
        try:
            step_cells(cmc, i_dc, span)
        except Exception as exc:
            raise ScenarioError(str(exc)) from exc
        cmc.i_dc = i_dc
        v_meas = self._connected_voltage()
        b.v_cell_int += v_meas * span
        self.v_cell += (span / models.sim.v_cell_filter_s) * (v_meas - self.v_cell)
        b.t += span
        self.k += done
        self.block += 1
        return done

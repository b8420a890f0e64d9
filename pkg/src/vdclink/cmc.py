"""Cascaded multilevel converter made of switchable battery units.

Each unit is a half bridge plus ``n_parallel`` cells. Connected units add
their terminal voltage to the dc link; bypassed units rest. State is kept
as parallel numpy arrays so the engine can update all units at once.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

CELL_R_DC = 0.040          # ohm, single cell
CELL_CAPACITY_AH = 5.2
MOSFET_R_ON = 0.85e-3      # ohm
MOSFET_T_SWITCH = 100e-9   # s, combined rise + fall


class DepletionError(RuntimeError):
    pass


@dataclass(frozen=True)
class OcvCurve:
    """Monotone piecewise-linear open-circuit voltage over state of charge."""

    soc: tuple[float, ...] = (0.0, 0.5, 1.0)
    volts: tuple[float, ...] = (3.0, 3.6, 4.2)

    def __post_init__(self):
        if len(self.soc) != len(self.volts) or len(self.soc) < 2:
            raise ValueError("OCV table needs matching soc/volt columns of length >= 2")
        if np.any(np.diff(self.soc) <= 0) or np.any(np.diff(self.volts) <= 0):
            raise ValueError("OCV table must be strictly increasing")

    def __call__(self, soc):
        return np.interp(soc, self.soc, self.volts)

    def inverse(self, volts):
        return np.interp(volts, self.volts, self.soc)


@dataclass(frozen=True)
class CellUnit:
    soc: float
    capacity: float
    r_dc: float
    v_ocv: float
    connected: bool


@dataclass
class CmcState:
    soc: np.ndarray
    capacity: np.ndarray          # Ah per unit
    r_dc: np.ndarray              # ohm per unit
    connected: np.ndarray         # bool
    n_max: int
    ocv: OcvCurve = field(default_factory=OcvCurve)
    i_dc: float = 0.0

    @classmethod
    def uniform(cls, n_units: int = 100, soc=0.5, n_max: int = 90, n_parallel: int = 2,
                ocv: OcvCurve | None = None) -> CmcState:
        if not 0 <= n_max <= n_units:
            raise ValueError("need 0 <= N_max <= number of units")
        soc_arr = np.broadcast_to(np.asarray(soc, dtype=float), (n_units,)).copy()
        if np.any(soc_arr < 0.0) or np.any(soc_arr > 1.0):
            raise ValueError("state of charge must lie in [0, 1]")
        return cls(
            soc=soc_arr,
            capacity=np.full(n_units, CELL_CAPACITY_AH * n_parallel),
            r_dc=np.full(n_units, CELL_R_DC / n_parallel),
            connected=np.zeros(n_units, dtype=bool),
            n_max=n_max,
            ocv=ocv or OcvCurve(),
        )

    @property
    def n_units(self) -> int:
        return self.soc.size

    @property
    def n(self) -> int:
        return int(np.count_nonzero(self.connected))

    @property
    def v_ocv(self) -> np.ndarray:
        return self.ocv(self.soc)

    def terminal_voltages(self, i_dc: float | None = None) -> np.ndarray:
        """Unit terminal voltages; bypassed units carry no current."""
        i = self.i_dc if i_dc is None else i_dc
        return self.v_ocv - np.where(self.connected, i * self.r_dc, 0.0)

    @property
    def u_dc(self) -> float:
        return float(np.sum((self.v_ocv - self.i_dc * self.r_dc)[self.connected]))

    def unit(self, k: int) -> CellUnit:
        return CellUnit(float(self.soc[k]), float(self.capacity[k]), float(self.r_dc[k]),
                        float(self.v_ocv[k]), bool(self.connected[k]))

    def copy(self) -> CmcState:
        return CmcState(self.soc.copy(), self.capacity.copy(), self.r_dc.copy(),
                        self.connected.copy(), self.n_max, self.ocv, self.i_dc)


def rate_limit_n(n_current: int, n_target: int) -> int:
    return n_current + max(-1, min(1, n_target - n_current))


def select_units(state: CmcState, n: int, balancing_enabled: bool) -> np.ndarray:
    """Indices of the ``n`` units to connect, sorted ascending.

    With balancing the strongest units carry the load. Units are ranked by
    their relaxed (no-load) terminal voltage; ranking on the loaded voltage
    would make every connected unit look one IR drop weaker than it is.
    Ties go to the lower index.
    """
    if n > state.n_max:
        raise ValueError(f"N={n} exceeds N_max={state.n_max}")
    if n <= 0:
        return np.zeros(0, dtype=int)
    if balancing_enabled and n < state.n_max:
        # stable sort on -v keeps lower indices first among equals
        order = np.argsort(-state.v_ocv, kind="stable")
        return np.sort(order[:n])
    return np.arange(n)


def apply_selection(state: CmcState, active: np.ndarray) -> int:
    """Connect exactly ``active``; returns how many units changed state."""
    new = np.zeros(state.n_units, dtype=bool)
    new[active] = True
    changed = int(np.count_nonzero(new != state.connected))
    state.connected = new
    return changed


def step_cells(state: CmcState, i_dc: float, dt: float) -> CmcState:
    """Coulomb counting on connected units, in place."""
    if not dt > 0.0:
        raise ValueError("dt must be positive")
    if i_dc == 0.0:
        return state
    dsoc = i_dc * dt / (3600.0 * state.capacity)
    new_soc = np.where(state.connected, state.soc - dsoc, state.soc)
    if np.any(new_soc < 0.0):
        raise DepletionError(f"unit {int(np.argmin(new_soc))} would be depleted")
    state.soc = np.minimum(new_soc, 1.0)
    return state


def mosfet_losses(i_dc: float, switch_events: int, dt: float, v_cell: float = 3.6,
                  n_units: int = 100, r_on: float = MOSFET_R_ON, t_switch: float = MOSFET_T_SWITCH) -> float:
    """Conduction of one MOSFET per unit plus transition losses of the events in ``dt``."""
    if not dt > 0.0:
        raise ValueError("dt must be positive")
    conduction = n_units * i_dc * i_dc * r_on
    return conduction + mosfet_switching_losses(i_dc, switch_events, dt, v_cell, t_switch)


def mosfet_switching_losses(i_dc: float, switch_events: int, dt: float, v_cell: float = 3.6,
                            t_switch: float = MOSFET_T_SWITCH) -> float:
    """Linear-transition energy ``v i t_sw / 2`` per unit insert/bypass, averaged over ``dt``."""
    if not dt > 0.0:
        raise ValueError("dt must be positive")
    return 0.5 * v_cell * abs(i_dc) * t_switch * switch_events / dt


def battery_losses(n: int, i_dc: float, n_parallel: int = 2, r_cell: float = CELL_R_DC) -> float:
    if n < 0:
        raise ValueError("N cannot be negative")
    return n * i_dc * i_dc * r_cell / n_parallel


def voltage_spread(state_or_volts, loaded: bool = False) -> float:
    """Sample standard deviation of unit voltages in mV.

    By default the relaxed (open-circuit) voltages are used; ``loaded=True``
    uses terminal voltages under the present dc current.
    """
    if isinstance(state_or_volts, CmcState):
        v = state_or_volts.terminal_voltages() if loaded else state_or_volts.v_ocv
    else:
        v = np.asarray(state_or_volts, dtype=float)
    if v.size < 2:
        raise ValueError("spread needs at least two units")
    return float(np.std(v, ddof=1) * 1e3)


def spread_soc(n_units: int, mean_soc: float, spread_mv: float, ocv: OcvCurve, seed: int) -> np.ndarray:
    """SoC vector whose OCV standard deviation is exactly ``spread_mv``.

    Draws are standardized then scaled in the voltage domain, so the curve
    must be linear over the covered range for exactness; the result is
    checked and refined by a few fixed-point passes otherwise.
    """
    rng = np.random.default_rng(seed)
    z = rng.standard_normal(n_units)
    z = (z - z.mean()) / z.std(ddof=1)
    v_mean = float(ocv(mean_soc))
    scale = spread_mv * 1e-3
    for _ in range(20):
        soc = ocv.inverse(v_mean + scale * z)
        got = voltage_spread(ocv(soc))
        if abs(got - spread_mv) < 1e-9 * spread_mv:
            break
        scale *= spread_mv / got
    if np.any(soc <= 0.0) or np.any(soc >= 1.0):
        raise ValueError("requested spread does not fit inside the OCV table")
    return soc


BALANCING_HEADER = ["t_s", "N", "U_dc", "I_dc", "spread_mV", "soc_min", "soc_max"]


def write_balancing_csv(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(BALANCING_HEADER)
        for r in rows:
            w.writerow([_fmt(x) for x in r])


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.6f}"

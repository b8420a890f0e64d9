"""Modulation back-ends and the dc-link voltage law.

Three methods are supported: conventional carrier PWM on a fixed dc link,
OPWM (carrier PWM at a fixed modulation index with the dc link varied) and
OPP (a fixed optimal pulse pattern with the dc link varied).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .opp import SwitchingPattern, synthesize_waveform

TWO_PI_3 = 2.0 * math.pi / 3.0
OPWM_UTILIZATION = 0.9


class ModulationError(ValueError):
    pass


class OvermodulationError(ModulationError):
    """Voltage command exceeds what the dc link can deliver."""


class Variant(str, enum.Enum):
    PWM = "PWM"
    OPWM = "OPWM"
    OPP = "OPP"


@dataclass(frozen=True)
class VoltageCommand:
    u_d: float
    u_q: float
    gamma: float = 0.0

    @property
    def amplitude(self) -> float:
        return math.hypot(self.u_d, self.u_q)

    @property
    def theta(self) -> float:
        return math.atan2(self.u_q, self.u_d)

    @property
    def alpha(self) -> float:
        return self.theta + self.gamma


@dataclass(frozen=True)
class ModulationMethod:
    variant: Variant
    utilization_ratio: float
    carrier_frequency: float = 10e3
    pattern: SwitchingPattern | None = None

    @classmethod
    def pwm(cls, carrier_frequency: float = 10e3, utilization_ratio: float = OPWM_UTILIZATION):
        # PWM pins N at N_max; the ratio here only sizes the voltage demand
        # that triggers field weakening.
        return cls(Variant.PWM, utilization_ratio, carrier_frequency)

    @classmethod
    def opwm(cls, carrier_frequency: float = 10e3, utilization_ratio: float = OPWM_UTILIZATION):
        return cls(Variant.OPWM, utilization_ratio, carrier_frequency)

    @classmethod
    def opp(cls, pattern: SwitchingPattern):
        return cls(Variant.OPP, pattern.u1_gen, 0.0, pattern)

    @property
    def variable_dc_link(self) -> bool:
        return self.variant is not Variant.PWM


def required_dc_voltage(u_d: float, u_q: float, method: ModulationMethod | float):
    """Return ``(U_1, theta, U_dc_demand)`` for a dq voltage command."""
    u_r = method if isinstance(method, (int, float)) else method.utilization_ratio
    if not u_r > 0.0:
        raise ModulationError(f"utilization ratio must be positive, got {u_r}")
    u1 = math.hypot(u_d, u_q)
    return u1, math.atan2(u_q, u_d), 2.0 * u1 / u_r


def cells_required(u_dc_demand: float, v_cell_avg: float, n_max: int) -> int:
    if u_dc_demand < 0.0:
        raise ModulationError("dc-link demand cannot be negative")
    if not v_cell_avg > 0.0:
        raise ModulationError("average cell voltage must be positive")
    if n_max < 1:
        raise ModulationError("N_max must be at least 1")
    # guard against 61.99999999 -> 62 style float noise
    ratio = u_dc_demand / v_cell_avg
    n = math.ceil(ratio - 1e-12)
    return max(0, min(n, n_max))


def triangle_carrier(t: float, carrier_frequency: float) -> float:
    """Unit triangle: -1 at t = 0 (trough), +1 half a period later."""
    phase = math.fmod(t * carrier_frequency, 1.0)
    if phase < 0.0:
        phase += 1.0
    return 1.0 - 4.0 * abs(phase - 0.5)


def carrier_pwm_states(command: VoltageCommand, u_dc: float, carrier_frequency: float, t: float):
    """Naturally compared pole states (+1/-1) of the three legs at time ``t``.

    References are sinusoids of amplitude ``U_1`` at ``alpha``, ``alpha - 2pi/3``
    and ``alpha + 2pi/3``; the time-domain engine holds ``alpha`` over each half
    carrier period (regular sampling) rather than calling this per step.
    """
    if not u_dc > 0.0:
        raise ModulationError("dc-link voltage must be positive")
    m_a = 2.0 * command.amplitude / u_dc
    if m_a > 1.0 + 1e-12:
        raise OvermodulationError(f"modulation index {m_a:.4f} exceeds 1")
    c = triangle_carrier(t, carrier_frequency)
    alpha = command.alpha
    refs = (m_a * math.cos(alpha), m_a * math.cos(alpha - TWO_PI_3), m_a * math.cos(alpha + TWO_PI_3))
    return tuple(1 if r > c else -1 for r in refs)


def opp_states(pattern: SwitchingPattern, alpha: float):
    """Pole states that put the fundamental of phase a at its peak for ``alpha = 0``."""
    base = alpha + 0.5 * math.pi
    return (
        synthesize_waveform(pattern, base),
        synthesize_waveform(pattern, base - TWO_PI_3),
        synthesize_waveform(pattern, base + TWO_PI_3),
    )

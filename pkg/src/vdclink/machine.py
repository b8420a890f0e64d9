"""Nonsalient PMSM in the rotor dq frame plus the mechanical shaft."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .spectrum import WindowingError, fundamental_phasor

TWO_PI_3 = 2.0 * math.pi / 3.0


@dataclass(frozen=True)
class MachineParams:
    r_s: float = 0.8          # ohm
    l_d: float = 0.012        # H
    l_q: float = 0.012        # H
    psi_pm: float = 0.4235    # Wb
    pole_pairs: int = 2
    inertia: float = 0.02     # kg m^2
    k_friction: float = 2.43e-3   # N m s/rad
    k_windage: float = 6.58e-8    # N m s^3/rad^3

    def __post_init__(self):
        for name in ("r_s", "l_d", "l_q", "psi_pm", "inertia"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be positive")
        if self.pole_pairs < 1:
            raise ValueError("pole_pairs must be >= 1")
        if self.k_friction < 0.0 or self.k_windage < 0.0:
            raise ValueError("friction and windage coefficients must be >= 0")

    @property
    def torque_constant(self) -> float:
        """Torque per ampere of q current at i_d = 0."""
        return 1.5 * self.pole_pairs * self.psi_pm

    def as_array(self) -> np.ndarray:
        """Packed layout shared with the time-stepping kernels."""
        return np.array([self.r_s, self.l_d, self.l_q, self.psi_pm, float(self.pole_pairs),
                         self.inertia, self.k_friction, self.k_windage])

    def with_(self, **kw) -> MachineParams:
        return replace(self, **kw)


@dataclass
class MachineState:
    i_d: float = 0.0
    i_q: float = 0.0
    gamma: float = 0.0
    omega_m: float = 0.0
    load_torque: float = 0.0

    def electrical_speed(self, params: MachineParams) -> float:
        return params.pole_pairs * self.omega_m


@dataclass(frozen=True)
class Derivatives:
    di_d: float
    di_q: float
    domega_m: float
    dgamma: float
    torque: float


def electromagnetic_torque(i_d: float, i_q: float, params: MachineParams) -> float:
    return 1.5 * params.pole_pairs * (params.psi_pm * i_q + (params.l_d - params.l_q) * i_d * i_q)


def drag_torque(omega_m, params: MachineParams):
    """Friction (linear) plus windage (cubic) torque."""
    return params.k_friction * omega_m + params.k_windage * omega_m ** 3


def machine_derivatives(state: MachineState, params: MachineParams, v_d: float, v_q: float) -> Derivatives:
    p = params.pole_pairs
    w = state.omega_m
    di_d = (v_d - params.r_s * state.i_d + p * w * params.l_q * state.i_q) / params.l_d
    di_q = (v_q - params.r_s * state.i_q - p * w * (params.l_d * state.i_d + params.psi_pm)) / params.l_q
    te = electromagnetic_torque(state.i_d, state.i_q, params)
    dw = (te - state.load_torque - drag_torque(w, params)) / params.inertia
    return Derivatives(di_d, di_q, dw, p * w, te)


def abc_to_dq(v_a, v_b, v_c, gamma):
    """Amplitude-invariant Park transform; zero sequence is discarded."""
    c0, c1, c2 = np.cos(gamma), np.cos(gamma - TWO_PI_3), np.cos(gamma + TWO_PI_3)
    s0, s1, s2 = np.sin(gamma), np.sin(gamma - TWO_PI_3), np.sin(gamma + TWO_PI_3)
    d = (2.0 / 3.0) * (v_a * c0 + v_b * c1 + v_c * c2)
    q = -(2.0 / 3.0) * (v_a * s0 + v_b * s1 + v_c * s2)
    return d, q


def dq_to_abc(v_d, v_q, gamma):
    a = v_d * np.cos(gamma) - v_q * np.sin(gamma)
    b = v_d * np.cos(gamma - TWO_PI_3) - v_q * np.sin(gamma - TWO_PI_3)
    c = v_d * np.cos(gamma + TWO_PI_3) - v_q * np.sin(gamma + TWO_PI_3)
    return a, b, c


@dataclass(frozen=True)
class FundamentalPower:
    u1_rms: float
    i1_rms: float
    cos_phi: float
    p_f1: float


def fundamental_electrical_power(v_phase: np.ndarray, i_phase: np.ndarray, fs: float, f1: float) -> FundamentalPower:
    """Per-phase fundamental rms values averaged over the three phases.

    ``v_phase`` and ``i_phase`` are ``(n, 3)`` arrays spanning an integer
    number of fundamental periods.
    """
    v = np.atleast_2d(np.asarray(v_phase, dtype=float))
    i = np.atleast_2d(np.asarray(i_phase, dtype=float))
    if v.shape != i.shape:
        raise ValueError("voltage and current traces differ in shape")
    if v.shape[0] < v.shape[1]:
        v, i = v.T, i.T
    u1, i1, p = [], [], 0.0
    for k in range(v.shape[1]):
        vp = fundamental_phasor(v[:, k], fs, f1)
        ip = fundamental_phasor(i[:, k], fs, f1)
        u1.append(abs(vp) / math.sqrt(2.0))
        i1.append(abs(ip) / math.sqrt(2.0))
        p += 0.5 * (vp * ip.conjugate()).real
    u1_rms, i1_rms = float(np.mean(u1)), float(np.mean(i1))
    denom = v.shape[1] * u1_rms * i1_rms
    cos_phi = p / denom if denom > 0.0 else 1.0
    return FundamentalPower(u1_rms, i1_rms, float(cos_phi), float(p))


__all__ = [
    "Derivatives",
    "FundamentalPower",
    "MachineParams",
    "MachineState",
    "WindowingError",
    "abc_to_dq",
    "dq_to_abc",
    "drag_torque",
    "electromagnetic_torque",
    "fundamental_electrical_power",
    "machine_derivatives",
]

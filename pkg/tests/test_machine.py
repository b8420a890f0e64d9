import math
from dataclasses import replace

import numpy as np
import pytest

from vdclink.machine import (
    MachineParams,
    MachineState,
    abc_to_dq,
    dq_to_abc,
    drag_torque,
    electromagnetic_torque,
    fundamental_electrical_power,
    machine_derivatives,
)
from vdclink.spectrum import WindowingError

from . import oracles as O

P = MachineParams()


def _rk4(state: MachineState, v_d, v_q, dt, params=P):
    def f(s):
        d = machine_derivatives(s, params, v_d, v_q)
        return np.array([d.di_d, d.di_q, d.domega_m, d.dgamma])

    y = np.array([state.i_d, state.i_q, state.omega_m, state.gamma])

    def mk(v):
        return MachineState(v[0], v[1], v[3], v[2], state.load_torque)

    k1 = f(mk(y))
    k2 = f(mk(y + 0.5 * dt * k1))
    k3 = f(mk(y + 0.5 * dt * k2))
    k4 = f(mk(y + dt * k3))
    y = y + dt * (k1 + 2 * k2 + 2 * k3 + k4) / 6
    return mk(y)


def test_params_validation():
    with pytest.raises(ValueError):
        MachineParams(r_s=0.0)
    with pytest.raises(ValueError):
        MachineParams(pole_pairs=0)
    with pytest.raises(ValueError):
        MachineParams(k_windage=-1.0)


def test_equilibrium_all_zero():
    d = machine_derivatives(MachineState(), P, 0.0, 0.0)
    assert (d.di_d, d.di_q, d.domega_m, d.dgamma, d.torque) == (0.0, 0.0, 0.0, 0.0, 0.0)


def test_torque_calibration_identity():
    assert electromagnetic_torque(0.0, 9.05, P) == pytest.approx(O.TORQUE_905, rel=1e-12)
    assert electromagnetic_torque(0.0, 9.05, P) == pytest.approx(11.5, abs=0.01)


def test_torque_linear_in_iq_nonsalient():
    t = [electromagnetic_torque(0.0, iq, P) for iq in (1.0, 2.0, 3.0)]
    assert t[1] - t[0] == pytest.approx(t[2] - t[1])
    assert electromagnetic_torque(-3.0, 2.0, P) == pytest.approx(t[1])


def test_locked_rotor_steady_currents():
    # huge inertia keeps the rotor still; steady state is v / R per axis
    params = replace(P, inertia=1e12)
    s = MachineState()
    for _ in range(4000):
        s = _rk4(s, 4.0, -2.0, 1e-4, params)
    assert s.i_d == pytest.approx(4.0 / P.r_s, rel=1e-5)
    assert s.i_q == pytest.approx(-2.0 / P.r_s, rel=1e-5)
    assert abs(s.omega_m) < 1e-9


def test_drag_strictly_increasing():
    w = np.linspace(0.0, 200.0, 101)
    assert np.all(np.diff(drag_torque(w, P)) > 0)


def test_park_aligned_set():
    g = 0.3
    a, b, c = dq_to_abc(10.0, 0.0, g)
    d, q = abc_to_dq(a, b, c, g)
    assert d == pytest.approx(10.0)
    assert q == pytest.approx(0.0, abs=1e-12)


def test_park_round_trip_random():
    rng = np.random.default_rng(1)
    for _ in range(100):
        vd, vq, g = rng.normal(size=3) * (100, 100, 10)
        d, q = abc_to_dq(*dq_to_abc(vd, vq, g), g)
        assert d == pytest.approx(vd, abs=1e-12 * 100)
        assert q == pytest.approx(vq, abs=1e-12 * 100)


def test_park_rejects_zero_sequence():
    d, q = abc_to_dq(1.0, 1.0, 1.0, 0.7)
    assert abs(d) < 1e-15 and abs(q) < 1e-15


def _three_phase(n, amp, phi=0.0, extra=None):
    t = np.arange(n) / n
    out = np.empty((n, 3))
    for k in range(3):
        ph = 2 * math.pi * t - 2 * math.pi * k / 3
        out[:, k] = amp * np.cos(ph + phi)
        if extra:
            order, a5 = extra
            out[:, k] += a5 * np.cos(order * ph)
    return out


def test_fundamental_power_pure_sine():
    v = _three_phase(1000, 100.0)
    i = _three_phase(1000, 10.0)
    fp = fundamental_electrical_power(v, i, fs=1000.0, f1=1.0)
    assert fp.u1_rms == pytest.approx(100 / math.sqrt(2))
    assert fp.i1_rms == pytest.approx(10 / math.sqrt(2))
    assert fp.cos_phi == pytest.approx(1.0)
    assert fp.p_f1 == pytest.approx(3 * 100 * 10 / 2)


def test_fundamental_power_ignores_fifth():
    v0, i0 = _three_phase(2000, 100.0), _three_phase(2000, 10.0, phi=-0.4)
    a = fundamental_electrical_power(v0, i0, 2000.0, 1.0)
    b = fundamental_electrical_power(_three_phase(2000, 100.0, extra=(5, 20.0)),
                                     _three_phase(2000, 10.0, phi=-0.4, extra=(5, 3.0)), 2000.0, 1.0)
    assert b.u1_rms == pytest.approx(a.u1_rms, rel=1e-12)
    assert b.i1_rms == pytest.approx(a.i1_rms, rel=1e-12)
    assert b.cos_phi == pytest.approx(math.cos(0.4), rel=1e-12)


def test_fundamental_power_non_integer_window():
    v = _three_phase(1000, 1.0)
    with pytest.raises(WindowingError):
        fundamental_electrical_power(v[:950], v[:950], 1000.0, 1.0)


def test_power_balance_over_one_period():
    # electrical input = copper + d(magnetic energy) + mechanical conversion
    s = MachineState(i_d=0.0, i_q=5.0, gamma=0.0, omega_m=50.0, load_torque=6.0)
    dt = 1e-6
    we = P.pole_pairs * s.omega_m
    n = int(round(2 * math.pi / we / dt))
    vd, vq = -10.0, 0.8 * 5 + we * P.psi_pm + 15.0
    e_in = e_cu = e_mech = 0.0
    w_mag0 = 0.75 * (P.l_d * s.i_d ** 2 + P.l_q * s.i_q ** 2)
    for _ in range(n):
        d0 = machine_derivatives(s, P, vd, vq)
        p0 = (1.5 * (vd * s.i_d + vq * s.i_q), 1.5 * P.r_s * (s.i_d ** 2 + s.i_q ** 2), d0.torque * s.omega_m)
        s = _rk4(s, vd, vq, dt)
        d1 = machine_derivatives(s, P, vd, vq)
        p1 = (1.5 * (vd * s.i_d + vq * s.i_q), 1.5 * P.r_s * (s.i_d ** 2 + s.i_q ** 2), d1.torque * s.omega_m)
        e_in += 0.5 * dt * (p0[0] + p1[0])
        e_cu += 0.5 * dt * (p0[1] + p1[1])
        e_mech += 0.5 * dt * (p0[2] + p1[2])
    w_mag1 = 0.75 * (P.l_d * s.i_d ** 2 + P.l_q * s.i_q ** 2)
    assert e_in == pytest.approx(e_cu + (w_mag1 - w_mag0) + e_mech, rel=1e-3)


def test_op1_current_from_steady_state_torque():
    w = 549 * 2 * math.pi / 60
    iq = (11.5 + float(drag_torque(w, P))) / P.torque_constant
    assert iq / math.sqrt(2) == pytest.approx(6.4, rel=0.10)

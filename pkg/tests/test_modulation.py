import math

import numpy as np
import pytest

from vdclink.modulation import (
    ModulationError,
    ModulationMethod,
    OvermodulationError,
    Variant,
    VoltageCommand,
    carrier_pwm_states,
    cells_required,
    opp_states,
    required_dc_voltage,
    triangle_carrier,
)
from vdclink.opp import solve_angles
from vdclink.spectrum import fft_spectrum

from . import oracles as O


@pytest.fixture(scope="module")
def opp_method():
    return ModulationMethod.opp(solve_angles(9, O.TABLE1_ORDERS))


def test_voltage_command_fields():
    c = VoltageCommand(60.0, 80.0, gamma=0.5)
    assert c.amplitude == pytest.approx(100.0)
    assert c.theta == pytest.approx(math.atan2(80.0, 60.0))
    assert c.alpha == pytest.approx(c.theta + 0.5)


def test_required_dc_voltage_opwm():
    u1, theta, udc = required_dc_voltage(60.0, 80.0, ModulationMethod.opwm())
    assert u1 == pytest.approx(100.0)
    assert theta == pytest.approx(0.92730, abs=1e-5)
    assert udc == pytest.approx(O.UDC_OPWM_345, abs=1e-9)
    assert udc == pytest.approx(222.22, abs=5e-3)


def test_required_dc_voltage_opp_table_ratio():
    _, _, udc = required_dc_voltage(60.0, 80.0, 1.1597)
    assert udc == pytest.approx(O.UDC_OPP_345, abs=1e-9)
    assert udc == pytest.approx(172.46, abs=5e-3)


def test_required_dc_voltage_axis_aligned():
    _, theta, udc = required_dc_voltage(50.0, 0.0, 0.9)
    assert theta == 0.0
    assert udc == pytest.approx(2 * 50.0 / 0.9)


@pytest.mark.parametrize("u_r", [0.0, -0.5])
def test_required_dc_voltage_rejects_bad_ratio(u_r):
    with pytest.raises(ModulationError):
        required_dc_voltage(1.0, 1.0, u_r)


def test_method_invariants(opp_method):
    assert ModulationMethod.opwm().utilization_ratio == 0.9
    assert opp_method.utilization_ratio == pytest.approx(opp_method.pattern.u1_gen)
    assert opp_method.variant is Variant.OPP
    assert not ModulationMethod.pwm().variable_dc_link
    assert ModulationMethod.opwm().variable_dc_link


def test_udc_ordering(opp_method):
    pwm_udc = 90 * 3.6
    _, _, opwm = required_dc_voltage(60.0, 80.0, ModulationMethod.opwm())
    _, _, opp = required_dc_voltage(60.0, 80.0, opp_method)
    assert opp < opwm < pwm_udc


@pytest.mark.parametrize("demand, expected", [(O.UDC_OPWM_345, O.CELLS_222), (400.0, 90), (0.0, 0)])
def test_cells_required(demand, expected):
    assert cells_required(demand, 3.6, 90) == expected


def test_cells_required_exact_multiple_not_rounded_up():
    assert cells_required(62 * 3.6, 3.6, 90) == 62


@pytest.mark.parametrize("args", [(-1.0, 3.6, 90), (10.0, 0.0, 90), (10.0, 3.6, 0)])
def test_cells_required_errors(args):
    with pytest.raises(ModulationError):
        cells_required(*args)


def test_triangle_carrier_shape():
    assert triangle_carrier(0.0, 1e4) == pytest.approx(-1.0)
    assert triangle_carrier(0.5e-4, 1e4) == pytest.approx(1.0)
    assert triangle_carrier(0.25e-4, 1e4) == pytest.approx(0.0, abs=1e-9)


def _pwm_pole_voltage(m_a, u_dc=300.0, fc=1e4, f1=50.0, per_carrier=200):
    n = int(fc / f1) * per_carrier
    t = (np.arange(n) + 0.5) / (fc * per_carrier)   # cell centres avoid carrier ties
    u1 = 0.5 * m_a * u_dc
    s = np.array([carrier_pwm_states(VoltageCommand(u1, 0.0, gamma=2 * math.pi * f1 * tk), u_dc, fc, tk)[0]
                  for tk in t])
    return 0.5 * u_dc * s, n * f1


def test_pwm_zero_command_has_zero_mean():
    v, _ = _pwm_pole_voltage(0.0)
    assert abs(np.mean(v)) < 1e-9


def test_pwm_fundamental_matches_command():
    v, fs = _pwm_pole_voltage(0.9)
    fund = fft_spectrum(v, fs, 50.0, n_max=3)[1].amplitude
    assert fund == pytest.approx(0.9 * 300.0 / 2, rel=0.01)


def test_pwm_overmodulation_raises():
    with pytest.raises(OvermodulationError):
        carrier_pwm_states(VoltageCommand(0.505 * 300.0, 0.0), 300.0, 1e4, 0.0)


def test_pwm_rejects_nonpositive_link():
    with pytest.raises(ModulationError):
        carrier_pwm_states(VoltageCommand(1.0, 0.0), 0.0, 1e4, 0.0)


def _opp_phase_a(method, n):
    alphas = 2 * math.pi * np.arange(n) / n
    return np.array([opp_states(method.pattern, a)[0] for a in alphas], dtype=float), alphas


def test_opp_toggles_per_period(opp_method):
    s, _ = _opp_phase_a(opp_method, 2 ** 14)
    assert int(np.count_nonzero(np.diff(np.concatenate([s, s[:1]])))) == 38


def test_opp_fundamental_and_alignment(opp_method):
    n = 2 ** 16
    s, _ = _opp_phase_a(opp_method, n)
    line = fft_spectrum(0.5 * 200.0 * s, fs=n, f1=1.0, n_max=3)[1]
    assert line.amplitude == pytest.approx(1.1597 * 200.0 / 2, rel=1e-3)
    # fundamental of phase a peaks at alpha = 0
    assert abs(line.phase) < 2 * math.pi / n * 2


def test_opp_half_wave_negation(opp_method):
    for a in np.linspace(0.01, 6.2, 50):
        s0 = opp_states(opp_method.pattern, a)
        s1 = opp_states(opp_method.pattern, a + math.pi)
        assert s1 == tuple(-x for x in s0)


def test_opp_phases_are_shifted_copies(opp_method):
    a = 0.77
    _, sb, sc = opp_states(opp_method.pattern, a)
    assert sb == opp_states(opp_method.pattern, a - 2 * math.pi / 3)[0]
    assert sc == opp_states(opp_method.pattern, a + 2 * math.pi / 3)[0]

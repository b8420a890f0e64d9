import csv

import numpy as np
import pytest

from vdclink.cli import EXIT_FAILURE, EXIT_OK, EXIT_USAGE, main, table3_lines

from . import oracles as O

ORDERS = ",".join(str(n) for n in O.TABLE1_ORDERS)


def _read(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_solve_angles_table1(tmp_path, capsys):
    assert main(["solve-angles", "9", ORDERS, "--out", str(tmp_path)]) == EXIT_OK
    rows = _read(tmp_path / "angles.csv")
    assert rows[0] == ["k", "alpha_rad"]
    got = np.array([float(r[1]) for r in rows[1:]])
    assert np.max(np.abs(got - np.array(O.TABLE1_ANGLES))) < 2e-3
    out = capsys.readouterr().out
    assert "u1_gen = 1.1596" in out
    spec = _read(tmp_path / "spectrum.csv")
    assert spec[0] == ["order", "amplitude"]
    assert float(spec[1][1]) == pytest.approx(O.TABLE1_U1, abs=1e-3)


def test_solve_angles_single(tmp_path):
    assert main(["solve-angles", "1", "3", "--out", str(tmp_path)]) == EXIT_OK
    rows = _read(tmp_path / "angles.csv")
    assert float(rows[1][1]) == pytest.approx(O.K1_ANGLE, abs=1e-12)


@pytest.mark.parametrize("orders", ["2", "5,5", "x", "1"])
def test_solve_angles_bad_orders(tmp_path, orders):
    assert main(["solve-angles", "1", orders, "--out", str(tmp_path)]) == EXIT_USAGE


def test_solve_angles_too_few_orders(tmp_path):
    assert main(["solve-angles", "3", "5", "--out", str(tmp_path)]) == EXIT_USAGE


def test_solve_angles_no_solution(tmp_path):
    # no valid pattern with a live fundamental eliminates both the 3rd and the 5th
    assert main(["solve-angles", "2", "3,5", "--out", str(tmp_path)]) == EXIT_FAILURE


def test_unknown_command_and_missing_config(tmp_path):
    assert main(["frobnicate"]) == EXIT_USAGE
    assert main([]) == EXIT_USAGE
    assert main(["table3", "--config", str(tmp_path / "nope.cfg")]) == EXIT_USAGE


def test_bad_overrides(tmp_path):
    assert main(["table3", "--set", "no.such_key=1"]) == EXIT_USAGE
    assert main(["table3", "--set", "sim.dt"]) == EXIT_USAGE
    assert main(["table3", "--set", "sim.dt=fast"]) == EXIT_USAGE


def test_config_file_is_read(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("sim.seed = 7\n")
    assert main(["table3", "--config", str(cfg), "--out", str(tmp_path / "o")]) == EXIT_OK
    cfg.write_text("sim.seed = seven\n")
    assert main(["table3", "--config", str(cfg)]) == EXIT_USAGE


def test_table3_output(tmp_path, capsys):
    assert main(["table3", "--out", str(tmp_path)]) == EXIT_OK
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines == table3_lines()
    d = {tuple(r[:2]): (float(r[2]), float(r[3])) for r in csv.reader(lines[1:])}
    assert len(d) == 12
    assert d["OP1", "OPWM"] == (1.71, 3.42)
    assert d["OP6", "OPP"] == (1.75, 2.46)
    assert (tmp_path / "table3.csv").read_text().splitlines() == lines


def test_out_dir_not_writable(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["solve-angles", "1", "3", "--out", str(blocker / "sub")]) == EXIT_USAGE


def test_run_op_and_determinism(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert main(["run-op", "OP1", "--method", "opp", "--traces", "--seed", "3", "--out", str(d)]) == EXIT_OK
    for name in ("op_OP1_OPP.csv", "op_OP1_OPP_traces.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    rows = _read(a / "op_OP1_OPP.csv")
    assert rows[0][:2] == ["op", "method"] and rows[1][:2] == ["OP1", "OPP"]


def test_run_op_unknown_point(tmp_path):
    assert main(["run-op", "OP9", "--out", str(tmp_path)]) == EXIT_USAGE


def test_run_op_scenario_error_exit(tmp_path):
    args = ["run-op", "1", "--set", "sim.max_time_s=0.06", "--out", str(tmp_path)]
    assert main(args) == EXIT_FAILURE


def test_balance_outputs(tmp_path):
    assert main(["balance", "--out", str(tmp_path)]) == EXIT_OK
    assert main(["balance", "--disabled", "--out", str(tmp_path)]) == EXIT_OK
    on = _read(tmp_path / "balancing.csv")
    off = _read(tmp_path / "balancing_disabled.csv")
    assert on[0] == off[0] == ["t_s", "N", "U_dc", "I_dc", "spread_mV", "soc_min", "soc_max"]
    assert float(on[-1][4]) < float(off[-1][4])


def test_run_scenario_balance_matches_balance(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["run-scenario", "balance", "--out", str(a)]) == EXIT_OK
    assert main(["balance", "--out", str(b)]) == EXIT_OK
    assert (a / "balancing.csv").read_bytes() == (b / "balancing.csv").read_bytes()


def test_balance_depletion_exit(tmp_path):
    args = ["balance", "--set", "balance.current_a=200", "--set", "balance.soc_mean=0.3", "--out", str(tmp_path)]
    assert main(args) == EXIT_FAILURE

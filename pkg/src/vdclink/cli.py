"""Command-line front end.

Exit codes: 0 success, 1 bad arguments or configuration, 2 solver or
scenario failure.
"""

from __future__ import annotations

import argparse
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

EXIT_OK, EXIT_USAGE, EXIT_FAILURE = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


@dataclass(frozen=True)
class RunManifest:
    """What one invocation runs and where it writes."""

    command: str
    out_dir: Path
    config_path: Path | None = None
    overrides: tuple[str, ...] = field(default_factory=tuple)
    seed: int | None = None

    @classmethod
    def from_args(cls, args) -> RunManifest:
        return cls(args.command, args.out, args.config, tuple(args.overrides), args.seed)

    def config(self):
        from .config import Config, ConfigError

        try:
            cfg = Config.load(self.config_path) if self.config_path else Config()
            cfg = cfg.with_overrides(self.overrides)
            if self.seed is not None:
                cfg = cfg.with_values({"sim.seed": self.seed})
        except ConfigError as exc:
            raise UsageError(str(exc)) from None
        return cfg

    def output_dir(self) -> Path:
        """Create the output directory and make sure it is writable."""
        path = self.out_dir
        try:
            path.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise UsageError(f"cannot create output directory {path}: {exc.strerror}") from None
        probe = path / ".vdclink-write-test"
        try:
            probe.write_text("")
            probe.unlink()
        except OSError:
            raise UsageError(f"output directory {path} is not writable") from None
        return path


def _orders(text: str) -> list[int]:
    try:
        return [int(s) for s in text.replace(" ", "").split(",") if s]
    except ValueError:
        raise argparse.ArgumentTypeError(f"orders must be a comma list of integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="key = value configuration file")
    common.add_argument("--out", type=Path, default=Path("."), help="output directory (default: .)")
    common.add_argument("--seed", type=int, help="override sim.seed")
    common.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                        help="override one configuration key (repeatable)")

    p = _Parser(prog="vdclink", description="Variable dc-link traction drive toolkit")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("solve-angles", parents=[common], help="solve a quarter-wave switching pattern")
    s.add_argument("k", type=int, help="number of switching angles per quarter period")
    s.add_argument("orders", type=_orders, help="comma list of eliminated harmonic orders")
    s.add_argument("--n-max", type=int, default=99, help="highest order written to the spectrum CSV")

    s = sub.add_parser("run-op", parents=[common], help="one operating point with one method")
    s.add_argument("op", help="OP1..OP6 or a 1-based index")
    s.add_argument("--method", default="OPWM", choices=["PWM", "OPWM", "OPP", "pwm", "opwm", "opp"])
    s.add_argument("--traces", action="store_true", help="also write the recorded window as CSV")

    s = sub.add_parser("run-scenario", parents=[common], help="run a named scenario")
    s.add_argument("name", choices=["drive", "balance"])

    s = sub.add_parser("balance", parents=[common], help="cell balancing under constant discharge")
    s.add_argument("--disabled", action="store_true", help="control run with fixed unit selection")

    s = sub.add_parser("compare", parents=[common], help="PWM vs OPWM vs OPP at all operating points")
    s.add_argument("--workers", type=int, default=1, help="parallel processes for the sweep")
    s.add_argument("--calibrate", action="store_true", help="recalibrate k_e on the first point")

    sub.add_parser("table3", parents=[common], help="efficiency gains from the tabulated measurements")
    return p


def _load_config(args):
    return RunManifest.from_args(args).config()


def _out_dir(path: Path) -> Path:
    return RunManifest("", path).output_dir()


def cmd_solve_angles(args) -> int:
    from .opp import PatternDomainError, SolverError, solve_angles, spectrum, write_pattern_csv, write_spectrum_csv

    cfg = _load_config(args)
    out = _out_dir(args.out)
    try:
        pattern = solve_angles(args.k, args.orders, seed=cfg["sim.seed"])
    except PatternDomainError as exc:
        raise UsageError(str(exc)) from None
    except SolverError as exc:
        print(f"solver failed: {exc} (best residual {exc.best_residual:.3e})", file=sys.stderr)
        return EXIT_FAILURE
    write_pattern_csv(pattern, out / "angles.csv")
    write_spectrum_csv(spectrum(pattern, args.n_max), out / "spectrum.csv")
    res = max((abs(v) for v in pattern.residuals().values()), default=0.0)
    print(f"u1_gen = {pattern.u1_gen:.7f}")
    print(f"max residual = {res:.3e}")
    return EXIT_OK if res < 1e-10 else EXIT_FAILURE


def _pick_op(cfg, name: str):
    from .sim import operating_points

    ops = operating_points(cfg)
    key = name.upper()
    for j, op in enumerate(ops, 1):
        if key in (op.name, str(j)):
            return op
    raise UsageError(f"unknown operating point {name!r}; choose OP1..OP{len(ops)}")


def cmd_run_op(args) -> int:
    import numpy as np

    from .losses import ReportRow, write_report_csv
    from .sim import run_operating_point

    cfg = _load_config(args)
    out = _out_dir(args.out)
    op = _pick_op(cfg, args.op)
    method = args.method.upper()
    res = run_operating_point(op, method, cfg, keep_traces=args.traces)
    stem = f"op_{op.name}_{method}"
    write_report_csv([ReportRow(res.loss, 0.0, 0.0, 0.0, 0.0)], out / f"{stem}.csv")
    if args.traces:
        tr = res.traces
        cols = np.column_stack([tr["t"], tr["i_abc"], tr["s_abc"], tr["u_dc"], tr["omega_m"]])
        np.savetxt(out / f"{stem}_traces.csv", cols, delimiter=",", fmt="%.9g", comments="",
                   header="t_s,i_a,i_b,i_c,s_a,s_b,s_c,U_dc,omega_m")
    m = res.measurement
    fp = m.fundamental
    print(f"{op.name} {method}: U_dc={m.u_dc_mean:.2f} V N={m.n_mean:.2f} U_1={fp.u1_rms:.2f} V "
          f"I_1={fp.i1_rms:.3f} A cos_phi={fp.cos_phi:.4f}")
    b = res.loss
    print(f"P_el_dc={b.P_el_dc:.2f} W P_el_ac={b.P_el_ac:.2f} W P_inv={b.P_inv:.2f} W "
          f"P_mot_fh={b.P_mot_fh:.3f} W P_mosfet={b.P_mosfet:.3f} W P_bat={b.P_bat:.2f} W")
    return EXIT_OK


def cmd_drive(args) -> int:
    from .sim import run_drive_scenario

    cfg = _load_config(args)
    out = _out_dir(args.out)
    trace = run_drive_scenario(cfg)
    trace.write_csv(out / "drive.csv")
    print(f"wrote {len(trace.rows)} rows to {out / 'drive.csv'}")
    return EXIT_OK


def cmd_balance(args) -> int:
    from .sim import run_balancing_scenario

    cfg = _load_config(args)
    out = _out_dir(args.out)
    enabled = not getattr(args, "disabled", False) and cfg["balance.enabled"]
    res = run_balancing_scenario(cfg, enabled=enabled)
    name = "balancing.csv" if enabled else "balancing_disabled.csv"
    res.write_csv(out / name)
    print(f"spread {res.spread_initial:.1f} mV -> {res.spread_final:.1f} mV "
          f"(loaded {res.spread_final_loaded:.1f} mV), balancing {'on' if enabled else 'off'}")
    return EXIT_OK


def cmd_run_scenario(args) -> int:
    return cmd_drive(args) if args.name == "drive" else cmd_balance(args)


def cmd_compare(args) -> int:
    from .sim import compare_methods

    cfg = _load_config(args)
    out = _out_dir(args.out)
    if args.calibrate:
        cfg = cfg.with_values({"losses.k_e": 0.0})
    if args.workers < 1:
        raise UsageError("--workers must be >= 1")
    cmp = compare_methods(cfg, workers=args.workers)
    cmp.write_report(out / "report.csv")
    cmp.write_plot_data(out / "delta_eta.dat")
    print(f"k_e = {cmp.k_e:.9g} W/V^2; {len(cmp.rows)} rows written to {out / 'report.csv'}")
    return EXIT_OK


def table3_lines() -> list[str]:
    from .losses import table3_delta_eta

    lines = ["op,method,delta_eta_motor_pct,delta_eta_motor_inv_pct"]
    for d in table3_delta_eta():
        lines.append(f"{d.op},{d.method},{100.0 * d.motor:.2f},{100.0 * d.motor_inv:.2f}")
    return lines


def cmd_table3(args) -> int:
    _load_config(args)  # rejects bad --config/--set even though the table needs none
    t0 = time.perf_counter()
    lines = table3_lines()
    if args.out is not None and args.out != Path("."):
        out = _out_dir(args.out)
        (out / "table3.csv").write_text("\n".join(lines) + "\n")
    print("\n".join(lines))
    print(f"# computed in {1e3 * (time.perf_counter() - t0):.2f} ms", file=sys.stderr)
    return EXIT_OK


COMMANDS = {
    "solve-angles": cmd_solve_angles,
    "run-op": cmd_run_op,
    "run-scenario": cmd_run_scenario,
    "balance": cmd_balance,
    "compare": cmd_compare,
    "table3": cmd_table3,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"vdclink: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except Exception as exc:
        from .losses import AccountingError
        from .opp import SolverError
        from .sim import ScenarioError

        if isinstance(exc, (ScenarioError, SolverError, AccountingError)):
            print(f"vdclink: {type(exc).__name__}: {exc}", file=sys.stderr)
            return EXIT_FAILURE
        raise


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

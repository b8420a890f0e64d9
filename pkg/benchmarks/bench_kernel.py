"""Compare the compiled and pure-Python time-stepping kernels.

Runs the raw ``advance`` call on identical inputs for PWM and OPP modes,
reports nanoseconds per step and the speed-up, and checks that both
backends end in the same state.

    python3 benchmarks/bench_kernel.py [--steps N] [--repeat R]
"""

from __future__ import annotations

import argparse
import sys
import time

import numpy as np

from vdclink.kernel import backends
from vdclink.machine import MachineParams
from vdclink.opp import nine_pulse_table, solve_angles


def _inputs(mode: int, steps: int):
    p = MachineParams().as_array()
    x = np.array([0.0, 9.05, 57.5, 0.3])   # about 549 rpm, rated torque
    angles = np.asarray(solve_angles(9, nine_pulse_table().eliminated_orders).angles if mode else (), float)
    return {"x": x, "p": p, "mode": mode, "m_a": 0.25, "theta": 1.45, "u_dc": 320.0 if mode == 0 else 105.0,
            "load": 11.5, "dt": 1e-6, "k0": 0, "spc": 100, "angles": angles, "n_steps": steps}


def run_once(advance, mode: int, steps: int):
    a = _inputs(mode, steps)
    sw = np.full(3, -1, dtype=np.int64)
    acc = np.zeros(6)
    empty_i, empty_s, empty_w = np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int8), np.zeros(0)
    t0 = time.perf_counter()
    done = advance(a["x"], a["p"], a["mode"], a["m_a"], a["theta"], a["u_dc"], a["load"], a["dt"],
                   a["k0"], a["spc"], a["angles"], a["n_steps"], 0.0, sw, acc,
                   empty_i, empty_s, empty_w, 0)
    elapsed = time.perf_counter() - t0
    return elapsed, done, a["x"], acc


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=20000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    impls = backends()
    if "cython" not in impls:
        print("compiled kernel not built; only the Python backend is available", file=sys.stderr)
    print(f"{'mode':<5} {'backend':<8} {'ns/step':>10} {'speed-up':>9}")
    ok = True
    for mode, label in ((0, "PWM"), (1, "OPP")):
        best, final = {}, {}
        for name, adv in impls.items():
            times = []
            for _ in range(args.repeat):
                dt, done, x, acc = run_once(adv, mode, args.steps)
                times.append(dt / done)
            best[name] = min(times)
            final[name] = (x.copy(), acc.copy())
        for name in impls:
            speed = best["python"] / best[name]
            print(f"{label:<5} {name:<8} {1e9 * best[name]:>10.1f} {speed:>8.1f}x")
        if "cython" in final:
            dx = np.max(np.abs(final["cython"][0] - final["python"][0]))
            da = np.max(np.abs(final["cython"][1] - final["python"][1]))
            print(f"{label:<5} max |state diff| = {dx:.3e}, max |accumulator diff| = {da:.3e}")
            ok &= dx <= 1e-12 * max(1.0, float(np.max(np.abs(final["python"][0])))) and da <= 1e-9
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())

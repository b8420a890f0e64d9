"""Quarter-wave symmetric optimal pulse patterns.

The pole waveform starts at -1 on ``[0, alpha_1)`` and toggles at every
switching angle inside the first quarter period. It is then extended by
quarter-wave symmetry ``f(pi - x) = f(x)`` and half-wave antisymmetry
``f(x + pi) = -f(x)``, so only odd sine harmonics remain::

    u_n = 4 / (n pi) * (2 * sum_k (-1)**(k+1) cos(n alpha_k) - 1)
"""

from __future__ import annotations

import csv
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field

import numpy as np

HALF_PI = 0.5 * math.pi

# Nine-pulse pattern eliminating every non-triplen odd order from 5 to 29,
# rounded to four digits as published.
NINE_PULSE_ORDERS = (5, 7, 11, 13, 17, 19, 23, 25, 29)
NINE_PULSE_ANGLES = (0.0811, 0.1882, 0.2409, 0.3862, 0.4212, 0.5761, 0.5946, 1.3219, 1.3282)
NINE_PULSE_U1 = 1.1597

# Known roots used as first Newton seeds, keyed by (K, sorted orders).
REFERENCE_SEEDS: dict[tuple[int, tuple[int, ...]], tuple[float, ...]] = {
    (9, NINE_PULSE_ORDERS): NINE_PULSE_ANGLES,
}

MIN_GAP = 1e-4


class PatternDomainError(ValueError):
    """Invalid switching angles or harmonic order."""


class SolverError(RuntimeError):
    """Newton iteration did not produce a valid pattern."""

    def __init__(self, message: str, best_residual: float, best_angles=None):
        super().__init__(f"{message} (best residual {best_residual:.3e})")
        self.best_residual = best_residual
        self.best_angles = best_angles


def _check_angles(angles) -> np.ndarray:
    a = np.asarray(angles, dtype=float)
    if a.ndim != 1 or a.size == 0:
        raise PatternDomainError("need a non-empty 1-d sequence of angles")
    if not (a[0] > 0.0 and a[-1] < HALF_PI):
        raise PatternDomainError("angles must lie strictly inside (0, pi/2)")
    if np.any(np.diff(a) <= 0.0):
        raise PatternDomainError("angles must be strictly increasing")
    return a


def _check_order(n) -> int:
    if int(n) != n or n < 1 or int(n) % 2 == 0:
        raise PatternDomainError(f"harmonic order must be odd and positive, got {n}")
    return int(n)


def _signs(k: int) -> np.ndarray:
    return np.where(np.arange(k) % 2 == 0, 1.0, -1.0)


def evaluate_harmonic(angles: Sequence[float], n: int) -> float:
    """Normalized amplitude of harmonic ``n`` of the pattern."""
    a = _check_angles(angles)
    n = _check_order(n)
    return _harmonic(a, n)


def _harmonic(a: np.ndarray, n: int) -> float:
    total = float(np.dot(_signs(a.size), np.cos(n * a)))
    return 4.0 / (n * math.pi) * (2.0 * total - 1.0)


@dataclass(frozen=True)
class SwitchingPattern:
    angles: tuple[float, ...]
    eliminated_orders: frozenset[int] = field(default_factory=frozenset)

    def __post_init__(self):
        a = _check_angles(self.angles)
        object.__setattr__(self, "angles", tuple(float(x) for x in a))
        object.__setattr__(self, "eliminated_orders", frozenset(int(n) for n in self.eliminated_orders))

    @property
    def pulse_count(self) -> int:
        return len(self.angles)

    @property
    def u1_gen(self) -> float:
        return _harmonic(np.asarray(self.angles), 1)

    def residuals(self) -> dict[int, float]:
        a = np.asarray(self.angles)
        return {n: _harmonic(a, n) for n in sorted(self.eliminated_orders)}


def nine_pulse_table() -> SwitchingPattern:
    """The published four-digit pattern, unrefined."""
    return SwitchingPattern(NINE_PULSE_ANGLES, frozenset(NINE_PULSE_ORDERS))


# --- solver -----------------------------------------------------------------

def _system(a: np.ndarray, orders: np.ndarray) -> np.ndarray:
    # 2 sum (-1)^(k+1) cos(n a_k) - 1 = 0 for each eliminated order
    return 2.0 * (np.cos(np.outer(orders, a)) @ _signs(a.size)) - 1.0


def _jacobian(a: np.ndarray, orders: np.ndarray) -> np.ndarray:
    return -2.0 * orders[:, None] * _signs(a.size)[None, :] * np.sin(np.outer(orders, a))


def _newton(a0: np.ndarray, orders: np.ndarray, max_iter: int = 100, tol: float = 1e-13):
    """Damped Newton with a backtracking line search on the residual norm."""
    a = a0.copy()
    f = _system(a, orders)
    norm = np.linalg.norm(f)
    for _ in range(max_iter):
        if np.max(np.abs(f)) < tol:
            break
        try:
            step = np.linalg.solve(_jacobian(a, orders), -f)
        except np.linalg.LinAlgError:
            break
        # keep the trial inside the search box; a step across pi/2 is meaningless
        biggest = np.max(np.abs(step))
        if biggest > 0.25:
            step *= 0.25 / biggest
        lam = 1.0
        while lam > 1e-8:
            trial = a + lam * step
            f_trial = _system(trial, orders)
            n_trial = np.linalg.norm(f_trial)
            if n_trial < (1.0 - 1e-4 * lam) * norm:
                break
            lam *= 0.5
        else:
            break
        a, f, norm = trial, f_trial, n_trial
    return a, float(np.max(np.abs(f)))


def _valid(a: np.ndarray) -> bool:
    # zero-width pulses at either end of the quarter period are degenerate roots
    if not (a[0] > MIN_GAP and a[-1] < HALF_PI - MIN_GAP and np.all(np.diff(a) > MIN_GAP)):
        return False
    # a fundamental of a few ulp is a nulled fundamental, not a usable pattern
    return _harmonic(a, 1) > 1e-9


def _prepare(k: int, orders: Iterable[int]) -> np.ndarray:
    if k < 1:
        raise PatternDomainError("pulse count must be at least 1")
    given = [_check_order(n) for n in orders]
    ords = sorted(set(given))
    if len(ords) != len(given):
        raise PatternDomainError("eliminated orders must be pairwise distinct")
    if ords and ords[0] == 1:
        raise PatternDomainError("the fundamental cannot be eliminated")
    if len(ords) != k:
        raise PatternDomainError(f"need {k} distinct odd orders, got {len(ords)}")
    return np.asarray(ords, dtype=float)


def _starts(k: int, restarts: int, seed: int):
    yield np.arange(1, k + 1) * HALF_PI / (k + 1)
    rng = np.random.default_rng(seed)
    for _ in range(restarts):
        yield np.sort(rng.uniform(0.0, HALF_PI, k))


def solve_angles(
    k: int,
    orders: Iterable[int],
    *,
    restarts: int = 50,
    seed: int = 0,
    tol: float = 1e-10,
    use_reference: bool = True,
) -> SwitchingPattern:
    """Switching angles that null every harmonic in ``orders``.

    A registered reference root for ``(k, orders)`` is refined first. Next,
    Newton runs from evenly spread angles; if that fails, from ``restarts``
    random sorted starts drawn from ``seed``, and the valid root with the
    smallest angle sum wins. Valid means strictly increasing, pulses wider
    than ``MIN_GAP`` and a positive fundamental.
    """
    ords = _prepare(k, orders)
    key = (k, tuple(int(n) for n in ords))
    best_res, best_a = math.inf, None

    if use_reference and key in REFERENCE_SEEDS:
        a, res = _newton(np.asarray(REFERENCE_SEEDS[key], dtype=float), ords)
        a = np.sort(a)
        if res < tol and _valid(a):
            return SwitchingPattern(tuple(a), frozenset(key[1]))
        best_res, best_a = res, a

    found = []
    for i, a0 in enumerate(_starts(k, restarts, seed)):
        a, res = _newton(a0, ords)
        a = np.sort(a)
        if res < tol and _valid(a):
            if i == 0:
                return SwitchingPattern(tuple(a), frozenset(key[1]))
            found.append(a)
        elif res < best_res:
            best_res, best_a = res, a
    if not found:
        raise SolverError(f"no valid {k}-pulse pattern for orders {key[1]}", best_res, best_a)
    best = min(found, key=lambda x: float(np.sum(x)))
    return SwitchingPattern(tuple(best), frozenset(key[1]))


def find_roots(k: int, orders: Iterable[int], *, restarts: int = 200, seed: int = 0, tol: float = 1e-10):
    """Every distinct valid root reached from the deterministic start set.

    Diagnostic companion to :func:`solve_angles`; sorted by angle sum.
    """
    ords = _prepare(k, orders)
    key = tuple(int(n) for n in ords)
    roots: list[np.ndarray] = []
    for a0 in _starts(k, restarts, seed):
        a, res = _newton(a0, ords)
        a = np.sort(a)
        if res < tol and _valid(a) and not any(np.max(np.abs(a - r)) < 1e-7 for r in roots):
            roots.append(a)
    roots.sort(key=lambda x: float(np.sum(x)))
    return [SwitchingPattern(tuple(r), frozenset(key)) for r in roots]


# --- waveform ---------------------------------------------------------------

def _level(angles: Sequence[float], theta: float) -> int:
    x = math.fmod(theta, 2.0 * math.pi)
    if x < 0.0:
        x += 2.0 * math.pi
    sign = 1
    if x >= math.pi:
        x -= math.pi
        sign = -1
    if x > HALF_PI:
        x = math.pi - x
    toggles = 0
    for a in angles:
        if x >= a:
            toggles += 1
        else:
            break
    return sign if toggles % 2 else -sign


def synthesize_waveform(pattern: SwitchingPattern, theta: float) -> int:
    """Pole level (+1 or -1) at electrical angle ``theta``."""
    return _level(pattern.angles, theta)


def sample_waveform(pattern: SwitchingPattern, n_samples: int, phase: float = 0.0) -> np.ndarray:
    """One period of the waveform on a uniform grid, vectorized."""
    theta = phase + 2.0 * math.pi * np.arange(n_samples) / n_samples
    x = np.mod(theta, 2.0 * math.pi)
    sign = np.where(x >= math.pi, -1, 1)
    x = np.where(x >= math.pi, x - math.pi, x)
    x = np.where(x > HALF_PI, math.pi - x, x)
    toggles = np.searchsorted(np.asarray(pattern.angles), x, side="right")
    return np.where(toggles % 2 == 1, sign, -sign).astype(np.int8)


def _edges(pattern: SwitchingPattern) -> np.ndarray:
    a = np.asarray(pattern.angles)
    quarter = np.concatenate([a, math.pi - a[::-1]])
    return np.concatenate([[0.0], quarter, [math.pi], quarter + math.pi, [2.0 * math.pi]])


def cell_average_waveform(pattern: SwitchingPattern, n_samples: int) -> np.ndarray:
    """Exact mean of the waveform over each of ``n_samples`` equal cells.

    The antiderivative is piecewise linear, so interpolating it at the cell
    boundaries is exact.
    """
    edges = _edges(pattern)
    mids = 0.5 * (edges[:-1] + edges[1:])
    levels = np.array([_level(pattern.angles, m) for m in mids], dtype=float)
    integral = np.concatenate([[0.0], np.cumsum(levels * np.diff(edges))])
    grid = 2.0 * math.pi * np.arange(n_samples + 1) / n_samples
    return np.diff(np.interp(grid, edges, integral)) / np.diff(grid)


def spectrum(pattern: SwitchingPattern, n_max: int) -> list[tuple[int, float]]:
    a = np.asarray(pattern.angles)
    return [(n, _harmonic(a, n) if n % 2 else 0.0) for n in range(1, n_max + 1)]


# --- CSV --------------------------------------------------------------------

def write_pattern_csv(pattern: SwitchingPattern, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["k", "alpha_rad"])
        for k, a in enumerate(pattern.angles, start=1):
            w.writerow([k, repr(a)])


def read_pattern_csv(path, eliminated_orders: Iterable[int] = ()) -> SwitchingPattern:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    rows.sort(key=lambda r: int(r["k"]))
    return SwitchingPattern(tuple(float(r["alpha_rad"]) for r in rows), frozenset(eliminated_orders))


def write_spectrum_csv(lines: Iterable[tuple[int, float]], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["order", "amplitude"])
        for n, amp in lines:
            w.writerow([n, repr(float(amp))])

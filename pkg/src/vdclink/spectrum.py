"""Integer-period harmonic analysis of uniformly sampled traces."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class WindowingError(ValueError):
    """Trace does not span an integer number of fundamental periods."""


@dataclass(frozen=True)
class HarmonicLine:
    order: int
    amplitude: float   # peak value; dc line holds the mean
    phase: float       # rad, cosine reference: x = A cos(n w t + phase)

    @property
    def phasor(self) -> complex:
        return self.amplitude * complex(math.cos(self.phase), math.sin(self.phase))


def period_count(n_samples: int, fs: float, f1: float, rtol: float = 1e-6) -> int:
    periods = n_samples * f1 / fs
    m = round(periods)
    if m < 1 or abs(periods - m) > rtol * max(1.0, periods):
        raise WindowingError(f"window holds {periods:.6f} fundamental periods, need an integer")
    return m


def _hold_correction(orders: np.ndarray, n_samples: int) -> np.ndarray:
    # samples that are cell averages (zero-order hold over each step) carry a
    # sinc gain and a half-cell delay per frequency bin
    x = math.pi * orders / n_samples
    gain = np.where(orders == 0, 1.0, np.sin(x) / np.where(orders == 0, 1.0, x))
    return gain * np.exp(-1j * x)


def fft_spectrum(x, fs: float, f1: float, n_max: int | None = None, hold: bool = False) -> list[HarmonicLine]:
    """Harmonic table of ``x`` by order of ``f1``.

    ``hold=True`` treats each sample as the average over its own sampling
    cell (the value of a piecewise-constant signal on ``[t_j, t_j + 1/fs)``)
    and removes the resulting sinc gain and half-cell delay, which makes the
    result the exact Fourier series of that staircase up to aliasing.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    m = period_count(n, fs, f1)
    limit = int(fs / f1 / 4.0)
    n_max = limit if n_max is None else min(int(n_max), limit)
    bins = np.fft.rfft(x)
    idx = m * np.arange(n_max + 1)
    coef = bins[idx] * (2.0 / n)
    coef[0] *= 0.5
    if hold:
        coef = coef / _hold_correction(idx, n)
    return [HarmonicLine(k, float(abs(c)), float(np.angle(c))) for k, c in enumerate(coef)]


def fundamental_phasor(x, fs: float, f1: float) -> complex:
    """Complex peak amplitude X with ``x ~ Re(X exp(j w1 t))`` at the fundamental."""
    x = np.asarray(x, dtype=float)
    n = x.size
    m = period_count(n, fs, f1)
    k = np.arange(n)
    return complex(2.0 / n * np.dot(x, np.exp(-2j * math.pi * m * k / n)))


def rms(x) -> float:
    x = np.asarray(x, dtype=float)
    return float(math.sqrt(np.mean(x * x)))


def harmonic_power(x, fs: float, f1: float) -> float:
    """Mean square of everything except the dc and fundamental lines (Parseval)."""
    x = np.asarray(x, dtype=float)
    period_count(x.size, fs, f1)
    x1 = fundamental_phasor(x, fs, f1)
    dc = float(np.mean(x))
    return max(0.0, float(np.mean(x * x)) - dc * dc - 0.5 * abs(x1) ** 2)


def sine_coefficients(lines: list[HarmonicLine]) -> np.ndarray:
    """Coefficients b_n of ``sum b_n sin(n w t)`` for a purely odd signal."""
    # A cos(nwt + phi) = -A sin(phi) sin(nwt) + A cos(phi) cos(nwt)
    return np.array([-ln.amplitude * math.sin(ln.phase) for ln in lines])

"""Spectra, eddy turnover time and residual-growth fits.

Squared RMS residual growth is modelled as ``C2 t² + C1 t``: ``C1``
estimates the trace of a Brownian model-error covariance and ``C2`` the
squared norm of a systematic bias.  ``eta = C2 T / C1`` compares the two at
the end of a run of length ``T``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .spectral import FOUR_PI_SQ, SpectralField


@dataclass(frozen=True)
class SpectrumSeries:
    shells: dict[int, float]
    T0: float
    T: float

    def total(self) -> float:
        return float(sum(self.shells.values()))


@dataclass(frozen=True)
class FitResult:
    C1: float
    C2: float
    T: float

    @property
    def eta(self) -> float:
        return eta(self.C1, self.C2, self.T)

    @property
    def trace_q(self) -> float:
        return self.C1

    @property
    def bias_sq(self) -> float:
        return self.C2


def eta(C1: float, C2: float, T: float) -> float:
    """Relative size of bias to stochastic growth at time ``T``."""
    return C2 * T / C1


def energy_shells(omega: SpectralField) -> np.ndarray:
    """Per-shell ``4π² Σ |u_k|²`` of the velocity of ``omega``; index r."""
    g = omega.grid
    return FOUR_PI_SQ * g.weighted_shell_sums(np.abs(omega.coeffs) ** 2 * g.inv_ksq)


def time_averaged_spectrum(samples: Sequence[SpectralField], T0: float, T: float, h: float) -> SpectrumSeries:
    """Left-endpoint time average of the energy spectrum over ``[T0, T]``.

    ``samples`` are vorticity fields at ``T0, T0 + h, ...``; the sample at
    ``T`` itself, if supplied, carries no weight.
    """
    if not T > T0:
        raise ValueError(f"empty averaging window [{T0}, {T}]")
    n = int(round((T - T0) / h))
    if n < 1 or len(samples) < n:
        raise ValueError(f"need {n} samples spaced {h} to cover [{T0}, {T}], got {len(samples)}")
    acc = None
    for f in samples[:n]:
        e = energy_shells(f)
        acc = e.copy() if acc is None else acc + e
    acc *= h / (T - T0)
    return SpectrumSeries({r: float(acc[r]) for r in range(1, len(acc))}, T0, T)


def eddy_turnover(spec: SpectrumSeries | Mapping[int, float]) -> float:
    """``4π² Σ E(r)/r / (Σ E(r))^{3/2}``."""
    shells = spec.shells if isinstance(spec, SpectrumSeries) else spec
    total = sum(shells.values())
    if not total > 0:
        raise ValueError("eddy turnover time needs a nonzero spectrum")
    return FOUR_PI_SQ * sum(e / r for r, e in shells.items()) / total**1.5


def fit_growth(times, erms, T: float | None = None) -> FitResult:
    """Least-squares fit of ``erms² ≈ C2 t² + C1 t`` (no constant term).

    Only samples with ``t > 0`` enter.  The basis is scaled by the horizon
    ``T`` (default: the last time) to keep the design well conditioned.
    A negative ``C2`` is returned as is.
    """
    t = np.asarray(times, dtype=float)
    y = np.asarray(erms, dtype=float) ** 2
    keep = t > 0
    t, y = t[keep], y[keep]
    if len(t) < 3:
        raise ValueError(f"need at least 3 positive-time samples, got {len(t)}")
    T = float(t[-1]) if T is None else float(T)
    s = t / T
    A = np.column_stack([s, s * s])
    if np.linalg.matrix_rank(A) < 2:
        raise ValueError("degenerate design matrix: sample times do not separate t and t²")
    (a, b), *_ = np.linalg.lstsq(A, y, rcond=None)
    return FitResult(float(a) / T, float(b) / T**2, T)


def growth_exponent(times, erms, window: tuple[float, float] | None = None) -> float:
    """Slope of ``log erms`` against ``log t`` over ``window`` (default: all t > 0)."""
    t = np.asarray(times, dtype=float)
    e = np.asarray(erms, dtype=float)
    lo, hi = window if window is not None else (0.0, math.inf)
    sel = (t > 0) & (t >= lo) & (t <= hi)
    t, e = t[sel], e[sel]
    if len(t) < 2:
        raise ValueError("need at least two samples inside the window")
    if np.any(e <= 0):
        raise ValueError("growth exponent needs positive values")
    x, y = np.log(t), np.log(e)
    x = x - x.mean()
    return float(np.dot(x, y - y.mean()) / np.dot(x, x))

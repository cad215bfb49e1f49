"""Smoothing filters of the alpha turbulence models, as Fourier symbols.

The van Cittert deconvolution filter of order ``N`` with raw length ``alpha``
acts on mode ``k`` by

    D_N,k / (1 + a) = 1 - (a / (1 + a))**(N + 1),      a = alpha² |k|²,

the closed form of the geometric sum ``Σ_{n<=N} (a/(1+a))**n / (1+a)``.
Parameterised by the effective length ``alpha0 = alpha / sqrt(N + 1)`` the
family keeps its high-wavenumber tail ``~ 1/(alpha0² |k|²)`` for every ``N``,
and ``N -> ∞`` gives ``1 - exp(-1/(alpha0² |k|²))``.

``N = 0`` is the LANS-alpha filter ``1/(1 + alpha²|k|²)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .spectral import SpectralField, grid, sq_l2_norm

INF = math.inf


def _parse_order(order) -> int | float:
    if isinstance(order, str):
        token = order.strip().lower()
        if token in ("inf", "infinity", "∞"):
            return INF
        order = int(token)
    if order == INF:
        return INF
    if isinstance(order, float):
        if not order.is_integer():
            raise ValueError(f"deconvolution order must be an integer or inf, got {order}")
        order = int(order)
    if not isinstance(order, (int, np.integer)) or order < 0:
        raise ValueError(f"deconvolution order must be a nonnegative integer or inf, got {order!r}")
    return int(order)


@dataclass(frozen=True)
class FilterSpec:
    """Deconvolution order ``order`` (int or ``INF``) and effective length ``alpha0``.

    ``alpha0 = 0`` is accepted as the identity filter, used as a null control.
    """

    order: int | float
    alpha0: float

    def __post_init__(self):
        object.__setattr__(self, "order", _parse_order(self.order))
        a0 = float(self.alpha0)
        if not a0 >= 0.0 or not math.isfinite(a0):
            raise ValueError(f"alpha0 must be a finite nonnegative number, got {self.alpha0!r}")
        object.__setattr__(self, "alpha0", a0)

    @property
    def infinite(self) -> bool:
        return self.order == INF

    @property
    def alpha(self) -> float:
        """Raw averaging length ``alpha0 * sqrt(N + 1)``; undefined for ``N = ∞``."""
        if self.infinite:
            raise ValueError("raw length alpha is undefined for the infinite-order filter")
        return self.alpha0 * math.sqrt(self.order + 1)

    @property
    def order_label(self) -> str:
        return "inf" if self.infinite else str(self.order)

    @property
    def label(self) -> str:
        return f"a{self.alpha0!r}_N{self.order_label}"

    def __str__(self):
        return f"FilterSpec(N={self.order_label}, alpha0={self.alpha0:g})"


def _check_ksq(ksq):
    if np.any(np.asarray(ksq) < 0):
        raise ValueError("|k|² must be nonnegative")


def _log_ratio(a):
    """``log(a / (1 + a))`` computed without cancellation, for a > 0."""
    return -np.log1p(1.0 / a)


def raw_symbol(N: int, alpha: float, ksq):
    """Attenuation ``1 - (a/(1+a))**(N+1)`` with ``a = alpha² ksq``.

    Vectorises over ``ksq``.
    """
    if N < 0 or alpha < 0:
        raise ValueError(f"order and alpha must be nonnegative, got N={N}, alpha={alpha}")
    _check_ksq(ksq)
    a = alpha * alpha * np.asarray(ksq, dtype=float)
    return _finite_symbol(int(N), a)


def _finite_symbol(N: int, a):
    with np.errstate(divide="ignore"):
        if N == 0:
            out = 1.0 / (1.0 + a)
        else:
            out = -np.expm1((N + 1) * _log_ratio(a))
    out = np.where(a == 0.0, 1.0, out)
    return out[()] if out.ndim == 0 else out


def _finite_complement(N: int, a):
    with np.errstate(divide="ignore"):
        if N == 0:
            out = a / (1.0 + a)
        else:
            out = np.exp((N + 1) * _log_ratio(a))
    out = np.where(a == 0.0, 0.0, out)
    return out[()] if out.ndim == 0 else out


def symbol(spec: FilterSpec, ksq):
    """Rescaled filter symbol at squared wavenumber ``ksq`` (vectorised)."""
    _check_ksq(ksq)
    ksq = np.asarray(ksq, dtype=float)
    if spec.alpha0 == 0.0:
        out = np.ones_like(ksq)
        return out[()] if out.ndim == 0 else out
    if spec.infinite:
        with np.errstate(divide="ignore"):
            out = -np.expm1(-1.0 / (spec.alpha0**2 * ksq))
        return out[()] if out.ndim == 0 else out
    a = (spec.order + 1) * spec.alpha0**2 * ksq
    return _finite_symbol(spec.order, a)


def complement(spec: FilterSpec, ksq):
    """``1 - symbol(spec, ksq)`` evaluated directly, accurate when tiny."""
    _check_ksq(ksq)
    ksq = np.asarray(ksq, dtype=float)
    if spec.alpha0 == 0.0:
        out = np.zeros_like(ksq)
        return out[()] if out.ndim == 0 else out
    if spec.infinite:
        with np.errstate(divide="ignore"):
            out = np.exp(-1.0 / (spec.alpha0**2 * ksq))
        return out[()] if out.ndim == 0 else out
    a = (spec.order + 1) * spec.alpha0**2 * ksq
    return _finite_complement(spec.order, a)


@lru_cache(maxsize=None)
def symbol_table(spec: FilterSpec, K: int) -> np.ndarray:
    """Symbol on the half-spectrum layout of truncation ``K`` (zero at k = 0)."""
    g = grid(K)
    table = np.where(g.ksq > 0, symbol(spec, np.maximum(g.ksq, 1)), 0.0)
    if spec.alpha0 == 0.0:
        # the identity filter must reproduce its input bitwise
        table = np.ones(g.shape)
    table.flags.writeable = False
    return table


def filter_field(spec: FilterSpec, f: SpectralField) -> SpectralField:
    return SpectralField(f.K, symbol_table(spec, f.K) * f.coeffs)


def consistency_error(spec: FilterSpec, f: SpectralField) -> float:
    """L² norm of ``f - H f``."""
    return math.sqrt(sq_l2_norm(complement_table(spec, f.K) * f.coeffs))


@lru_cache(maxsize=None)
def complement_table(spec: FilterSpec, K: int) -> np.ndarray:
    """``1 - symbol`` on the half-spectrum layout (zero at k = 0)."""
    g = grid(K)
    table = np.where(g.ksq > 0, complement(spec, np.maximum(g.ksq, 1)), 0.0)
    table.flags.writeable = False
    return table

"""Discrete Navier-Stokes dynamics in vorticity form.

One step of the semigroup integrates the viscous and forcing terms exactly
and the advection term with forward Euler:

    ω_k <- (ω_k - h (u·∇ω)_k) e^{-ν|k|²h} + g_k/(ν|k|²) (1 - e^{-ν|k|²h})

The forcing factor is the cancellation-safe form of
``2 e^{-ah/2} sinh(ah/2)`` with ``a = ν|k|²``.  Velocity follows from
vorticity through ``u_k = i(k2, -k1) ω_k / |k|²``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .spectral import SpectralField, dealias_size, grid, sq_l2_norm

# force support: 16 <= |k|² <= 34
FORCE_KSQ_MIN = 16
FORCE_KSQ_MAX = 34
LAMBDA_0 = 1.0
LAMBDA_M = float(FORCE_KSQ_MAX)


class BlowUpError(FloatingPointError):
    """Non-finite vorticity produced by a step."""

    def __init__(self, step: int, member: int | None = None):
        self.step = step
        self.member = member
        where = f" in ensemble member {member}" if member is not None else ""
        super().__init__(f"non-finite vorticity at step {step}{where}")


@dataclass(frozen=True)
class SolverParams:
    nu: float
    h: float
    K: int
    M: int

    def __post_init__(self):
        if not self.nu > 0:
            raise ValueError(f"viscosity must be positive, got {self.nu}")
        if not self.h > 0:
            raise ValueError(f"time step must be positive, got {self.h}")
        if self.K < 1:
            raise ValueError(f"truncation must be positive, got {self.K}")
        if self.M < dealias_size(self.K):
            raise ValueError(f"grid M={self.M} aliases products for K={self.K}; need M >= {dealias_size(self.K)}")
        if self.nu * 2 * self.K**2 * self.h > 700:
            raise ValueError("viscous decay factor underflows; reduce h or K")


@dataclass(frozen=True, eq=False)
class ForcingField:
    """Curl ``g`` of a divergence-free body force together with its size."""

    g: SpectralField
    fnorm: float
    grashof: float
    nu: float
    seed: int | None = None


@dataclass(frozen=True, eq=False)
class TrajectoryState:
    n: int
    omega: SpectralField

    def time(self, h: float) -> float:
        return self.n * h


def force_norm(g: SpectralField) -> float:
    """``||f||_{L²}`` of the body force whose curl is ``g``."""
    return math.sqrt(sq_l2_norm(g.coeffs * np.sqrt(g.grid.inv_ksq)))


def velocity_symbols(K: int) -> tuple[np.ndarray, np.ndarray]:
    g = grid(K)
    return 1j * g.k2 * g.inv_ksq, -1j * g.k1 * g.inv_ksq


def velocity_from_vorticity(omega: SpectralField) -> tuple[SpectralField, SpectralField]:
    s1, s2 = velocity_symbols(omega.K)
    return SpectralField(omega.K, s1 * omega.coeffs), SpectralField(omega.K, s2 * omega.coeffs)


class Kernel:
    """Precomputed tables and batched transforms for one (params, force) pair.

    Works on raw half-spectrum arrays; the module-level functions wrap it
    for :class:`SpectralField` values.
    """

    def __init__(self, params: SolverParams, force: ForcingField | None = None):
        self.params = params
        K, M, nu, h = params.K, params.M, params.nu, params.h
        self.grid = g = grid(K)
        self.K, self.M = K, M
        a = nu * g.ksq * h
        self.decay = np.where(g.ksq > 0, np.exp(-a), 0.0)
        self.u1_sym, self.u2_sym = velocity_symbols(K)
        self.dx_sym = 1j * g.k1
        self.dy_sym = 1j * g.k2
        if force is None:
            self.forcing = np.zeros(g.shape, dtype=complex)
        else:
            if force.g.K != K:
                raise ValueError(f"force truncation {force.g.K} does not match K={K}")
            self.forcing = force.g.coeffs * (g.inv_ksq / nu) * -np.expm1(-a)
        self._buf = None

    def _spectral_stack(self, n: int) -> np.ndarray:
        if self._buf is None or self._buf.shape[0] < n:
            self._buf = np.zeros((n, self.M, self.M // 2 + 1), dtype=complex)
        return self._buf[:n]

    def to_grid(self, stack: list[np.ndarray]) -> np.ndarray:
        """Inverse-transform several half-spectra in one batched call."""
        K, M = self.K, self.M
        buf = self._spectral_stack(len(stack))
        for i, c in enumerate(stack):
            buf[i, : K + 1, : K + 1] = c[K:]
            buf[i, M - K:, : K + 1] = c[:K]
        return np.fft.irfft2(buf, s=(M, M), norm="forward")

    def from_grid(self, samples: np.ndarray) -> np.ndarray:
        """Batched forward transform; ``samples`` has shape (n, M, M)."""
        K, M = self.K, self.M
        F = np.fft.rfft2(samples, norm="forward")
        out = np.empty((samples.shape[0],) + self.grid.shape, dtype=complex)
        out[:, :K] = F[:, M - K:, : K + 1]
        out[:, K:] = F[:, : K + 1, : K + 1]
        out[:, K, 0] = 0.0
        col = out[:, :, 0]
        out[:, :, 0] = 0.5 * (col + np.conj(col[:, ::-1]))
        return out

    def physical_parts(self, w: np.ndarray) -> np.ndarray:
        """Physical (u1, u2, ∂ω/∂x1, ∂ω/∂x2), shape (4, M, M)."""
        return self.to_grid([self.u1_sym * w, self.u2_sym * w, self.dx_sym * w, self.dy_sym * w])

    def advection(self, w: np.ndarray, parts: np.ndarray | None = None) -> np.ndarray:
        if parts is None:
            parts = self.physical_parts(w)
        u1, u2, wx, wy = parts
        return self.from_grid((u1 * wx + u2 * wy)[None])[0]

    def advance(self, w: np.ndarray, adv: np.ndarray) -> np.ndarray:
        return (w - self.params.h * adv) * self.decay + self.forcing

    def step(self, w: np.ndarray, n: int = 0) -> np.ndarray:
        out = self.advance(w, self.advection(w))
        if not np.isfinite(out).all():
            raise BlowUpError(n + 1)
        return out

    def cfl(self, parts_or_w: np.ndarray) -> float:
        if parts_or_w.ndim == 2:
            parts_or_w = self.physical_parts(parts_or_w)
        u1, u2 = parts_or_w[0], parts_or_w[1]
        return self.K * self.params.h / (2 * math.pi) * float(np.max(np.abs(u1) + np.abs(u2)))


def advection(omega: SpectralField, params: SolverParams) -> SpectralField:
    """Dealiased ``u·∇ω`` truncated to the square."""
    return SpectralField(omega.K, Kernel(params).advection(omega.coeffs))


def step(state: TrajectoryState, force: ForcingField | None, params: SolverParams,
         kernel: Kernel | None = None) -> TrajectoryState:
    kernel = kernel or Kernel(params, force)
    w = kernel.step(state.omega.coeffs, state.n)
    return TrajectoryState(state.n + 1, SpectralField(params.K, w))


def make_force(seed: int, target_grashof: float, nu: float, K: int) -> ForcingField:
    """Random force on the annulus 16 <= |k|² <= 34 scaled to a Grashof number.

    Independent modes (``k2 > 0``, or ``k2 = 0, k1 > 0``) are visited in
    ascending ``|k|²`` then lexicographic order; each receives ``X + iY``
    with ``X, Y`` standard normal from ``numpy.random.default_rng(seed)``.
    """
    if not target_grashof > 0:
        raise ValueError(f"target Grashof number must be positive, got {target_grashof}")
    if not nu > 0:
        raise ValueError(f"viscosity must be positive, got {nu}")
    if K * K < FORCE_KSQ_MAX:
        raise ValueError(f"K={K} cannot represent modes with |k|² <= {FORCE_KSQ_MAX}")
    g = grid(K)
    k1, k2, ksq = g.k1.ravel(), g.k2.ravel(), g.ksq.ravel()
    independent = (k2 > 0) | ((k2 == 0) & (k1 > 0))
    active = independent & (ksq >= FORCE_KSQ_MIN) & (ksq <= FORCE_KSQ_MAX)
    idx = [i for i in g.order if active[i]]
    rng = np.random.default_rng(seed)
    draws = rng.standard_normal((len(idx), 2))
    coeffs = np.zeros(g.shape, dtype=complex).ravel()
    coeffs[idx] = draws[:, 0] + 1j * draws[:, 1]
    coeffs = coeffs.reshape(g.shape)
    # mirror k2 = 0 entries onto negative k1
    col = coeffs[:, 0]
    coeffs[:K, 0] = np.conj(col[::-1][:K])
    raw = force_norm(SpectralField(K, coeffs))
    target = target_grashof * nu * nu
    gfield = SpectralField(K, coeffs * (target / raw))
    fnorm = force_norm(gfield)
    return ForcingField(gfield, fnorm, fnorm / nu**2, nu, seed)


def absorbing_bound(fnorm: float, nu: float, c0: float) -> float:
    """Radius ``c0 ||f|| / (ν λ0^{1/2})`` of the absorbing ball; needs ``c0 > 6 λM/λ0``."""
    limit = 6 * LAMBDA_M / LAMBDA_0
    if not c0 > limit:
        raise ValueError(f"c0 must exceed {limit:g}, got {c0}")
    return c0 * fnorm / (nu * math.sqrt(LAMBDA_0))


def cfl_number(state: TrajectoryState, params: SolverParams) -> float:
    """``(K h / 2π) max |u|_1`` over the physical grid at this step."""
    return Kernel(params).cfl(state.omega.coeffs)


@dataclass
class CFLMonitor:
    """Running supremum of the CFL number, sampled every ``cadence`` steps."""

    cadence: int = 1
    value: float = 0.0
    samples: int = field(default=0)

    def update(self, n: int, kernel: Kernel, parts: np.ndarray) -> None:
        if n % self.cadence == 0:
            self.value = max(self.value, kernel.cfl(parts))
            self.samples += 1

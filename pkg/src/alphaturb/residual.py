"""Model-error residual of the alpha models along an exact trajectory.

Plugging the exact vorticity into an alpha model leaves the defect
``(ū·∇ω - u·∇ω)``, where ``ū`` is the filtered velocity.  Its left-endpoint
Riemann sum over the trajectory is the residual vorticity

    ρ^{n+1} = ρ^n + h ((ū^n·∇ω^n) - (u^n·∇ω^n)),      ρ^0 = 0.

Only the exact trajectory is read; no alpha-model state is ever evolved.
The defect is formed as ``-((1 - H) u)·∇ω`` so that small filter
corrections are not lost to cancellation and the identity filter gives an
exactly zero residual.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .filters import FilterSpec, complement_table
from .solver import Kernel, SolverParams, TrajectoryState, velocity_from_vorticity
from .spectral import FOUR_PI_SQ, SpectralField, grid, sq_l2_norm

# agreement required between the two ensemble-RMS formulas
RMS_FORMS_RTOL = 1e-13


@dataclass(frozen=True, eq=False)
class ResidualState:
    spec: FilterSpec
    rho: SpectralField
    n: int = 0

    @classmethod
    def start(cls, spec: FilterSpec, K: int, n: int = 0) -> "ResidualState":
        return cls(spec, SpectralField.zeros(K), n)


class ResidualTracker:
    """Advances the residuals of several filters alongside one trajectory.

    The unfiltered velocity and vorticity gradient come from the same
    physical-space transform used by the solver step, so each extra filter
    costs two inverse transforms and one forward transform.
    """

    def __init__(self, kernel: Kernel, specs: Sequence[FilterSpec], rho: np.ndarray | None = None):
        self.kernel = kernel
        self.specs = list(specs)
        K = kernel.K
        self.complements = [complement_table(s, K) for s in self.specs]
        shape = (len(self.specs),) + grid(K).shape
        self.rho = np.zeros(shape, dtype=complex) if rho is None else np.array(rho, dtype=complex)
        if self.rho.shape != shape:
            raise ValueError(f"residual array has shape {self.rho.shape}, expected {shape}")

    def defects(self, w: np.ndarray, parts: np.ndarray) -> np.ndarray:
        """``(ū·∇ω - u·∇ω)_k`` for every tracked filter, shape (S, 2K+1, K+1)."""
        k = self.kernel
        u1 = k.u1_sym * w
        u2 = k.u2_sym * w
        stack = []
        for c in self.complements:
            stack += [-c * u1, -c * u2]
        du = k.to_grid(stack)
        wx, wy = parts[2], parts[3]
        return k.from_grid(du[0::2] * wx + du[1::2] * wy)

    def accumulate(self, w: np.ndarray, parts: np.ndarray) -> None:
        self.rho += self.kernel.params.h * self.defects(w, parts)

    def sq_norms(self) -> list[float]:
        return [sq_l2_norm(r) for r in self.rho]

    def states(self, n: int) -> list[ResidualState]:
        K = self.kernel.K
        return [ResidualState(s, SpectralField(K, r), n) for s, r in zip(self.specs, self.rho)]


def accumulate(res: ResidualState, state: TrajectoryState, params: SolverParams) -> ResidualState:
    """One left-endpoint update of ``res`` driven by ``state``."""
    if res.n != state.n:
        raise ValueError(f"residual at step {res.n} cannot be driven by trajectory step {state.n}")
    kernel = Kernel(params)
    tracker = ResidualTracker(kernel, [res.spec], res.rho.coeffs[None])
    w = state.omega.coeffs
    tracker.accumulate(w, kernel.physical_parts(w))
    return ResidualState(res.spec, SpectralField(params.K, tracker.rho[0]), res.n + 1)


def residual_velocity(res: ResidualState) -> tuple[SpectralField, SpectralField]:
    """Divergence-free residual velocity ``R_k = i ρ_k (k2, -k1)/|k|²``."""
    return velocity_from_vorticity(res.rho)


def ensemble_rms(sq_norms: Sequence[float]) -> float:
    """Root of the mean of per-member squared residual norms."""
    if len(sq_norms) == 0:
        raise ValueError("ensemble is empty")
    total = 0.0
    for v in sq_norms:
        total += v
    return math.sqrt(total / len(sq_norms))


def rms_over_ensemble(residuals: Sequence[ResidualState]) -> float:
    """Ensemble RMS residual at a common step.

    Computed both from the ``|k|²``-weighted residual velocity and from the
    residual vorticity; the two must agree.
    """
    if len(residuals) == 0:
        raise ValueError("ensemble is empty")
    spec, n = residuals[0].spec, residuals[0].n
    for r in residuals:
        if r.spec != spec or r.n != n:
            raise ValueError("ensemble members must share filter and step index")
    ksq = residuals[0].rho.grid.ksq
    vort, vel = [], []
    for r in residuals:
        vort.append(sq_l2_norm(r.rho.coeffs))
        R1, R2 = residual_velocity(r)
        vel.append(sq_l2_norm(np.sqrt(ksq) * R1.coeffs) + sq_l2_norm(np.sqrt(ksq) * R2.coeffs))
    a, b = ensemble_rms(vort), ensemble_rms(vel)
    if not math.isclose(a, b, rel_tol=RMS_FORMS_RTOL, abs_tol=0.0):
        raise ArithmeticError(f"ensemble RMS forms disagree: {a!r} vs {b!r}")
    return a


def velocity_form_rms(residuals: Sequence[ResidualState]) -> float:
    """``{(4π²/|U|) Σ Σ_k |k|² |R_k|²}^{1/2}`` evaluated literally over the full square."""
    total = 0.0
    for r in residuals:
        R1, R2 = residual_velocity(r)
        full1, full2 = R1.full(), R2.full()
        K = r.rho.K
        k = np.arange(-K, K + 1)
        ksq = k[:, None] ** 2 + k[None, :] ** 2
        total += FOUR_PI_SQ * float(np.sum(ksq * (np.abs(full1) ** 2 + np.abs(full2) ** 2)))
    return math.sqrt(total / len(residuals))

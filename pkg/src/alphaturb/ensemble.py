"""Ensembles of exact trajectories and their residual statistics.

Each member starts from a Gaussian random velocity field whose expected
shell spectrum equals a target ``E(r)``, is spun up towards the attractor,
and then drives the residual trackers of every requested filter.  Members
are independent and may run in separate processes; the reduction into the
ensemble RMS happens afterwards in member order, so results do not depend
on scheduling.

Random streams: member ``j`` of an ensemble seeded with ``seed`` draws from
``numpy.random.default_rng(SeedSequence(seed, spawn_key=(j,)))``, a PCG64
substream disjoint from every other member's.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .filters import FilterSpec
from .residual import ResidualTracker, ensemble_rms
from .solver import BlowUpError, ForcingField, Kernel, SolverParams, TrajectoryState
from .spectral import SpectralField, grid, shell_of, sq_l2_norm

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class EnsembleConfig:
    size: int
    seed: int
    spinup_time: float
    run_time: float
    target_spectrum: Mapping[int, float]
    sample_interval: int = 1
    energy_interval: int | None = None

    def __post_init__(self):
        if self.size < 1:
            raise ValueError(f"ensemble size must be at least 1, got {self.size}")
        if self.spinup_time < 0 or self.run_time < 0:
            raise ValueError("spin-up and run times must be nonnegative")
        if any(v < 0 for v in self.target_spectrum.values()):
            raise ValueError("target spectrum must be nonnegative")
        if self.sample_interval < 1:
            raise ValueError("sample_interval must be a positive number of steps")


def step_count(T: float, h: float) -> int:
    """``floor(T/h)`` tolerant of round-off when ``T`` is a multiple of ``h``."""
    if T < 0:
        raise ValueError(f"time span must be nonnegative, got {T}")
    return int(math.floor(T / h * (1 + 1e-12)))


def member_rng(seed: int, j: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(j,)))


def synthesize_initial(seed: int, j: int, spectrum: Mapping[int, float], K: int) -> SpectralField:
    """Random vorticity whose velocity has expected shell energies ``spectrum``.

    With ``X, Y`` standard normal per mode of the full square,
    ``Z_k = |k|/(2π) (E(r)/n_r)^{1/2} (X + iY)/2`` and the vorticity is
    ``Z_k + conj(Z_{-k})``, where ``n_r`` counts the modes of shell ``r``
    inside the truncation.
    """
    g = grid(K)
    counts = g.shell_counts
    if any(v < 0 for v in spectrum.values()):
        raise ValueError("target spectrum must be nonnegative")
    dropped = sorted(r for r, e in spectrum.items() if e > 0 and (r < 1 or r >= len(counts) or counts[r] == 0))
    if dropped:
        log.warning("target spectrum shells %s lie outside the K=%d truncation and are ignored", dropped, K)
    rng = member_rng(seed, j)
    n = 2 * K + 1
    X = rng.standard_normal((n, n))
    Y = rng.standard_normal((n, n))
    k = np.arange(-K, K + 1)
    ksq = k[:, None] ** 2 + k[None, :] ** 2
    shells = shell_of(ksq)
    energy = np.zeros(len(counts))
    for r, e in spectrum.items():
        if 1 <= r < len(counts):
            energy[r] = e
    per_mode = np.zeros(len(counts))
    per_mode[1:] = energy[1:] / np.maximum(counts[1:], 1)
    amp = np.sqrt(ksq) / (2 * math.pi) * np.sqrt(per_mode[shells])
    Z = amp * (X + 1j * Y) / 2
    Z[K, K] = 0.0
    return SpectralField.from_full(K, Z + np.conj(Z[::-1, ::-1]))


def energy_enstrophy(state: TrajectoryState | SpectralField) -> tuple[float, float]:
    """``(||u||², ||ω||²)`` in L²."""
    omega = state.omega if isinstance(state, TrajectoryState) else state
    w = omega.coeffs
    return sq_l2_norm(w * np.sqrt(omega.grid.inv_ksq)), sq_l2_norm(w)


def _energy(w: np.ndarray) -> float:
    K = (w.shape[0] - 1) // 2
    return sq_l2_norm(w * np.sqrt(grid(K).inv_ksq))


@dataclass
class SpinUp:
    state: TrajectoryState
    times: list[float] = field(default_factory=list)
    energies: list[float] = field(default_factory=list)
    enstrophies: list[float] = field(default_factory=list)

    def record(self, t: float, w: np.ndarray) -> None:
        self.times.append(t)
        self.energies.append(_energy(w))
        self.enstrophies.append(sq_l2_norm(w))


def spin_up(initial: SpectralField, force: ForcingField | None, params: SolverParams, T: float,
            energy_interval: int | None = None, member: int | None = None) -> SpinUp:
    """Advance ``floor(T/h)`` steps, sampling the energy every ``energy_interval`` steps."""
    kernel = Kernel(params, force)
    nsteps = step_count(T, params.h)
    w = initial.coeffs
    out = SpinUp(TrajectoryState(0, initial))
    every = energy_interval or max(nsteps // 100, 1)
    out.record(0.0, w)
    for n in range(nsteps):
        try:
            w = kernel.step(w, n)
        except BlowUpError as err:
            raise BlowUpError(err.step, member) from None
        if (n + 1) % every == 0:
            out.record((n + 1) * params.h, w)
    if nsteps:
        out.state = TrajectoryState(nsteps, SpectralField(params.K, w))
    return out


def is_stationary(energies: Sequence[float], windows: int = 4, tol: float = 0.10) -> bool:
    """Heuristic: trailing-window means differ by less than ``tol`` relative.

    The series is cut into ``windows`` equal consecutive blocks after
    dropping its first block; consecutive block means must agree.
    """
    e = np.asarray(energies, dtype=float)
    blocks = np.array_split(e, windows + 1)[1:]
    means = [float(np.mean(b)) for b in blocks if len(b)]
    return all(abs(b - a) < tol * max(abs(a), abs(b)) for a, b in zip(means, means[1:]))


@dataclass
class MemberRun:
    """Residual history of one member after spin-up.

    ``sq_norms[i, s]`` is ``||ρ||²`` of filter ``s`` at ``times[i]``.
    """

    member: int
    times: np.ndarray
    sq_norms: np.ndarray
    start: TrajectoryState
    final: TrajectoryState
    rho: np.ndarray
    vorticity_norms: np.ndarray
    cfl_max: float


@dataclass
class ResumePoint:
    """State needed to continue a member's residual run bit-for-bit."""

    n: int
    omega: np.ndarray
    rho: np.ndarray
    times: list[float]
    sq_norms: list[list[float]]
    vorticity_norms: list[float]
    cfl_max: float = 0.0


def run_residuals(member: int, start: SpectralField, force: ForcingField | None, params: SolverParams,
                  specs: Sequence[FilterSpec], run_time: float, sample_interval: int = 1,
                  resume: ResumePoint | None = None,
                  checkpoint_interval: int = 0,
                  on_checkpoint: Callable[[ResumePoint], None] | None = None,
                  stop_after: int | None = None, cfl_interval: int = 1) -> MemberRun:
    """Drive residual trackers for ``specs`` along the trajectory from ``start``.

    Samples are taken at step ``0`` and every ``sample_interval`` steps; the
    CFL supremum is taken every ``cfl_interval`` steps.
    ``stop_after`` ends the run early at that step (used to emulate an
    interrupted job).
    """
    kernel = Kernel(params, force)
    nsteps = step_count(run_time, params.h)
    if resume is None:
        n0, w = 0, start.coeffs.copy()
        tracker = ResidualTracker(kernel, specs)
        times, sq, vnorms = [0.0], [tracker.sq_norms()], [math.sqrt(sq_l2_norm(w))]
    else:
        n0, w = resume.n, resume.omega.copy()
        tracker = ResidualTracker(kernel, specs, resume.rho)
        times, sq, vnorms = list(resume.times), [list(r) for r in resume.sq_norms], list(resume.vorticity_norms)
    end = nsteps if stop_after is None else min(nsteps, stop_after)
    cfl = 0.0 if resume is None else resume.cfl_max
    for n in range(n0, end):
        parts = kernel.physical_parts(w)
        if n % cfl_interval == 0:
            cfl = max(cfl, kernel.cfl(parts))
        adv = kernel.advection(w, parts)
        tracker.accumulate(w, parts)
        w = kernel.advance(w, adv)
        if not np.isfinite(w).all():
            raise BlowUpError(n + 1, member)
        if (n + 1) % sample_interval == 0:
            times.append((n + 1) * params.h)
            sq.append(tracker.sq_norms())
            vnorms.append(math.sqrt(sq_l2_norm(w)))
        if checkpoint_interval and on_checkpoint and (n + 1) % checkpoint_interval == 0:
            on_checkpoint(ResumePoint(n + 1, w.copy(), tracker.rho.copy(), list(times),
                                      [list(r) for r in sq], list(vnorms), cfl))
    return MemberRun(member, np.array(times), np.array(sq, dtype=float).reshape(len(times), len(specs)),
                     TrajectoryState(0, start), TrajectoryState(end, SpectralField(params.K, w)),
                     tracker.rho, np.array(vnorms), cfl)


@dataclass
class EnsembleResult:
    specs: list[FilterSpec]
    times: np.ndarray
    erms: np.ndarray  # (n_samples, n_specs)
    members: list[MemberRun]
    spinups: list[SpinUp]

    def column(self, spec: FilterSpec) -> np.ndarray:
        return self.erms[:, self.specs.index(spec)]


def reduce_members(runs: Sequence[MemberRun]) -> np.ndarray:
    """Ensemble RMS per sample and filter, reduced in member order."""
    nsamp, nspec = runs[0].sq_norms.shape
    out = np.empty((nsamp, nspec))
    for i in range(nsamp):
        for s in range(nspec):
            out[i, s] = ensemble_rms([r.sq_norms[i, s] for r in runs])
    return out


def _member_job(args):
    j, cfg, specs, force, params = args
    initial = synthesize_initial(cfg.seed, j, cfg.target_spectrum, params.K)
    spin = spin_up(initial, force, params, cfg.spinup_time, cfg.energy_interval, member=j)
    run = run_residuals(j, spin.state.omega, force, params, specs, cfg.run_time, cfg.sample_interval)
    log.info("member %d done: final |rho|^2 = %s", j, run.sq_norms[-1])
    return spin, run


def run_ensemble(cfg: EnsembleConfig, specs: Sequence[FilterSpec], force: ForcingField | None,
                 params: SolverParams, workers: int = 1) -> EnsembleResult:
    """Synthesize, spin up and run every member, then reduce to the ensemble RMS."""
    specs = list(specs)
    if not specs:
        raise ValueError("at least one filter is required")
    jobs = [(j, cfg, specs, force, params) for j in range(cfg.size)]
    if workers > 1 and cfg.size > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_member_job, jobs))
    else:
        results = [_member_job(job) for job in jobs]
    spins = [s for s, _ in results]
    runs = [r for _, r in results]
    return EnsembleResult(specs, runs[0].times, reduce_members(runs), runs, spins)

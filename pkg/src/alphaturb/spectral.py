"""Fourier bookkeeping for zero-mean 2π-periodic scalar fields.

Coefficients live on the square truncation ``-K <= k1, k2 <= K`` with the
mean mode excluded.  Storage is the Hermitian half-spectrum: an array of
shape ``(2K+1, K+1)`` indexed ``[k1 + K, k2]`` for ``k2 >= 0``.  The ``k2 = 0``
column holds both signs of ``k1`` and is kept exactly conjugate-symmetric;
modes with ``k2 < 0`` are implied by ``c(-k) = conj(c(k))``.

Physical samples sit at ``x_ij = 2π(i, j)/M`` with axis 0 along ``x1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np

FOUR_PI_SQ = 4.0 * math.pi**2

# relative tolerance used to decide whether supplied coefficients are Hermitian
HERMITIAN_RTOL = 1e-12


def shell_of(ksq):
    """Shell index r with r - 1/2 < |k| <= r + 1/2 (no ties occur for integer k)."""
    return np.floor(np.sqrt(np.asarray(ksq, dtype=float)) + 0.5).astype(np.int64)


class SpectralGrid:
    """Wavenumber tables for one truncation ``K``.

    Use :func:`grid` to obtain shared cached instances.
    """

    def __init__(self, K: int):
        if K < 1:
            raise ValueError(f"truncation K must be positive, got {K}")
        self.K = K
        k1 = np.arange(-K, K + 1)[:, None]
        k2 = np.arange(0, K + 1)[None, :]
        self.k1 = np.broadcast_to(k1, (2 * K + 1, K + 1)).copy()
        self.k2 = np.broadcast_to(k2, (2 * K + 1, K + 1)).copy()
        self.ksq = self.k1**2 + self.k2**2
        self.mean_mode = (K, 0)
        for a in (self.k1, self.k2, self.ksq):
            a.flags.writeable = False

    @cached_property
    def shape(self) -> tuple[int, int]:
        return (2 * self.K + 1, self.K + 1)

    @cached_property
    def inv_ksq(self) -> np.ndarray:
        out = np.zeros(self.shape)
        nz = self.ksq > 0
        out[nz] = 1.0 / self.ksq[nz]
        out.flags.writeable = False
        return out

    @cached_property
    def weight(self) -> np.ndarray:
        """Multiplicity of each stored entry in sums over the full square."""
        w = np.full(self.shape, 2.0)
        w[:, 0] = 1.0
        w[self.mean_mode] = 0.0
        w.flags.writeable = False
        return w

    @cached_property
    def shell(self) -> np.ndarray:
        s = shell_of(self.ksq)
        s[self.mean_mode] = 0
        s.flags.writeable = False
        return s

    @cached_property
    def nshells(self) -> int:
        return int(self.shell.max())

    @cached_property
    def order(self) -> np.ndarray:
        """Flat traversal order: ascending |k|², then lexicographic (k1, k2)."""
        return np.lexsort((self.k2.ravel(), self.k1.ravel(), self.ksq.ravel()))

    @cached_property
    def shell_counts(self) -> np.ndarray:
        """Number of k in the full square (both signs) per shell, index r."""
        counts = np.bincount(self.shell.ravel(), weights=self.weight.ravel(),
                             minlength=self.nshells + 1)
        return counts.astype(np.int64)

    def weighted_shell_sums(self, values: np.ndarray) -> np.ndarray:
        """Sum ``weight * values`` per shell in the fixed traversal order.

        Entry ``r`` of the result is shell ``r``; entry 0 is always zero.
        """
        v = (self.weight * values).ravel()[self.order]
        return np.bincount(self.shell.ravel()[self.order], weights=v,
                           minlength=self.nshells + 1)

    # transforms on raw half-spectrum arrays -----------------------------

    def check_physical_size(self, M: int) -> None:
        if M < 2 * self.K + 2:
            raise ValueError(f"grid size M={M} too small for K={self.K} (need M >= 2K+2)")

    def to_grid(self, coeffs: np.ndarray, M: int) -> np.ndarray:
        """Evaluate the Fourier sum on the ``M x M`` grid."""
        K = self.K
        buf = np.zeros((M, M // 2 + 1), dtype=complex)
        buf[: K + 1, : K + 1] = coeffs[K:]
        buf[M - K:, : K + 1] = coeffs[:K]
        return np.fft.irfft2(buf, s=(M, M), norm="forward")

    def from_grid(self, samples: np.ndarray) -> np.ndarray:
        """Truncated discrete Fourier coefficients of real samples."""
        K = self.K
        M = samples.shape[0]
        F = np.fft.rfft2(samples, norm="forward")
        out = np.empty(self.shape, dtype=complex)
        out[:K] = F[M - K:, : K + 1]
        out[K:] = F[: K + 1, : K + 1]
        out[self.mean_mode] = 0.0
        symmetrize(out)
        return out


@lru_cache(maxsize=None)
def grid(K: int) -> SpectralGrid:
    return SpectralGrid(K)


def symmetrize(coeffs: np.ndarray) -> None:
    """Force exact conjugate symmetry of the ``k2 = 0`` column in place."""
    col = coeffs[:, 0]
    coeffs[:, 0] = 0.5 * (col + np.conj(col[::-1]))


def hermitian_defect(coeffs: np.ndarray) -> float:
    K = (coeffs.shape[0] - 1) // 2
    col = coeffs[:, 0]
    return float(max(np.max(np.abs(col - np.conj(col[::-1]))), abs(coeffs[K, 0])))


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Fourier coefficients of a real zero-mean field on the square truncation."""

    K: int
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex)
        shape = (2 * self.K + 1, self.K + 1)
        if c.shape != shape:
            raise ValueError(f"coefficient array has shape {c.shape}, expected {shape}")
        scale = float(np.max(np.abs(c))) if c.size else 0.0
        if hermitian_defect(c) > HERMITIAN_RTOL * max(scale, 1e-300):
            raise ValueError("coefficients are not Hermitian symmetric")
        symmetrize(c)
        c[self.K, 0] = 0.0
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zeros(cls, K: int) -> "SpectralField":
        return cls(K, np.zeros((2 * K + 1, K + 1), dtype=complex))

    @classmethod
    def from_full(cls, K: int, full: np.ndarray) -> "SpectralField":
        """Build from a ``(2K+1, 2K+1)`` array indexed ``[k1 + K, k2 + K]``."""
        full = np.asarray(full, dtype=complex)
        if full.shape != (2 * K + 1, 2 * K + 1):
            raise ValueError(f"full array has shape {full.shape}")
        mirror = np.conj(full[::-1, ::-1])
        scale = float(np.max(np.abs(full))) if full.size else 0.0
        if np.max(np.abs(full - mirror)) > HERMITIAN_RTOL * max(scale, 1e-300):
            raise ValueError("coefficients are not Hermitian symmetric")
        if abs(full[K, K]) > HERMITIAN_RTOL * max(scale, 1e-300):
            raise ValueError("mean mode must vanish")
        return cls(K, full[:, K:])

    @classmethod
    def from_modes(cls, K: int, modes: dict) -> "SpectralField":
        """Set listed modes (and their conjugates) from ``{(k1, k2): value}``."""
        full = np.zeros((2 * K + 1, 2 * K + 1), dtype=complex)
        for (k1, k2), v in modes.items():
            full[k1 + K, k2 + K] = v
            full[-k1 + K, -k2 + K] = np.conj(v)
        return cls.from_full(K, full)

    def full(self) -> np.ndarray:
        K = self.K
        out = np.zeros((2 * K + 1, 2 * K + 1), dtype=complex)
        out[:, K:] = self.coeffs
        out[:, :K] = np.conj(self.coeffs[::-1, :0:-1])
        return out

    def coeff(self, k1: int, k2: int) -> complex:
        K = self.K
        if max(abs(k1), abs(k2)) > K:
            return 0j
        if k2 < 0:
            return complex(np.conj(self.coeffs[-k1 + K, -k2]))
        return complex(self.coeffs[k1 + K, k2])

    @property
    def grid(self) -> SpectralGrid:
        return grid(self.K)

    def _check(self, other: "SpectralField") -> None:
        if other.K != self.K:
            raise ValueError(f"truncation mismatch: {self.K} vs {other.K}")

    def __add__(self, other):
        self._check(other)
        return SpectralField(self.K, self.coeffs + other.coeffs)

    def __sub__(self, other):
        self._check(other)
        return SpectralField(self.K, self.coeffs - other.coeffs)

    def __mul__(self, scalar):
        return SpectralField(self.K, self.coeffs * float(scalar))

    __rmul__ = __mul__

    def __neg__(self):
        return SpectralField(self.K, -self.coeffs)

    def equals(self, other: "SpectralField") -> bool:
        """Bitwise equality of the stored coefficients."""
        return self.K == other.K and np.array_equal(self.coeffs, other.coeffs)


@dataclass(frozen=True, eq=False)
class PhysicalField:
    """Real samples on the uniform ``M x M`` grid over ``[0, 2π)²``."""

    samples: np.ndarray

    def __post_init__(self):
        s = np.array(self.samples, dtype=float)
        if s.ndim != 2 or s.shape[0] != s.shape[1]:
            raise ValueError(f"samples must be a square 2D array, got shape {s.shape}")
        s.flags.writeable = False
        object.__setattr__(self, "samples", s)

    @property
    def M(self) -> int:
        return self.samples.shape[0]


def grid_points(M: int) -> tuple[np.ndarray, np.ndarray]:
    x = 2 * np.pi * np.arange(M) / M
    return np.meshgrid(x, x, indexing="ij")


def to_physical(f: SpectralField, M: int) -> PhysicalField:
    g = f.grid
    g.check_physical_size(M)
    return PhysicalField(g.to_grid(f.coeffs, M))


def to_spectral(g: PhysicalField, K: int) -> SpectralField:
    sg = grid(K)
    sg.check_physical_size(g.M)
    return SpectralField(K, sg.from_grid(g.samples))


def dealias_size(K: int) -> int:
    """Smallest grid that holds quadratic products of ``K``-truncated fields exactly."""
    return 3 * K + 1


def dealiased_product(a: SpectralField, b: SpectralField, M: int | None = None) -> SpectralField:
    """Truncation of the exact convolution of ``a`` and ``b``.

    With ``M >= 3K+1`` every aliased contribution lands outside the truncation.
    """
    a._check(b)
    K = a.K
    M = dealias_size(K) if M is None else M
    if M < dealias_size(K):
        raise ValueError(f"grid size M={M} aliases quadratic products for K={K} (need M >= 3K+1)")
    g = a.grid
    prod = g.to_grid(a.coeffs, M) * g.to_grid(b.coeffs, M)
    return SpectralField(K, g.from_grid(prod))


def sq_l2_norm(coeffs: np.ndarray) -> float:
    """``4π² Σ |c_k|²`` over the full square, summed shell by shell."""
    K = (coeffs.shape[0] - 1) // 2
    shells = FOUR_PI_SQ * grid(K).weighted_shell_sums(np.abs(coeffs) ** 2)
    total = 0.0
    for v in shells[1:].tolist():
        total += v
    return total


def l2_norm(f: SpectralField) -> float:
    return math.sqrt(sq_l2_norm(f.coeffs))


def shell_decompose(f: SpectralField) -> dict[int, float]:
    """Per-shell ``4π² Σ |c_k|²`` for shells r = 1, 2, ...

    ``l2_norm(f)**2`` is the sum of these values taken in ascending ``r``.
    """
    sums = FOUR_PI_SQ * f.grid.weighted_shell_sums(np.abs(f.coeffs) ** 2)
    return {r: float(sums[r]) for r in range(1, len(sums))}

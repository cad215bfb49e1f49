"""Shared fixtures and independent oracles.

The oracles here deliberately avoid the package's FFT code paths: Fourier
sums are evaluated term by term and convolutions by looping over all index
pairs of the full square.
"""

from __future__ import annotations

import itertools
import math

import numpy as np
import pytest

from alphaturb.spectral import SpectralField


def random_field(K: int, rng: np.random.Generator, scale: float = 1.0, decay: float = 0.0) -> SpectralField:
    """Random real zero-mean field with amplitudes ~ scale * |k|^-decay."""
    n = 2 * K + 1
    k = np.arange(-K, K + 1)
    ksq = k[:, None] ** 2 + k[None, :] ** 2
    amp = scale * np.where(ksq > 0, np.maximum(ksq, 1.0) ** (-decay / 2), 0.0)
    Z = amp * (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
    full = Z + np.conj(Z[::-1, ::-1])
    full[K, K] = 0.0
    return SpectralField.from_full(K, full)


def modes(K: int):
    return [(a, b) for a in range(-K, K + 1) for b in range(-K, K + 1)]


def slow_synthesis(f: SpectralField, M: int) -> np.ndarray:
    """Evaluate Σ_k c_k exp(i k·x) at x = 2π(j1, j2)/M, term by term."""
    x = 2 * np.pi * np.arange(M) / M
    X1, X2 = np.meshgrid(x, x, indexing="ij")
    out = np.zeros((M, M), dtype=complex)
    for k1, k2 in modes(f.K):
        c = f.coeff(k1, k2)
        if c != 0:
            out += c * np.exp(1j * (k1 * X1 + k2 * X2))
    return out


def slow_analysis(samples: np.ndarray, K: int) -> dict:
    """Discrete Fourier coefficients (1/M²) Σ_x g(x) exp(-i k·x) for k in the truncation."""
    M = samples.shape[0]
    j = np.arange(M)
    out = {}
    for k1, k2 in modes(K):
        e1 = np.exp(-2j * np.pi * k1 * j / M)
        e2 = np.exp(-2j * np.pi * k2 * j / M)
        out[(k1, k2)] = complex(e1 @ samples @ e2) / M**2
    return out


def brute_convolution(a: SpectralField, b: SpectralField) -> dict:
    """(ab)_k = Σ_{p+q=k} a_p b_q for k in the truncation, p, q in the full square."""
    K = a.K
    A, B = a.full(), b.full()
    out = {k: 0j for k in modes(K)}
    for p, q in itertools.product(modes(K), repeat=2):
        k = (p[0] + q[0], p[1] + q[1])
        if k in out:
            out[k] += A[p[0] + K, p[1] + K] * B[q[0] + K, q[1] + K]
    return out


def brute_advection(omega: SpectralField, weight=None) -> dict:
    """(u·∇ω)_k = Σ_{p+q=k} (u_p · i q) ω_q with u_p = i (p2, -p1) ω_p / |p|².

    ``weight(|p|²)`` multiplies u_p (a filter on the advecting velocity).
    """
    K = omega.K
    W = omega.full()
    out = {k: 0j for k in modes(K)}
    for p, q in itertools.product(modes(K), repeat=2):
        if p == (0, 0) or q == (0, 0):
            continue
        k = (p[0] + q[0], p[1] + q[1])
        if k not in out:
            continue
        wp = W[p[0] + K, p[1] + K]
        wq = W[q[0] + K, q[1] + K]
        psq = p[0] ** 2 + p[1] ** 2
        u1, u2 = 1j * p[1] * wp / psq, -1j * p[0] * wp / psq
        if weight is not None:
            u1, u2 = weight(psq) * u1, weight(psq) * u2
        out[k] += (u1 * 1j * q[0] + u2 * 1j * q[1]) * wq
    out[(0, 0)] = 0j
    return out


def dict_error(got: SpectralField, want: dict) -> float:
    return max(abs(got.coeff(*k) - v) for k, v in want.items())


def hermitian_ok(f: SpectralField) -> bool:
    full = f.full()
    return bool(np.array_equal(full, np.conj(full[::-1, ::-1])))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def four_pi_sq() -> float:
    return 4 * math.pi**2


# acceptance reporting -----------------------------------------------------

ACCEPTANCE: dict[int, tuple[str, bool, str]] = {}


def record_acceptance(number: int, title: str, ok: bool, detail: str) -> None:
    ACCEPTANCE[number] = (title, ok, detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        title, ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d} {'PASS' if ok else 'FAIL'}  {title}: {detail}")

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from alphaturb.spectral import (PhysicalField, SpectralField, dealias_size, dealiased_product, grid,
                                grid_points, l2_norm, shell_decompose, sq_l2_norm, to_physical, to_spectral)

from conftest import brute_convolution, dict_error, hermitian_ok, random_field, slow_analysis, slow_synthesis


class TestSpectralField:
    def test_zero_mean_enforced(self):
        full = np.zeros((5, 5), dtype=complex)
        full[2, 2] = 1.0
        with pytest.raises(ValueError, match="mean"):
            SpectralField.from_full(2, full)

    def test_non_hermitian_rejected(self):
        full = np.zeros((5, 5), dtype=complex)
        full[3, 2] = 1.0  # k = (1, 0) without its conjugate
        with pytest.raises(ValueError, match="Hermitian"):
            SpectralField.from_full(2, full)

    def test_bad_shape(self):
        with pytest.raises(ValueError, match="shape"):
            SpectralField(3, np.zeros((7, 3)))

    def test_from_modes_sets_conjugates(self):
        f = SpectralField.from_modes(3, {(1, 2): 1 + 2j, (-2, 0): 0.5j})
        assert f.coeff(1, 2) == 1 + 2j
        assert f.coeff(-1, -2) == 1 - 2j
        assert f.coeff(2, 0) == -0.5j
        assert f.coeff(4, 0) == 0
        assert hermitian_ok(f)

    def test_immutable(self):
        f = SpectralField.zeros(2)
        with pytest.raises(ValueError):
            f.coeffs[0, 0] = 1.0

    def test_arithmetic_preserves_symmetry(self, rng):
        a, b = random_field(4, rng), random_field(4, rng)
        for g in (a + b, a - b, 2.5 * a, -a):
            assert hermitian_ok(g)
        assert (a - a).equals(SpectralField.zeros(4))


class TestToPhysical:
    def test_zero(self):
        assert np.all(to_physical(SpectralField.zeros(3), 8).samples == 0)

    def test_cosine(self):
        f = SpectralField.from_modes(3, {(1, 0): 0.5})
        x1, _ = grid_points(8)
        np.testing.assert_allclose(to_physical(f, 8).samples, np.cos(x1), atol=1e-15)

    def test_matches_slow_synthesis(self, rng):
        f = random_field(6, rng)
        got = to_physical(f, 20).samples
        want = slow_synthesis(f, 20)
        assert np.max(np.abs(want.imag)) < 1e-12
        np.testing.assert_allclose(got, want.real, atol=1e-12)

    def test_round_trip_k10_m64(self, rng):
        f = random_field(10, rng)
        back = to_spectral(to_physical(f, 64), 10)
        err = np.max(np.abs(back.coeffs - f.coeffs)) / np.max(np.abs(f.coeffs))
        assert err < 1e-13

    def test_grid_too_small(self):
        with pytest.raises(ValueError, match="too small"):
            to_physical(SpectralField.zeros(4), 9)

    def test_mean_of_samples_vanishes(self, rng):
        s = to_physical(random_field(5, rng), 16).samples
        assert abs(s.mean()) < 1e-14 * np.abs(s).max()


class TestToSpectral:
    def test_constant_drops_to_zero(self):
        f = to_spectral(PhysicalField(np.full((16, 16), 3.0)), 5)
        assert f.equals(SpectralField.zeros(5))

    def test_cosine(self):
        x1, _ = grid_points(16)
        f = to_spectral(PhysicalField(np.cos(x1)), 5)
        assert abs(f.coeff(1, 0) - 0.5) < 1e-14
        assert abs(f.coeff(-1, 0) - 0.5) < 1e-14
        rest = f.full().copy()
        rest[6, 5] = rest[4, 5] = 0
        assert np.max(np.abs(rest)) < 1e-14

    def test_random_matches_slow_dft(self, rng):
        samples = rng.standard_normal((32, 32))
        f = to_spectral(PhysicalField(samples), 5)
        want = slow_analysis(samples, 5)
        want[(0, 0)] = 0.0
        assert dict_error(f, want) < 1e-13


@settings(max_examples=25, deadline=None)
@given(K=st.integers(1, 16), extra=st.integers(0, 12), seed=st.integers(0, 2**32 - 1))
def test_round_trip_property(K, extra, seed):
    f = random_field(K, np.random.default_rng(seed))
    M = 2 * K + 2 + extra
    back = to_spectral(to_physical(f, M), K)
    assert hermitian_ok(back)
    assert np.max(np.abs(back.coeffs - f.coeffs)) <= 1e-13 * np.max(np.abs(f.coeffs))


class TestDealiasedProduct:
    def test_two_single_modes(self):
        a = SpectralField.from_modes(2, {(1, 0): 2.0})
        b = SpectralField.from_modes(2, {(0, 1): 3.0j})
        p = dealiased_product(a, b)
        # a = 4 cos x1, b = -6 sin x2; the product only has (±1, ±1) modes
        assert abs(p.coeff(1, 1) - 6j) < 1e-14
        assert abs(p.coeff(-1, -1) + 6j) < 1e-14
        assert abs(p.coeff(1, -1) - 2.0 * -3.0j) < 1e-14
        nonzero = {(k1, k2) for k1 in range(-2, 3) for k2 in range(-2, 3) if abs(p.coeff(k1, k2)) > 1e-14}
        assert nonzero == {(1, 1), (-1, -1), (1, -1), (-1, 1)}

    def test_zero(self, rng):
        p = dealiased_product(SpectralField.zeros(3), random_field(3, rng))
        assert np.max(np.abs(p.coeffs)) == 0.0

    @pytest.mark.parametrize("K", [1, 2, 3, 4])
    def test_brute_force(self, K, rng):
        for _ in range(3):
            a, b = random_field(K, rng), random_field(K, rng)
            want = brute_convolution(a, b)
            want[(0, 0)] = 0.0  # zero-mean convention
            p = dealiased_product(a, b)
            assert dict_error(p, want) < 1e-12
            assert hermitian_ok(p)

    def test_aliasing_grid_rejected(self, rng):
        a = random_field(4, rng)
        with pytest.raises(ValueError, match="3K\\+1"):
            dealiased_product(a, a, M=12)

    def test_dealias_size(self):
        assert dealias_size(85) == 256


class TestNorms:
    def test_zero(self):
        assert l2_norm(SpectralField.zeros(3)) == 0.0
        assert all(v == 0 for v in shell_decompose(SpectralField.zeros(3)).values())

    def test_cosine_pair(self):
        f = SpectralField.from_modes(3, {(1, 0): 0.5})
        assert math.isclose(l2_norm(f), math.pi * math.sqrt(2), rel_tol=1e-15)

    def test_parseval(self, rng):
        f = random_field(8, rng)
        s = to_physical(f, 64).samples
        quad = math.sqrt(np.sum(s**2) * (2 * math.pi / 64) ** 2)
        assert math.isclose(l2_norm(f), quad, rel_tol=1e-12)

    def test_single_shell(self):
        c = 0.3
        f = SpectralField.from_modes(6, {(3, 4): math.sqrt(c)})
        shells = shell_decompose(f)
        assert math.isclose(shells[5], 8 * math.pi**2 * c, rel_tol=1e-15)
        assert all(v == 0 for r, v in shells.items() if r != 5)

    def test_partition_is_exact(self, rng):
        for K in (3, 8, 21):
            f = random_field(K, rng)
            total = 0.0
            for r in sorted(shell_decompose(f)):
                total += shell_decompose(f)[r]
            assert total == sq_l2_norm(f.coeffs)

    def test_partition_against_full_square(self, rng):
        f = random_field(7, rng)
        want = 4 * math.pi**2 * np.sum(np.abs(f.full()) ** 2)
        assert math.isclose(sum(shell_decompose(f).values()), want, rel_tol=1e-13)


class TestGrid:
    def test_shell_counts_match_enumeration(self):
        K = 6
        g = grid(K)
        counts = np.zeros(g.nshells + 1, dtype=int)
        for k1 in range(-K, K + 1):
            for k2 in range(-K, K + 1):
                if (k1, k2) != (0, 0):
                    counts[int(math.floor(math.hypot(k1, k2) + 0.5))] += 1
        np.testing.assert_array_equal(g.shell_counts, counts)

    def test_traversal_order(self):
        g = grid(3)
        ks = [(int(g.ksq.ravel()[i]), int(g.k1.ravel()[i]), int(g.k2.ravel()[i])) for i in g.order]
        assert ks == sorted(ks)

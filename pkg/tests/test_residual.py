import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from alphaturb.filters import INF, FilterSpec
from alphaturb.residual import (ResidualState, ResidualTracker, accumulate, ensemble_rms, residual_velocity,
                                rms_over_ensemble, velocity_form_rms)
from alphaturb.solver import Kernel, SolverParams, TrajectoryState, make_force
from alphaturb.spectral import SpectralField, grid, l2_norm

from conftest import brute_advection, hermitian_ok, random_field


def params(K, h=0.01):
    return SolverParams(2e-3, h, K, 3 * K + 1)


class TestAccumulate:
    def test_starts_at_zero(self):
        r = ResidualState.start(FilterSpec(0, 0.1), 4)
        assert r.n == 0 and r.rho.equals(SpectralField.zeros(4))

    def test_identity_filter_is_exactly_zero(self, rng):
        p = params(6)
        res = ResidualState.start(FilterSpec(0, 0.0), 6)
        state = TrajectoryState(0, random_field(6, rng))
        res = accumulate(res, state, p)
        assert np.all(res.rho.coeffs == 0)

    @pytest.mark.parametrize("k", [(1, 0), (3, -2)])
    def test_single_mode_gives_zero(self, k):
        p = params(5)
        w = SpectralField.from_modes(5, {k: 1.3 + 0.4j})
        res = accumulate(ResidualState.start(FilterSpec(0, 0.2), 5), TrajectoryState(0, w), p)
        assert np.max(np.abs(res.rho.coeffs)) < 1e-15

    @pytest.mark.parametrize("extra", [(0, 1), (1, 2)])
    def test_two_modes_against_brute_force(self, extra):
        K, h, a0 = 3, 0.01, 0.2
        w = SpectralField.from_modes(K, {(1, 0): 0.5, extra: 0.3 - 0.1j})
        res = accumulate(ResidualState.start(FilterSpec(0, a0), K), TrajectoryState(0, w), params(K, h))
        filtered = brute_advection(w, weight=lambda ksq: 1 / (1 + a0 * a0 * ksq))
        plain = brute_advection(w)
        err = max(abs(res.rho.coeff(*k) - h * (filtered[k] - plain[k])) for k in plain)
        assert err < 1e-12
        assert res.n == 1

    def test_misaligned_rejected(self, rng):
        res = ResidualState(FilterSpec(0, 0.1), SpectralField.zeros(3), n=2)
        with pytest.raises(ValueError, match="step"):
            accumulate(res, TrajectoryState(3, random_field(3, rng)), params(3))

    def test_zero_vorticity_adds_nothing(self, rng):
        rho = random_field(4, rng)
        res = ResidualState(FilterSpec(INF, 0.1), rho, 0)
        out = accumulate(res, TrajectoryState(0, SpectralField.zeros(4)), params(4))
        assert out.rho.equals(rho)

    def test_does_not_depend_on_force(self, rng):
        """The update reads only the exact trajectory, never model dynamics."""
        p = params(6)
        w = random_field(6, rng, decay=1.0)
        kernel_a, kernel_b = Kernel(p), Kernel(p, make_force(1, 1e4, p.nu, 6))
        ta = ResidualTracker(kernel_a, [FilterSpec(4, 0.1)])
        tb = ResidualTracker(kernel_b, [FilterSpec(4, 0.1)])
        ta.accumulate(w.coeffs, kernel_a.physical_parts(w.coeffs))
        tb.accumulate(w.coeffs, kernel_b.physical_parts(w.coeffs))
        assert np.array_equal(ta.rho, tb.rho)


class TestTracker:
    def test_batched_equals_single(self, rng):
        p = params(7)
        kernel = Kernel(p)
        specs = [FilterSpec(0, 0.05), FilterSpec(4, 0.2), FilterSpec(INF, 0.1), FilterSpec(0, 0.0)]
        w = random_field(7, rng, decay=1.0)
        parts = kernel.physical_parts(w.coeffs)
        many = ResidualTracker(kernel, specs)
        many.accumulate(w.coeffs, parts)
        for i, s in enumerate(specs):
            one = accumulate(ResidualState.start(s, 7), TrajectoryState(0, w), p)
            np.testing.assert_allclose(many.rho[i], one.rho.coeffs, rtol=0, atol=1e-15)
        assert np.all(many.rho[3] == 0)

    def test_identity_stays_zero_along_trajectory(self, rng):
        p = params(6, h=1 / 64)
        kernel = Kernel(p, make_force(2, 2.5e4, p.nu, 6))
        tracker = ResidualTracker(kernel, [FilterSpec(0, 0.0), FilterSpec(0, 0.1)])
        w = random_field(6, rng, scale=0.1, decay=1.5).coeffs
        for _ in range(200):
            parts = kernel.physical_parts(w)
            adv = kernel.advection(w, parts)
            tracker.accumulate(w, parts)
            w = kernel.advance(w, adv)
            assert np.isfinite(w).all()
        assert np.all(tracker.rho[0] == 0)
        assert tracker.sq_norms()[0] == 0.0 and tracker.sq_norms()[1] > 0

    def test_states_are_hermitian(self, rng):
        p = params(5)
        kernel = Kernel(p)
        tracker = ResidualTracker(kernel, [FilterSpec(1, 0.3)])
        w = random_field(5, rng).coeffs
        tracker.accumulate(w, kernel.physical_parts(w))
        (st0,) = tracker.states(1)
        assert hermitian_ok(st0.rho) and st0.n == 1

    def test_shape_check(self):
        with pytest.raises(ValueError, match="shape"):
            ResidualTracker(Kernel(params(3)), [FilterSpec(0, 0.1)], np.zeros((2, 7, 4)))


class TestResidualVelocity:
    def test_zero(self):
        R1, R2 = residual_velocity(ResidualState.start(FilterSpec(0, 0.1), 3))
        assert np.all(R1.coeffs == 0) and np.all(R2.coeffs == 0)

    def test_single_mode(self):
        rho = SpectralField.from_modes(3, {(1, 0): 1.0})
        R1, R2 = residual_velocity(ResidualState(FilterSpec(0, 0.1), rho))
        assert R2.coeff(1, 0) == -1j and R1.coeff(1, 0) == 0

    def test_divergence_free(self, rng):
        R1, R2 = residual_velocity(ResidualState(FilterSpec(0, 0.1), random_field(6, rng)))
        g = grid(6)
        div = np.abs(g.k1 * R1.coeffs + g.k2 * R2.coeffs)
        assert np.max(div) <= 4 * np.finfo(float).eps * np.max(np.abs(R1.coeffs) + np.abs(R2.coeffs)) * 6


class TestEnsembleRMS:
    spec = FilterSpec(0, 0.1)

    def test_zero(self):
        assert rms_over_ensemble([ResidualState.start(self.spec, 3)] * 2) == 0.0

    def test_cosine_pair(self):
        rho = SpectralField.from_modes(3, {(1, 0): 0.5})
        val = rms_over_ensemble([ResidualState(self.spec, rho)])
        assert val == pytest.approx(math.pi * math.sqrt(2), rel=1e-15)

    def test_duplicates(self, rng):
        r = ResidualState(self.spec, random_field(4, rng))
        assert rms_over_ensemble([r, r]) == pytest.approx(rms_over_ensemble([r]), rel=1e-15)

    def test_empty(self):
        with pytest.raises(ValueError):
            rms_over_ensemble([])
        with pytest.raises(ValueError):
            ensemble_rms([])

    def test_mismatched(self):
        a = ResidualState.start(self.spec, 3)
        b = ResidualState.start(FilterSpec(1, 0.1), 3)
        with pytest.raises(ValueError):
            rms_over_ensemble([a, b])
        with pytest.raises(ValueError):
            rms_over_ensemble([a, ResidualState.start(self.spec, 3, n=1)])

    def test_single_member_is_norm(self, rng):
        rho = random_field(5, rng)
        assert rms_over_ensemble([ResidualState(self.spec, rho)]) == pytest.approx(l2_norm(rho), rel=1e-15)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), members=st.integers(1, 5), K=st.integers(1, 12))
def test_rms_forms_agree(seed, members, K):
    rng = np.random.default_rng(seed)
    spec = FilterSpec(4, 0.04)
    res = [ResidualState(spec, random_field(K, rng, scale=10.0 ** rng.uniform(-6, 3))) for _ in range(members)]
    a = rms_over_ensemble(res)
    b = velocity_form_rms(res)
    assert abs(a - b) <= 1e-13 * a

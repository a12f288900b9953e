"""Reaction term, residual, weighting, losses, and the traveling-wave oracle."""

import numpy as np
import pytest

from fisher_pinn.errors import ConfigurationError, UsageError
from fisher_pinn.physics import (
    FisherProblem,
    analytical,
    analytical_jet,
    data_loss,
    physics_loss,
    reaction,
    residual,
    total_loss,
    weight,
)

# frozen with mpmath (40 digits): [1 + exp(-1/3)]^-2
ANALYTICAL_0_0004_100_10 = 0.33938804545754395


class TestReaction:
    def test_fixed_points(self):
        assert reaction(0.0, 123.0) == 0.0
        assert reaction(1.0, 123.0) == 0.0

    def test_direct_value(self):
        assert reaction(0.5, 100.0) == pytest.approx(25.0)

    def test_positive_between_fixed_points(self):
        u = np.linspace(1e-6, 1 - 1e-6, 1000)
        assert np.all(reaction(u, 10.0) > 0)

    def test_slope_properties(self):
        # F'(u) = rho (1 - 2u): F'(0) = rho > 0 and F'(u) < F'(0) on (0, 1]
        rho = 250.0
        u = np.linspace(1e-9, 1.0, 1000)
        slope = rho * (1.0 - 2.0 * u)
        assert rho > 0
        assert np.all(slope < rho)
        h = 1e-7
        fd0 = (reaction(h, rho) - reaction(-h, rho)) / (2 * h)
        assert fd0 == pytest.approx(rho, rel=1e-9)


class TestAnalytical:
    def test_quarter_at_origin(self):
        for rho in (1e2, 1e3, 1e4):
            for mu in (1.0, 10.0):
                assert analytical(0.0, 0.0, rho, mu) == pytest.approx(0.25, rel=1e-14)

    def test_frozen_value(self):
        assert analytical(0.0, 0.004, 100.0, 10.0) == pytest.approx(
            ANALYTICAL_0_0004_100_10, rel=1e-12)

    def test_tail_limits(self):
        assert analytical(50.0, 0.0, 100.0, 10.0) == pytest.approx(0.0, abs=1e-12)
        assert analytical(-50.0, 0.0, 100.0, 10.0) == pytest.approx(1.0, abs=1e-12)

    def test_extreme_arguments_stay_finite(self):
        x = np.array([-500.0, -50.0, 0.0, 50.0, 500.0])
        jet = analytical_jet(x, 0.002, 1e4, 10.0)
        for comp in jet.as_arrays():
            assert np.all(np.isfinite(comp))

    def test_jet_matches_finite_differences(self):
        rng = np.random.default_rng(3)
        x = rng.uniform(-5, 5, 50)
        t = rng.uniform(0, 0.004, 50)
        rho, mu = 1e3, 10.0
        jet = analytical_jet(x, t, rho, mu)
        hx, ht = 1e-4, 1e-9
        fd_x = (analytical(x + hx, t, rho, mu) - analytical(x - hx, t, rho, mu)) / (2 * hx)
        fd_t = (analytical(x, t + ht, rho, mu) - analytical(x, t - ht, rho, mu)) / (2 * ht)
        fd_xx = (analytical(x + hx, t, rho, mu) - 2 * analytical(x, t, rho, mu)
                 + analytical(x - hx, t, rho, mu)) / hx**2
        np.testing.assert_allclose(jet.dx, fd_x, rtol=1e-6, atol=1e-10)
        np.testing.assert_allclose(jet.dt, fd_t, rtol=1e-5, atol=1e-6)
        np.testing.assert_allclose(jet.dxx, fd_xx, rtol=1e-4, atol=1e-4)


class TestResidual:
    @pytest.mark.parametrize("rho", [1e2, 1e3, 1e4])
    def test_oracle_solves_pde(self, rho):
        rng = np.random.default_rng(11)
        x = rng.uniform(-5, 5, 1000)
        t = rng.uniform(0, 0.004, 1000)
        jet = analytical_jet(x, t, rho, 10.0)
        f = residual(jet, rho, 10.0)
        assert np.max(np.abs(f)) <= 1e-9

    def test_constant_zero_field(self):
        from fisher_pinn.autodiff import Jet

        f = residual(Jet(0.0, 0.0, 0.0, 0.0), 100.0, 10.0)
        assert f == 0.0

    def test_constant_half_field(self):
        from fisher_pinn.autodiff import Jet

        f = residual(Jet(0.5, 0.0, 0.0, 0.0), 100.0, 10.0)
        assert f == pytest.approx(-25.0)


class TestWeight:
    def test_lambda_zero_is_unweighted(self):
        u = np.linspace(0, 1, 101)
        assert np.all(weight(u, 1e4, 0.0) == 1.0)

    def test_direct_value(self):
        assert weight(0.5, 100.0, 1.0) == pytest.approx(1.0 / 26.0)

    def test_one_at_fixed_points(self):
        assert weight(0.0, 1e4, 10.0) == 1.0
        assert weight(1.0, 1e4, 10.0) == 1.0

    def test_bounds_and_monotonicity(self):
        u = np.linspace(0, 1, 201)
        rho = 1e3
        prev = None
        for lam in (0.0, 0.1, 1.0, 10.0):
            om = weight(u, rho, lam)
            assert np.all(om > 0) and np.all(om <= 1)
            if prev is not None:
                assert np.all(om <= prev)
            prev = om
        # monotone non-increasing in |F|
        om = weight(np.linspace(0, 0.5, 100), rho, 1.0)
        assert np.all(np.diff(om) <= 0)


class TestLosses:
    def test_data_loss_values(self):
        assert data_loss([1.0, 2.0], [1.0, 2.0]) == 0.0
        assert data_loss([1.1, 2.1], [1.0, 2.0]) == pytest.approx(0.01)
        assert data_loss([0.5, 0.5], [0.0, 1.0]) == pytest.approx(0.25)

    def test_data_loss_empty_rejected(self):
        with pytest.raises(UsageError):
            data_loss([], [])

    def test_physics_loss_values(self):
        assert physics_loss([0.0, 0.0], [0.3, 0.7], 1e3, 1.0) == 0.0
        assert physics_loss([2.0], [0.5], 100.0, 0.0) == pytest.approx(4.0)
        # omega = 1/26 at u=0.5, rho=100, lam=1; f=26 -> (26/26)^2
        assert physics_loss([26.0], [0.5], 100.0, 1.0) == pytest.approx(1.0)

    def test_physics_loss_lambda_zero_reduction(self):
        rng = np.random.default_rng(0)
        f = rng.normal(size=64)
        u = rng.uniform(size=64)
        assert physics_loss(f, u, 1e3, 0.0) == pytest.approx(np.mean(f**2), rel=1e-15)

    def test_physics_loss_empty_rejected(self):
        with pytest.raises(UsageError):
            physics_loss([], [], 1e3, 1.0)

    def test_total_loss(self):
        assert total_loss(0.0, 0.0) == 0.0
        assert total_loss(0.25, 1.0) == 1.25


class TestFisherProblem:
    def test_validation(self):
        with pytest.raises(ConfigurationError):
            FisherProblem(rho=-1.0)
        with pytest.raises(ConfigurationError):
            FisherProblem(rho=100.0, mu=0.0)
        with pytest.raises(ConfigurationError):
            FisherProblem(rho=100.0, lam=-0.5)
        with pytest.raises(ConfigurationError):
            FisherProblem(rho=None, rho_range=(1e3, 1e2))

    def test_generalizing_flag(self):
        assert not FisherProblem(rho=100.0).generalizing
        assert FisherProblem(rho=None, rho_range=(1e2, 1e4)).generalizing

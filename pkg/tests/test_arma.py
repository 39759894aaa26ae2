"""ARMA likelihood machinery against brute-force oracles."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

import oracles
from stepvarma import (
    ArmaSpec,
    DiagonalVarmaModel,
    IsotropicMatern,
    SimulationDesign,
    arma_autocovariance,
    arma_loglik,
    arma_residuals,
    fit_arma,
    ljung_box,
    select_arma_order,
    simulate,
)

NEG_INF = float("-inf")


def single_site_model(spec):
    return DiagonalVarmaModel(
        sites=((0.0,),), arma=(spec,), innovation=IsotropicMatern(0.3, 1.5)
    )


class TestAutocovariance:
    def test_white_noise(self):
        spec = ArmaSpec(p=0, q=0, sigma=1.2)
        gam = arma_autocovariance(spec, 3)
        assert gam[0] == pytest.approx(1.44, abs=1e-14)
        assert np.all(gam[1:] == 0.0)

    def test_ma1_closed_form(self):
        spec = ArmaSpec(p=0, q=1, sigma=1.0, pi_ma=(0.5,))
        gam = arma_autocovariance(spec, 2)
        assert gam[0] == pytest.approx(1.25, abs=1e-14)
        assert gam[1] == pytest.approx(0.5, abs=1e-14)
        assert gam[2] == 0.0

    def test_ar2_against_yule_walker_solve(self):
        # oracle: solve the 3x3 Yule-Walker system for AR(2) directly
        phi1, phi2, sigma = 0.50, 0.25, 1.2
        a = np.array(
            [
                [1.0, -phi1, -phi2],
                [-phi1, 1.0 - phi2, 0.0],
                [-phi2, -phi1, 1.0],
            ]
        )
        g0, g1, g2 = np.linalg.solve(a, np.array([sigma**2, 0.0, 0.0]))
        spec = ArmaSpec(p=2, q=0, sigma=sigma, phi=(phi1, phi2))
        gam = arma_autocovariance(spec, 2)
        assert gam == pytest.approx([g0, g1, g2], rel=1e-12)

    def test_methods_agree(self):
        cases = [
            ArmaSpec(p=2, q=0, sigma=1.2, phi=(0.5, 0.25)),
            ArmaSpec(p=1, q=1, sigma=0.7, phi=(0.8,), pi_ma=(-0.4,)),
            ArmaSpec(p=0, q=2, sigma=2.0, pi_ma=(0.3, 0.2)),
            ArmaSpec(p=3, q=1, sigma=1.0, phi=(0.4, 0.1, 0.2), pi_ma=(0.6,)),
            ArmaSpec(p=1, q=0, sigma=1.0, phi=(0.97,)),
        ]
        for spec in cases:
            exact = arma_autocovariance(spec, 10, method="exact")
            ma = arma_autocovariance(spec, 10, method="ma")
            assert np.max(np.abs(exact - ma)) <= 1e-10 * abs(exact[0])

    def test_brute_force_oracle(self):
        spec = ArmaSpec(p=2, q=1, sigma=1.3, phi=(0.4, 0.2), pi_ma=(0.5,))
        gam = arma_autocovariance(spec, 6)
        oracle = oracles.arma_gamma(spec.phi, spec.pi_ma, spec.sigma, 6)
        assert gam == pytest.approx(oracle, rel=1e-10)

    def test_nonstationary_rejected(self):
        with pytest.raises(ValueError, match="non-stationary"):
            arma_autocovariance(ArmaSpec(p=1, q=0, phi=(1.05,)), 3)


class TestLoglik:
    def test_white_noise_zeros(self):
        spec = ArmaSpec(p=0, q=0, sigma=1.0)
        assert arma_loglik(np.zeros(4), spec) == pytest.approx(
            -2.0 * np.log(2.0 * np.pi), abs=1e-12
        )

    def test_dense_oracle_many_specs(self):
        rng = np.random.default_rng(42)
        cases = [
            ArmaSpec(p=0, q=0, mu=0.4, sigma=0.8),
            ArmaSpec(p=1, q=0, mu=-1.0, sigma=1.1, phi=(0.7,)),
            ArmaSpec(p=2, q=0, sigma=1.2, phi=(0.5, 0.25)),
            ArmaSpec(p=0, q=1, mu=2.0, sigma=0.6, pi_ma=(0.5,)),
            ArmaSpec(p=1, q=1, mu=0.0, beta1=0.05, sigma=1.0, phi=(0.6,), pi_ma=(0.4,)),
            ArmaSpec(p=2, q=2, sigma=1.5, phi=(0.3, 0.2), pi_ma=(0.4, -0.1)),
        ]
        for spec in cases:
            for t in (spec.p + spec.q + 2, 17, 50):
                y = rng.standard_normal(t) * 2.0
                z = y - spec.mu - spec.beta1 * (1 + np.arange(t))
                cov = oracles.arma_toeplitz_cov(spec.phi, spec.pi_ma, spec.sigma, t)
                expected = oracles.mvn_loglik(z, cov)
                assert arma_loglik(y, spec) == pytest.approx(expected, abs=1e-8)

    def test_unit_root_sentinel(self):
        spec = ArmaSpec(p=2, q=0, sigma=1.0, phi=(1.2, 0.0))
        assert arma_loglik(np.zeros(10), spec) == NEG_INF

    def test_short_series_raises(self):
        with pytest.raises(ValueError, match="short"):
            arma_loglik(np.zeros(2), ArmaSpec(p=1, q=1, phi=(0.5,), pi_ma=(0.2,)))

    @settings(max_examples=20, deadline=None)
    @given(shift=st.floats(-100.0, 100.0, allow_nan=False))
    def test_shift_invariance(self, shift):
        rng = np.random.default_rng(3)
        y = rng.standard_normal(30)
        base = ArmaSpec(p=1, q=0, mu=0.5, sigma=1.1, phi=(0.6,))
        shifted = ArmaSpec(p=1, q=0, mu=0.5 + shift, sigma=1.1, phi=(0.6,))
        a = arma_loglik(y, base)
        b = arma_loglik(y + shift, shifted)
        assert b == pytest.approx(a, abs=1e-10 * max(1.0, abs(a)))


class TestResiduals:
    def test_white_noise_identity(self):
        y = np.array([1.0, 3.0, -2.0, 0.5])
        spec = ArmaSpec(p=0, q=0, mu=0.5, sigma=2.0)
        u = arma_residuals(y, spec)
        assert u == pytest.approx((y - 0.5) / 2.0)

    def test_ar2_whiteness_on_true_model(self):
        spec = ArmaSpec(p=2, q=0, sigma=1.2, phi=(0.5, 0.25))
        data = simulate(SimulationDesign(model=single_site_model(spec), T=400, seed=9))
        u = arma_residuals(data.values[:, 0], spec)
        rho1 = float(u[1:] @ u[:-1] / (u @ u))
        assert abs(rho1) < 2.0 / np.sqrt(u.size)
        assert abs(u.mean()) < 3.0 / np.sqrt(u.size)
        assert abs(u.std() - 1.0) < 0.15

    def test_ma1_recovers_recorded_innovations(self):
        spec = ArmaSpec(p=0, q=1, sigma=1.0, pi_ma=(0.5,))
        data, innov = simulate(
            SimulationDesign(model=single_site_model(spec), T=80, seed=21, record_innovations=True)
        )
        u = arma_residuals(data.values[:, 0], spec)
        # zero pre-sample innovations leave a transient that decays like pi^t
        err = np.abs(u - innov[:, 0])
        assert np.all(err[25:] < 1e-6)

    def test_ljung_box_under_true_model(self):
        spec = ArmaSpec(p=2, q=0, sigma=1.2, phi=(0.5, 0.25))
        model = single_site_model(spec)
        n_pass = 0
        crit = stats.chi2.ppf(0.999, df=10)
        for rep in range(30):
            data = simulate(SimulationDesign(model=model, T=200, seed=1000 + rep))
            u = arma_residuals(data.values[:, 0], spec)
            if ljung_box(u, 10) < crit:
                n_pass += 1
        assert n_pass >= 28


class TestFitArma:
    def test_recovers_ar2_at_moderate_t(self):
        spec = ArmaSpec(p=2, q=0, sigma=1.2, phi=(0.5, 0.25))
        ests = []
        for rep in range(12):
            data = simulate(SimulationDesign(model=single_site_model(spec), T=50, seed=300 + rep))
            fit = fit_arma(data.values[:, 0], 2, 0, mean_structure="zero")
            ests.append((fit.spec.sigma, *fit.spec.phi))
        mean = np.mean(ests, axis=0)
        assert mean == pytest.approx([1.2, 0.50, 0.25], abs=0.18)

    def test_long_ar1_consistency(self):
        spec = ArmaSpec(p=1, q=0, sigma=1.0, phi=(0.6,))
        data = simulate(SimulationDesign(model=single_site_model(spec), T=5000, seed=4))
        fit = fit_arma(data.values[:, 0], 1, 0, mean_structure="zero")
        assert abs(fit.spec.phi[0] - 0.6) < 0.05

    def test_constant_series_flags_boundary(self):
        y = np.full(40, 3.25)
        with pytest.warns(UserWarning, match="lower bound"):
            fit = fit_arma(y, 0, 0, mean_structure="constant")
        assert fit.boundary
        assert fit.spec.mu == pytest.approx(3.25, abs=1e-6)

    def test_trend_recovery(self):
        spec = ArmaSpec(p=1, q=0, mu=2.0, beta1=0.05, sigma=0.8, phi=(0.5,))
        data = simulate(SimulationDesign(model=single_site_model(spec), T=200, seed=8))
        fit = fit_arma(data.values[:, 0], 1, 0, mean_structure="linear")
        assert fit.spec.beta1 == pytest.approx(0.05, abs=0.02)

    def test_too_short_raises(self):
        with pytest.raises(ValueError, match="short"):
            fit_arma(np.zeros(10), 2, 0)

    def test_order_selection_prefers_truth(self):
        spec = ArmaSpec(p=2, q=0, sigma=1.0, phi=(0.6, -0.3))
        data = simulate(SimulationDesign(model=single_site_model(spec), T=400, seed=5))
        best, table = select_arma_order(
            data.values[:, 0], max_p=3, max_q=1, mean_structure="zero"
        )
        assert (best.spec.p, best.spec.q) in {(2, 0), (2, 1), (3, 0)}
        assert len(table) == 8

"""Spectral-domain likelihoods against dense (block-)circulant oracles."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from stepvarma import (
    RingSpectrum,
    SpectralMass,
    SpectralModelError,
    coherence,
    coherence_loglik,
    cross_spectral_mass,
    fit_coherence,
    fit_whittle,
    mean_periodogram,
    modified_matern_mass,
    unitary_dft,
    wavenumber_covariances,
    whittle_loglik,
)


class TestSpectralMass:
    def test_normalization_exact(self):
        for alpha, kappa, n in [(1.0, 0.5, 4), (0.3, 1.0, 288), (2.0, 3.0, 17)]:
            mass = modified_matern_mass(alpha, kappa, n)
            assert abs(mass.values.mean() - 1.0) <= 1e-12

    def test_monotone_to_nyquist_and_peak_at_zero(self):
        mass = modified_matern_mass(1.0, 0.5, 4)
        raw = (1.0 + 4.0 * np.sin(np.pi * np.arange(4) / 4) ** 2) ** -1.0
        assert mass.values == pytest.approx(raw / raw.mean(), rel=1e-14)
        assert mass.values[0] == mass.values.max()

    def test_high_precision_oracle(self):
        # recompute at higher precision via mpmath-free route: log-space sums
        alpha, kappa, n = 0.3, 1.0, 288
        mass = modified_matern_mass(alpha, kappa, n)
        c = np.arange(n, dtype=np.longdouble)
        base = np.longdouble(alpha) ** 2 + 4 * np.sin(np.pi * c / n) ** 2
        raw = base ** -(np.longdouble(kappa) + 0.5)
        expected = (raw / raw.mean()).astype(float)
        assert np.max(np.abs(mass.values - expected)) < 1e-12

    def test_invariants_rejected(self):
        with pytest.raises(ValueError):
            SpectralMass(values=np.array([1.0, 3.0]))  # mean != 1
        with pytest.raises(ValueError):
            SpectralMass(values=np.array([2.0, -0.0000001, 1.0]))

    @settings(max_examples=25, deadline=None)
    @given(
        alpha=st.floats(0.05, 5.0),
        kappa=st.floats(0.05, 5.0),
        n=st.integers(2, 64),
    )
    def test_normalization_property(self, alpha, kappa, n):
        mass = modified_matern_mass(alpha, kappa, n)
        assert abs(mass.values.mean() - 1.0) <= 1e-12
        assert np.all(mass.values > 0)


class TestRingSpectrum:
    @settings(max_examples=25, deadline=None)
    @given(st.integers(2, 40), st.integers(0, 10_000))
    def test_parseval(self, n, seed):
        ring = np.random.default_rng(seed).standard_normal(n)
        spec = RingSpectrum.from_ring(ring)
        assert float(np.sum(spec.periodogram)) == pytest.approx(
            float(ring @ ring), abs=1e-10 * max(1.0, float(ring @ ring))
        )


class TestWhittleLoglik:
    def test_white_zeros(self):
        mass = SpectralMass(values=np.ones(4))
        assert whittle_loglik(np.zeros(4), mass) == pytest.approx(
            -2.0 * np.log(2.0 * np.pi), abs=1e-12
        )

    def test_dense_circulant_oracle(self):
        rng = np.random.default_rng(0)
        for n in (4, 8, 16, 64):
            mass = modified_matern_mass(0.5, 1.1, n)
            ring = rng.standard_normal(n)
            cov = oracles.circulant_cov_from_mass(mass.values)
            assert whittle_loglik(ring, mass) == pytest.approx(
                oracles.mvn_loglik(ring, cov), abs=1e-8
            )

    def test_rotation_invariance(self):
        rng = np.random.default_rng(1)
        ring = rng.standard_normal(12)
        mass = modified_matern_mass(0.4, 0.9, 12)
        base = whittle_loglik(ring, mass)
        for shift in (1, 5, 11):
            assert whittle_loglik(np.roll(ring, shift), mass) == pytest.approx(
                base, abs=1e-10 * abs(base)
            )

    def test_zero_mass_error(self):
        mass = SpectralMass(values=np.ones(4))
        object.__setattr__(mass, "values", np.array([4.0, 0.0, 0.0, 0.0]))
        with pytest.raises(SpectralModelError):
            whittle_loglik(np.ones(4), mass)


class TestFitWhittle:
    def test_recovers_truth(self):
        from stepvarma import simulate, SimulationDesign, DiagonalVarmaModel, ArmaSpec
        from stepvarma import AxiallySymmetric

        n, tp = 64, 200
        inn = AxiallySymmetric(
            alpha_m=(0.5,), kappa_m=(1.0,), xi=0.5, tau=0.1, n_lon=n, latitudes=(0.0,)
        )
        model = DiagonalVarmaModel(
            sites=tuple((float(j), 0.0) for j in range(n)),
            arma=(ArmaSpec(p=0, q=0, sigma=1.0),) * n,
            innovation=inn,
        )
        data, innovs = simulate(
            SimulationDesign(model=model, T=tp, seed=33, record_innovations=True)
        )
        fit = fit_whittle(innovs)
        assert fit.converged
        assert fit.alpha == pytest.approx(0.5, rel=0.10)
        assert fit.kappa == pytest.approx(1.0, rel=0.10)

    def test_white_data_hits_box(self):
        rng = np.random.default_rng(5)
        rings = rng.standard_normal((4000, 4))
        with pytest.warns(UserWarning, match="parameter box"):
            fit = fit_whittle(rings)
        assert fit.boundary

    def test_objective_matches_per_ring_sum(self):
        rng = np.random.default_rng(6)
        cov = oracles.circulant_cov_from_mass(modified_matern_mass(0.6, 1.0, 16).values)
        rings = rng.standard_normal((5, 16)) @ np.linalg.cholesky(cov).T
        fit = fit_whittle(rings)
        mass = modified_matern_mass(fit.alpha, fit.kappa, 16)
        total = sum(whittle_loglik(r, mass) for r in rings)
        assert fit.loglik == pytest.approx(total, abs=1e-8 * abs(total))


class TestCoherence:
    def test_zero_separation(self):
        assert np.all(coherence(np.arange(8), 0.7, 0.5, 0.0, 8) == 1.0)

    def test_tau_zero_wavenumber_independent(self):
        vals = coherence(np.arange(8), 0.9, 0.0, 2.0, 8)
        assert np.all(vals == pytest.approx(0.81, abs=1e-14))

    def test_hand_evaluated_closed_form(self):
        # c = N/4 makes the bracket 0.9/sqrt(3); c = N/2 makes it 0.9/sqrt(5)
        assert coherence(2, 0.9, 0.5, 2.0, 8) == pytest.approx((0.9 / 3**0.5) ** 2, abs=1e-14)
        assert coherence(4, 0.9, 0.5, 2.0, 8) == pytest.approx((0.9 / 5**0.5) ** 2, abs=1e-14)

    @settings(max_examples=30, deadline=None)
    @given(
        xi=st.floats(0.05, 0.95),
        tau=st.floats(0.0, 3.0),
        sep=st.floats(0.0, 6.0),
        c=st.integers(0, 15),
    )
    def test_range_and_monotonicity(self, xi, tau, sep, c):
        val = coherence(c, xi, tau, sep, 16)
        assert 0.0 < val <= 1.0
        assert coherence(c, xi, tau, sep + 0.5, 16) <= val + 1e-15


class TestCrossSpectralMass:
    def test_same_latitude_returns_mass(self):
        f = modified_matern_mass(0.5, 1.0, 8)
        out = cross_spectral_mass(f, f, 0.9, 0.3, 0.0)
        assert out == pytest.approx(f.values, rel=1e-14)

    def test_symmetry_and_bound(self):
        f1 = modified_matern_mass(0.5, 1.0, 8)
        f2 = modified_matern_mass(1.2, 0.4, 8)
        a = cross_spectral_mass(f1, f2, 0.8, 0.2, 1.5)
        b = cross_spectral_mass(f2, f1, 0.8, 0.2, 1.5)
        assert a == pytest.approx(b, rel=1e-14)
        assert np.all(a <= np.sqrt(f1.values * f2.values) + 1e-15)


class TestCoherenceLoglik:
    def test_single_latitude_reduces_to_whittle(self):
        rng = np.random.default_rng(7)
        n, tp = 10, 6
        mass = modified_matern_mass(0.6, 0.8, n)
        u = rng.standard_normal((tp, n))
        expected = sum(whittle_loglik(u[t], mass) for t in range(tp))
        got = coherence_loglik(u, [mass], 0.5, 0.2, [0.0])
        assert got == pytest.approx(expected, abs=1e-8 * abs(expected))

    def test_vanishing_xi_decouples_latitudes(self):
        rng = np.random.default_rng(8)
        n, m, tp = 8, 3, 5
        masses = [modified_matern_mass(a, k, n) for a, k in [(0.5, 1.0), (0.7, 0.6), (1.1, 1.3)]]
        u = rng.standard_normal((tp, m * n))
        got = coherence_loglik(u, masses, 1e-12, 0.1, [0.0, 1.0, 2.0])
        expected = sum(
            whittle_loglik(u[t, mi * n : (mi + 1) * n], masses[mi])
            for t in range(tp)
            for mi in range(m)
        )
        assert got == pytest.approx(expected, abs=1e-8 * abs(expected))

    def test_dense_block_circulant_oracle(self):
        rng = np.random.default_rng(9)
        n, m, tp = 8, 3, 4
        lats = [0.0, 1.0, 2.5]
        masses = [modified_matern_mass(a, k, n) for a, k in [(0.5, 1.0), (0.8, 0.7), (0.3, 1.4)]]
        fm = np.stack([mass.values for mass in masses])
        cov = oracles.block_circulant_cov(fm, 0.85, 0.4, lats)
        u = rng.standard_normal((tp, m * n))
        expected = sum(oracles.mvn_loglik(u[t], cov) for t in range(tp))
        got = coherence_loglik(u, masses, 0.85, 0.4, lats)
        assert got == pytest.approx(expected, abs=1e-6)

    def test_wavenumber_covariances_match_cross_mass(self):
        n = 8
        lats = [0.0, 2.0]
        masses = [modified_matern_mass(0.5, 1.0, n), modified_matern_mass(0.9, 0.6, n)]
        fcov = wavenumber_covariances(masses, 0.8, 0.3, lats)
        cross = cross_spectral_mass(masses[0], masses[1], 0.8, 0.3, 2.0)
        assert fcov[:, 0, 1] == pytest.approx(cross, rel=1e-12)
        assert fcov[:, 0, 0] == pytest.approx(masses[0].values, rel=1e-12)


class TestFitCoherence:
    def test_recovers_truth_from_simulated_grid(self):
        from stepvarma import simulate, SimulationDesign, DiagonalVarmaModel, ArmaSpec
        from stepvarma import AxiallySymmetric, grid_sites

        n, m, tp = 32, 8, 100
        alpha_m = tuple(0.4 + 0.05 * i for i in range(m))
        kappa_m = tuple(1.0 + 0.05 * i for i in range(m))
        inn = AxiallySymmetric(
            alpha_m=alpha_m, kappa_m=kappa_m, xi=0.9, tau=0.3,
            n_lon=n, latitudes=tuple(float(i) for i in range(m)),
        )
        model = DiagonalVarmaModel(
            sites=grid_sites(n, m),
            arma=(ArmaSpec(p=0, q=0, sigma=1.0),) * (n * m),
            innovation=inn,
        )
        data, innovs = simulate(
            SimulationDesign(model=model, T=tp, seed=44, record_innovations=True)
        )
        masses = [modified_matern_mass(a, k, n) for a, k in zip(alpha_m, kappa_m)]
        fit = fit_coherence(innovs, masses, inn.latitudes)
        assert fit.identifiable
        assert fit.xi == pytest.approx(0.9, rel=0.15)
        assert fit.tau == pytest.approx(0.3, rel=0.15)

    def test_single_latitude_not_identifiable(self):
        rng = np.random.default_rng(11)
        mass = modified_matern_mass(0.5, 1.0, 8)
        with pytest.warns(UserWarning, match="not identifiable"):
            fit = fit_coherence(rng.standard_normal((5, 8)), [mass], [0.0])
        assert not fit.identifiable

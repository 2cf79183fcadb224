import math

import numpy as np
import pytest

import nonstatcov as nc
from nonstatcov.errors import (DomainError, ModelError, UnsupportedFamilyError)
from nonstatcov.reference import (ar1_model, reference_sre, reference_tvarch,
                                  reference_tvvma, white_noise_model)


def scalar_ar1(phi=0.5, sigma2=1.0):
    return ar1_model(phi, sigma2)


def affine_ar1(n_slope=0.2):
    return nc.TvVAR(p=1, phis=(nc.affine_fn([[0.3]], [[n_slope]]),),
                    sigma=nc.constant_fn([[1.0]]))


class TestCoefficientFn:
    def test_constant(self):
        fn = nc.constant_fn([[1.0, 2.0], [3.0, 4.0]])
        assert np.array_equal(fn(0.3), [[1.0, 2.0], [3.0, 4.0]])
        assert np.all(fn.derivative(0.3) == 0)
        assert fn.lipschitz_constant() == 0.0

    def test_affine_clamps_outside_unit_interval(self):
        fn = nc.affine_fn([[1.0]], [[2.0]])
        assert fn(0.5)[0, 0] == pytest.approx(2.0)
        assert fn(-3.0)[0, 0] == pytest.approx(1.0)
        assert fn(7.0)[0, 0] == pytest.approx(3.0)
        assert fn.lipschitz_constant() == pytest.approx(2.0)

    def test_sinusoidal_derivative(self):
        fn = nc.sinusoidal_fn([[0.0]], [[1.0]])
        h = 1e-7
        for u in (0.1, 0.33, 0.61):
            fd = (fn(u + h)[0, 0] - fn(u - h)[0, 0]) / (2 * h)
            assert fn.derivative(u)[0, 0] == pytest.approx(fd, abs=1e-6)

    def test_piecewise_interpolation(self):
        fn = nc.CoefficientFn("piecewise", {
            "knots": np.array([0.0, 0.5, 1.0]),
            "values": np.array([[[0.0]], [[1.0]], [[0.0]]])})
        assert fn(0.25)[0, 0] == pytest.approx(0.5)
        assert fn(0.5)[0, 0] == pytest.approx(1.0)
        assert fn.lipschitz_constant() == pytest.approx(2.0)


class TestValidation:
    def test_unstable_var_rejected(self):
        bad = nc.TvVAR(p=1, phis=(nc.constant_fn([[1.05]]),),
                       sigma=nc.constant_fn([[1.0]]))
        with pytest.raises(ModelError):
            nc.validate_model(bad)

    def test_arch_needs_nonnegative_coefficients(self):
        bad = nc.TvARCH(coeffs=(nc.constant_fn([[0.5]]),
                                nc.constant_fn([[-0.1]])))
        with pytest.raises(ModelError):
            nc.validate_model(bad)

    def test_arch_fourth_moment_load(self):
        bad = nc.TvARCH(coeffs=(nc.constant_fn([[0.5]]),
                                nc.constant_fn([[0.7]])))
        with pytest.raises(ModelError):
            nc.validate_model(bad)

    def test_reference_models_valid(self):
        for name in ("tvvma_kappa4_p2", "tvvar1_p3", "sre_p2", "tvarch_order2"):
            nc.validate_model(nc.get_reference_model(name))


class TestCovBlock:
    def test_white_noise(self):
        model = white_noise_model(2)
        assert np.array_equal(nc.cov_block(model, 100, 5, 5), np.eye(2))
        assert np.all(nc.cov_block(model, 100, 5, 8) == 0.0)

    def test_symmetry_exact(self):
        model = reference_tvvma()
        for (t, tau) in [(3, 7), (10, 4), (0, 0)]:
            a = nc.cov_block(model, 100, t, tau)
            b = nc.cov_block(model, 100, tau, t)
            assert np.array_equal(a, b.T)

    def test_constant_ar1_interior(self):
        model = scalar_ar1()
        c0 = 1.0 / (1 - 0.25)
        for r in range(0, 6):
            got = nc.cov_block(model, 50, 20, 20 + r)[0, 0]
            assert got == pytest.approx(0.5**r * c0, abs=1e-10)

    def test_sre_unsupported(self):
        with pytest.raises(UnsupportedFamilyError):
            nc.cov_block(reference_sre(), 100, 0, 0)

    def test_arch_is_white_with_recursion_variance(self):
        model = reference_tvarch()
        w = nc.cov_window(model, 200, 90, 110)
        off = np.abs(np.triu(w.flatten(), 1)).max()
        assert off == 0.0
        assert np.all(np.diag(w.flatten()) > 0)

    def test_affine_tvvar_matches_monte_carlo(self):
        # sample covariance over many replications, 3 standard errors
        model = affine_ar1()
        n, t = 200, 100
        reps = 100_000
        sims = nc.simulate_ensemble(model, n, t, t + 3, reps=reps, seed=909)
        for (i, j) in [(0, 0), (0, 1), (0, 3)]:
            prods = sims[:, i, 0] * sims[:, j, 0]
            mc = prods.mean()
            se = prods.std(ddof=1) / math.sqrt(reps)
            exact = nc.cov_block(model, n, t + i, t + j)[0, 0]
            assert abs(mc - exact) <= 3 * se

    def test_var_cov_window_matches_banded_precision_identity(self):
        # the inverse of a wide section must be block-banded at the order
        model = nc.get_reference_model("tvvar1_p3")
        inv = nc.model_inverse_window(model, 200, 90, 120)
        norms = inv.base.norms()
        for t in range(inv.base.length):
            for tau in range(inv.base.length):
                if abs(t - tau) > model.order:
                    assert norms[t, tau] <= 1e-9


class TestStationaryCov:
    def test_decay_beyond_support(self):
        model = reference_tvvma()
        far = nc.stationary_cov(model, 0.4, model.order + 5)
        assert np.linalg.norm(far, 2) <= 1e-10

    def test_analytic_ar1(self):
        model = scalar_ar1()
        for r in range(5):
            got = nc.stationary_cov(model, 0.2, r)[0, 0]
            assert got == pytest.approx(0.5**r * (4.0 / 3.0), abs=1e-10)

    def test_transpose_relation(self):
        model = nc.get_reference_model("tvvar1_p3")
        for r in (1, 2, 5):
            a = nc.stationary_cov(model, 0.6, r)
            b = nc.stationary_cov(model, 0.6, -r)
            assert np.allclose(a, b.T, atol=1e-14)

    def test_quadrature_inversion_cross_check(self):
        # C_r(u) = (2 pi)^-1 integral f(w; u) e^{-i r w} dw on a 2^12 grid
        model = nc.get_reference_model("tvvar1_p3")
        u = 0.45
        omegas = np.linspace(0.0, 2.0 * math.pi, 4096, endpoint=False)
        fs = np.stack([nc.local_spectral_density(model, u, w) for w in omegas])
        for r in (0, 1, 3):
            phases = np.exp(-1j * r * omegas)
            quad = (fs * phases[:, None, None]).mean(axis=0)
            direct = nc.stationary_cov(model, u, r)
            assert np.allclose(quad.real, direct, atol=1e-8)
            assert np.abs(quad.imag).max() < 1e-10


class TestSpectralDensity:
    def test_white_noise_flat(self):
        model = white_noise_model(2)
        f = nc.local_spectral_density(model, 0.5, 1.234)
        assert np.allclose(f, np.eye(2), atol=1e-14)

    def test_ar1_at_zero_frequency(self):
        f = nc.local_spectral_density(scalar_ar1(), 0.1, 0.0)
        assert f[0, 0].real == pytest.approx(4.0, abs=1e-12)

    def test_hermitian_and_fourier_consistency(self):
        model = reference_tvvma()
        u = 0.3
        seq = nc.stationary_cov_sequence(model, u, model.order + 1)
        for omega in (0.7, 2.1, 4.4):
            f = nc.local_spectral_density(model, u, omega)
            assert np.allclose(f, f.conj().T, atol=1e-13)
            total = seq[0].astype(complex)
            for r in range(1, seq.shape[0]):
                total += seq[r] * np.exp(1j * r * omega)
                total += seq[r].T * np.exp(-1j * r * omega)
            assert np.allclose(f, total, atol=1e-8)

    def test_spectral_eig_range(self):
        model = white_noise_model(2)
        rng = nc.spectral_eig_range(model, [0.2, 0.8], [0.0, 1.0, 2.0])
        assert rng.lambda_min == pytest.approx(1.0)
        assert rng.lambda_max == pytest.approx(1.0)
        ar = nc.spectral_eig_range(scalar_ar1(), [0.5],
                                   np.linspace(0, 2 * math.pi, 512, endpoint=False))
        assert ar.lambda_min == pytest.approx(4.0 / 9.0, abs=1e-3)
        assert ar.lambda_max == pytest.approx(4.0, abs=1e-3)

    def test_section_eigenvalues_inside_spectral_range(self):
        model = reference_tvvma()
        spec = nc.spectral_eig_range(model, np.linspace(0, 1, 21),
                                     np.linspace(0, 2 * math.pi, 64, endpoint=False))
        sec = nc.sym_eig_range(nc.stationary_window(model, 0.37, 0, 219))
        assert sec.lambda_min >= spec.lambda_min - 0.05
        assert sec.lambda_max <= spec.lambda_max + 0.05


class TestSimulation:
    def test_zero_model_zero_path(self):
        model = nc.TvVMA(p=2, psis=(nc.constant_fn(np.zeros((2, 2))),))
        path = nc.simulate_path(model, 100, 0, 50, seed=1)
        assert np.all(path.data == 0.0)

    def test_seed_determinism(self):
        model = reference_tvvma()
        a = nc.simulate_path(model, 100, 0, 40, seed=77)
        b = nc.simulate_path(model, 100, 0, 40, seed=77)
        assert np.array_equal(a.data, b.data)
        c = nc.simulate_path(model, 100, 0, 40, seed=78)
        assert not np.array_equal(a.data, c.data)

    def test_lag0_matches_closed_form(self):
        model = affine_ar1()
        n, t = 100, 60
        reps = 100_000
        sims = nc.simulate_ensemble(model, n, t, t, reps=reps, seed=31)
        prods = sims[:, 0, 0] ** 2
        se = prods.std(ddof=1) / math.sqrt(reps)
        exact = nc.cov_block(model, n, t, t)[0, 0]
        assert abs(prods.mean() - exact) <= 3 * se

    def test_simulator_consistency_small_lags(self):
        # every (t, tau) with |t - tau| <= 5 within 3 standard errors
        model = reference_tvvma(p=1)
        n, t0 = 100, 50
        reps = 60_000
        sims = nc.simulate_ensemble(model, n, t0, t0 + 5, reps=reps, seed=13)
        for i in range(6):
            for j in range(6):
                prods = sims[:, i, 0] * sims[:, j, 0]
                se = prods.std(ddof=1) / math.sqrt(reps)
                exact = nc.cov_block(model, n, t0 + i, t0 + j)[0, 0]
                assert abs(prods.mean() - exact) <= 3 * se

    def test_positive_definiteness_of_assembled_windows(self):
        for name in ("tvvma_kappa4_p2", "tvvar1_p3"):
            model = nc.get_reference_model(name)
            w = nc.cov_window(model, 200, 0, 239)
            assert nc.sym_eig_range(w).lambda_min > 0


class TestPhysicalDependence:
    def test_beyond_memory_is_null(self):
        model = reference_tvvma(p=1)
        est = nc.physical_dep_estimate(model, 100, 40, model.order + 3,
                                       reps=400, seed=5)
        assert est.value <= 3 * max(est.stderr, 1e-300)

    def test_white_noise_difference_variance(self):
        model = white_noise_model(2, sigma=np.diag([2.0, 0.5]))
        est = nc.physical_dep_estimate(model, 100, 10, 0, reps=60_000, seed=8)
        assert est.value == pytest.approx(2 * 2.0, abs=4 * est.stderr + 0.05)

    def test_rejects_bad_arguments(self):
        with pytest.raises(DomainError):
            nc.physical_dep_estimate(reference_sre(), 100, 10, -1, reps=500, seed=1)
        with pytest.raises(DomainError):
            nc.physical_dep_estimate(reference_sre(), 100, 10, 1, reps=10, seed=1)

    def test_sre_geometric_decay(self):
        model = reference_sre()
        vals = [nc.physical_dep_estimate(model, 200, 80, j, reps=2000, seed=40 + j).value
                for j in range(1, 7)]
        slope = np.polyfit(np.arange(1, 7), np.log(vals), 1)[0]
        assert slope <= math.log(math.sqrt(0.25)) + 0.2


class TestAssumptionFit:
    def test_frozen_model_has_no_smoothness_gap(self):
        frozen = nc.TvVAR(p=1, phis=(nc.constant_fn([[0.5]]),),
                          sigma=nc.constant_fn([[1.0]]))
        fit = nc.assumption_fit(frozen, 100, 40, 70, kappa=4.0)
        assert fit.max_gap <= 1e-8

    def test_kappa_recovered_for_power_law_model(self):
        # scalar envelope model: psi_j(u) = (0.9 + 0.1 sin 2 pi u) gu(j)^-4
        kappa = 4.0
        psis = [nc.sinusoidal_fn([[0.9 * float(nc.gu(j)) ** -kappa]],
                                 [[0.1 * float(nc.gu(j)) ** -kappa]])
                for j in range(0, 49)]
        model = nc.TvVMA(p=1, psis=tuple(psis), kappa=kappa)
        fit = nc.assumption_fit(model, 200, 70, 130)
        assert 3.5 <= fit.decay.exponent <= 4.5

    def test_doubling_n_halves_gap(self):
        model = reference_tvvma()
        fits = {n: nc.assumption_fit(model, n, int(0.3 * n), int(0.7 * n))
                for n in (100, 200)}
        ratio = fits[100].max_gap / fits[200].max_gap
        assert 1.5 <= ratio <= 2.7

    def test_too_short_window_raises(self):
        with pytest.raises(nc.FitError):
            nc.assumption_fit(reference_tvvma(), 100, 10, 13)


class TestArchRecursion:
    def test_spectral_range_tracks_variance_band(self):
        model = reference_tvarch()
        us = np.linspace(0, 1, 33)
        c0 = np.array([nc.stationary_cov(model, u, 0)[0, 0] for u in us])
        rng = nc.spectral_eig_range(model, us, [0.0, 1.0, 2.5])
        assert rng.lambda_min == pytest.approx(c0.min(), rel=1e-12)
        assert rng.lambda_max == pytest.approx(c0.max(), rel=1e-12)

    def test_mean_square_matches_monte_carlo(self):
        model = reference_tvarch()
        n, t = 100, 60
        reps = 60_000
        sims = nc.simulate_ensemble(model, n, t, t, reps=reps, seed=63)
        prods = sims[:, 0, 0] ** 2
        se = prods.std(ddof=1) / math.sqrt(reps)
        exact = nc.cov_block(model, n, t, t)[0, 0]
        assert abs(prods.mean() - exact) <= 4 * se

import math

import numpy as np
import pytest

import nonstatcov as nc
from nonstatcov.errors import ConditioningError, InputError
from nonstatcov.verification import regression_residual_oracle


def seeded_spd_window(seed, p=3, length=12):
    rng = np.random.default_rng(seed)
    dim = length * p
    raw = rng.standard_normal((dim, dim + 6))
    flat = raw @ raw.T / dim + 0.5 * np.eye(dim)
    return nc.BlockWindow.from_flat(flat, p=p, symmetrize=True)


def independent_pair_model():
    """p = 3 autoregression where components (0, 1) never see component 2."""
    phi = np.array([[0.4, 0.1, 0.0], [0.1, 0.3, 0.0], [0.0, 0.0, 0.5]])
    sigma = np.diag([1.0, 0.8, 1.3])
    sigma[0, 1] = sigma[1, 0] = 0.2
    return nc.TvVAR(p=3, phis=(nc.constant_fn(phi),),
                    sigma=nc.constant_fn(sigma))


class TestRegrouping:
    def test_p1_identity(self):
        w = seeded_spd_window(1, p=1, length=6)
        g = nc.regroup_by_component(w)
        assert np.array_equal(g.lag_matrices[0, 0], w.blocks[:, :, 0, 0])

    def test_round_trip_exact(self):
        w = seeded_spd_window(2)
        g = nc.regroup_by_component(w)
        back = nc.ungroup(g, symmetric=True)
        assert np.array_equal(back.blocks, w.blocks)

    def test_index_law(self):
        w = seeded_spd_window(3)
        g = nc.regroup_by_component(w)
        rng = np.random.default_rng(0)
        for _ in range(40):
            a, b = rng.integers(0, 3, size=2)
            t, tau = rng.integers(0, w.length, size=2)
            assert g.entry(a, b, t, tau) == w.blocks[t, tau][a, b]


class TestPartialCovPair:
    def test_p2_returns_raw_pair(self):
        w = seeded_spd_window(4, p=2, length=8)
        pair = nc.partial_cov_pair(w, 0, 1)
        for t in range(8):
            for tau in range(8):
                raw = w.blocks[t, tau]
                assert np.allclose(pair.deltas[t, tau], raw, atol=1e-14)

    def test_block_diagonal_decoupling(self):
        # components (0, 1) independent of component 2: conditioning away
        # component 2 changes nothing
        length = 8
        rng = np.random.default_rng(9)
        raw01 = rng.standard_normal((2 * length, 2 * length + 4))
        c01 = raw01 @ raw01.T / length + 0.5 * np.eye(2 * length)
        raw2 = rng.standard_normal((length, length + 4))
        c2 = raw2 @ raw2.T / length + 0.5 * np.eye(length)
        blocks = np.zeros((length, length, 3, 3))
        for t in range(length):
            for tau in range(length):
                blocks[t, tau, :2, :2] = c01[2 * t:2 * t + 2, 2 * tau:2 * tau + 2]
                blocks[t, tau, 2, 2] = c2[t, tau]
        blocks = 0.5 * (blocks + blocks.transpose(1, 0, 3, 2))
        w = nc.BlockWindow(t_lo=0, p=3, blocks=blocks, symmetric=True)
        pair = nc.partial_cov_pair(w, 0, 1)
        for t in range(length):
            for tau in range(length):
                assert np.allclose(pair.deltas[t, tau],
                                   w.blocks[t, tau][:2, :2], atol=1e-10)

    def test_matches_regression_oracle(self):
        for seed in range(8):
            w = seeded_spd_window(100 + seed, p=3, length=10)
            length = w.length
            pair = nc.partial_cov_pair(w, 0, 2)
            keep = np.concatenate([np.arange(length) * 3,
                                   np.arange(length) * 3 + 2])
            drop = np.arange(length) * 3 + 1
            oracle = regression_residual_oracle(w.flatten(), keep, drop)
            got = np.block([[pair.deltas[:, :, 0, 0], pair.deltas[:, :, 0, 1]],
                            [pair.deltas[:, :, 1, 0], pair.deltas[:, :, 1, 1]]])
            assert np.abs(got - oracle).max() <= 1e-8

    def test_pair_symmetry(self):
        w = seeded_spd_window(55)
        pair = nc.partial_cov_pair(w, 0, 1)
        for t in range(w.length):
            for tau in range(w.length):
                assert np.array_equal(pair.deltas[t, tau],
                                      pair.deltas[tau, t].T)

    def test_spd_domination(self):
        w = seeded_spd_window(56)
        pair = nc.partial_cov_pair(w, 1, 2)
        for t in range(w.length):
            raw = w.blocks[t, t][np.ix_([1, 2], [1, 2])]
            assert np.linalg.eigvalsh(raw - pair.deltas[t, t])[0] >= -1e-10

    def test_bad_components(self):
        w = seeded_spd_window(57)
        with pytest.raises(InputError):
            nc.partial_cov_pair(w, 0, 0)
        with pytest.raises(InputError):
            nc.partial_cov_pair(w, 0, 5)

    def test_singular_conditioning(self):
        length = 6
        blocks = np.zeros((length, length, 3, 3))
        for t in range(length):
            blocks[t, t] = np.diag([1.0, 1.0, 0.0])
        w = nc.BlockWindow(t_lo=0, p=3, blocks=blocks, symmetric=True)
        with pytest.raises(ConditioningError):
            nc.partial_cov_pair(w, 0, 1)


class TestSelfPartial:
    def test_p1_raw_autocovariance(self):
        w = seeded_spd_window(60, p=1, length=9)
        rho = nc.self_partial_cov(w, 0)
        assert np.allclose(rho, w.flatten(), atol=1e-14)

    def test_matches_regression_oracle(self):
        w = seeded_spd_window(61, p=3, length=10)
        rho = nc.self_partial_cov(w, 1)
        keep = np.arange(w.length) * 3 + 1
        drop = np.concatenate([np.arange(w.length) * 3,
                               np.arange(w.length) * 3 + 2])
        oracle = regression_residual_oracle(w.flatten(), keep, drop)
        assert np.abs(rho - oracle).max() <= 1e-8

    def test_independent_component_keeps_raw_autocovariance(self):
        # component 2 of this model never couples with (0, 1)
        model = independent_pair_model()
        w = nc.cov_window(model, 100, 40, 55)
        rho = nc.self_partial_cov(w, 2)
        raw = w.blocks[:, :, 2, 2]
        assert np.abs(rho - raw).max() <= 1e-10


class TestStationaryPartial:
    def test_p2_equals_raw_lags(self):
        model = nc.TvVAR(p=2,
                         phis=(nc.constant_fn([[0.4, 0.2], [0.1, 0.3]]),),
                         sigma=nc.constant_fn(np.eye(2)))
        rep = nc.stationary_partial_pair(model, 0.5, 0, 1, max_lag=5)
        for r in range(-5, 6):
            raw = nc.stationary_cov(model, 0.5, r)
            assert np.allclose(rep.delta(r), raw, atol=1e-8)

    def test_frozen_model_cross_check(self):
        model = independent_pair_model()
        rep = nc.stationary_partial_pair(model, 0.4, 0, 1, max_lag=4)
        pad = nc.cov_pad(model)
        w = nc.cov_window(model, 10_000_000, 4_000_000 - 4 - pad,
                          4_000_000 + 4 + pad)
        pair = nc.partial_cov_pair(w, 0, 1, pad=pad)
        center = 4_000_000
        for r in range(-4, 5):
            assert np.allclose(rep.delta(r), pair.delta(center + r, center),
                               atol=1e-6)

    def test_lag_reversal_transpose(self):
        model = nc.get_reference_model("tvvar1_p3")
        rep = nc.stationary_partial_pair(model, 0.6, 0, 1, max_lag=6)
        for r in range(7):
            assert np.allclose(rep.delta(-r), rep.delta(r).T, atol=1e-10)

    def test_toeplitz_drift_small(self):
        model = nc.get_reference_model("tvvar1_p3")
        rep = nc.stationary_partial_pair(model, 0.25, 0, 2, max_lag=6)
        assert rep.toeplitz_drift <= 1e-8


class TestPartialSmoothness:
    def test_frozen_model_gaps_vanish(self):
        model = independent_pair_model()
        rep = nc.partial_smoothness_gap(model, 100, 0, 1, 48, 52, kappa=4.0)
        assert rep.pair_gaps.max_measured <= 1e-7
        assert rep.self_gaps.max_measured <= 1e-7

    def test_lag0_gap_halves(self):
        model = nc.get_reference_model("tvvar1_p3")
        gaps = {}
        for n in (100, 200):
            rep = nc.partial_smoothness_gap(model, n, 0, 1, n // 2 - 1,
                                            n // 2 + 1, kappa=4.0)
            gaps[n] = max(m for (t, tau), m in zip(rep.pair_gaps.indices,
                                                   rep.pair_gaps.measured)
                          if t == tau)
        assert 0.7 <= math.log2(gaps[100] / gaps[200]) <= 1.3


class TestCoherence:
    def test_independent_components_zero(self):
        model = independent_pair_model()
        omegas = np.linspace(0, 2 * math.pi, 17, endpoint=False)
        g02 = nc.partial_spectral_coherence(model, 0.3, 0, 2, omegas)
        assert np.abs(g02).max() <= 1e-12

    def test_p2_no_cross_coupling(self):
        model = nc.TvVAR(p=2,
                         phis=(nc.constant_fn(np.diag([0.5, 0.3])),),
                         sigma=nc.constant_fn(np.eye(2)))
        g = nc.partial_spectral_coherence(model, 0.5, 0, 1,
                                          np.linspace(0, 6.0, 13))
        assert np.abs(g).max() <= 1e-12

    def test_magnitude_bounded_by_one(self):
        model = nc.get_reference_model("tvvar1_p3")
        omegas = np.linspace(0, 2 * math.pi, 101, endpoint=False)
        for (a, b) in [(0, 1), (0, 2), (1, 2)]:
            g = nc.partial_spectral_coherence(model, 0.42, a, b, omegas)
            assert np.abs(g).max() <= 1.0 + 1e-8

    def test_matches_time_domain_fourier_oracle(self):
        # assemble Gamma_SS^{-1} from the stationary partial lags and invert:
        # an independent pipeline through the time domain
        model = nc.get_reference_model("tvvar1_p3")
        u, a, b = 0.55, 0, 1
        max_lag = 60
        rep = nc.stationary_partial_pair(model, u, a, b, max_lag=max_lag)
        omegas = np.linspace(0, 2 * math.pi, 33, endpoint=False)
        direct = nc.partial_spectral_coherence(model, u, a, b, omegas)
        for i, w in enumerate(omegas):
            s = rep.delta(0).astype(complex)
            for r in range(1, max_lag + 1):
                s += rep.delta(r) * np.exp(1j * r * w)
                s += rep.delta(-r) * np.exp(-1j * r * w)
            gamma_ss = np.linalg.inv(s)
            oracle = -gamma_ss[0, 1] / math.sqrt(gamma_ss[0, 0].real
                                                 * gamma_ss[1, 1].real)
            assert abs(direct[i] - oracle) <= 1e-6


class TestCoherenceConsistency:
    def test_frozen_model_gap_at_truncation_level(self):
        model = independent_pair_model()
        omegas = np.linspace(0, 2 * math.pi, 25, endpoint=False)
        rep = nc.coherence_consistency_gap(model, 100, 50, 0, 1, omegas,
                                           max_lag=40)
        assert rep.sup_gap <= 1e-6

    def test_gap_shrinks_with_n(self):
        model = nc.get_reference_model("tvvar1_p3")
        omegas = np.linspace(0, 2 * math.pi, 33, endpoint=False)
        sup = {}
        for n in (200, 400):
            rep = nc.coherence_consistency_gap(model, n, int(0.3 * n), 0, 1,
                                               omegas, max_lag=40)
            sup[n] = rep.sup_gap
        assert 1.4 <= sup[200] / sup[400] <= 2.8

    def test_default_lag_rule(self):
        model = nc.get_reference_model("tvvar1_p3")
        omegas = np.linspace(0, 2 * math.pi, 9, endpoint=False)
        rep = nc.coherence_consistency_gap(model, 200, 60, 0, 1, omegas,
                                           max_lag=None)
        assert rep.truncation_tail <= 1e-7

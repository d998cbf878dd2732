import numpy as np
import pytest

from conftest import MC_B0, simulate_mc_system
from proxysvar.errors import WeakProxyError
from proxysvar.likelihoods import ProxySet, gaussian_log_likelihood
from proxysvar.proxyclassic import AugmentedConfig, build_augmented, iv_impact_ratio
from proxysvar.varcore import ReducedFormVar, StructuralMatrix, TimeSeriesPanel


class TestIvImpactRatio:
    def test_definitional_regression_coefficients(self):
        rng = np.random.default_rng(0)
        u = rng.standard_normal((400, 3))
        z = u[:, 1].copy()
        ratio = iv_impact_ratio(z, u, target=1)
        oracle = (z @ u) / (z @ u[:, 1])
        assert np.allclose(ratio, oracle)
        assert ratio[1] == 1.0

    def test_large_sample_consistency_on_static_system(self):
        panel, proxy, _ = simulate_mc_system(1_000_000, seed=99)
        u = panel.values
        ratio = iv_impact_ratio(proxy, u, target=2)
        # relative impacts of the instrumented shock: (0, -0.5, 1)
        assert abs(ratio[0] - 0.0) < 0.01
        assert abs(ratio[1] - (-0.5)) < 0.01
        assert ratio[2] == 1.0

    def test_weak_proxy_error_on_constructed_orthogonality(self):
        rng = np.random.default_rng(1)
        u = rng.standard_normal((300, 2))
        z = rng.standard_normal(300)
        # project out both residual columns exactly
        beta = np.linalg.lstsq(u, z, rcond=None)[0]
        z_orth = z - u @ beta
        with pytest.raises(WeakProxyError) as err:
            iv_impact_ratio(z_orth, u, target=0)
        assert abs(err.value.first_stage_cov) < 1e-10

    def test_scale_invariance(self):
        rng = np.random.default_rng(2)
        u = rng.standard_normal((200, 3))
        z = u[:, 0] + rng.standard_normal(200)
        a = iv_impact_ratio(z, u, target=0)
        b = iv_impact_ratio(-3.7 * z, u, target=0)
        assert np.allclose(a, b, rtol=1e-12, atol=0.0)
        assert np.array_equal(iv_impact_ratio(4.0 * z, u, target=0), a)  # power-of-two scale is exact

    def test_invariant_to_orthogonal_additions(self):
        rng = np.random.default_rng(3)
        u = rng.standard_normal((200, 2))
        z = u[:, 0] + 0.5 * rng.standard_normal(200)
        w = rng.standard_normal(200)
        w -= u @ np.linalg.lstsq(u, w, rcond=None)[0]  # in-sample orthogonal
        a = iv_impact_ratio(z, u, target=0)
        b = iv_impact_ratio(z + w, u, target=0)
        assert np.allclose(a, b, atol=1e-12)


class TestBuildAugmented:
    def test_structural_zero_pattern(self):
        rng = np.random.default_rng(4)
        panel = TimeSeriesPanel(values=rng.standard_normal((100, 3)))
        px = ProxySet(rng.standard_normal(100), (2,))
        system = build_augmented(panel, px)
        assert system.n_total == 4
        zero = set(system.zero_entries)
        # variables never load on measurement noise
        assert {(0, 3), (1, 3), (2, 3)} <= zero
        # the proxy row is zero except at its target and its own noise
        assert {(3, 0), (3, 1)} <= zero
        assert (3, 2) not in zero
        assert system.fixed_entries == {(3, 3): 1.0}

    def test_noise_scale_freed_under_general_config(self):
        rng = np.random.default_rng(5)
        panel = TimeSeriesPanel(values=rng.standard_normal((50, 2)))
        px = ProxySet(rng.standard_normal(50), (0,))
        system = build_augmented(panel, px, AugmentedConfig(estimate_noise_scale=True))
        assert system.fixed_entries == {}

    def test_zero_proxies_degenerates_to_plain_svar(self):
        rng = np.random.default_rng(6)
        u = rng.standard_normal((80, 2))
        panel = TimeSeriesPanel(values=u)
        px = ProxySet(np.empty((80, 0)), ())
        system = build_augmented(panel, px)
        assert system.n_total == 2
        assert np.array_equal(system.panel.values, panel.values)
        var = ReducedFormVar(np.zeros(2), np.zeros((0, 2, 2)), np.zeros((2, 0)),
                             has_intercept=False)
        B = StructuralMatrix(np.eye(2) + 0.1)
        a = gaussian_log_likelihood(panel, None, var, B)
        b = gaussian_log_likelihood(system.panel, None, system.embed_reduced_form(var), B)
        assert abs(a - b) < 1e-10

    def test_embedded_reduced_form_shapes(self):
        rng = np.random.default_rng(7)
        lags = rng.normal(scale=0.2, size=(2, 3, 3))
        var = ReducedFormVar(rng.normal(size=3), lags, rng.normal(size=(3, 2)))
        panel = TimeSeriesPanel(values=rng.standard_normal((60, 3)),
                                presample=rng.standard_normal((2, 3)))
        px = ProxySet(rng.standard_normal(60), (0,))
        system = build_augmented(panel, px)
        emb = system.embed_reduced_form(var)
        assert emb.lag_coeffs.shape == (2, 4, 4)
        assert np.array_equal(emb.lag_coeffs[:, :3, :3], lags)
        assert np.allclose(emb.lag_coeffs[:, 3, :], 0.0)
        assert np.allclose(emb.lag_coeffs[:, :, 3], 0.0)

    def test_bernoulli_censoring_breaks_error_independence(self):
        # fitting the linear measurement model to a censored narrative proxy
        # leaves an error whose magnitude co-moves with the shock magnitude
        rng = np.random.default_rng(8)
        T = 10_000
        eps = rng.standard_normal(T)
        eta = rng.standard_normal(T)
        psi = rng.random(T) < 0.3
        z = psi * (1.0 * eps + eta)
        phi_hat = (z @ eps) / (eps @ eps)
        err = z - phi_hat * eps
        corr = np.corrcoef(np.abs(err), np.abs(eps))[0, 1]
        assert corr > 0.1

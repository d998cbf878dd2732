"""Acceptance suite: Monte Carlo pattern reproduction at desk scale, the
always-runnable property checks, and the (data-conditional) application run.

Each criterion prints one PASS/FAIL line.  The Monte Carlo runs execute once
per session; with two estimator families over three scenario/sample-size
combinations they dominate the suite's runtime.
"""
import os
import time
from pathlib import Path

import numpy as np
import pytest
from scipy import integrate

from conftest import MC_B0, simulate_mc_system
from proxysvar.fiscal import (
    compute_multipliers,
    estimate,
    fixture_path,
    load_dataset,
    map_to_mertens,
    mertens_to_impact,
    write_run_outputs,
)
from proxysvar.likelihoods import (
    ExogeneityMeans,
    ProxySet,
    gaussian_log_likelihood,
    proxy_moment_stats,
    reweight_log,
)
from proxysvar.proxyclassic import iv_impact_ratio
from proxysvar.sampler import (
    ChainConfig,
    gibbs_exogeneity_mean,
    gibbs_exogeneity_variance,
    signperm_accept,
)
from proxysvar.shockdist import SkewTParams, skewt_log_density
from proxysvar.simlab import preset_scenario, run_scenario
from proxysvar.varcore import (
    ReducedFormVar,
    StructuralMatrix,
    TimeSeriesPanel,
    impulse_responses,
)

WORKERS = max(1, os.cpu_count() or 1)
CHAIN = ChainConfig(draws=4000, burn_in=2000, seed=0)
EMPIRICAL_DATA = os.environ.get("PROXYSVAR_FISCAL_DATA",
                                str(Path(__file__).resolve().parent.parent
                                    / "data" / "fiscal_us.csv"))


def report(name: str, passed: bool, detail: str) -> bool:
    print(f"ACCEPTANCE {name}: {'PASS' if passed else 'FAIL'} ({detail})")
    return passed


@pytest.fixture(scope="session")
def mc_exogenous_t250():
    t0 = time.time()
    table = run_scenario(preset_scenario("exogenous", T=250, replications=100),
                         CHAIN, master_seed=20250810, workers=WORKERS)
    print(f"[exogenous T=250, 100 reps, 4 estimators: {time.time() - t0:.0f}s "
          f"on {WORKERS} workers]")
    return table


@pytest.fixture(scope="session")
def mc_endogenous_t250():
    t0 = time.time()
    table = run_scenario(
        preset_scenario("endogenous", T=250, replications=100,
                        estimators=("gaussian_weighting", "nongaussian_weighting")),
        CHAIN, master_seed=20250811, workers=WORKERS)
    print(f"[endogenous T=250: {time.time() - t0:.0f}s]")
    return table


@pytest.fixture(scope="session")
def mc_endogenous_t800():
    t0 = time.time()
    table = run_scenario(
        preset_scenario("endogenous", T=800, replications=100,
                        estimators=("gaussian_augmented", "gaussian_weighting",
                                    "nongaussian_weighting")),
        CHAIN, master_seed=20250812, workers=WORKERS)
    print(f"[endogenous T=800: {time.time() - t0:.0f}s]")
    return table


class TestMonteCarloCriteria:
    def test_table2_reproduction_exogenous(self, mc_exogenous_t250):
        """Gaussian proxy weighting at T=250: mean within +-0.05 of the true
        impact column, MSE within a factor 2 of (0.008, 0.009, 0.022)."""
        table = mc_exogenous_t250
        mean = table.mean["gaussian_weighting"]
        mse = table.mse["gaussian_weighting"]
        truth = np.array([0.0, -0.5, 1.0])
        ref_mse = np.array([0.008, 0.009, 0.022])
        ok_mean = bool(np.all(np.abs(mean - truth) <= 0.05))
        ok_mse = bool(np.all(mse <= 2.0 * ref_mse) and np.all(mse >= ref_mse / 2.0))
        passed = report(
            "table2-exogenous", ok_mean and ok_mse,
            f"mean={np.round(mean, 3).tolist()} mse={np.round(mse, 4).tolist()} "
            f"(targets {truth.tolist()} +-0.05; mse within 2x of {ref_mse.tolist()})")
        assert passed

    def test_table2_bias_pattern_endogenous_t800(self, mc_endogenous_t800):
        """Endogenous proxy at T=800: Gaussian estimators stay badly biased
        while the weighting with estimated exogeneity recovers the truth."""
        table = mc_endogenous_t800
        aug = table.mean["gaussian_augmented"][2]
        gw = table.mean["gaussian_weighting"][2]
        ngw = table.mean["nongaussian_weighting"][2]
        ok = (aug <= 0.55 and gw <= 0.55 and ngw >= 0.85 and ngw > max(aug, gw)
              and abs(aug - 0.41) <= 0.10 and abs(gw - 0.41) <= 0.10
              and abs(ngw - 0.96) <= 0.10)
        passed = report(
            "table2-bias-endogenous-T800", bool(ok),
            f"augmented={aug:.3f} weighting={gw:.3f} (<=0.55, ref 0.41); "
            f"nongaussian-weighting={ngw:.3f} (>=0.85, ref 0.96)")
        assert passed

    def test_table3_coverage_pattern(self, mc_endogenous_t250, mc_exogenous_t250):
        """Contaminated-entry coverage: collapses for the exogeneity-imposing
        Gaussian model, stays informative for the estimated-exogeneity model;
        near-nominal coverage under a valid proxy."""
        endo = mc_endogenous_t250
        gw_cov = endo.coverage["gaussian_weighting"][1:]
        ngw_cov = endo.coverage["nongaussian_weighting"][1:]
        exo_cov = mc_exogenous_t250.coverage["nongaussian_weighting"]
        ok = (bool(np.all(gw_cov <= 0.15)) and bool(np.all(ngw_cov >= 0.40))
              and bool(np.all(np.abs(exo_cov - 0.68) <= 0.08)))
        passed = report(
            "table3-coverage", ok,
            f"endogenous: gaussian={np.round(gw_cov, 2).tolist()} (<=0.15), "
            f"nongaussian-weighting={np.round(ngw_cov, 2).tolist()} (>=0.40); "
            f"exogenous nongaussian-weighting={np.round(exo_cov, 2).tolist()} "
            f"(0.68 +-0.08)")
        assert passed

    def test_efficiency_gain_from_valid_proxy(self, mc_exogenous_t250):
        """Adding a valid proxy shortens the contaminable entries' bands to at
        most 0.75x the proxy-free non-Gaussian model's bands."""
        table = mc_exogenous_t250
        ratio = (table.avg_length["nongaussian_weighting"][1:]
                 / table.avg_length["nongaussian"][1:])
        ok = bool(np.all(ratio <= 0.75))
        passed = report("efficiency-gain", ok,
                        f"band-length ratios={np.round(ratio, 3).tolist()} (<=0.75)")
        assert passed


class TestPropertySuite:
    def test_skewt_quadrature_normalization(self):
        ok = True
        for lam, q in ((-0.5, 3.0), (0.0, 5.0), (0.7, 10.0)):
            p = SkewTParams(lam, q)
            f = lambda e: np.exp(skewt_log_density(e, p))
            lo, hi = -p.m - 400, -p.m + 400
            total = integrate.quad(f, lo, hi, points=[-p.m, 0], limit=400)[0]
            mean = integrate.quad(lambda e: e * f(e), lo, hi, points=[-p.m, 0], limit=400)[0]
            var = integrate.quad(lambda e: e * e * f(e), lo, hi, points=[-p.m, 0], limit=400)[0]
            ok &= abs(total - 1) < 1e-5 and abs(mean) < 1e-5 and abs(var - 1) < 1e-5
        assert report("property-skewt-quadrature", bool(ok),
                      "normalization, mean, variance within 1e-5 on the shape grid")

    def test_gaussian_rotation_invariance(self):
        rng = np.random.default_rng(0)
        panel = TimeSeriesPanel(values=rng.standard_normal((200, 3)))
        var = ReducedFormVar(np.zeros(3), np.zeros((0, 3, 3)), np.zeros((3, 0)),
                             has_intercept=False)
        B = rng.standard_normal((3, 3)) + 2 * np.eye(3)
        base = gaussian_log_likelihood(panel, None, var, StructuralMatrix(B))
        q, r = np.linalg.qr(rng.standard_normal((3, 3)))
        rot = gaussian_log_likelihood(panel, None, var, StructuralMatrix(B @ q))
        ok = abs(rot - base) < 1e-8 * abs(base)
        assert report("property-rotation-invariance", bool(ok),
                      f"|delta|={abs(rot - base):.2e}")

    def test_reweight_argmax_at_moment_stats(self):
        rng = np.random.default_rng(1)
        e = rng.standard_normal((150, 3))
        px = ProxySet(rng.standard_normal(150), (2,), variance=(1.0,))
        m = proxy_moment_stats(px, e)
        mask = px.nontarget_mask(3)
        at_m = reweight_log(px, e, ExogeneityMeans(np.where(mask, m, 0.0),
                                                   np.ones((1, 3)), mask))
        ok = np.isclose(at_m, 2 * (-0.5 * np.log(2 * np.pi / 150)))
        assert report("property-reweight-argmax", bool(ok),
                      "maximum attained exactly at mu = m")

    def test_conjugate_updates_vs_oracles(self):
        rng = np.random.default_rng(2)
        mu_draws = np.array([gibbs_exogeneity_mean(np.array(0.3), np.array(1 / 250),
                                                   np.array(1e12), rng)
                             for _ in range(50_000)])
        ok_mu = abs(mu_draws.mean() - 0.3) < 0.01
        s2 = gibbs_exogeneity_variance(np.full(100_000, 0.2), 0.0, 0.0, rng)
        ok_s2 = abs(np.mean(1.0 / s2) - 25.0) < 0.05 * 25.0
        assert report("property-conjugate-gibbs", bool(ok_mu and ok_s2),
                      f"mu mean={mu_draws.mean():.4f} (0.3), "
                      f"E[1/sigma2]={np.mean(1.0/s2):.2f} (25)")

    def test_signperm_truth_table(self):
        rng = np.random.default_rng(3)
        B = rng.standard_normal((3, 3)) + 2 * np.eye(3)
        perm = np.eye(3)[:, [1, 2, 0]]
        ok = (signperm_accept(B, B)
              and not signperm_accept(B @ perm, B)
              and signperm_accept(B @ np.diag([-1, 1, 1.0]), B)
              and all(signperm_accept(B @ (np.eye(3) + 0.05 * rng.standard_normal((3, 3))), B)
                      for _ in range(1000)))
        assert report("property-signperm", bool(ok),
                      "identity/permutation/sign-flip/perturbation behave as required")

    def test_mertens_round_trip(self):
        rng = np.random.default_rng(4)
        worst = 0.0
        for _ in range(50):
            B = rng.standard_normal((3, 3)) + 2.5 * np.eye(3)
            worst = max(worst, float(np.max(np.abs(
                mertens_to_impact(map_to_mertens(B)) - B))))
        assert report("property-mertens-roundtrip", worst < 1e-10,
                      f"max reconstruction error {worst:.2e} (<1e-10)")

    def test_irf_against_simulation_oracle(self):
        rng = np.random.default_rng(5)
        lags = rng.normal(scale=0.25, size=(2, 3, 3))
        var = ReducedFormVar(np.zeros(3), lags, np.zeros((3, 0)))
        B = StructuralMatrix(rng.standard_normal((3, 3)) + 2 * np.eye(3))
        H = 20
        irf = impulse_responses(var, B, H)
        worst = 0.0
        for j in range(3):
            hist = np.zeros((H + 3, 3))
            hist[2] = B.values[:, j]
            for h in range(1, H + 1):
                hist[2 + h] = lags[0] @ hist[1 + h] + lags[1] @ hist[h]
            worst = max(worst, float(np.max(np.abs(irf[:, :, j] - hist[2:]))))
        assert report("property-irf-oracle", worst < 1e-10,
                      f"max gap to brute-force propagation {worst:.2e}")

    def test_iv_ratio_large_sample(self):
        panel, proxy, _ = simulate_mc_system(1_000_000, seed=17)
        ratio = iv_impact_ratio(proxy, panel.values, target=2)
        err = max(abs(ratio[0]), abs(ratio[1] + 0.5))
        assert report("property-iv-consistency", err < 0.01,
                      f"max deviation {err:.4f} from (0, -0.5) at T=1e6")

    def test_censored_proxy_dependence(self):
        rng = np.random.default_rng(6)
        T = 10_000
        eps = rng.standard_normal(T)
        z = (rng.random(T) < 0.3) * (eps + rng.standard_normal(T))
        err = z - (z @ eps) / (eps @ eps) * eps
        corr = float(np.corrcoef(np.abs(err), np.abs(eps))[0, 1])
        assert report("property-censored-proxy", corr > 0.1,
                      f"corr(|error|, |shock|)={corr:.3f} (>0.1)")


class TestEmpiricalApplication:
    def test_pipeline_on_synthetic_fixture(self, tmp_path):
        """Always-on smoke: the full pipeline runs end-to-end on the shipped
        fixture and emits every export."""
        ds = load_dataset(fixture_path())
        draws = estimate(ds, cfg=ChainConfig(draws=800, burn_in=400, seed=1))
        paths = write_run_outputs(draws, ds, tmp_path / "run")
        ok = all(p.exists() for p in paths.values())
        assert report("empirical-fixture-smoke", ok,
                      f"{len(paths)} outputs written from the synthetic fixture")

    @pytest.mark.skipif(not Path(EMPIRICAL_DATA).exists(),
                        reason=f"empirical dataset not supplied at {EMPIRICAL_DATA} "
                               "(set PROXYSVAR_FISCAL_DATA)")
    def test_empirical_multiplier_pattern(self, tmp_path):
        """With the real dataset: spending multiplier exceeds the tax
        multiplier on impact with high posterior probability, the tax proxy
        correlates negatively with output shocks, and the multiplier peaks
        fall inside the documented ranges."""
        from proxysvar.fiscal import exogeneity_report, multiplier_paths
        from proxysvar.varcore import impulse_responses as irf_of

        ds = load_dataset(EMPIRICAL_DATA)
        draws = estimate(ds, cfg=ChainConfig(draws=30000, burn_in=15000, thin=5, seed=7))
        wins = 0
        total = 0
        for i in range(draws.n_draws):
            irf = irf_of(draws.reduced_form(i), StructuralMatrix(draws.b[i, :3, :3]), 20)
            paths = multiplier_paths(irf, 0.175, 0.091)
            if paths is None:
                continue
            tax, spend = paths
            wins += spend[0] > tax[0]
            total += 1
        prob = wins / total
        mult = compute_multipliers(draws)
        tax_peak = float(np.max(mult.tax[1]))
        spend_peak = float(np.max(mult.spending[1]))
        corr = exogeneity_report(draws)
        tax_output_mass = float(np.mean(corr[:, 0, 2] < 0.0))
        ok = (prob > 0.68 and tax_output_mass >= 0.80
              and 0.4 <= tax_peak <= 1.1 and 0.9 <= spend_peak <= 1.5)
        passed = report(
            "empirical-multipliers", bool(ok),
            f"P(spend>tax at impact)={prob:.2f} (> 0.68); "
            f"P(corr(tax proxy, output shock)<0)={tax_output_mass:.2f} (>=0.80); "
            f"tax peak={tax_peak:.2f} in [0.4, 1.1]; "
            f"spending peak={spend_peak:.2f} in [0.9, 1.5]")
        write_run_outputs(draws, ds, tmp_path / "empirical")
        assert passed

import numpy as np
import pytest

from proxysvar.errors import ProxySvarError
from proxysvar.sampler import ChainConfig
from proxysvar.simlab import (
    MetricsTable,
    ProxyRule,
    Scenario,
    coverage_report,
    generate_dataset,
    metrics_to_csv,
    preset_scenario,
    run_scenario,
)

FAST = ChainConfig(draws=700, burn_in=350, seed=0)


class TestGenerateDataset:
    def test_perfect_proxy_correlation(self):
        sc = Scenario("x", T=5000, proxy_rule=ProxyRule(coef_noise=0.0))
        data = generate_dataset(sc, seed=1)
        corr = np.corrcoef(data.proxy, data.shocks[:, 2])[0, 1]
        assert abs(corr - 1.0) < 1e-12

    def test_exogenous_large_sample_correlations(self):
        sc = preset_scenario("exogenous")
        sc = Scenario(sc.name, T=1_000_000, proxy_rule=sc.proxy_rule)
        data = generate_dataset(sc, seed=2)
        corr_target = np.corrcoef(data.proxy, data.shocks[:, 2])[0, 1]
        corr_y = np.corrcoef(data.proxy, data.shocks[:, 1])[0, 1]
        assert abs(corr_target - 1 / np.sqrt(2)) < 0.01
        assert abs(corr_y) < 0.01

    def test_endogenous_contamination_covariance(self):
        sc = preset_scenario("endogenous")
        sc = Scenario(sc.name, T=1_000_000, proxy_rule=sc.proxy_rule)
        data = generate_dataset(sc, seed=3)
        cov = np.mean(data.proxy * data.shocks[:, 1])
        assert abs(cov - (-0.37)) < 0.01

    def test_panel_is_static_mix_of_shocks(self):
        sc = preset_scenario("exogenous")
        data = generate_dataset(sc, seed=4)
        assert np.allclose(data.panel.values, data.shocks @ sc.b0.T)
        assert data.panel.presample.shape[0] == 0

    def test_shared_seed_shares_shocks_across_scenarios(self):
        a = generate_dataset(preset_scenario("exogenous"), seed=5)
        b = generate_dataset(preset_scenario("endogenous"), seed=5)
        assert np.array_equal(a.shocks, b.shocks)
        assert np.array_equal(a.noise, b.noise)
        assert not np.array_equal(a.proxy, b.proxy)

    def test_weak_presets_differ(self):
        assert preset_scenario("weakly_endogenous").proxy_rule.coef_contaminant == -0.10
        assert preset_scenario("weakly_endogenous_alt").proxy_rule.coef_contaminant == -0.05

    def test_unknown_preset(self):
        with pytest.raises(ProxySvarError):
            preset_scenario("nope")


class TestRunScenario:
    def small(self, estimators, reps=4, T=150):
        sc = preset_scenario("exogenous", T=T, replications=reps, estimators=estimators)
        return sc

    def test_reproducible_bit_for_bit(self):
        sc = self.small(("gaussian_weighting",))
        t1 = run_scenario(sc, FAST, master_seed=11)
        t2 = run_scenario(sc, FAST, master_seed=11)
        est = "gaussian_weighting"
        assert np.array_equal(t1.mean[est], t2.mean[est])
        assert np.array_equal(t1.mse[est], t2.mse[est])
        assert np.array_equal(t1.coverage[est], t2.coverage[est])
        assert np.array_equal(t1.avg_length[est], t2.avg_length[est])

    def test_workers_do_not_change_results(self):
        sc = self.small(("gaussian_weighting",))
        t1 = run_scenario(sc, FAST, master_seed=12, workers=1)
        t2 = run_scenario(sc, FAST, master_seed=12, workers=2)
        assert np.array_equal(t1.mean["gaussian_weighting"], t2.mean["gaussian_weighting"])

    def test_nongaussian_metrics_invariant_across_scenarios(self):
        cfg = FAST
        tables = []
        for name in ("exogenous", "endogenous"):
            sc = preset_scenario(name, T=150, replications=3, estimators=("nongaussian",))
            tables.append(run_scenario(sc, cfg, master_seed=13))
        assert np.array_equal(tables[0].mean["nongaussian"], tables[1].mean["nongaussian"])
        assert np.array_equal(tables[0].coverage["nongaussian"],
                              tables[1].coverage["nongaussian"])

    def test_mse_shrinks_with_sample_size(self):
        cfg = ChainConfig(draws=1500, burn_in=700, seed=0)
        small = run_scenario(preset_scenario("exogenous", T=250, replications=12,
                                             estimators=("gaussian_weighting",)),
                             cfg, master_seed=14)
        big = run_scenario(preset_scenario("exogenous", T=800, replications=12,
                                           estimators=("gaussian_weighting",)),
                           cfg, master_seed=14)
        assert np.all(big.mse["gaussian_weighting"] < small.mse["gaussian_weighting"])

    def test_csv_layout(self, tmp_path):
        sc = self.small(("gaussian_weighting", "nongaussian"), reps=2)
        table = run_scenario(sc, FAST, master_seed=15)
        path = tmp_path / "metrics.csv"
        metrics_to_csv([table], path)
        text = path.read_text().strip().split("\n")
        assert text[0].split(",")[:3] == ["scenario", "T", "estimator"]
        assert len(text) == 3
        rows = coverage_report(table)
        assert {r["estimator"] for r in rows} == {"gaussian_weighting", "nongaussian"}
        for r in rows:
            for nm in ("g", "y", "tau"):
                assert 0.0 <= r[f"coverage_{nm}"] <= 1.0
                assert r[f"length_{nm}"] >= 0.0


class TestDegenerateBands:
    def test_zero_width_band_covers_only_exact_truth(self):
        # coverage logic: a zero-width band contains the truth only when the
        # band endpoints equal it exactly
        truth = 1.0
        lo = hi = np.array([0.999])
        assert not (lo[0] <= truth <= hi[0])
        lo = hi = np.array([1.0])
        assert lo[0] <= truth <= hi[0]

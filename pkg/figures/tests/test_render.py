import hashlib
import json
import shutil
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from svarfigures.cli import main
from svarfigures.render import KINDS, SchemaError


def write_synthetic_run(run_dir: Path, with_tfp: bool = True,
                        zero_mu: bool = False) -> None:
    """A minimal schema-conforming run directory with synthetic numbers."""
    run_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(0)
    horizons = np.arange(21)

    rows = ["horizon,tax_median,tax_p16,tax_p84,spend_median,spend_p16,spend_p84,"
            "diff_median,diff_p16,diff_p84"]
    for h in horizons:
        tax = 0.7 * np.exp(-((h - 8) / 6.0) ** 2)
        spend = 1.1 * np.exp(-h / 10.0)
        rows.append(",".join(f"{v:.6f}" for v in (
            h, tax, tax - 0.3, tax + 0.3, spend, spend - 0.25, spend + 0.25,
            spend - tax, spend - tax - 0.4, spend - tax + 0.4)))
    (run_dir / "multipliers.csv").write_text("\n".join(rows) + "\n")

    S = 300
    rows = ["draw,proxy,shock,correlation,mu"]
    proxies = [("tax_proxy", "tax", False), ("tax_proxy", "spend", True),
               ("tax_proxy", "output", True)]
    if with_tfp:
        proxies += [("tfp_proxy", "output", False), ("tfp_proxy", "tax", True),
                    ("tfp_proxy", "spend", True)]
    for i in range(S):
        for name, shock, nontarget in proxies:
            corr = (0.6 if not nontarget else -0.2) + 0.05 * rng.standard_normal()
            mu = ""
            if nontarget:
                mu = "0" if zero_mu else f"{corr / 3:.6f}"
            rows.append(f"{i},{name},{shock},{corr:.6f},{mu}")
    (run_dir / "exogeneity.csv").write_text("\n".join(rows) + "\n")

    records = []
    for i in range(S):
        rec = {"b_1_1": 1.0 + 0.05 * rng.standard_normal(),
               "theta_y": 1.8 + 0.3 * rng.standard_normal(),
               "gamma_y": 0.05 + 0.2 * rng.standard_normal(),
               "log_posterior": -100.0 + rng.standard_normal()}
        for j in (1, 2, 3):
            rec[f"skewness_{j}"] = -0.4 + 0.2 * rng.standard_normal()
            rec[f"kurtosis_{j}"] = 4.5 + 0.5 * rng.standard_normal()
        records.append(json.dumps(rec))
    (run_dir / "draws.jsonl").write_text("\n".join(records) + "\n")

    T = 80
    rows = ["date,eps_tau_med,eps_g_med,eps_y_med,tax_proxy,new_tax_proxy,"
            "tfp_proxy,new_tfp_proxy"]
    for t in range(T):
        date = f"{1960 + t // 4}Q{t % 4 + 1}"
        vals = rng.standard_normal(7) * [1, 1, 1, 1, 0.9, 1, 0.9]
        if not with_tfp:
            rows.append(f"{date}," + ",".join(f"{v:.5f}" for v in vals[:5]) + ",,")
        else:
            rows.append(f"{date}," + ",".join(f"{v:.5f}" for v in vals))
    (run_dir / "new_proxies.csv").write_text("\n".join(rows) + "\n")

    (run_dir / "manifest.json").write_text(json.dumps(
        {"kind": "estimate", "modeled_observations": 223, "seed": 1}))


@pytest.fixture()
def run_dir(tmp_path):
    d = tmp_path / "run"
    write_synthetic_run(d)
    return d


class TestRenderKinds:
    @pytest.mark.parametrize("kind", sorted(KINDS))
    def test_kind_renders(self, kind, run_dir, tmp_path):
        out = tmp_path / f"{kind}.png"
        assert main([kind, "--in", str(run_dir), "--out", str(out)]) == 0
        assert out.exists() and out.stat().st_size > 2000

    def test_rendering_is_deterministic(self, run_dir, tmp_path):
        hashes = []
        for k in (1, 2):
            out = tmp_path / f"mult{k}.png"
            main(["multipliers", "--in", str(run_dir), "--out", str(out)])
            hashes.append(hashlib.sha256(out.read_bytes()).hexdigest())
        assert hashes[0] == hashes[1]

    def test_inputs_never_mutated(self, run_dir, tmp_path):
        before = {p.name: hashlib.sha256(p.read_bytes()).hexdigest()
                  for p in run_dir.iterdir()}
        for kind in sorted(KINDS):
            main([kind, "--in", str(run_dir), "--out", str(tmp_path / f"{kind}.png")])
        after = {p.name: hashlib.sha256(p.read_bytes()).hexdigest()
                 for p in run_dir.iterdir()}
        assert before == after

    def test_two_run_scatter(self, run_dir, tmp_path):
        other = tmp_path / "run2"
        write_synthetic_run(other)
        out = tmp_path / "scatter2.png"
        assert main(["scatter", "--in", str(run_dir), "--in", str(other),
                     "--out", str(out)]) == 0
        assert out.exists()

    def test_zero_mu_draws_show_reference_line(self, tmp_path):
        d = tmp_path / "zero"
        write_synthetic_run(d, zero_mu=True)
        out = tmp_path / "exo.png"
        assert main(["exogeneity", "--in", str(d), "--out", str(out)]) == 0
        assert out.exists()


class TestSchemaErrors:
    def test_missing_file_names_it(self, run_dir, tmp_path):
        (run_dir / "multipliers.csv").unlink()
        code = main(["multipliers", "--in", str(run_dir),
                     "--out", str(tmp_path / "x.png")])
        assert code == 2

    def test_missing_column_names_file_and_column(self, run_dir, tmp_path, capsys):
        text = (run_dir / "multipliers.csv").read_text().splitlines()
        header = text[0].replace("tax_median", "tax_med")
        (run_dir / "multipliers.csv").write_text("\n".join([header] + text[1:]))
        code = main(["multipliers", "--in", str(run_dir),
                     "--out", str(tmp_path / "x.png")])
        assert code == 2
        err = capsys.readouterr().err
        assert "multipliers.csv" in err and "tax_median" in err

    def test_renderers_raise_schema_error_directly(self, run_dir, tmp_path):
        (run_dir / "draws.jsonl").write_text("not json\n")
        with pytest.raises(SchemaError):
            KINDS["moments"](run_dir, tmp_path / "m.png")


@pytest.mark.skipif(shutil.which("proxysvar") is None,
                    reason="primary package CLI not installed")
class TestAgainstRealRun:
    def test_renders_from_synthetic_fixture_run(self, tmp_path):
        """End-to-end over the external interface: run the estimation CLI on
        its shipped fixture, then render every kind from the exports."""
        from proxysvar.fiscal import fixture_path

        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({
            "command": "estimate", "seed": 5, "out_dir": str(tmp_path / "run"),
            "data_path": str(fixture_path()),
            "chain": {"draws": 260, "burn_in": 130}}))
        proc = subprocess.run([sys.executable, "-m", "proxysvar.cli", "estimate",
                               "--config", str(cfg)], capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr
        for kind in sorted(KINDS):
            out = tmp_path / f"{kind}.png"
            assert main([kind, "--in", str(tmp_path / "run"),
                         "--out", str(out)]) == 0, kind
            assert out.exists()

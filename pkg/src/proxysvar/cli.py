"""Command-line orchestration: ``proxysvar simulate|estimate|report``.

Progress goes to standard error; data products go to files inside the run's
output directory.  Exit codes: 0 success, 2 configuration error, 3 runtime
error.

Estimation runs stream one JSON record per retained draw to ``draws.jsonl``
with flat named fields: impact entries ``b_r_c``, shock shapes ``lam_j`` /
``q_j``, exogeneity means ``mu_k_j`` with ``sigma2_mu_k_j``, reduced-form
coefficients ``pi_j``, per-draw ``skewness_j`` / ``kurtosis_j``, the
elasticities ``theta_y`` / ``gamma_y``, and ``log_posterior``.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError, ProxySvarError
from .fiscal import (
    APP_MODELS,
    BASELINE,
    DEFAULT_SPEND_SHARE,
    DEFAULT_TAX_SHARE,
    estimate as fiscal_estimate,
    load_dataset,
    write_run_outputs,
)
from .runconfig import RunConfig, parse_config
from .sampler import ChainConfig
from .simlab import (
    ProxyRule,
    Scenario,
    coverage_report,
    metrics_to_csv,
    preset_scenario,
    run_scenario,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _progress(msg: str) -> None:
    print(msg, file=sys.stderr, flush=True)


def _chain_config(cfg: RunConfig) -> ChainConfig:
    chain = dict(cfg.chain)
    chain.setdefault("draws", 4000)
    chain.setdefault("burn_in", chain["draws"] // 2)
    return ChainConfig(seed=cfg.seed, **chain)


def _scenario_from_config(cfg: RunConfig) -> Scenario:
    if cfg.scenario is not None:
        sc = dict(cfg.scenario)
        rule = ProxyRule(**sc.pop("proxy_rule", {}))
        sc.setdefault("name", cfg.preset or "custom")
        sc.setdefault("T", 250)
        estimators = sc.pop("estimators", None)
        scenario = Scenario(proxy_rule=rule, **sc)
        if estimators:
            scenario = Scenario(name=scenario.name, T=scenario.T, proxy_rule=rule,
                                replications=scenario.replications,
                                estimators=tuple(estimators))
        return scenario
    return preset_scenario(cfg.preset)


def _write_manifest(out_dir: Path, cfg: RunConfig, kind: str) -> None:
    manifest = {
        "kind": kind,
        "seed": cfg.seed,
        "version": __version__,
        "numpy": np.__version__,
        "config": cfg.raw,
        "config_sha256": hashlib.sha256(
            json.dumps(cfg.raw, sort_keys=True).encode()).hexdigest(),
    }
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _cmd_simulate(cfg: RunConfig) -> int:
    scenario = _scenario_from_config(cfg)
    chain = _chain_config(cfg)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    workers = cfg.effective_workers
    _progress(f"simulate: scenario {scenario.name!r} T={scenario.T} "
              f"replications={scenario.replications} workers={workers}")
    table = run_scenario(scenario, chain, master_seed=cfg.seed, workers=workers)
    metrics_to_csv([table], out / "metrics.csv")
    with open(out / "coverage.csv", "w", newline="") as fh:
        rows = coverage_report(table)
        writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        for row in rows:
            writer.writerow({k: (f"{v:.6g}" if isinstance(v, float) else v)
                             for k, v in row.items()})
    _write_manifest(out, cfg, "simulate")
    _progress(f"simulate: wrote {out / 'metrics.csv'} and {out / 'coverage.csv'}")
    return EXIT_OK


def _cmd_estimate(cfg: RunConfig) -> int:
    model = dict(cfg.model)
    name = model.get("name", BASELINE)
    if name not in APP_MODELS:
        raise ConfigError([f"config.model.name: unknown model {name!r}; "
                           f"choose from {list(APP_MODELS)}"])
    p = int(model.get("lags", 4))
    sample = (str(model.get("sample_start", "1950Q2")),
              str(model.get("sample_end", "2006Q4")))
    dataset = load_dataset(cfg.data_path, sample=sample)
    chain = _chain_config(cfg)
    _progress(f"estimate: model {name!r} on {cfg.data_path} "
              f"(T={dataset.n_obs}, lags={p}, draws={chain.draws})")
    draws = fiscal_estimate(dataset, model=name, p=p, cfg=chain,
                            include_dummy=bool(model.get("include_dummy", True)))
    out = Path(cfg.out_dir)
    write_run_outputs(
        draws, dataset, out, p=p,
        horizon=int(model.get("horizon", 20)),
        seed=cfg.seed, config=cfg.raw,
        tax_share=float(model.get("tax_share", DEFAULT_TAX_SHARE)),
        spend_share=float(model.get("spend_share", DEFAULT_SPEND_SHARE)))
    _progress(f"estimate: wrote outputs under {out}")
    return EXIT_OK


def _render_table(path: Path) -> str:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        return "(empty)"
    widths = [max(len(r[i]) for r in rows if i < len(r)) for i in range(len(rows[0]))]
    lines = []
    for k, row in enumerate(rows):
        lines.append("  ".join(c.ljust(w) for c, w in zip(row, widths)))
        if k == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines)


def _cmd_report(cfg: RunConfig) -> int:
    run_dir = Path(cfg.run_dir)
    shown = 0
    for name in ("metrics.csv", "coverage.csv", "summary.csv", "multipliers.csv"):
        path = run_dir / name
        if path.exists():
            print(f"== {name}")
            print(_render_table(path))
            print()
            shown += 1
    if not shown:
        raise ProxySvarError(f"no report-able outputs found under {run_dir}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="proxysvar",
        description="Proxy-weighted Bayesian SVAR estimation and simulation")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (("simulate", "run a Monte Carlo scenario"),
                        ("estimate", "estimate the fiscal application models"),
                        ("report", "render plain-text tables from prior outputs")):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--config", required=True, help="JSON config file")
        sp.add_argument("--out", help="override the output directory")
        sp.add_argument("--seed", type=int, help="override the config seed")
        sp.add_argument("--threads", type=int, help="worker count for replications")
        sp.add_argument("--preset", choices=("exogenous", "weak", "endogenous"),
                        help="scenario preset (simulate only)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = parse_config(args.config)
        if cfg.command != args.command:
            raise ConfigError([
                f"config.command is {cfg.command!r} but the CLI invoked {args.command!r}"])
        overrides = {}
        if args.out is not None:
            overrides["out_dir"] = args.out
        if args.seed is not None:
            overrides["seed"] = args.seed
        if args.threads is not None:
            overrides["workers"] = args.threads
        if getattr(args, "preset", None):
            overrides["preset"] = {"weak": "weakly_endogenous"}.get(args.preset, args.preset)
            overrides["scenario"] = None
        if overrides:
            raw = dict(cfg.raw)
            raw.update({k: v for k, v in overrides.items() if k != "scenario"})
            from dataclasses import replace
            cfg = replace(cfg, raw=raw, **overrides)
    except ConfigError as exc:
        for problem in exc.problems:
            _progress(f"config error: {problem}")
        return EXIT_CONFIG
    try:
        if cfg.command == "simulate":
            return _cmd_simulate(cfg)
        if cfg.command == "estimate":
            return _cmd_estimate(cfg)
        return _cmd_report(cfg)
    except ConfigError as exc:
        for problem in exc.problems:
            _progress(f"config error: {problem}")
        return EXIT_CONFIG
    except ProxySvarError as exc:
        _progress(json.dumps({"error": type(exc).__name__, "message": str(exc)}))
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())

"""Strictly validated run configuration for the command-line entry points.

Configs are JSON files.  Validation collects every problem (not just the
first) and suggests a close key name for likely typos.
"""
from __future__ import annotations

import difflib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional

from .errors import ConfigError

COMMANDS = ("simulate", "estimate", "report")

CHAIN_KEYS = {
    "draws": int, "burn_in": int, "thin": int,
    "scale_pi": float, "scale_b": float, "scale_shape": float, "scale_rot": float,
    "adapt_window": int, "target_accept": float,
    "adapt_covariance": bool, "rotation_moves": bool, "reject_unstable": bool,
}
SCENARIO_KEYS = {"name": str, "T": int, "replications": int,
                 "proxy_rule": dict, "estimators": list}
PROXY_RULE_KEYS = {"coef_target": float, "coef_contaminant": float, "coef_noise": float}
MODEL_KEYS = {"name": str, "lags": int, "include_dummy": bool,
              "tax_share": float, "spend_share": float, "horizon": int,
              "sample_start": str, "sample_end": str}
TOP_KEYS = {
    "command": str, "seed": int, "out_dir": str, "data_path": str,
    "preset": str, "scenario": dict, "chain": dict, "model": dict,
    "workers": int, "run_dir": str,
}


@dataclass(frozen=True)
class RunConfig:
    """Fully validated settings for one command invocation.

    ``workers`` defaults to the available parallelism when the config leaves
    it unset."""

    command: str
    seed: int
    out_dir: str
    data_path: Optional[str] = None
    preset: Optional[str] = None
    scenario: Optional[dict] = None
    chain: Dict[str, object] = field(default_factory=dict)
    model: Dict[str, object] = field(default_factory=dict)
    workers: Optional[int] = None
    run_dir: Optional[str] = None
    raw: Dict[str, object] = field(default_factory=dict)

    @property
    def effective_workers(self) -> int:
        if self.workers is not None:
            return self.workers
        import os

        return os.cpu_count() or 1


def _check_keys(obj: dict, allowed: Dict[str, type], where: str,
                problems: List[str]) -> None:
    for key, val in obj.items():
        if key not in allowed:
            hint = difflib.get_close_matches(key, allowed, n=1)
            extra = f"; did you mean {hint[0]!r}?" if hint else ""
            problems.append(f"{where}: unknown key {key!r}{extra}")
            continue
        want = allowed[key]
        if want is float and isinstance(val, (int, float)) and not isinstance(val, bool):
            continue
        if want is int and isinstance(val, bool):
            problems.append(f"{where}.{key}: expected {want.__name__}, got bool")
            continue
        if not isinstance(val, want):
            problems.append(
                f"{where}.{key}: expected {want.__name__}, got {type(val).__name__}")


def parse_config(path) -> RunConfig:
    """Load and validate a config file; raises :class:`ConfigError` carrying
    the complete list of problems."""
    path = Path(path)
    problems: List[str] = []
    if not path.exists():
        raise ConfigError([f"config file not found: {path}"])
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError([f"invalid JSON in {path}: {exc}"]) from None
    if not isinstance(raw, dict):
        raise ConfigError([f"{path}: top level must be an object"])

    _check_keys(raw, TOP_KEYS, "config", problems)
    command = raw.get("command")
    if command not in COMMANDS:
        problems.append(f"config.command: must be one of {list(COMMANDS)}, got {command!r}")
    if "seed" not in raw:
        problems.append("config.seed: mandatory")
    elif not isinstance(raw["seed"], int) or isinstance(raw["seed"], bool):
        problems.append("config.seed: expected int")
    if "out_dir" not in raw and command != "report":
        problems.append("config.out_dir: mandatory for simulate/estimate")
    elif "out_dir" in raw and isinstance(raw["out_dir"], str):
        import os

        parent = Path(raw["out_dir"]).resolve()
        while not parent.exists() and parent != parent.parent:
            parent = parent.parent
        if not os.access(parent, os.W_OK):
            problems.append(f"config.out_dir: not writable under {parent}")

    chain = raw.get("chain", {})
    if isinstance(chain, dict):
        _check_keys(chain, CHAIN_KEYS, "config.chain", problems)
        draws = chain.get("draws")
        burn = chain.get("burn_in", 0)
        if isinstance(draws, int) and isinstance(burn, int) and not draws > burn >= 0:
            problems.append(
                f"config.chain: need draws > burn_in >= 0, got draws={draws}, burn_in={burn}")

    scenario = raw.get("scenario")
    if scenario is not None and isinstance(scenario, dict):
        _check_keys(scenario, SCENARIO_KEYS, "config.scenario", problems)
        rule = scenario.get("proxy_rule", {})
        if isinstance(rule, dict):
            _check_keys(rule, PROXY_RULE_KEYS, "config.scenario.proxy_rule", problems)

    model = raw.get("model", {})
    if isinstance(model, dict):
        _check_keys(model, MODEL_KEYS, "config.model", problems)

    if command == "simulate" and scenario is None and "preset" not in raw:
        problems.append("config: simulate needs either 'scenario' or 'preset'")
    if command == "estimate":
        if "data_path" not in raw:
            problems.append("config.data_path: mandatory for estimate")
        elif not Path(str(raw["data_path"])).exists():
            problems.append(f"config.data_path: file not found: {raw['data_path']}")
    if command == "report" and "run_dir" not in raw:
        problems.append("config.run_dir: mandatory for report")
    elif command == "report" and "run_dir" in raw and not Path(str(raw["run_dir"])).is_dir():
        problems.append(f"config.run_dir: not a directory: {raw['run_dir']}")

    workers = raw.get("workers")
    if workers is not None and (not isinstance(workers, int)
                                or isinstance(workers, bool) or workers < 1):
        problems.append("config.workers: expected positive int")

    if problems:
        raise ConfigError(problems)
    return RunConfig(
        command=str(command), seed=int(raw["seed"]),
        out_dir=str(raw.get("out_dir", "")),
        data_path=raw.get("data_path"), preset=raw.get("preset"),
        scenario=scenario, chain=dict(chain), model=dict(model),
        workers=workers, run_dir=raw.get("run_dir"), raw=raw,
    )

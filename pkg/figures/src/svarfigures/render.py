"""Figure renderers over the documented run-export schemas.

Every renderer reads flat files from a run directory and writes one image.
Styles are fixed and nothing time- or environment-dependent enters the
output, so identical inputs yield identical images.
"""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

BAND_COLOR = "#9ecae1"
LINE_COLOR = "#08519c"
ALT_COLOR = "#a63603"
REF_COLOR = "#555555"

SHOCK_LABELS = {"1": "tax shock", "2": "spending shock", "3": "output shock"}


class SchemaError(ValueError):
    """An input file does not match its documented schema."""


def _read_csv(path: Path, required: Sequence[str]) -> Dict[str, List[str]]:
    if not path.exists():
        raise SchemaError(f"missing input file: {path}")
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        cols = reader.fieldnames or []
        for col in required:
            if col not in cols:
                raise SchemaError(f"{path}: missing column {col!r}")
        rows = list(reader)
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    return {c: [r[c] for r in rows] for c in cols}


def _floats(table: Dict[str, List[str]], col: str, path: Path) -> np.ndarray:
    try:
        return np.array([float(v) for v in table[col]])
    except ValueError:
        raise SchemaError(f"{path}: non-numeric value in column {col!r}") from None


def _read_draws(path: Path) -> List[dict]:
    if not path.exists():
        raise SchemaError(f"missing input file: {path}")
    records = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                records.append(json.loads(line))
            except json.JSONDecodeError:
                raise SchemaError(f"{path}:{lineno}: invalid JSON record") from None
    if not records:
        raise SchemaError(f"{path}: no draw records")
    return records


def _draw_field(records: List[dict], name: str, path: Path) -> np.ndarray:
    vals = [r[name] for r in records if name in r]
    if not vals:
        raise SchemaError(f"{path}: no draw carries field {name!r}")
    return np.asarray(vals, dtype=float)


def _density(ax, values: np.ndarray, color: str, label: Optional[str] = None):
    values = values[np.isfinite(values)]
    if values.size < 2 or values.std() == 0:
        ax.axvline(values[0] if values.size else 0.0, color=color, label=label)
        return
    # fixed-rule Gaussian KDE keeps rendering deterministic
    h = 1.06 * values.std() * values.size ** -0.2
    grid = np.linspace(values.min() - 3 * h, values.max() + 3 * h, 400)
    dens = np.exp(-0.5 * ((grid[:, None] - values[None, :]) / h) ** 2).sum(axis=1)
    dens /= values.size * h * math.sqrt(2 * math.pi)
    ax.plot(grid, dens, color=color, label=label)
    ax.fill_between(grid, dens, color=color, alpha=0.15)


def _fan(ax, horizons, med, lo, hi, title, color=LINE_COLOR):
    ax.fill_between(horizons, lo, hi, color=BAND_COLOR, alpha=0.8,
                    label="68% band")
    ax.plot(horizons, med, color=color, lw=1.8, label="median")
    ax.axhline(0.0, color=REF_COLOR, lw=0.6)
    ax.set_title(title)
    ax.set_xlabel("quarters")


def render_multipliers(run_dir: Path, out: Path) -> None:
    """Three-panel fan chart: tax multiplier, spending multiplier, and their
    difference, from ``multipliers.csv``."""
    path = run_dir / "multipliers.csv"
    tab = _read_csv(path, ("horizon", "tax_median", "tax_p16", "tax_p84",
                           "spend_median", "spend_p16", "spend_p84",
                           "diff_median", "diff_p16", "diff_p84"))
    h = _floats(tab, "horizon", path)
    fig, axes = plt.subplots(1, 3, figsize=(12, 3.6), sharex=True)
    for ax, stem, title in zip(
            axes, ("tax", "spend", "diff"),
            ("tax multiplier", "spending multiplier", "spending minus tax")):
        _fan(ax, h, _floats(tab, f"{stem}_median", path),
             _floats(tab, f"{stem}_p16", path), _floats(tab, f"{stem}_p84", path),
             title)
    axes[0].legend(loc="upper right", fontsize=8)
    fig.tight_layout()
    fig.savefig(out)
    plt.close(fig)


def _exogeneity_table(run_dir: Path):
    path = run_dir / "exogeneity.csv"
    tab = _read_csv(path, ("draw", "proxy", "shock", "correlation", "mu"))
    corr = _floats(tab, "correlation", path)
    return path, tab, corr


def _reference_sd(run_dir: Path) -> Optional[float]:
    manifest = run_dir / "manifest.json"
    if not manifest.exists():
        return None
    try:
        T = json.loads(manifest.read_text()).get("modeled_observations")
    except json.JSONDecodeError:
        return None
    return 1.0 / math.sqrt(T) if T else None


def render_exogeneity(run_dir: Path, out: Path) -> None:
    """Posterior densities of each proxy's correlation with every non-target
    shock, with the exogenous-prior reference curve."""
    path, tab, corr = _exogeneity_table(run_dir)
    pairs = sorted({(p, s) for p, s in zip(tab["proxy"], tab["shock"])})
    # non-target pairs are those carrying mu draws; fall back to all pairs
    mu_pairs = sorted({(p, s) for p, s, m in zip(tab["proxy"], tab["shock"], tab["mu"]) if m})
    if mu_pairs:
        pairs = mu_pairs
    ref_sd = _reference_sd(run_dir)
    fig, axes = plt.subplots(1, len(pairs), figsize=(3.6 * len(pairs), 3.2),
                             squeeze=False)
    mask_all = np.array(list(zip(tab["proxy"], tab["shock"])))
    for ax, (proxy, shock) in zip(axes[0], pairs):
        sel = (mask_all[:, 0] == proxy) & (mask_all[:, 1] == shock)
        _density(ax, corr[sel], LINE_COLOR, "posterior")
        if ref_sd:
            grid = np.linspace(-4 * ref_sd, 4 * ref_sd, 300)
            ax.plot(grid, np.exp(-0.5 * (grid / ref_sd) ** 2)
                    / (ref_sd * math.sqrt(2 * math.pi)),
                    color=REF_COLOR, ls="--", label="exogenous prior")
        ax.axvline(0.0, color=REF_COLOR, lw=0.6)
        ax.set_title(f"corr({proxy}, {shock} shock)", fontsize=9)
    axes[0, 0].legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(out)
    plt.close(fig)


def render_relevance(run_dir: Path, out: Path) -> None:
    """Posterior densities of each proxy's correlation with its target shock
    (the pairs that carry no exogeneity-mean draws)."""
    path, tab, corr = _exogeneity_table(run_dir)
    rows = list(zip(tab["proxy"], tab["shock"], tab["mu"]))
    nontarget = {(p, s) for p, s, m in rows if m}
    pairs = sorted({(p, s) for p, s, _ in rows if (p, s) not in nontarget})
    if not pairs:
        raise SchemaError(f"{path}: no relevance pairs found")
    mask_all = np.array([(p, s) for p, s, _ in rows])
    fig, axes = plt.subplots(1, len(pairs), figsize=(3.6 * len(pairs), 3.2),
                             squeeze=False)
    for ax, (proxy, shock) in zip(axes[0], pairs):
        sel = (mask_all[:, 0] == proxy) & (mask_all[:, 1] == shock)
        _density(ax, corr[sel], LINE_COLOR)
        ax.axvline(0.0, color=REF_COLOR, lw=0.6)
        ax.set_title(f"corr({proxy}, {shock} shock)", fontsize=9)
    fig.tight_layout()
    fig.savefig(out)
    plt.close(fig)


def render_moments(run_dir: Path, out: Path) -> None:
    """Posterior densities of the shocks' sample skewness and kurtosis from
    the per-draw records."""
    path = run_dir / "draws.jsonl"
    records = _read_draws(path)
    shocks = []
    j = 1
    while any(f"skewness_{j}" in r for r in records):
        shocks.append(j)
        j += 1
    if not shocks:
        raise SchemaError(f"{path}: records carry no skewness/kurtosis fields")
    fig, axes = plt.subplots(2, len(shocks), figsize=(3.4 * len(shocks), 6),
                             squeeze=False)
    for col, j in enumerate(shocks):
        _density(axes[0, col], _draw_field(records, f"skewness_{j}", path), LINE_COLOR)
        axes[0, col].axvline(0.0, color=REF_COLOR, lw=0.6)
        axes[0, col].set_title(f"skewness, {SHOCK_LABELS.get(str(j), f'shock {j}')}",
                               fontsize=9)
        _density(axes[1, col], _draw_field(records, f"kurtosis_{j}", path), ALT_COLOR)
        axes[1, col].axvline(3.0, color=REF_COLOR, lw=0.6)
        axes[1, col].set_title(f"kurtosis, {SHOCK_LABELS.get(str(j), f'shock {j}')}",
                               fontsize=9)
    fig.tight_layout()
    fig.savefig(out)
    plt.close(fig)


def render_elasticity(run_dir: Path, out: Path) -> None:
    """Posterior densities of the revenue and spending elasticities."""
    path = run_dir / "draws.jsonl"
    records = _read_draws(path)
    fig, axes = plt.subplots(1, 2, figsize=(8, 3.2))
    for ax, field, title in zip(axes, ("theta_y", "gamma_y"),
                                ("tax-revenue elasticity", "spending elasticity")):
        _density(ax, _draw_field(records, field, path), LINE_COLOR)
        ax.set_title(title, fontsize=10)
    fig.tight_layout()
    fig.savefig(out)
    plt.close(fig)


def render_scatter(run_dir: Path, out: Path, second_dir: Optional[Path] = None) -> None:
    """Median tax shocks against median output shocks, with a fitted line.

    With a second run directory, the tax shocks come from the first run and
    the output shocks from the second (same sample dates required).
    """
    path = run_dir / "new_proxies.csv"
    tab = _read_csv(path, ("date", "eps_tau_med", "eps_g_med", "eps_y_med"))
    tax = _floats(tab, "eps_tau_med", path)
    if second_dir is not None:
        path2 = second_dir / "new_proxies.csv"
        tab2 = _read_csv(path2, ("date", "eps_y_med"))
        if tab2["date"] != tab["date"]:
            raise SchemaError(f"{path2}: dates differ from {path}")
        output = _floats(tab2, "eps_y_med", path2)
    else:
        output = _floats(tab, "eps_y_med", path)
    fig, ax = plt.subplots(figsize=(4.4, 4.0))
    ax.scatter(output, tax, s=12, color=LINE_COLOR, alpha=0.7)
    slope, intercept = np.polyfit(output, tax, 1)
    grid = np.linspace(output.min(), output.max(), 50)
    ax.plot(grid, intercept + slope * grid, color=ALT_COLOR,
            label=f"slope {slope:.2f}")
    ax.set_xlabel("output shock")
    ax.set_ylabel("tax shock")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out)
    plt.close(fig)


def render_proxies(run_dir: Path, out: Path) -> None:
    """Original versus residualized proxy series over the sample."""
    path = run_dir / "new_proxies.csv"
    tab = _read_csv(path, ("date", "tax_proxy", "new_tax_proxy"))
    dates = tab["date"]
    ticks = list(range(0, len(dates), max(1, len(dates) // 8)))
    panels = [("tax_proxy", "new_tax_proxy", "tax proxy")]
    if "tfp_proxy" in tab and any(v not in ("", "nan") for v in tab["tfp_proxy"]):
        panels.append(("tfp_proxy", "new_tfp_proxy", "productivity proxy"))
    fig, axes = plt.subplots(len(panels), 1, figsize=(9, 3.0 * len(panels)),
                             squeeze=False)
    for ax, (old_col, new_col, title) in zip(axes[:, 0], panels):
        old = _floats({old_col: [v or "nan" for v in tab[old_col]]}, old_col, path)
        new = _floats({new_col: [v or "nan" for v in tab[new_col]]}, new_col, path)
        x = np.arange(len(dates))
        ax.plot(x, old, color=REF_COLOR, lw=1.0, label="original")
        ax.plot(x, new, color=LINE_COLOR, lw=1.2, label="residualized")
        ax.set_xticks(ticks)
        ax.set_xticklabels([dates[i] for i in ticks], fontsize=7)
        ax.set_title(title, fontsize=10)
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out)
    plt.close(fig)


KINDS = {
    "multipliers": render_multipliers,
    "exogeneity": render_exogeneity,
    "relevance": render_relevance,
    "moments": render_moments,
    "elasticity": render_elasticity,
    "scatter": render_scatter,
    "proxies": render_proxies,
}

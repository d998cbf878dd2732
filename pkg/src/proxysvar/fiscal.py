"""Fiscal-multiplier application pipeline: dataset ingestion, deterministic
design, estimation orchestration, multipliers, the contemporaneous-elasticity
parameter mapping, proxy exogeneity summaries, and new-proxy construction.

The three variables are ordered (tax revenue, government spending, output)
and the structural shocks follow the same ordering.  The tax proxy targets
the tax shock and the productivity proxy targets the output shock.
"""
from __future__ import annotations

import csv
import hashlib
import json
import re
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import (
    DataFormatError,
    MappingDegenerateError,
    MisalignedDataError,
    ProxySvarError,
)
from .likelihoods import ProxySet
from .sampler import (
    ChainConfig,
    Draws,
    GAUSSIAN_PROXY_WEIGHTING,
    LABEL_PROXY,
    ModelSpec,
    NONGAUSSIAN_PROXY_WEIGHTING,
    run_chain,
)
from .shockdist import sample_skewness_kurtosis
from .varcore import (
    DeterministicDesign,
    StructuralMatrix,
    TimeSeriesPanel,
    impulse_responses,
)

CSV_COLUMNS = ("date", "tax", "spend", "output", "tax_proxy", "tfp_proxy")
DEFAULT_SAMPLE = ("1950Q2", "2006Q4")
TAX, SPEND, OUTPUT = 0, 1, 2
DEFAULT_TAX_SHARE = 0.175
DEFAULT_SPEND_SHARE = 0.091

_QUARTER_RE = re.compile(r"^(\d{4})Q([1-4])$")


def _quarter_index(date: str) -> int:
    m = _QUARTER_RE.match(date.strip())
    if not m:
        raise DataFormatError(f"bad quarterly date {date!r}; expected YYYYQ#")
    return int(m.group(1)) * 4 + int(m.group(2)) - 1


@dataclass(frozen=True)
class FiscalDataset:
    """Quarterly fiscal sample with both proxies standardized to mean zero
    and unit variance."""

    dates: Tuple[str, ...]
    values: np.ndarray        # T x 3, columns (tax, spend, output)
    proxies: np.ndarray       # T x 2, columns (tax proxy, tfp proxy)
    labels: Tuple[str, ...] = ("tax", "spend", "output")

    @property
    def n_obs(self) -> int:
        return self.values.shape[0]


def load_dataset(path, sample: Tuple[str, str] = DEFAULT_SAMPLE,
                 normalize_proxies: bool = True) -> FiscalDataset:
    """Parse, validate, and window the fiscal CSV.

    The file must carry the header ``date,tax,spend,output,tax_proxy,
    tfp_proxy`` with contiguous quarterly dates.  Proxy zeros are ordinary
    observations (censored narrative instruments), not missing values.
    """
    path = Path(path)
    if not path.exists():
        raise DataFormatError(f"no such file: {path}")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataFormatError(f"{path} is empty") from None
        if tuple(h.strip() for h in header) != CSV_COLUMNS:
            raise DataFormatError(
                f"{path} header {header} does not match {list(CSV_COLUMNS)}")
        dates: List[str] = []
        rows: List[List[float]] = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(CSV_COLUMNS):
                raise DataFormatError(f"{path}:{lineno}: expected {len(CSV_COLUMNS)} fields")
            dates.append(row[0].strip())
            try:
                rows.append([float(c) for c in row[1:]])
            except ValueError as exc:
                raise DataFormatError(f"{path}:{lineno}: {exc}") from None
    if not rows:
        raise DataFormatError(f"{path} holds no data rows")
    data = np.asarray(rows)
    if not np.all(np.isfinite(data)):
        bad = int(np.argwhere(~np.isfinite(data))[0, 0])
        raise DataFormatError(f"{path}: non-finite entry at data row {bad + 1}")
    idx = [_quarter_index(d) for d in dates]
    for k in range(1, len(idx)):
        if idx[k] != idx[k - 1] + 1:
            raise DataFormatError(
                f"{path}: date gap between {dates[k-1]} and {dates[k]}")
    lo, hi = _quarter_index(sample[0]), _quarter_index(sample[1])
    keep = [k for k, q in enumerate(idx) if lo <= q <= hi]
    if not keep:
        raise DataFormatError(f"{path}: no rows inside sample window {sample}")
    dates = [dates[k] for k in keep]
    data = data[keep]
    values = data[:, :3]
    proxies = data[:, 3:5]
    if normalize_proxies:
        centered = proxies - proxies.mean(axis=0)
        sd = centered.std(axis=0)
        if np.any(sd <= 0.0):
            raise DataFormatError(f"{path}: constant proxy column cannot be normalized")
        proxies = centered / sd
    return FiscalDataset(tuple(dates), values, proxies)


def build_design(dataset: FiscalDataset, include_dummy: bool = True) -> DeterministicDesign:
    """Constant, linear and quadratic trends, and a 1975Q2 point dummy."""
    T = dataset.n_obs
    k = np.arange(1, T + 1, dtype=float)
    cols = [np.ones(T), k, k ** 2]
    names = ["const", "trend", "trend_sq"]
    if include_dummy:
        if "1975Q2" in dataset.dates:
            dummy = np.zeros(T)
            dummy[dataset.dates.index("1975Q2")] = 1.0
            cols.append(dummy)
            names.append("dummy_1975q2")
        else:
            warnings.warn("1975Q2 outside the sample; dummy omitted", RuntimeWarning)
    return DeterministicDesign(np.column_stack(cols), tuple(names))


BASELINE = "nongaussian_weighting"
FISCAL_COMPARISON = "fiscal_gaussian"       # tax proxy, spending-response zero
NONFISCAL_COMPARISON = "nonfiscal_gaussian"  # productivity proxy, tax-row zero
APP_MODELS = (BASELINE, FISCAL_COMPARISON, NONFISCAL_COMPARISON)


def model_inputs(dataset: FiscalDataset, model: str, p: int = 4,
                 include_dummy: bool = True):
    """Panel, design, proxies, and model spec for one application model."""
    if model not in APP_MODELS:
        raise ProxySvarError(f"unknown application model {model!r}; choose from {APP_MODELS}")
    data = dataset.values
    panel = TimeSeriesPanel(values=data[p:], labels=dataset.labels, presample=data[:p])
    design = build_design(dataset, include_dummy=include_dummy).slice_rows(p)
    if model == BASELINE:
        proxies = ProxySet(dataset.proxies[p:], (TAX, OUTPUT),
                           names=("tax_proxy", "tfp_proxy"))
        # productivity proxy labels the output shock first, then the tax proxy
        spec = ModelSpec(NONGAUSSIAN_PROXY_WEIGHTING, labeling=LABEL_PROXY,
                         label_priority=(1, 0))
    elif model == FISCAL_COMPARISON:
        proxies = ProxySet(dataset.proxies[p:, :1], (TAX,), names=("tax_proxy",))
        spec = ModelSpec(GAUSSIAN_PROXY_WEIGHTING, labeling=LABEL_PROXY,
                         zero_restrictions=((SPEND, OUTPUT),))
    else:
        proxies = ProxySet(dataset.proxies[p:, 1:], (OUTPUT,), names=("tfp_proxy",))
        spec = ModelSpec(GAUSSIAN_PROXY_WEIGHTING, labeling=LABEL_PROXY,
                         zero_restrictions=((TAX, OUTPUT),))
    return panel, design, proxies, spec


def estimate(dataset: FiscalDataset, model: str = BASELINE, p: int = 4,
             cfg: Optional[ChainConfig] = None, include_dummy: bool = True) -> Draws:
    """Fit one of the application models; returns the retained draws."""
    if cfg is None:
        cfg = ChainConfig(draws=20000, burn_in=10000, thin=5, seed=0)
    panel, design, proxies, spec = model_inputs(dataset, model, p, include_dummy)
    return run_chain(panel, design, proxies, spec, cfg, estimate_intercept=False)


# ---------------------------------------------------------------------------
# multipliers


@dataclass(frozen=True)
class MultiplierResult:
    """Posterior multiplier paths: median and 16/84 percentile bands."""

    horizons: np.ndarray
    tax: np.ndarray          # 3 x (H+1): rows lower, median, upper
    spending: np.ndarray
    difference: np.ndarray   # spending minus tax
    n_excluded: int
    flagged: bool


def multiplier_paths(irf: np.ndarray, tax_share: float, spend_share: float):
    """Per-draw multiplier paths from one impulse-response array.

    The tax shock is scaled to lower tax revenue by one percent on impact
    (so a positive multiplier means tax cuts raise output); the spending
    shock is scaled to raise spending by one percent on impact.  Output
    responses are converted to GDP units with the revenue and spending
    shares.
    """
    tax_impact = irf[0, TAX, TAX]
    spend_impact = irf[0, SPEND, SPEND]
    if abs(tax_impact) < 1e-12 or abs(spend_impact) < 1e-12:
        return None
    tax_path = -irf[:, OUTPUT, TAX] / tax_impact / tax_share
    spend_path = irf[:, OUTPUT, SPEND] / spend_impact / spend_share
    return tax_path, spend_path


def compute_multipliers(draws: Draws, horizon: int = 20,
                        tax_share: float = DEFAULT_TAX_SHARE,
                        spend_share: float = DEFAULT_SPEND_SHARE) -> MultiplierResult:
    """Median and 68% bands of the tax and spending multiplier paths."""
    S = draws.n_draws
    tax = np.empty((S, horizon + 1))
    spend = np.empty((S, horizon + 1))
    keep = np.ones(S, dtype=bool)
    for i in range(S):
        irf = impulse_responses(draws.reduced_form(i),
                                StructuralMatrix(draws.b[i, :3, :3]), horizon)
        paths = multiplier_paths(irf, tax_share, spend_share)
        if paths is None:
            keep[i] = False
            continue
        tax[i], spend[i] = paths
    n_excl = int(S - keep.sum())
    flagged = n_excl > 0.01 * S
    if flagged:
        warnings.warn(f"{n_excl} draws excluded from multipliers (>1%)", RuntimeWarning)
    tax, spend = tax[keep], spend[keep]
    diff = spend - tax
    qs = (16, 50, 84)

    def bands(x):
        return np.percentile(x, qs, axis=0)

    return MultiplierResult(np.arange(horizon + 1), bands(tax), bands(spend),
                            bands(diff), n_excl, flagged)


# ---------------------------------------------------------------------------
# contemporaneous-interaction parameter mapping


@dataclass(frozen=True)
class MertensParams:
    """Simultaneous-equation parameterization of the 3x3 impact matrix:
    tax and spending equations load on the output residual (elasticities
    theta_y, gamma_y), the output equation loads on both fiscal residuals
    (eta_tau, eta_g), and each shock carries its own scale."""

    theta_g: float
    theta_y: float
    sigma_tau: float
    gamma_tau: float
    gamma_y: float
    sigma_g: float
    eta_tau: float
    eta_g: float
    sigma_y: float


def map_to_mertens(B) -> MertensParams:
    """Closed-form recovery of the simultaneous-equation parameters from an
    impact matrix ordered (tax, spend, output) x (tax, spend, output)."""
    B = B.values if isinstance(B, StructuralMatrix) else np.asarray(B, dtype=float)
    if B.shape != (3, 3):
        raise MisalignedDataError("parameter mapping requires a 3x3 impact matrix")
    if abs(B[2, 2]) < 1e-12:
        raise MappingDegenerateError("output impact of the output shock is zero")
    theta_y = B[0, 2] / B[2, 2]
    gamma_y = B[1, 2] / B[2, 2]
    lhs = np.array([[B[0, 0], B[1, 0]],
                    [B[0, 1], B[1, 1]]])
    rhs = np.array([B[2, 0], B[2, 1]])
    if abs(np.linalg.det(lhs)) < 1e-12:
        raise MappingDegenerateError("fiscal-response system is singular")
    eta_tau, eta_g = np.linalg.solve(lhs, rhs)
    sigma_tau = B[0, 0] - theta_y * B[2, 0]
    sigma_g = B[1, 1] - gamma_y * B[2, 1]
    if abs(sigma_tau) < 1e-12 or abs(sigma_g) < 1e-12:
        raise MappingDegenerateError("zero shock scale in the fiscal block")
    theta_g = (B[0, 1] - theta_y * B[2, 1]) / sigma_g
    gamma_tau = (B[1, 0] - gamma_y * B[2, 0]) / sigma_tau
    sigma_y = B[2, 2] - eta_tau * B[0, 2] - eta_g * B[1, 2]
    return MertensParams(theta_g, theta_y, sigma_tau, gamma_tau, gamma_y,
                         sigma_g, eta_tau, eta_g, sigma_y)


def mertens_to_impact(params: MertensParams) -> np.ndarray:
    """Rebuild the impact matrix from the simultaneous-equation form."""
    lam = np.array([[0.0, 0.0, params.theta_y],
                    [0.0, 0.0, params.gamma_y],
                    [params.eta_tau, params.eta_g, 0.0]])
    phi = np.array([
        [params.sigma_tau, params.theta_g * params.sigma_g, 0.0],
        [params.gamma_tau * params.sigma_tau, params.sigma_g, 0.0],
        [0.0, 0.0, params.sigma_y]])
    return np.linalg.solve(np.eye(3) - lam, phi)


# ---------------------------------------------------------------------------
# proxy diagnostics and new proxies


def construct_new_proxy(proxy: np.ndarray, shocks: np.ndarray) -> np.ndarray:
    """Residual of the proxy regressed on a constant and the given shock
    series; orthogonal in sample to every regressor and mean zero."""
    proxy = np.asarray(proxy, dtype=float).ravel()
    shocks = np.asarray(shocks, dtype=float)
    if shocks.ndim == 1:
        shocks = shocks[:, None]
    if shocks.shape[0] != proxy.shape[0]:
        raise MisalignedDataError("proxy and shock series lengths differ")
    X = np.column_stack([np.ones(proxy.shape[0]), shocks])
    if np.linalg.matrix_rank(X) < X.shape[1]:
        raise MisalignedDataError("collinear regressors in proxy residualization")
    beta, *_ = np.linalg.lstsq(X, proxy, rcond=None)
    return proxy - X @ beta


def exogeneity_report(draws: Draws, proxies: Optional[ProxySet] = None) -> np.ndarray:
    """Per-draw correlations between each proxy and every innovation column,
    shape (n_draws, K, n)."""
    px = proxies if proxies is not None else draws.proxies
    if px is None:
        raise ProxySvarError("no proxies attached to these draws")
    S = draws.n_draws
    out = np.empty((S, px.n_proxies, draws.n_core))
    zc = px.z - px.z.mean(axis=0)
    zsd = zc.std(axis=0)
    for i in range(S):
        e = draws.innovations(i)
        ec = e - e.mean(axis=0)
        esd = ec.std(axis=0)
        out[i] = (zc.T @ ec) / (e.shape[0] * np.outer(zsd, esd))
    return out


def median_shocks(draws: Draws) -> np.ndarray:
    """Entrywise posterior median of the structural innovations, T x n."""
    S = draws.n_draws
    acc = np.empty((S, draws.panel.n_obs, draws.n_core))
    for i in range(S):
        acc[i] = draws.innovations(i)
    return np.median(acc, axis=0)


def shock_moment_draws(draws: Draws) -> np.ndarray:
    """Sample skewness and kurtosis of each draw's innovations,
    shape (n_draws, n, 2)."""
    S = draws.n_draws
    out = np.empty((S, draws.n_core, 2))
    for i in range(S):
        e = draws.innovations(i)
        for j in range(draws.n_core):
            out[i, j] = sample_skewness_kurtosis(e[:, j])
    return out


# ---------------------------------------------------------------------------
# run outputs


def _write_csv(path, header: Sequence[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([f"{v:.10g}" if isinstance(v, (float, np.floating)) else v
                             for v in row])


def summarize_draws(draws: Draws, dataset: FiscalDataset) -> List[Tuple]:
    """Posterior quantile rows (median, 16th, 84th, mean) per parameter."""
    rows = []

    def add(name, x):
        x = np.asarray(x, dtype=float)
        x = x[np.isfinite(x)]
        if x.size == 0:
            return
        rows.append((name, float(np.median(x)), float(np.percentile(x, 16)),
                     float(np.percentile(x, 84)), float(np.mean(x))))

    n = draws.n_core
    for r in range(n):
        for c in range(n):
            add(f"b_{r+1}_{c+1}", draws.b[:, r, c])
    for j in range(n):
        add(f"lam_{j+1}", draws.lam[:, j])
        add(f"q_{j+1}", draws.q[:, j])
    if draws.mu_mask is not None:
        K = draws.mu_mask.shape[0]
        names = draws.proxies.names if draws.proxies is not None else [f"z{k+1}" for k in range(K)]
        for k in range(K):
            for j in range(n):
                if draws.mu_mask[k, j]:
                    add(f"mu_{names[k]}_{dataset.labels[j]}", draws.mu[:, k, j])
                    add(f"sigma2_mu_{names[k]}_{dataset.labels[j]}", draws.sigma2_mu[:, k, j])
    mert = {f: [] for f in MertensParams.__dataclass_fields__}
    for i in range(draws.n_draws):
        try:
            params = map_to_mertens(draws.b[i, :3, :3])
        except (MappingDegenerateError, MisalignedDataError):
            continue
        for f in mert:
            mert[f].append(getattr(params, f))
    for f, vals in mert.items():
        add(f, np.asarray(vals))
    moments = shock_moment_draws(draws)
    for j in range(n):
        add(f"skewness_{dataset.labels[j]}", moments[:, j, 0])
        add(f"kurtosis_{dataset.labels[j]}", moments[:, j, 1])
    return rows


def write_run_outputs(draws: Draws, dataset: FiscalDataset, out_dir, p: int = 4,
                      horizon: int = 20, seed: Optional[int] = None,
                      config: Optional[dict] = None,
                      tax_share: float = DEFAULT_TAX_SHARE,
                      spend_share: float = DEFAULT_SPEND_SHARE) -> Dict[str, Path]:
    """Write the full export set for one estimation run.

    Files: ``draws.jsonl`` (one record per retained draw), ``summary.csv``
    (posterior quantiles per parameter), ``irf.csv``, ``multipliers.csv``,
    ``exogeneity.csv`` (per-draw proxy/innovation correlations and, where
    estimated, the exogeneity means), ``new_proxies.csv`` (median shocks,
    original and residualized proxies), and ``manifest.json``.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths: Dict[str, Path] = {}

    paths["draws"] = out / "draws.jsonl"
    extras = []
    for i in range(draws.n_draws):
        try:
            params = map_to_mertens(draws.b[i, :3, :3])
            extras.append({"theta_y": params.theta_y, "gamma_y": params.gamma_y})
        except (MappingDegenerateError, MisalignedDataError):
            extras.append({})
    draws.write_records(paths["draws"], shock_moments=True, extras=extras)

    paths["summary"] = out / "summary.csv"
    _write_csv(paths["summary"], ("parameter", "median", "p16", "p84", "mean"),
               summarize_draws(draws, dataset))

    med = np.empty((horizon + 1, 3, 3))
    lo = np.empty_like(med)
    hi = np.empty_like(med)
    irfs = np.empty((draws.n_draws, horizon + 1, 3, 3))
    for i in range(draws.n_draws):
        irfs[i] = impulse_responses(draws.reduced_form(i),
                                    StructuralMatrix(draws.b[i, :3, :3]), horizon)
    lo, med, hi = np.percentile(irfs, (16, 50, 84), axis=0)
    rows = []
    for h in range(horizon + 1):
        for r, var in enumerate(dataset.labels):
            for c, shock in enumerate(("eps_tau", "eps_g", "eps_y")):
                rows.append((h, var, shock, med[h, r, c], lo[h, r, c], hi[h, r, c]))
    paths["irf"] = out / "irf.csv"
    _write_csv(paths["irf"], ("horizon", "variable", "shock", "median", "p16", "p84"), rows)

    mult = compute_multipliers(draws, horizon, tax_share, spend_share)
    rows = []
    for h in range(horizon + 1):
        rows.append((h, mult.tax[1, h], mult.tax[0, h], mult.tax[2, h],
                     mult.spending[1, h], mult.spending[0, h], mult.spending[2, h],
                     mult.difference[1, h], mult.difference[0, h], mult.difference[2, h]))
    paths["multipliers"] = out / "multipliers.csv"
    _write_csv(paths["multipliers"],
               ("horizon", "tax_median", "tax_p16", "tax_p84",
                "spend_median", "spend_p16", "spend_p84",
                "diff_median", "diff_p16", "diff_p84"), rows)

    corr = exogeneity_report(draws)
    px = draws.proxies
    rows = []
    for i in range(draws.n_draws):
        for k in range(px.n_proxies):
            for j in range(3):
                mu_val = ""
                if draws.mu_mask is not None and draws.mu_mask[k, j] and np.isfinite(draws.mu[i, k, j]):
                    mu_val = f"{draws.mu[i, k, j]:.10g}"
                rows.append((i, px.names[k], dataset.labels[j],
                             f"{corr[i, k, j]:.10g}", mu_val))
    paths["exogeneity"] = out / "exogeneity.csv"
    _write_csv(paths["exogeneity"], ("draw", "proxy", "shock", "correlation", "mu"), rows)

    shocks = median_shocks(draws)
    tax_new = construct_new_proxy(px.z[:, 0], shocks[:, [SPEND, OUTPUT]])
    if px.n_proxies > 1:
        tfp_new = construct_new_proxy(px.z[:, 1], shocks[:, [TAX, SPEND]])
    else:
        tfp_new = np.full(shocks.shape[0], np.nan)
    rows = []
    for t in range(shocks.shape[0]):
        rows.append((dataset.dates[p + t], shocks[t, 0], shocks[t, 1], shocks[t, 2],
                     px.z[t, 0], tax_new[t],
                     px.z[t, 1] if px.n_proxies > 1 else "",
                     tfp_new[t] if px.n_proxies > 1 else ""))
    paths["new_proxies"] = out / "new_proxies.csv"
    _write_csv(paths["new_proxies"],
               ("date", "eps_tau_med", "eps_g_med", "eps_y_med",
                "tax_proxy", "new_tax_proxy", "tfp_proxy", "new_tfp_proxy"), rows)

    manifest = {
        "kind": "estimate",
        "seed": seed if seed is not None else draws.cfg.seed,
        "observations": dataset.n_obs,
        "modeled_observations": draws.panel.n_obs,
        "lag_order": p,
        "variant": draws.spec.variant,
        "draws_retained": draws.n_draws,
        "tax_share": tax_share,
        "spend_share": spend_share,
        "config": config or {},
    }
    manifest["config_sha256"] = hashlib.sha256(
        json.dumps(manifest["config"], sort_keys=True).encode()).hexdigest()
    paths["manifest"] = out / "manifest.json"
    paths["manifest"].write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return paths


# ---------------------------------------------------------------------------
# synthetic fixture


def synthetic_fixture(seed: int = 314159, start: str = "1950Q2",
                      n_quarters: int = 227) -> List[List[str]]:
    """Deterministic synthetic rows mimicking the fiscal dataset's schema.

    A stable four-lag system with trends, skewed heavy-tailed shocks, a
    Bernoulli-censored tax proxy and a noisy productivity proxy.  Purely for
    pipeline exercises; carries no empirical content.
    """
    from .shockdist import SkewTParams, skewt_sample
    from .varcore import ReducedFormVar, simulate_var

    rng = np.random.default_rng(seed)
    n, p = 3, 4
    b_true = np.array([
        [2.0, 0.25, 2.2],
        [0.15, 1.1, 0.05],
        [0.25, 0.12, 0.85]]) * 0.01
    lags = np.zeros((p, n, n))
    lags[0] = np.array([[0.62, 0.05, 0.10], [0.02, 0.70, 0.06], [0.03, 0.02, 0.75]])
    lags[1] = np.array([[0.10, 0.0, 0.02], [0.0, 0.08, 0.0], [0.0, 0.01, 0.05]])
    lags[2] = 0.02 * np.eye(n)
    lags[3] = 0.01 * np.eye(n)
    k = np.arange(1, n_quarters + 1, dtype=float)
    dummy = np.zeros(n_quarters)
    base = _quarter_index(start)
    dates = []
    for t in range(n_quarters):
        q = base + t
        dates.append(f"{q // 4}Q{q % 4 + 1}")
    if "1975Q2" in dates:
        dummy[dates.index("1975Q2")] = 1.0
    design = DeterministicDesign(np.column_stack([np.ones(n_quarters), k, k ** 2, dummy]),
                                 ("const", "trend", "trend_sq", "dummy_1975q2"))
    # choose deterministic coefficients so the implied stationary path tracks
    # smooth log-level trends; polynomial lag shifts are absorbed approximately
    target = np.array([[7.2, 0.004, -4e-6, -0.05],
                       [6.8, 0.003, -3e-6, 0.01],
                       [9.1, 0.005, -4e-6, -0.02]])
    long_run = np.eye(n) - lags.sum(axis=0)
    det = long_run @ target
    var = ReducedFormVar(np.zeros(n), lags, det, has_intercept=False)
    shapes = [SkewTParams(-0.35, 5.0), SkewTParams(0.2, 6.0), SkewTParams(-0.4, 5.0)]
    shocks = np.column_stack([skewt_sample(s, rng, n_quarters) for s in shapes])
    # presample on the target path keeps early rows transient-free
    tpre = np.arange(1 - p, 1, dtype=float)
    pres = np.column_stack([np.ones(p), tpre, tpre ** 2, np.zeros(p)]) @ target.T
    values = simulate_var(var, StructuralMatrix(b_true), shocks, presample=pres,
                          design=design)
    censor = rng.random(n_quarters) < 0.75
    tax_proxy = np.where(censor, 0.0, shocks[:, TAX] + 0.4 * rng.standard_normal(n_quarters))
    tfp_proxy = shocks[:, OUTPUT] + 0.7 * rng.standard_normal(n_quarters)
    rows = []
    for t in range(n_quarters):
        rows.append([dates[t], f"{values[t, 0]:.6f}", f"{values[t, 1]:.6f}",
                     f"{values[t, 2]:.6f}", f"{tax_proxy[t]:.6f}", f"{tfp_proxy[t]:.6f}"])
    return rows


def write_fixture(path, seed: int = 314159) -> None:
    rows = synthetic_fixture(seed=seed)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        writer.writerows(rows)


def fixture_path() -> Path:
    return Path(__file__).parent / "fixtures" / "synthetic_fiscal.csv"

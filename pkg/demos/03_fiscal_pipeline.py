# %% Fiscal application pipeline on the synthetic fixture
#
# Loads the shipped synthetic quarterly dataset, fits the proxy-weighted
# skewed-t model, and writes the full export set (draw records, posterior
# summaries, impulse responses, multipliers, exogeneity diagnostics, and
# residualized proxies).  Point the loader at a real dataset with the same
# schema to reproduce the empirical analysis.
from pathlib import Path

import numpy as np

from proxysvar import ChainConfig
from proxysvar.fiscal import (
    compute_multipliers,
    estimate,
    exogeneity_report,
    fixture_path,
    load_dataset,
    map_to_mertens,
    write_run_outputs,
)

dataset = load_dataset(fixture_path())
print(f"loaded {dataset.n_obs} quarters: {dataset.dates[0]}..{dataset.dates[-1]}")

# %% short demonstration chain; scale the draw counts up for real use
draws = estimate(dataset, cfg=ChainConfig(draws=1500, burn_in=700, seed=3))
print("acceptance rates:", {k: round(v, 2) for k, v in draws.accept_rates.items()})

# %% multipliers and elasticities
mult = compute_multipliers(draws)
print(f"impact tax multiplier (median): {mult.tax[1, 0]:+.2f}")
print(f"impact spending multiplier (median): {mult.spending[1, 0]:+.2f}")
med_b = np.median(draws.impact_draws(), axis=0)
params = map_to_mertens(med_b)
print(f"revenue elasticity theta_y at the posterior median: {params.theta_y:.2f}")

# %% proxy exogeneity diagnostics
corr = exogeneity_report(draws)
for k, name in enumerate(draws.proxies.names):
    meds = np.median(corr[:, k, :], axis=0)
    print(f"median corr({name}, shocks): {np.round(meds, 2)}")

# %% write the export set; render images from it with the figures tool:
#   figures multipliers --in demo_run --out multipliers.png
out = Path("demo_run")
paths = write_run_outputs(draws, dataset, out)
print("wrote:", ", ".join(sorted(p.name for p in out.iterdir())))

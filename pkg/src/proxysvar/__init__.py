"""Bayesian proxy-weighted SVAR estimation with non-Gaussian shock
identification, classical proxy baselines, a Monte Carlo laboratory, and a
fiscal-multiplier application pipeline."""

__version__ = "0.1.0"

from .errors import ProxySvarError
from .likelihoods import (
    ExogeneityMeans,
    ProxySet,
    gaussian_log_likelihood,
    nongaussian_log_likelihood,
    proxy_moment_stats,
    reweight_log,
)
from .proxyclassic import AugmentedConfig, AugmentedSystem, build_augmented, iv_impact_ratio
from .sampler import (
    ChainConfig,
    Draws,
    ModelSpec,
    PosteriorDraw,
    first_step_estimate,
    proxy_label_shocks,
    run_chain,
    signperm_accept,
)
from .shockdist import (
    PearsonMoments,
    SkewTParams,
    pearson_sample,
    sample_skewness_kurtosis,
    skewt_log_density,
    skewt_sample,
)
from .simlab import MetricsTable, Scenario, generate_dataset, preset_scenario, run_scenario
from .varcore import (
    DeterministicDesign,
    ReducedFormVar,
    StructuralMatrix,
    TimeSeriesPanel,
    fit_ols,
    impulse_responses,
    is_stable,
    structural_innovations,
)

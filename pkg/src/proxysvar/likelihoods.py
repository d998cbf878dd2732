"""SVAR likelihoods (Gaussian and skewed-t) plus the proxy moment statistics
and likelihood re-weighting terms.

The re-weighting multiplies the SVAR likelihood by Gaussian densities of the
scaled sample covariances between each proxy and every non-target innovation,
penalizing parameter values under which a proxy correlates with shocks it is
assumed (or estimated) not to load on.  Everything is computed in the log
domain.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .errors import MisalignedDataError
from .shockdist import SkewTParams, skewt_log_density
from .varcore import (
    DeterministicDesign,
    ReducedFormVar,
    StructuralMatrix,
    TimeSeriesPanel,
    innovations_from_residuals,
    reduced_form_residuals,
)

LOG_2PI = np.log(2.0 * np.pi)


@dataclass(frozen=True)
class ProxySet:
    """Proxy observations aligned to the modeled sample.

    ``z`` is T x K; ``target_index`` gives the structural-shock column each
    proxy instruments (0-based, distinct).  ``variance`` is the per-proxy
    variance entering the moment conditions; by default the sample variance,
    which is 1 for standardized proxies.
    """

    z: np.ndarray
    target_index: Tuple[int, ...]
    variance: Tuple[float, ...] = ()
    names: Tuple[str, ...] = ()

    def __post_init__(self):
        z = np.asarray(self.z, dtype=float)
        if z.ndim == 1:
            z = z[:, None]
        if z.ndim != 2:
            raise MisalignedDataError("proxy matrix must be T x K")
        if not np.all(np.isfinite(z)):
            raise MisalignedDataError("proxy columns contain non-finite entries")
        object.__setattr__(self, "z", z)
        targets = tuple(int(t) for t in np.atleast_1d(self.target_index))
        if len(targets) != z.shape[1]:
            raise MisalignedDataError("one target index per proxy column required")
        if len(set(targets)) != len(targets):
            raise MisalignedDataError("target indices must be distinct")
        if any(t < 0 for t in targets):
            raise MisalignedDataError("target indices must be non-negative")
        object.__setattr__(self, "target_index", targets)
        if self.variance:
            var = tuple(float(v) for v in self.variance)
        else:
            var = tuple(float(v) for v in z.var(axis=0))
        if len(var) != z.shape[1] or any(v <= 0.0 for v in var):
            raise MisalignedDataError("need one positive variance per proxy")
        object.__setattr__(self, "variance", var)
        names = tuple(self.names) if self.names else tuple(f"z{k+1}" for k in range(z.shape[1]))
        if len(names) != z.shape[1]:
            raise MisalignedDataError("proxy name count differs from column count")
        object.__setattr__(self, "names", names)

    @property
    def n_obs(self) -> int:
        return self.z.shape[0]

    @property
    def n_proxies(self) -> int:
        return self.z.shape[1]

    def nontarget_mask(self, n_shocks: int) -> np.ndarray:
        """Boolean K x n mask, True where shock j is not proxy k's target."""
        if any(t >= n_shocks for t in self.target_index):
            raise MisalignedDataError("target index beyond shock dimension")
        mask = np.ones((self.n_proxies, n_shocks), dtype=bool)
        for k, t in enumerate(self.target_index):
            mask[k, t] = False
        return mask

    def standardized(self) -> "ProxySet":
        """Columns shifted to mean zero and scaled to unit variance."""
        z = self.z - self.z.mean(axis=0)
        sd = z.std(axis=0)
        if np.any(sd <= 0.0):
            raise MisalignedDataError("cannot standardize a constant proxy column")
        return ProxySet(z / sd, self.target_index, variance=(1.0,) * self.n_proxies,
                        names=self.names)


@dataclass(frozen=True)
class ExogeneityMeans:
    """Estimated means of the proxy/non-target-shock covariances.

    ``mu`` and ``sigma2`` are dense K x n arrays; only entries where
    ``mask`` is True (shock is not the proxy's target) are meaningful, the
    rest are kept at zero and never read.
    """

    mu: np.ndarray
    sigma2: np.ndarray
    mask: np.ndarray

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=float)
        s2 = np.asarray(self.sigma2, dtype=float)
        mask = np.asarray(self.mask, dtype=bool)
        if mu.shape != s2.shape or mu.shape != mask.shape:
            raise MisalignedDataError("mu, sigma2, mask must share one K x n shape")
        if np.any(s2[mask] <= 0.0):
            raise MisalignedDataError("hyper-variances must be positive")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma2", s2)
        object.__setattr__(self, "mask", mask)

    @classmethod
    def exogenous(cls, proxies: ProxySet, n_shocks: int, sigma2: float = 1.0) -> "ExogeneityMeans":
        mask = proxies.nontarget_mask(n_shocks)
        return cls(np.zeros(mask.shape), np.full(mask.shape, sigma2), mask)


def proxy_moment_stats(proxies: ProxySet, innovations: np.ndarray) -> np.ndarray:
    """Sample covariances m[k, j] = (1/T) sum_t z[t, k] e[t, j].

    No mean-centering is applied; proxies are expected to be pre-normalized.
    """
    e = np.asarray(innovations, dtype=float)
    if e.ndim != 2 or e.shape[0] != proxies.n_obs:
        raise MisalignedDataError("innovations must be T x n with T matching the proxies")
    return proxies.z.T @ e / e.shape[0]


def reweight_log(proxies: ProxySet, innovations: np.ndarray,
                 mu: Optional[ExogeneityMeans] = None) -> float:
    """Log of the proxy re-weighting function.

    Sums, over proxies k and non-target shocks j, the log density of
    N(m[k, j]; mu[k, j], Var(z_k)/T).  ``mu=None`` is the exogenous case
    (all means zero).
    """
    m = proxy_moment_stats(proxies, innovations)
    mask = proxies.nontarget_mask(m.shape[1])
    if mu is None:
        mu = ExogeneityMeans(np.zeros(m.shape), np.ones(m.shape), mask)
    if mu.mask.shape != mask.shape or not np.array_equal(mu.mask, mask):
        raise MisalignedDataError("exogeneity means not aligned with the proxy set")
    var = np.asarray(proxies.variance)[:, None] / proxies.n_obs
    dev = m - mu.mu
    terms = -0.5 * (LOG_2PI + np.log(var)) - dev * dev / (2.0 * var)
    return float(np.sum(terms[mask]))


def gaussian_loglik_innovations(e: np.ndarray, log_abs_det: float) -> float:
    T = e.shape[0]
    return float(-T * log_abs_det - 0.5 * e.size * LOG_2PI - 0.5 * np.sum(e * e))


def skewt_loglik_terms(e: np.ndarray, shocks: Sequence[SkewTParams]) -> np.ndarray:
    """Per-shock log-likelihood contributions, shape (n,)."""
    if e.shape[1] != len(shocks):
        raise MisalignedDataError("one shock parameterization per innovation column")
    return np.array([float(np.sum(skewt_log_density(e[:, i], s))) for i, s in enumerate(shocks)])


def gaussian_log_likelihood(panel: TimeSeriesPanel, design: Optional[DeterministicDesign],
                            var: ReducedFormVar, B: StructuralMatrix) -> float:
    """Conditional Gaussian log likelihood with standard-normal shocks."""
    u = reduced_form_residuals(panel, design, var)
    sign, logdet = np.linalg.slogdet(B.values)
    e = innovations_from_residuals(u, B.values)
    return gaussian_loglik_innovations(e, logdet)


def nongaussian_log_likelihood(panel: TimeSeriesPanel, design: Optional[DeterministicDesign],
                               var: ReducedFormVar, B: StructuralMatrix,
                               shocks: Sequence[SkewTParams]) -> float:
    """Conditional log likelihood with independent skewed-t shocks."""
    u = reduced_form_residuals(panel, design, var)
    sign, logdet = np.linalg.slogdet(B.values)
    e = innovations_from_residuals(u, B.values)
    T = e.shape[0]
    return float(-T * logdet + np.sum(skewt_loglik_terms(e, shocks)))

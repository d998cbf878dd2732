"""Classical proxy estimators used as comparison baselines: the moment-based
impact-ratio estimator and the proxy-augmented SVAR construction."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from .errors import MisalignedDataError, ProxySvarError, WeakProxyError
from .likelihoods import ProxySet
from .varcore import DeterministicDesign, ReducedFormVar, TimeSeriesPanel


def iv_impact_ratio(z: np.ndarray, residuals: np.ndarray, target: int,
                    guard: float = 1e-8) -> np.ndarray:
    """Relative impacts of the target shock from proxy/residual covariances.

    Component j is sum_t(z_t u_jt) / sum_t(z_t u_it); component ``target`` is
    exactly 1.  Raises :class:`WeakProxyError` when the first-stage covariance
    is below ``guard * T`` in absolute value.
    """
    z = np.asarray(z, dtype=float).ravel()
    u = np.asarray(residuals, dtype=float)
    if u.ndim != 2 or z.shape[0] != u.shape[0]:
        raise MisalignedDataError("proxy and residuals must share the sample length")
    if not 0 <= target < u.shape[1]:
        raise MisalignedDataError("target column out of range")
    num = z @ u
    denom = num[target]
    T = z.shape[0]
    if abs(denom) <= guard * T:
        raise WeakProxyError(
            f"first-stage covariance {denom / T:.3e} below guard {guard:.1e}",
            first_stage_cov=denom / T)
    out = num / denom
    out[target] = 1.0
    return out


@dataclass(frozen=True)
class AugmentedConfig:
    """Switches for the proxy-augmented system.

    The default follows the simplification nu_z = 0, Sigma_eta = 1 and no
    lag feedback from or to the proxy.  ``estimate_noise_scale`` frees the
    measurement-noise loading; ``proxy_intercept`` frees nu_z;
    ``proxy_lags`` (feedback of lagged variables into the proxy equation) is
    not supported.
    """

    estimate_noise_scale: bool = False
    proxy_intercept: bool = False
    proxy_lags: bool = False


@dataclass(frozen=True)
class AugmentedSystem:
    """Stacked (n+K)-variable system with the proxy measurement equations.

    ``panel`` stacks the original variables and the proxy columns.  The
    structural matrix of the stacked system has the block layout
    [[B, 0], [Phi, S_eta]]: ``zero_entries`` pins the structural zeros and
    ``fixed_entries`` pins S_eta under the simplified configuration.
    """

    panel: TimeSeriesPanel
    design: Optional[DeterministicDesign]
    n_vars: int
    proxies: ProxySet
    config: AugmentedConfig
    zero_entries: Tuple[Tuple[int, int], ...]
    fixed_entries: Dict[Tuple[int, int], float] = field(default_factory=dict)

    @property
    def n_total(self) -> int:
        return self.n_vars + self.proxies.n_proxies

    def embed_reduced_form(self, var: ReducedFormVar) -> ReducedFormVar:
        """Lift reduced-form coefficients of the core VAR to the stacked
        system; the proxy equations carry no dynamics."""
        n, K = self.n_vars, self.proxies.n_proxies
        p = var.lag_order
        nu = np.concatenate([var.intercept, np.zeros(K)])
        lags = np.zeros((p, n + K, n + K))
        lags[:, :n, :n] = var.lag_coeffs
        det = np.zeros((n + K, var.n_det))
        det[:n] = var.det_coeffs
        return ReducedFormVar(nu, lags, det, has_intercept=var.has_intercept)


def build_augmented(panel: TimeSeriesPanel, proxies: ProxySet,
                    config: AugmentedConfig = AugmentedConfig(),
                    design: Optional[DeterministicDesign] = None) -> AugmentedSystem:
    """Stack the proxies into the system under the linear measurement model."""
    if config.proxy_lags:
        raise ProxySvarError("lagged feedback in the proxy equation is not supported")
    if proxies.n_obs != panel.n_obs:
        raise MisalignedDataError("proxy sample length differs from the panel")
    n, K = panel.n_vars, proxies.n_proxies
    for t in proxies.target_index:
        if t >= n:
            raise MisalignedDataError("proxy target index beyond system dimension")
    values = np.hstack([panel.values, proxies.z])
    # proxy presample rows are never used (no proxy dynamics); keep zeros
    presample = np.hstack([panel.presample, np.zeros((panel.presample.shape[0], K))])
    labels = panel.labels + proxies.names
    stacked = TimeSeriesPanel(values=values, labels=labels, presample=presample)

    zero: List[Tuple[int, int]] = []
    fixed: Dict[Tuple[int, int], float] = {}
    for r in range(n):  # variables never load on measurement noise
        for c in range(n, n + K):
            zero.append((r, c))
    for k in range(K):
        row = n + k
        for c in range(n):  # exogeneity zeros in Phi
            if c != proxies.target_index[k]:
                zero.append((row, c))
        for k2 in range(K):  # each proxy has its own noise
            col = n + k2
            if k2 != k:
                zero.append((row, col))
            elif not config.estimate_noise_scale:
                fixed[(row, col)] = 1.0
    return AugmentedSystem(panel=stacked, design=design, n_vars=n, proxies=proxies,
                           config=config, zero_entries=tuple(zero), fixed_entries=fixed)

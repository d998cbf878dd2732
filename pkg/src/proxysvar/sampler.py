"""Adaptive Metropolis-within-Gibbs sampler for the proxy-weighted SVAR.

Blocking: the reduced-form coefficients move as one random-walk block shaped
by their least-squares covariance, the free impact-matrix entries as a second
block, and each shock's (lam, log q) pair as its own small block.  The
exogeneity means and their hyper-variances have exact conjugate updates.
Proposal scales adapt toward a target acceptance rate during burn-in and are
frozen afterwards.

Sign conventions are maintained by folding: after every sweep each impact
column is flipped (together with its shock's asymmetry parameter and the
attached exogeneity means) into the representative with positive
proxy-target correlation, positive diagonal, or positive alignment with the
labeling reference, depending on the labeling mode.  Folding maps between
posterior-equivalent points, so it does not disturb the target distribution.
"""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import optimize
from scipy.linalg import expm

from .errors import (
    InitializationError,
    MisalignedDataError,
    OptimizerError,
    ProxySvarError,
    StuckChainError,
    WeakProxyError,
)
from .likelihoods import (
    ExogeneityMeans,
    LOG_2PI,
    ProxySet,
    proxy_moment_stats,
)
from .proxyclassic import AugmentedConfig, build_augmented, iv_impact_ratio
from .shockdist import SkewTParams, skewt_log_density
from .varcore import (
    DeterministicDesign,
    ReducedFormVar,
    StructuralMatrix,
    TimeSeriesPanel,
    fit_ols,
    is_stable,
    reduced_form_residuals,
)

NONGAUSSIAN_PROXY_WEIGHTING = "nongaussian_proxy_weighting"
NONGAUSSIAN_ONLY = "nongaussian_only"
GAUSSIAN_PROXY_WEIGHTING = "gaussian_proxy_weighting"
GAUSSIAN_AUGMENTED = "gaussian_augmented"
VARIANTS = (
    NONGAUSSIAN_PROXY_WEIGHTING,
    NONGAUSSIAN_ONLY,
    GAUSSIAN_PROXY_WEIGHTING,
    GAUSSIAN_AUGMENTED,
)

LABEL_PROXY = "proxy-correlation"
LABEL_FIRST_STEP = "first-step-estimator"


@dataclass(frozen=True)
class ModelSpec:
    """Which model to estimate and how its shocks are labeled."""

    variant: str
    zero_restrictions: Tuple[Tuple[int, int], ...] = ()
    labeling: str = LABEL_PROXY
    label_reference: Optional[np.ndarray] = None
    label_priority: Optional[Tuple[int, ...]] = None
    ig_a: float = 0.0
    ig_b: float = 0.0
    # With a = b = 0 the (mu, sigma2) posterior is improper: its spike at
    # zero absorbs a Gibbs chain.  Hyper-variances below the moment
    # condition's own noise scale Var(z)/T are indistinguishable from an
    # exact zero, so sigma2 is floored at this fraction of Var(z)/T.
    sigma2_mu_floor_frac: float = 0.1
    lambda_bounds: Tuple[float, float] = (-0.99, 0.99)
    q_bounds: Tuple[float, float] = (2.1, 100.0)
    shock_params_fixed: Optional[Tuple[Sequence[float], Sequence[float]]] = None
    augmented_config: AugmentedConfig = field(default_factory=AugmentedConfig)

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ProxySvarError(f"unknown variant {self.variant!r}; expected one of {VARIANTS}")
        if self.labeling not in (LABEL_PROXY, LABEL_FIRST_STEP):
            raise ProxySvarError(f"unknown labeling mode {self.labeling!r}")
        if self.label_reference is not None:
            ref = np.asarray(self.label_reference, dtype=float)
            object.__setattr__(self, "label_reference", ref)

    @property
    def is_nongaussian(self) -> bool:
        return self.variant in (NONGAUSSIAN_PROXY_WEIGHTING, NONGAUSSIAN_ONLY)

    @property
    def is_weighting(self) -> bool:
        return self.variant in (NONGAUSSIAN_PROXY_WEIGHTING, GAUSSIAN_PROXY_WEIGHTING)

    @property
    def estimates_mu(self) -> bool:
        return self.variant == NONGAUSSIAN_PROXY_WEIGHTING


@dataclass(frozen=True)
class ChainConfig:
    """Length, seeding, proposal scaling and adaptation settings.

    ``adapt_covariance`` additionally shapes the impact-matrix proposal with
    the running empirical covariance of its burn-in draws (scaled 2.38^2/d);
    like the scalar scales it is frozen once burn-in ends.
    """

    draws: int
    burn_in: int = 0
    thin: int = 1
    seed: int = 0
    scale_pi: float = 0.4
    scale_b: float = 0.05
    scale_shape: float = 0.15
    scale_rot: float = 0.15
    adapt_window: int = 50
    target_accept: float = 0.25
    adapt_covariance: bool = True
    rotation_moves: bool = True
    reject_unstable: bool = False
    grace_windows: int = 5

    def __post_init__(self):
        if not self.draws > self.burn_in >= 0:
            raise ProxySvarError("need draws > burn_in >= 0")
        if not 0.0 < self.target_accept < 1.0:
            raise ProxySvarError("target acceptance must be in (0, 1)")
        if self.thin < 1:
            raise ProxySvarError("thinning must be >= 1")


@dataclass(frozen=True)
class PosteriorDraw:
    """One retained MCMC state."""

    var: ReducedFormVar
    B: StructuralMatrix
    lam: np.ndarray
    q: np.ndarray
    mu: Optional[ExogeneityMeans]
    log_posterior: float


@dataclass
class Draws:
    """Column-stacked retained draws plus chain metadata."""

    b: np.ndarray            # (S, nB, nB)
    pi: np.ndarray           # (S, P)
    lam: np.ndarray          # (S, n) NaN for Gaussian variants
    q: np.ndarray            # (S, n)
    mu: np.ndarray           # (S, K, n) NaN where unused
    sigma2_mu: np.ndarray    # (S, K, n)
    logpost: np.ndarray      # (S,)
    spec: ModelSpec
    cfg: ChainConfig
    n_core: int
    var_template: ReducedFormVar
    panel: TimeSeriesPanel
    design: Optional[DeterministicDesign]
    proxies: Optional[ProxySet]
    mu_mask: Optional[np.ndarray]
    accept_rates: Dict[str, float]
    final_scales: Dict[str, float]
    label_mismatches: int

    @property
    def n_draws(self) -> int:
        return self.b.shape[0]

    def impact_draws(self) -> np.ndarray:
        """Impact of the structural shocks on the core variables (S, n, n)."""
        return self.b[:, : self.n_core, : self.n_core]

    def reduced_form(self, i: int) -> ReducedFormVar:
        return self.var_template.with_vector(self.pi[i])

    def innovations(self, i: int) -> np.ndarray:
        u = reduced_form_residuals(self.panel, self.design, self.reduced_form(i))
        return np.linalg.solve(self.b[i, : self.n_core, : self.n_core], u.T).T

    def draw(self, i: int) -> PosteriorDraw:
        mu = None
        if self.mu_mask is not None and self.spec.estimates_mu:
            mu = ExogeneityMeans(np.nan_to_num(self.mu[i]),
                                 np.where(self.mu_mask, self.sigma2_mu[i], 1.0),
                                 self.mu_mask)
        return PosteriorDraw(self.reduced_form(i), StructuralMatrix(self.b[i]),
                             self.lam[i].copy(), self.q[i].copy(), mu,
                             float(self.logpost[i]))

    def record(self, i: int, shock_moments: bool = False,
               extra: Optional[Dict[str, float]] = None) -> Dict[str, float]:
        """Flat named-parameter record for one retained draw."""
        rec: Dict[str, float] = {}
        nB = self.b.shape[1]
        for r in range(nB):
            for c in range(nB):
                rec[f"b_{r+1}_{c+1}"] = float(self.b[i, r, c])
        for j in range(self.lam.shape[1]):
            if np.isfinite(self.lam[i, j]):
                rec[f"lam_{j+1}"] = float(self.lam[i, j])
                rec[f"q_{j+1}"] = float(self.q[i, j])
        if self.mu_mask is not None:
            K, n = self.mu_mask.shape
            for k in range(K):
                for j in range(n):
                    if self.mu_mask[k, j] and np.isfinite(self.mu[i, k, j]):
                        rec[f"mu_{k+1}_{j+1}"] = float(self.mu[i, k, j])
                        rec[f"sigma2_mu_{k+1}_{j+1}"] = float(self.sigma2_mu[i, k, j])
        for j, val in enumerate(self.pi[i]):
            rec[f"pi_{j+1}"] = float(val)
        if shock_moments:
            from .shockdist import sample_skewness_kurtosis

            e = self.innovations(i)
            for j in range(self.n_core):
                skew, kurt = sample_skewness_kurtosis(e[:, j])
                rec[f"skewness_{j+1}"] = skew
                rec[f"kurtosis_{j+1}"] = kurt
        if extra:
            rec.update(extra)
        rec["log_posterior"] = float(self.logpost[i])
        return rec

    def write_records(self, path, shock_moments: bool = False,
                      extras: Optional[Sequence[Dict[str, float]]] = None) -> None:
        with open(path, "w") as fh:
            for i in range(self.n_draws):
                extra = extras[i] if extras is not None else None
                fh.write(json.dumps(self.record(i, shock_moments, extra)) + "\n")


# ---------------------------------------------------------------------------
# labeling


def signperm_accept(B_prop: np.ndarray, B_ref: np.ndarray) -> bool:
    """Accept a proposal only if it lies in the sign-permutation
    representative region around the reference matrix.

    Computes C = inv(B_ref) @ B_prop with columns scaled to unit Euclidean
    norm and requires |c_kk| > |c_kl| for every k < l.
    """
    B_prop = np.asarray(B_prop, dtype=float)
    B_ref = np.asarray(B_ref, dtype=float)
    C = np.linalg.solve(B_ref, B_prop)
    norms = np.linalg.norm(C, axis=0)
    if np.any(norms <= 0.0):
        return False
    C = C / norms
    n = C.shape[0]
    for k in range(n):
        for l in range(k + 1, n):
            if not abs(C[k, k]) > abs(C[k, l]):
                return False
    return True


@dataclass(frozen=True)
class LabelAssignment:
    """Column permutation and sign flips that label a draw's shocks."""

    perm: Tuple[int, ...]
    signs: Tuple[float, ...]

    @property
    def is_identity_perm(self) -> bool:
        return all(p == i for i, p in enumerate(self.perm))


def proxy_label_shocks(innovations: np.ndarray, proxies: ProxySet,
                       priority: Optional[Sequence[int]] = None) -> LabelAssignment:
    """Greedy labeling by maximal absolute proxy correlation.

    Proxies are processed in ``priority`` order (default: their column
    order); each assigns the still-unlabeled shock with the largest absolute
    correlation to its target slot, sign-flipped so the correlation is
    positive.  Ties closer than 1e-12 go to the lower shock index.  Remaining
    shocks keep their prior order with unchanged signs.
    """
    e = np.asarray(innovations, dtype=float)
    n = e.shape[1]
    if e.shape[0] != proxies.n_obs:
        raise MisalignedDataError("innovations and proxies must share the sample length")
    order = list(priority) if priority is not None else list(range(proxies.n_proxies))
    zc = proxies.z - proxies.z.mean(axis=0)
    ec = e - e.mean(axis=0)
    denom = np.outer(zc.std(axis=0), ec.std(axis=0))
    corr = (zc.T @ ec) / (e.shape[0] * np.where(denom > 0, denom, np.inf))
    perm = [-1] * n
    signs = [1.0] * n
    taken = set()
    for k in order:
        slot = proxies.target_index[k]
        best, best_val = -1, -1.0
        for j in range(n):
            if j in taken:
                continue
            val = abs(corr[k, j])
            if val > best_val + 1e-12:
                best, best_val = j, val
        perm[slot] = best
        signs[slot] = 1.0 if corr[k, best] >= 0.0 else -1.0
        taken.add(best)
    rest = [j for j in range(n) if j not in taken]
    for slot in range(n):
        if perm[slot] == -1:
            perm[slot] = rest.pop(0)
    return LabelAssignment(tuple(perm), tuple(signs))


def align_to_reference(B: np.ndarray, ref: np.ndarray) -> LabelAssignment:
    """Permutation and signs that best align columns of B with the reference."""
    C = np.linalg.solve(ref, B)
    C = C / np.linalg.norm(C, axis=0)
    cost = -np.abs(C)
    rows, cols = optimize.linear_sum_assignment(cost)
    perm = [0] * B.shape[0]
    signs = [1.0] * B.shape[0]
    for slot, col in zip(rows, cols):
        perm[slot] = int(col)
        signs[slot] = 1.0 if C[slot, col] >= 0.0 else -1.0
    return LabelAssignment(tuple(perm), tuple(signs))


def apply_labeling(B: np.ndarray, assignment: LabelAssignment) -> np.ndarray:
    perm = list(assignment.perm)
    return B[:, perm] * np.asarray(assignment.signs)


# ---------------------------------------------------------------------------
# conjugate updates


def gibbs_exogeneity_mean(m: np.ndarray, var_over_t: np.ndarray, sigma2: np.ndarray,
                          rng: np.random.Generator) -> np.ndarray:
    """Draw mu | rest: Normal likelihood N(m; mu, var/T) times N(0, sigma2)."""
    prec = 1.0 / var_over_t + 1.0 / sigma2
    mean = (m / var_over_t) / prec
    return mean + rng.standard_normal(np.shape(m)) / np.sqrt(prec)


def gibbs_exogeneity_variance(mu: np.ndarray, a: float, b: float,
                              rng: np.random.Generator, floor: float = 1e-12) -> np.ndarray:
    """Draw sigma2 | mu from IG(a + 1/2, b + mu^2/2); a rate floor keeps the
    update proper at mu exactly zero."""
    shape = a + 0.5
    rate = np.maximum(b + 0.5 * np.asarray(mu) ** 2, floor)
    g = rng.gamma(shape, 1.0, size=np.shape(mu))
    g = np.maximum(g, 1e-300)
    return rate / g


# ---------------------------------------------------------------------------
# first-step mode search


@dataclass(frozen=True)
class FirstStepResult:
    B: StructuralMatrix
    lam: np.ndarray
    q: np.ndarray
    objective: float
    flat_objective: bool
    n_iterations: int = 0


def _haar_rotation(n: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.standard_normal((n, n))
    qmat, r = np.linalg.qr(z)
    d = np.sign(np.diag(r))
    d[d == 0] = 1.0
    return qmat * d


def first_step_estimate(panel: TimeSeriesPanel, design: Optional[DeterministicDesign] = None,
                        spec: Optional[ModelSpec] = None, proxies: Optional[ProxySet] = None,
                        estimate_intercept: Optional[bool] = None,
                        maxiter: int = 300, rotation_checks: int = 100,
                        start: Optional[FirstStepResult] = None) -> FirstStepResult:
    """Mode-seeking point estimate of the impact matrix.

    Maximizes the (re-weighted, when proxies are supplied) skewed-t log
    posterior over the free impact entries and shock shapes, starting from
    the Cholesky factor of the residual covariance, then labels the result.
    Warns when the objective is nearly flat across random rotations (a
    symptom of effectively Gaussian shocks).
    """
    if spec is None:
        spec = ModelSpec(NONGAUSSIAN_ONLY, labeling=LABEL_FIRST_STEP)
    p = panel.presample.shape[0]
    var0, u = _initial_reduced_form(panel, design, p, estimate_intercept)
    T, n = u.shape
    sigma = u.T @ u / T
    L = np.linalg.cholesky(sigma)
    zero = set(spec.zero_restrictions)
    B0 = L.copy()
    for (r, c) in zero:
        B0[r, c] = 0.0
    if abs(np.linalg.det(B0)) < 1e-10:
        B0 = B0 + 1e-3 * np.sqrt(np.diag(sigma).mean()) * np.eye(n)
    free = [(r, c) for r in range(n) for c in range(n) if (r, c) not in zero]
    lam_lo, lam_hi = spec.lambda_bounds
    q_lo, q_hi = spec.q_bounds
    fixed_shapes = spec.shock_params_fixed is not None
    if fixed_shapes:
        lam_fix = np.asarray(spec.shock_params_fixed[0], dtype=float)
        q_fix = np.asarray(spec.shock_params_fixed[1], dtype=float)

    def unpack(theta):
        B = np.zeros((n, n))
        for idx, (r, c) in enumerate(free):
            B[r, c] = theta[idx]
        if fixed_shapes:
            return B, lam_fix, q_fix
        raw = theta[len(free):]
        lam = lam_hi * np.tanh(raw[:n])
        q = q_lo + (q_hi - q_lo) / (1.0 + np.exp(-raw[n:]))
        return B, lam, q

    def negpost(theta):
        B, lam, q = unpack(theta)
        sign, logdet = np.linalg.slogdet(B)
        if sign == 0 or not np.isfinite(logdet):
            return 1e15
        try:
            e = np.linalg.solve(B, u.T).T
        except np.linalg.LinAlgError:
            return 1e15
        ll = -T * logdet
        for i in range(n):
            ll += float(np.sum(skewt_log_density(e[:, i], SkewTParams(lam[i], q[i]))))
        if proxies is not None:
            m = proxies.z.T @ e / T
            mask = proxies.nontarget_mask(n)
            var = np.asarray(proxies.variance)[:, None] / T
            ll += float(np.sum((-0.5 * (LOG_2PI + np.log(var)) - m * m / (2.0 * var))[mask]))
        return -ll if np.isfinite(ll) else 1e15

    if start is not None:
        B_start = start.B.values
        theta0 = np.array([B_start[r, c] for (r, c) in free])
        if not fixed_shapes:
            lam_s = np.clip(start.lam / lam_hi, -0.999999, 0.999999)
            q_s = np.clip(start.q, q_lo + 1e-9, q_hi - 1e-9)
            theta0 = np.concatenate([theta0, np.arctanh(lam_s),
                                     np.log((q_s - q_lo) / (q_hi - q_s))])
    else:
        theta0 = np.array([B0[r, c] for (r, c) in free])
        if not fixed_shapes:
            theta0 = np.concatenate([theta0, np.zeros(n),
                                     np.full(n, np.log((10.0 - q_lo) / (q_hi - 10.0)))])
    res = optimize.minimize(negpost, theta0, method="L-BFGS-B",
                            options={"maxiter": maxiter, "maxfun": 40 * maxiter})
    # status 1 is a deliberate iteration cap; anything else non-successful is a failure
    if (not res.success and res.status != 1) or not np.isfinite(res.fun):
        raise OptimizerError("mode search failed: " + str(res.message), best=unpack(res.x)[0])
    B_hat, lam_hat, q_hat = unpack(res.x)

    rng = np.random.default_rng(0)
    vals = []
    for _ in range(rotation_checks):
        theta_rot = res.x.copy()
        B_rot = B_hat @ _haar_rotation(n, rng)
        for idx, (r, c) in enumerate(free):
            theta_rot[idx] = B_rot[r, c]
        if zero:  # rotations break the zeros; flatness check is meaningless then
            break
        vals.append(negpost(theta_rot))
    flat = False
    if vals:
        spread = float(np.max(vals) - np.min(np.append(vals, res.fun)))
        flat = spread < 0.01 * abs(res.fun)
        if flat:
            warnings.warn("objective nearly flat across rotations; shocks look Gaussian "
                          "and the impact matrix is weakly identified", RuntimeWarning)

    e_hat = np.linalg.solve(B_hat, u.T).T
    if proxies is not None:
        lab = proxy_label_shocks(e_hat, proxies, spec.label_priority)
    elif spec.label_reference is not None:
        lab = align_to_reference(B_hat, spec.label_reference)
    else:
        lab = LabelAssignment(tuple(range(n)),
                              tuple(np.where(np.diag(B_hat) >= 0, 1.0, -1.0)))
    B_lab = apply_labeling(B_hat, lab)
    signs = np.asarray(lab.signs)
    lam_lab = signs * lam_hat[list(lab.perm)]
    q_lab = q_hat[list(lab.perm)]
    return FirstStepResult(StructuralMatrix(B_lab), lam_lab, q_lab,
                           float(-res.fun), flat, int(res.nit))


# ---------------------------------------------------------------------------
# chain internals


def _initial_reduced_form(panel, design, p, estimate_intercept):
    if estimate_intercept is None:
        has_const = design is not None and any(nm == "const" for nm in design.names)
        estimate_intercept = p >= 1 and not has_const
    n = panel.n_vars
    d = design.n_terms if design is not None else 0
    if p == 0 and d == 0 and not estimate_intercept:
        var = ReducedFormVar(np.zeros(n), np.zeros((0, n, n)), np.zeros((n, 0)),
                             has_intercept=False)
        return var, panel.values.copy()
    return fit_ols(panel, design, p, include_intercept=estimate_intercept)


def _rotated_cholesky_init(u: np.ndarray, proxies: Optional[ProxySet]) -> np.ndarray:
    """Cholesky of the residual covariance, rotated so each proxy's target
    column points along its ratio-estimator impact direction."""
    T, n = u.shape
    L = np.linalg.cholesky(u.T @ u / T)
    if proxies is None:
        return L
    cols: Dict[int, np.ndarray] = {}
    for k in range(proxies.n_proxies):
        try:
            d = iv_impact_ratio(proxies.z[:, k], u, proxies.target_index[k])
        except WeakProxyError:
            continue
        qv = np.linalg.solve(L, d)
        nrm = np.linalg.norm(qv)
        if nrm > 0:
            cols[proxies.target_index[k]] = qv / nrm
    if not cols:
        return L
    Q = np.zeros((n, n))
    used = []
    for slot, vec in cols.items():
        v = vec.copy()
        for w in used:
            v -= (w @ v) * w
        nrm = np.linalg.norm(v)
        if nrm < 1e-10:
            continue
        v /= nrm
        Q[:, slot] = v
        used.append(v)
    free_slots = [j for j in range(n) if not Q[:, j].any()]
    basis = np.eye(n)
    for slot in free_slots:
        for cand in basis.T:
            v = cand.copy()
            for w in used:
                v -= (w @ v) * w
            nrm = np.linalg.norm(v)
            if nrm > 1e-8:
                Q[:, slot] = v / nrm
                used.append(Q[:, slot])
                break
    return L @ Q


class _Block:
    """Bookkeeping for one random-walk block: scale, adaptation, acceptance."""

    def __init__(self, name: str, scale: float, window: int, target: float,
                 grace: int):
        self.name = name
        self.log_scale = np.log(scale)
        self.window = window
        self.target = target
        self.grace = grace
        self.accepts_window = 0
        self.proposals_window = 0
        self.accepts_total = 0
        self.proposals_total = 0
        self.window_index = 0
        self.zero_streak = 0
        self.frozen = False

    @property
    def scale(self) -> float:
        return float(np.exp(self.log_scale))

    def register(self, accepted: bool):
        self.proposals_window += 1
        self.proposals_total += 1
        if accepted:
            self.accepts_window += 1
            self.accepts_total += 1
        if not self.frozen and self.proposals_window >= self.window:
            rate = self.accepts_window / self.proposals_window
            self.window_index += 1
            # a single empty window is ordinary binomial noise; several in a
            # row while the scale keeps shrinking is a genuinely stuck block
            self.zero_streak = self.zero_streak + 1 if rate == 0.0 else 0
            if self.zero_streak >= 3 and self.window_index > self.grace:
                raise StuckChainError(
                    f"block {self.name!r} accepted nothing over "
                    f"{self.zero_streak} consecutive adaptation windows")
            step = min(1.0, 2.0 / np.sqrt(self.window_index))
            self.log_scale += step * float(np.clip((rate - self.target) / self.target, -1.0, 1.5))
            self.accepts_window = 0
            self.proposals_window = 0

    def acceptance_rate(self) -> float:
        if self.proposals_total == 0:
            return float("nan")
        return self.accepts_total / self.proposals_total


def run_chain(panel: TimeSeriesPanel, design: Optional[DeterministicDesign],
              proxies: Optional[ProxySet], spec: ModelSpec, cfg: ChainConfig,
              estimate_intercept: Optional[bool] = None,
              stream_path=None) -> Draws:
    """Sample the joint posterior of the chosen model variant.

    The panel's presample row count sets the lag order.  Proxies are used as
    given (standardize beforehand for the weighting variants).  Draws after
    burn-in are retained every ``thin`` iterations; when ``stream_path`` is
    set they are also written as line-delimited JSON records.
    """
    rng = np.random.default_rng(cfg.seed)
    n = panel.n_vars
    if spec.is_nongaussian and n < 2:
        raise ProxySvarError("non-Gaussian identification needs at least 2 variables")
    if proxies is None:
        if spec.variant in (GAUSSIAN_AUGMENTED, NONGAUSSIAN_PROXY_WEIGHTING):
            raise ProxySvarError(f"variant {spec.variant!r} requires proxies")
        if spec.variant == GAUSSIAN_PROXY_WEIGHTING and not spec.zero_restrictions:
            raise ProxySvarError("gaussian variants need a proxy or zero restrictions")
    elif proxies.n_obs != panel.n_obs:
        raise MisalignedDataError("proxy rows must match panel observations")

    p = panel.presample.shape[0]
    var0, u0 = _initial_reduced_form(panel, design, p, estimate_intercept)
    var_template = var0
    pi = var0.to_vector()
    has_pi = pi.shape[0] > 0

    augmented = spec.variant == GAUSSIAN_AUGMENTED
    if augmented:
        system = build_augmented(panel, proxies, spec.augmented_config, design)
        nB = system.n_total
        zero = set(system.zero_entries) | set(spec.zero_restrictions)
        fixed = dict(system.fixed_entries)
        if system.config.proxy_intercept:
            raise ProxySvarError("free proxy intercepts are not supported in the sampler")
    else:
        nB = n
        zero = set(spec.zero_restrictions)
        fixed = {}

    weighting = spec.is_weighting
    nong = spec.is_nongaussian
    T = panel.n_obs
    K = proxies.n_proxies if proxies is not None else 0
    mask = proxies.nontarget_mask(n) if (proxies is not None and weighting) else None
    varz_over_t = (np.asarray(proxies.variance)[:, None] / T) if mask is not None else None

    # ----- initial impact matrix
    lam = np.zeros(n)
    qpar = np.full(n, 10.0)
    if spec.shock_params_fixed is not None:
        lam = np.asarray(spec.shock_params_fixed[0], dtype=float).copy()
        qpar = np.asarray(spec.shock_params_fixed[1], dtype=float).copy()
    if nong:
        fs = first_step_estimate(panel, design, spec, proxies if weighting else None,
                                 estimate_intercept=estimate_intercept)
        B = fs.B.values.copy()
        lam, qpar = fs.lam.copy(), fs.q.copy()
        lam = np.clip(lam, spec.lambda_bounds[0] + 1e-6, spec.lambda_bounds[1] - 1e-6)
        qpar = np.clip(qpar, spec.q_bounds[0] + 1e-6, spec.q_bounds[1] - 1e-6)
        if spec.shock_params_fixed is not None:
            lam = np.asarray(spec.shock_params_fixed[0], dtype=float).copy()
            qpar = np.asarray(spec.shock_params_fixed[1], dtype=float).copy()
        if spec.labeling == LABEL_FIRST_STEP:
            ref = spec.label_reference if spec.label_reference is not None else fs.B.values
            lab = align_to_reference(B, ref)
            signs = np.asarray(lab.signs)
            B = apply_labeling(B, lab)
            lam = signs * lam[list(lab.perm)]
            qpar = qpar[list(lab.perm)]
        label_ref = spec.label_reference if spec.label_reference is not None else fs.B.values
    else:
        Bcore = _rotated_cholesky_init(u0, proxies)
        for (r, c) in zero:
            if r < n and c < n:
                Bcore[r, c] = 0.0
        if augmented:
            B = np.zeros((nB, nB))
            B[:n, :n] = Bcore
            e0 = np.linalg.solve(Bcore, u0.T).T
            for k in range(K):
                row, tgt = n + k, proxies.target_index[k]
                B[row, tgt] = float(proxies.z[:, k] @ e0[:, tgt] / T)
                resid_var = proxies.variance[k] - B[row, tgt] ** 2
                B[row, n + k] = fixed.get((row, n + k), np.sqrt(max(resid_var, 0.05)))
        else:
            B = Bcore
        label_ref = spec.label_reference

    for (r, c), val in fixed.items():
        B[r, c] = val
    free_entries = [(r, c) for r in range(nB) for c in range(nB)
                    if (r, c) not in zero and (r, c) not in fixed]

    mu = np.zeros((K, n)) if mask is not None else None
    sigma2 = np.ones((K, n)) if mask is not None else None

    # ----- posterior evaluation pieces
    def residuals_for(pi_vec):
        if not has_pi:
            return u0
        return reduced_form_residuals(panel, design, var_template.with_vector(pi_vec))

    def stack(u):
        if augmented:
            return np.hstack([u, proxies.z])
        return u

    def loglik_parts(u_work, Bmat):
        sign, logdet = np.linalg.slogdet(Bmat)
        if sign == 0 or not np.isfinite(logdet):
            return None
        try:
            e = np.linalg.solve(Bmat, u_work.T).T
        except np.linalg.LinAlgError:
            return None
        if nong:
            terms = np.empty(nB)
            for i in range(nB):
                terms[i] = float(np.sum(skewt_log_density(e[:, i], SkewTParams(lam[i], qpar[i]))))
        else:
            terms = -0.5 * T * LOG_2PI - 0.5 * np.sum(e * e, axis=0)
        return e, float(logdet), terms

    def reweight_value(m_stats, mu_now):
        if mask is None:
            return 0.0
        dev = m_stats - (mu_now if mu_now is not None else 0.0)
        terms = -0.5 * (LOG_2PI + np.log(varz_over_t)) - dev * dev / (2.0 * varz_over_t)
        return float(np.sum(terms[mask]))

    def mu_prior_value():
        if mask is None or not spec.estimates_mu:
            return 0.0
        s2 = sigma2[mask]
        val = float(np.sum(-0.5 * (LOG_2PI + np.log(s2)) - mu[mask] ** 2 / (2.0 * s2)))
        val += float(np.sum(-(spec.ig_a + 1.0) * np.log(s2) - spec.ig_b / s2))
        return val

    u_core = residuals_for(pi)
    u_work = stack(u_core)
    parts = loglik_parts(u_work, B)
    if parts is None:
        raise InitializationError("impact matrix singular at initialization")
    e_cur, logdet_cur, terms_cur = parts
    m_cur = proxy_moment_stats(proxies, e_cur[:, :n]) if mask is not None else None
    loglik_cur = -T * logdet_cur + float(np.sum(terms_cur))
    if mask is not None and spec.estimates_mu:
        mu[mask] = m_cur[mask]
        sigma2[mask] = np.maximum(m_cur[mask] ** 2, 0.01)
    rw_cur = reweight_value(m_cur, mu)
    if not np.isfinite(loglik_cur + rw_cur):
        raise InitializationError("posterior not finite at the starting point")

    # ----- proposal machinery
    pi_chol_blocks = None
    pi_eq_index = None
    if has_pi:
        pi_chol_blocks, pi_eq_index = _pi_proposal_shape(panel, design, var0, u0)
    blocks: Dict[str, _Block] = {}
    if has_pi:
        blocks["pi"] = _Block("pi", cfg.scale_pi, cfg.adapt_window, cfg.target_accept,
                              cfg.grace_windows)
    blocks["b"] = _Block("b", cfg.scale_b, cfg.adapt_window, cfg.target_accept,
                         cfg.grace_windows)
    # right-multiplication by exp(eps * skew) walks the rotation manifold where
    # the likelihood is flat; determinant-preserving, so no proposal correction.
    # Zero restrictions on the core block do not survive rotations, so the
    # move is only enabled without them.
    core_zeros = [rc for rc in zero if rc[0] < n and rc[1] < n]
    use_rot = cfg.rotation_moves and not core_zeros
    if use_rot:
        blocks["rot"] = _Block("rot", cfg.scale_rot, cfg.adapt_window,
                               cfg.target_accept, cfg.grace_windows)
    sample_shapes = nong and spec.shock_params_fixed is None
    if sample_shapes:
        for i in range(n):
            blocks[f"shape{i}"] = _Block(f"shape{i}", cfg.scale_shape, cfg.adapt_window,
                                         cfg.target_accept, cfg.grace_windows)

    def propose_pi():
        delta = np.zeros_like(pi)
        for eq, idx in enumerate(pi_eq_index):
            delta[idx] = pi_chol_blocks[eq] @ rng.standard_normal(len(idx))
        return pi + blocks["pi"].scale * delta

    # running-covariance shaping of the impact-matrix proposal
    d_b = len(free_entries)
    b_prop_chol: Optional[np.ndarray] = None
    b_history: List[np.ndarray] = []

    def update_b_shape():
        nonlocal b_prop_chol
        if not cfg.adapt_covariance or len(b_history) < max(5 * d_b, 100):
            return
        hist = np.asarray(b_history[len(b_history) // 3:])
        cov = np.cov(hist.T)
        jitter = 1e-10 + 1e-6 * float(np.trace(cov)) / d_b
        try:
            chol = np.linalg.cholesky(cov + jitter * np.eye(d_b))
        except np.linalg.LinAlgError:
            return
        b_prop_chol = (2.38 / np.sqrt(d_b)) * chol

    # ----- sign folding
    def fold():
        nonlocal B, lam, e_cur, m_cur, mu
        flips = np.ones(nB)
        if nong and spec.labeling == LABEL_FIRST_STEP and label_ref is not None:
            C = np.linalg.solve(label_ref, B[:n, :n])
            C = C / np.maximum(np.linalg.norm(C, axis=0), 1e-300)
            flips[:n] = np.where(np.diag(C) >= 0.0, 1.0, -1.0)
        else:
            diag_sign = np.where(np.diag(B)[:n] >= 0.0, 1.0, -1.0)
            flips[:n] = diag_sign
            if proxies is not None:
                for k in range(K):
                    tgt = proxies.target_index[k]
                    if augmented:
                        stat = B[n + k, tgt]
                    else:
                        stat = float(proxies.z[:, k] @ e_cur[:, tgt])
                    flips[tgt] = 1.0 if stat >= 0.0 else -1.0
        if augmented:
            flips[n:] = np.where(np.diag(B)[n:] >= 0.0, 1.0, -1.0)
        if np.all(flips == 1.0):
            return
        B = B * flips
        e_cur = e_cur * flips
        if nong:
            lam = lam * flips[:n]
        if m_cur is not None:
            m_cur = m_cur * flips[:n]
        if mu is not None:
            mu *= flips[:n]

    # ----- main loop
    n_keep = (cfg.draws - cfg.burn_in + cfg.thin - 1) // cfg.thin
    P = pi.shape[0]
    out_b = np.empty((n_keep, nB, nB))
    out_pi = np.empty((n_keep, P))
    out_lam = np.full((n_keep, n), np.nan)
    out_q = np.full((n_keep, n), np.nan)
    out_mu = np.full((n_keep, K, n), np.nan)
    out_s2 = np.full((n_keep, K, n), np.nan)
    out_lp = np.empty(n_keep)
    kept = 0
    label_mismatches = 0

    for it in range(cfg.draws):
        in_burn = it < cfg.burn_in
        for blk in blocks.values():
            blk.frozen = not in_burn

        if has_pi:
            pi_prop = propose_pi()
            ok = True
            if cfg.reject_unstable:
                ok = is_stable(var_template.with_vector(pi_prop)).stable
            accepted = False
            if ok:
                u_prop = residuals_for(pi_prop)
                uw_prop = stack(u_prop)
                parts = loglik_parts(uw_prop, B)
                if parts is not None:
                    e_p, logdet_p, terms_p = parts
                    m_p = proxy_moment_stats(proxies, e_p[:, :n]) if mask is not None else None
                    ll_p = -T * logdet_p + float(np.sum(terms_p))
                    rw_p = reweight_value(m_p, mu)
                    if np.isfinite(ll_p + rw_p) and np.log(rng.random()) < (ll_p + rw_p) - (loglik_cur + rw_cur):
                        pi, u_core, u_work = pi_prop, u_prop, uw_prop
                        e_cur, logdet_cur, terms_cur = e_p, logdet_p, terms_p
                        m_cur, loglik_cur, rw_cur = m_p, ll_p, rw_p
                        accepted = True
            blocks["pi"].register(accepted)

        # impact-matrix block: additive step on free entries, then (optionally)
        # a rotation step along the flat manifold
        def try_impact(B_prop) -> bool:
            nonlocal B, e_cur, logdet_cur, terms_cur, m_cur, loglik_cur, rw_cur
            if nong and spec.labeling == LABEL_FIRST_STEP and label_ref is not None:
                if not signperm_accept(B_prop[:n, :n], label_ref):
                    return False
            parts = loglik_parts(u_work, B_prop)
            if parts is None:
                return False
            e_p, logdet_p, terms_p = parts
            m_p = proxy_moment_stats(proxies, e_p[:, :n]) if mask is not None else None
            ll_p = -T * logdet_p + float(np.sum(terms_p))
            rw_p = reweight_value(m_p, mu)
            if np.isfinite(ll_p + rw_p) and np.log(rng.random()) < (ll_p + rw_p) - (loglik_cur + rw_cur):
                B = B_prop
                e_cur, logdet_cur, terms_cur = e_p, logdet_p, terms_p
                m_cur, loglik_cur, rw_cur = m_p, ll_p, rw_p
                return True
            return False

        theta = np.array([B[r, c] for (r, c) in free_entries])
        step = rng.standard_normal(theta.shape[0])
        if b_prop_chol is not None:
            step = b_prop_chol @ step
        theta_prop = theta + blocks["b"].scale * step
        B_prop = B.copy()
        for idx, (r, c) in enumerate(free_entries):
            B_prop[r, c] = theta_prop[idx]
        blocks["b"].register(try_impact(B_prop))

        if use_rot:
            W = rng.standard_normal((n, n))
            W = (W - W.T) / np.sqrt(2.0)
            M = expm(blocks["rot"].scale * W)
            B_prop = B.copy()
            B_prop[:n, :n] = B[:n, :n] @ M
            blocks["rot"].register(try_impact(B_prop))

        if in_burn:
            b_history.append(np.array([B[r, c] for (r, c) in free_entries]))
            if (it + 1) % cfg.adapt_window == 0:
                had_shape = b_prop_chol is not None
                update_b_shape()
                if not had_shape and b_prop_chol is not None:
                    # fresh scale and fresh grace for the reshaped proposal
                    blocks["b"].log_scale = 0.0
                    blocks["b"].window_index = 0

        # per-shock shape blocks on (lam, log q)
        if sample_shapes:
            for i in range(n):
                blk = blocks[f"shape{i}"]
                step = blk.scale * rng.standard_normal(2)
                lam_p = lam[i] + step[0]
                q_p = float(np.exp(np.log(qpar[i]) + step[1]))
                accepted = False
                if spec.lambda_bounds[0] <= lam_p <= spec.lambda_bounds[1] and \
                        spec.q_bounds[0] <= q_p <= spec.q_bounds[1]:
                    term_p = float(np.sum(skewt_log_density(e_cur[:, i], SkewTParams(lam_p, q_p))))
                    # log-scale proposal for q: Jacobian factor q_p / q_i
                    ratio = term_p - terms_cur[i] + np.log(q_p) - np.log(qpar[i])
                    if np.isfinite(term_p) and np.log(rng.random()) < ratio:
                        lam[i], qpar[i] = lam_p, q_p
                        loglik_cur += term_p - terms_cur[i]
                        terms_cur[i] = term_p
                        accepted = True
                blk.register(accepted)

        # conjugate updates for the exogeneity means and hyper-variances
        if spec.estimates_mu:
            mu_new = gibbs_exogeneity_mean(m_cur, varz_over_t, sigma2, rng)
            mu[mask] = mu_new[mask]
            s2_new = gibbs_exogeneity_variance(mu, spec.ig_a, spec.ig_b, rng)
            s2_new = np.maximum(s2_new, spec.sigma2_mu_floor_frac * varz_over_t)
            sigma2[mask] = s2_new[mask]
            rw_cur = reweight_value(m_cur, mu)

        fold()

        if not in_burn and (it - cfg.burn_in) % cfg.thin == 0:
            if spec.labeling == LABEL_PROXY and proxies is not None:
                lab = proxy_label_shocks(e_cur[:, :n], proxies, spec.label_priority)
                if not lab.is_identity_perm:
                    label_mismatches += 1
            out_b[kept] = B
            out_pi[kept] = pi
            if nong:
                out_lam[kept] = lam[:n]
                out_q[kept] = qpar[:n]
            if mask is not None and spec.estimates_mu:
                out_mu[kept][mask] = mu[mask]
                out_s2[kept][mask] = sigma2[mask]
            out_lp[kept] = loglik_cur + rw_cur + mu_prior_value()
            kept += 1

    draws = Draws(
        b=out_b[:kept], pi=out_pi[:kept], lam=out_lam[:kept], q=out_q[:kept],
        mu=out_mu[:kept], sigma2_mu=out_s2[:kept], logpost=out_lp[:kept],
        spec=spec, cfg=cfg, n_core=n, var_template=var_template, panel=panel,
        design=design, proxies=proxies, mu_mask=mask,
        accept_rates={k: b.acceptance_rate() for k, b in blocks.items()},
        final_scales={k: b.scale for k, b in blocks.items()},
        label_mismatches=label_mismatches,
    )
    if stream_path is not None:
        draws.write_records(stream_path)
    return draws


def _pi_proposal_shape(panel, design, var0, u0):
    """Per-equation least-squares covariance Cholesky factors and the index
    of each equation's coefficients inside the stacked vector."""
    from .varcore import _regressor_matrix  # shared layout logic

    n = panel.n_vars
    p = var0.lag_order
    d = var0.n_det
    X = _regressor_matrix(panel, design, p, include_intercept=var0.has_intercept)
    XtX_inv = np.linalg.inv(X.T @ X)
    T = X.shape[0]
    dof = max(T - X.shape[1], 1)
    chols = []
    indices = []
    n_coef = X.shape[1]
    for eq in range(n):
        s2 = float(u0[:, eq] @ u0[:, eq]) / dof
        chols.append(np.linalg.cholesky(s2 * XtX_inv + 1e-14 * np.eye(n_coef)))
        idx = []
        pos = 0
        if var0.has_intercept:
            idx.append(eq)
            pos = n
        for lag in range(p):
            base = pos + lag * n * n + eq * n
            idx.extend(range(base, base + n))
        base = pos + p * n * n + eq * d
        idx.extend(range(base, base + d))
        indices.append(np.asarray(idx, dtype=int))
    return chols, indices

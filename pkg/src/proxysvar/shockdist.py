"""Skewed-t shock distribution, Pearson-system moment-matched sampling, and
sample-moment utilities.

The skewed-t family here is the two-piece construction: a Student-t kernel
whose scale differs on each side of the (shifted) center.  The shape pair
(lam, q) controls asymmetry and tail weight; the centering constant m and
scale constant v are chosen so the distribution has mean zero and unit
variance for every admissible (lam, q).  Tail parameter q > 2 guarantees a
finite fourth moment (the kernel behaves like a Student t with 2q degrees of
freedom).
"""
from __future__ import annotations

import functools
from dataclasses import dataclass, field
from typing import Callable, Tuple

import numpy as np
from scipy import optimize, special, stats

from .errors import DegenerateInputError, DistributionDomainError

__all__ = [
    "SkewTParams",
    "PearsonMoments",
    "skewt_log_density",
    "skewt_cdf",
    "skewt_ppf",
    "skewt_sample",
    "skewt_moments",
    "skewt_match_moments",
    "pearson_sample",
    "pearson_kappa",
    "sample_skewness_kurtosis",
]


def _skewt_normalizers(lam: float, q: float) -> Tuple[float, float]:
    gr = np.exp(special.gammaln(q - 0.5) - special.gammaln(q))
    inner = (3.0 * lam * lam + 1.0) / (2.0 * q - 2.0) - (4.0 * lam * lam / np.pi) * gr * gr
    v = q ** -0.5 * inner ** -0.5
    m = 2.0 * v * lam * q ** 0.5 * gr / np.sqrt(np.pi)
    return m, v


@dataclass(frozen=True)
class SkewTParams:
    """Shape parameters of one shock with derived normalizing constants."""

    lam: float
    q: float
    m: float = field(init=False)
    v: float = field(init=False)

    def __post_init__(self):
        if not (np.isfinite(self.lam) and np.isfinite(self.q)):
            raise DistributionDomainError("skew-t parameters must be finite")
        if abs(self.lam) >= 1.0:
            raise DistributionDomainError(f"need |lam| < 1, got {self.lam}")
        if self.q <= 2.0:
            raise DistributionDomainError(f"need q > 2, got {self.q}")
        m, v = _skewt_normalizers(self.lam, self.q)
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "v", v)


def skewt_log_density(eps, params: SkewTParams):
    """Log density; vectorized over ``eps``.  sign(0) is taken as +1."""
    eps = np.asarray(eps, dtype=float)
    lam, q, m, v = params.lam, params.q, params.m, params.v
    t = eps + m
    side = np.where(t >= 0.0, 1.0, -1.0)
    z = t / (v * (lam * side + 1.0))
    const = special.gammaln(q + 0.5) - special.gammaln(q) - 0.5 * np.log(np.pi * q) - np.log(v)
    return const - (q + 0.5) * np.log1p(z * z / q)


def skewt_cdf(eps, params: SkewTParams):
    """Distribution function, exact through the Student-t CDF."""
    eps = np.asarray(eps, dtype=float)
    lam, q, m, v = params.lam, params.q, params.m, params.v
    t = eps + m
    df = 2.0 * q
    # kernel variable w has CDF  F_t(w * sqrt(2); 2q)
    neg = (1.0 - lam) * stats.t.cdf(t * np.sqrt(2.0) / (v * (1.0 - lam)), df)
    pos = (1.0 - lam) / 2.0 + (1.0 + lam) * (stats.t.cdf(t * np.sqrt(2.0) / (v * (1.0 + lam)), df) - 0.5)
    return np.where(t < 0.0, neg, pos)


def skewt_ppf(u, params: SkewTParams):
    """Quantile function, exact inverse of :func:`skewt_cdf`."""
    u = np.asarray(u, dtype=float)
    lam, q, m, v = params.lam, params.q, params.m, params.v
    df = 2.0 * q
    split = (1.0 - lam) / 2.0
    lower = u < split
    out = np.empty_like(u)
    ul = np.clip(u[lower] / (1.0 - lam), 0.0, 1.0)
    out[lower] = v * (1.0 - lam) * stats.t.ppf(ul, df) / np.sqrt(2.0)
    uu = np.clip((u[~lower] - split) / (1.0 + lam) + 0.5, 0.0, 1.0)
    out[~lower] = v * (1.0 + lam) * stats.t.ppf(uu, df) / np.sqrt(2.0)
    return out - m


def skewt_sample(params: SkewTParams, rng: np.random.Generator, count: int) -> np.ndarray:
    """Inverse-CDF draws; bit-reproducible for a fixed generator state."""
    if count < 1:
        raise DistributionDomainError("count must be >= 1")
    return skewt_ppf(rng.random(count), params)


def _skewt_raw_moment(lam: float, q: float, v: float, k: int) -> float:
    # E[(eps + m)^k] in closed form; finite for k/2 < q.
    s = (1.0 + lam) ** (k + 1) + (-1.0) ** k * (1.0 - lam) ** (k + 1)
    lg = (special.gammaln((k + 1) / 2.0) + special.gammaln(q - k / 2.0)
          - special.gammaln(q))
    return v ** k * s * q ** (k / 2.0) * np.exp(lg) / (2.0 * np.sqrt(np.pi))


def skewt_moments(params: SkewTParams) -> Tuple[float, float, float, float]:
    """(mean, variance, skewness, excess kurtosis) in closed form."""
    lam, q, v, m = params.lam, params.q, params.v, params.m
    raw = [_skewt_raw_moment(lam, q, v, k) for k in range(1, 5)]
    mean = raw[0] - m
    var = raw[1] - raw[0] ** 2
    mu3 = raw[2] - 3 * m * raw[1] + 2 * m ** 3
    if q <= 2.0:
        raise DistributionDomainError("fourth moment needs q > 2")
    mu4 = raw[3] - 4 * m * raw[2] + 6 * m ** 2 * raw[1] - 3 * m ** 4
    return mean, var, mu3 / var ** 1.5, mu4 / var ** 2 - 3.0


def skewt_match_moments(skewness: float, excess_kurtosis: float,
                        lam_bounds=(-0.99, 0.99), q_bounds=(2.05, 400.0)) -> SkewTParams:
    """Find (lam, q) whose skewness and excess kurtosis match the targets."""

    def resid(x):
        lam = np.tanh(x[0]) * lam_bounds[1]
        q = q_bounds[0] + (q_bounds[1] - q_bounds[0]) / (1.0 + np.exp(-x[1]))
        _, _, s, k = skewt_moments(SkewTParams(lam, q))
        return [s - skewness, k - excess_kurtosis]

    best = None
    for lam0, q0 in ((0.3 * np.sign(skewness or 1.0), 6.0), (0.1, 20.0), (0.6, 4.0)):
        x0 = [np.arctanh(np.clip(lam0 / lam_bounds[1], -0.99, 0.99)),
              np.log((q0 - q_bounds[0]) / (q_bounds[1] - q0))]
        sol = optimize.root(resid, x0, method="hybr")
        if sol.success and np.max(np.abs(sol.fun)) < 1e-8:
            best = sol.x
            break
    if best is None:
        raise DistributionDomainError(
            f"no skew-t parameters reach skewness={skewness}, excess kurtosis={excess_kurtosis}")
    lam = float(np.tanh(best[0]) * lam_bounds[1])
    q = float(q_bounds[0] + (q_bounds[1] - q_bounds[0]) / (1.0 + np.exp(-best[1])))
    return SkewTParams(lam, q)


@dataclass(frozen=True)
class PearsonMoments:
    """First four moments of a Pearson-family member (mean 0, variance 1 by
    default).  Feasibility requires excess_kurtosis > skewness^2 - 2."""

    skewness: float
    excess_kurtosis: float
    mean: float = 0.0
    variance: float = 1.0

    def __post_init__(self):
        if self.variance <= 0.0:
            raise DistributionDomainError("variance must be positive")
        if self.excess_kurtosis <= self.skewness ** 2 - 2.0:
            raise DistributionDomainError(
                "infeasible moments: need excess kurtosis > skewness^2 - 2")


def pearson_kappa(moments: PearsonMoments) -> float:
    """Pearson family criterion; selects the member type."""
    b1 = moments.skewness ** 2
    b2 = moments.excess_kurtosis + 3.0
    denom = 4.0 * (4.0 * b2 - 3.0 * b1) * (2.0 * b2 - 3.0 * b1 - 6.0)
    if denom == 0.0:
        return np.inf
    return b1 * (b2 + 3.0) ** 2 / denom


@functools.lru_cache(maxsize=32)
def _type4_inverse_grid(m: float, nu: float, knots: int = 16385) -> Tuple[np.ndarray, np.ndarray]:
    # Density of theta = arctan((x - loc)/a) is prop. to cos(theta)^(2m-2) e^(-nu theta):
    # compactly supported, so an inverse-CDF grid needs no tail truncation.
    theta = np.linspace(-np.pi / 2.0, np.pi / 2.0, knots)
    with np.errstate(divide="ignore"):
        logpdf = (2.0 * m - 2.0) * np.log(np.cos(theta)) - nu * theta
    pdf = np.exp(logpdf - np.max(logpdf))
    pdf[0] = pdf[-1] = 0.0
    cdf = np.concatenate([[0.0], np.cumsum((pdf[1:] + pdf[:-1]) * 0.5 * np.diff(theta))])
    cdf /= cdf[-1]
    return cdf, theta


def _type4_ppf_factory(moments: PearsonMoments) -> Callable[[np.ndarray], np.ndarray]:
    b1 = moments.skewness ** 2
    b2 = moments.excess_kurtosis + 3.0
    r = 6.0 * (b2 - b1 - 1.0) / (2.0 * b2 - 3.0 * b1 - 6.0)
    m = (r + 2.0) / 2.0
    disc = 16.0 * (r - 1.0) - b1 * (r - 2.0) ** 2
    if disc <= 0.0 or m <= 2.5:
        raise DistributionDomainError("moments outside the usable Type IV region")
    nu = -r * (r - 2.0) * moments.skewness / np.sqrt(disc)
    a = np.sqrt(moments.variance) * np.sqrt(disc) / 4.0
    loc = moments.mean + a * nu / r
    cdf, theta = _type4_inverse_grid(float(m), float(nu))

    def ppf(u):
        return loc + a * np.tan(np.interp(u, cdf, theta))

    return ppf


def _solve_shapes(dist, target_sk: float, target_ek: float, inits) -> Tuple[float, float]:
    def resid(x):
        a, b = np.exp(x)
        s, k = dist.stats(a, b, moments="sk")
        return [float(s) - target_sk, float(k) - target_ek]

    for a0, b0 in inits:
        sol = optimize.root(resid, [np.log(a0), np.log(b0)], method="hybr")
        if sol.success and np.max(np.abs(sol.fun)) < 1e-9:
            return float(np.exp(sol.x[0])), float(np.exp(sol.x[1]))
    raise DistributionDomainError(
        f"could not match shape parameters for skewness={target_sk}, excess kurtosis={target_ek}")


def _standardized(dist_ppf, mean_d: float, sd_d: float, moments: PearsonMoments, flip: bool):
    shift, scale = moments.mean, np.sqrt(moments.variance)

    def ppf(u):
        x = dist_ppf(1.0 - u) if flip else dist_ppf(u)
        z = (x - mean_d) / sd_d
        if flip:
            z = -z
        return shift + scale * z

    return ppf


def _pearson_ppf(moments: PearsonMoments) -> Callable[[np.ndarray], np.ndarray]:
    s, ek = moments.skewness, moments.excess_kurtosis
    b1, b2 = s ** 2, ek + 3.0
    eps = 1e-9
    if abs(s) < eps and abs(ek) < eps:
        return lambda u: moments.mean + np.sqrt(moments.variance) * special.ndtri(u)
    if abs(s) < eps:
        if ek > 0:  # symmetric heavy tails: scaled Student t
            df = 6.0 / ek + 4.0
            scale = np.sqrt(moments.variance * (df - 2.0) / df)
            return lambda u: moments.mean + scale * stats.t.ppf(u, df)
        a = -(3.0 * ek + 6.0) / (2.0 * ek)  # symmetric beta
        sd = np.sqrt(1.0 / (4.0 * (2.0 * a + 1.0)))
        return _standardized(lambda u: stats.beta.ppf(u, a, a), 0.5, sd, moments, flip=False)
    if abs(2.0 * b2 - 3.0 * b1 - 6.0) < eps:  # gamma line
        shape = 4.0 / b1
        return _standardized(lambda u: stats.gamma.ppf(u, shape), shape, np.sqrt(shape),
                             moments, flip=s < 0)
    kappa = pearson_kappa(moments)
    flip = s < 0
    sk = abs(s)
    if kappa < 0.0:
        a, b = _solve_shapes(stats.beta, sk, ek, [(2.0, 4.0), (1.2, 3.0), (5.0, 12.0)])
        mean_d, var_d = stats.beta.stats(a, b, moments="mv")
        return _standardized(lambda u: stats.beta.ppf(u, a, b), float(mean_d),
                             float(np.sqrt(var_d)), moments, flip)
    if 0.0 < kappa < 1.0:
        return _type4_ppf_factory(moments)
    if abs(kappa - 1.0) < 1e-9:  # inverse-gamma boundary
        disc = (6.0 * sk ** 2 + 16.0) ** 2 - 4.0 * sk ** 2 * (9.0 * sk ** 2 + 32.0)
        alpha = ((6.0 * sk ** 2 + 16.0) + np.sqrt(disc)) / (2.0 * sk ** 2)
        mean_d, var_d = stats.invgamma.stats(alpha, moments="mv")
        return _standardized(lambda u: stats.invgamma.ppf(u, alpha), float(mean_d),
                             float(np.sqrt(var_d)), moments, flip)
    a, b = _solve_shapes(stats.betaprime, sk, ek, [(3.0, 8.0), (2.0, 12.0), (6.0, 20.0)])
    mean_d, var_d = stats.betaprime.stats(a, b, moments="mv")
    return _standardized(lambda u: stats.betaprime.ppf(u, a, b), float(mean_d),
                         float(np.sqrt(var_d)), moments, flip)


def pearson_sample(moments: PearsonMoments, rng: np.random.Generator, count: int) -> np.ndarray:
    """Draws from the Pearson-family member matching the four target moments.

    The member is chosen by the kappa criterion; draws are produced by
    inverse-CDF so a fixed generator state yields a bit-identical sequence.
    """
    if count < 1:
        raise DistributionDomainError("count must be >= 1")
    ppf = _pearson_ppf(moments)
    return np.asarray(ppf(rng.random(count)), dtype=float)


def sample_skewness_kurtosis(x) -> Tuple[float, float]:
    """Third and fourth standardized central moments; kurtosis is raw
    (Gaussian = 3)."""
    x = np.asarray(x, dtype=float).ravel()
    if x.shape[0] < 4:
        raise DegenerateInputError("need at least 4 observations")
    c = x - x.mean()
    m2 = np.mean(c * c)
    if m2 <= 0.0:
        raise DegenerateInputError("zero variance input")
    return float(np.mean(c ** 3) / m2 ** 1.5), float(np.mean(c ** 4) / m2 ** 2)

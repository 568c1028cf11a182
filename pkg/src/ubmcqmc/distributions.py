"""Inverse-CDF and density primitives shared by all Gibbs update functions.

Every sampler here is a deterministic monotone map from unit-interval inputs
to draws, so the same code path serves IID uniforms and (W)CUD driving rows.
Unit inputs are clamped into [2^-32, 1 - 2^-32] before inversion: digitally
shifted matrices carry 32-digit values, so exact zeros do occur.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammainccinv, log_ndtr, ndtr, ndtri, ndtri_exp

from .polya_gamma import (  # noqa: F401  (re-exported: part of this surface)
    PgApproach,
    pg_density_ratio,
    pg_proposal_inv_cdf,
    pg_sample,
    pg_sample_vector,
)

_EPS32 = 2.0**-32
_EPS53 = 2.0**-53


def clamp_unit(u):
    """Map unit-interval inputs into [2^-32, 1 - 2^-32]."""
    u = np.asarray(u, dtype=np.float64)
    if np.isnan(u).any():
        raise ValueError("NaN unit-interval input")
    return np.clip(u, _EPS32, 1.0 - _EPS32)


def normal_inv_cdf(u):
    """Standard normal quantile of u (scalar or array), clamped inputs."""
    return ndtri(clamp_unit(u))


@dataclass(frozen=True)
class TruncationInterval:
    lower: float
    upper: float

    def __post_init__(self):
        if not self.lower < self.upper:
            raise ValueError(f"empty truncation interval [{self.lower}, {self.upper}]")


def sample_mvn(mean: np.ndarray, covariance_factor: np.ndarray, u) -> np.ndarray:
    """mean + C Phi^{-1}(u) with C any factor satisfying C C^T = Sigma."""
    mean = np.asarray(mean, dtype=np.float64)
    c = np.asarray(covariance_factor, dtype=np.float64)
    z = normal_inv_cdf(u)
    out = mean + c @ z
    if not np.isfinite(out).all():
        raise ValueError("non-finite multivariate normal draw")
    return out


def sample_mvn_precision(mean: np.ndarray, precision_chol_lower: np.ndarray, u) -> np.ndarray:
    """mean + L^{-T} Phi^{-1}(u) where L L^T is the precision matrix."""
    from scipy.linalg import solve_triangular

    z = normal_inv_cdf(u)
    out = np.asarray(mean, dtype=np.float64) + solve_triangular(
        precision_chol_lower, z, lower=True, trans="T"
    )
    if not np.isfinite(out).all():
        raise ValueError("non-finite multivariate normal draw")
    return out


def spd_factor(sigma: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor with adaptive diagonal jitter on failure.

    Jitter starts at 1e-12 * trace/p and grows tenfold up to 1e-6 * trace/p
    before giving up; near-singular covariance arises for ill-conditioned
    designs and the jitter keeps the factor usable without visible bias.
    """
    sigma = np.asarray(sigma, dtype=np.float64)
    p = sigma.shape[0]
    try:
        return np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError:
        pass
    scale = float(np.trace(sigma)) / max(p, 1)
    jitter = 1e-12 * scale
    limit = 1e-6 * scale
    eye = np.eye(p)
    while jitter <= limit * (1 + 1e-12):
        try:
            return np.linalg.cholesky(sigma + jitter * eye)
        except np.linalg.LinAlgError:
            jitter *= 10.0
    raise np.linalg.LinAlgError(
        f"matrix not positive definite even with jitter {limit:.3e}"
    )


def sample_inverse_gamma(shape, scale, u):
    """Inverse-gamma quantile at u: 1/G with G ~ Gamma(shape, rate=scale).

    CDF_IG(x) = Q(shape, scale/x) (upper regularized incomplete gamma), so
    the quantile is scale / Q^{-1}(shape, u). shape and scale broadcast.
    """
    if np.any(np.asarray(shape) <= 0) or np.any(np.asarray(scale) <= 0):
        raise ValueError("shape and scale must be positive")
    return scale / gammainccinv(shape, clamp_unit(u))


def inverse_gamma_cdf(shape: float, scale: float, x):
    from scipy.special import gammaincc

    return gammaincc(shape, scale / np.asarray(x, dtype=np.float64))


def sample_truncated(base_cdf, base_inv_cdf, interval: TruncationInterval, u):
    """Quantile of a distribution restricted to [a, b]: F^{-1}(F(a) + (F(b)-F(a))u)."""
    fa = float(base_cdf(interval.lower)) if np.isfinite(interval.lower) else 0.0
    fb = float(base_cdf(interval.upper)) if np.isfinite(interval.upper) else 1.0
    if not fb - fa > 0.0:
        raise ValueError(
            f"degenerate truncation: F({interval.lower}) = F({interval.upper}) = {fa}"
        )
    u = np.asarray(u, dtype=np.float64)
    inner = np.clip(fa + (fb - fa) * u, _EPS53, 1.0 - _EPS53)
    return base_inv_cdf(inner)


def truncated_normal_lower(mean, u):
    """Quantile at u of N(mean, 1) truncated to [0, inf), tail-stable.

    Survival form: x = mean - Phi^{-1}(Phi(mean) (1-u)), evaluated in log
    space so mean << 0 (mass far from the truncation) stays accurate.
    """
    mean = np.asarray(mean, dtype=np.float64)
    u = clamp_unit(u)
    return mean - ndtri_exp(log_ndtr(mean) + np.log1p(-u))


def truncated_normal_upper(mean, u):
    """Quantile at u of N(mean, 1) truncated to (-inf, 0], tail-stable."""
    mean = np.asarray(mean, dtype=np.float64)
    u = clamp_unit(u)
    return mean + ndtri_exp(log_ndtr(-mean) + np.log(u))


def truncated_normal_log_density(x, mean, positive_side) -> np.ndarray:
    """Log density of N(mean, 1) truncated to [0, inf) or (-inf, 0], elementwise.

    Points outside the support get -inf.
    """
    x = np.asarray(x, dtype=np.float64)
    mean = np.asarray(mean, dtype=np.float64)
    side = np.asarray(positive_side, dtype=bool)
    log_mass = np.where(side, log_ndtr(mean), log_ndtr(-mean))
    out = -0.5 * (x - mean) ** 2 - 0.5 * math.log(2 * math.pi) - log_mass
    in_support = np.where(side, x >= 0.0, x <= 0.0)
    return np.where(in_support, out, -np.inf)


def standard_normal_cdf(x):
    return ndtr(np.asarray(x, dtype=np.float64))

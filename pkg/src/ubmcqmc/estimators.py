"""Unbiased estimators, pooled error reports, and efficiency diagnostics.

The per-chain estimator splits into a within-chain average and a bias
correction built from coupled differences; pooling R independent chains
gives the squared-error scale sigma_tot used for RMSE-reduction factors.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

import numpy as np

from .coupling import CoupledTrajectory, trajectory_cost


@dataclass(frozen=True)
class UnbiasedEstimate:
    """F = MCMC part + bias correction, with the meeting time and cost."""

    value: np.ndarray
    mcmc_part: np.ndarray
    bc_part: np.ndarray
    tau: int
    cost: int


def f_km(f_x: np.ndarray, f_y: np.ndarray, k: int, m: int, tau: int) -> UnbiasedEstimate:
    """Time-averaged unbiased estimate from f along the two chains.

    f_x[t] = f(X_t) for t = 0..T with T >= max(m, tau - 1); f_y[t] = f(Y_t)
    needs indices up to tau - 2. The bias correction sums
    min(1, (l-k)/(m-k+1)) (f(X_l) - f(Y_{l-1})) over l = k+1..tau-1 and is
    zero by convention when tau <= k + 1.
    """
    if not 0 <= k <= m:
        raise ValueError(f"need 0 <= k <= m, got k={k}, m={m}")
    f_x = np.atleast_2d(np.asarray(f_x, dtype=np.float64))
    f_y = np.atleast_2d(np.asarray(f_y, dtype=np.float64))
    if f_x.shape[0] <= max(m, tau - 1):
        raise ValueError(
            f"f_x has {f_x.shape[0]} rows; need indices up to {max(m, tau - 1)}"
        )
    if tau >= k + 2 and f_y.shape[0] <= tau - 2:
        raise ValueError(f"f_y has {f_y.shape[0]} rows; need indices up to {tau - 2}")
    span = m - k + 1
    mcmc = f_x[k : m + 1].mean(axis=0)
    ls = np.arange(k + 1, tau)
    if ls.size:
        weights = np.minimum(1.0, (ls - k) / span)
        bc = (weights[:, None] * (f_x[ls] - f_y[ls - 1])).sum(axis=0)
    else:
        bc = np.zeros_like(mcmc)
    return UnbiasedEstimate(mcmc + bc, mcmc, bc, int(tau), trajectory_cost(tau, m))


def estimate_from_trajectory(traj: CoupledTrajectory, k: int | None = None, m: int | None = None) -> UnbiasedEstimate:
    return f_km(traj.f_x, traj.f_y, traj.k if k is None else k, traj.m if m is None else m, traj.tau)


@dataclass(frozen=True)
class PooledReport:
    """Pooled mean and per-component error scale over R repeated chains."""

    mean: np.ndarray
    sigma: np.ndarray  # per-component sigma_j
    sigma_tot: float
    r: int
    n: int | None = None
    k: int | None = None

    @property
    def sigma_tot_sq(self) -> float:
        return self.sigma_tot**2

    def to_json_dict(self) -> dict:
        return {
            "mean": list(map(float, self.mean)),
            "sigma": list(map(float, self.sigma)),
            "sigma_tot": float(self.sigma_tot),
            "chains": self.r,
            "n": self.n,
            "k": self.k,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["component", "mean", "sigma"])
            for j, (mu, s) in enumerate(zip(self.mean, self.sigma)):
                w.writerow([j, repr(float(mu)), repr(float(s))])


def pool(estimates: np.ndarray, n: int | None = None, k: int | None = None) -> PooledReport:
    """sigma_j^2 = (R(R-1))^{-1} sum_r (F_rj - mean_j)^2; sigma_tot^2 = sum_j."""
    est = np.atleast_2d(np.asarray(estimates, dtype=np.float64))
    if est.ndim != 2:
        raise ValueError("estimates must form an R x p matrix")
    r = est.shape[0]
    if r < 2:
        raise ValueError("pooling needs at least two chains")
    mean = est.mean(axis=0)
    sig_sq = ((est - mean) ** 2).sum(axis=0) / (r * (r - 1))
    sigma = np.sqrt(sig_sq)
    return PooledReport(mean, sigma, float(np.sqrt(sig_sq.sum())), r, n, k)


def expected_cost(taus, m: int) -> float:
    """Sample mean of the update-count cost 2(tau-1) + max(1, m+1-tau)."""
    taus = np.atleast_1d(np.asarray(taus))
    if taus.size == 0:
        raise ValueError("need at least one meeting time")
    if m < 1:
        raise ValueError("m >= 1 required")
    costs = 2.0 * (taus - 1) + np.maximum(1.0, m + 1.0 - taus)
    return float(costs.mean())


def loss_of_efficiency(
    cost_ratio: float, expected_cost_value: float, var_total: float, v_inf_total: float
) -> float:
    """(c/c0) E[cost] V[F] / V_inf: work-adjusted variance against one long chain.

    var_total is the single-chain estimator variance (R sigma_tot^2 when
    sigma_tot comes from pooling R chains).
    """
    if v_inf_total <= 0:
        raise ValueError("asymptotic variance must be positive")
    if cost_ratio <= 0 or expected_cost_value <= 0 or var_total <= 0:
        raise ValueError("all efficiency inputs must be positive")
    return cost_ratio * expected_cost_value * var_total / v_inf_total


def asymptotic_variance(averages: np.ndarray, length: int) -> tuple[np.ndarray, float]:
    """V_inf from repeated long chains: length x variance of per-chain averages."""
    avg = np.atleast_1d(np.asarray(averages, dtype=np.float64))
    if avg.ndim == 1:
        avg = avg[:, None]
    if avg.shape[0] < 2:
        raise ValueError("need at least two long chains")
    if length < 1:
        raise ValueError("chain length must be positive")
    v = length * avg.var(axis=0, ddof=1)
    return v, float(v.sum())


def fit_rate(ns, rmses) -> float:
    """Least-squares slope of log2 rmse against log2 N."""
    ns = np.asarray(ns, dtype=np.float64)
    rmses = np.asarray(rmses, dtype=np.float64)
    if ns.size < 3:
        raise ValueError("rate fit needs at least three sizes")
    if (ns <= 0).any() or (rmses <= 0).any():
        raise ValueError("sizes and rmses must be positive")
    slope, _ = np.polyfit(np.log2(ns), np.log2(rmses), 1)
    return float(slope)


@dataclass(frozen=True)
class BcDecay:
    """Decay of E[BC^2] across N; degenerate when some scan level has BC = 0."""

    slope: float | None
    second_moments: np.ndarray
    degenerate: bool


def bc_second_moment(ns, bc_samples) -> BcDecay:
    """Slope of log E[BC^2] against log N over a scan of matrix sizes.

    bc_samples[i] holds the per-repetition BC values (any shape; squared and
    averaged over everything but nothing else assumed) observed at ns[i].
    """
    ns = np.asarray(ns, dtype=np.float64)
    if ns.size != len(bc_samples):
        raise ValueError("one BC sample set per N required")
    moments = np.array(
        [float(np.mean(np.square(np.asarray(s, dtype=np.float64)))) for s in bc_samples]
    )
    if (moments == 0.0).any():
        return BcDecay(None, moments, True)
    if ns.size < 3:
        raise ValueError("decay fit needs at least three sizes")
    slope, _ = np.polyfit(np.log(ns), np.log(moments), 1)
    return BcDecay(float(slope), moments, False)

"""Gibbs samplers packaged as coupled-kernel models.

Four models: a conjugate bivariate-normal toy with closed-form mean,
Bayesian linear regression (normal prior on coefficients, inverse-gamma
on the noise variance), probit regression with truncated-normal latents,
and logistic regression with Polya-Gamma latents.

Conventions shared by every model:
  * block order is coefficients first, then the latent/variance block,
    in index order; the order is part of the model definition;
  * one sweep consumes exactly ``n_driving_cols`` unit-interval values,
    sliced left to right in block order;
  * latent vectors are coupled componentwise (n independent size-1
    couplings); probit and logistic override the generic scan with a
    vectorized form of that same per-component coupling;
  * f is the identity on the coefficient block.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.linalg import cho_solve, solve_triangular
from scipy.special import gammaln

from .coupling import (
    DEFAULT_CAP,
    BlockConditional,
    coupled_gibbs_step,
    maximal_coupling_block,
    single_gibbs_step,
)
from .distributions import (
    normal_inv_cdf,
    sample_inverse_gamma,
    sample_mvn_precision,
    spd_factor,
    truncated_normal_log_density,
    truncated_normal_lower,
    truncated_normal_upper,
)
from .polya_gamma import (
    APPROACH_3,
    PgApproach,
    pg_density_series,
    pg_log_density_ratio,
    pg_sample,
    pg_sample_vector,
)

_LOG_2PI = math.log(2.0 * math.pi)


class GibbsModel:
    """Base class wiring a block layout into the generic coupled kernel.

    Subclasses set n_blocks, d_state, n_driving_cols, f_dim and implement
    block_cols, block_state_slice, block_conditional, init_state, f.
    step / coupled_step default to the generic sequential scan; models with
    large latent blocks override them with vectorized equivalents.
    """

    n_blocks: int
    d_state: int
    n_driving_cols: int
    f_dim: int

    def block_cols(self, i: int) -> slice:
        raise NotImplementedError

    def block_state_slice(self, i: int) -> slice:
        raise NotImplementedError

    def block_conditional(self, i: int, state: np.ndarray) -> BlockConditional:
        raise NotImplementedError

    def init_state(self, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    def f(self, state: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def step(self, state, u_row, rng, stats=None):
        return single_gibbs_step(self, state, u_row, rng, stats)

    def coupled_step(self, x, y, u_row, streams, stats=None):
        return coupled_gibbs_step(self, x, y, u_row, streams, stats)


class ToyConjugateNormal(GibbsModel):
    """Two-block Gibbs sampler targeting N(mean, [[1, rho], [rho, 1]]).

    Each block redraws one coordinate from its exact conditional
    N(mean_i + rho (x_other - mean_other), 1 - rho^2), so the stationary
    mean is known in closed form. Sweep order is coordinate 0 then 1;
    swap_blocks reverses it (the stationary law is order-invariant).
    """

    n_blocks = 2
    d_state = 2
    n_driving_cols = 2
    f_dim = 2

    def __init__(self, mean=(1.0, -0.5), rho=0.5, init_sd=2.0, swap_blocks=False):
        if not -1.0 < rho < 1.0:
            raise ValueError(f"need |rho| < 1, got {rho}")
        self.mean = np.asarray(mean, dtype=np.float64)
        if self.mean.shape != (2,):
            raise ValueError("mean must have two components")
        self.rho = float(rho)
        self.init_sd = float(init_sd)
        self._order = (1, 0) if swap_blocks else (0, 1)
        self._cond_sd = math.sqrt(1.0 - rho * rho)

    @property
    def posterior_mean(self) -> np.ndarray:
        return self.mean.copy()

    def block_cols(self, i):
        return slice(i, i + 1)

    def block_state_slice(self, i):
        j = self._order[i]
        return slice(j, j + 1)

    def block_conditional(self, i, state):
        j = self._order[i]
        o = 1 - j
        mu = self.mean[j] + self.rho * (state[o] - self.mean[o])
        sd = self._cond_sd

        def log_density(v):
            t = (float(v[0]) - mu) / sd
            return -0.5 * t * t - math.log(sd) - 0.5 * _LOG_2PI

        def driven(u):
            return mu + sd * normal_inv_cdf(u)

        def residual(rng):
            return mu + sd * rng.standard_normal(1)

        return BlockConditional(log_density, driven, residual)

    def init_state(self, rng):
        return self.init_sd * rng.standard_normal(2)

    def f(self, state):
        return np.asarray(state, dtype=np.float64)


class LinearModel(GibbsModel):
    """Bayesian linear regression, blocks (beta, sigma^2).

    Conditionals: beta | sigma^2 ~ N(b1, B1) with B1 = (B0^-1 +
    sigma^-2 D^T D)^-1 and b1 = B1 (B0^-1 b0 + sigma^-2 D^T y);
    sigma^2 | beta ~ IGa(n1/2, s1/2) with n1 = n0 + n and
    s1 = s0 + ||y - D beta||^2. Defaults b0 = 0, B0 = 100 I, n0 = 5,
    s0 = 0.01.

    Internally beta = A gamma where A = L0 U diagonalizes the data term:
    the gamma conditional has precision I + Lambda / sigma^2, so one sweep
    costs O(p) after the one-time eigendecomposition, independent of n.
    batched_* methods run that sweep across many chains at once.
    """

    def __init__(
        self,
        design,
        response,
        prior_mean=None,
        prior_cov=None,
        prior_df: float = 5.0,
        prior_scale: float = 0.01,
    ):
        d_mat = np.asarray(design, dtype=np.float64)
        y = np.asarray(response, dtype=np.float64)
        if d_mat.ndim != 2 or y.ndim != 1 or d_mat.shape[0] != y.size:
            raise ValueError(f"incompatible design {d_mat.shape} and response {y.shape}")
        n, p = d_mat.shape
        self.n_obs = n
        self.p = p
        self.n_blocks = 2
        self.d_state = p + 1
        self.n_driving_cols = p + 1
        self.f_dim = p
        self.b0 = np.zeros(p) if prior_mean is None else np.asarray(prior_mean, dtype=np.float64)
        b_cov = 100.0 * np.eye(p) if prior_cov is None else np.asarray(prior_cov, dtype=np.float64)
        self.n0 = float(prior_df)
        self.s0 = float(prior_scale)
        if self.n0 <= 0 or self.s0 <= 0:
            raise ValueError("prior_df and prior_scale must be positive")

        l0 = spd_factor(b_cov)
        gram = d_mat.T @ d_mat
        m = l0.T @ gram @ l0
        lam, u_rot = np.linalg.eigh((m + m.T) / 2.0)
        self._lam = np.clip(lam, 0.0, None)  # eigh roundoff can go slightly negative
        self._a = l0 @ u_rot
        self._a_inv = u_rot.T @ solve_triangular(l0, np.eye(p), lower=True)
        self._r0 = u_rot.T @ solve_triangular(l0, self.b0, lower=True)
        self._r1 = self._a.T @ (d_mat.T @ y)
        self._yty = float(y @ y)
        self._l0 = l0
        self._log_det_a = float(np.sum(np.log(np.diag(l0))))
        self.n1 = self.n0 + n

    # --- generic block interface -------------------------------------

    def block_cols(self, i):
        return slice(0, self.p) if i == 0 else slice(self.p, self.p + 1)

    block_state_slice = block_cols

    def block_conditional(self, i, state):
        if i == 0:
            return self._beta_conditional(float(state[self.p]))
        return self._sig2_conditional(state[: self.p])

    def _gamma_moments(self, sig2: float):
        w = sig2 / (sig2 + self._lam)
        return w * (self._r0 + self._r1 / sig2), w

    def _beta_conditional(self, sig2: float) -> BlockConditional:
        if not sig2 > 0:
            raise ValueError(f"sigma^2 must be positive, got {sig2}")
        mean_g, w = self._gamma_moments(sig2)
        sd_g = np.sqrt(w)
        norm_const = (
            -0.5 * float(np.sum(np.log(w))) - 0.5 * self.p * _LOG_2PI - self._log_det_a
        )

        def log_density(b):
            g = self._a_inv @ np.asarray(b, dtype=np.float64)
            t = (g - mean_g) / sd_g
            return norm_const - 0.5 * float(t @ t)

        def driven(u):
            return self._a @ (mean_g + sd_g * normal_inv_cdf(u))

        def residual(rng):
            return self._a @ (mean_g + sd_g * rng.standard_normal(self.p))

        return BlockConditional(log_density, driven, residual)

    def _residual_ss(self, gamma: np.ndarray) -> float:
        rss = self._yty - 2.0 * float(gamma @ self._r1) + float(self._lam @ (gamma * gamma))
        return max(rss, 0.0)

    def _sig2_conditional(self, beta: np.ndarray) -> BlockConditional:
        gamma = self._a_inv @ np.asarray(beta, dtype=np.float64)
        a = 0.5 * self.n1
        b = 0.5 * (self.s0 + self._residual_ss(gamma))
        norm_const = a * math.log(b) - gammaln(a)

        def log_density(v):
            val = float(v[0])
            if val <= 0.0:
                return -math.inf
            return norm_const - (a + 1.0) * math.log(val) - b / val

        def driven(u):
            return sample_inverse_gamma(a, b, u)

        def residual(rng):
            return sample_inverse_gamma(a, b, rng.random())

        return BlockConditional(log_density, driven, residual)

    def init_state(self, rng):
        beta = self.b0 + self._l0 @ rng.standard_normal(self.p)
        sig2 = float(sample_inverse_gamma(0.5 * self.n0, 0.5 * self.s0, rng.random()))
        return np.concatenate([beta, [sig2]])

    def f(self, state):
        return np.asarray(state[: self.p], dtype=np.float64)

    # --- many-chain fast path (plain MCMC / long-chain variance) ------

    def batched_init(self, n_chains: int, rng) -> tuple[np.ndarray, np.ndarray]:
        """Prior draws for n_chains chains, in gamma coordinates."""
        beta = self.b0 + rng.standard_normal((n_chains, self.p)) @ self._l0.T
        sig2 = sample_inverse_gamma(0.5 * self.n0, 0.5 * self.s0, rng.random(n_chains))
        return beta @ self._a_inv.T, np.asarray(sig2, dtype=np.float64)

    def batched_sweep(
        self, gamma: np.ndarray, sig2: np.ndarray, u: np.ndarray
    ) -> tuple[np.ndarray, np.ndarray]:
        """One sweep of every chain; u has shape (n_chains, p + 1)."""
        s = sig2[:, None]
        w = s / (s + self._lam)
        gamma = w * (self._r0 + self._r1 / s) + np.sqrt(w) * normal_inv_cdf(u[:, : self.p])
        rss = np.clip(
            self._yty - 2.0 * (gamma @ self._r1) + (gamma * gamma) @ self._lam, 0.0, None
        )
        sig2 = sample_inverse_gamma(0.5 * self.n1, 0.5 * (self.s0 + rss), u[:, self.p])
        return gamma, np.asarray(sig2, dtype=np.float64)

    def beta_from_gamma(self, gamma: np.ndarray) -> np.ndarray:
        """Map gamma coordinates back to beta; accepts (p,) or (r, p)."""
        return np.asarray(gamma, dtype=np.float64) @ self._a.T


class ProbitModel(GibbsModel):
    """Probit regression with a flat prior, blocks (beta, z_1 .. z_n).

    beta | z ~ N((D^T D)^-1 D^T z, (D^T D)^-1); z_i | beta ~ N(D_i beta, 1)
    truncated to [0, inf) when y_i = 1 and to (-inf, 0] when y_i = 0.
    The latent block is n independent size-1 conditionals; step and
    coupled_step vectorize across components.
    """

    def __init__(self, design, response):
        d_mat = np.asarray(design, dtype=np.float64)
        y = np.asarray(response)
        if d_mat.ndim != 2 or y.ndim != 1 or d_mat.shape[0] != y.size:
            raise ValueError(f"incompatible design {d_mat.shape} and response {y.shape}")
        if not np.isin(y, (0, 1)).all():
            raise ValueError("probit response must be binary 0/1")
        n, p = d_mat.shape
        self.design = d_mat
        self.positive = y.astype(np.float64) == 1.0
        self.n_obs = n
        self.p = p
        self.n_blocks = 1 + n
        self.d_state = p + n
        self.n_driving_cols = p + n
        self.f_dim = p
        gram = d_mat.T @ d_mat
        try:
            self._chol_g = np.linalg.cholesky(gram)
        except np.linalg.LinAlgError as exc:
            raise ValueError("design has singular D^T D") from exc
        self._proj = cho_solve((self._chol_g, True), d_mat.T)
        self._log_det_g = 2.0 * float(np.sum(np.log(np.diag(self._chol_g))))

    def block_cols(self, i):
        if i == 0:
            return slice(0, self.p)
        return slice(self.p + i - 1, self.p + i)

    block_state_slice = block_cols

    def _beta_conditional(self, z: np.ndarray) -> BlockConditional:
        mean = self._proj @ z
        norm_const = 0.5 * self._log_det_g - 0.5 * self.p * _LOG_2PI

        def log_density(b):
            t = self._chol_g.T @ (np.asarray(b, dtype=np.float64) - mean)
            return norm_const - 0.5 * float(t @ t)

        def driven(u):
            return sample_mvn_precision(mean, self._chol_g, u)

        def residual(rng):
            return mean + solve_triangular(
                self._chol_g, rng.standard_normal(self.p), lower=True, trans="T"
            )

        return BlockConditional(log_density, driven, residual)

    def block_conditional(self, i, state):
        if i == 0:
            return self._beta_conditional(state[self.p :])
        j = i - 1
        mu = float(self.design[j] @ state[: self.p])
        pos = bool(self.positive[j])

        def log_density(v):
            return float(truncated_normal_log_density(float(v[0]), mu, pos))

        def driven(u):
            return truncated_normal_lower(mu, u) if pos else truncated_normal_upper(mu, u)

        def residual(rng):
            u = rng.random()
            return truncated_normal_lower(mu, u) if pos else truncated_normal_upper(mu, u)

        return BlockConditional(log_density, driven, residual)

    def _draw_latents(self, mu: np.ndarray, u: np.ndarray) -> np.ndarray:
        z = np.empty(self.n_obs, dtype=np.float64)
        pos = self.positive
        z[pos] = truncated_normal_lower(mu[pos], u[pos])
        z[~pos] = truncated_normal_upper(mu[~pos], u[~pos])
        return z

    def init_state(self, rng):
        z = self._draw_latents(np.zeros(self.n_obs), rng.random(self.n_obs))
        return np.concatenate([np.zeros(self.p), z])

    def f(self, state):
        return np.asarray(state[: self.p], dtype=np.float64)

    def step(self, state, u_row, rng, stats=None):
        state = np.asarray(state, dtype=np.float64)
        beta = self._beta_conditional(state[self.p :]).driven(u_row[: self.p])
        z = self._draw_latents(self.design @ beta, u_row[self.p :])
        return np.concatenate([beta, z])

    def coupled_step(self, x, y, u_row, streams, stats=None):
        p = self.p
        bx, by, met = maximal_coupling_block(
            self._beta_conditional(np.asarray(x[p:], dtype=np.float64)),
            self._beta_conditional(np.asarray(y[p:], dtype=np.float64)),
            u_row[:p],
            streams.coupling,
            streams.y_chain,
        )
        mu_x = self.design @ bx
        mu_y = self.design @ by
        zx = self._draw_latents(mu_x, u_row[p:])
        lp = truncated_normal_log_density(zx, mu_x, self.positive)
        lq = truncated_normal_log_density(zx, mu_y, self.positive)
        acc = lp + np.log(streams.coupling.random(self.n_obs)) <= lq
        zy = np.where(acc, zx, 0.0)
        pending = np.flatnonzero(~acc)
        rounds = 0
        while pending.size:
            rounds += 1
            if rounds > DEFAULT_CAP:
                raise RuntimeError(f"latent residual sampler stalled after {rounds} rounds")
            mu_p = mu_y[pending]
            pos_p = self.positive[pending]
            u = streams.y_chain.random(pending.size)
            prop = np.where(
                pos_p, truncated_normal_lower(mu_p, u), truncated_normal_upper(mu_p, u)
            )
            lq_p = truncated_normal_log_density(prop, mu_p, pos_p)
            lp_p = truncated_normal_log_density(prop, mu_x[pending], pos_p)
            ok = lq_p + np.log(streams.coupling.random(pending.size)) > lp_p
            zy[pending[ok]] = prop[ok]
            pending = pending[~ok]
        if stats is not None:
            stats["residual_redraws"] = stats.get("residual_redraws", 0) + rounds
        met = met and bool(acc.all())
        return np.concatenate([bx, zx]), np.concatenate([by, zy]), met


class LogisticPgModel(GibbsModel):
    """Logistic regression via Polya-Gamma augmentation, blocks (beta, W).

    beta | W ~ N(Sigma(W) (D^T (y - 1/2) + B^-1 b), Sigma(W)) with
    Sigma(W) = (D^T diag(W) D + B^-1)^-1; W_i | beta ~ PG(1, |D_i beta|).
    Defaults b = 0, B = 10 I. The driving row spends p columns on beta and
    one column per W_i (two per W_i for approach 2: per-component pairs of
    a branch selector and a first proposal uniform).

    W sampling needs auxiliary IID uniforms beyond the driving value, so
    block_conditional takes an extra rng and the generic scan is never
    used; step and coupled_step are vectorized overrides.
    """

    def __init__(
        self,
        design,
        response,
        approach: PgApproach = APPROACH_3,
        prior_mean=None,
        prior_cov_scale: float = 10.0,
    ):
        d_mat = np.asarray(design, dtype=np.float64)
        y = np.asarray(response)
        if d_mat.ndim != 2 or y.ndim != 1 or d_mat.shape[0] != y.size:
            raise ValueError(f"incompatible design {d_mat.shape} and response {y.shape}")
        if not np.isin(y, (0, 1)).all():
            raise ValueError("logistic response must be binary 0/1")
        if prior_cov_scale <= 0:
            raise ValueError("prior_cov_scale must be positive")
        n, p = d_mat.shape
        self.design = d_mat
        self.approach = approach
        self.n_obs = n
        self.p = p
        self.n_blocks = 1 + n
        self.d_state = p + n
        self.n_driving_cols = p + 2 * n if approach.tag == 2 else p + n
        self.f_dim = p
        self.b = np.zeros(p) if prior_mean is None else np.asarray(prior_mean, dtype=np.float64)
        self._b_inv = np.eye(p) / float(prior_cov_scale)
        self._rhs = d_mat.T @ (y.astype(np.float64) - 0.5) + self._b_inv @ self.b

    def block_cols(self, i):
        if i == 0:
            return slice(0, self.p)
        j = i - 1
        if self.approach.tag == 2:
            return slice(self.p + 2 * j, self.p + 2 * j + 2)
        return slice(self.p + j, self.p + j + 1)

    def block_state_slice(self, i):
        if i == 0:
            return slice(0, self.p)
        return slice(self.p + i - 1, self.p + i)

    def _beta_conditional(self, w: np.ndarray) -> BlockConditional:
        if not (w > 0).all():
            raise ValueError("Polya-Gamma latents must be positive")
        prec = (self.design.T * w) @ self.design + self._b_inv
        chol = np.linalg.cholesky(prec)
        mean = cho_solve((chol, True), self._rhs)
        norm_const = float(np.sum(np.log(np.diag(chol)))) - 0.5 * self.p * _LOG_2PI

        def log_density(bb):
            t = chol.T @ (np.asarray(bb, dtype=np.float64) - mean)
            return norm_const - 0.5 * float(t @ t)

        def driven(u):
            return sample_mvn_precision(mean, chol, u)

        def residual(rng):
            return mean + solve_triangular(
                chol, rng.standard_normal(self.p), lower=True, trans="T"
            )

        return BlockConditional(log_density, driven, residual)

    def block_conditional(self, i, state, rng=None):
        """Blocks i >= 1 need rng for the PG proposal rounds past the first."""
        if i == 0:
            return self._beta_conditional(np.asarray(state[self.p :], dtype=np.float64))
        c = float(self.design[i - 1] @ state[: self.p])
        approach = self.approach

        def log_density(v):
            dens = pg_density_series(float(v[0]), c)
            return float(np.log(np.maximum(dens, 1e-300)))

        def driven(u):
            if rng is None:
                raise ValueError("PG block needs an auxiliary stream; pass rng")
            return pg_sample(c, approach, np.asarray(u, dtype=np.float64), rng)

        def residual(res_rng):
            return pg_sample(c, approach, None, res_rng)

        return BlockConditional(log_density, driven, residual)

    def _w_driving(self, u_row):
        p, n = self.p, self.n_obs
        if self.approach.tag == 2:
            return np.asarray(u_row[p : p + 2 * n], dtype=np.float64).reshape(n, 2).T
        return np.asarray(u_row[p : p + n], dtype=np.float64)

    def init_state(self, rng):
        w = pg_sample_vector(np.zeros(self.n_obs), self.approach, None, rng)
        return np.concatenate([np.zeros(self.p), w])

    def f(self, state):
        return np.asarray(state[: self.p], dtype=np.float64)

    def step(self, state, u_row, rng, stats=None):
        state = np.asarray(state, dtype=np.float64)
        beta = self._beta_conditional(state[self.p :]).driven(u_row[: self.p])
        w = pg_sample_vector(
            self.design @ beta, self.approach, self._w_driving(u_row), rng, stats
        )
        return np.concatenate([beta, w])

    def coupled_step(self, x, y, u_row, streams, stats=None):
        p = self.p
        bx, by, met = maximal_coupling_block(
            self._beta_conditional(np.asarray(x[p:], dtype=np.float64)),
            self._beta_conditional(np.asarray(y[p:], dtype=np.float64)),
            u_row[:p],
            streams.coupling,
            streams.y_chain,
        )
        cx = self.design @ bx
        cy = self.design @ by
        wx = pg_sample_vector(cx, self.approach, self._w_driving(u_row), streams.x_continue, stats)
        acc = np.log(streams.coupling.random(self.n_obs)) <= pg_log_density_ratio(wx, cx, cy)
        wy = np.where(acc, wx, 1.0)
        pending = np.flatnonzero(~acc)
        rounds = 0
        while pending.size:
            rounds += 1
            if rounds > DEFAULT_CAP:
                raise RuntimeError(f"PG residual sampler stalled after {rounds} rounds")
            prop = pg_sample_vector(cy[pending], self.approach, None, streams.y_chain, stats)
            ok = np.log(streams.coupling.random(pending.size)) > pg_log_density_ratio(
                prop, cy[pending], cx[pending]
            )
            wy[pending[ok]] = prop[ok]
            pending = pending[~ok]
        if stats is not None:
            stats["residual_redraws"] = stats.get("residual_redraws", 0) + rounds
        met = met and bool(acc.all())
        return np.concatenate([bx, wx]), np.concatenate([by, wy]), met


def select_k(pilot_taus) -> int:
    """Burn-in choice: twice the empirical 99% quantile of pilot meeting times.

    The quantile is the order statistic at index ceil(0.99 * count), so with
    1000 pilots it is the 990th smallest tau.
    """
    taus = np.asarray(pilot_taus, dtype=np.float64)
    if taus.size < 100:
        raise ValueError(f"need at least 100 pilot meeting times, got {taus.size}")
    if not np.isfinite(taus).all():
        raise ValueError("pilot meeting times must be finite")
    order = np.sort(taus)
    q99 = order[math.ceil(0.99 * taus.size) - 1]
    return int(2.0 * q99)

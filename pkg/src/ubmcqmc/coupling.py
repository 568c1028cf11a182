"""Maximal coupling of block conditionals and the lag-1 coupled Gibbs chain.

The X chain is faithful: its updates are a deterministic function of the
initial draw and the driving rows, never of the Y chain or the coupling
uniforms. Y is advanced by maximal coupling against X block by block; after
the chains meet, Y simply mirrors X. Meeting is exact bitwise equality, the
event maximal coupling produces with the overlap probability.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .streams import ChainStreams

DEFAULT_CAP = 10**6


@dataclass
class BlockConditional:
    """One block's full conditional, bound to a fixed state remainder.

    log_density is needed only up to a constant shared between the two
    conditionals being coupled; driven maps unit-interval values to a draw;
    residual draws from the same distribution using an IID stream.
    """

    log_density: Callable[[np.ndarray], float]
    driven: Callable[[np.ndarray], np.ndarray]
    residual: Callable[[np.random.Generator], np.ndarray]


class UncoupledAtCap(RuntimeError):
    """Chains failed to meet within the iteration cap."""

    def __init__(self, cap: int, trajectory: "CoupledTrajectory"):
        super().__init__(f"chains did not meet within {cap} iterations")
        self.cap = cap
        self.trajectory = trajectory


def maximal_coupling_block(
    p: BlockConditional,
    q: BlockConditional,
    u_block: np.ndarray,
    coupling_rng: np.random.Generator,
    residual_rng: np.random.Generator,
    max_tries: int = DEFAULT_CAP,
) -> tuple[np.ndarray, np.ndarray, bool]:
    """Draw (x, y) with x ~ p, y ~ q, maximizing P(x = y).

    x is exactly the driven draw at u_block regardless of q. Acceptance runs
    in log space: y = x when log p(x) + log w <= log q(x), otherwise y is
    redrawn from q until log q(y) + log w' > log p(y).
    """
    x = np.atleast_1d(np.asarray(p.driven(u_block), dtype=np.float64))
    lp_x = float(p.log_density(x))
    lq_x = float(q.log_density(x))
    if math.isnan(lp_x) or lp_x == math.inf:
        raise ValueError(f"non-finite log density {lp_x} under p at draw {x!r}")
    if math.isnan(lq_x) or lq_x == math.inf:
        raise ValueError(f"non-finite log density {lq_x} under q at draw {x!r}")
    log_w = math.log(coupling_rng.random())
    if lp_x + log_w <= lq_x:
        return x, x.copy(), True
    for _ in range(max_tries):
        y = np.atleast_1d(np.asarray(q.residual(residual_rng), dtype=np.float64))
        lq_y = float(q.log_density(y))
        lp_y = float(p.log_density(y))
        if math.isnan(lq_y) or lq_y == math.inf:
            raise ValueError(f"non-finite log density {lq_y} under q at draw {y!r}")
        if lq_y + math.log(coupling_rng.random()) > lp_y:
            return x, y, False
    raise RuntimeError(f"residual sampler rejected {max_tries} proposals")


def coupled_gibbs_step(
    model,
    x: np.ndarray,
    y: np.ndarray,
    u_row: np.ndarray,
    streams: ChainStreams,
    stats: dict | None = None,
) -> tuple[np.ndarray, np.ndarray, bool]:
    """Sequential-scan coupled update of every block; met = all blocks equal.

    Block i's conditionals are bound to states whose blocks 1..i-1 have
    already been updated this step (sequential scan convention).
    """
    x = np.array(x, dtype=np.float64)
    y = np.array(y, dtype=np.float64)
    met = True
    for i in range(model.n_blocks):
        cols = model.block_cols(i)
        sl = model.block_state_slice(i)
        p = model.block_conditional(i, x)
        q = model.block_conditional(i, y)
        xi, yi, same = maximal_coupling_block(
            p, q, u_row[cols], streams.coupling, streams.y_chain
        )
        x[sl] = xi
        y[sl] = yi
        met = met and same
    return x, y, met


def single_gibbs_step(
    model,
    x: np.ndarray,
    u_row: np.ndarray,
    x_rng: np.random.Generator,
    stats: dict | None = None,
) -> np.ndarray:
    """Uncoupled sequential-scan update (the faithful X-chain transition)."""
    x = np.array(x, dtype=np.float64)
    for i in range(model.n_blocks):
        p = model.block_conditional(i, x)
        x[model.block_state_slice(i)] = p.driven(u_row[model.block_cols(i)])
    return x


@dataclass
class CoupledTrajectory:
    """Per-chain record: f evaluated along both chains, plus cost counters.

    f_x[t] = f(X_t) for t = 0..T, f_y[t] = f(Y_t) for t = 0..T-1, where
    T = max(m, tau). X_t = Y_{t-1} (hence equal f rows) for all t >= tau.
    """

    f_x: np.ndarray
    f_y: np.ndarray
    tau: float  # int, or math.inf when uncoupled at cap
    k: int
    m: int
    x_updates: int
    y_updates: int
    proposal_rejections: int = 0
    states_x: list | None = None
    states_y: list | None = None

    @property
    def cost(self) -> int:
        return trajectory_cost(self.tau, self.m)


def trajectory_cost(tau: float, m: int) -> int:
    """Update-count cost model 2(tau - 1) + max(1, m + 1 - tau)."""
    if not math.isfinite(tau):
        raise ValueError("cost undefined for an uncoupled trajectory")
    t = int(tau)
    return 2 * (t - 1) + max(1, m + 1 - t)


def run_coupled_chain(
    model,
    k: int,
    m: int,
    rows,
    streams: ChainStreams,
    cap: int = DEFAULT_CAP,
    keep_states: bool = False,
) -> CoupledTrajectory:
    """Lag-1 coupled run: X leads by one step and stops at t = max(m, tau).

    X_0, Y_0 are independent draws from the initial distribution; X_1 is an
    uncoupled step; each later step advances (X, Y) jointly until they meet
    at tau (X_tau = Y_{tau-1}), after which Y mirrors X without sampling.
    Raises UncoupledAtCap (carrying the partial trajectory) past cap steps.
    """
    if not 1 <= k <= m:
        raise ValueError(f"need 1 <= k <= m, got k={k}, m={m}")
    if cap < m:
        raise ValueError(f"cap {cap} below m={m}")
    stats: dict = {}
    x = model.init_state(streams.init_x)
    y = model.init_state(streams.init_y)
    f_x = [np.atleast_1d(model.f(x)).astype(np.float64)]
    f_y = [np.atleast_1d(model.f(y)).astype(np.float64)]
    sx = [x.copy()] if keep_states else None
    sy = [y.copy()] if keep_states else None

    x = model.step(x, rows.row(1), streams.x_continue, stats)
    f_x.append(np.atleast_1d(model.f(x)).astype(np.float64))
    if keep_states:
        sx.append(x.copy())
    t = 1  # X is at time t, Y at time t-1
    x_updates, y_updates = 1, 0
    tau: float = math.inf

    while not (math.isfinite(tau) and t >= max(m, tau)):
        if math.isfinite(tau):
            x = model.step(x, rows.row(t + 1), streams.x_continue, stats)
            t += 1
            x_updates += 1
            f_x.append(np.atleast_1d(model.f(x)).astype(np.float64))
            f_y.append(f_x[-1])  # Y mirrors X after meeting
            if keep_states:
                sx.append(x.copy())
                sy.append(x.copy())
        else:
            if t + 1 > cap:
                traj = CoupledTrajectory(
                    np.asarray(f_x), np.asarray(f_y), math.inf, k, m,
                    x_updates, y_updates, stats.get("pg_rejections", 0), sx, sy,
                )
                raise UncoupledAtCap(cap, traj)
            x, y, met = model.coupled_step(x, y, rows.row(t + 1), streams, stats)
            t += 1
            x_updates += 1
            y_updates += 1
            f_x.append(np.atleast_1d(model.f(x)).astype(np.float64))
            f_y.append(np.atleast_1d(model.f(y)).astype(np.float64))
            if keep_states:
                sx.append(x.copy())
                sy.append(y.copy())
            if met:
                tau = t

    return CoupledTrajectory(
        np.asarray(f_x),
        np.asarray(f_y),
        int(tau),
        k,
        m,
        x_updates,
        y_updates,
        stats.get("pg_rejections", 0),
        sx,
        sy,
    )


def run_single_chain(
    model, n_steps: int, rows, x_rng: np.random.Generator, init_rng: np.random.Generator
) -> np.ndarray:
    """Plain (uncoupled) chain; returns f(X_0..X_n) as an (n+1, p) array."""
    x = model.init_state(init_rng)
    out = [np.atleast_1d(model.f(x)).astype(np.float64)]
    stats: dict = {}
    for t in range(1, n_steps + 1):
        x = model.step(x, rows.row(t), x_rng, stats)
        out.append(np.atleast_1d(model.f(x)).astype(np.float64))
    return np.asarray(out)


def dump_trajectory(traj: CoupledTrajectory, path) -> None:
    """CSV dump of (t, f(X_t), f(Y_{t-1}), met flag) for debugging."""
    p = traj.f_x.shape[1]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(
            ["t"] + [f"fx_{j}" for j in range(p)] + [f"fy_prev_{j}" for j in range(p)] + ["met"]
        )
        for t in range(traj.f_x.shape[0]):
            fy = list(traj.f_y[t - 1]) if t >= 1 else [""] * p
            w.writerow([t] + list(traj.f_x[t]) + fy + [int(t >= traj.tau)])

"""Maximal coupling and the lag-1 coupled chain: overlap, faithfulness, cost."""
import math

import numpy as np
import pytest
from scipy.stats import ks_2samp

from ubmcqmc.coupling import (
    BlockConditional,
    CoupledTrajectory,
    UncoupledAtCap,
    coupled_gibbs_step,
    dump_trajectory,
    maximal_coupling_block,
    run_coupled_chain,
    run_single_chain,
    single_gibbs_step,
    trajectory_cost,
)
from ubmcqmc.distributions import normal_inv_cdf
from ubmcqmc.driving import make_row_provider
from ubmcqmc.streams import ChainStreams


def _normal_block(mu, sd=1.0):
    return BlockConditional(
        log_density=lambda v: -0.5 * ((v[0] - mu) / sd) ** 2,
        driven=lambda u: np.array([mu + sd * float(normal_inv_cdf(u[0]))]),
        residual=lambda rng: np.array([mu + sd * rng.standard_normal()]),
    )


def _uniform_block(lo):
    return BlockConditional(
        log_density=lambda v: 0.0 if lo <= v[0] <= lo + 1.0 else -math.inf,
        driven=lambda u: np.array([lo + u[0]]),
        residual=lambda rng: np.array([lo + rng.random()]),
    )


class BivariateNormalGibbs:
    """Two-block Gibbs for a standard bivariate normal with correlation rho."""

    def __init__(self, rho=0.5, init_sd=2.0):
        self.rho = rho
        self.sd = math.sqrt(1.0 - rho * rho)
        self.init_sd = init_sd
        self.n_blocks = 2
        self.d = 2

    def init_state(self, rng):
        return self.init_sd * rng.standard_normal(2)

    def f(self, state):
        return state.copy()

    def block_cols(self, i):
        return slice(i, i + 1)

    def block_state_slice(self, i):
        return slice(i, i + 1)

    def block_conditional(self, i, state):
        return _normal_block(self.rho * state[1 - i], self.sd)

    def step(self, x, u_row, x_rng, stats):
        return single_gibbs_step(self, x, u_row, x_rng, stats)

    def coupled_step(self, x, y, u_row, streams, stats):
        return coupled_gibbs_step(self, x, y, u_row, streams, stats)


class StatelessGibbs(BivariateNormalGibbs):
    """Conditionals ignore the state entirely (IID N(0,1) blocks)."""

    def block_conditional(self, i, state):
        return _normal_block(0.0, 1.0)


class NeverMeetingGibbs:
    """Single uniform block pinned to disjoint regions by the current state."""

    n_blocks = 1
    d = 1

    def init_state(self, rng):
        self._flip = getattr(self, "_flip", 0) + 1
        return np.array([0.5 if self._flip % 2 else 10.5])

    def f(self, state):
        return state.copy()

    def block_cols(self, i):
        return slice(0, 1)

    def block_state_slice(self, i):
        return slice(0, 1)

    def block_conditional(self, i, state):
        return _uniform_block(0.0 if state[0] < 5.0 else 10.0)

    def step(self, x, u_row, x_rng, stats):
        return single_gibbs_step(self, x, u_row, x_rng, stats)

    def coupled_step(self, x, y, u_row, streams, stats):
        return coupled_gibbs_step(self, x, y, u_row, streams, stats)


def _iid_provider(seed, chain, d):
    cs = ChainStreams.for_chain(seed, chain)
    return make_row_provider(None, 1, cs.burnin, cs.overflow, d=d), cs


# ---------------------------------------------------------------------------
# maximal_coupling_block

def test_identical_conditionals_always_couple():
    cs = ChainStreams.for_chain(0, 0)
    for u in (0.1, 0.5, 0.93):
        p = _normal_block(0.7)
        x, y, same = maximal_coupling_block(p, p, np.array([u]), cs.coupling, cs.y_chain)
        assert same
        np.testing.assert_array_equal(x, y)
        assert x is not y  # no aliasing between the two chains


def test_x_draw_is_faithful_to_p_only():
    cs = ChainStreams.for_chain(1, 0)
    u = np.array([0.37])
    p = _uniform_block(0.0)
    for q in (_uniform_block(0.0), _uniform_block(0.5), _uniform_block(7.0)):
        x, _, _ = maximal_coupling_block(p, q, u, cs.coupling, cs.y_chain)
        assert x[0] == 0.37


def test_overlap_probability_matches_total_variation():
    # U(0,1) vs U(0.5,1.5): overlap mass is exactly 1/2
    cs = ChainStreams.for_chain(2, 0)
    trials = 100_000
    us = cs.burnin.random(trials)
    hits = 0
    for u in us:
        _, _, same = maximal_coupling_block(
            _uniform_block(0.0), _uniform_block(0.5), np.array([u]), cs.coupling, cs.y_chain
        )
        hits += same
    rate = hits / trials
    se = math.sqrt(0.25 / trials)
    assert abs(rate - 0.5) <= 3.0 * se


def test_disjoint_supports_never_couple():
    cs = ChainStreams.for_chain(3, 0)
    for u in cs.burnin.random(200):
        x, y, same = maximal_coupling_block(
            _uniform_block(0.0), _uniform_block(2.0), np.array([u]), cs.coupling, cs.y_chain
        )
        assert not same
        assert 0.0 <= x[0] <= 1.0
        assert 2.0 <= y[0] <= 3.0


def test_y_marginal_matches_q():
    cs = ChainStreams.for_chain(4, 0)
    p = _normal_block(0.0)
    q = _normal_block(1.0)
    ys = np.array(
        [
            maximal_coupling_block(p, q, np.array([u]), cs.coupling, cs.y_chain)[1][0]
            for u in cs.burnin.random(10_000)
        ]
    )
    direct = 1.0 + cs.overflow.standard_normal(10_000)
    assert ks_2samp(ys, direct).pvalue > 0.001


def test_non_finite_density_raises_with_snapshot():
    cs = ChainStreams.for_chain(5, 0)
    bad = BlockConditional(
        log_density=lambda v: math.nan,
        driven=lambda u: np.array([u[0]]),
        residual=lambda rng: np.array([rng.random()]),
    )
    with pytest.raises(ValueError, match="non-finite"):
        maximal_coupling_block(bad, bad, np.array([0.5]), cs.coupling, cs.y_chain)


def test_residual_try_cap():
    cs = ChainStreams.for_chain(6, 0)
    # q's residual never lands where acceptance can pass: p dominates q
    # everywhere q places mass, so the residual accept test always fails
    q = BlockConditional(
        log_density=lambda v: -10.0,
        driven=lambda u: np.array([u[0]]),
        residual=lambda rng: np.array([0.25]),  # fixed point inside p's support
    )
    with pytest.raises(RuntimeError, match="rejected"):
        maximal_coupling_block(
            _uniform_block(0.0), q, np.array([0.9]), cs.coupling, cs.y_chain, max_tries=50
        )


# ---------------------------------------------------------------------------
# coupled_gibbs_step

def test_equal_states_stay_met():
    model = BivariateNormalGibbs()
    cs = ChainStreams.for_chain(7, 0)
    x = np.array([0.4, -1.2])
    x2, y2, met = model.coupled_step(x, x.copy(), np.array([0.3, 0.8]), cs, {})
    assert met
    np.testing.assert_array_equal(x2, y2)


def test_coupled_step_x_matches_single_step():
    model = BivariateNormalGibbs()
    cs = ChainStreams.for_chain(8, 0)
    x = np.array([1.0, 2.0])
    y = np.array([-3.0, 0.5])
    u = np.array([0.21, 0.77])
    x_c, _, _ = model.coupled_step(x, y, u, cs, {})
    x_s = model.step(x, u, cs.x_continue, {})
    np.testing.assert_array_equal(x_c, x_s)


def test_meeting_rate_grows_as_states_approach():
    model = BivariateNormalGibbs()
    hits = {}
    for gap in (0.1, 3.0):
        n_met = 0
        for rep in range(300):
            cs = ChainStreams.for_chain(int(gap * 10) + 100, rep)
            x = np.array([0.0, 0.0])
            _, _, met = model.coupled_step(x, x + gap, np.array([0.5, 0.5]), cs, {})
            n_met += met
        hits[gap] = n_met / 300
    assert hits[0.1] > hits[3.0]
    assert hits[0.1] > 0.5


# ---------------------------------------------------------------------------
# run_coupled_chain

def test_stateless_model_meets_at_two_and_glues():
    model = StatelessGibbs()
    rows, cs = _iid_provider(9, 0, 2)
    traj = run_coupled_chain(model, k=1, m=6, rows=rows, streams=cs)
    assert traj.tau == 2  # first coupled step produces X_2 = Y_1
    assert traj.f_x.shape == (7, 2)
    assert traj.f_y.shape == (6, 2)
    for t in range(traj.tau, 7):
        np.testing.assert_array_equal(traj.f_x[t], traj.f_y[t - 1])


def test_bivariate_chain_glues_and_counts_cost():
    model = BivariateNormalGibbs()
    for chain in range(8):
        rows, cs = _iid_provider(10, chain, 2)
        traj = run_coupled_chain(model, k=2, m=12, rows=rows, streams=cs)
        top = max(12, traj.tau)
        assert traj.f_x.shape[0] == top + 1
        assert traj.f_y.shape[0] == top
        for t in range(traj.tau, top + 1):
            np.testing.assert_array_equal(traj.f_x[t], traj.f_y[t - 1])
        assert traj.x_updates + traj.y_updates == trajectory_cost(traj.tau, 12)
        assert traj.cost == 2 * (traj.tau - 1) + max(1, 13 - traj.tau)


def test_chain_level_x_faithfulness():
    model = BivariateNormalGibbs()
    rows1, cs1 = _iid_provider(11, 3, 2)
    traj = run_coupled_chain(model, k=1, m=10, rows=rows1, streams=cs1)
    steps = max(10, traj.tau)
    rows2, cs2 = _iid_provider(11, 3, 2)
    solo = run_single_chain(model, steps, rows2, cs2.x_continue, cs2.init_x)
    np.testing.assert_array_equal(traj.f_x, solo)


def test_meeting_time_tail_is_geometric_like():
    model = BivariateNormalGibbs()
    taus = []
    for chain in range(2000):
        rows, cs = _iid_provider(12, chain, 2)
        taus.append(run_coupled_chain(model, k=1, m=1, rows=rows, streams=cs).tau)
    taus = np.array(taus)
    lo, hi = np.quantile(taus, [0.5, 0.99])
    ts = np.arange(int(lo), int(hi) + 1)
    surv = np.array([(taus > t).mean() for t in ts])
    keep = surv > 0
    slope, _ = np.polyfit(ts[keep], np.log(surv[keep]), 1)
    r = np.corrcoef(ts[keep], np.log(surv[keep]))[0, 1]
    assert slope < -0.05
    assert r < -0.95


def test_uncoupled_at_cap_carries_trajectory():
    model = NeverMeetingGibbs()
    rows, cs = _iid_provider(13, 0, 1)
    with pytest.raises(UncoupledAtCap) as exc:
        run_coupled_chain(model, k=1, m=5, rows=rows, streams=cs, cap=20)
    traj = exc.value.trajectory
    assert math.isinf(traj.tau)
    assert traj.x_updates == 20
    assert traj.f_x.shape[0] == 21


def test_run_validation():
    model = StatelessGibbs()
    rows, cs = _iid_provider(14, 0, 2)
    with pytest.raises(ValueError):
        run_coupled_chain(model, k=5, m=3, rows=rows, streams=cs)
    with pytest.raises(ValueError):
        run_coupled_chain(model, k=1, m=30, rows=rows, streams=cs, cap=10)


def test_trajectory_cost_branches():
    assert trajectory_cost(1, 10) == 10
    assert trajectory_cost(12, 10) == 2 * 11 + 1
    with pytest.raises(ValueError):
        trajectory_cost(math.inf, 10)


def test_dump_trajectory_csv(tmp_path):
    traj = CoupledTrajectory(
        f_x=np.array([[1.0], [2.0], [3.0]]),
        f_y=np.array([[5.0], [3.0]]),
        tau=2,
        k=1,
        m=2,
        x_updates=2,
        y_updates=1,
    )
    path = tmp_path / "traj.csv"
    dump_trajectory(traj, path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "t,fx_0,fy_prev_0,met"
    assert lines[1] == "0,1.0,,0"
    assert lines[2] == "1,2.0,5.0,0"
    assert lines[3] == "2,3.0,3.0,1"

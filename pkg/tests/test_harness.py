"""Harness tests: config parsing, pilots, runs, scans, sweeps, baselines."""
import json
import math
from dataclasses import replace

import numpy as np
import pytest

from ubmcqmc.harness import (
    BASELINE_METHODS,
    METHODS,
    UNBIASED_METHODS,
    ConfigError,
    ExperimentConfig,
    ExperimentError,
    build_model,
    burnin_sweep,
    config_from_echo,
    efficiency_loss,
    load_config,
    mcmc_baseline,
    pilot_run,
    rate_scan,
    rrf,
    run_experiment,
    validate_config,
    write_chains_csv,
    write_json,
    write_rate_csv,
    write_sweep_csv,
)

# rho = 0.5 toy chain: per-coordinate lag-j autocorrelation is rho^(2j), so
# V_inf = (1 + rho^2) / (1 - rho^2) = 5/3 per coordinate, 10/3 in total.
TOY_V_INF_TOTAL = 10.0 / 3.0


@pytest.fixture(scope="module")
def toy_bundle():
    return build_model(ExperimentConfig(dataset="toy"))


@pytest.fixture(scope="module")
def boston_bundle():
    return build_model(ExperimentConfig(dataset="boston", method="ubMCMC"))


# ---------------------------------------------------------------------------
# config parsing


def test_load_config_reads_all_sections(tmp_path):
    path = tmp_path / "exp.ini"
    path.write_text(
        "[experiment]\n"
        "dataset = boston\n"
        "method = ubMCQMC-H\n"
        "n = 1024\n"
        "k = 8\n"
        "m = 1040\n"
        "r = 100\n"
        "case = 1\n"
        "approach = 2\n"
        "seed = 99\n"
        "jobs = 2\n"
        "cap = 5000   # inline comment\n"
        "[data]\n"
        "standin_seed = 7\n"
        "[pilot]\n"
        "count = 500\n"
        "[rate-scan]\n"
        "ns = 1024, 4096 16384\n"
        "[burnin-sweep]\n"
        "ks = 1 8\n"
        "cases = 2\n"
        "outer = 5\n"
        "chains = 40\n"
        "[baseline]\n"
        "burnin = 200\n"
        "length = 2048\n"
        "chains = 300\n"
    )
    cfg = load_config(path)
    assert cfg.dataset == "boston" and cfg.method == "ubMCQMC-H"
    assert (cfg.n_points, cfg.k, cfg.m, cfg.r_chains) == (1024, 8, 1040, 100)
    assert (cfg.case, cfg.approach, cfg.seed, cfg.jobs, cfg.cap) == (1, 2, 99, 2, 5000)
    assert cfg.data_path is None and cfg.standin_seed == 7
    assert cfg.pilot_count == 500
    assert cfg.rate_ns == (1024, 4096, 16384)
    assert cfg.sweep_ks == (1, 8) and cfg.sweep_cases == (2,)
    assert cfg.sweep_outer == 5 and cfg.sweep_chains == 40
    assert (cfg.baseline_burnin, cfg.baseline_length, cfg.baseline_chains) == (200, 2048, 300)


def test_load_config_defaults(tmp_path):
    path = tmp_path / "min.ini"
    path.write_text("[experiment]\ndataset = toy\nmethod = ubMCMC\nn = 32\n")
    cfg = load_config(path)
    assert cfg.k == "auto" and cfg.m is None
    assert cfg.case == 2  # iid burn-in then core matrix is the default policy
    assert cfg.baseline_length is None


@pytest.mark.parametrize(
    "body",
    [
        "[experiment]\nmethod = nonsense\n",
        "[experiment]\ndataset = titanic\n",
        "[experiment]\nmethod = ubMCQMC-H\nn = 100\n",  # not a power of two
        "[experiment]\nmethod = ubMCQMC-H\nn = 16\n",  # no shipped order-4 params
        "[experiment]\nn = many\n",
        "[experiment]\nk = sometimes\n",
        "[experiment]\nr = 1\n",
        "[experiment]\ncase = 3\n",
        "[experiment]\napproach = 9\n",
        "[experiment]\nseed = -1\n",
        "not an ini file at all",
    ],
)
def test_load_config_rejects(tmp_path, body):
    path = tmp_path / "bad.ini"
    path.write_text(body)
    with pytest.raises(ConfigError):
        load_config(path)


def test_load_config_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "nope.ini")


def test_validate_config_direct():
    validate_config(ExperimentConfig())
    with pytest.raises(ConfigError):
        validate_config(ExperimentConfig(method="MCMC", n_points=0))
    with pytest.raises(ConfigError):
        validate_config(ExperimentConfig(k=0))
    with pytest.raises(ConfigError):
        validate_config(ExperimentConfig(jobs=0))
    assert set(UNBIASED_METHODS) | set(BASELINE_METHODS) == set(METHODS)


# ---------------------------------------------------------------------------
# model construction


def test_build_model_bundles():
    toy = build_model(ExperimentConfig(dataset="toy"))
    assert toy.kind == "toy" and toy.checksum == ""
    boston = build_model(ExperimentConfig(dataset="boston", method="ubMCMC"))
    assert boston.kind == "linear"
    assert len(boston.checksum) == 64
    assert boston.source == "standin:seed=0"
    vaso = build_model(ExperimentConfig(dataset="vaso", method="ubMCMC"))
    assert vaso.kind == "probit"
    pima = build_model(ExperimentConfig(dataset="pima", method="ubMCMC", approach=1))
    assert pima.kind == "logistic"


def test_build_model_missing_file_is_config_error(tmp_path):
    cfg = ExperimentConfig(dataset="boston", data_path=str(tmp_path / "no.data"))
    with pytest.raises(ConfigError, match="download"):
        build_model(cfg)


# ---------------------------------------------------------------------------
# pilot runs


def test_pilot_k_stable_across_seeds(toy_bundle):
    ks = []
    for seed in (1, 2):
        cfg = ExperimentConfig(dataset="toy", method="ubMCMC", k="auto", seed=seed)
        ks.append(pilot_run(cfg, bundle=toy_bundle).k)
    # one 99%-quantile order-statistic step moves k by at most 2 after doubling
    assert abs(ks[0] - ks[1]) <= 2


def test_pilot_deterministic_and_parallel_sound(toy_bundle):
    cfg = ExperimentConfig(dataset="toy", method="ubMCMC", k="auto", seed=4, pilot_count=150)
    a = pilot_run(cfg, bundle=toy_bundle)
    b = pilot_run(replace(cfg, jobs=2), bundle=toy_bundle)
    assert a.k == b.k and a.taus == b.taus
    assert a.count == 150 and a.uncoupled == 0
    assert sum(a.histogram().values()) == a.count - a.uncoupled
    assert min(a.taus) >= 2


def test_pilot_count_floor(toy_bundle):
    cfg = ExperimentConfig(dataset="toy", method="ubMCMC", pilot_count=50)
    with pytest.raises(ConfigError, match="at least 100"):
        pilot_run(cfg, bundle=toy_bundle)


def test_pilot_uncoupled_overflow_is_experiment_error(toy_bundle):
    cfg = ExperimentConfig(dataset="toy", method="ubMCMC", seed=8, pilot_count=120, cap=2)
    with pytest.raises(ExperimentError, match="failed to couple"):
        pilot_run(cfg, bundle=toy_bundle)


# ---------------------------------------------------------------------------
# run_experiment


def test_run_is_deterministic_and_scheduling_free(toy_bundle):
    cfg = ExperimentConfig(
        dataset="toy", method="ubMCQMC-H", n_points=64, k=8, r_chains=40, seed=11
    )
    a = run_experiment(cfg, bundle=toy_bundle)
    b = run_experiment(replace(cfg, jobs=2), bundle=toy_bundle)
    assert np.array_equal(a.estimates, b.estimates)
    assert a.taus == b.taus and a.costs == b.costs
    assert a.pooled.sigma_tot == b.pooled.sigma_tot
    assert a.identity == b.identity
    # echoes differ only in the jobs knob, which does not touch chain seeding
    assert {**a.echo, "jobs": None} == {**b.echo, "jobs": None}


def test_chain_offset_moves_to_fresh_randomness(toy_bundle):
    cfg = ExperimentConfig(dataset="toy", method="ubMCMC", n_points=16, k=4, r_chains=20, seed=2)
    a = run_experiment(cfg, bundle=toy_bundle)
    b = run_experiment(cfg, bundle=toy_bundle, chain_offset=20)
    assert a.estimates.shape == b.estimates.shape
    assert not np.array_equal(a.estimates, b.estimates)


def test_echo_reruns_bitwise(toy_bundle):
    cfg = ExperimentConfig(
        dataset="toy", method="ubMCQMC-L", n_points=32, k="auto", r_chains=30,
        seed=15, pilot_count=120,
    )
    first = run_experiment(cfg, bundle=toy_bundle)
    assert first.echo["k_source"] == "pilot"
    again = run_experiment(config_from_echo(first.echo))
    assert np.array_equal(first.estimates, again.estimates)
    assert first.pooled.sigma_tot == again.pooled.sigma_tot
    assert again.echo["k_source"] == "config"


def test_single_point_methods_reduce_to_single_state(toy_bundle):
    base = ExperimentConfig(dataset="toy", method="ubMCMC", n_points=1, k=6, r_chains=400, seed=17)
    iid = run_experiment(base, bundle=toy_bundle)
    liao = run_experiment(replace(base, method="ubMCQMC-L"), bundle=toy_bundle)
    assert iid.identity["m"] == 6  # m = k + N - 1 collapses to k
    diff = np.abs(iid.pooled.mean - liao.pooled.mean)
    assert (diff <= 3 * np.hypot(iid.pooled.sigma, liao.pooled.sigma)).all()


def test_qmc_beats_iid_at_the_same_budget(toy_bundle):
    cfg = ExperimentConfig(dataset="toy", method="ubMCMC", n_points=256, k=8, r_chains=80, seed=21)
    iid = run_experiment(cfg, bundle=toy_bundle)
    wcud = run_experiment(replace(cfg, method="ubMCQMC-L"), bundle=toy_bundle)
    assert wcud.pooled.sigma_tot < iid.pooled.sigma_tot
    assert rrf(iid, wcud) > 2.0


def test_unbiased_means_hit_truth(toy_bundle):
    cfg = ExperimentConfig(
        dataset="toy", method="ubMCQMC-H", n_points=32, k=10, r_chains=200, seed=7
    )
    rep = run_experiment(cfg, bundle=toy_bundle)
    truth = toy_bundle.model.posterior_mean
    assert (np.abs(rep.pooled.mean - truth) <= 4 * rep.pooled.sigma).all()


def test_case_policies_coincide_at_k_equal_one(toy_bundle):
    cfg = ExperimentConfig(
        dataset="toy", method="ubMCQMC-H", n_points=32, k=1, r_chains=25, seed=33, case=1
    )
    one = run_experiment(cfg, bundle=toy_bundle)
    two = run_experiment(replace(cfg, case=2), bundle=toy_bundle)
    assert np.array_equal(one.estimates, two.estimates)


def test_failures_within_tolerance_are_reported(toy_bundle):
    cfg = ExperimentConfig(
        dataset="toy", method="ubMCMC", n_points=1, k=5, r_chains=300, seed=47, cap=5
    )
    rep = run_experiment(cfg, bundle=toy_bundle)
    assert rep.failed_chains == 3
    assert rep.pooled.r == 297
    assert all("cap" in message for _, message in rep.failures)


def test_failures_beyond_tolerance_abort(toy_bundle):
    cfg = ExperimentConfig(
        dataset="toy", method="ubMCMC", n_points=1, k=4, r_chains=200, seed=3, cap=4
    )
    with pytest.raises(ExperimentError, match="chains failed"):
        run_experiment(cfg, bundle=toy_bundle)


def test_method_families_are_enforced(toy_bundle):
    with pytest.raises(ConfigError, match="mcmc_baseline"):
        run_experiment(ExperimentConfig(dataset="toy", method="MCMC"), bundle=toy_bundle)
    with pytest.raises(ConfigError, match="run_experiment"):
        mcmc_baseline(ExperimentConfig(dataset="toy", method="ubMCMC"), bundle=toy_bundle)


# ---------------------------------------------------------------------------
# rrf and loss of efficiency


def test_rrf_requires_matching_runs(toy_bundle):
    cfg = ExperimentConfig(dataset="toy", method="ubMCMC", n_points=32, k=4, r_chains=20, seed=5)
    a = run_experiment(cfg, bundle=toy_bundle)
    b = run_experiment(replace(cfg, method="ubMCQMC-H"), bundle=toy_bundle)
    assert rrf(a, b) == a.pooled.sigma_tot / b.pooled.sigma_tot
    assert rrf(a.to_json_dict(), b.to_json_dict()) == rrf(a, b)
    c = run_experiment(replace(cfg, k=6), bundle=toy_bundle)
    with pytest.raises(ValueError, match="k"):
        rrf(a, c)


def test_run_experiment_fills_rrf_and_loss(toy_bundle):
    cfg = ExperimentConfig(dataset="toy", method="ubMCMC", n_points=32, k=4, r_chains=30, seed=5)
    base = run_experiment(cfg, bundle=toy_bundle)
    rep = run_experiment(
        replace(cfg, method="ubMCQMC-H"),
        bundle=toy_bundle,
        baseline=base,
        v_inf_total=TOY_V_INF_TOTAL,
    )
    assert rep.rrf == pytest.approx(rrf(base, rep))
    assert rep.loss == pytest.approx(efficiency_loss(rep, TOY_V_INF_TOTAL))


def test_toy_loss_of_efficiency_near_parity(toy_bundle):
    cfg = ExperimentConfig(
        dataset="toy", method="ubMCMC", n_points=120, k=10, r_chains=1000, seed=29
    )
    rep = run_experiment(cfg, bundle=toy_bundle)
    loss = efficiency_loss(rep, TOY_V_INF_TOTAL)
    assert 0.8 <= loss <= 1.2
    assert rep.expected_cost >= rep.identity["m"]


# ---------------------------------------------------------------------------
# rate scans


def test_rate_scan_slopes_toy(toy_bundle):
    ns = (64, 256, 1024)
    iid = rate_scan(
        ExperimentConfig(dataset="toy", method="ubMCMC", k=4, r_chains=50, seed=5),
        ns=ns,
        bundle=toy_bundle,
    )
    assert -0.6 <= iid.slope <= -0.4
    wcud = rate_scan(
        ExperimentConfig(dataset="toy", method="ubMCQMC-L", k=4, r_chains=50, seed=5),
        ns=ns,
        bundle=toy_bundle,
    )
    assert wcud.slope <= -0.7
    assert wcud.sigma_tots[-1] < iid.sigma_tots[-1]


def test_rate_scan_shares_one_pilot_k(toy_bundle):
    cfg = ExperimentConfig(
        dataset="toy", method="ubMCMC", k="auto", r_chains=20, seed=6,
        pilot_count=120, rate_ns=(16, 32, 64),
    )
    scan = rate_scan(cfg, bundle=toy_bundle)
    assert len({rep.identity["k"] for rep in scan.reports}) == 1
    assert scan.k == scan.reports[0].identity["k"]
    assert scan.ns == (16, 32, 64)


def test_rate_scan_needs_three_sizes(toy_bundle):
    cfg = ExperimentConfig(dataset="toy", method="ubMCMC", k=4, r_chains=20)
    with pytest.raises(ConfigError, match="three"):
        rate_scan(cfg, ns=(16, 64), bundle=toy_bundle)
    with pytest.raises(ConfigError, match="distinct"):
        rate_scan(cfg, ns=(16, 16, 64), bundle=toy_bundle)


# ---------------------------------------------------------------------------
# burn-in sweep


def test_sweep_structure_and_definitions(toy_bundle):
    cfg = ExperimentConfig(
        dataset="toy", method="ubMCQMC-H", n_points=64, seed=9,
        sweep_ks=(1, 8), sweep_cases=(1, 2), sweep_outer=3, sweep_chains=30,
    )
    sweep = burnin_sweep(cfg, bundle=toy_bundle)
    assert len(sweep.cells) == 2 + 2 * 2  # ubMCMC per k, then method per (case, k)
    baseline_cells = [c for c in sweep.cells if c.method == "ubMCMC"]
    assert all(c.rrf == 1.0 and c.case is None for c in baseline_cells)

    # case policies agree at k = 1 by construction
    k1 = {c.case: c for c in sweep.cells if c.method != "ubMCMC" and c.k == 1}
    assert k1[1].mean_rmse == k1[2].mean_rmse

    # burn-in past the meeting quantile helps the iid-burn-in policy
    case2 = {c.k: c for c in sweep.cells if c.case == 2}
    assert case2[8].rrf >= case2[1].rrf

    # cv and rrf definitions, recomputed from the pooled runs of one cell
    rmses = []
    for outer in range(3):
        sub = replace(cfg, method="ubMCQMC-H", case=2, k=8, m=None, r_chains=30)
        rep = run_experiment(sub, bundle=toy_bundle, chain_offset=outer * 30)
        rmses.append(rep.pooled.sigma_tot)
    rmses = np.asarray(rmses)
    cell = case2[8]
    assert cell.mean_rmse == pytest.approx(rmses.mean())
    assert cell.cv == pytest.approx(rmses.std(ddof=1) / rmses.mean())
    base8 = next(c for c in baseline_cells if c.k == 8)
    assert cell.rrf == pytest.approx(base8.mean_rmse / cell.mean_rmse)


def test_sweep_validation(toy_bundle):
    good = ExperimentConfig(dataset="toy", method="ubMCQMC-H", sweep_outer=1)
    with pytest.raises(ConfigError, match="outer"):
        burnin_sweep(good, ks=(1,), bundle=toy_bundle)
    with pytest.raises(ConfigError):
        burnin_sweep(
            ExperimentConfig(dataset="toy", method="MCMC"), ks=(1,), bundle=toy_bundle
        )
    with pytest.raises(ConfigError, match="cases"):
        burnin_sweep(
            ExperimentConfig(dataset="toy", method="ubMCQMC-H", sweep_outer=2),
            ks=(1,),
            cases=(3,),
            bundle=toy_bundle,
        )


# ---------------------------------------------------------------------------
# baselines


def test_toy_v_inf_matches_autocorrelation_formula(toy_bundle):
    cfg = ExperimentConfig(
        dataset="toy", method="MCMC", seed=31,
        baseline_burnin=50, baseline_length=1000, baseline_chains=200,
    )
    rep = mcmc_baseline(cfg, bundle=toy_bundle)
    assert abs(rep.v_inf_total - TOY_V_INF_TOTAL) <= 1.0
    assert np.all(rep.v_inf > 1.0)  # autocorrelation lifts V_inf above the stationary variance
    assert rep.v_inf_total == pytest.approx(rep.v_inf.sum())
    truth = toy_bundle.model.posterior_mean
    assert np.abs(rep.mean - truth).max() < 0.05


def test_linear_fast_path_agrees_with_scalar_driver(boston_bundle):
    shared = dict(dataset="boston", seed=13, baseline_burnin=100,
                  baseline_length=512, baseline_chains=50)
    fast = mcmc_baseline(ExperimentConfig(method="MCMC", **shared), bundle=boston_bundle)
    scalar = mcmc_baseline(ExperimentConfig(method="MCQMC-H", **shared), bundle=boston_bundle)
    assert np.abs(fast.mean - scalar.mean).max() < 0.05
    # the QMC-driven averages concentrate harder than the iid-driven ones
    assert scalar.v_inf_total < fast.v_inf_total


def test_baseline_determinism_across_jobs(boston_bundle):
    cfg = ExperimentConfig(
        dataset="boston", method="MCMC", seed=13,
        baseline_burnin=50, baseline_length=300, baseline_chains=300,
    )
    a = mcmc_baseline(cfg, bundle=boston_bundle)
    b = mcmc_baseline(replace(cfg, jobs=2), bundle=boston_bundle)
    assert np.array_equal(a.mean, b.mean)
    assert a.v_inf_total == b.v_inf_total


def test_baseline_validation(toy_bundle):
    with pytest.raises(ConfigError, match="two chains"):
        mcmc_baseline(
            ExperimentConfig(dataset="toy", method="MCMC", baseline_chains=1),
            bundle=toy_bundle,
        )
    with pytest.raises(ConfigError, match="power of two"):
        mcmc_baseline(
            ExperimentConfig(
                dataset="toy", method="MCQMC-H", baseline_length=100, baseline_chains=10
            ),
            bundle=toy_bundle,
        )


# ---------------------------------------------------------------------------
# emission


def test_report_files_round_trip(tmp_path, toy_bundle):
    cfg = ExperimentConfig(dataset="toy", method="ubMCQMC-H", n_points=32, k=4, r_chains=20, seed=5)
    rep = run_experiment(cfg, bundle=toy_bundle)
    jpath = write_json(rep.to_json_dict(), tmp_path / "report.json")
    payload = json.loads(jpath.read_text())
    assert payload["kind"] == "experiment"
    assert payload["pooled"]["sigma_tot"] == rep.pooled.sigma_tot
    assert config_from_echo(payload["echo"]) == config_from_echo(rep.echo)

    cpath = write_chains_csv(rep, tmp_path / "chains.csv")
    lines = cpath.read_text().splitlines()
    assert len(lines) == 1 + 20
    first = lines[1].split(",")
    assert int(first[1]) == rep.taus[0]
    assert float(first[3]) == rep.estimates[0, 0]

    scan = rate_scan(
        replace(cfg, method="ubMCMC"), ns=(8, 16, 32), bundle=toy_bundle
    )
    rpath = write_rate_csv(scan, tmp_path / "rate.csv")
    rows = rpath.read_text().splitlines()
    assert rows[0] == "x,y,series"
    assert len(rows) == 4 and rows[1].endswith("ubMCMC")

    sweep = burnin_sweep(
        replace(cfg, method="ubMCQMC-H", sweep_outer=2, sweep_chains=10),
        ks=(1,),
        cases=(2,),
        bundle=toy_bundle,
    )
    spath = write_sweep_csv(sweep, tmp_path / "sweep.csv")
    srows = spath.read_text().splitlines()
    assert srows[0] == "method,case,k,mean_rmse,cv,rrf"
    assert len(srows) == 1 + len(sweep.cells)


def test_pilot_report_serializes(tmp_path, toy_bundle):
    cfg = ExperimentConfig(dataset="toy", method="ubMCMC", seed=4, pilot_count=120)
    rep = pilot_run(cfg, bundle=toy_bundle)
    payload = json.loads(write_json(rep.to_json_dict(), tmp_path / "pilot.json").read_text())
    assert payload["kind"] == "pilot" and payload["k"] == rep.k
    assert sum(payload["tau_histogram"].values()) == payload["count"] - payload["uncoupled"]


def test_baseline_report_serializes(tmp_path, toy_bundle):
    cfg = ExperimentConfig(
        dataset="toy", method="MCMC", baseline_burnin=10, baseline_length=50,
        baseline_chains=20, seed=1,
    )
    rep = mcmc_baseline(cfg, bundle=toy_bundle)
    payload = json.loads(write_json(rep.to_json_dict(), tmp_path / "baseline.json").read_text())
    assert payload["kind"] == "baseline"
    assert payload["v_inf_total"] == rep.v_inf_total
    assert len(payload["mean"]) == 2

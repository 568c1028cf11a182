"""Config-driven experiment harness: pilots, coupled runs, scans, reports.

Every chain derives its randomness from (master seed, chain index, role)
streams, so a report is a pure function of its configuration: results never
depend on scheduling or on the parallelism degree. Pilot and baseline chains
draw from disjoint chain-index blocks and therefore never reuse randomness
of the experiment chains they inform. Wall-clock fields are the single
exception to the determinism contract.
"""
from __future__ import annotations

import configparser
import csv
import json
import math
import multiprocessing
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .coupling import DEFAULT_CAP, UncoupledAtCap, run_coupled_chain, run_single_chain
from .datasets import BENCHMARKS, load_dataset, synthetic_benchmark
from .driving import digital_shift, harase_matrix, liao_matrix, make_row_provider
from .estimators import (
    PooledReport,
    asymptotic_variance,
    estimate_from_trajectory,
    expected_cost,
    fit_rate,
    loss_of_efficiency,
    pool,
)
from .lfsr import params_for_order
from .models import (
    LinearModel,
    LogisticPgModel,
    ProbitModel,
    ToyConjugateNormal,
    select_k,
)
from .polya_gamma import APPROACH_1, APPROACH_2, APPROACH_3
from .streams import ChainStreams, Role, stream

UNBIASED_METHODS = ("ubMCMC", "ubMCQMC-L", "ubMCQMC-H")
BASELINE_METHODS = ("MCMC", "MCQMC-H")
METHODS = UNBIASED_METHODS + BASELINE_METHODS

_APPROACHES = {1: APPROACH_1, 2: APPROACH_2, 3: APPROACH_3}

# Disjoint chain-index blocks for pilot and baseline runs.
_PILOT_BASE = 1 << 32
_BASELINE_BASE = 1 << 33

_BATCH_CHAINS = 250  # fixed micro-batch width of the linear fast path
_CHUNK_STEPS = 1024  # driving rows drawn per chunk in the fast path


class ConfigError(ValueError):
    """Invalid configuration; the CLI maps this to exit code 3."""


class ExperimentError(RuntimeError):
    """Experiment-level failure; the CLI maps this to exit code 2."""


# ---------------------------------------------------------------------------
# Configuration


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a run depends on. Reports are pure functions of this."""

    dataset: str = "toy"
    method: str = "ubMCQMC-H"
    n_points: int = 1024
    k: int | str = "auto"
    m: int | None = None
    r_chains: int = 100
    case: int = 2
    approach: int = 3
    seed: int = 1
    jobs: int = 1
    cap: int = DEFAULT_CAP
    data_path: str | None = None
    standin_seed: int = 0
    pilot_count: int = 1000
    rate_ns: tuple[int, ...] = ()
    sweep_ks: tuple[int, ...] = ()
    sweep_cases: tuple[int, ...] = (1, 2)
    sweep_outer: int = 25
    sweep_chains: int = 100
    baseline_burnin: int = 1000
    baseline_length: int | None = None
    baseline_chains: int = 100


def validate_config(cfg: ExperimentConfig) -> None:
    if cfg.method not in METHODS:
        raise ConfigError(f"unknown method {cfg.method!r}; expected one of {METHODS}")
    if cfg.dataset != "toy" and cfg.dataset not in BENCHMARKS:
        known = ("toy", *sorted(BENCHMARKS))
        raise ConfigError(f"unknown dataset {cfg.dataset!r}; expected one of {known}")
    if cfg.n_points < 1:
        raise ConfigError("n must be a positive integer")
    if cfg.method.endswith("-H"):
        _harase_order(cfg.n_points)
    if isinstance(cfg.k, str):
        if cfg.k != "auto":
            raise ConfigError(f"k must be a positive integer or 'auto', got {cfg.k!r}")
    elif int(cfg.k) < 1:
        raise ConfigError("k >= 1 required")
    if cfg.m is not None and cfg.m < 1:
        raise ConfigError("m >= 1 required")
    if cfg.r_chains < 2:
        raise ConfigError("r >= 2 chains required to pool an error estimate")
    if cfg.case not in (1, 2):
        raise ConfigError("case must be 1 (core matrix throughout) or 2 (iid burn-in)")
    if cfg.approach not in _APPROACHES:
        raise ConfigError("approach must be 1, 2, or 3")
    if not 0 <= cfg.seed < 2**64:
        raise ConfigError("seed must fit in an unsigned 64-bit integer")
    if cfg.jobs < 1:
        raise ConfigError("jobs >= 1 required")
    if cfg.cap < 1:
        raise ConfigError("cap >= 1 required")


def _section_get(parser, section, key, default):
    if parser.has_option(section, key):
        return parser.get(section, key).strip()
    return default


def _to_int(raw, key):
    try:
        return int(str(raw).strip())
    except (TypeError, ValueError):
        raise ConfigError(f"{key} must be an integer, got {raw!r}") from None


def _to_int_list(raw, key):
    parts = str(raw).replace(",", " ").split()
    if not parts:
        raise ConfigError(f"{key} must list at least one integer")
    return tuple(_to_int(p, key) for p in parts)


def load_config(path) -> ExperimentConfig:
    """Parse a sectioned key=value config file into an ExperimentConfig."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text, source=str(path))
    except configparser.Error as exc:
        raise ConfigError(f"malformed config file {path}: {exc}") from exc

    defaults = ExperimentConfig()
    g = lambda key, default: _section_get(parser, "experiment", key, default)  # noqa: E731
    k_raw = str(g("k", defaults.k)).strip()
    kw = dict(
        dataset=str(g("dataset", defaults.dataset)),
        method=str(g("method", defaults.method)),
        n_points=_to_int(g("n", defaults.n_points), "n"),
        k=k_raw if k_raw == "auto" else _to_int(k_raw, "k"),
        r_chains=_to_int(g("r", defaults.r_chains), "r"),
        case=_to_int(g("case", defaults.case), "case"),
        approach=_to_int(g("approach", defaults.approach), "approach"),
        seed=_to_int(g("seed", defaults.seed), "seed"),
        jobs=_to_int(g("jobs", defaults.jobs), "jobs"),
        cap=_to_int(g("cap", defaults.cap), "cap"),
    )
    m_raw = g("m", "")
    kw["m"] = _to_int(m_raw, "m") if m_raw else None

    data_path = _section_get(parser, "data", "path", "")
    kw["data_path"] = data_path or None
    kw["standin_seed"] = _to_int(
        _section_get(parser, "data", "standin_seed", defaults.standin_seed), "standin_seed"
    )
    kw["pilot_count"] = _to_int(
        _section_get(parser, "pilot", "count", defaults.pilot_count), "pilot.count"
    )
    ns_raw = _section_get(parser, "rate-scan", "ns", "")
    kw["rate_ns"] = _to_int_list(ns_raw, "rate-scan.ns") if ns_raw else ()
    ks_raw = _section_get(parser, "burnin-sweep", "ks", "")
    kw["sweep_ks"] = _to_int_list(ks_raw, "burnin-sweep.ks") if ks_raw else ()
    cases_raw = _section_get(parser, "burnin-sweep", "cases", "")
    kw["sweep_cases"] = (
        _to_int_list(cases_raw, "burnin-sweep.cases") if cases_raw else defaults.sweep_cases
    )
    kw["sweep_outer"] = _to_int(
        _section_get(parser, "burnin-sweep", "outer", defaults.sweep_outer), "burnin-sweep.outer"
    )
    kw["sweep_chains"] = _to_int(
        _section_get(parser, "burnin-sweep", "chains", defaults.sweep_chains),
        "burnin-sweep.chains",
    )
    kw["baseline_burnin"] = _to_int(
        _section_get(parser, "baseline", "burnin", defaults.baseline_burnin), "baseline.burnin"
    )
    length_raw = _section_get(parser, "baseline", "length", "")
    kw["baseline_length"] = _to_int(length_raw, "baseline.length") if length_raw else None
    kw["baseline_chains"] = _to_int(
        _section_get(parser, "baseline", "chains", defaults.baseline_chains), "baseline.chains"
    )

    cfg = ExperimentConfig(**kw)
    validate_config(cfg)
    return cfg


def config_from_echo(echo: dict) -> ExperimentConfig:
    """Rebuild the resolved config a report echoes; reruns are bitwise equal."""
    return ExperimentConfig(
        dataset=str(echo["dataset"]),
        method=str(echo["method"]),
        n_points=int(echo["n"]),
        k=int(echo["k"]),
        m=int(echo["m"]),
        r_chains=int(echo["r"]),
        case=int(echo["case"]),
        approach=int(echo["approach"]),
        seed=int(echo["seed"]),
        jobs=int(echo["jobs"]),
        cap=int(echo["cap"]),
        data_path=str(echo["data_path"]) or None,
        standin_seed=int(echo["standin_seed"]),
        pilot_count=int(echo["pilot_count"]),
    )


# ---------------------------------------------------------------------------
# Model construction


@dataclass(frozen=True)
class ModelBundle:
    model: object
    kind: str  # 'toy' | 'linear' | 'probit' | 'logistic'
    dataset: str
    checksum: str
    source: str
    pi0: str


def build_model(cfg: ExperimentConfig) -> ModelBundle:
    """Resolve the dataset reference and wrap the matching Gibbs model."""
    validate_config(cfg)
    if cfg.dataset == "toy":
        return ModelBundle(
            ToyConjugateNormal(), "toy", "toy", "", "builtin", "iid N(0, 4 I) start"
        )
    spec = BENCHMARKS[cfg.dataset]
    try:
        if cfg.data_path:
            data = load_dataset(spec, cfg.data_path)
            source = f"file:{cfg.data_path}"
        else:
            data = synthetic_benchmark(cfg.dataset, seed=cfg.standin_seed)
            source = f"standin:seed={cfg.standin_seed}"
    except (OSError, ValueError) as exc:
        raise ConfigError(f"dataset {cfg.dataset}: {exc}") from exc
    if spec.model == "linear":
        model = LinearModel(data.design, data.response)
        pi0 = "prior draw (normal / inverse-gamma)"
    elif spec.model == "probit":
        model = ProbitModel(data.design, data.response)
        pi0 = "beta = 0, latents resampled once"
    else:
        model = LogisticPgModel(data.design, data.response, approach=_APPROACHES[cfg.approach])
        pi0 = "beta = 0, PG variables resampled once"
    return ModelBundle(model, spec.model, cfg.dataset, data.checksum, source, pi0)


# ---------------------------------------------------------------------------
# Driving-sequence construction per chain


def _harase_order(n_points: int) -> int:
    n = n_points.bit_length() - 1
    if n_points <= 0 or (1 << n) != n_points:
        raise ConfigError(f"N = {n_points} is not a power of two")
    try:
        params_for_order(n)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return n


def _harase_base(n_points: int, d: int):
    return harase_matrix(params_for_order(_harase_order(n_points)), d)


def _chain_core(method: str, n_points: int, d: int, base, rng):
    """Per-chain randomized core matrix; None selects fully-iid driving.

    Both core constructions receive a fresh digital shift so that every
    driving row is marginally uniform, which the unbiasedness argument
    requires of randomized core matrices.
    """
    if method in ("ubMCMC", "MCMC"):
        return None
    if method.endswith("-L"):
        return digital_shift(liao_matrix(d, n_points, rng), rng.random(d))
    return digital_shift(base, rng.random(d))


# ---------------------------------------------------------------------------
# Deterministic parallel map

_WORKER_FN = None


def _invoke_worker(index):
    return _WORKER_FN(index)


def _map_indices(fn, indices, jobs):
    """Map fn over indices; output order and values are independent of jobs."""
    indices = list(indices)
    if jobs <= 1 or len(indices) <= 1:
        return [fn(i) for i in indices]
    global _WORKER_FN
    _WORKER_FN = fn
    try:
        ctx = multiprocessing.get_context("fork")
        chunk = max(1, math.ceil(len(indices) / (4 * jobs)))
        with ProcessPoolExecutor(max_workers=jobs, mp_context=ctx) as ex:
            return list(ex.map(_invoke_worker, indices, chunksize=chunk))
    finally:
        _WORKER_FN = None


# ---------------------------------------------------------------------------
# Pilot runs and burn-in selection


@dataclass(frozen=True)
class PilotReport:
    """Meeting-time sample, the k it selects, and the uncoupled count."""

    k: int
    taus: tuple[int, ...]
    count: int
    uncoupled: int
    seconds_per_chain: float
    echo: dict

    def histogram(self) -> dict:
        values, counts = np.unique(np.asarray(self.taus, dtype=np.int64), return_counts=True)
        return {int(v): int(c) for v, c in zip(values, counts)}

    def to_json_dict(self) -> dict:
        return {
            "kind": "pilot",
            "k": self.k,
            "count": self.count,
            "uncoupled": self.uncoupled,
            "tau_histogram": {str(v): c for v, c in self.histogram().items()},
            "taus": list(self.taus),
            "seconds_per_chain": self.seconds_per_chain,
            "echo": self.echo,
        }


def _pilot_chain(model, cfg, chain_index):
    start = time.perf_counter()
    streams = ChainStreams.for_chain(cfg.seed, chain_index)
    rows = make_row_provider(
        None, 1, streams.burnin, streams.overflow, d=model.n_driving_cols
    )
    try:
        traj = run_coupled_chain(model, 1, 1, rows, streams, cap=cfg.cap)
        tau = float(traj.tau)
    except UncoupledAtCap:
        tau = math.inf
    return tau, time.perf_counter() - start


def pilot_run(cfg: ExperimentConfig, count: int | None = None, bundle: ModelBundle | None = None) -> PilotReport:
    """Meeting times of `count` iid-driven coupled chains and the selected k.

    k doubles the 99% sample quantile of the coupled meeting times. Chains
    that hit the cap are reported as uncoupled; more than 10% uncoupled (or
    too few coupled chains for the quantile) is an experiment error.
    """
    validate_config(cfg)
    count = cfg.pilot_count if count is None else int(count)
    if count < 100:
        raise ConfigError("pilot count must be at least 100 for a stable 99% quantile")
    bundle = bundle or build_model(cfg)
    model = bundle.model

    def worker(i):
        return _pilot_chain(model, cfg, _PILOT_BASE + i)

    outs = _map_indices(worker, range(count), cfg.jobs)
    finite = [int(t) for t, _ in outs if math.isfinite(t)]
    uncoupled = count - len(finite)
    if uncoupled > 0.10 * count:
        raise ExperimentError(
            f"{uncoupled}/{count} pilot chains failed to couple within cap={cfg.cap}"
        )
    try:
        k = select_k(finite)
    except ValueError as exc:
        raise ExperimentError(f"pilot could not select k: {exc}") from exc
    seconds = float(np.mean([s for _, s in outs]))
    echo = _config_echo(cfg, k, "pilot", k + cfg.n_points - 1, bundle)
    return PilotReport(k, tuple(finite), count, uncoupled, seconds, echo)


def _resolve_k(cfg: ExperimentConfig, bundle: ModelBundle) -> tuple[int, str]:
    if isinstance(cfg.k, str):
        return pilot_run(cfg, bundle=bundle).k, "pilot"
    return int(cfg.k), "config"


def _resolve_m(cfg: ExperimentConfig, k: int) -> int:
    m = cfg.m if cfg.m is not None else k + cfg.n_points - 1
    if m < k:
        raise ConfigError(f"m = {m} must be at least k = {k}")
    return m


def _config_echo(cfg, k, k_source, m, bundle) -> dict:
    return {
        "dataset": cfg.dataset,
        "method": cfg.method,
        "n": cfg.n_points,
        "k": int(k),
        "k_source": k_source,
        "m": int(m),
        "r": cfg.r_chains,
        "case": cfg.case,
        "approach": cfg.approach,
        "seed": cfg.seed,
        "jobs": cfg.jobs,
        "cap": cfg.cap,
        "data_path": cfg.data_path or "",
        "standin_seed": cfg.standin_seed,
        "pilot_count": cfg.pilot_count,
        "data_source": bundle.source,
        "data_checksum": bundle.checksum,
        "pi0": bundle.pi0,
        "covariates": "as loaded, no standardization",
        "reproduction_note": (
            "error magnitudes depend on the initial distribution pi0 and on "
            "covariate scaling; match both when comparing runs"
        ),
    }


# ---------------------------------------------------------------------------
# Unbiased experiment runs


@dataclass(frozen=True)
class ChainResult:
    index: int
    estimate: np.ndarray
    mcmc_part: np.ndarray
    bc_part: np.ndarray
    tau: int
    cost: int
    seconds: float


@dataclass(frozen=True)
class ChainFailure:
    index: int
    message: str


def _unbiased_chain(model, cfg, k, m, base, chain_index):
    start = time.perf_counter()
    try:
        streams = ChainStreams.for_chain(cfg.seed, chain_index)
        d = model.n_driving_cols
        core = _chain_core(cfg.method, cfg.n_points, d, base, streams.randomize)
        rows = make_row_provider(
            core, k, streams.burnin, streams.overflow, policy=f"case{cfg.case}", d=d
        )
        traj = run_coupled_chain(model, k, m, rows, streams, cap=cfg.cap)
        est = estimate_from_trajectory(traj)
        return ChainResult(
            chain_index,
            est.value,
            est.mcmc_part,
            est.bc_part,
            est.tau,
            est.cost,
            time.perf_counter() - start,
        )
    except UncoupledAtCap:
        return ChainFailure(chain_index, f"no meeting within cap={cfg.cap}")
    except Exception as exc:  # aggregated; > 1% failed chains aborts the run
        return ChainFailure(chain_index, f"{type(exc).__name__}: {exc}")


@dataclass(frozen=True)
class ExperimentReport:
    """Pooled unbiased-run results; pure function of the config echo.

    seconds_per_chain is wall-clock and sits outside the determinism
    contract; every other numeric field is bitwise reproducible.
    """

    identity: dict
    pooled: PooledReport
    estimates: np.ndarray
    bc_parts: np.ndarray
    taus: tuple[int, ...]
    costs: tuple[int, ...]
    expected_cost: float
    bc_mean_sq: float
    failed_chains: int
    failures: tuple[tuple[int, str], ...]
    seconds_per_chain: float
    echo: dict
    rrf: float | None = None
    loss: float | None = None

    def to_json_dict(self) -> dict:
        return {
            "kind": "experiment",
            "identity": self.identity,
            "pooled": self.pooled.to_json_dict(),
            "taus": list(self.taus),
            "costs": list(self.costs),
            "expected_cost": self.expected_cost,
            "bc_mean_sq": self.bc_mean_sq,
            "failed_chains": self.failed_chains,
            "failures": [list(f) for f in self.failures],
            "rrf": self.rrf,
            "loss": self.loss,
            "seconds_per_chain": self.seconds_per_chain,
            "echo": self.echo,
        }


def run_experiment(
    cfg: ExperimentConfig,
    bundle: ModelBundle | None = None,
    chain_offset: int = 0,
    baseline=None,
    v_inf_total: float | None = None,
) -> ExperimentReport:
    """R independent coupled chains with per-chain randomized driving, pooled.

    `baseline` (another unbiased report) fills the rrf field; `v_inf_total`
    (from mcmc_baseline) fills the loss-of-efficiency field.
    """
    validate_config(cfg)
    if cfg.method not in UNBIASED_METHODS:
        raise ConfigError(
            f"run_experiment handles {UNBIASED_METHODS}; use mcmc_baseline for {cfg.method!r}"
        )
    bundle = bundle or build_model(cfg)
    model = bundle.model
    k, k_source = _resolve_k(cfg, bundle)
    m = _resolve_m(cfg, k)
    d = model.n_driving_cols
    base = _harase_base(cfg.n_points, d) if cfg.method.endswith("-H") else None

    def worker(i):
        return _unbiased_chain(model, cfg, k, m, base, chain_offset + i)

    outs = _map_indices(worker, range(cfg.r_chains), cfg.jobs)
    results = sorted(
        (o for o in outs if isinstance(o, ChainResult)), key=lambda r: r.index
    )
    failures = tuple(
        (o.index, o.message) for o in outs if isinstance(o, ChainFailure)
    )
    if len(failures) > 0.01 * cfg.r_chains:
        sample = "; ".join(msg for _, msg in failures[:3])
        raise ExperimentError(f"{len(failures)}/{cfg.r_chains} chains failed: {sample}")
    if len(results) < 2:
        raise ExperimentError("fewer than two successful chains; nothing to pool")

    estimates = np.array([r.estimate for r in results])
    bc_parts = np.array([r.bc_part for r in results])
    taus = tuple(int(r.tau) for r in results)
    costs = tuple(int(r.cost) for r in results)
    pooled = pool(estimates, n=cfg.n_points, k=k)
    ecost = expected_cost(np.array(taus, dtype=np.float64), m)
    identity = {
        "dataset": cfg.dataset,
        "model": bundle.kind,
        "method": cfg.method,
        "n": cfg.n_points,
        "k": k,
        "m": m,
        "r": cfg.r_chains,
        "case": cfg.case,
        "approach": cfg.approach if bundle.kind == "logistic" else None,
        "seed": cfg.seed,
        "data_checksum": bundle.checksum,
    }
    report = ExperimentReport(
        identity=identity,
        pooled=pooled,
        estimates=estimates,
        bc_parts=bc_parts,
        taus=taus,
        costs=costs,
        expected_cost=ecost,
        bc_mean_sq=float(np.mean(np.square(bc_parts))),
        failed_chains=len(failures),
        failures=failures,
        seconds_per_chain=float(np.mean([r.seconds for r in results])),
        echo=_config_echo(cfg, k, k_source, m, bundle),
    )
    rrf_value = None if baseline is None else rrf(baseline, report)
    loss_value = None if v_inf_total is None else efficiency_loss(report, v_inf_total)
    if rrf_value is not None or loss_value is not None:
        report = replace(report, rrf=rrf_value, loss=loss_value)
    return report


def _report_identity_sigma(rep):
    if isinstance(rep, ExperimentReport):
        return rep.identity, float(rep.pooled.sigma_tot)
    if isinstance(rep, dict) and rep.get("kind") == "experiment":
        return rep["identity"], float(rep["pooled"]["sigma_tot"])
    raise TypeError("expected an ExperimentReport or its JSON dict")


def rrf(baseline, report) -> float:
    """RMSE reduction factor: baseline sigma_tot over the report's sigma_tot.

    Defined only between reports sharing model, dataset (including its
    checksum), N, k, and R.
    """
    base_id, base_sigma = _report_identity_sigma(baseline)
    rep_id, rep_sigma = _report_identity_sigma(report)
    shared = ("dataset", "model", "n", "k", "r", "data_checksum")
    differing = [key for key in shared if base_id.get(key) != rep_id.get(key)]
    if differing:
        raise ValueError(f"RRF undefined: runs differ in {', '.join(differing)}")
    if rep_sigma <= 0:
        raise ValueError("report sigma_tot must be positive")
    return base_sigma / rep_sigma


def efficiency_loss(report: ExperimentReport, v_inf_total: float, cost_ratio: float = 1.0) -> float:
    """Work-adjusted variance of the unbiased run against one long chain."""
    var_total = report.pooled.r * report.pooled.sigma_tot_sq
    return loss_of_efficiency(cost_ratio, report.expected_cost, var_total, v_inf_total)


# ---------------------------------------------------------------------------
# Rate scans


@dataclass(frozen=True)
class RateScanReport:
    method: str
    k: int
    ns: tuple[int, ...]
    sigma_tots: tuple[float, ...]
    slope: float
    reports: tuple[ExperimentReport, ...]
    echo: dict

    def to_json_dict(self) -> dict:
        return {
            "kind": "rate-scan",
            "method": self.method,
            "k": self.k,
            "points": [
                {"n": n, "sigma_tot": s} for n, s in zip(self.ns, self.sigma_tots)
            ],
            "slope": self.slope,
            "echo": self.echo,
        }


def rate_scan(cfg: ExperimentConfig, ns=None, bundle: ModelBundle | None = None) -> RateScanReport:
    """run_experiment at each N under one shared pilot k; fits the log-log slope."""
    validate_config(cfg)
    ns = tuple(int(n) for n in (cfg.rate_ns if ns is None else ns))
    if len(ns) < 3:
        raise ConfigError("rate scan needs at least three N values")
    if len(set(ns)) != len(ns):
        raise ConfigError("rate scan N values must be distinct")
    ns = tuple(sorted(ns))
    bundle = bundle or build_model(cfg)
    k, k_source = _resolve_k(cfg, bundle)
    reports = []
    for n in ns:
        sub = replace(cfg, n_points=n, k=k, m=None)
        reports.append(run_experiment(sub, bundle=bundle))
    sigma_tots = tuple(float(r.pooled.sigma_tot) for r in reports)
    slope = fit_rate(ns, sigma_tots)
    echo = dict(reports[0].echo)
    echo["ns"] = list(ns)
    echo["k_source"] = k_source
    return RateScanReport(cfg.method, k, ns, sigma_tots, slope, tuple(reports), echo)


# ---------------------------------------------------------------------------
# Burn-in sweep


@dataclass(frozen=True)
class SweepCell:
    method: str
    case: int | None
    k: int
    mean_rmse: float
    cv: float
    rrf: float

    def to_json_dict(self) -> dict:
        return {
            "method": self.method,
            "case": self.case,
            "k": self.k,
            "mean_rmse": self.mean_rmse,
            "cv": self.cv,
            "rrf": self.rrf,
        }


@dataclass(frozen=True)
class SweepReport:
    cells: tuple[SweepCell, ...]
    outer: int
    chains: int
    n_points: int
    echo: dict

    def to_json_dict(self) -> dict:
        return {
            "kind": "burnin-sweep",
            "cells": [c.to_json_dict() for c in self.cells],
            "outer": self.outer,
            "chains": self.chains,
            "n": self.n_points,
            "echo": self.echo,
        }


def burnin_sweep(cfg: ExperimentConfig, ks=None, cases=None, bundle: ModelBundle | None = None) -> SweepReport:
    """Mean total RMSE, CV, and RRF per (method, case, k) cell.

    Each cell repeats `outer` independent pooled runs of `chains` chains;
    the CV is the standard deviation of the outer total RMSEs over their
    mean. The iid-driven ubMCMC rows (one per k, case-independent) provide
    the RRF denominator baseline.
    """
    validate_config(cfg)
    if cfg.method not in UNBIASED_METHODS:
        raise ConfigError(f"burnin_sweep handles {UNBIASED_METHODS}")
    if cfg.sweep_outer < 2:
        raise ConfigError("burnin-sweep outer repetitions must be at least 2")
    bundle = bundle or build_model(cfg)
    if ks is None:
        ks = cfg.sweep_ks
    if not ks:
        kbar, _ = _resolve_k(cfg, bundle)
        ks = tuple(dict.fromkeys((1, kbar, 2 * kbar, 4 * kbar)))
    ks = tuple(int(x) for x in ks)
    if any(x < 1 for x in ks):
        raise ConfigError("sweep k values must be positive")
    cases = tuple(int(c) for c in (cfg.sweep_cases if cases is None else cases))
    if any(c not in (1, 2) for c in cases):
        raise ConfigError("sweep cases must come from {1, 2}")
    outer, inner = cfg.sweep_outer, cfg.sweep_chains

    def cell_rmses(method, case, k):
        values = []
        for o in range(outer):
            sub = replace(cfg, method=method, case=case, k=k, m=None, r_chains=inner)
            rep = run_experiment(sub, bundle=bundle, chain_offset=o * inner)
            values.append(rep.pooled.sigma_tot)
        return np.asarray(values, dtype=np.float64)

    cells = []
    base_mean = {}
    for k in ks:
        rmses = cell_rmses("ubMCMC", 2, k)
        base_mean[k] = rmses.mean()
        cells.append(
            SweepCell(
                "ubMCMC", None, k,
                float(rmses.mean()),
                float(rmses.std(ddof=1) / rmses.mean()),
                1.0,
            )
        )
    if cfg.method != "ubMCMC":
        for case in cases:
            for k in ks:
                rmses = cell_rmses(cfg.method, case, k)
                cells.append(
                    SweepCell(
                        cfg.method, case, k,
                        float(rmses.mean()),
                        float(rmses.std(ddof=1) / rmses.mean()),
                        float(base_mean[k] / rmses.mean()),
                    )
                )
    k0 = ks[0]
    echo = _config_echo(replace(cfg, k=k0), k0, "sweep", k0 + cfg.n_points - 1, bundle)
    echo["ks"] = list(ks)
    echo["cases"] = list(cases)
    echo["outer"] = outer
    echo["chains"] = inner
    return SweepReport(tuple(cells), outer, inner, cfg.n_points, echo)


# ---------------------------------------------------------------------------
# Plain-MCMC baselines and the asymptotic variance


@dataclass(frozen=True)
class BaselineReport:
    """Biased single-chain averages pooled over chains, with V_inf."""

    identity: dict
    mean: np.ndarray
    v_inf: np.ndarray
    v_inf_total: float
    chains: int
    burnin: int
    length: int
    seconds_per_chain: float
    echo: dict

    def to_json_dict(self) -> dict:
        return {
            "kind": "baseline",
            "identity": self.identity,
            "mean": [float(x) for x in self.mean],
            "v_inf": [float(x) for x in self.v_inf],
            "v_inf_total": self.v_inf_total,
            "chains": self.chains,
            "burnin": self.burnin,
            "length": self.length,
            "seconds_per_chain": self.seconds_per_chain,
            "echo": self.echo,
        }


def _baseline_chain(model, cfg, length, burnin, base, chain_index):
    streams = ChainStreams.for_chain(cfg.seed, chain_index)
    d = model.n_driving_cols
    core = _chain_core(cfg.method, length, d, base, streams.randomize)
    rows = make_row_provider(
        core, burnin + 1, streams.burnin, streams.overflow, policy="case2", d=d
    )
    f_values = run_single_chain(model, burnin + length, rows, streams.x_continue, streams.init_x)
    return f_values[burnin + 1 :].mean(axis=0)


def _linear_baseline_block(model, seed, start, stop, burnin, length):
    """Per-chain beta averages for chains [start, stop) via batched sweeps."""
    indices = range(start, stop)
    r = len(indices)
    p = model.p
    gamma = np.empty((r, p))
    sig2 = np.empty(r)
    for j, c in enumerate(indices):
        g, s2 = model.batched_init(1, stream(seed, _BASELINE_BASE + c, Role.INIT_X))
        gamma[j] = g[0]
        sig2[j] = s2[0]
    gens = [stream(seed, _BASELINE_BASE + c, Role.X_CONTINUE) for c in indices]
    gamma_sum = np.zeros((r, p))
    total = burnin + length
    done = 0
    while done < total:
        span = min(_CHUNK_STEPS, total - done)
        u = np.stack([g.random((span, p + 1)) for g in gens], axis=0)
        for t in range(span):
            gamma, sig2 = model.batched_sweep(gamma, sig2, u[:, t, :])
            if done + t >= burnin:
                gamma_sum += gamma
        done += span
    return model.beta_from_gamma(gamma_sum / length)


def mcmc_baseline(cfg: ExperimentConfig, bundle: ModelBundle | None = None) -> BaselineReport:
    """Standard burn-in-then-average chains, pooled, with V_inf.

    method MCMC drives every step with iid rows; method MCQMC-H drives the
    averaged steps with a per-chain digitally shifted core matrix whose row
    count equals the averaged length.
    """
    validate_config(cfg)
    if cfg.method not in BASELINE_METHODS:
        raise ConfigError(
            f"mcmc_baseline handles {BASELINE_METHODS}; use run_experiment for {cfg.method!r}"
        )
    bundle = bundle or build_model(cfg)
    model = bundle.model
    length = cfg.baseline_length if cfg.baseline_length is not None else cfg.n_points
    burnin = cfg.baseline_burnin
    if length < 1:
        raise ConfigError("baseline length must be positive")
    if burnin < 0:
        raise ConfigError("baseline burn-in must be non-negative")
    if cfg.baseline_chains < 2:
        raise ConfigError("baseline needs at least two chains for V_inf")
    if cfg.method == "MCQMC-H":
        _harase_order(length)
    chains = cfg.baseline_chains

    start_time = time.perf_counter()
    if bundle.kind == "linear" and cfg.method == "MCMC":
        starts = list(range(0, chains, _BATCH_CHAINS))

        def worker(s):
            return _linear_baseline_block(
                model, cfg.seed, s, min(s + _BATCH_CHAINS, chains), burnin, length
            )

        averages = np.vstack(_map_indices(worker, starts, cfg.jobs))
    else:
        base = _harase_base(length, model.n_driving_cols) if cfg.method == "MCQMC-H" else None

        def worker(i):
            return _baseline_chain(model, cfg, length, burnin, base, _BASELINE_BASE + i)

        averages = np.vstack(_map_indices(worker, range(chains), cfg.jobs))
    seconds = (time.perf_counter() - start_time) / chains

    v_inf, v_total = asymptotic_variance(averages, length)
    identity = {
        "dataset": cfg.dataset,
        "model": bundle.kind,
        "method": cfg.method,
        "length": length,
        "burnin": burnin,
        "chains": chains,
        "seed": cfg.seed,
        "data_checksum": bundle.checksum,
    }
    echo = _config_echo(cfg, 1, "baseline", burnin + length, bundle)
    echo["baseline_burnin"] = burnin
    echo["baseline_length"] = length
    echo["baseline_chains"] = chains
    return BaselineReport(
        identity=identity,
        mean=averages.mean(axis=0),
        v_inf=v_inf,
        v_inf_total=float(v_total),
        chains=chains,
        burnin=burnin,
        length=length,
        seconds_per_chain=seconds,
        echo=echo,
    )


# ---------------------------------------------------------------------------
# Emission


def write_json(json_dict: dict, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(json_dict, indent=2, sort_keys=True) + "\n")
    return path


def write_chains_csv(report: ExperimentReport, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    p = report.estimates.shape[1]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["chain", "tau", "cost"]
            + [f"est_{j}" for j in range(p)]
            + [f"bc_{j}" for j in range(p)]
        )
        for i, (tau, cost) in enumerate(zip(report.taus, report.costs)):
            writer.writerow(
                [i, tau, cost]
                + [repr(float(x)) for x in report.estimates[i]]
                + [repr(float(x)) for x in report.bc_parts[i]]
            )
    return path


def write_rate_csv(scan: RateScanReport, path) -> Path:
    """Plot-ready (x, y, series) rows: N, sigma_tot, method."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "y", "series"])
        for n, s in zip(scan.ns, scan.sigma_tots):
            writer.writerow([n, repr(s), scan.method])
    return path


def write_sweep_csv(sweep: SweepReport, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["method", "case", "k", "mean_rmse", "cv", "rrf"])
        for cell in sweep.cells:
            writer.writerow(
                [
                    cell.method,
                    "" if cell.case is None else cell.case,
                    cell.k,
                    repr(cell.mean_rmse),
                    repr(cell.cv),
                    repr(cell.rrf),
                ]
            )
    return path

"""Command-line front end for the experiment harness.

Subcommands mirror the harness operations; every run is driven by a
sectioned key=value config file, with --seed/--jobs/--out overrides.
Exit codes: 0 success, 2 experiment error, 3 configuration error.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from .harness import (
    ConfigError,
    ExperimentError,
    burnin_sweep,
    efficiency_loss,
    load_config,
    mcmc_baseline,
    pilot_run,
    rate_scan,
    rrf,
    run_experiment,
    write_chains_csv,
    write_json,
    write_rate_csv,
    write_sweep_csv,
)

_COMMANDS = ("pilot", "run", "rate-scan", "burnin-sweep", "baseline")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ubmcqmc",
        description=(
            "Unbiased (quasi-)Monte Carlo Gibbs experiments: pilot runs, "
            "coupled-chain estimates, rate scans, burn-in sweeps, and "
            "long-chain baselines."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "pilot": "estimate meeting times with iid driving and select a burn-in k",
        "run": "R coupled chains of the configured method, pooled into a report",
        "rate-scan": "run the experiment across several N and fit the RMSE rate",
        "burnin-sweep": "mean RMSE / CV / RRF over a grid of k values and burn-in cases",
        "baseline": "plain burn-in-then-average chains and the asymptotic variance",
    }
    for name in _COMMANDS:
        p = sub.add_parser(name, help=helps[name])
        p.add_argument("--config", required=True, help="path to the key=value config file")
        p.add_argument("--seed", type=int, default=None, help="override the master seed")
        p.add_argument("--jobs", type=int, default=None, help="override the parallelism degree")
        p.add_argument("--out", default=None, help="output directory (default: ubmcqmc-out)")
        if name == "run":
            p.add_argument(
                "--baseline",
                default=None,
                help=(
                    "path to a previous report.json (adds the RMSE reduction factor) "
                    "or baseline.json (adds the loss of efficiency)"
                ),
            )
    return parser


def _load_baseline_artifacts(path):
    """Returns (experiment_report_dict | None, v_inf_total | None)."""
    try:
        payload = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read baseline report {path}: {exc}") from exc
    kind = payload.get("kind")
    if kind == "experiment":
        return payload, None
    if kind == "baseline":
        return None, float(payload["v_inf_total"])
    raise ConfigError(f"baseline report {path} has unsupported kind {kind!r}")


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg = replace(cfg, seed=args.seed)
        if args.jobs is not None:
            cfg = replace(cfg, jobs=args.jobs)
        out = Path(args.out) if args.out is not None else Path("ubmcqmc-out")

        if args.command == "pilot":
            report = pilot_run(cfg)
            path = write_json(report.to_json_dict(), out / "pilot.json")
            print(
                f"pilot: k={report.k} from {report.count} chains "
                f"({report.uncoupled} uncoupled) -> {path}"
            )
        elif args.command == "run":
            baseline_report, v_inf_total = (None, None)
            if args.baseline is not None:
                baseline_report, v_inf_total = _load_baseline_artifacts(args.baseline)
            try:
                report = run_experiment(
                    cfg, baseline=baseline_report, v_inf_total=v_inf_total
                )
            except ValueError as exc:
                raise ConfigError(str(exc)) from exc
            path = write_json(report.to_json_dict(), out / "report.json")
            write_chains_csv(report, out / "chains.csv")
            extras = ""
            if report.rrf is not None:
                extras += f" rrf={report.rrf:.3g}"
            if report.loss is not None:
                extras += f" loss={report.loss:.3g}"
            print(
                f"run: {cfg.method} sigma_tot={report.pooled.sigma_tot:.6g} "
                f"cost={report.expected_cost:.1f}{extras} -> {path}"
            )
        elif args.command == "rate-scan":
            scan = rate_scan(cfg)
            path = write_json(scan.to_json_dict(), out / "rate.json")
            write_rate_csv(scan, out / "rate.csv")
            pts = ", ".join(
                f"N={n}: {s:.4g}" for n, s in zip(scan.ns, scan.sigma_tots)
            )
            print(f"rate-scan: slope={scan.slope:.3f} ({pts}) -> {path}")
        elif args.command == "burnin-sweep":
            sweep = burnin_sweep(cfg)
            path = write_json(sweep.to_json_dict(), out / "sweep.json")
            write_sweep_csv(sweep, out / "sweep.csv")
            print(f"burnin-sweep: {len(sweep.cells)} cells -> {path}")
        else:
            report = mcmc_baseline(cfg)
            path = write_json(report.to_json_dict(), out / "baseline.json")
            print(
                f"baseline: {cfg.method} v_inf_total={report.v_inf_total:.6g} "
                f"({report.chains} chains x {report.length}) -> {path}"
            )
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 3
    except ExperimentError as exc:
        print(f"experiment error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())

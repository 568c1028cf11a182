"""Unbiased Markov chain quasi-Monte Carlo for Gibbs samplers."""

from .coupling import CoupledTrajectory, UncoupledAtCap, run_coupled_chain, run_single_chain
from .driving import (
    VariableMatrix,
    digital_shift,
    harase_matrix,
    iid_matrix,
    liao_matrix,
    make_row_provider,
    random_shift,
    star_discrepancy,
)
from .estimators import (
    PooledReport,
    UnbiasedEstimate,
    asymptotic_variance,
    estimate_from_trajectory,
    expected_cost,
    fit_rate,
    loss_of_efficiency,
    pool,
)
from .harness import (
    ConfigError,
    ExperimentConfig,
    ExperimentError,
    build_model,
    burnin_sweep,
    efficiency_loss,
    load_config,
    mcmc_baseline,
    pilot_run,
    rate_scan,
    rrf,
    run_experiment,
)
from .models import select_k
from .streams import ChainStreams, Role, stream

__version__ = "0.1.0"

__all__ = [
    "ChainStreams",
    "ConfigError",
    "CoupledTrajectory",
    "ExperimentConfig",
    "ExperimentError",
    "PooledReport",
    "Role",
    "UnbiasedEstimate",
    "UncoupledAtCap",
    "VariableMatrix",
    "asymptotic_variance",
    "build_model",
    "burnin_sweep",
    "digital_shift",
    "efficiency_loss",
    "estimate_from_trajectory",
    "expected_cost",
    "fit_rate",
    "harase_matrix",
    "iid_matrix",
    "liao_matrix",
    "load_config",
    "loss_of_efficiency",
    "make_row_provider",
    "mcmc_baseline",
    "pilot_run",
    "pool",
    "random_shift",
    "rate_scan",
    "rrf",
    "run_coupled_chain",
    "run_experiment",
    "run_single_chain",
    "select_k",
    "star_discrepancy",
    "stream",
    "__version__",
]

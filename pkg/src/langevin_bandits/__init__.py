"""Contextual bandit library: Langevin Monte Carlo Thompson sampling,
classic baselines, synthetic and dataset-backed environments, and a seeded
simulation harness with a closed-form sampler oracle."""

__version__ = "0.1.0"

from .core import History, RngStream, mahalanobis_inv_norm, ridge_solution
from .models import (
    GlmModel,
    LinearModel,
    LossSpec,
    MlpModel,
    hessian,
    loss,
    loss_gradient,
    minimize,
)
from .sampler import (
    ChainState,
    GaussianLaw,
    LmcSchedule,
    closed_form_law,
    lmc_step,
    run_epoch,
    theory_schedule,
)
from .agents import (
    EpsilonGreedy,
    GLMTSL,
    LangevinTS,
    LinTS,
    LinUCB,
    UCBGLM,
    UniformRandom,
)
from .envs import DatasetEnv, RoundOutcome, SyntheticEnv, load_dataset, toy_dataset_path
from .harness import (
    AgentConfig,
    Aggregate,
    EnvConfig,
    RunRecord,
    run_many,
    run_one,
    write_results,
)

__all__ = [
    "AgentConfig",
    "Aggregate",
    "ChainState",
    "DatasetEnv",
    "EnvConfig",
    "EpsilonGreedy",
    "GLMTSL",
    "GaussianLaw",
    "GlmModel",
    "History",
    "LangevinTS",
    "LinTS",
    "LinUCB",
    "LinearModel",
    "LmcSchedule",
    "LossSpec",
    "MlpModel",
    "RngStream",
    "RoundOutcome",
    "RunRecord",
    "SyntheticEnv",
    "UCBGLM",
    "UniformRandom",
    "closed_form_law",
    "hessian",
    "lmc_step",
    "load_dataset",
    "loss",
    "loss_gradient",
    "mahalanobis_inv_norm",
    "minimize",
    "ridge_solution",
    "run_epoch",
    "run_many",
    "run_one",
    "theory_schedule",
    "toy_dataset_path",
    "write_results",
]

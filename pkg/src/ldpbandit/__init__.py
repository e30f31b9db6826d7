"""Thompson Sampling and UCB bandits under locally differentially private Bernoulli responses."""

__version__ = "0.1.0"

from .agents import TsState, UcbState
from .bounds import GapReport, BoundReport, privatized_gap, privatized_mean, ts_bound, ucb_bound
from .environments import BanditEnvironment, Bernoulli, Beta, TwoPoint, UniformInterval
from .harness import ExperimentConfig, fig2_config, fig2_preset, run_experiment, run_trial
from .mechanisms import Mechanism, perturb, response_probability, verify_ldp_conditions, worst_case_ratio

__all__ = [
    "BanditEnvironment",
    "Bernoulli",
    "Beta",
    "BoundReport",
    "ExperimentConfig",
    "GapReport",
    "Mechanism",
    "TsState",
    "TwoPoint",
    "UcbState",
    "UniformInterval",
    "fig2_config",
    "fig2_preset",
    "perturb",
    "privatized_gap",
    "privatized_mean",
    "response_probability",
    "run_experiment",
    "run_trial",
    "ts_bound",
    "ucb_bound",
    "verify_ldp_conditions",
    "worst_case_ratio",
]

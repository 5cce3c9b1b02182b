"""Bayesian-network synthetic data for binary tables."""

__version__ = "0.1.0"

from .dag import Dag, EquivalenceKey, count_dags, enumerate_dags
from .dataset import BinaryDataset, DatasetError, ParentConfig, load_csv, sufficient_stats, write_csv
from .exact import ExactPosterior, exact_posterior, total_variation, true_network_posterior
from .mcmc import ChainOutput, McmcConfig, class_distribution, effective_sample_size, empirical_distribution, run_chain
from .score import HyperParams, PriorSpec, ScoreCache, log_local_score, log_marginal_likelihood, log_posterior_unnorm
from .synth import hpd_interval, posterior_predictive, release_output, s2_pipeline, sample_theta
from .utility import StatisticSpec, UndefinedStatistic, chi2_independence, overlap_measure, s2_combine, wald_ci

__all__ = [
    "BinaryDataset",
    "ChainOutput",
    "Dag",
    "DatasetError",
    "EquivalenceKey",
    "ExactPosterior",
    "HyperParams",
    "McmcConfig",
    "ParentConfig",
    "PriorSpec",
    "ScoreCache",
    "StatisticSpec",
    "UndefinedStatistic",
    "chi2_independence",
    "class_distribution",
    "count_dags",
    "effective_sample_size",
    "empirical_distribution",
    "enumerate_dags",
    "exact_posterior",
    "hpd_interval",
    "load_csv",
    "log_local_score",
    "log_marginal_likelihood",
    "log_posterior_unnorm",
    "overlap_measure",
    "posterior_predictive",
    "release_output",
    "run_chain",
    "s2_combine",
    "s2_pipeline",
    "sample_theta",
    "sufficient_stats",
    "total_variation",
    "true_network_posterior",
    "wald_ci",
    "write_csv",
]

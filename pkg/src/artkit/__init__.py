"""Randomization tests for adaptively collected experiments.

The package covers three layers:

* exact finite-sample p-values for adaptive designs, built on resampling
  the treatment sequence under the collection policy (`engine`, `narp`,
  `policies`, `stats`);
* asymptotic power evaluators and design tools for the normal-means
  bandit model (`asymptotics`);
* a conjoint survey application with simulated and replayed responses
  (`conjoint`).

`cli` exposes the same functionality as the `artkit` console command.
"""

__version__ = "0.1.0"

from .asymptotics import (
    finite_n_nmm_power,
    oracle_q_star,
    power_adaptive,
    power_heatmap,
    power_iid,
    q_from_q1,
    sweep_epsilon_t,
    uniform_weights,
)
from .conjoint import (
    ConjointResponseModel,
    conjoint_adaptive_policy,
    conjoint_iid_policy,
    ingest_replay_dataset,
    replay_experiment,
    replay_power,
    simulate_conjoint_power,
)
from .core import (
    DegenerateWeightsError,
    ExperimentRecord,
    PolicyMismatchError,
    SeedPlan,
    config_fingerprint,
    derive_seed,
    derive_stream,
)
from .engine import PowerEstimate, PValue, art_p_value, crt_p_value, empirical_power
from .narp import ResampleBundle, narp_resample
from .policies import (
    AdaptivePolicy,
    IidPolicy,
    PolicyError,
    TwoStageConfig,
    TwoStagePolicy,
    iid_policy,
    product_policy,
    two_stage_policy,
)
from .stats import FStatistic, LassoLogistic, MaxArmMean, TestStatistic

__all__ = [
    "__version__",
    "AdaptivePolicy",
    "ConjointResponseModel",
    "DegenerateWeightsError",
    "ExperimentRecord",
    "FStatistic",
    "IidPolicy",
    "LassoLogistic",
    "MaxArmMean",
    "PolicyError",
    "PolicyMismatchError",
    "PowerEstimate",
    "PValue",
    "ResampleBundle",
    "SeedPlan",
    "TestStatistic",
    "TwoStageConfig",
    "TwoStagePolicy",
    "art_p_value",
    "config_fingerprint",
    "conjoint_adaptive_policy",
    "conjoint_iid_policy",
    "crt_p_value",
    "derive_seed",
    "derive_stream",
    "empirical_power",
    "finite_n_nmm_power",
    "iid_policy",
    "ingest_replay_dataset",
    "narp_resample",
    "oracle_q_star",
    "power_adaptive",
    "power_heatmap",
    "power_iid",
    "product_policy",
    "q_from_q1",
    "replay_experiment",
    "replay_power",
    "simulate_conjoint_power",
    "sweep_epsilon_t",
    "two_stage_policy",
    "uniform_weights",
]

"""Multi-layer stochastic block model toolkit.

Sampling and file IO (model), loss/risk metrics (metrics), recovery
algorithms (recovery), planted-vs-null testing (detection), exact theory
quantities with brute-force oracles (theory), Monte-Carlo sweeps
(experiments), and a command-line front end (cli).
"""

from .errors import BoundInapplicableError, SizeGuardError, ValidationError
from .metrics import RecoveryLoss, detection_risk, hamming_loss
from .model import (
    Assignment,
    MlsbmParams,
    MultiLayerGraph,
    PlantedInstance,
    edge_probability,
    enumerate_assignments,
    read_graph,
    sample_conditional,
    sample_null,
    sample_planted,
    write_graph,
)
from .recovery import (
    AggregateMatrix,
    RecoveryResult,
    aggregate_bias_adjusted,
    aggregate_layer_sum,
    aggregate_signed,
    aggregate_sum_spectral,
    balanced_rounding,
    bias_adjusted_spectral,
    default_start_battery,
    mle_exhaustive,
    mle_local_search,
    mle_local_search_multistart,
    mle_objective,
    oracle_tau_spectral,
    top_two_eigenpairs,
)
from .detection import (
    DetectionDecision,
    default_shuffle_rounds,
    estimate_density,
    shuffled_test,
    split_layer_test,
)
from .theory import (
    ChiSquareReport,
    LambdaCount,
    LdlrReport,
    chi_alpha_expectation,
    chi_alpha_expectation_bruteforce,
    chi_square_bruteforce,
    chi_square_closed_form,
    chi_square_relaxed_bound,
    hypergeometric_cdf,
    hypergeometric_tail_check,
    kappa,
    lambda_count_bound,
    lambda_count_enumerate,
    lambda_count_partition,
    ldlr_norm_bruteforce,
    ldlr_norm_exact,
    ldlr_projection_oracle,
    ldlr_upper_bound,
    signed_vandermonde,
    signed_vandermonde_closed_form,
)
from .experiments import (
    CSV_COLUMNS,
    ExperimentConfig,
    TrialRecord,
    detection_risk_by_cell,
    parse_config_text,
    read_config,
    read_results,
    run_detection_sweep,
    run_gap_demo,
    run_phase_diagram,
    write_results,
)
from .seeding import derive_seed, substream

__version__ = "0.1.0"

__all__ = [
    "Assignment",
    "AggregateMatrix",
    "BoundInapplicableError",
    "ChiSquareReport",
    "CSV_COLUMNS",
    "DetectionDecision",
    "ExperimentConfig",
    "LambdaCount",
    "LdlrReport",
    "MlsbmParams",
    "MultiLayerGraph",
    "PlantedInstance",
    "RecoveryLoss",
    "RecoveryResult",
    "SizeGuardError",
    "TrialRecord",
    "ValidationError",
    "aggregate_bias_adjusted",
    "aggregate_layer_sum",
    "aggregate_signed",
    "aggregate_sum_spectral",
    "balanced_rounding",
    "bias_adjusted_spectral",
    "chi_alpha_expectation",
    "chi_alpha_expectation_bruteforce",
    "chi_square_bruteforce",
    "chi_square_closed_form",
    "chi_square_relaxed_bound",
    "default_shuffle_rounds",
    "derive_seed",
    "detection_risk",
    "detection_risk_by_cell",
    "edge_probability",
    "enumerate_assignments",
    "estimate_density",
    "hamming_loss",
    "hypergeometric_cdf",
    "hypergeometric_tail_check",
    "kappa",
    "lambda_count_bound",
    "lambda_count_enumerate",
    "lambda_count_partition",
    "ldlr_norm_bruteforce",
    "ldlr_norm_exact",
    "ldlr_projection_oracle",
    "ldlr_upper_bound",
    "default_start_battery",
    "mle_exhaustive",
    "mle_local_search",
    "mle_local_search_multistart",
    "mle_objective",
    "oracle_tau_spectral",
    "parse_config_text",
    "read_config",
    "read_graph",
    "read_results",
    "run_detection_sweep",
    "run_gap_demo",
    "run_phase_diagram",
    "sample_conditional",
    "sample_null",
    "sample_planted",
    "shuffled_test",
    "signed_vandermonde",
    "signed_vandermonde_closed_form",
    "split_layer_test",
    "substream",
    "top_two_eigenpairs",
    "write_graph",
    "write_results",
]

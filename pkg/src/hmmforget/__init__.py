"""Exponential forgetting of HMM smoothing distributions.

Finite-alphabet hidden Markov models, cluster-based contraction bounds
for smoothing probabilities, minimum-risk segmentation, and the
Monte-Carlo experiment harness that checks the bounds empirically.
"""

from .contraction import (
    DecayConfig,
    DecayEstimate,
    ForgettingConfig,
    ForgettingSample,
    TwoSidedConfig,
    TwoSidedSample,
    decay_rate_experiment,
    dobrushin,
    doeblin_check,
    forgetting_bound_check,
    kappa,
    kappa_profile,
    margin_threshold,
    reverse_model,
    rho_constant,
    run_forgetting_experiment,
    run_two_sided_experiment,
    tv_distance,
    two_sided_approximation,
)
from .kernels import backend_name
from .model import (
    Cluster,
    HmmModel,
    SamplePath,
    assumption_a_clusters,
    best_cluster,
    build_model,
    compute_p_r,
    detect_clusters,
    load_model,
    save_model,
    simulate,
    verify_assumption_a,
)
from .segmentation import (
    RiskConfig,
    RiskReport,
    RiskTable,
    asymptotic_risk_estimate,
    pmap_classify,
    pointwise_risk,
    sequence_loss,
    viterbi,
    zero_one_loss,
)
from .smoothing import (
    ForwardSmoothingMatrix,
    ScaledBackwardTable,
    ScaledForwardTable,
    SmoothingVector,
    backward_table,
    forward_smoothing_matrices,
    forward_smoothing_matrix,
    forward_table,
    log_likelihood,
    propagate,
    smoothing_matrix,
    smoothing_vector,
)

__version__ = "0.1.0"

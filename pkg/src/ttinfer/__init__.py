"""Tensor-train Bayesian inference for discrete-input additive noise models.

The package represents high-dimensional discrete log-posteriors exactly in
tensor-train (TT) format, exponentiates and marginalizes them by cross
approximation, and applies the machinery to MIMO symbol detection and
soft-decision decoding of binary linear block codes, with Monte Carlo
benchmarking against exact brute-force oracles.
"""

from .tt import (
    CapacityError,
    DenseTensor,
    TensorTrain,
    constant_tt,
    ones_tt,
    random_tt,
    rank_one_tt,
    tt_add,
    tt_dump,
    tt_eval,
    tt_eval_many,
    tt_from_dense,
    tt_hadamard,
    tt_load,
    tt_marginalize_except,
    tt_mode_multiply,
    tt_norm,
    tt_scale,
    tt_to_dense,
    tt_truncate,
    zeros_tt,
)
from .cross import (
    CrossConfig,
    CrossResult,
    DegenerateMatrixError,
    NonFiniteValueError,
    PivotSets,
    matrix_cross,
    maxvol,
    tt_cross,
    tt_cross_sample,
    tt_cross_sweep,
    tt_exp_taylor,
)
from .posterior import (
    InferenceFailureError,
    LogPosterior,
    MarginalTable,
    build_prior_tt,
    infer_marginals,
    map_decision,
    sum_loglikelihood_tts,
)
from .mimo import (
    ChannelRealization,
    DegenerateChannelError,
    DetectionTrial,
    QamConstellation,
    build_hx_tt,
    build_loglik_term,
    complexify_vec,
    noise_variance_for_snr,
    realify_channel,
    realify_model,
    realify_vec,
    sample_channel,
    ttdet,
)
from .chancode import (
    BiAwgnObservation,
    DecodeResult,
    LinearCode,
    StoppingRule,
    biawgn_capacity_dispersion,
    build_code_logapp_tt,
    builtin_code_path,
    load_code,
    n0_from_ebn0,
    noncentral_chi2_cdf,
    noncentral_chi2_ppf,
    normal_approx_pe,
    stopping_threshold,
    ttdec,
)
from .harness import (
    RankStats,
    SimConfig,
    SweepResult,
    code_exact_bitwise_map,
    exact_map_oracle,
    lmmse_detect,
    mimo_exact_marginals,
    rank_stats,
    run_sweep,
)

__version__ = "0.1.0"

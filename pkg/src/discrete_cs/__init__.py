"""Recovery of discrete-valued sparse vectors from noisy underdetermined
linear measurements."""

from .algorithms import (
    GenieMode,
    Quantizer,
    RecoveryConfig,
    RecoveryResult,
    ims_q,
    ims_q_genie,
    iht_q,
    ist_q,
    ml_oracle,
    omp_q,
    tsr_q,
)
from .estimators import (
    MmseStepResult,
    extrinsic_combine,
    full_error_covariance,
    mmse_step,
    soft_feedback,
    threshold_hard,
    threshold_soft,
)
from .measurement import (
    ChannelOutput,
    MeasurementEnsemble,
    apply_channel,
    build_dct_ensemble,
    build_svd_ensemble,
    noise_level_db_to_variance,
)
from .signal import SignalPrior, generate_sparse_signal, quantize_elementwise, quantize_sparsity_matched

__version__ = "0.1.0"

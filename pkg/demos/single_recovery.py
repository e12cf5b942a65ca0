"""
Recovering one sparse ternary vector
====================================

Draw a partial orthogonal measurement matrix, measure a sparse +-1 vector
at 17 dB, and run every recovery algorithm on the same measurement.
"""

import numpy as np

from discrete_cs import (
    RecoveryConfig,
    SignalPrior,
    apply_channel,
    build_svd_ensemble,
    generate_sparse_signal,
    noise_level_db_to_variance,
)
from discrete_cs import algorithms as alg
from discrete_cs.harness import omp_iterations, ser

rng = np.random.default_rng(7)
prior = SignalPrior(L=258, s=20)
ensemble = build_svd_ensemble(K=129, L=258, rng=rng)
x = generate_sparse_signal(prior, rng)

sigma_n_sq = noise_level_db_to_variance(17.0)
y = apply_channel(ensemble, x, sigma_n_sq, rng).y

# The column scaling makes the mean squared scale close to L/K
print(f"c_bar^2 = {ensemble.c_bar_sq:.3f}")

results = {
    "IMS/Q": alg.ims_q(y, ensemble, sigma_n_sq, prior),
    "TSR/Q": alg.tsr_q(y, ensemble, sigma_n_sq, prior),
    "IHT/Q": alg.iht_q(y, ensemble, prior),
    "IST/Q": alg.ist_q(y, ensemble, prior, RecoveryConfig(ist_tau=1.0 * np.sqrt(sigma_n_sq))),
    "OMP/Q": alg.omp_q(y, ensemble, prior, RecoveryConfig(omp_iters=omp_iterations(17.0))),
}
for name, res in results.items():
    errors, total = ser(res.x_hat_discrete, x)
    print(f"{name}: {errors:2d} symbol errors of {total}, {res.iters_run} iterations")

###############################################################################
# The soft estimate of IMS/Q already sits close to the alphabet, which is
# why the final elementwise quantizer changes little.
soft = results["IMS/Q"].x_soft_final
print("largest distance to the alphabet:", np.max(np.abs(soft - np.round(soft))))

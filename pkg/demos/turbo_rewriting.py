"""
The turbo linear step in two coordinate systems
===============================================

With an unscaled partial orthogonal matrix the linear step of TSR/Q can be
done on the transform coefficients ``z = M x`` and mapped back. The
x-domain implementation should follow that path iteration by iteration.
"""

import numpy as np

from discrete_cs import MeasurementEnsemble, RecoveryConfig, SignalPrior, tsr_q
from discrete_cs.verify import tsr_z_domain

rng = np.random.default_rng(3)
L, K, s = 64, 32, 5
M, _, _ = np.linalg.svd(rng.standard_normal((L, L)))
rows = np.sort(rng.choice(L, K, replace=False))
ensemble = MeasurementEnsemble.from_rows(M, rows, normalize=False)

x = np.zeros(L)
x[rng.choice(L, s, replace=False)] = rng.choice((-1.0, 1.0), s)
y = ensemble.A @ x + np.sqrt(0.05) * rng.standard_normal(K)

res = tsr_q(y, ensemble, 0.05, SignalPrior(L, s), RecoveryConfig(max_iters=8, trace=True))
ref = tsr_z_domain(M, rows, y, 0.05, SignalPrior(L, s), len(res.trace))
for i, (step, z_path) in enumerate(zip(res.trace, ref)):
    print(f"iteration {i}: max difference {np.max(np.abs(step['x_a_post'] - z_path)):.1e}")

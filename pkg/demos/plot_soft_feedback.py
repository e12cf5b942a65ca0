"""
Soft feedback characteristic curves
===================================

A ternary symbol observed through Gaussian noise has a posterior mean that
moves from a near-linear shrinkage at large noise variance to a staircase
at small variance. The staircase is exactly the hard quantizer.
"""

import numpy as np
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from discrete_cs import SignalPrior, quantize_elementwise, soft_feedback
from discrete_cs.harness import default_output_dir

# 20 nonzeros out of 200, so one symbol in ten is active
prior = SignalPrior(L=200, s=20)
x = np.linspace(-2, 2, 801)

fig, ax = plt.subplots(figsize=(5, 4))
ax.plot(x, quantize_elementwise(x), "k--", lw=1, label="hard")
for var in (0.5, 0.05, 0.01):
    mean, _ = soft_feedback(x, var, prior)
    ax.plot(x, mean, label=f"var = {var:g}")
ax.set_xlabel("x_tilde")
ax.set_ylabel("posterior mean")
ax.legend()

# The posterior variance peaks where the decision is least certain
mean, post_var = soft_feedback(x, 0.05, prior)
print("largest posterior variance at x_tilde =", x[np.argmax(post_var)])

out = default_output_dir()
out.mkdir(parents=True, exist_ok=True)
fig.savefig(out / "soft_feedback.svg")
print("wrote", out / "soft_feedback.svg")

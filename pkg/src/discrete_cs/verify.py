"""Reference computations and equivalence checks.

Each reference here takes a different route than the production code it is
compared against: explicit inverses, high-precision mixture sums, or the
z-domain form of the turbo linear step.
"""

from __future__ import annotations

from dataclasses import dataclass

import mpmath
import numpy as np

from .algorithms import RecoveryConfig, tsr_q
from .estimators import VARIANCE_FLOOR, extrinsic_combine, full_error_covariance, mmse_step, soft_feedback
from .measurement import MeasurementEnsemble
from .signal import SignalPrior


@dataclass(frozen=True)
class CheckResult:
    name: str
    value: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(self.value < self.tolerance)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.name}: {self.value:.3e} (tolerance {self.tolerance:.0e})"


def mixture_posterior(x_tilde: float, var: float, prior: SignalPrior, dps: int = 60):
    """Posterior mean and variance from the three weighted Gaussian likelihoods,
    evaluated in ``dps``-digit arithmetic without any simplification."""
    with mpmath.workdps(dps):
        x = mpmath.mpf(x_tilde)
        v = mpmath.mpf(var)
        half = mpmath.mpf(prior.s) / 2
        g_plus = mpmath.exp(-((x - 1) ** 2) / (2 * v))
        g_minus = mpmath.exp(-((x + 1) ** 2) / (2 * v))
        g_zero = mpmath.exp(-(x**2) / (2 * v))
        denom = half * (g_plus + g_minus) + (prior.L - prior.s) * g_zero
        mean = half * (g_plus - g_minus) / denom
        second = half * (g_plus + g_minus) / denom
        return float(mean), float(second - mean**2)


def check_error_covariance(n_instances: int = 100, seed: int = 0) -> CheckResult:
    """Closed-form per-element error variance against the full covariance diagonal."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_instances):
        L = int(rng.integers(2, 21))
        K = int(rng.integers(2, 21))
        A = rng.standard_normal((K, L)) / np.sqrt(K)
        d = rng.uniform(1e-3, 1.0, L)
        sigma_n_sq = float(10 ** rng.uniform(-3, 0))
        step = mmse_step(rng.standard_normal(K), A, rng.standard_normal(L), d, sigma_n_sq)
        full = np.diag(full_error_covariance(A, d, sigma_n_sq))
        worst = max(worst, float(np.max(np.abs(full - step.sigma_e_sq))))
    return CheckResult("error variance closed form vs full covariance", worst, 1e-10)


def soft_feedback_grid(n: int = 200):
    x = np.linspace(-5.0, 5.0, n)
    var = np.logspace(-6, 1, n)
    return np.meshgrid(x, var, indexing="ij")


def check_soft_feedback(prior: SignalPrior = SignalPrior(258, 20), n: int = 200) -> CheckResult:
    """Closed-form soft values and variances against the mixture posterior."""
    X, V = soft_feedback_grid(n)
    mean, var = soft_feedback(X, V, prior)
    worst = 0.0
    for i in range(n):
        for j in range(n):
            ref_mean, ref_var = mixture_posterior(X[i, j], V[i, j], prior)
            worst = max(worst, abs(ref_mean - mean[i, j]), abs(ref_var - var[i, j]))
    return CheckResult("soft feedback vs mixture posterior", worst, 1e-12)


def check_soft_feedback_finite(prior: SignalPrior = SignalPrior(258, 20), n: int = 400) -> CheckResult:
    X, V = np.meshgrid(np.linspace(-30, 30, n), np.logspace(-12, 3, n), indexing="ij")
    mean, var = soft_feedback(X, V, prior)
    bad = np.count_nonzero(~np.isfinite(mean) | ~np.isfinite(var))
    return CheckResult("soft feedback non-finite outputs", float(bad), 0.5)


def tsr_z_domain(M, rows, y, sigma_n_sq, prior: SignalPrior, n_iters: int):
    """Turbo recovery with the linear step done on ``z = M x`` and mapped back.

    Only valid for unit column scalings. Returns the linear-step posterior
    mean of ``x`` for every iteration.
    """
    L = M.shape[0]
    K = len(rows)
    x_pri = np.zeros(L)
    v_pri = prior.s / L
    out = []
    for _ in range(n_iters):
        z_pri = M @ x_pri
        z_post = z_pri.copy()
        gain = v_pri / (v_pri + sigma_n_sq)
        z_post[rows] += gain * (y - z_pri[rows])
        x_post = M.T @ z_post
        v_post = v_pri - (K / L) * v_pri**2 / (v_pri + sigma_n_sq)
        out.append(x_post)
        x_b, v_b, _ = extrinsic_combine(x_post, max(v_post, VARIANCE_FLOOR), x_pri, v_pri)
        m, var_each = soft_feedback(x_b, v_b, prior)
        x_pri, v_pri, _ = extrinsic_combine(m, max(float(np.mean(var_each)), VARIANCE_FLOOR), x_b, v_b)
    return out


def check_tsr_rewriting(n_instances: int = 20, seed: int = 1, L: int = 64, K: int = 32, s: int = 5) -> CheckResult:
    """x-domain turbo linear step against the z-domain path, iteration by iteration."""
    rng = np.random.default_rng(seed)
    prior = SignalPrior(L, s)
    worst = 0.0
    for _ in range(n_instances):
        M, _, _ = np.linalg.svd(rng.standard_normal((L, L)))
        rows = np.sort(rng.choice(L, K, replace=False))
        ens = MeasurementEnsemble.from_rows(M, rows, normalize=False)
        x = np.zeros(L)
        x[rng.choice(L, s, replace=False)] = rng.choice((-1.0, 1.0), s)
        sigma_n_sq = 0.05
        y = ens.A @ x + np.sqrt(sigma_n_sq) * rng.standard_normal(K)
        res = tsr_q(y, ens, sigma_n_sq, prior, RecoveryConfig(max_iters=10, trace=True))
        ref = tsr_z_domain(M, rows, y, sigma_n_sq, prior, len(res.trace))
        for step, z_path in zip(res.trace, ref):
            worst = max(worst, float(np.max(np.abs(step["x_a_post"] - z_path))))
    return CheckResult("turbo x-domain step vs z-domain path", worst, 1e-10)


def check_identity_channel(n_instances: int = 10, seed: int = 2, L: int = 16) -> CheckResult:
    """With ``A = I`` and unit prior variances the unbiased estimate is ``y`` and
    its error variance is the noise variance."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_instances):
        y = rng.standard_normal(L)
        sigma_n_sq = float(10 ** rng.uniform(-3, 0))
        step = mmse_step(y, np.eye(L), rng.standard_normal(L), np.ones(L), sigma_n_sq)
        worst = max(
            worst,
            float(np.max(np.abs(step.x_tilde - y))),
            float(np.max(np.abs(step.sigma_e_sq - sigma_n_sq))),
        )
    return CheckResult("identity channel exactness", worst, 1e-14)


def run_all() -> list:
    return [
        check_error_covariance(),
        check_soft_feedback(),
        check_soft_feedback_finite(),
        check_tsr_rewriting(),
        check_identity_channel(),
    ]

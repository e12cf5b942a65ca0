"""Recovery algorithms for discrete-valued sparse vectors.

All algorithms return a :class:`RecoveryResult` whose ``x_hat_discrete``
lies in ``{-1, 0, +1}^L``.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .estimators import (
    VARIANCE_FLOOR,
    extrinsic_combine,
    mmse_step,
    soft_feedback,
    threshold_hard,
    threshold_soft,
)
from .signal import SignalPrior, quantize_elementwise, quantize_sparsity_matched

log = logging.getLogger(__name__)

MATLAB_EPS = 2.220446049250313e-16


class GenieMode(str, Enum):
    NONE = "none"
    TRUE_EE = "true_ee"
    TRUE_DD = "true_dd"
    BOTH = "both"


class Quantizer(str, Enum):
    ELEMENTWISE = "elementwise"
    SPARSITY_MATCHED = "sparsity_matched"


@dataclass(frozen=True)
class RecoveryConfig:
    """Knobs shared by the recovery algorithms.

    ``final_quantizer=None`` means each algorithm's own default.
    ``early_exit_tol`` stops IMS/Q once the soft estimate moves less than
    this in max-norm; ``None`` disables it.
    ``tsr_variance`` selects the TSR linear-step variance reduction.
    ``"rescaled"`` (default) is ``(K/L) c^2 v^2 / (c^2 v + s_n)``, the z-domain
    update mapped back to ``x`` through ``v_z = c^2 v``. ``"printed"`` omits
    the ``1/c^2`` and is kept for comparison; the two agree when ``c^2 = 1``.
    """

    max_iters: int = 50
    stop_eps: float = MATLAB_EPS
    genie_mode: GenieMode = GenieMode.NONE
    final_quantizer: Quantizer | None = None
    ist_tau: float | None = None
    omp_iters: int | None = None
    early_exit_tol: float | None = 1e-9
    tsr_variance: str = "rescaled"
    trace: bool = False

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.stop_eps <= 0:
            raise ValueError("stop_eps must be positive")
        object.__setattr__(self, "genie_mode", GenieMode(self.genie_mode))
        if self.final_quantizer is not None:
            object.__setattr__(self, "final_quantizer", Quantizer(self.final_quantizer))
        if self.tsr_variance not in ("printed", "rescaled"):
            raise ValueError(f"unknown tsr_variance {self.tsr_variance!r}")

    def with_(self, **changes) -> "RecoveryConfig":
        return replace(self, **changes)


@dataclass
class RecoveryResult:
    x_hat_discrete: np.ndarray
    x_soft_final: np.ndarray
    iters_run: int
    diverged: bool = False
    trace: list = field(default_factory=list)


def _quantize(x_soft, prior: SignalPrior, quantizer: Quantizer) -> np.ndarray:
    if quantizer is Quantizer.SPARSITY_MATCHED:
        return quantize_sparsity_matched(x_soft, prior.s)
    return quantize_elementwise(x_soft, prior.alphabet)


def _matrix(ensemble):
    return getattr(ensemble, "A", ensemble)


def _noise_floor(sigma_n_sq: float) -> float:
    if sigma_n_sq <= 0:
        log.warning("sigma_n_sq=%g regularized to %g", sigma_n_sq, VARIANCE_FLOOR)
        return VARIANCE_FLOOR
    return sigma_n_sq


def ims_q(y, ensemble, sigma_n_sq, prior: SignalPrior, config: RecoveryConfig | None = None):
    """Iterated unbiased MMSE estimation with ternary soft feedback."""
    return _ims(y, ensemble, sigma_n_sq, prior, config or RecoveryConfig(), None)


def ims_q_genie(y, ensemble, sigma_n_sq, prior, config, x_true):
    """IMS/Q with the true instantaneous squared errors substituted for the
    estimated variances after the linear step, the soft step, or both."""
    return _ims(y, ensemble, sigma_n_sq, prior, config or RecoveryConfig(), np.asarray(x_true))


def _ims(y, ensemble, sigma_n_sq, prior, config, x_true):
    A = _matrix(ensemble)
    L = A.shape[1]
    quantizer = config.final_quantizer or Quantizer.ELEMENTWISE
    if prior.s == 0:
        zero = np.zeros(L)
        return RecoveryResult(zero, zero.copy(), 0)
    sigma_n_sq = _noise_floor(sigma_n_sq)
    mode = config.genie_mode if x_true is not None else GenieMode.NONE
    genie_ee = mode in (GenieMode.TRUE_EE, GenieMode.BOTH)
    genie_dd = mode in (GenieMode.TRUE_DD, GenieMode.BOTH)

    x_hat = np.zeros(L)
    sigma_d_sq = np.full(L, prior.s / L)
    trace = []
    it = 0
    for it in range(1, config.max_iters + 1):
        step = mmse_step(y, A, x_hat, sigma_d_sq, sigma_n_sq)
        sigma_e_sq = step.sigma_e_sq
        if genie_ee:
            sigma_e_sq = np.maximum((step.x_tilde - x_true) ** 2, VARIANCE_FLOOR)
        x_new, sigma_d_sq = soft_feedback(step.x_tilde, np.maximum(sigma_e_sq, VARIANCE_FLOOR), prior)
        if genie_dd:
            sigma_d_sq = (x_new - x_true) ** 2
        sigma_d_sq = np.maximum(sigma_d_sq, VARIANCE_FLOOR)
        if config.trace:
            trace.append(
                {"x_tilde": step.x_tilde, "sigma_e_sq": sigma_e_sq, "x_hat": x_new, "sigma_d_sq": sigma_d_sq}
            )
        delta = np.max(np.abs(x_new - x_hat))
        x_hat = x_new
        if config.early_exit_tol is not None and delta < config.early_exit_tol:
            break
    return RecoveryResult(_quantize(x_hat, prior, quantizer), x_hat, it, trace=trace)


def tsr_linear_step(ensemble, y, x_pri, var_pri: float, sigma_n_sq: float, variance_rule="rescaled"):
    """Linear half of TSR worked directly on ``x``.

    Returns the posterior mean and the average posterior variance.
    """
    U, c = ensemble.U, ensemble.c
    K, L = U.shape
    cbar = ensemble.c_bar_sq
    scaled = cbar * var_pri
    gain = scaled / (scaled + sigma_n_sq)
    x_post = x_pri + gain * (U.T @ (y - ensemble.A @ x_pri)) / c
    reduction = (K / L) * scaled**2 / (scaled + sigma_n_sq)
    if variance_rule == "rescaled":
        reduction /= cbar
    return x_post, var_pri - reduction


def tsr_q(y, ensemble, sigma_n_sq, prior: SignalPrior, config: RecoveryConfig | None = None):
    """Turbo signal recovery generalized to column-scaled partial orthogonal
    matrices, with ternary soft feedback and a final sparsity-matched quantizer."""
    config = config or RecoveryConfig()
    if not all(hasattr(ensemble, attr) for attr in ("U", "c", "A")):
        raise TypeError("tsr_q needs a MeasurementEnsemble carrying U and c")
    L = ensemble.L
    quantizer = config.final_quantizer or Quantizer.SPARSITY_MATCHED
    if prior.s == 0:
        zero = np.zeros(L)
        return RecoveryResult(zero, zero.copy(), 0)
    sigma_n_sq = _noise_floor(sigma_n_sq)

    x_a_pri = np.zeros(L)
    var_a_pri = prior.s / L
    x_b_post = np.zeros(L)
    best = x_b_post
    clamps = 0
    diverged = False
    trace = []
    it = 0
    for it in range(1, config.max_iters + 1):
        x_a_post, var_a_post = tsr_linear_step(
            ensemble, y, x_a_pri, var_a_pri, sigma_n_sq, config.tsr_variance
        )
        if not var_a_post > 0:
            var_a_post = VARIANCE_FLOOR
        x_b_pri, var_b_pri, gap_a = extrinsic_combine(x_a_post, var_a_post, x_a_pri, var_a_pri)

        x_b_post, var_b_each = soft_feedback(x_b_pri, var_b_pri, prior)
        var_b_post = max(float(np.mean(var_b_each)), VARIANCE_FLOOR)
        x_a_pri_next, var_a_pri_next, gap_b = extrinsic_combine(x_b_post, var_b_post, x_b_pri, var_b_pri)

        if config.trace:
            trace.append(
                {
                    "x_a_post": x_a_post,
                    "var_a_post": var_a_post,
                    "x_b_pri": x_b_pri,
                    "var_b_pri": var_b_pri,
                    "x_b_post": x_b_post,
                    "var_b_post": var_b_post,
                }
            )
        clamps = clamps + 1 if (gap_a or gap_b) else 0
        if clamps >= 2:
            diverged = True
            x_b_post = best
            break
        best = x_b_post
        x_a_pri, var_a_pri = x_a_pri_next, var_a_pri_next
        if var_a_pri < config.stop_eps:
            break
    return RecoveryResult(_quantize(x_b_post, prior, quantizer), x_b_post, it, diverged, trace)


def iht_q(y, A, prior: SignalPrior, config: RecoveryConfig | None = None):
    """Iterative hard thresholding followed by elementwise quantization."""
    config = config or RecoveryConfig()
    A = _matrix(A)
    x = np.zeros(A.shape[1])
    for _ in range(config.max_iters):
        x = threshold_hard(x + A.T @ (y - A @ x), prior.s)
    quantizer = config.final_quantizer or Quantizer.ELEMENTWISE
    return RecoveryResult(_quantize(x, prior, quantizer), x, config.max_iters)


def ist_q(y, A, prior: SignalPrior, config: RecoveryConfig | None = None):
    """Iterative soft thresholding with threshold ``config.ist_tau``."""
    config = config or RecoveryConfig()
    if config.ist_tau is None:
        raise ValueError("ist_q needs config.ist_tau")
    A = _matrix(A)
    x = np.zeros(A.shape[1])
    for _ in range(config.max_iters):
        x = threshold_soft(x + A.T @ (y - A @ x), config.ist_tau)
    quantizer = config.final_quantizer or Quantizer.SPARSITY_MATCHED
    return RecoveryResult(_quantize(x, prior, quantizer), x, config.max_iters)


def omp_q(y, A, prior: SignalPrior, config: RecoveryConfig | None = None):
    """Orthogonal matching pursuit for ``omp_iters`` steps, then nearest-symbol
    quantization trimmed to at most ``s`` nonzeros by soft magnitude."""
    config = config or RecoveryConfig()
    A = _matrix(A)
    K, L = A.shape
    n_steps = prior.s if config.omp_iters is None else config.omp_iters
    n_steps = min(n_steps, K)
    norms = np.linalg.norm(A, axis=0)
    norms[norms == 0] = np.inf
    support: list[int] = []
    coef = np.zeros(0)
    residual = np.asarray(y, dtype=float).copy()
    diverged = False
    for _ in range(n_steps):
        scores = np.abs(A.T @ residual) / norms
        scores[support] = -1.0
        support.append(int(np.argmax(scores)))
        sub = A[:, support]
        coef, _, rank, _ = np.linalg.lstsq(sub, y, rcond=None)
        if rank < len(support):
            support.pop()
            coef = np.linalg.lstsq(A[:, support], y, rcond=None)[0] if support else np.zeros(0)
            diverged = True
            break
        residual = y - sub @ coef
    x = np.zeros(L)
    x[support] = coef
    q = quantize_elementwise(x, prior.alphabet)
    nonzero = np.flatnonzero(q)
    if nonzero.size > prior.s:
        keep = np.zeros(L)
        keep[nonzero] = x[nonzero]
        q = quantize_sparsity_matched(keep, prior.s)
    return RecoveryResult(q, x, len(support), diverged)


def ml_oracle(y, A, prior: SignalPrior, budget: int = 1_000_000) -> np.ndarray:
    """Exhaustive minimizer of ``||y - A x||`` over ``s``-sparse +-1 vectors.

    Candidates are visited in lexicographic order of support, then of sign
    pattern; the first minimizer wins.
    """
    A = _matrix(A)
    L, s = A.shape[1], prior.s
    n_candidates = math.comb(L, s) * 2**s
    if n_candidates > budget:
        raise ValueError(f"{n_candidates} candidates exceed the budget of {budget}")
    y = np.asarray(y, dtype=float)
    signs = np.array(list(itertools.product((-1.0, 1.0), repeat=s))).T.reshape(s, -1)
    best_cost, best = np.inf, None
    for supp in itertools.combinations(range(L), s):
        costs = np.sum((y[:, None] - A[:, supp] @ signs) ** 2, axis=0)
        j = int(np.argmin(costs))
        if costs[j] < best_cost:
            best_cost, best = costs[j], (supp, signs[:, j])
    x = np.zeros(L)
    supp, vals = best
    x[list(supp)] = vals
    return x

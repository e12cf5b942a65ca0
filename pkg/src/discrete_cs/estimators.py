"""Estimation kernels: unbiased linear MMSE step, ternary soft feedback,
Gaussian extrinsic combining and the thresholding operators of IHT/IST."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cholesky, solve_triangular

from .signal import SignalPrior, _top_indices

VARIANCE_FLOOR = 1e-12
EXTRINSIC_CLAMP = 1e12


class NumericalBreakdown(ArithmeticError):
    """Raised when the MMSE cascade loses its positive diagonal."""


@dataclass(frozen=True)
class MmseStepResult:
    x_tilde: np.ndarray
    sigma_e_sq: np.ndarray
    K_diag: np.ndarray


def _as_matrix(A):
    return getattr(A, "A", A)


def mmse_step(y, A, x_hat, sigma_d_sq, sigma_n_sq: float) -> MmseStepResult:
    """One unbiased linear MMSE estimate of ``x`` given a soft prior estimate.

    ``sigma_d_sq`` holds the diagonal of the prior error covariance. The
    equalizer ``B = D A^T (A D A^T + sigma_n^2 I)^{-1}`` is applied through a
    Cholesky factor, the result is rescaled by ``1 / diag(B A)`` to remove the
    bias, and the per-element error variances follow from the diagonal of
    ``B A`` alone.
    """
    A = _as_matrix(A)
    y = np.asarray(y, dtype=float)
    x_hat = np.asarray(x_hat, dtype=float)
    if sigma_n_sq <= 0:
        raise ValueError(f"mmse_step needs sigma_n_sq > 0, got {sigma_n_sq}")
    d = np.maximum(np.asarray(sigma_d_sq, dtype=float), VARIANCE_FLOOR)
    d = np.broadcast_to(d, x_hat.shape)

    K = A.shape[0]
    Q = (A * d) @ A.T
    Q[np.diag_indices(K)] += sigma_n_sq
    try:
        chol = cholesky(Q, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalBreakdown("system matrix not positive definite") from exc

    # with Q = R R^T and V = R^-1 [A | r]: A^T Q^-1 A = V_A^T V_A, A^T Q^-1 r = V_A^T v_r
    residual = y - A @ x_hat
    V = solve_triangular(chol, np.column_stack((A, residual)), lower=True, check_finite=False)
    V_A, v_r = V[:, :-1], V[:, -1]
    k_diag = d * np.einsum("ki,ki->i", V_A, V_A)
    if np.any(k_diag <= 0) or not np.all(np.isfinite(k_diag)):
        raise NumericalBreakdown("cascade diagonal is not positive")
    correlation = V_A.T @ v_r

    x_tilde = x_hat + d * correlation / k_diag
    sigma_e_sq = d * (1.0 - k_diag) / k_diag
    return MmseStepResult(x_tilde=x_tilde, sigma_e_sq=sigma_e_sq, K_diag=k_diag)


def full_error_covariance(A, sigma_d_sq, sigma_n_sq: float) -> np.ndarray:
    """Error covariance of the unbiased MMSE estimate, all four terms.

    Uses explicit inverses on purpose; this is a reference for checking the
    diagonal returned by :func:`mmse_step`.
    """
    A = _as_matrix(A)
    Phi = np.diag(np.asarray(sigma_d_sq, dtype=float))
    inner = np.linalg.inv(A @ Phi @ A.T + sigma_n_sq * np.eye(A.shape[0]))
    B = Phi @ A.T @ inner
    Kc = B @ A
    W = np.diag(1.0 / np.diag(Kc))
    return (
        Phi
        + W @ Phi @ A.T @ inner @ A @ Phi @ W.T
        - W @ Phi @ A.T @ inner @ A @ Phi
        - Phi.T @ A.T @ inner @ A @ Phi.T @ W.T
    )


def soft_feedback(x_tilde, sigma_e_sq, prior: SignalPrior):
    """Posterior mean and variance of a ternary symbol seen through Gaussian noise.

    Works elementwise and broadcasts over ``x_tilde`` and ``sigma_e_sq``. The
    closed forms ``sinh(a) / (cosh(a) + b)`` and
    ``(1 + b cosh(a)) / (cosh(a) + b)^2`` with ``a = x / var`` and
    ``b = (L-s)/s * exp(1 / (2 var))`` are evaluated from the three
    log-weights with the largest one subtracted, so nothing overflows.
    """
    x = np.asarray(x_tilde, dtype=float)
    var = np.asarray(sigma_e_sq, dtype=float)
    x, var = np.broadcast_arrays(x, var)
    if prior.s == 0:
        return np.zeros(x.shape), np.zeros(x.shape)
    if np.any(var <= 0):
        raise ValueError("soft_feedback needs positive variances")

    # log-weights of +1 and -1 relative to the 0 hypothesis; x - 0.5 is formed
    # first so the ratio stays accurate for tiny variances
    if prior.s == prior.L:
        log_p, log_m = x / var, -x / var
        log_z = np.full(x.shape, -np.inf)
    else:
        offset = np.log(2.0 * (prior.L - prior.s) / prior.s)
        log_p = (x - 0.5) / var - offset
        log_m = (-x - 0.5) / var - offset
        log_z = np.zeros(x.shape)
    top = np.maximum(np.maximum(log_p, log_m), log_z)
    p = np.exp(log_p - top)
    m = np.exp(log_m - top)
    z = np.exp(log_z - top)
    total = p + m + z

    mean = (p - m) / total
    # E[x^2] - E[x]^2 written as a sum of non-negative terms
    variance = (4.0 * p * m + z * (p + m)) / total**2
    return mean, variance


def extrinsic_combine(x_post, sigma_post_sq: float, x_pri, sigma_pri_sq: float):
    """Remove the prior from a Gaussian posterior.

    Returns ``(x_ext, sigma_ext_sq, no_gain)``. When the posterior carries no
    more information than the prior the variance is clamped to ``1e12``,
    the posterior mean is passed through and ``no_gain`` is True.
    """
    if sigma_post_sq <= 0 or sigma_pri_sq <= 0:
        raise ValueError("extrinsic_combine needs positive variances")
    x_post = np.asarray(x_post, dtype=float)
    x_pri = np.asarray(x_pri, dtype=float)
    precision = 1.0 / sigma_post_sq - 1.0 / sigma_pri_sq
    if precision <= 1e-12:
        return x_post.copy(), EXTRINSIC_CLAMP, True
    sigma_ext_sq = 1.0 / precision
    x_ext = sigma_ext_sq * (x_post / sigma_post_sq - x_pri / sigma_pri_sq)
    return x_ext, sigma_ext_sq, False


def threshold_hard(v, s: int) -> np.ndarray:
    """Keep the ``s`` largest-magnitude entries (lower index wins ties)."""
    v = np.asarray(v, dtype=float)
    out = np.zeros_like(v)
    idx = _top_indices(v, s)
    out[idx] = v[idx]
    return out


def threshold_soft(v, tau: float) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    return np.sign(v) * np.maximum(np.abs(v) - tau, 0.0)

"""Measurement ensembles ``A = U C`` and the noisy linear channel ``y = A x + n``."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.fft import dct


@dataclass(frozen=True)
class MeasurementEnsemble:
    """A partial-orthogonal measurement matrix with its factorization.

    ``U`` holds ``K`` distinct rows of an orthogonal ``L x L`` matrix and
    ``c`` the positive column scalings, so that ``A = U * c`` column-wise.
    """

    A: np.ndarray
    U: np.ndarray
    c: np.ndarray
    rows: np.ndarray | None = None

    @property
    def K(self) -> int:
        return self.A.shape[0]

    @property
    def L(self) -> int:
        return self.A.shape[1]

    @property
    def c_bar_sq(self) -> float:
        return float(np.mean(self.c**2))

    @classmethod
    def from_rows(cls, M: np.ndarray, rows, normalize: bool = True) -> "MeasurementEnsemble":
        rows = np.asarray(rows)
        U = M[rows]
        col_energy = np.sum(U**2, axis=0)
        if normalize:
            if np.any(col_energy <= 0):
                raise ValueError("degenerate all-zero column in selected rows")
            c = 1.0 / np.sqrt(col_energy)
        else:
            c = np.ones(U.shape[1])
        return cls(A=U * c, U=U, c=c, rows=rows)

    def save(self, path) -> None:
        """Write a text file: header ``K L``, the scalings ``c`` and ``U`` row-major."""
        path = Path(path)
        with path.open("w") as fh:
            fh.write(f"# discrete_cs ensemble v1\n{self.K} {self.L}\n")
            np.savetxt(fh, self.c[None, :], fmt="%.17g")
            np.savetxt(fh, self.U, fmt="%.17g")

    @classmethod
    def load(cls, path) -> "MeasurementEnsemble":
        path = Path(path)
        with path.open() as fh:
            header = fh.readline()
            if not header.startswith("# discrete_cs ensemble v1"):
                raise ValueError(f"{path}: not an ensemble file")
            K, L = (int(t) for t in fh.readline().split())
            data = np.loadtxt(fh, ndmin=2)
        if data.shape != (K + 1, L):
            raise ValueError(f"{path}: expected {(K + 1, L)} values, got {data.shape}")
        c, U = data[0], data[1:]
        return cls(A=U * c, U=U, c=c)


def build_svd_ensemble(K: int, L: int, rng: np.random.Generator, normalize: bool = True):
    """Random rows of the left singular factor of a square Gaussian matrix.

    With ``normalize`` the columns of ``A`` are scaled to unit norm.
    """
    if not 0 < K <= L:
        raise ValueError(f"need 0 < K <= L, got K={K}, L={L}")
    G = rng.standard_normal((L, L))
    M, _, _ = np.linalg.svd(G)
    rows = np.sort(rng.choice(L, size=K, replace=False))
    return MeasurementEnsemble.from_rows(M, rows, normalize=normalize)


def build_dct_ensemble(K: int, L: int, rng: np.random.Generator, normalize: bool = True):
    """Random rows of the orthonormal DCT-II matrix."""
    if not 0 < K <= L:
        raise ValueError(f"need 0 < K <= L, got K={K}, L={L}")
    M = dct(np.eye(L), norm="ortho", axis=0)
    rows = np.sort(rng.choice(L, size=K, replace=False))
    return MeasurementEnsemble.from_rows(M, rows, normalize=normalize)


@dataclass(frozen=True)
class ChannelOutput:
    y: np.ndarray
    sigma_n_sq: float


def apply_channel(ensemble, x, sigma_n_sq: float, rng: np.random.Generator) -> ChannelOutput:
    if sigma_n_sq < 0:
        raise ValueError(f"noise variance must be non-negative, got {sigma_n_sq}")
    A = getattr(ensemble, "A", ensemble)
    x = np.asarray(x, dtype=float)
    if A.shape[1] != x.size:
        raise ValueError(f"matrix has {A.shape[1]} columns but x has length {x.size}")
    noise = np.sqrt(sigma_n_sq) * rng.standard_normal(A.shape[0])
    return ChannelOutput(y=A @ x + noise, sigma_n_sq=float(sigma_n_sq))


def noise_level_db_to_variance(level_db: float) -> float:
    """Noise variance for a noise level ``1/sigma_n^2`` given in dB."""
    return 10.0 ** (-level_db / 10.0)

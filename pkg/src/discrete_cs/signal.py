"""Discrete sparse signal prior, signal generation and quantizers."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

TERNARY = (-1.0, 0.0, 1.0)


@dataclass(frozen=True)
class SignalPrior:
    """Three-point prior over ``{-1, 0, +1}`` with exactly ``s`` nonzeros out of ``L``.

    Each element is -1 or +1 with probability ``s / (2 L)`` each and 0 otherwise.
    """

    L: int
    s: int
    alphabet: tuple = field(default=TERNARY)

    def __post_init__(self):
        if self.L < 1:
            raise ValueError(f"L must be positive, got {self.L}")
        if not 0 <= self.s <= self.L:
            raise ValueError(f"need 0 <= s <= L, got s={self.s}, L={self.L}")
        alphabet = tuple(sorted(float(a) for a in self.alphabet))
        if 0.0 not in alphabet:
            raise ValueError("alphabet must contain 0")
        object.__setattr__(self, "alphabet", alphabet)

    @property
    def probabilities(self) -> dict:
        half = 0.5 * self.s / self.L
        return {-1.0: half, 0.0: (self.L - self.s) / self.L, 1.0: half}

    @property
    def variance(self) -> float:
        return self.s / self.L

    @property
    def activity(self) -> float:
        return self.s / self.L


def generate_sparse_signal(prior: SignalPrior, rng: np.random.Generator) -> np.ndarray:
    """Draw a vector with a uniformly random support of size ``s`` and i.i.d. +-1 values."""
    x = np.zeros(prior.L)
    support = rng.choice(prior.L, size=prior.s, replace=False)
    x[support] = rng.choice((-1.0, 1.0), size=prior.s)
    return x


def quantize_elementwise(v, alphabet=TERNARY) -> np.ndarray:
    """Map every entry of ``v`` to the nearest symbol of ``alphabet``.

    Ties go to the symbol of smaller magnitude, then to the negative one, so
    the midpoint 0.5 maps to 0 and the quantizer stays odd for symmetric
    alphabets.
    """
    v = np.asarray(v, dtype=float)
    symbols = np.asarray(alphabet, dtype=float)
    # lexicographic priority: magnitude first, then value
    symbols = symbols[np.lexsort((symbols, np.abs(symbols)))]
    dist = np.abs(v[..., None] - symbols)
    # argmin returns the first minimum, i.e. the preferred symbol on a tie
    return symbols[np.argmin(dist, axis=-1)]


def _top_indices(v: np.ndarray, s: int) -> np.ndarray:
    # stable sort on -|v| keeps lower indices first among equal magnitudes
    return np.argsort(-np.abs(v), kind="stable")[:s]


def quantize_sparsity_matched(v, s: int) -> np.ndarray:
    """Keep the signs of the ``s`` largest-magnitude entries and zero the rest."""
    v = np.asarray(v, dtype=float)
    if not 0 <= s <= v.size:
        raise ValueError(f"sparsity {s} out of range for length {v.size}")
    out = np.zeros_like(v)
    idx = _top_indices(v, s)
    out[idx] = np.where(v[idx] < 0, -1.0, 1.0)
    return out

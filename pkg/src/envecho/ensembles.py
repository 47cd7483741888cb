"""Seeded random Hamiltonians and states.

Every builder takes a ``numpy.random.Generator`` (or an integer seed), so
results depend only on the seed and never on global RNG state.
"""
from __future__ import annotations

import numpy as np


def rng_from(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def gue(dim: int, seed, variance: float = 1.0) -> np.ndarray:
    """GUE matrix with ``E|H_ij|^2 = variance`` for every entry.

    Built as ``(A + A^dag) / 2`` from a complex Gaussian ``A``, which is
    Hermitian to the last bit.
    """
    rng = rng_from(seed)
    s = np.sqrt(variance)
    A = rng.normal(scale=s, size=(dim, dim)) + 1j * rng.normal(scale=s, size=(dim, dim))
    return (A + A.conj().T) / 2


def random_state(dim: int, seed) -> np.ndarray:
    """Haar-random unit vector."""
    rng = rng_from(seed)
    psi = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return psi / np.linalg.norm(psi)


def commuting_pair(dim: int, seed, variance: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Two Hermitian matrices that share a random eigenbasis, hence commute."""
    rng = rng_from(seed)
    Q, _ = np.linalg.qr(rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim)))
    d1 = rng.normal(scale=np.sqrt(variance), size=dim)
    d2 = rng.normal(scale=np.sqrt(variance), size=dim)
    A = (Q * d1) @ Q.conj().T
    B = (Q * d2) @ Q.conj().T
    return (A + A.conj().T) / 2, (B + B.conj().T) / 2

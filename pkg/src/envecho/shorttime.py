"""Short-time decoherence for a coupling ``S (x) V``.

Dropping the central Hamiltonian leaves ``H ~ S (x) V + H_env``, which
conserves the eigenstates of ``S``.  The eigenvalue ``s`` then acts as a
coupling strength: branch ``s`` evolves under ``H_env + s V`` and the
coherence between ``|s>`` and ``|s'>`` is an echo amplitude with
perturbation ``(s - s') V``.  :func:`shorttime_error` measures how far the
full dynamics (with ``H_c``) has drifted from that picture.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .dephasing import DephasingModel
from .errors import DimensionError, InvariantViolation
from .linalg import (
    CONSTRUCTION_TOL,
    CompositeSpace,
    SpectralPropagator,
    check_hermitian,
    kron,
    overlap,
    partial_trace_env,
    propagator,
)

SPECTRUM_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class ShortTimeModel:
    H_c: np.ndarray
    S: np.ndarray
    H_env: np.ndarray
    V_env: np.ndarray

    def __post_init__(self):
        H_c, S = check_hermitian(self.H_c), check_hermitian(self.S)
        H_env, V_env = check_hermitian(self.H_env), check_hermitian(self.V_env)
        if H_c.shape != S.shape:
            raise DimensionError(f"H_c {H_c.shape} and S {S.shape} differ")
        if H_env.shape != V_env.shape:
            raise DimensionError(f"H_env {H_env.shape} and V_env {V_env.shape} differ")
        for name, val in (("H_c", H_c), ("S", S), ("H_env", H_env), ("V_env", V_env)):
            object.__setattr__(self, name, val)

    @property
    def space(self) -> CompositeSpace:
        return CompositeSpace(self.S.shape[0], self.H_env.shape[0])

    @cached_property
    def _spectrum(self):
        return np.linalg.eigh(self.S)

    @property
    def eigenvalues(self) -> np.ndarray:
        return self._spectrum[0]

    def eigenstate(self, s: float) -> np.ndarray:
        """First eigenvector of ``S`` whose eigenvalue matches ``s``."""
        return self._spectrum[1][:, self._level(s)]

    def _level(self, s: float) -> int:
        hits = np.flatnonzero(np.abs(self.eigenvalues - s) <= SPECTRUM_TOL)
        if hits.size == 0:
            raise ValueError(f"{s} is not an eigenvalue of S (spectrum {self.eigenvalues})")
        return int(hits[0])

    def joint_hamiltonian(self, include_central: bool = True) -> np.ndarray:
        self.space.check_cap()
        n_c, d = self.space.dim_central, self.space.dim_env
        H = kron(self.S, self.V_env) + kron(np.eye(n_c), self.H_env)
        if include_central:
            H = H + kron(self.H_c, np.eye(d))
        return H

    def induced_dephasing_model(self) -> DephasingModel:
        """Dephasing model in the ``S`` eigenbasis with ``eps = 0`` and ``V_j = s_j V_env``."""
        s = self.eigenvalues
        return DephasingModel(np.zeros(s.size), self.H_env, tuple(sj * self.V_env for sj in s))


def branch_hamiltonian(model: ShortTimeModel, s: float) -> np.ndarray:
    model._level(s)
    return model.H_env + s * model.V_env


def shorttime_coherence(model: ShortTimeModel, s: float, s_prime: float, B0, t: float) -> complex:
    """``rho_ss'(t) = <B_s'(t)|B_s(t)> / 2`` for the initial state ``(|s> + |s'>)/sqrt(2) (x) |B0>``.

    The branch overlap and the echo element ``<B0|U0^dag U|B0>`` with
    ``H0 = H_env + s' V`` and ``H = H0 + (s - s') V`` are both computed;
    disagreement beyond 1e-12 raises :class:`InvariantViolation`.
    """
    B0 = np.asarray(B0, dtype=complex)
    H_s = branch_hamiltonian(model, s)
    H0 = branch_hamiltonian(model, s_prime)
    B_s = SpectralPropagator(H_s).apply(B0, t)
    B_sp = SpectralPropagator(H0).apply(B0, t)
    by_branches = overlap(B_sp, B_s)

    H = H0 + (s - s_prime) * model.V_env
    M = propagator(H0, t).conj().T @ propagator(H, t)
    by_echo = complex(np.vdot(B0, M @ B0))
    if abs(by_branches - by_echo) > CONSTRUCTION_TOL:
        raise InvariantViolation(f"branch overlap and echo element differ by {abs(by_branches - by_echo):.3e}")
    return 0.5 * by_branches


def exact_coherence(model: ShortTimeModel, s: float, s_prime: float, B0, times,
                    include_central: bool = True) -> np.ndarray:
    """``<s|rho_c(t)|s'>`` from full joint evolution and a partial trace."""
    if abs(s - s_prime) <= SPECTRUM_TOL:
        raise ValueError("need two distinct eigenvalues s != s'")
    ket_s, ket_sp = model.eigenstate(s), model.eigenstate(s_prime)
    central = (ket_s + ket_sp) / np.sqrt(2)
    psi0 = np.kron(central, np.asarray(B0, dtype=complex))
    prop = SpectralPropagator(model.joint_hamiltonian(include_central))
    states = prop.evolve(psi0, np.atleast_1d(np.asarray(times, dtype=float)))
    out = np.array([
        np.vdot(ket_s, partial_trace_env(psi, model.space) @ ket_sp) for psi in states
    ])
    return complex(out[0]) if np.ndim(times) == 0 else out


def shorttime_error(model: ShortTimeModel, s: float, s_prime: float, B0, t: float) -> float:
    """``|short-time coherence - exact coherence with H_c|`` at time ``t``."""
    approx = shorttime_coherence(model, s, s_prime, B0, t)
    return float(abs(approx - exact_coherence(model, s, s_prime, B0, t)))

"""Energy-conserving ("dephasing") coupling of a central system to an environment.

The joint Hamiltonian is block diagonal in the central eigenbasis,

    H = sum_j |j><j| (x) (eps_j + H_env + V_j),

so each central level ``j`` drags its own copy of the environment state
along under ``H_env + V_j``.  Coherences of the central system are then
overlaps of these branch states, i.e. fidelity amplitudes of an echo in
the environment.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .ensembles import gue, rng_from
from .errors import DimensionError
from .linalg import (
    CompositeSpace,
    SpectralPropagator,
    as_state,
    check_hermitian,
    overlap,
    partial_trace_env,
    propagator,
)


@dataclass(frozen=True, eq=False)
class DephasingModel:
    eps: np.ndarray
    H_env: np.ndarray
    V: tuple
    # proportionality factors when every V_j = f_j * H_env, else None
    f: np.ndarray | None = None

    def __post_init__(self):
        eps = np.asarray(self.eps, dtype=float).reshape(-1)
        H_env = check_hermitian(self.H_env)
        V = tuple(check_hermitian(v) for v in self.V)
        if len(V) != eps.size:
            raise DimensionError(f"{eps.size} central levels but {len(V)} couplings")
        for v in V:
            if v.shape != H_env.shape:
                raise DimensionError(f"coupling of shape {v.shape} does not match H_env {H_env.shape}")
        object.__setattr__(self, "eps", eps)
        object.__setattr__(self, "H_env", H_env)
        object.__setattr__(self, "V", V)
        if self.f is not None:
            object.__setattr__(self, "f", np.asarray(self.f, dtype=float).reshape(-1))

    @property
    def n_c(self) -> int:
        return self.eps.size

    @property
    def dim_env(self) -> int:
        return self.H_env.shape[0]

    @property
    def space(self) -> CompositeSpace:
        return CompositeSpace(self.n_c, self.dim_env)

    def branch_hamiltonian(self, j: int) -> np.ndarray:
        self._check_level(j)
        return self.H_env + self.V[j]

    @cached_property
    def branch_propagators(self) -> tuple:
        return tuple(SpectralPropagator(self.H_env + v) for v in self.V)

    def _check_level(self, j: int) -> None:
        if not 0 <= j < self.n_c:
            raise IndexError(f"central level {j} out of range 0..{self.n_c - 1}")


@dataclass(frozen=True, eq=False)
class InitialProduct:
    """Product state ``(sum_j a_j |j>) (x) |chi0>``."""

    a: np.ndarray
    chi0: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "a", as_state(self.a))
        object.__setattr__(self, "chi0", as_state(self.chi0))

    def joint_state(self) -> np.ndarray:
        return np.kron(self.a, self.chi0)

    def rho0(self, j: int, k: int) -> complex:
        return complex(self.a[j] * np.conj(self.a[k]))


def gue_model(n_c: int, dim_env: int, seed, eps=None, env_variance: float = 1.0,
              coupling_variance: float = 0.01) -> DephasingModel:
    """Random model with GUE ``H_env`` and independent GUE couplings ``V_j``."""
    rng = rng_from(seed)
    H_env = gue(dim_env, rng, env_variance)
    V = tuple(gue(dim_env, rng, coupling_variance) for _ in range(n_c))
    if eps is None:
        eps = np.arange(n_c, dtype=float)
    return DephasingModel(eps, H_env, V)


def proportional_model(eps, H_env, f) -> DephasingModel:
    """Model with couplings ``V_j = f_j * H_env``."""
    H_env = check_hermitian(H_env)
    f = np.asarray(f, dtype=float).reshape(-1)
    return DephasingModel(eps, H_env, tuple(fj * H_env for fj in f), f=f)


def central_hamiltonian(model: DephasingModel) -> np.ndarray:
    return np.diag(model.eps).astype(complex)


def build_joint(model: DephasingModel) -> np.ndarray:
    space = model.space
    space.check_cap()
    d = model.dim_env
    H = np.zeros((space.dim, space.dim), dtype=complex)
    eye = np.eye(d)
    for j in range(model.n_c):
        H[j * d:(j + 1) * d, j * d:(j + 1) * d] = model.eps[j] * eye + model.H_env + model.V[j]
    return H


def evolve_branch(model: DephasingModel, chi0, j: int, t: float) -> np.ndarray:
    """``exp(-i (H_env + V_j) t) |chi0>``; the central phase is not included."""
    model._check_level(j)
    return model.branch_propagators[j].apply(chi0, t)


def coherence_factorized(model: DephasingModel, init: InitialProduct, j: int, k: int, t: float) -> complex:
    """``rho_jk(t) = exp(-i (eps_j - eps_k) t) <chi_k(t)|chi_j(t)> rho_jk(0)``."""
    model._check_level(j)
    model._check_level(k)
    chi_j = evolve_branch(model, init.chi0, j, t)
    chi_k = evolve_branch(model, init.chi0, k, t)
    phase = np.exp(-1j * (model.eps[j] - model.eps[k]) * t)
    return complex(phase * overlap(chi_k, chi_j) * init.rho0(j, k))


def reduced_density_factorized(model: DephasingModel, init: InitialProduct, times) -> np.ndarray:
    """Central density matrices on a time grid from branch overlaps, shape ``(n_t, n_c, n_c)``."""
    times = np.asarray(times, dtype=float)
    branches = np.stack([p.evolve(init.chi0, times) for p in model.branch_propagators], axis=1)
    # overlaps[t, j, k] = <chi_k(t)|chi_j(t)>
    overlaps = np.einsum("tkm,tjm->tjk", branches.conj(), branches)
    de = model.eps[:, None] - model.eps[None, :]
    phases = np.exp(-1j * times[:, None, None] * de[None])
    return phases * overlaps * np.outer(init.a, init.a.conj())[None]


def reduced_density_joint(model: DephasingModel, init: InitialProduct, times) -> np.ndarray:
    """Brute-force reference: evolve the joint state, then trace out the environment."""
    times = np.asarray(times, dtype=float)
    states = SpectralPropagator(build_joint(model)).evolve(init.joint_state(), times)
    return np.stack([partial_trace_env(psi, model.space) for psi in states])


def echo_amplitude(model: DephasingModel, chi0, j: int, k: int, t: float) -> complex:
    """``<chi0| U0(-t) U(t) |chi0>`` with ``H0 = H_env + V_k`` and ``H = H0 + V_j - V_k``."""
    model._check_level(j)
    model._check_level(k)
    if j == k:
        # identical echo Hamiltonians: M(t) is the identity
        return 1.0 + 0j
    H0 = model.H_env + model.V[k]
    H = H0 + (model.V[j] - model.V[k])
    M = propagator(H0, -t) @ propagator(H, t)
    chi0 = np.asarray(chi0, dtype=complex)
    return complex(np.vdot(chi0, M @ chi0))


def echo_amplitude_series(model: DephasingModel, chi0, j: int, k: int, times) -> np.ndarray:
    """:func:`echo_amplitude` on a grid, reusing one eigendecomposition per echo Hamiltonian."""
    model._check_level(j)
    model._check_level(k)
    H0 = model.H_env + model.V[k]
    P0 = SpectralPropagator(H0)
    P = SpectralPropagator(H0 + (model.V[j] - model.V[k]))
    chi0 = np.asarray(chi0, dtype=complex)
    return np.array([np.vdot(chi0, P0.apply(P.apply(chi0, t), -t)) for t in np.asarray(times, dtype=float)])


def rescaled_autocorrelation(model: DephasingModel, chi0, j: int, k: int, t: float) -> complex:
    """Autocorrelation of ``chi0`` under ``H_env`` at the rescaled time ``(f_j - f_k) t``.

    Equals ``<chi_k(t)|chi_j(t)>`` when every ``V_j = f_j H_env``.
    """
    if model.f is None:
        raise ValueError("model was not built with proportional couplings V_j = f_j H_env")
    model._check_level(j)
    model._check_level(k)
    for fj, v in zip(model.f, model.V):
        if np.max(np.abs(v - fj * model.H_env)) > 1e-12 * max(1.0, np.max(np.abs(model.H_env))):
            raise ValueError("couplings are not proportional to H_env")
    chi0 = np.asarray(chi0, dtype=complex)
    return overlap(chi0, propagator(model.H_env, (model.f[j] - model.f[k]) * t) @ chi0)


def pi_pulse_coherence(model: DephasingModel, chi0, t: float, a=None) -> complex:
    """Coherence after a refocusing pi-pulse at ``t/2``.

    Returns ``<chi0| U2^dag U1^dag U2 U1 |chi0> rho_12(0)`` with
    ``U_i = exp(-i (H_env + V_i) t / 2)``; central phases cancel.  Levels
    1 and 2 are indices 0 and 1.  ``a`` defaults to the equal superposition.
    """
    if model.n_c != 2:
        raise ValueError(f"pi-pulse protocol needs two central levels, model has {model.n_c}")
    if a is None:
        a = np.full(2, 1 / np.sqrt(2))
    a = as_state(a)
    P1, P2 = model.branch_propagators
    U1, U2 = P1.unitary(t / 2), P2.unitary(t / 2)
    chi0 = np.asarray(chi0, dtype=complex)
    amp = np.vdot(chi0, U2.conj().T @ U1.conj().T @ U2 @ U1 @ chi0)
    return complex(amp * a[0] * np.conj(a[1]))


def pi_pulse_joint(model: DephasingModel, init: InitialProduct, times) -> np.ndarray:
    """Joint-space reference for the pi-pulse protocol, central rho(t) per time.

    The pulse swaps the two central levels at ``t/2``; a second swap at ``t``
    restores the original labels before the partial trace.
    """
    if model.n_c != 2:
        raise ValueError(f"pi-pulse protocol needs two central levels, model has {model.n_c}")
    prop = SpectralPropagator(build_joint(model))
    d = model.dim_env
    out = []
    for t in np.asarray(times, dtype=float):
        psi = prop.apply(init.joint_state(), t / 2)
        psi = np.concatenate([psi[d:], psi[:d]])
        psi = prop.apply(psi, t / 2)
        psi = np.concatenate([psi[d:], psi[:d]])
        out.append(partial_trace_env(psi, model.space))
    return np.stack(out)

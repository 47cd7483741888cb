"""Dense complex linear algebra on a central (x) environment product space.

Joint vectors use central-index-major layout: the amplitude of
``|j> (x) |m>`` sits at ``j * dim_env + m``.  Time is measured in units
with hbar = 1, so a Hamiltonian ``H`` generates ``exp(-i H t)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, NotHermitianError

MAX_JOINT_DIM = 4096

# tolerance tiers
CONSTRUCTION_TOL = 1e-12
DYNAMICAL_TOL = 1e-10
TRUNCATION_TOL = 1e-6


@dataclass(frozen=True)
class CompositeSpace:
    dim_central: int
    dim_env: int

    def __post_init__(self):
        if self.dim_central < 1 or self.dim_env < 1:
            raise DimensionError(f"dimensions must be positive, got {self.dim_central}x{self.dim_env}")

    @property
    def dim(self) -> int:
        return self.dim_central * self.dim_env

    def index(self, j: int, m: int) -> int:
        return j * self.dim_env + m

    def check_cap(self, max_dim: int = MAX_JOINT_DIM) -> None:
        if self.dim > max_dim:
            raise DimensionError(f"joint dimension {self.dim} exceeds cap {max_dim}")


def check_hermitian(H, tol: float = CONSTRUCTION_TOL) -> np.ndarray:
    """Return ``H`` as a complex square array, raising if it is not Hermitian.

    The tolerance is absolute for matrices with entries of order one and
    scales with the largest entry otherwise.
    """
    H = np.asarray(H, dtype=complex)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {H.shape}")
    scale = max(1.0, float(np.max(np.abs(H)))) if H.size else 1.0
    dev = float(np.max(np.abs(H - H.conj().T))) if H.size else 0.0
    if dev > tol * scale:
        raise NotHermitianError(f"matrix is not Hermitian (max |H - H^dag| = {dev:.3e})")
    return H


def as_state(psi, tol: float = CONSTRUCTION_TOL) -> np.ndarray:
    """Return ``psi`` as a complex vector, raising unless it has unit norm."""
    psi = np.asarray(psi, dtype=complex)
    if psi.ndim != 1:
        raise DimensionError(f"state must be a vector, got shape {psi.shape}")
    norm = np.linalg.norm(psi)
    if abs(norm - 1.0) > tol:
        raise ValueError(f"state is not normalized (norm = {norm!r})")
    return psi


def normalized(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    return psi / np.linalg.norm(psi)


def kron(A, B, max_dim: int = MAX_JOINT_DIM) -> np.ndarray:
    """Tensor product with entry ``[(i*n + k), (j*n + l)] = A[i, j] * B[k, l]``."""
    A = np.asarray(A)
    B = np.asarray(B)
    if A.ndim != 2 or B.ndim != 2:
        raise DimensionError("kron expects two matrices")
    rows = A.shape[0] * B.shape[0]
    cols = A.shape[1] * B.shape[1]
    if max(rows, cols) > max_dim:
        raise DimensionError(f"product dimension {max(rows, cols)} exceeds cap {max_dim}")
    return np.kron(A, B)


class SpectralPropagator:
    """Reusable ``exp(-i H t)`` built from one Hermitian eigendecomposition.

    The decomposition costs O(dim^3) once; each later time costs O(dim^2)
    for a state and O(dim^3) only when the full matrix is requested.
    """

    def __init__(self, H):
        H = check_hermitian(H)
        self.dim = H.shape[0]
        self.energies, self.vectors = np.linalg.eigh(H)

    def phases(self, t: float) -> np.ndarray:
        return np.exp(-1j * self.energies * t)

    def unitary(self, t: float) -> np.ndarray:
        Q = self.vectors
        return (Q * self.phases(t)) @ Q.conj().T

    def apply(self, psi, t: float) -> np.ndarray:
        psi = np.asarray(psi, dtype=complex)
        if psi.shape[0] != self.dim:
            raise DimensionError(f"state of length {psi.shape[0]} does not match dimension {self.dim}")
        Q = self.vectors
        return Q @ (self.phases(t) * (Q.conj().T @ psi))

    def evolve(self, psi, times) -> np.ndarray:
        """States at every time in ``times``, one row per time."""
        psi = np.asarray(psi, dtype=complex)
        if psi.shape[0] != self.dim:
            raise DimensionError(f"state of length {psi.shape[0]} does not match dimension {self.dim}")
        times = np.asarray(times, dtype=float)
        coeffs = self.vectors.conj().T @ psi
        phases = np.exp(-1j * np.outer(times, self.energies))
        return (phases * coeffs) @ self.vectors.T


def propagator(H, t: float) -> np.ndarray:
    """``exp(-i H t)`` by spectral decomposition; negative ``t`` runs backwards."""
    if not np.isfinite(t):
        raise ValueError(f"time must be finite, got {t}")
    return SpectralPropagator(H).unitary(t)


def partial_trace_env(psi, space: CompositeSpace) -> np.ndarray:
    """Reduced central density matrix ``rho[j, k] = sum_m psi[j, m] conj(psi[k, m])``."""
    psi = np.asarray(psi, dtype=complex)
    if psi.shape != (space.dim,):
        raise DimensionError(f"state of shape {psi.shape} does not live on a {space.dim_central}x{space.dim_env} space")
    blocks = psi.reshape(space.dim_central, space.dim_env)
    return blocks @ blocks.conj().T


def overlap(phi, psi) -> complex:
    """Inner product ``<phi|psi>``, antilinear in the first argument."""
    phi = np.asarray(phi, dtype=complex)
    psi = np.asarray(psi, dtype=complex)
    if phi.shape != psi.shape or phi.ndim != 1:
        raise DimensionError(f"cannot take overlap of shapes {phi.shape} and {psi.shape}")
    return complex(np.vdot(phi, psi))


def unitarity_defect(U) -> float:
    U = np.asarray(U)
    return float(np.max(np.abs(U.conj().T @ U - np.eye(U.shape[0]))))


def check_density_matrix(rho, tol: float = DYNAMICAL_TOL) -> np.ndarray:
    """Raise unless ``rho`` is Hermitian, unit-trace and positive semidefinite."""
    rho = check_hermitian(rho)
    tr = np.trace(rho)
    if abs(tr - 1.0) > tol:
        raise ValueError(f"trace of density matrix is {tr}")
    lowest = np.linalg.eigvalsh(rho)[0]
    if lowest < -tol:
        raise ValueError(f"density matrix has negative eigenvalue {lowest:.3e}")
    return rho

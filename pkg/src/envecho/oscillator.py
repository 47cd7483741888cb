"""Central harmonic oscillator coupled bilinearly to a zero-temperature bath.

    H = Omega a^dag a + sum_l omega_l b_l^dag b_l + sum_l (g_l a b_l^dag + g_l^* a^dag b_l)

Products of coherent states stay products of coherent states, with labels
following the classical (linear) equations of motion

    i dz/dt      = Omega z + sum_l g_l^* beta_l
    i dbeta_l/dt = omega_l beta_l + g_l z.

A cat state ``(|z1> + |z2>) (x) |0>`` therefore splits into two branches
``|z_j(t)> (x) |B_j(t)>`` and the central coherence is carried by the bath
overlap ``<B_2|B_1>``.  For real couplings this is the textbook model.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, IntegratorAccuracyError, TruncationError
from .linalg import MAX_JOINT_DIM, SpectralPropagator, check_hermitian

EXCITATION_DRIFT_LIMIT = 1e-6
TRUNCATION_DEFICIT = 1e-8
ECHO_STEP_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class OscillatorBathModel:
    Omega: float
    omega: np.ndarray
    g: np.ndarray
    fock_cutoff: int = 20

    def __post_init__(self):
        omega = np.asarray(self.omega, dtype=float).reshape(-1)
        g = np.asarray(self.g).reshape(-1)
        g = g.astype(complex) if np.iscomplexobj(g) else g.astype(float)
        if omega.size < 1:
            raise ValueError("bath needs at least one mode")
        if g.shape != omega.shape:
            raise DimensionError(f"{omega.size} bath frequencies but {g.size} couplings")
        if not (np.all(np.isfinite(omega)) and np.all(np.isfinite(g)) and np.isfinite(self.Omega)):
            raise ValueError("frequencies and couplings must be finite")
        if self.fock_cutoff < 2:
            raise ValueError("fock_cutoff must be at least 2")
        object.__setattr__(self, "Omega", float(self.Omega))
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "g", g)

    @property
    def L(self) -> int:
        return self.omega.size

    @property
    def max_frequency(self) -> float:
        return float(max(abs(self.Omega), np.max(np.abs(self.omega))))

    def coupling_matrix(self) -> np.ndarray:
        """Hermitian generator ``M`` of the label flow ``i dx/dt = M x``, ``x = (z, beta)``."""
        M = np.zeros((self.L + 1, self.L + 1), dtype=complex)
        M[0, 0] = self.Omega
        M[0, 1:] = np.conj(self.g)
        M[1:, 0] = self.g
        M[1:, 1:] = np.diag(self.omega)
        return M


@dataclass(frozen=True, eq=False)
class GaussianBranch:
    """Coherent labels of one branch at time ``t``.

    ``phi`` is the phase picked up by the bath state when it is driven by
    ``z(t)`` alone, see :func:`driven_echo_amplitude`.  It never enters the
    central reduced density matrix.
    """

    t: float
    z: complex
    beta: np.ndarray
    phi: float

    @property
    def excitation(self) -> float:
        return float(abs(self.z) ** 2 + np.sum(np.abs(self.beta) ** 2))


@dataclass(frozen=True)
class CatStateSpec:
    z1: complex
    z2: complex

    @property
    def separation(self) -> float:
        return abs(self.z1 - self.z2)

    def initial_overlap(self) -> complex:
        """``<z1|z2>`` of the two normalized coherent states."""
        return coherent_overlap(self.z1, self.z2)

    def norm_squared(self) -> float:
        """Squared normalization ``N^2`` of ``N (|z1> + |z2>)``."""
        return 1.0 / (2.0 + 2.0 * self.initial_overlap().real)


def coherent_overlap(a: complex, b: complex) -> complex:
    """``<a|b>`` for normalized coherent states."""
    return complex(np.exp(-0.5 * abs(a) ** 2 - 0.5 * abs(b) ** 2 + np.conj(a) * b))


# -- builders ---------------------------------------------------------------

def few_mode_bath(Omega: float, omega, g, fock_cutoff: int = 20) -> OscillatorBathModel:
    return OscillatorBathModel(Omega, omega, g, fock_cutoff)


def ohmic_flat_bath(L: int, omega_min: float, omega_max: float, gamma_target: float,
                    Omega: float, fock_cutoff: int = 2) -> OscillatorBathModel:
    """Discretized flat band whose kernel mimics ``gamma * delta(tau)``.

    ``L`` equally spaced modes on ``[omega_min, omega_max]`` share the
    coupling ``|g|^2 = gamma * d_omega / (2 pi)``.  The imitation holds up to
    the recurrence time ``2 pi / d_omega``.  Frequencies may be measured from
    a common carrier, so a band around zero is fine.
    """
    if L < 2:
        raise ValueError("flat band needs at least two modes")
    if not omega_min < Omega < omega_max:
        raise ValueError(f"band [{omega_min}, {omega_max}] excludes Omega = {Omega}: no resonant damping")
    if gamma_target < 0:
        raise ValueError("gamma_target must be non-negative")
    omega = np.linspace(omega_min, omega_max, L)
    d_omega = omega[1] - omega[0]
    g = np.full(L, np.sqrt(gamma_target * d_omega / (2 * np.pi)))
    return OscillatorBathModel(Omega, omega, g, fock_cutoff)


def recurrence_time(model: OscillatorBathModel) -> float:
    """``2 pi / d_omega`` for an equally spaced bath."""
    spacing = np.diff(model.omega)
    if spacing.size == 0 or not np.allclose(spacing, spacing[0]):
        raise ValueError("recurrence time is defined for equally spaced baths only")
    return 2 * np.pi / spacing[0]


# -- classical label flow ---------------------------------------------------

def default_step(model: OscillatorBathModel, t: float) -> float:
    return min(1e-3 * 2 * np.pi / model.max_frequency, t / 1000)


def _rhs(model, y):
    # y[..., 0] = z, y[..., 1:L+1] = beta, y[..., L+1] = phi (real part only)
    z = y[..., 0]
    beta = y[..., 1:-1]
    out = np.empty_like(y)
    out[..., 0] = -1j * (model.Omega * z + beta @ np.conj(model.g))
    out[..., 1:-1] = -1j * (model.omega * beta + z[..., None] * model.g)
    # driven bath |0> -> exp(i phi)|B>, dphi/dt = -Re(conj(g z) . beta)
    out[..., -1] = -np.real(np.sum(np.conj(model.g) * np.conj(z)[..., None] * beta, axis=-1))
    return out


def integrate_labels(model: OscillatorBathModel, z0, times, dt: float | None = None) -> np.ndarray:
    """RK4 trajectories of ``(z, beta, phi)`` sampled at ``times``.

    ``z0`` may be a scalar or a 1-D array of initial central labels (the
    bath always starts in the vacuum).  Returns an array of shape
    ``(len(times), len(z0), L + 2)`` whose last column holds ``phi``.
    Each gap between consecutive sample times is split into an integer
    number of equal steps no longer than ``dt``.
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0 or times[0] != 0.0 or np.any(np.diff(times) < 0):
        raise ValueError("times must be a non-decreasing grid starting at 0")
    t_end = float(times[-1])
    if dt is None:
        dt = default_step(model, t_end) if t_end > 0 else 1.0
    if dt <= 0 or (t_end > 0 and dt > t_end):
        raise ValueError(f"step dt = {dt} must satisfy 0 < dt <= t = {t_end}")

    z0 = np.atleast_1d(np.asarray(z0, dtype=complex))
    y = np.zeros((z0.size, model.L + 2), dtype=complex)
    y[:, 0] = z0
    out = np.empty((times.size,) + y.shape, dtype=complex)
    out[0] = y
    for i in range(1, times.size):
        gap = times[i] - times[i - 1]
        n = max(1, math.ceil(gap / dt - 1e-9)) if gap > 0 else 0
        h = gap / n if n else 0.0
        for _ in range(n):
            k1 = _rhs(model, y)
            k2 = _rhs(model, y + 0.5 * h * k1)
            k3 = _rhs(model, y + 0.5 * h * k2)
            k4 = _rhs(model, y + h * k3)
            y = y + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
        out[i] = y

    n0 = np.abs(z0) ** 2
    exc = np.abs(out[:, :, 0]) ** 2 + np.sum(np.abs(out[:, :, 1:-1]) ** 2, axis=-1)
    drift = np.max(np.abs(exc - n0) / np.maximum(n0, 1.0))
    if drift > EXCITATION_DRIFT_LIMIT:
        raise IntegratorAccuracyError(f"excitation drift {drift:.3e} exceeds {EXCITATION_DRIFT_LIMIT}; reduce dt")
    return out


def _branch(t, row) -> GaussianBranch:
    return GaussianBranch(float(t), complex(row[0]), row[1:-1].copy(), float(row[-1].real))


def classical_flow(model: OscillatorBathModel, z0: complex, t: float, dt: float | None = None) -> GaussianBranch:
    """Labels at time ``t`` for the initial state ``|z0> (x) |0>``."""
    if t < 0:
        raise ValueError("t must be non-negative")
    traj = integrate_labels(model, z0, [0.0, t], dt)
    return _branch(t, traj[-1, 0])


def branch_overlap(B1: GaussianBranch, B2: GaussianBranch) -> complex:
    """Bath overlap ``<B2|B1>`` of two coherent product states."""
    b1 = np.asarray(B1.beta)
    b2 = np.asarray(B2.beta)
    if b1.shape != b2.shape:
        raise DimensionError(f"bath sizes differ: {b1.size} vs {b2.size}")
    return _overlap_labels(b1, b2)


def _overlap_labels(b1, b2):
    # <b2|b1> along the last axis
    expo = -0.5 * np.abs(b1) ** 2 - 0.5 * np.abs(b2) ** 2 + np.conj(b2) * b1
    out = np.exp(np.sum(expo, axis=-1))
    return complex(out) if np.ndim(out) == 0 else out


def cat_coherence(model: OscillatorBathModel, spec: CatStateSpec, t: float, dt: float | None = None,
                  normalization: str = "orthogonal") -> complex:
    """Coefficient of ``|z1(t)><z2(t)|`` in the central reduced density matrix.

    ``normalization="orthogonal"`` uses the orthogonal-branch weight 1/2;
    ``"exact"`` uses ``N^2 = 1 / (2 + 2 Re<z1|z2>)``.
    """
    return complex(cat_coherence_series(model, spec, [0.0, t], dt, normalization)[-1])


def cat_coherence_series(model, spec: CatStateSpec, times, dt: float | None = None,
                         normalization: str = "orthogonal") -> np.ndarray:
    weight = _cat_weight(spec, normalization)
    traj = integrate_labels(model, [spec.z1, spec.z2], times, dt)
    return weight * _overlap_labels(traj[:, 0, 1:-1], traj[:, 1, 1:-1])


def _cat_weight(spec, normalization):
    if normalization == "orthogonal":
        return 0.5
    if normalization == "exact":
        return spec.norm_squared()
    raise ValueError(f"unknown normalization {normalization!r}")


# -- memory kernel and Markov limit ----------------------------------------

def memory_kernel(model: OscillatorBathModel, tau):
    """Zero-temperature bath correlation ``alpha(tau) = sum_l |g_l|^2 exp(-i omega_l tau)``."""
    tau = np.asarray(tau, dtype=float)
    w = np.abs(model.g) ** 2
    out = np.exp(-1j * np.multiply.outer(tau, model.omega)) @ w
    return complex(out) if out.ndim == 0 else out


def kernel_residual(model: OscillatorBathModel, z0: complex, t_max: float, dt: float | None = None) -> np.ndarray:
    """Residual of the memory-kernel equation along the RK4 trajectory.

    At every grid point ``t_n`` evaluates ``dz/dt + i Omega z + int_0^t alpha(t - s) z(s) ds``
    with ``dz/dt`` from the flow and the integral by the trapezoid rule on
    the integration grid itself.
    """
    if dt is None:
        dt = default_step(model, t_max)
    n = max(1, math.ceil(t_max / dt - 1e-9))
    times = np.linspace(0.0, t_max, n + 1)
    traj = integrate_labels(model, z0, times, dt)[:, 0]
    z = traj[:, 0]
    beta = traj[:, 1:-1]
    zdot = -1j * (model.Omega * z + beta @ np.conj(model.g))
    h = times[1] - times[0]
    res = np.empty(times.size, dtype=complex)
    for i, t in enumerate(times):
        if i == 0:
            integral = 0.0
        else:
            f = memory_kernel(model, t - times[: i + 1]) * z[: i + 1]
            integral = h * (f.sum() - 0.5 * (f[0] + f[-1]))
        res[i] = zdot[i] + 1j * model.Omega * z[i] + integral
    return np.abs(res)


def markov_reference(gamma: float, spec: CatStateSpec, t):
    """Markov-limit fidelity ``<B2|B1>`` to first order in ``gamma t``.

    Its squared modulus is ``exp(-gamma t |z1 - z2|^2)``.
    """
    if gamma < 0:
        raise ValueError("gamma must be non-negative")
    s = gamma * np.asarray(t, dtype=float)
    expo = -0.5 * abs(spec.z1 - spec.z2) ** 2 * s + 1j * (np.conj(spec.z2) * spec.z1).imag * s
    out = np.exp(expo)
    return complex(out) if out.ndim == 0 else out


# -- truncated Fock brute force --------------------------------------------

@dataclass(frozen=True, eq=False)
class FockSpace:
    """Occupation basis of ``L + 1`` modes with total excitation below ``cutoff``.

    The bilinear Hamiltonian conserves total excitation, so this basis is an
    invariant subspace and truncation only affects the initial state.
    Index 0 of every occupation tuple is the central mode.
    """

    n_modes: int
    cutoff: int
    states: tuple
    sectors: tuple  # slice per total-excitation sector

    @classmethod
    def build(cls, n_modes: int, cutoff: int, max_states: int = MAX_JOINT_DIM) -> "FockSpace":
        dim = math.comb(cutoff - 1 + n_modes, n_modes)
        if dim > max_states:
            raise DimensionError(f"Fock basis has {dim} states, cap is {max_states}")
        states, sectors = [], []
        for N in range(cutoff):
            start = len(states)
            states.extend(s for s in _compositions(N, n_modes))
            sectors.append(slice(start, len(states)))
        return cls(n_modes, cutoff, tuple(states), tuple(sectors))

    @property
    def dim(self) -> int:
        return len(self.states)

    def index(self) -> dict:
        return {s: i for i, s in enumerate(self.states)}

    def number_operator(self) -> np.ndarray:
        return np.array([sum(s) for s in self.states], dtype=float)


def _compositions(N, k):
    # occupation tuples of k modes summing to N, lexicographically descending
    if k == 1:
        yield (N,)
        return
    for first in range(N, -1, -1):
        for rest in _compositions(N - first, k - 1):
            yield (first,) + rest


def fock_hamiltonian(model: OscillatorBathModel, space: FockSpace) -> np.ndarray:
    """Bilinear Hamiltonian as a dense matrix on ``space`` (block diagonal by sector)."""
    idx = space.index()
    H = np.zeros((space.dim, space.dim), dtype=complex)
    freqs = np.concatenate([[model.Omega], model.omega])
    for i, s in enumerate(space.states):
        H[i, i] = float(np.dot(freqs, s))
        if s[0] == 0:
            continue
        for lam in range(model.L):
            # g a b_lam^dag : (n_a, n_lam) -> (n_a - 1, n_lam + 1)
            t = list(s)
            t[0] -= 1
            t[lam + 1] += 1
            j = idx[tuple(t)]
            amp = model.g[lam] * math.sqrt(s[0] * (s[lam + 1] + 1))
            H[j, i] += amp
            H[i, j] += np.conj(amp)
    return check_hermitian(H)


def coherent_product(space: FockSpace, labels) -> np.ndarray:
    """Truncated product of coherent states with one label per mode."""
    labels = np.asarray(labels, dtype=complex)
    if labels.size != space.n_modes:
        raise DimensionError(f"{labels.size} labels for {space.n_modes} modes")
    pref = np.exp(-0.5 * np.sum(np.abs(labels) ** 2))
    psi = np.empty(space.dim, dtype=complex)
    for i, s in enumerate(space.states):
        amp = pref
        for lab, n in zip(labels, s):
            amp *= lab ** n / math.sqrt(math.factorial(n))
        psi[i] = amp
    return psi


class FockPropagator:
    """Exact evolution on a :class:`FockSpace`, one eigendecomposition per sector."""

    def __init__(self, model: OscillatorBathModel, space: FockSpace):
        self.space = space
        H = fock_hamiltonian(model, space)
        self._props = [SpectralPropagator(H[sl, sl]) for sl in space.sectors]

    def apply(self, psi, t: float) -> np.ndarray:
        out = np.empty_like(np.asarray(psi, dtype=complex))
        for sl, prop in zip(self.space.sectors, self._props):
            out[sl] = prop.apply(psi[sl], t)
        return out


def fock_evolve(model: OscillatorBathModel, psi0, times, max_states: int = MAX_JOINT_DIM) -> np.ndarray:
    space = FockSpace.build(model.L + 1, model.fock_cutoff, max_states)
    prop = FockPropagator(model, space)
    return np.stack([prop.apply(psi0, t) for t in np.asarray(times, dtype=float)])


def fock_oracle(model: OscillatorBathModel, spec: CatStateSpec, t, max_states: int = MAX_JOINT_DIM):
    """Bath fidelity ``<B2|B1>`` from exact truncated-Fock evolution.

    Each branch ``|z_j> (x) |0>`` is evolved exactly.  Projecting the central
    mode onto its vacuum leaves ``<0|z_j(t)> |B_j(t)>`` with a positive real
    prefactor, so normalizing these bath vectors recovers ``|B_j(t)>``
    without reference to the classical labels.  Comparable to
    ``2 * cat_coherence``.  ``t`` may be a scalar or a grid.
    """
    space = FockSpace.build(model.L + 1, model.fock_cutoff, max_states)
    vac = np.zeros(model.L, dtype=complex)
    inits = []
    for z in (spec.z1, spec.z2):
        psi = coherent_product(space, np.concatenate([[z], vac]))
        deficit = 1.0 - float(np.vdot(psi, psi).real)
        if deficit > TRUNCATION_DEFICIT:
            raise TruncationError(
                f"cutoff {model.fock_cutoff} loses norm {deficit:.2e} of |{z}>; raise fock_cutoff"
            )
        inits.append(psi)
    prop = FockPropagator(model, space)
    central_vacuum = np.array([s[0] == 0 for s in space.states])
    times = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.empty(times.size, dtype=complex)
    for i, ti in enumerate(times):
        v1, v2 = (prop.apply(psi, ti)[central_vacuum] for psi in inits)
        out[i] = np.vdot(v2, v1) / (np.linalg.norm(v1) * np.linalg.norm(v2))
    return complex(out[0]) if np.ndim(t) == 0 else out


# -- driven-bath echo -------------------------------------------------------

def _bath_operators(L: int, cutoff: int, max_states: int):
    dim = cutoff ** L
    if dim > max_states:
        raise DimensionError(f"bath Fock space has {dim} states, cap is {max_states}")
    b = np.diag(np.sqrt(np.arange(1, cutoff)), 1)
    eye = np.eye(cutoff)
    ops = []
    for lam in range(L):
        op = np.ones((1, 1))
        for mu in range(L):
            op = np.kron(op, b if mu == lam else eye)
        ops.append(op)
    return ops


def _driven_state(model, b_ops, drive, h):
    """Midpoint-rule product of ``exp(-i H(s_mid) h)`` applied to the bath vacuum."""
    H0 = sum(w * (b.conj().T @ b) for w, b in zip(model.omega, b_ops))
    psi = np.zeros(H0.shape[0], dtype=complex)
    psi[0] = 1.0
    for zm in drive:
        H = H0.astype(complex)
        for g, b in zip(model.g, b_ops):
            f = g * zm
            H = H + f * b.conj().T + np.conj(f) * b
        psi = SpectralPropagator(H).apply(psi, h)
    return psi


def driven_echo_amplitude(model: OscillatorBathModel, spec: CatStateSpec, t: float,
                          dt: float | None = None, steps: int | None = None,
                          tol: float = ECHO_STEP_TOL, max_states: int = MAX_JOINT_DIM) -> complex:
    """Echo form of the bath fidelity, ``exp(-i(phi1 - phi2)) <0|U0^dag U|0>``.

    ``U0`` propagates the bath driven by ``z_2(t)`` and ``U`` adds the
    perturbation ``(z_1 - z_2) g b^dag + h.c.``, i.e. it is driven by
    ``z_1(t)``.  With this ordering the result equals ``<B2|B1>``.  Both
    time-ordered propagators use midpoint steps; the step count doubles
    until halving the step changes the amplitude by less than ``tol``.
    """
    if t <= 0:
        return 1.0 + 0j
    n = steps or max(64, math.ceil(t / 2e-3))
    b_ops = _bath_operators(model.L, model.fock_cutoff, max_states)
    prev = None
    for _ in range(8):
        # labels on a 2n-interval grid: odd points are midpoints of the n steps
        grid = np.linspace(0.0, t, 2 * n + 1)
        traj = integrate_labels(model, [spec.z1, spec.z2], grid, dt)
        z_mid = traj[1::2, :, 0]
        phi1, phi2 = traj[-1, 0, -1].real, traj[-1, 1, -1].real
        h = t / n
        psi = _driven_state(model, b_ops, z_mid[:, 0], h)
        psi0 = _driven_state(model, b_ops, z_mid[:, 1], h)
        _check_bath_truncation(psi, model)
        _check_bath_truncation(psi0, model)
        amp = complex(np.exp(-1j * (phi1 - phi2)) * np.vdot(psi0, psi))
        if prev is not None and abs(amp - prev) < tol:
            return amp
        prev = amp
        n *= 2
    raise IntegratorAccuracyError(f"time-ordering error still above {tol} after step refinement")


def _check_bath_truncation(psi, model):
    occ = np.indices((model.fock_cutoff,) * model.L).reshape(model.L, -1)
    top = np.any(occ == model.fock_cutoff - 1, axis=0)
    weight = float(np.sum(np.abs(psi[top]) ** 2))
    if weight > TRUNCATION_DEFICIT:
        raise TruncationError(f"driven bath reaches the top Fock level (weight {weight:.2e}); raise fock_cutoff")

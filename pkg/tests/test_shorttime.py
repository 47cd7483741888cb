import numpy as np
import pytest

from envecho import dephasing as dp
from envecho.ensembles import gue, random_state
from envecho.shorttime import (
    ShortTimeModel,
    branch_hamiltonian,
    exact_coherence,
    shorttime_coherence,
    shorttime_error,
)


def make_model(rng, dim_env=64, central=1.0, coupling=0.05, S=None):
    S = np.diag([1.0, -1.0]) if S is None else S
    n = S.shape[0]
    H_c = gue(n, rng, central) if central else np.zeros((n, n))
    return ShortTimeModel(H_c, S, gue(dim_env, rng), gue(dim_env, rng, coupling))


def test_branch_hamiltonian_cases(rng):
    S = np.diag([1.0, 0.0, -1.0])
    model = make_model(rng, dim_env=6, S=S)
    assert np.array_equal(branch_hamiltonian(model, 0.0), model.H_env)
    free = ShortTimeModel(model.H_c, S, model.H_env, np.zeros((6, 6)))
    for s in (1.0, 0.0, -1.0):
        assert np.array_equal(branch_hamiltonian(free, s), model.H_env)
    with pytest.raises(ValueError):
        branch_hamiltonian(model, 0.5)


def test_branch_hamiltonians_differ_by_spectrum_gap(rng):
    # S given in a rotated basis: eigenvalues +-1 must be recovered by diagonalization
    Q, _ = np.linalg.qr(rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))
    S = Q @ np.diag([1.0, -1.0]) @ Q.conj().T
    model = make_model(rng, dim_env=8, S=(S + S.conj().T) / 2)
    assert np.allclose(model.eigenvalues, [-1.0, 1.0], atol=1e-12)
    diff = branch_hamiltonian(model, 1.0) - branch_hamiltonian(model, -1.0)
    assert np.max(np.abs(diff - 2 * model.V_env)) <= 1e-12


def test_coherence_trivial_cases(rng):
    model = make_model(rng, dim_env=16)
    B0 = random_state(16, rng)
    for t in (0.0, 1.0, 5.0):
        assert abs(shorttime_coherence(model, 1.0, 1.0, B0, t) - 0.5) <= 1e-12
    free = ShortTimeModel(model.H_c, model.S, model.H_env, np.zeros((16, 16)))
    for t in (0.0, 1.0, 5.0):
        assert abs(shorttime_coherence(free, 1.0, -1.0, B0, t) - 0.5) <= 1e-12


def test_coherence_matches_joint_evolution_without_central_hamiltonian(rng):
    model = make_model(rng, central=0)
    B0 = random_state(64, rng)
    times = np.linspace(0, 10, 21)
    exact = exact_coherence(model, 1.0, -1.0, B0, times, include_central=False)
    for t, e in zip(times, exact):
        assert abs(shorttime_coherence(model, 1.0, -1.0, B0, t) - e) <= 1e-10


def test_reduces_to_dephasing_model(rng):
    S = np.diag([1.5, -0.5, 0.25])
    model = make_model(rng, dim_env=20, central=0, S=S)
    induced = model.induced_dephasing_model()
    B0 = random_state(20, rng)
    s = model.eigenvalues
    for i, j in [(0, 1), (2, 0)]:
        a = np.zeros(3)
        a[[i, j]] = 1 / np.sqrt(2)
        init = dp.InitialProduct(a, B0)
        for t in (0.3, 2.0, 7.0):
            assert abs(shorttime_coherence(model, s[i], s[j], B0, t)
                       - dp.coherence_factorized(induced, init, i, j, t)) <= 1e-12


def test_error_vanishes_without_central_dynamics(rng):
    model = make_model(rng, central=0)
    B0 = random_state(64, rng)
    for t in (0.5, 3.0):
        assert shorttime_error(model, 1.0, -1.0, B0, t) <= 1e-12
    assert shorttime_error(make_model(rng), 1.0, -1.0, B0, 0.0) <= 1e-15


def test_error_grows_linearly_at_short_times(rng):
    model = make_model(rng)
    B0 = random_state(64, rng)
    for t in (0.01, 0.02, 0.05, 0.1):
        ratio = shorttime_error(model, 1.0, -1.0, B0, t) / shorttime_error(model, 1.0, -1.0, B0, t / 2)
        assert 1.5 <= ratio <= 2.5


def test_decoherence_onset_orders_with_eigenvalue_gap(rng):
    H_env, V = gue(32, rng), gue(32, rng, 0.05)
    S = np.diag([0.0, 0.5, 1.0, 2.0])
    model = ShortTimeModel(np.zeros((4, 4)), S, H_env, V)
    B0 = random_state(32, rng)
    losses = [1 - abs(2 * shorttime_coherence(model, s, 0.0, B0, 0.5)) for s in (0.5, 1.0, 2.0)]
    assert losses[0] < losses[1] < losses[2]


def test_error_rejects_equal_eigenvalues(rng):
    model = make_model(rng, dim_env=4)
    with pytest.raises(ValueError):
        shorttime_error(model, 1.0, 1.0, random_state(4, rng), 1.0)

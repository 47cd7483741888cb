import numpy as np
import pytest
from scipy.linalg import expm

from envecho import dephasing as dp
from envecho.ensembles import commuting_pair, gue, random_state
from envecho.errors import DimensionError, NotHermitianError
from envecho.linalg import check_density_matrix, kron


def make_init(model, rng, a=None):
    if a is None:
        a = rng.normal(size=model.n_c) + 1j * rng.normal(size=model.n_c)
        a /= np.linalg.norm(a)
    return dp.InitialProduct(a, random_state(model.dim_env, rng))


# -- model and joint Hamiltonian --------------------------------------------

def test_model_validation(rng):
    H = gue(4, rng)
    with pytest.raises(DimensionError):
        dp.DephasingModel([0.0, 1.0], H, (gue(4, rng),))
    with pytest.raises(DimensionError):
        dp.DephasingModel([0.0], H, (gue(5, rng),))
    with pytest.raises(NotHermitianError):
        dp.DephasingModel([0.0], H, (rng.normal(size=(4, 4)),))


def test_joint_commutes_with_central_energy(rng):
    model = dp.gue_model(3, 10, rng, eps=[0.3, -1.2, 2.0])
    H = dp.build_joint(model)
    Hc = kron(dp.central_hamiltonian(model), np.eye(10))
    assert np.max(np.abs(H @ Hc - Hc @ H)) <= 1e-10


def test_joint_single_level_is_environment(rng):
    H_env = gue(6, rng)
    model = dp.DephasingModel([0.0], H_env, (np.zeros((6, 6)),))
    assert np.array_equal(dp.build_joint(model), H_env)


def test_joint_separable_without_coupling(rng):
    H_env = gue(5, rng)
    eps = [0.5, -0.25, 1.5]
    model = dp.DephasingModel(eps, H_env, tuple(np.zeros((5, 5)) for _ in eps))
    expected = kron(np.diag(eps), np.eye(5)) + kron(np.eye(3), H_env)
    assert np.max(np.abs(dp.build_joint(model) - expected)) <= 1e-15


def test_joint_block_structure(rng):
    model = dp.gue_model(2, 8, rng)
    H = dp.build_joint(model)
    assert np.all(H[:8, 8:] == 0) and np.all(H[8:, :8] == 0)
    for j in range(2):
        block = H[8 * j:8 * (j + 1), 8 * j:8 * (j + 1)]
        assert np.max(np.abs(block - (model.eps[j] * np.eye(8) + model.H_env + model.V[j]))) <= 1e-15


def test_gue_model_is_seed_reproducible():
    m1, m2 = dp.gue_model(2, 6, seed=5), dp.gue_model(2, 6, seed=5)
    assert np.array_equal(m1.H_env, m2.H_env)
    assert all(np.array_equal(a, b) for a, b in zip(m1.V, m2.V))
    assert not np.array_equal(m1.H_env, dp.gue_model(2, 6, seed=6).H_env)


# -- branches and coherences -----------------------------------------------

def test_evolve_branch_cases(rng):
    model = dp.gue_model(2, 12, rng)
    chi0 = random_state(12, rng)
    assert np.allclose(dp.evolve_branch(model, chi0, 1, 0.0), chi0, atol=1e-14)
    for j, t in [(0, 0.3), (1, 7.0), (0, -4.0)]:
        assert abs(np.linalg.norm(dp.evolve_branch(model, chi0, j, t)) - 1) <= 1e-12
    with pytest.raises(IndexError):
        dp.evolve_branch(model, chi0, 2, 1.0)


def test_evolve_branch_diagonal_closed_form(rng):
    w = rng.normal(size=7)
    model = dp.DephasingModel([0.0], np.diag(w), (np.zeros((7, 7)),))
    chi0 = random_state(7, rng)
    t = 2.3
    assert np.max(np.abs(dp.evolve_branch(model, chi0, 0, t) - np.exp(-1j * w * t) * chi0)) <= 1e-14


def test_population_is_constant(rng):
    model = dp.gue_model(3, 16, rng, coupling_variance=0.5)
    init = make_init(model, rng)
    for t in np.linspace(0, 20, 9):
        assert abs(dp.coherence_factorized(model, init, 1, 1, t) - abs(init.a[1]) ** 2) <= 1e-12


def test_identical_couplings_give_pure_phase(rng):
    H_env, V = gue(10, rng), gue(10, rng, 0.3)
    model = dp.DephasingModel([0.0, 2.0], H_env, (V, V))
    init = make_init(model, rng)
    for t in np.linspace(0, 15, 7):
        assert abs(abs(dp.coherence_factorized(model, init, 0, 1, t)) - abs(init.rho0(0, 1))) <= 1e-12


def test_factorized_coherence_matches_joint_evolution(rng):
    model = dp.gue_model(2, 64, rng, eps=[0.0, 0.7], coupling_variance=0.05)
    init = make_init(model, rng)
    times = np.linspace(0, 20, 50)
    rho = dp.reduced_density_joint(model, init, times)
    for t, r in zip(times, rho):
        assert abs(dp.coherence_factorized(model, init, 0, 1, t) - r[0, 1]) <= 1e-10


@pytest.mark.parametrize("n_c,dim_env,seed", [(2, 8, 1), (3, 32, 2), (4, 128, 3), (4, 17, 4)])
def test_central_identity_random_instances(n_c, dim_env, seed):
    rng = np.random.default_rng(seed)
    model = dp.gue_model(n_c, dim_env, rng, eps=rng.normal(size=n_c), coupling_variance=0.1)
    init = make_init(model, rng)
    times = np.linspace(0, 25, 50)
    fact = dp.reduced_density_factorized(model, init, times)
    joint = dp.reduced_density_joint(model, init, times)
    assert np.max(np.abs(fact - joint)) <= 1e-10
    # grid version agrees with the pointwise operation
    assert abs(fact[17, n_c - 1, 0] - dp.coherence_factorized(model, init, n_c - 1, 0, times[17])) <= 1e-12
    for r in fact:
        assert np.max(np.abs(r - r.conj().T)) <= 1e-12
        assert np.max(np.abs(np.diag(r) - np.abs(init.a) ** 2)) <= 1e-10
        bound = np.abs(np.outer(init.a, init.a.conj()))
        assert np.all(np.abs(r) <= bound + 1e-12)
        check_density_matrix(r)


# -- echo operator ------------------------------------------------------------

def test_echo_trivial_when_indices_equal(rng):
    model = dp.gue_model(2, 8, rng)
    assert dp.echo_amplitude(model, random_state(8, rng), 1, 1, 3.0) == 1


@pytest.mark.parametrize("seed", [10, 11, 12])
def test_echo_equals_branch_overlap(seed):
    rng = np.random.default_rng(seed)
    model = dp.gue_model(3, 40, rng, coupling_variance=0.2)
    chi0 = random_state(40, rng)
    for j, k in [(0, 1), (2, 0), (1, 2)]:
        for t in (0.0, 0.5, 3.0, 12.0):
            branch = np.vdot(dp.evolve_branch(model, chi0, k, t), dp.evolve_branch(model, chi0, j, t))
            assert abs(dp.echo_amplitude(model, chi0, j, k, t) - branch) <= 1e-12
    times = np.linspace(0, 12, 9)
    series = dp.echo_amplitude_series(model, chi0, 2, 0, times)
    for t, a in zip(times, series):
        assert abs(a - dp.echo_amplitude(model, chi0, 2, 0, t)) <= 1e-12


def test_echo_deviation_is_first_order_in_perturbation(rng):
    H_env, W = gue(24, rng), gue(24, rng)
    chi0 = random_state(24, rng)
    t = 1.5
    devs = []
    for delta in (1e-2, 5e-3, 2.5e-3, 1.25e-3):
        model = dp.DephasingModel([0.0, 0.0], H_env, (delta * W, np.zeros((24, 24))))
        devs.append(abs(1 - dp.echo_amplitude(model, chi0, 0, 1, t)))
    ratios = np.array(devs[:-1]) / np.array(devs[1:])
    assert np.all(np.diff(devs) < 0)
    assert np.all((ratios > 1.8) & (ratios < 2.2))


# -- proportional couplings -----------------------------------------------------

def test_rescaled_equal_factors(rng):
    model = dp.proportional_model([0, 1], gue(8, rng), [0.2, 0.2])
    assert abs(dp.rescaled_autocorrelation(model, random_state(8, rng), 0, 1, 4.0) - 1) <= 1e-14


def test_rescaled_eigenstate_is_pure_phase(rng):
    H_env = gue(8, rng)
    w, Q = np.linalg.eigh(H_env)
    model = dp.proportional_model([0, 1], H_env, [0.0, 0.3])
    t = 2.0
    amp = dp.rescaled_autocorrelation(model, Q[:, 3], 0, 1, t)
    assert abs(amp - np.exp(-1j * t * (0.0 - 0.3) * w[3])) <= 1e-12
    assert abs(abs(amp) - 1) <= 1e-12


def test_rescaled_matches_echo(rng):
    model = dp.proportional_model([0.0, 1.0], gue(32, rng), [0.0, 0.1])
    chi0 = random_state(32, rng)
    for t in np.linspace(0, 30, 16):
        for j, k in [(0, 1), (1, 0)]:
            assert abs(dp.rescaled_autocorrelation(model, chi0, j, k, t) - dp.echo_amplitude(model, chi0, j, k, t)) <= 1e-10


def test_rescaled_rejects_generic_model(rng):
    with pytest.raises(ValueError):
        dp.rescaled_autocorrelation(dp.gue_model(2, 6, rng), random_state(6, rng), 0, 1, 1.0)


# -- pi pulse --------------------------------------------------------------------

def test_pi_pulse_identical_potentials(rng):
    H_env, V = gue(16, rng), gue(16, rng, 0.2)
    model = dp.DephasingModel([0.0, 1.0], H_env, (V, V))
    val = dp.pi_pulse_coherence(model, random_state(16, rng), 5.0)
    assert abs(abs(val) - 0.5) <= 1e-12


def test_pi_pulse_commuting_pair_gives_unit_echo(rng):
    A, B = commuting_pair(20, rng)
    model = dp.DephasingModel([0.0, 3.0], np.zeros((20, 20)), (A, B))
    assert np.max(np.abs(model.branch_hamiltonian(0) @ model.branch_hamiltonian(1)
                         - model.branch_hamiltonian(1) @ model.branch_hamiltonian(0))) <= 1e-12
    chi0 = random_state(20, rng)
    for t in (0.5, 4.0, 17.0):
        assert abs(dp.pi_pulse_coherence(model, chi0, t) / 0.5 - 1) <= 1e-12


def test_pi_pulse_matches_four_step_oracle(rng):
    model = dp.gue_model(2, 32, rng, coupling_variance=0.3)
    chi0 = random_state(32, rng)
    a = np.array([0.6, 0.8j])
    for t in (1.0, 6.0):
        H1, H2 = model.branch_hamiltonian(0), model.branch_hamiltonian(1)
        psi = chi0
        psi = expm(-0.5j * t * H1) @ psi
        psi = expm(-0.5j * t * H2) @ psi
        psi = expm(0.5j * t * H1) @ psi
        psi = expm(0.5j * t * H2) @ psi
        expected = np.vdot(chi0, psi) * a[0] * np.conj(a[1])
        assert abs(dp.pi_pulse_coherence(model, chi0, t, a) - expected) <= 1e-12


def test_pi_pulse_matches_joint_simulation(rng):
    model = dp.gue_model(2, 16, rng, eps=[0.0, 2.5], coupling_variance=0.3)
    init = make_init(model, rng)
    times = np.linspace(0, 10, 11)
    rho = dp.pi_pulse_joint(model, init, times)
    for t, r in zip(times, rho):
        assert abs(r[0, 1] - dp.pi_pulse_coherence(model, init.chi0, t, init.a)) <= 1e-10


def test_pi_pulse_needs_two_levels(rng):
    with pytest.raises(ValueError):
        dp.pi_pulse_coherence(dp.gue_model(3, 4, rng), random_state(4, rng), 1.0)

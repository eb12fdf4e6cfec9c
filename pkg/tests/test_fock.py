import numpy as np
import pytest

from kerrcav.fock import (
    FockError,
    ModelParams,
    check_density_matrix,
    coherent_dm,
    coherent_state,
    density_diagnostics,
    dissipator,
    fock_dm,
    lindblad_rhs,
    make_ladder_ops,
    top_level_population,
    vacuum_dm,
)


def test_ladder_algebra():
    a, adag, n = make_ladder_ops(8)
    # [a, a^dag] = 1 on the untruncated block
    comm = a @ adag - adag @ a
    assert np.allclose(comm[:-1, :-1], np.eye(8))
    assert np.allclose(adag @ a, n)
    assert np.allclose(a, adag.conj().T)


def test_fock_and_vacuum_states():
    rho = fock_dm(3, 6)
    assert rho[3, 3] == 1.0
    assert np.trace(rho) == 1.0
    check_density_matrix(rho)
    check_density_matrix(vacuum_dm(4))


def test_coherent_state_moments():
    alpha = 0.7 - 0.4j
    dim = 30
    vec = coherent_state(alpha, dim)
    a, adag, n = make_ladder_ops(dim - 1)
    assert abs(np.vdot(vec, a @ vec) - alpha) < 1e-10
    assert abs(np.vdot(vec, n @ vec) - abs(alpha) ** 2) < 1e-10
    rho = coherent_dm(alpha, dim)
    check_density_matrix(rho)


def test_check_density_matrix_rejects_bad_input():
    rho = vacuum_dm(4)
    rho[0, 1] = 0.5   # breaks Hermiticity
    with pytest.raises(FockError):
        check_density_matrix(rho)
    with pytest.raises(FockError):
        check_density_matrix(2.0 * vacuum_dm(4))


def test_density_diagnostics_keys():
    d = density_diagnostics(coherent_dm(0.3, 8))
    assert d["herm_defect"] < 1e-14
    assert abs(d["trace_dev"]) < 1e-12
    assert d["min_eig"] > -1e-12


def test_dissipator_trace_free_and_vacuum_stationary():
    a, _, _ = make_ladder_ops(7)
    rho = coherent_dm(0.9, 8)
    d = dissipator(rho, a, kappa=1.0)
    assert abs(np.trace(d)) < 1e-12
    assert np.abs(dissipator(vacuum_dm(8), a, 1.0)).max() < 1e-14


def test_lindblad_rhs_decay_rate():
    # d<n>/dt = -kappa <n> for H = 0
    a, _, n = make_ladder_ops(9)
    rho = coherent_dm(0.8, 10)
    drho = lindblad_rhs(rho, np.zeros((10, 10)), a, kappa=1.0)
    n_dot = np.einsum("ij,ji->", n, drho).real
    n_avg = np.einsum("ij,ji->", n, rho).real
    assert abs(n_dot + n_avg) < 1e-10


def test_lindblad_rhs_rejects_nonhermitian_h():
    a, adag, _ = make_ladder_ops(4)
    with pytest.raises(FockError):
        lindblad_rhs(vacuum_dm(5), 1j * adag, a, 1.0)


def test_model_params_validation_and_replace():
    p = ModelParams(delta=0.3, omega=0.5, n_max=12)
    assert p.dim == 13
    q = p.replace(zv=2.0)
    assert q.zv == 2.0 and q.delta == 0.3
    with pytest.raises(FockError):
        ModelParams(n_max=0)
    with pytest.raises(FockError):
        ModelParams(kappa=-1.0)


def test_top_level_population():
    assert top_level_population(fock_dm(5, 6)) == 1.0
    assert top_level_population(vacuum_dm(6)) == 0.0

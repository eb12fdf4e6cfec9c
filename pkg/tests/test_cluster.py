import numpy as np
import pytest

from kerrcav.cluster import (
    BONDS,
    SITES_A,
    SITES_B,
    BracketError,
    ClusterFields,
    _ClusterModel,
    _staggered_seed,
    cluster_evolve,
    cluster_fields,
    cluster_hamiltonian,
    critical_v,
    get_cluster_ops,
    product_state,
    steady_delta_n,
)
from kerrcav.fock import FockError, ModelParams, coherent_dm, fock_dm, vacuum_dm


def test_plaquette_geometry():
    assert len(BONDS) == 4
    assert set(SITES_A) | set(SITES_B) == {0, 1, 2, 3}
    # every bond joins the two sublattices
    for i, j in BONDS:
        assert (i in SITES_A) != (j in SITES_A)


def test_product_state_trace_and_fields():
    rho = product_state([coherent_dm(0.3, 3), vacuum_dm(3),
                         coherent_dm(0.3, 3), vacuum_dm(3)])
    assert abs(np.trace(rho) - 1.0) < 1e-12
    ops = get_cluster_ops(2)
    f = cluster_fields(rho, ops)
    assert abs(f.aA - 0.3) < 5e-3      # truncation at n_max=2 is coarse
    assert abs(f.aB) < 1e-12
    assert abs(f.nB) < 1e-12


def test_cluster_hamiltonian_hermitian_and_z4_check():
    p = ModelParams(delta=0.3, omega=0.5, u=1.0, zv=2.0, zj=0.4, zj2=0.2,
                    zjn=0.1, n_max=2)
    fields = ClusterFields(nA=0.4, nB=0.2, aA=0.3 + 0.1j, aB=0.1j,
                           a2A=0.05, a2B=0.02j, naA=0.1, naB=0.03)
    H = cluster_hamiltonian(p, fields)
    assert np.abs(H - H.conj().T).max() < 1e-12
    with pytest.raises(FockError):
        cluster_hamiltonian(p.replace(z=2), fields)


def test_rhs_trace_free_and_hermitian():
    p = ModelParams(delta=0.75, omega=0.9, u=2.0, zv=5.0, zj=0.3, zj2=0.1,
                    zjn=0.05, n_max=2)
    model = _ClusterModel(p)
    rho = product_state([coherent_dm(0.4, 3), vacuum_dm(3),
                         fock_dm(1, 3), vacuum_dm(3)])
    d = model.rhs_matrix(rho)
    assert abs(np.trace(d)) < 1e-12
    assert np.abs(d - d.conj().T).max() < 1e-12


def test_cluster_matches_single_site_when_decoupled():
    # no inter-site couplings: every site is an independent driven cavity,
    # so the cluster engine must agree with the single-site one at the
    # same (deliberately coarse) truncation
    from kerrcav.meanfield import evolve_pair
    p = ModelParams(delta=0.3, omega=0.5, n_max=3)
    rho0 = product_state([vacuum_dm(4)] * 4)
    traj = cluster_evolve(rho0, p, t_max=30, record_from=15, n_samples=32,
                          check_truncation=False)
    rec = evolve_pair(vacuum_dm(4), vacuum_dm(4), p, t_max=30,
                      record_from=15, n_samples=32, check_truncation=False)
    assert abs(traj.nA[-1] - rec.nA[-1]) < 1e-6
    assert abs(traj.nB[-1] - rec.nB[-1]) < 1e-6


def test_cluster_evolve_diagnostics():
    p = ModelParams(delta=0.0, omega=0.75, zv=4.0, n_max=1)
    traj = cluster_evolve(_staggered_seed(1, "cluster"), p,
                          t_max=60, record_from=30, n_samples=64)
    d = traj.diagnostics
    assert d["trace_drift"] < 1e-8
    assert d["herm_defect"] < 1e-10
    assert d["min_eig"] > -1e-8


def test_hardcore_below_and_above_threshold():
    base = ModelParams(delta=0.0, omega=0.75, n_max=1)
    low = steady_delta_n(base.replace(zv=5.0), engine="meanfield")
    high = steady_delta_n(base.replace(zv=6.5), engine="meanfield")
    assert low < 1e-2 <= high


def test_critical_v_bracket_error():
    base = ModelParams(delta=0.0, omega=0.75, n_max=1)
    with pytest.raises(BracketError):
        critical_v(base, 0.5, 1.0, engine="meanfield")

import numpy as np
import pytest

from kerrcav.fock import ModelParams, coherent_dm, fock_dm, vacuum_dm
from kerrcav.meanfield import (
    EPS_CRY,
    PhaseTag,
    TruncationError,
    analyze_tail,
    classify,
    default_seed_pairs,
    evolve_pair,
    get_ops,
    mean_fields,
    merge_tags,
    mf_hamiltonian,
)


def test_mean_fields_coherent():
    alpha = 0.5 + 0.2j
    snap = mean_fields(coherent_dm(alpha, 25))
    assert abs(snap.psi - alpha) < 1e-9
    assert abs(snap.w - abs(alpha) ** 2) < 1e-9
    assert abs(snap.phi - alpha ** 2) < 1e-9
    # chi = <a^dag a a> = alpha |alpha|^2 for a coherent state
    assert abs(snap.chi - alpha * abs(alpha) ** 2) < 1e-8


def test_mf_hamiltonian_hermitian():
    p = ModelParams(delta=0.4, omega=0.6, u=1.0, zv=2.0, zj=0.3, zj2=0.1,
                    zjn=0.05, n_max=6)
    ops = get_ops(p.n_max)
    other = mean_fields(coherent_dm(0.4 + 0.1j, p.dim))
    H = mf_hamiltonian(p, other, ops)
    assert np.abs(H - H.conj().T).max() < 1e-12


def test_evolve_pair_decay_without_drive():
    p = ModelParams(delta=0.5, n_max=4)
    rec = evolve_pair(fock_dm(1, p.dim), vacuum_dm(p.dim), p,
                      t_max=40, record_from=20, n_samples=64)
    assert rec.nA[-1] < 1e-8
    assert rec.diagnostics["trace_drift"] < 1e-8


def test_evolve_pair_linear_steady_state():
    # U = V = J = 0: independent driven cavities, <n> = Omega^2/(d^2+1/4)
    p = ModelParams(delta=0.3, omega=0.5, n_max=12)
    rec = evolve_pair(vacuum_dm(p.dim), vacuum_dm(p.dim), p,
                      t_max=60, record_from=30, n_samples=64)
    expect = p.omega ** 2 / (p.delta ** 2 + 0.25)
    assert abs(rec.nA[-1] - expect) < 1e-6
    assert abs(rec.nB[-1] - expect) < 1e-6


def test_truncation_guard():
    # strong drive into a tiny space must be rejected
    p = ModelParams(omega=2.0, n_max=3)
    with pytest.raises(TruncationError):
        evolve_pair(vacuum_dm(4), vacuum_dm(4), p, t_max=30, record_from=10)


def test_analyze_tail_stationary():
    t = np.linspace(200, 400, 256)
    nA = np.full_like(t, 1.3)
    nB = np.full_like(t, 0.4)
    info = analyze_tail(t, nA, nB, residual=1e-10)
    assert info["tag"] is PhaseTag.CRY
    assert abs(info["delta_n"] - 0.9) < 1e-12
    assert info["amp"] == 0.0
    assert abs(info["nA_mean"] - 1.3) < 1e-12


def test_analyze_tail_oscillatory_period():
    t = np.linspace(200, 400, 2048)
    nA = 1.0 + 0.3 * np.sin(2 * np.pi * t / 10.0)
    nB = 1.0 + 0.3 * np.sin(2 * np.pi * (t - 5.0) / 10.0)
    info = analyze_tail(t, nA, nB, residual=1e-3)
    assert info["tag"] is PhaseTag.OSC
    assert abs(info["period"] - 10.0) < 0.5
    assert info["amp"] > 0.5


def test_analyze_tail_uniform():
    t = np.linspace(200, 400, 256)
    n = np.full_like(t, 0.7)
    info = analyze_tail(t, n, n.copy(), residual=1e-10)
    assert info["tag"] is PhaseTag.UNI


def test_merge_tags():
    assert merge_tags([PhaseTag.UNI, PhaseTag.UNI]) is PhaseTag.UNI
    assert merge_tags([PhaseTag.UNI, PhaseTag.OSC]) is PhaseTag.UNI_OSC
    assert merge_tags([PhaseTag.UNI, PhaseTag.CRY]) is PhaseTag.UNI_CRY
    assert merge_tags([PhaseTag.CRY, PhaseTag.OSC]) is PhaseTag.CRY_OSC
    assert merge_tags(
        [PhaseTag.UNI, PhaseTag.CRY, PhaseTag.OSC]) is PhaseTag.CRY_OSC
    assert merge_tags([PhaseTag.IRR, PhaseTag.UNI]) is PhaseTag.IRR


def test_default_seed_pairs_are_asymmetric():
    for name in ("default", "fast"):
        seeds = default_seed_pairs(8, name)
        assert len(seeds) >= 2
        assert all(np.abs(a - b).max() > 1e-12 for a, b in seeds)


def test_classify_uniform_point():
    p = ModelParams(delta=-0.5, omega=0.5, zv=0.5, n_max=10)
    label = classify(p, seeds=default_seed_pairs(p.dim, "fast"))
    assert label.tag is PhaseTag.UNI
    assert label.delta_n < EPS_CRY
    assert abs(label.n_a - label.n_b) < EPS_CRY


def test_classify_crystalline_point():
    # hard-core, far above threshold
    p = ModelParams(delta=0.0, omega=0.75, zv=8.0, n_max=1)
    label = classify(p, seeds=default_seed_pairs(p.dim, "fast"))
    assert label.tag in (PhaseTag.CRY, PhaseTag.UNI_CRY)
    assert label.delta_n > EPS_CRY

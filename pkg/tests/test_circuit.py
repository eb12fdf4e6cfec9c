import numpy as np
import pytest

from kerrcav.circuit import (
    PHI0,
    CircuitError,
    CircuitParams,
    charging_energy,
    derive_couplings,
    solve_cancellation,
    to_model_params,
)

BASE = dict(L=1e-9, C=1e-13, C_J=1e-14, E_J=1e-22)


def test_coupling_identities():
    ec = derive_couplings(CircuitParams(**BASE))
    assert ec.v == 2 * ec.u          # exact, by construction
    assert ec.j2 == ec.u
    assert abs(ec.jn) == abs(ec.j2)
    assert ec.jn == -ec.j2           # default sign convention
    assert 0 < ec.alpha < 1
    assert ec.u < 0                  # attractive Kerr from the junction


def test_jn_literal_sign_flag():
    ec = derive_couplings(CircuitParams(**BASE), jn_literal_sign=True)
    assert ec.jn == ec.j2


def test_frequency_formula():
    cp = CircuitParams(**BASE)
    ec = derive_couplings(cp)
    l_j = PHI0 ** 2 / cp.E_J
    c_tilde = cp.C + 2 * cp.C_J
    l_tilde = 1 / (1 / (2 * cp.L) + 1 / l_j)
    assert abs(ec.omega - 1 / np.sqrt(l_tilde * c_tilde)) < 1e-6 * ec.omega


def test_cancellation_roundtrip():
    e_j = solve_cancellation(1e-9, 1e-13, 1e-14)
    ec = derive_couplings(CircuitParams(L=1e-9, C=1e-13, C_J=1e-14, E_J=e_j))
    assert abs(ec.x_j) < 1e-12
    assert abs(ec.j) < 1e-12 * ec.omega


def test_cancellation_requires_junction_capacitance():
    with pytest.raises(CircuitError):
        solve_cancellation(1e-9, 1e-13, 0.0)


def test_large_cj_rejected_without_flag():
    big = CircuitParams(L=1e-9, C=1e-13, C_J=5e-14, E_J=1e-22)
    with pytest.raises(CircuitError):
        derive_couplings(big)
    derive_couplings(big, allow_large_cj=True)


def test_charging_energy_forms():
    e = 1.602176634e-19
    assert abs(charging_energy(1e-13) - e ** 2 / 2e-13) < 1e-30
    printed = charging_energy(1e-13, printed_form=True)
    assert printed != charging_energy(1e-13)


def test_flux_bias_scales_ej():
    cp = CircuitParams(**BASE, flux_bias=0.5)
    assert cp.ej_effective == 0.5 * BASE["E_J"]
    with pytest.raises(CircuitError):
        CircuitParams(**BASE, flux_bias=0.0)


def test_to_model_params_ratios():
    ec = derive_couplings(CircuitParams(**BASE))
    kappa = abs(ec.u) / 4.0   # pick loss so that u = -4 in model units
    p = to_model_params(ec, z=1, omega_drive=0.4 * kappa, kappa=kappa,
                        n_max=12)
    assert abs(p.u + 4.0) < 1e-9
    assert abs(p.zv + 8.0) < 1e-9
    assert abs(p.zj2 + 4.0) < 1e-9
    assert abs(p.zjn - 4.0) < 1e-9
    assert p.kappa == 1.0

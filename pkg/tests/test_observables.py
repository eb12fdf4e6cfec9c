import numpy as np

from kerrcav.fock import coherent_dm, fock_dm, vacuum_dm
from kerrcav.observables import (
    min_quadrature,
    order_parameter,
    quadratures,
    squeezing_tag,
    wigner,
    wigner_to_csv,
)


def grid(extent=4.0, pts=61):
    ax = np.linspace(-extent, extent, pts)
    return ax, ax


def test_vacuum_wigner_peak_and_norm():
    # the displaced-parity sum needs dim well above the largest |alpha|^2
    # on the grid (here 16) to be accurate near the corners
    x, p = grid()
    g = wigner(vacuum_dm(50), x, p)
    assert abs(g.values.max() - 1.0) < 1e-9
    assert abs(g.grid_sum() - np.pi) < 0.01 * np.pi
    assert g.adequate


def test_wigner_gaussian_profile():
    # vacuum: W(x,p) = exp(-(x^2+p^2))
    x = np.array([0.0, 0.5, 1.0])
    g = wigner(vacuum_dm(15), x, np.array([0.0]))
    expected = np.exp(-x ** 2)
    assert np.abs(g.values[:, 0] - expected).max() < 1e-8


def test_coherent_wigner_is_displaced_vacuum():
    alpha = 0.8 + 0.3j
    x0 = np.sqrt(2) * alpha.real
    p0 = np.sqrt(2) * alpha.imag
    g = wigner(coherent_dm(alpha, 25), np.array([x0]), np.array([p0]))
    assert abs(g.values[0, 0] - 1.0) < 1e-6


def test_fock_one_wigner_negative_at_origin():
    g = wigner(fock_dm(1, 10), np.array([0.0]), np.array([0.0]))
    assert abs(g.values[0, 0] + 1.0) < 1e-9


def test_inadequate_grid_flagged():
    g = wigner(coherent_dm(2.5, 30), np.linspace(-1, 1, 11),
               np.linspace(-1, 1, 11))
    assert not g.adequate


def test_wigner_csv_format(tmp_path):
    x = np.linspace(-1, 1, 3)
    g = wigner(vacuum_dm(8), x, x)
    path = tmp_path / "w.csv"
    wigner_to_csv(g, path)
    raw = path.read_bytes()
    assert b"\r" not in raw
    lines = raw.decode().splitlines()
    assert lines[0] == "x,p,w"
    assert len(lines) == 1 + 9


def test_quadratures_reference_states():
    rep = quadratures(coherent_dm(0.6, 25))
    assert abs(rep.dX1 - 1.0) < 1e-6
    assert abs(rep.dX2 - 1.0) < 1e-6
    assert not rep.squeezed
    rep1 = quadratures(fock_dm(1, 12))
    assert abs(rep1.dX1 - np.sqrt(3)) < 1e-9
    assert abs(rep1.dX2 - np.sqrt(3)) < 1e-9


def test_squeezed_state_detected():
    # quadrature-squeezed vacuum via S(r) = exp(r/2 (a^2 - a^dag^2))
    from scipy.linalg import expm
    from kerrcav.meanfield import get_ops
    ops = get_ops(29)
    r = 0.3
    S = expm(0.5 * r * (ops.a @ ops.a - ops.adag @ ops.adag))
    rho = S @ vacuum_dm(30) @ S.conj().T
    rep = quadratures(rho)
    assert min(rep.dX1, rep.dX2) < np.exp(-r) + 1e-6
    assert rep.squeezed


def test_squeezing_tag_and_min_quadrature():
    from scipy.linalg import expm
    from kerrcav.meanfield import get_ops
    ops = get_ops(19)
    S = expm(0.25 * (ops.a @ ops.a - ops.adag @ ops.adag))
    sq = S @ vacuum_dm(20) @ S.conj().T
    coh = coherent_dm(0.4, 20)
    assert squeezing_tag([sq], [sq]) == "both"
    assert squeezing_tag([sq], [coh]) == "one"
    assert squeezing_tag([coh], [coh]) == "none"
    assert min_quadrature([coh, sq]) < 1.0


def test_order_parameter():
    nA = np.array([1.0, 1.2, 0.8])
    nB = np.array([0.5, 0.5, 0.5])
    assert abs(order_parameter(nA, nB) - 0.5) < 1e-12

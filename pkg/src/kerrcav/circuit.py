"""Lumped-element circuit parameters -> effective lattice couplings.

Two LC resonators (L, C) coupled by a capacitively shunted Josephson
junction (C_J, E_J).  Expanding the junction cosine to fourth order and
keeping rotating-wave terms gives, per nonlinear link,

    J  = -omega * X_J          (residual linear hopping)
    U  = -alpha * E_C          (onsite Kerr)
    V  = -2 alpha * E_C = 2U   (cross-Kerr)
    J2 = -alpha * E_C          (pair hopping)
    |Jn| = alpha * E_C         (correlated hopping)

with alpha = 2L/(2L + L_J), X_J = C_J/(C + 2 C_J) - alpha, L_J = phi0^2/E_J,
1/Ltilde = 1/(2L) + 1/L_J, Ctilde = C + 2 C_J, omega = 1/sqrt(Ltilde Ctilde).

Couplings are returned in angular-frequency units (energies divided by
hbar).  The charging energy defaults to the dimensionally consistent
E_C = e^2/(2 Ctilde); the printed-form alternative e^2/(2 Ctilde^2) is
available behind a flag for comparison only.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fock import ModelParams

E_CHARGE = 1.602176634e-19       # C
HBAR = 1.054571817e-34           # J s
PHI0 = HBAR / (2 * E_CHARGE)     # reduced flux quantum, Wb

CJ_RATIO_LIMIT = 0.2             # short-range validity: C_J << C


class CircuitError(ValueError):
    """Invalid circuit parameters or model-validity violation."""


@dataclass(frozen=True)
class CircuitParams:
    L: float                     # resonator inductance [H]
    C: float                     # resonator capacitance [F]
    C_J: float                   # junction shunt capacitance [F]
    E_J: float                   # Josephson energy [J] (before flux scaling)
    drive_frequency: float = 0.0  # [rad/s]
    flux_bias: float = 1.0       # scalar multiplier on E_J

    def __post_init__(self):
        if self.L <= 0 or self.C <= 0:
            raise CircuitError("L and C must be positive")
        if self.C_J < 0:
            raise CircuitError("C_J must be non-negative")
        if self.E_J * self.flux_bias <= 0:
            raise CircuitError("flux-scaled E_J must be positive")

    @property
    def ej_effective(self) -> float:
        return self.E_J * self.flux_bias

    @property
    def short_range_ok(self) -> bool:
        return self.C_J / self.C < CJ_RATIO_LIMIT


@dataclass(frozen=True)
class EffectiveCouplings:
    omega: float       # mode frequency [rad/s]
    e_c: float         # charging energy [J]
    alpha: float       # inductive participation ratio, in (0, 1)
    x_j: float         # residual linear-hopping coefficient
    u: float           # onsite Kerr [rad/s]
    v: float           # cross-Kerr [rad/s]; v = 2u always
    j: float           # linear hopping [rad/s]
    j2: float          # pair hopping [rad/s]
    jn: float          # correlated hopping [rad/s]
    delta: float       # drive_frequency - (omega + delta_omega)
    delta_omega: float  # normal-ordering shift; no printed formula, so 0

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in
                ("omega", "e_c", "alpha", "x_j", "u", "v", "j", "j2", "jn",
                 "delta", "delta_omega")}


def charging_energy(c_tilde: float, printed_form: bool = False) -> float:
    """e^2/(2 Ctilde) by default; the printed e^2/(2 Ctilde^2) variant is
    dimensionally inconsistent and kept for display comparison only."""
    if printed_form:
        return E_CHARGE ** 2 / (2 * c_tilde ** 2)
    return E_CHARGE ** 2 / (2 * c_tilde)


def derive_couplings(cp: CircuitParams, allow_large_cj: bool = False,
                     jn_literal_sign: bool = False,
                     delta_omega: float = 0.0,
                     printed_ec_form: bool = False) -> EffectiveCouplings:
    """Map circuit values to the lattice couplings of one nonlinear link.

    jn_literal_sign=True uses the correlated-hopping sign read directly off
    the expanded Hamiltonian (Jn = J2); the default uses Jn = -J2, matching
    the reference parameter set zV = 2U = 2 zJ2 = -8, zJn = +4.
    """
    if not cp.short_range_ok and not allow_large_cj:
        raise CircuitError(
            f"C_J/C = {cp.C_J / cp.C:.3g} >= {CJ_RATIO_LIMIT}; the "
            "short-range (nearest-neighbor) model is not valid")
    l_j = PHI0 ** 2 / cp.ej_effective
    c_tilde = cp.C + 2 * cp.C_J
    l_tilde = 1.0 / (1.0 / (2 * cp.L) + 1.0 / l_j)
    omega = 1.0 / np.sqrt(l_tilde * c_tilde)
    alpha = 2 * cp.L / (2 * cp.L + l_j)
    x_j = cp.C_J / (cp.C + 2 * cp.C_J) - alpha
    e_c = charging_energy(c_tilde, printed_form=printed_ec_form)
    kerr = alpha * e_c / HBAR   # angular frequency
    u = -kerr
    jn = u if jn_literal_sign else -u
    return EffectiveCouplings(
        omega=omega, e_c=e_c, alpha=alpha, x_j=x_j,
        u=u, v=2 * u, j=-omega * x_j, j2=u, jn=jn,
        delta=cp.drive_frequency - (omega + delta_omega),
        delta_omega=delta_omega)


def solve_cancellation(L: float, C: float, C_J: float) -> float:
    """E_J that makes the residual linear hopping vanish (X_J = 0).

    From C_J/(C + 2 C_J) = 2L/(2L + L_J):  L_J = 2L (C + C_J)/C_J.
    """
    if C_J <= 0:
        raise CircuitError("no finite E_J cancels X_J when C_J = 0")
    if C_J >= C:
        raise CircuitError("cancellation requires 0 < C_J < C")
    l_j = 2 * L * (C + C_J) / C_J
    return PHI0 ** 2 / l_j


def to_model_params(ec: EffectiveCouplings, z: int, omega_drive: float,
                    kappa: float, n_max: int) -> ModelParams:
    """Bundle effective couplings into ModelParams in units of kappa.

    The drive amplitude and loss rate are external to the circuit
    derivation; omega_drive is the pump amplitude (Omega), already in
    the same angular-frequency units as the couplings.
    """
    if kappa <= 0:
        raise CircuitError("kappa must be positive")
    return ModelParams(
        delta=ec.delta / kappa,
        omega=omega_drive / kappa,
        u=ec.u / kappa,
        zv=z * ec.v / kappa,
        zj=z * ec.j / kappa,
        zj2=z * ec.j2 / kappa,
        zjn=z * ec.jn / kappa,
        kappa=1.0,
        n_max=n_max,
        z=z,
    )

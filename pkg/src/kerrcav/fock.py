"""Truncated single-mode Fock space: ladder operators, density matrices,
and the photon-loss dissipator.

Everything here works with dense complex matrices indexed by photon number
|0>, |1>, ..., |n_max>.  Dimensions stay small (a few hundred at most), so
dense algebra is both simpler and faster than sparse storage.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

HERM_TOL = 1e-10
TRACE_TOL = 1e-8
EIG_TOL = 1e-8


class FockError(ValueError):
    """Invalid Fock-space construction or operation."""


@dataclass(frozen=True)
class ModelParams:
    """Couplings of the driven cavity-array Hamiltonian, in units of kappa.

    All lattice couplings are stored pre-multiplied by the coordination
    number z (zv = z*V, zj = z*J, ...), which is how they enter the
    single-site mean-field equations.  Negative couplings are allowed
    (the circuit implementation gives U, V < 0).
    """

    delta: float = 0.0
    omega: float = 0.0
    u: float = 0.0
    zv: float = 0.0
    zj: float = 0.0
    zj2: float = 0.0
    zjn: float = 0.0
    kappa: float = 1.0
    n_max: int = 10
    z: int = 4

    def __post_init__(self):
        if self.kappa <= 0:
            raise FockError(f"kappa must be positive, got {self.kappa}")
        if self.n_max < 1:
            raise FockError(f"n_max must be >= 1, got {self.n_max}")
        for name in ("delta", "omega", "u", "zv", "zj", "zj2", "zjn"):
            if not np.isfinite(getattr(self, name)):
                raise FockError(f"{name} must be finite")

    @property
    def dim(self) -> int:
        return self.n_max + 1

    def replace(self, **kw) -> "ModelParams":
        from dataclasses import replace as _replace
        return _replace(self, **kw)


def make_ladder_ops(n_max: int):
    """Return (a, adag, n) on the truncated space of dimension n_max+1.

    a[m, m+1] = sqrt(m+1); adag = a^dagger; n = adag @ a = diag(0..n_max).
    """
    if n_max < 1:
        raise FockError(f"n_max must be >= 1, got {n_max}")
    dim = n_max + 1
    a = np.zeros((dim, dim), dtype=complex)
    ns = np.arange(1, dim)
    a[ns - 1, ns] = np.sqrt(ns)
    adag = a.conj().T
    n = adag @ a
    return a, adag, n


def vacuum_dm(dim: int) -> np.ndarray:
    rho = np.zeros((dim, dim), dtype=complex)
    rho[0, 0] = 1.0
    return rho


def fock_dm(k: int, dim: int) -> np.ndarray:
    if not 0 <= k < dim:
        raise FockError(f"Fock level {k} outside dimension {dim}")
    rho = np.zeros((dim, dim), dtype=complex)
    rho[k, k] = 1.0
    return rho


def coherent_state(alpha: complex, dim: int) -> np.ndarray:
    """Coherent-state vector, renormalized after truncation."""
    ns = np.arange(dim)
    log_fact = np.cumsum(np.log(np.maximum(ns, 1)))
    amps = np.exp(ns * np.log(complex(alpha)) - 0.5 * log_fact) if alpha != 0 \
        else np.eye(dim, 1, dtype=complex).ravel()
    if alpha != 0:
        amps = amps * np.exp(-abs(alpha) ** 2 / 2)
    vec = amps.astype(complex)
    return vec / np.linalg.norm(vec)


def coherent_dm(alpha: complex, dim: int) -> np.ndarray:
    vec = coherent_state(alpha, dim)
    return np.outer(vec, vec.conj())


def check_density_matrix(rho: np.ndarray, herm_tol: float = HERM_TOL,
                         trace_tol: float = TRACE_TOL, eig_tol: float = EIG_TOL):
    """Raise FockError unless rho is Hermitian, unit trace, and PSD
    within the stated tolerances."""
    defect = np.abs(rho - rho.conj().T).max()
    if defect > herm_tol:
        raise FockError(f"density matrix not Hermitian (defect {defect:.2e})")
    tr = np.trace(rho).real
    if abs(tr - 1.0) > trace_tol:
        raise FockError(f"density matrix trace {tr} != 1")
    w = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))
    if w.min() < -eig_tol:
        raise FockError(f"density matrix has eigenvalue {w.min():.2e} < 0")


def density_diagnostics(rho: np.ndarray) -> dict:
    """Hermiticity defect, trace deviation, and minimum eigenvalue of rho."""
    return {
        "herm_defect": float(np.abs(rho - rho.conj().T).max()),
        "trace_dev": float(abs(np.trace(rho).real - 1.0)),
        "min_eig": float(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min()),
    }


def dissipator(rho: np.ndarray, a: np.ndarray, kappa: float) -> np.ndarray:
    """Photon-loss term (kappa/2) (2 a rho a^dag - n rho - rho n)."""
    if rho.shape != a.shape:
        raise FockError(f"shape mismatch: rho {rho.shape}, a {a.shape}")
    arho = a @ rho
    n_diag = np.einsum("ij,ij->j", a.conj(), a).real  # diag of a^dag a
    return kappa * (arho @ a.conj().T) \
        - 0.5 * kappa * (n_diag[:, None] * rho + rho * n_diag[None, :])


def lindblad_rhs(rho: np.ndarray, H: np.ndarray, a: np.ndarray,
                 kappa: float) -> np.ndarray:
    """d rho / dt = -i [H, rho] + dissipator."""
    if np.abs(H - H.conj().T).max() > HERM_TOL:
        raise FockError("Hamiltonian is not Hermitian")
    comm = H @ rho - rho @ H
    return -1j * comm + dissipator(rho, a, kappa)


def top_level_population(rho: np.ndarray) -> float:
    """Population of the two highest Fock levels (truncation adequacy probe)."""
    d = np.diag(rho).real
    return float(d[-1] + d[-2])

"""Two-sublattice single-site mean-field dynamics.

The array density matrix factorizes into one density matrix per sublattice;
each sublattice evolves under a Lindblad equation whose Hamiltonian depends
on the instantaneous averages (w, psi, phi, chi) of the other sublattice.
The pair is integrated together with an adaptive RK45 scheme, recomputing
the self-consistent fields at every stage evaluation.

Phase classification follows the long-time tail of <n_A>(t), <n_B>(t):
stationary and uniform (UNI), stationary and staggered (CRY), limit cycle
(OSC), irregular (IRR), with bistability labels when different seeds land
on different attractors.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.integrate import solve_ivp

from .fock import (ModelParams, coherent_dm, density_diagnostics, fock_dm,
                   make_ladder_ops, top_level_population, vacuum_dm)

EPS_CRY = 1e-2          # delta_n above this = crystalline
EPS_OSC = 1e-3          # peak-to-peak amplitude above this = oscillatory
STATIONARY_RTOL = 1e-9  # early-stop residual on max|d rho/dt|
STEADY_RESID = 1e-7     # stationarity guarantee for UNI/CRY labels
TRUNCATION_TOL = 1e-6   # max population allowed in the two top Fock levels
PEAK_DOMINANCE = 5.0    # spectral peak vs median magnitude


class TruncationError(RuntimeError):
    """Top Fock levels acquired non-negligible population; raise n_max."""


class UndecidedError(RuntimeError):
    """Tail still drifting at t_max; no phase label can be assigned."""


class PhaseTag(str, Enum):
    UNI = "UNI"
    CRY = "CRY"
    OSC = "OSC"
    UNI_OSC = "UNI_OSC"
    UNI_CRY = "UNI_CRY"
    CRY_OSC = "CRY_OSC"
    IRR = "IRR"
    UNDECIDED = "UNDECIDED"


@dataclass(frozen=True)
class MeanFieldSnapshot:
    w: float        # <n>
    psi: complex    # <a>
    phi: complex    # <a a>
    chi: complex    # <n a>

    @classmethod
    def zero(cls) -> "MeanFieldSnapshot":
        return cls(0.0, 0j, 0j, 0j)


@dataclass
class TrajectoryRecord:
    times: np.ndarray
    nA: np.ndarray
    nB: np.ndarray
    psiA: np.ndarray
    psiB: np.ndarray
    final_rhoA: np.ndarray
    final_rhoB: np.ndarray
    diagnostics: dict = field(default_factory=dict)
    rhoA_samples: list = field(default_factory=list)
    rhoB_samples: list = field(default_factory=list)
    sample_times: list = field(default_factory=list)


@dataclass
class PhaseLabel:
    tag: PhaseTag
    delta_n: float
    osc_amplitude: float
    osc_period: float | None = None
    per_seed: tuple = ()
    n_a: float = 0.0    # tail means of the seed with the largest delta_n
    n_b: float = 0.0


class _Ops:
    """Precomputed operator set for one truncation dimension."""

    def __init__(self, n_max: int):
        self.a, self.adag, self.n = make_ladder_ops(n_max)
        self.n_diag = np.arange(n_max + 1, dtype=float)
        self.aa = self.a @ self.a
        self.adad = self.adag @ self.adag
        self.na = self.n @ self.a
        self.adn = self.adag @ self.n
        self.x_op = self.a + self.adag
        self.nn1 = self.n @ (self.n - np.eye(n_max + 1))


_OPS_CACHE: dict[int, _Ops] = {}


def get_ops(n_max: int) -> _Ops:
    if n_max not in _OPS_CACHE:
        _OPS_CACHE[n_max] = _Ops(n_max)
    return _OPS_CACHE[n_max]


def mean_fields(rho: np.ndarray) -> MeanFieldSnapshot:
    """Sublattice averages w=tr(n rho), psi=tr(a rho), phi=tr(aa rho),
    chi=tr(na rho)."""
    ops = get_ops(rho.shape[0] - 1)
    return MeanFieldSnapshot(
        w=float(np.einsum("ij,ji->", ops.n, rho).real),
        psi=complex(np.einsum("ij,ji->", ops.a, rho)),
        phi=complex(np.einsum("ij,ji->", ops.aa, rho)),
        chi=complex(np.einsum("ij,ji->", ops.na, rho)),
    )


def mf_hamiltonian(params: ModelParams, other: MeanFieldSnapshot,
                   ops: _Ops | None = None) -> np.ndarray:
    """Mean-field Hamiltonian of one sublattice given the other's averages."""
    if ops is None:
        ops = get_ops(params.n_max)
    H = (-params.delta * ops.n + params.omega * ops.x_op
         + params.u * ops.nn1 + params.zv * other.w * ops.n)
    if params.zj != 0:
        H = H - params.zj * (other.psi * ops.adag + np.conj(other.psi) * ops.a)
    if params.zj2 != 0:
        H = H + 0.5 * params.zj2 * (other.phi * ops.adad
                                    + np.conj(other.phi) * ops.aa)
    if params.zjn != 0:
        H = H - params.zjn * (other.chi * ops.adag + np.conj(other.chi) * ops.a)
        H = H - params.zjn * (other.psi * ops.adn + np.conj(other.psi) * ops.na)
    return H


def _pair_rhs(rhoA, rhoB, params: ModelParams, ops: _Ops):
    snapA = mean_fields(rhoA)
    snapB = mean_fields(rhoB)
    HA = mf_hamiltonian(params, snapB, ops)
    HB = mf_hamiltonian(params, snapA, ops)
    k = params.kappa
    nd = ops.n_diag
    out = []
    for rho, H in ((rhoA, HA), (rhoB, HB)):
        d = -1j * (H @ rho - rho @ H)
        d += k * (ops.a @ rho @ ops.adag)
        d -= 0.5 * k * (nd[:, None] * rho + rho * nd[None, :])
        out.append(d)
    return out


def evolve_pair(rho0A: np.ndarray, rho0B: np.ndarray, params: ModelParams,
                t_max: float = 400.0, record_from: float = 200.0,
                dt_ctrl: float = 1e-8, n_samples: int = 2048,
                check_truncation: bool = True, store_states: int = 0,
                chunk: float = 25.0) -> TrajectoryRecord:
    """Integrate the coupled sublattice master equations to t_max.

    Observables are recorded on a uniform grid over [record_from, t_max].
    If the pair reaches stationarity (max|d rho/dt| < 1e-9) the integration
    stops early and the remaining samples are padded with the fixed point.
    """
    if not t_max > record_from >= 0:
        raise ValueError("need t_max > record_from >= 0")
    dim = params.dim
    if rho0A.shape != (dim, dim) or rho0B.shape != (dim, dim):
        raise ValueError("seed dimensions do not match params.n_max")
    ops = get_ops(params.n_max)
    sz = dim * dim

    def rhs(t, y):
        rhoA = y[:sz].reshape(dim, dim)
        rhoB = y[sz:].reshape(dim, dim)
        dA, dB = _pair_rhs(rhoA, rhoB, params, ops)
        return np.concatenate([dA.ravel(), dB.ravel()])

    t_record = np.linspace(record_from, t_max, n_samples)
    nA = np.empty(n_samples)
    nB = np.empty(n_samples)
    psiA = np.empty(n_samples, dtype=complex)
    psiB = np.empty(n_samples, dtype=complex)

    sample_stride = max(1, n_samples // store_states) if store_states else 0
    rec = TrajectoryRecord(times=t_record, nA=nA, nB=nB, psiA=psiA, psiB=psiB,
                           final_rhoA=rho0A, final_rhoB=rho0B)

    def observe(idx, y):
        rhoA = y[:sz].reshape(dim, dim)
        rhoB = y[sz:].reshape(dim, dim)
        nA[idx] = np.einsum("ij,ji->", ops.n, rhoA).real
        nB[idx] = np.einsum("ij,ji->", ops.n, rhoB).real
        psiA[idx] = np.einsum("ij,ji->", ops.a, rhoA)
        psiB[idx] = np.einsum("ij,ji->", ops.a, rhoB)
        if sample_stride and idx % sample_stride == 0:
            rec.rhoA_samples.append(rhoA.copy())
            rec.rhoB_samples.append(rhoB.copy())
            rec.sample_times.append(t_record[idx])

    y = np.concatenate([rho0A.astype(complex).ravel(),
                        rho0B.astype(complex).ravel()])
    t_cur = 0.0
    idx = 0
    if record_from <= 1e-12:   # the grid starts at t = 0
        observe(0, y)
        idx = 1
    stationary = False
    herm_defect_seen = 0.0
    while t_cur < t_max - 1e-12:
        t_next = min(t_cur + chunk, t_max)
        mask = (t_record > t_cur + 1e-12) & (t_record <= t_next + 1e-12)
        t_eval = np.unique(np.concatenate([t_record[mask], [t_next]]))
        sol = solve_ivp(rhs, (t_cur, t_next), y, method="RK45",
                        rtol=dt_ctrl, atol=dt_ctrl * 1e-2, t_eval=t_eval)
        if not sol.success:
            raise RuntimeError(f"integrator failed: {sol.message}")
        for j, te in enumerate(sol.t):
            if idx < n_samples and abs(te - t_record[idx]) < 1e-9:
                observe(idx, sol.y[:, j])
                idx += 1
        y = sol.y[:, -1]
        # Hermiticity is an exact invariant of the flow; project out the
        # integrator's anti-Hermitian round-off at chunk boundaries and
        # keep the worst pre-projection defect as a diagnostic.
        rhoA = y[:sz].reshape(dim, dim)
        rhoB = y[sz:].reshape(dim, dim)
        herm_defect_seen = max(
            herm_defect_seen,
            np.abs(rhoA - rhoA.conj().T).max(),
            np.abs(rhoB - rhoB.conj().T).max())
        y = np.concatenate([(0.5 * (rhoA + rhoA.conj().T)).ravel(),
                            (0.5 * (rhoB + rhoB.conj().T)).ravel()])
        t_cur = t_next
        if check_truncation and dim > 2:
            pop = max(top_level_population(y[:sz].reshape(dim, dim)),
                      top_level_population(y[sz:].reshape(dim, dim)))
            if pop > TRUNCATION_TOL:
                raise TruncationError(
                    f"top-level population {pop:.2e} at t={t_cur:g}; raise n_max")
        resid = np.abs(rhs(t_cur, y)).max()
        if resid < STATIONARY_RTOL:
            stationary = True
            break

    if idx < n_samples:  # stationary early stop: pad the tail
        ylast = y
        while idx < n_samples:
            observe(idx, ylast)
            idx += 1

    rhoA = y[:sz].reshape(dim, dim)
    rhoB = y[sz:].reshape(dim, dim)
    rec.final_rhoA = rhoA
    rec.final_rhoB = rhoB
    diagA = density_diagnostics(rhoA)
    diagB = density_diagnostics(rhoB)
    rec.diagnostics = {
        "trace_drift": max(diagA["trace_dev"], diagB["trace_dev"]),
        "herm_defect": max(diagA["herm_defect"], diagB["herm_defect"]),
        "herm_defect_raw": herm_defect_seen,
        "min_eig": min(diagA["min_eig"], diagB["min_eig"]),
        "residual": float(np.abs(rhs(t_cur, y)).max()),
        "stationary": stationary,
        "t_stop": t_cur,
        "top_population": max(top_level_population(rhoA),
                              top_level_population(rhoB)),
    }
    return rec


def analyze_tail(times: np.ndarray, nA: np.ndarray, nB: np.ndarray,
                 residual: float, eps_cry: float = EPS_CRY,
                 eps_osc: float = EPS_OSC) -> dict:
    """Tail statistics of one trajectory: per-seed tag, delta_n,
    oscillation amplitude/period, and spectral-dominance flag.

    Raises UndecidedError when the tail is still drifting.
    """
    delta_n = float(np.mean(np.abs(nA - nB)))
    amp = float(nA.max() - nA.min())
    means = {"nA_mean": float(np.mean(nA)), "nB_mean": float(np.mean(nB))}
    if amp < eps_osc:
        if residual > STEADY_RESID:
            raise UndecidedError(
                f"tail not stationary (residual {residual:.2e}) "
                f"and not oscillating (amplitude {amp:.2e})")
        tag = PhaseTag.CRY if delta_n >= eps_cry else PhaseTag.UNI
        return {"tag": tag, "delta_n": delta_n, "amp": amp, "period": None,
                "dominant": False, **means}

    sig = nA - nA.mean()
    spec = np.abs(np.fft.rfft(sig))[1:]
    peak_idx = int(np.argmax(spec))
    med = float(np.median(spec))
    dominant = med > 0 and spec[peak_idx] >= PEAK_DOMINANCE * med
    period = None
    if dominant:
        window = times[-1] - times[0]
        period = float(window / (peak_idx + 1))
    if not dominant:
        # distinguish a slow transient drift from genuine oscillation
        k = max(1, len(nA) // 10)
        trend = abs(nA[-k:].mean() - nA[:k].mean())
        if trend > 0.5 * amp:
            raise UndecidedError(
                f"tail still drifting (trend {trend:.2e} vs amplitude {amp:.2e})")
    tag = PhaseTag.OSC
    return {"tag": tag, "delta_n": delta_n, "amp": amp, "period": period,
            "dominant": dominant, **means}


def default_seed_pairs(dim: int, name: str = "default"):
    """Seed density-matrix pairs used by classify.

    Every seed carries a small A-sublattice displacement: the coupled
    equations preserve exactly symmetric data, so a symmetric seed could
    never reveal a staggered attractor.
    """
    vac = vacuum_dm(dim)
    seeds = {
        "default": [
            (coherent_dm(0.1, dim), vac),
            (coherent_dm(1.05, dim), coherent_dm(1.0, dim)),
            (0.5 * fock_dm(min(1, dim - 1), dim) + 0.5 * vac, vac),
        ],
        "fast": [
            (coherent_dm(0.1, dim), vac),
            (coherent_dm(1.05, dim), coherent_dm(1.0, dim)),
        ],
    }
    if name not in seeds:
        raise ValueError(f"unknown seed set {name!r}")
    return seeds[name]


def merge_tags(tags) -> PhaseTag:
    uniq = set(tags)
    if PhaseTag.IRR in uniq:
        return PhaseTag.IRR
    if len(uniq) == 1:
        return next(iter(uniq))
    if uniq == {PhaseTag.UNI, PhaseTag.OSC}:
        return PhaseTag.UNI_OSC
    if uniq == {PhaseTag.UNI, PhaseTag.CRY}:
        return PhaseTag.UNI_CRY
    # {CRY, OSC} and the rare three-way split both report the
    # crystalline-oscillatory coexistence
    return PhaseTag.CRY_OSC


def _perturb(rho: np.ndarray, eps: float = 1e-6) -> np.ndarray:
    """Displace rho by a coherent amplitude eps (for divergence tests)."""
    from scipy.linalg import expm
    ops = get_ops(rho.shape[0] - 1)
    D = expm(eps * ops.adag - eps * ops.a)
    return D @ rho @ D.conj().T


def classify(params: ModelParams, seeds=None, t_max: float = 400.0,
             record_from: float = 200.0, dt_ctrl: float = 1e-8,
             n_samples: int = 2048, eps_cry: float = EPS_CRY,
             eps_osc: float = EPS_OSC, keep_records: bool = False):
    """Phase label of one parameter point from a battery of seeds.

    Per-seed labels are merged: identical labels pass through, mixed
    {UNI, OSC} / {UNI, CRY} / {CRY, OSC} become the bistability labels.
    A non-dominant spectrum plus sensitivity to a 1e-6 seed perturbation
    is labeled IRR.  A still-drifting tail raises UndecidedError.
    """
    if seeds is None:
        seeds = default_seed_pairs(params.dim)
    if len(seeds) < 2:
        raise ValueError("classify needs at least two seeds")
    if not any(np.abs(sa - sb).max() > 1e-12 for sa, sb in seeds):
        raise ValueError("classify needs at least one A/B-asymmetric seed")

    results = []
    records = []
    for rho0A, rho0B in seeds:
        rec = evolve_pair(rho0A, rho0B, params, t_max=t_max,
                          record_from=record_from, dt_ctrl=dt_ctrl,
                          n_samples=n_samples)
        info = analyze_tail(rec.times, rec.nA, rec.nB,
                            rec.diagnostics["residual"], eps_cry, eps_osc)
        if info["tag"] is PhaseTag.OSC and not info["dominant"]:
            pert = evolve_pair(_perturb(rho0A), rho0B, params, t_max=t_max,
                               record_from=record_from, dt_ctrl=dt_ctrl,
                               n_samples=n_samples)
            div = float(np.abs(pert.nA - rec.nA).max())
            if div > 1e-3:
                info["tag"] = PhaseTag.IRR
        results.append(info)
        records.append(rec)

    tag = merge_tags([r["tag"] for r in results])
    delta_n = max(r["delta_n"] for r in results)
    amp = max(r["amp"] for r in results)
    period = None
    osc = [r for r in results if r["tag"] is PhaseTag.OSC and r["period"]]
    if osc:
        period = max(osc, key=lambda r: r["amp"])["period"]
    rep = max(results, key=lambda r: r["delta_n"])
    label = PhaseLabel(tag=tag, delta_n=delta_n, osc_amplitude=amp,
                       osc_period=period,
                       per_seed=tuple(r["tag"].value for r in results),
                       n_a=rep["nA_mean"], n_b=rep["nB_mean"])
    if keep_records:
        return label, records
    return label

"""Semiclassical limit (U = J2 = Jn = 0, kappa = 1): six real ODEs for
(w, x, y) on the two sublattices, closed-form fixed points at J = 0,
Newton-refined fixed points at J != 0, and Jacobian linear stability.

Conventions: tr(a rho) = x - i y per sublattice, w = <n>.  The equations
are written with kappa fixed to 1; the general-kappa form is not used
anywhere in this package.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fock import ModelParams

RESIDUAL_TOL = 1e-10
STABILITY_MARGIN = 1e-9


class ScopeError(ValueError):
    """Called outside the U = J2 = Jn = 0, kappa = 1 regime."""


@dataclass(frozen=True)
class FixedPointReport:
    state: np.ndarray            # (wA, xA, yA, wB, xB, yB)
    kind: str                    # "uniform" | "nonuniform"
    eigenvalues: np.ndarray      # 6 complex eigenvalues of the Jacobian
    stability: str               # "stable" | "unstable" | "hopf-marginal"

    @property
    def wA(self) -> float:
        return float(self.state[0])

    @property
    def wB(self) -> float:
        return float(self.state[3])


def _check_scope(params: ModelParams):
    if params.u != 0 or params.zj2 != 0 or params.zjn != 0:
        raise ScopeError("semiclassical equations require u = zj2 = zjn = 0")
    if params.kappa != 1.0:
        raise ScopeError("semiclassical equations are written for kappa = 1")


def semiclassical_rhs(s: np.ndarray, params: ModelParams) -> np.ndarray:
    """Time derivative of (wA, xA, yA, wB, xB, yB)."""
    _check_scope(params)
    wA, xA, yA, wB, xB, yB = s
    d, om, zv, zj = params.delta, params.omega, params.zv, params.zj
    dA = -d + zv * wB   # effective detuning seen by sublattice A
    dB = -d + zv * wA
    return np.array([
        2 * om * yA + 2 * zj * (xA * yB - yA * xB) - wA,
        -dA * yA + zj * yB - xA / 2,
        dA * xA - zj * xB + om - yA / 2,
        2 * om * yB + 2 * zj * (xB * yA - yB * xA) - wB,
        -dB * yB + zj * yA - xB / 2,
        dB * xB - zj * xA + om - yB / 2,
    ])


def jacobian(s: np.ndarray, params: ModelParams) -> np.ndarray:
    """Analytic Jacobian of semiclassical_rhs (independent of Omega)."""
    _check_scope(params)
    wA, xA, yA, wB, xB, yB = s
    om, zv, zj = params.omega, params.zv, params.zj
    d = params.delta
    dA = -d + zv * wB
    dB = -d + zv * wA
    J = np.zeros((6, 6))
    # d(wA_dot)/d*
    J[0] = [-1, 2 * zj * yB, 2 * om - 2 * zj * xB, 0, -2 * zj * yA, 2 * zj * xA]
    # d(xA_dot)/d*
    J[1] = [0, -0.5, -dA, -zv * yA, 0, zj]
    # d(yA_dot)/d*
    J[2] = [0, dA, -0.5, zv * xA, -zj, 0]
    # d(wB_dot)/d*
    J[3] = [0, -2 * zj * yB, 2 * zj * xB, -1, 2 * zj * yA, 2 * om - 2 * zj * xA]
    # d(xB_dot)/d*
    J[4] = [-zv * yB, 0, zj, 0, -0.5, -dB]
    # d(yB_dot)/d*
    J[5] = [zv * xB, -zj, 0, 0, dB, -0.5]
    return J


def _classify_eigs(eigs: np.ndarray) -> str:
    re = eigs.real
    if np.all(re < -STABILITY_MARGIN):
        return "stable"
    marginal = np.abs(re) <= STABILITY_MARGIN
    if marginal.sum() == 2 and np.all(re[~marginal] < 0):
        pair = eigs[marginal]
        if abs(pair[0].imag) > 0 and abs(pair.sum().imag) < 1e-6 * abs(pair[0].imag):
            return "hopf-marginal"
    return "unstable"


def _report(state: np.ndarray, kind: str, params: ModelParams) -> FixedPointReport:
    eigs = np.linalg.eigvals(jacobian(state, params))
    eigs = eigs[np.lexsort((eigs.imag, eigs.real))]
    return FixedPointReport(state=state, kind=kind, eigenvalues=eigs,
                            stability=_classify_eigs(eigs))


def nonuniform_existence_bound(delta: float, omega: float) -> float:
    """Smallest zV (for zV > 0) above which the nonuniform pair exists at J=0."""
    gamma = 4 * delta ** 2 + 1
    return gamma * (np.sqrt(gamma) - 2 * delta) / (4 * omega ** 2)


def uniform_cubic_coeffs(params: ModelParams) -> np.ndarray:
    """Coefficients (descending) of the uniform fixed-point cubic in p."""
    d, om, zv = params.delta, params.omega, params.zv
    gamma = 4 * d ** 2 + 1
    return np.array([16 * (zv * om) ** 2, -16 * zv * om * d, gamma, -2 * om])


def count_uniform_roots(params: ModelParams) -> int:
    """Number (1 or 3) of positive real roots of the uniform cubic,
    via the closed-form inequality pair."""
    if params.omega <= 0 or params.zv <= 0:
        raise ScopeError("count_uniform_roots requires omega > 0 and zv > 0")
    d, om, zv = params.delta, params.omega, params.zv
    if d <= np.sqrt(3) / 2:
        return 1
    xi = 4 * d ** 2 - 3
    center = (d * xi + 12 * d) / (54 * om ** 2)
    halfwidth = xi ** 1.5 / (108 * om ** 2)
    return 3 if abs(zv - center) < halfwidth else 1


def fixed_points_J0(params: ModelParams) -> list[FixedPointReport]:
    """Closed-form fixed points at J = 0.

    Returns all uniform points (1 or 3) and, when the quadratic has two
    distinct real roots, one nonuniform report with the convention
    wA >= wB (the A<->B mirror is implied).
    """
    _check_scope(params)
    if params.zj != 0:
        raise ScopeError("fixed_points_J0 requires zj = 0")
    d, om, zv = params.delta, params.omega, params.zv
    if om <= 0:
        raise ScopeError("fixed_points_J0 requires omega > 0")
    gamma = 4 * d ** 2 + 1

    reports = []
    if zv == 0:
        # linear limit: <a> = Omega/(delta + i/2), coherent occupation
        y = 2 * om / gamma
        x = 4 * d * om / gamma
        w = 4 * om ** 2 / gamma
        s = np.array([w, x, y, w, x, y])
        return [_report(s, "uniform", params)]

    # uniform branch: positive real roots of the cubic in p
    roots = np.roots(uniform_cubic_coeffs(params))
    for p in roots:
        if abs(p.imag) > 1e-9 * max(1.0, abs(p.real)) or p.real <= 0:
            continue
        p = p.real
        w = 2 * om * p
        x = 2 * p * (d - 2 * zv * om * p)
        s = _polish(np.array([w, x, p, w, x, p]), params)
        reports.append(_report(s, "uniform", params))

    # nonuniform branch: two distinct real roots of the quadratic
    disc = (16 * (gamma * d + 2 * zv * om ** 2)) ** 2 - 4 * 16 * gamma * gamma ** 2
    if disc > 0:
        b = 16 * (gamma * d + 2 * zv * om ** 2)
        sq = np.sqrt(disc)
        pA, pB = (b + sq) / (32 * gamma), (b - sq) / (32 * gamma)
        state = np.array([
            2 * pA / zv, (8 * d * pA - 4 * d ** 2 - 1) / (4 * zv * om), pA / (zv * om),
            2 * pB / zv, (8 * d * pB - 4 * d ** 2 - 1) / (4 * zv * om), pB / (zv * om),
        ])
        state = _polish(state, params)
        if state[0] < state[3]:
            state = np.concatenate([state[3:], state[:3]])
        reports.append(_report(state, "nonuniform", params))

    return reports


def _polish(s: np.ndarray, params: ModelParams, max_iter: int = 50):
    """A few Newton steps to push a closed-form root to residual < 1e-10."""
    for _ in range(max_iter):
        f = semiclassical_rhs(s, params)
        if np.abs(f).max() < RESIDUAL_TOL / 10:
            break
        s = s - np.linalg.solve(jacobian(s, params), f)
    return s


def _newton(s0: np.ndarray, params: ModelParams, max_iter: int = 200):
    """Damped Newton iteration; returns the root or None."""
    s = np.asarray(s0, dtype=float).copy()
    f = semiclassical_rhs(s, params)
    res = np.abs(f).max()
    for _ in range(max_iter):
        if res < RESIDUAL_TOL:
            return s
        try:
            step = np.linalg.solve(jacobian(s, params), f)
        except np.linalg.LinAlgError:
            return None
        lam = 1.0
        while lam > 1e-8:
            s_new = s - lam * step
            f_new = semiclassical_rhs(s_new, params)
            res_new = np.abs(f_new).max()
            if res_new < res:
                break
            lam /= 2
        else:
            return None
        s, f, res = s_new, f_new, res_new
    return s if res < RESIDUAL_TOL else None


def fixed_points_numeric(params: ModelParams, seeds=None,
                         n_random: int = 20, rng_seed: int = 12345):
    """Fixed points for any zJ via Newton from a battery of seeds.

    Default seeds: the J=0 closed-form points, the origin, and n_random
    uniform draws in [0, 5]^6.  Duplicates are merged at distance 1e-6.
    Returns (reports, diagnostics) with the count of non-converged seeds.
    """
    _check_scope(params)
    if seeds is None:
        seeds = []
        if params.zv != 0 and params.omega > 0:
            try:
                j0 = fixed_points_J0(params.replace(zj=0.0))
            except ScopeError:
                j0 = []
            for rep in j0:
                seeds.append(rep.state)
                if rep.kind == "nonuniform":
                    seeds.append(np.concatenate([rep.state[3:], rep.state[:3]]))
        seeds.append(np.zeros(6))
        rng = np.random.default_rng(rng_seed)
        seeds.extend(rng.uniform(0, 5, size=(n_random, 6)))

    found: list[np.ndarray] = []
    failed = 0
    for s0 in seeds:
        root = _newton(np.asarray(s0, dtype=float), params)
        if root is None:
            failed += 1
            continue
        if any(np.abs(root - r).max() < 1e-6 for r in found):
            continue
        # A<->B mirror of an already-found nonuniform point counts as the same
        mirror = np.concatenate([root[3:], root[:3]])
        if any(np.abs(mirror - r).max() < 1e-6 for r in found):
            continue
        found.append(root)

    reports = []
    for s in found:
        nonuni = abs(s[0] - s[3]) > 1e-8 or abs(s[1] - s[4]) > 1e-8
        if nonuni and s[0] < s[3]:
            s = np.concatenate([s[3:], s[:3]])
        reports.append(_report(s, "nonuniform" if nonuni else "uniform", params))
    reports.sort(key=lambda r: (r.kind, round(r.wA, 9), round(r.wB, 9)))
    diagnostics = {"seeds": len(seeds), "failed": failed}
    return reports, diagnostics

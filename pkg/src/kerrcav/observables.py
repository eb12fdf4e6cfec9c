"""Order parameter, Wigner function, and quadrature squeezing of a
single-site density matrix.

The Wigner function uses the displaced-parity evaluation
W(x, p) = sum_n (-1)^n <n| D(-alpha) rho D(alpha) |n>,  alpha = (x+ip)/sqrt(2),
which in these units integrates to pi * tr(rho) over the x-p plane and
peaks at 1 for the vacuum.  Quadratures are X1 = a + a^dag and
X2 = i(a^dag - a), so a coherent state has dX1 = dX2 = 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .meanfield import get_ops

EPS_SQUEEZE = 1e-3   # dX below 1 - EPS_SQUEEZE counts as squeezed
GRID_ADEQUACY = 1e-6  # boundary |W| relative to the grid maximum


@dataclass
class WignerGrid:
    x_axis: np.ndarray
    p_axis: np.ndarray
    values: np.ndarray       # shape (len(x_axis), len(p_axis))
    adequate: bool = True    # boundary |W| < 1e-6 * max|W|

    def grid_sum(self) -> float:
        dx = self.x_axis[1] - self.x_axis[0]
        dp = self.p_axis[1] - self.p_axis[0]
        return float(self.values.sum() * dx * dp)


@dataclass
class SqueezingReport:
    dX1: float
    dX2: float
    squeezed: bool


def order_parameter(nA_tail: np.ndarray, nB_tail: np.ndarray) -> float:
    """Time-averaged |<n_A> - <n_B>| over the recorded tail."""
    return float(np.mean(np.abs(np.asarray(nA_tail) - np.asarray(nB_tail))))


def wigner(rho: np.ndarray, x_axis: np.ndarray, p_axis: np.ndarray) -> WignerGrid:
    """Wigner function on the grid, unnormalized convention (vacuum peak 1)."""
    dim = rho.shape[0]
    ops = get_ops(dim - 1)
    parity = (-1.0) ** np.arange(dim)
    values = np.empty((len(x_axis), len(p_axis)))
    for i, x in enumerate(x_axis):
        for j, p in enumerate(p_axis):
            alpha = (x + 1j * p) / np.sqrt(2)
            D = expm(alpha * ops.adag - np.conj(alpha) * ops.a)
            rot = D.conj().T @ rho @ D
            values[i, j] = np.dot(parity, np.diag(rot).real)
    boundary = max(np.abs(values[0, :]).max(), np.abs(values[-1, :]).max(),
                   np.abs(values[:, 0]).max(), np.abs(values[:, -1]).max())
    adequate = boundary < GRID_ADEQUACY * np.abs(values).max()
    return WignerGrid(x_axis=np.asarray(x_axis, dtype=float),
                      p_axis=np.asarray(p_axis, dtype=float),
                      values=values, adequate=adequate)


def wigner_to_csv(grid: WignerGrid, path):
    """Export as CSV `x,p,w`, one row per node, 9 significant digits, LF."""
    lines = ["x,p,w"]
    for i, x in enumerate(grid.x_axis):
        for j, p in enumerate(grid.p_axis):
            lines.append(f"{x:.9g},{p:.9g},{grid.values[i, j]:.9g}")
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def quadratures(rho: np.ndarray) -> SqueezingReport:
    """Standard deviations of X1 = a + a^dag and X2 = i(a^dag - a)."""
    ops = get_ops(rho.shape[0] - 1)
    X1 = ops.a + ops.adag
    X2 = 1j * (ops.adag - ops.a)
    outs = []
    for X in (X1, X2):
        m1 = np.einsum("ij,ji->", X, rho).real
        m2 = np.einsum("ij,ji->", X @ X, rho).real
        outs.append(np.sqrt(max(m2 - m1 ** 2, 0.0)))
    dX1, dX2 = outs
    return SqueezingReport(dX1=float(dX1), dX2=float(dX2),
                           squeezed=min(dX1, dX2) < 1.0 - EPS_SQUEEZE)


def min_quadrature(rhos) -> float:
    """Minimum of min(dX1, dX2) over a sequence of density matrices."""
    return min(min(quadratures(r).dX1, quadratures(r).dX2) for r in rhos)


def squeezing_tag(rhoA_samples, rhoB_samples) -> str:
    """'both', 'one', or 'none' sublattices squeezed over the tail samples.

    A sublattice counts as squeezed if its quadrature deficit dips below
    1 - EPS_SQUEEZE at any recorded time (squeezing can be time-dependent).
    """
    sA = min_quadrature(rhoA_samples) < 1.0 - EPS_SQUEEZE
    sB = min_quadrature(rhoB_samples) < 1.0 - EPS_SQUEEZE
    return "both" if (sA and sB) else ("one" if (sA or sB) else "none")


def squeezing_region_map(points) -> list[str]:
    """Tag each phase-map point; points yield (rhoA_samples, rhoB_samples)."""
    return [squeezing_tag(rA, rB) for rA, rB in points]

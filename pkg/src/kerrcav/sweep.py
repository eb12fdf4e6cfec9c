"""Phase-diagram sweeps over 2-D parameter grids, with deterministic CSV
output and figure-reproduction recipes.

The grid is mapped point by point (axis2 fastest) to PhaseMapRow records.
Points are independent, so the grid can be partitioned across worker
processes; results are merged by index and two runs of the same spec are
byte-identical regardless of worker count.  Per-point failures become
UNDECIDED rows and never abort a sweep.

Engines:
  semiclassical -- fixed-point stability analysis (plus a vectorized
                   fixed-step integration of flagged oscillatory points
                   to measure amplitudes and periods);
  meanfield     -- full quantum classify() per point;
  cluster       -- 2x2-cluster evolution from the staggered seed.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, asdict

import numpy as np

from . import cluster as cm
from . import meanfield as mf
from . import semiclassical as sc
from .fock import ModelParams

WORKERS_ENV = "KERRCAV_WORKERS"
AXIS_FIELDS = ("delta", "omega", "u", "zv", "zj", "zj2", "zjn")
CSV_HEADER = "axis1,axis2,n_a,n_b,delta_n,label,osc_amp,osc_period"


class SpecError(ValueError):
    """Invalid sweep specification."""


@dataclass(frozen=True)
class Axis:
    name: str
    start: float
    stop: float
    count: int

    def values(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.count)

    def __post_init__(self):
        if self.name not in AXIS_FIELDS:
            raise SpecError(f"axis parameter {self.name!r} not one of "
                            f"{AXIS_FIELDS}")
        if self.count < 2:
            raise SpecError("axis count must be >= 2")


@dataclass(frozen=True)
class SweepSpec:
    axis1: Axis
    axis2: Axis
    fixed: ModelParams
    engine: str = "semiclassical"
    seeds: str = "default"
    output: str | None = None

    def __post_init__(self):
        if self.engine not in ("semiclassical", "meanfield", "cluster"):
            raise SpecError(f"unknown engine {self.engine!r}")
        if self.axis1.name == self.axis2.name:
            raise SpecError("axes must name distinct parameters")
        if self.engine == "semiclassical":
            frozen = {"u", "zj2", "zjn"}
            axes = {self.axis1.name, self.axis2.name}
            if axes & frozen or self.fixed.u != 0 or self.fixed.zj2 != 0 \
                    or self.fixed.zjn != 0:
                raise SpecError(
                    "semiclassical engine requires u = zj2 = zjn = 0")


@dataclass
class PhaseMapRow:
    axis1: float
    axis2: float
    n_a: float
    n_b: float
    delta_n: float
    label: str
    osc_amp: float
    osc_period: float | None = None
    per_seed: tuple = ()


def _fmt(v) -> str:
    if v is None:
        return ""
    return f"{v:.9g}"


def rows_to_csv(rows, path):
    lines = [CSV_HEADER]
    for r in rows:
        lines.append(",".join([
            _fmt(r.axis1), _fmt(r.axis2), _fmt(r.n_a), _fmt(r.n_b),
            _fmt(r.delta_n), r.label, _fmt(r.osc_amp), _fmt(r.osc_period)]))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def rows_to_csv_bytes(rows) -> bytes:
    lines = [CSV_HEADER]
    for r in rows:
        lines.append(",".join([
            _fmt(r.axis1), _fmt(r.axis2), _fmt(r.n_a), _fmt(r.n_b),
            _fmt(r.delta_n), r.label, _fmt(r.osc_amp), _fmt(r.osc_period)]))
    return ("\n".join(lines) + "\n").encode()


# ---------------------------------------------------------------------------
# semiclassical engine: fixed points + batched oscillation measurement

def _sc_fixed_point_scan(params: ModelParams):
    """Fixed points of one parameter point, or None for the trivial
    omega = 0 vacuum case."""
    if params.omega <= 0:
        return None
    if params.zj == 0:
        return sc.fixed_points_J0(params)
    reports, _ = sc.fixed_points_numeric(params)
    return reports


def _spiral(report: sc.FixedPointReport) -> bool:
    """Unstable through exactly one complex pair: limit-cycle candidate."""
    re = report.eigenvalues.real
    unstable = re > sc.STABILITY_MARGIN
    if report.stability == "hopf-marginal":
        return True
    if report.stability != "unstable" or unstable.sum() != 2:
        return False
    pair = report.eigenvalues[unstable]
    return abs(pair[0].imag) > 1e-9


def _sc_point(params: ModelParams):
    """Stage-1 label of a semiclassical point from fixed-point stability.

    Returns (tags, rep_state, spiral_state):  rep_state supplies the n_a,
    n_b columns for stationary labels; spiral_state seeds the oscillation
    measurement when OSC is among the candidate tags.
    """
    reports = _sc_fixed_point_scan(params)
    if reports is None:
        return {mf.PhaseTag.UNI}, np.zeros(6), None
    stable_uni = [r for r in reports if r.kind == "uniform"
                  and r.stability == "stable"]
    stable_non = [r for r in reports if r.kind == "nonuniform"
                  and r.stability == "stable"]
    spirals = [r for r in reports if _spiral(r)]
    tags = set()
    if stable_uni:
        tags.add(mf.PhaseTag.UNI)
    if stable_non:
        tags.add(mf.PhaseTag.CRY)
    if spirals:
        tags.add(mf.PhaseTag.OSC)
    if stable_non:
        rep = stable_non[0].state
    elif stable_uni:
        rep = stable_uni[0].state
    elif reports:
        rep = reports[0].state
    else:
        rep = np.zeros(6)
    spiral_state = spirals[0].state if spirals else None
    if not tags:
        # no attractor candidate at all: integrate from a generic seed
        tags = {mf.PhaseTag.OSC}
        spiral_state = np.array([0.01, 0.1, 0.0, 0.0, 0.0, 0.0])
    return tags, rep, spiral_state


def _sc_measure_cycles(states, params_list, t_max=400.0, t_burn=200.0,
                       dt=0.005, stride=20):
    """Fixed-step RK4 of many 6-dim systems at once (columns independent).

    Returns per-column tail statistics (delta_n, amplitude, period, means).
    """
    m = len(params_list)
    y = np.array(states, dtype=float).T.copy()   # (6, m)
    d = np.array([p.delta for p in params_list])
    om = np.array([p.omega for p in params_list])
    zv = np.array([p.zv for p in params_list])
    zj = np.array([p.zj for p in params_list])

    def rhs(y):
        wA, xA, yA, wB, xB, yB = y
        dA = -d + zv * wB
        dB = -d + zv * wA
        return np.stack([
            2 * om * yA + 2 * zj * (xA * yB - yA * xB) - wA,
            -dA * yA + zj * yB - xA / 2,
            dA * xA - zj * xB + om - yA / 2,
            2 * om * yB + 2 * zj * (xB * yA - yB * xA) - wB,
            -dB * yB + zj * yA - xB / 2,
            dB * xB - zj * xA + om - yB / 2,
        ])

    n_steps = int(round(t_max / dt))
    burn_steps = int(round(t_burn / dt))
    n_rec = (n_steps - burn_steps) // stride + 1
    recA = np.empty((n_rec, m))
    recB = np.empty((n_rec, m))
    rec_i = 0
    for step in range(n_steps + 1):
        if step >= burn_steps and (step - burn_steps) % stride == 0 \
                and rec_i < n_rec:
            recA[rec_i] = y[0]
            recB[rec_i] = y[3]
            rec_i += 1
        if step == n_steps:
            break
        k1 = rhs(y)
        k2 = rhs(y + 0.5 * dt * k1)
        k3 = rhs(y + 0.5 * dt * k2)
        k4 = rhs(y + dt * k3)
        y = y + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)

    window = (n_rec - 1) * stride * dt
    out = []
    bad = ~np.isfinite(recA).all(axis=0)
    amps = recA.max(axis=0) - recA.min(axis=0)
    dns = np.abs(recA - recB).mean(axis=0)
    spec = np.abs(np.fft.rfft(recA - recA.mean(axis=0), axis=0))[1:]
    for c in range(m):
        if bad[c]:
            out.append(None)
            continue
        peak_idx = int(np.argmax(spec[:, c]))
        med = float(np.median(spec[:, c]))
        dominant = med > 0 and spec[peak_idx, c] >= mf.PEAK_DOMINANCE * med
        period = window / (peak_idx + 1) if dominant else None
        out.append({
            "amp": float(amps[c]), "delta_n": float(dns[c]),
            "period": period, "dominant": dominant,
            "nA_mean": float(recA[:, c].mean()),
            "nB_mean": float(recB[:, c].mean()),
        })
    return out


def _sc_rows(spec: SweepSpec, points):
    """Rows for a list of (i, j, params) semiclassical grid points."""
    staged = []
    for i, j, params in points:
        try:
            tags, rep, spiral = _sc_point(params)
        except Exception:
            staged.append((i, j, None, None, None))
            continue
        staged.append((i, j, tags, rep, spiral))

    # batch-measure every point with an oscillatory candidate
    osc_idx = [k for k, (_, _, tags, _, sp) in enumerate(staged)
               if tags is not None and mf.PhaseTag.OSC in tags
               and sp is not None]
    measures = {}
    if osc_idx:
        seeds = []
        plist = []
        for k in osc_idx:
            _, _, _, _, spiral = staged[k]
            seed = spiral + np.array([1e-2, 1e-2, 0, -1e-2, -1e-2, 0])
            seeds.append(seed)
            plist.append(points[k][2])
        res = _sc_measure_cycles(seeds, plist)
        for k, r in zip(osc_idx, res):
            measures[k] = r

    ax1 = spec.axis1.values()
    ax2 = spec.axis2.values()
    rows = []
    for k, (i, j, tags, rep, spiral) in enumerate(staged):
        a1, a2 = float(ax1[i]), float(ax2[j])
        if tags is None:
            rows.append(PhaseMapRow(a1, a2, math.nan, math.nan, math.nan,
                                    mf.PhaseTag.UNDECIDED.value, math.nan))
            continue
        n_a, n_b = float(rep[0]), float(rep[3])
        delta_n = abs(n_a - n_b)
        amp = 0.0
        period = None
        if k in measures:
            meas = measures[k]
            if meas is None:
                rows.append(PhaseMapRow(a1, a2, math.nan, math.nan, math.nan,
                                        mf.PhaseTag.UNDECIDED.value, math.nan))
                continue
            if meas["amp"] < mf.EPS_OSC:
                tags = tags - {mf.PhaseTag.OSC} or {mf.PhaseTag.UNI}
            else:
                amp = meas["amp"]
                period = meas["period"]
                if not meas["dominant"]:
                    tags = (tags - {mf.PhaseTag.OSC}) | {mf.PhaseTag.IRR}
                if len(tags) == 1:  # pure oscillatory point: tail statistics
                    n_a, n_b = meas["nA_mean"], meas["nB_mean"]
                    delta_n = meas["delta_n"]
                else:
                    delta_n = max(delta_n, meas["delta_n"])
        tag = mf.merge_tags(tags)
        rows.append(PhaseMapRow(a1, a2, n_a, n_b, delta_n, tag.value,
                                amp, period))
    return rows


# ---------------------------------------------------------------------------
# quantum engines

def _mf_row(a1, a2, params: ModelParams, seeds_name: str):
    try:
        label = mf.classify(params,
                            seeds=mf.default_seed_pairs(params.dim, seeds_name))
        return PhaseMapRow(a1, a2, label.n_a, label.n_b, label.delta_n,
                           label.tag.value, label.osc_amplitude,
                           label.osc_period, per_seed=label.per_seed)
    except Exception:
        return PhaseMapRow(a1, a2, math.nan, math.nan, math.nan,
                           mf.PhaseTag.UNDECIDED.value, math.nan)


def _cluster_row(a1, a2, params: ModelParams):
    try:
        rho0 = cm._staggered_seed(params.n_max, "cluster")
        traj = cm.cluster_evolve(rho0, params,
                                 check_truncation=params.n_max > 3)
        info = mf.analyze_tail(traj.times, traj.nA, traj.nB,
                               traj.diagnostics["residual"])
        return PhaseMapRow(a1, a2, info["nA_mean"], info["nB_mean"],
                           info["delta_n"], info["tag"].value, info["amp"],
                           info["period"])
    except Exception:
        return PhaseMapRow(a1, a2, math.nan, math.nan, math.nan,
                           mf.PhaseTag.UNDECIDED.value, math.nan)


def _eval_block(spec: SweepSpec, flat_indices):
    ax1 = spec.axis1.values()
    ax2 = spec.axis2.values()
    n2 = spec.axis2.count
    points = []
    for flat in flat_indices:
        i, j = divmod(flat, n2)
        params = spec.fixed.replace(**{spec.axis1.name: float(ax1[i]),
                                       spec.axis2.name: float(ax2[j])})
        points.append((i, j, params))
    if spec.engine == "semiclassical":
        return _sc_rows(spec, points)
    rows = []
    for i, j, params in points:
        a1, a2 = float(ax1[i]), float(ax2[j])
        if spec.engine == "meanfield":
            rows.append(_mf_row(a1, a2, params, spec.seeds))
        else:
            rows.append(_cluster_row(a1, a2, params))
    return rows


def n_workers() -> int:
    env = os.environ.get(WORKERS_ENV)
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def run_sweep(spec: SweepSpec, workers: int | None = None):
    """Evaluate the grid; returns (rows, stats).  Writes spec.output CSV
    when set.  Rows are ordered axis2-fastest regardless of worker count."""
    if workers is None:
        workers = n_workers()
    total = spec.axis1.count * spec.axis2.count
    all_idx = list(range(total))
    if workers <= 1:
        rows = _eval_block(spec, all_idx)
    else:
        n_blocks = min(workers * 4, total)
        blocks = [all_idx[b::n_blocks] for b in range(n_blocks)]
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_eval_block, [spec] * len(blocks), blocks))
        merged = [None] * total
        for block, block_rows in zip(blocks, results):
            for flat, row in zip(block, block_rows):
                merged[flat] = row
        rows = merged
    failures = sum(1 for r in rows if r.label == mf.PhaseTag.UNDECIDED.value)
    stats = {"points": total, "failures": failures,
             "failure_fraction": failures / total}
    if spec.output:
        rows_to_csv(rows, spec.output)
    return rows, stats


# ---------------------------------------------------------------------------
# figure-reproduction recipes

def _axis(name, start, stop, count, scale=1.0):
    return Axis(name, start, stop, max(2, int(round(count * scale))))


FIGURE_IDS = ("fig1", "fig2a", "fig2b", "fig2c", "fig3", "fig4",
              "fig8", "fig9", "fig10")


def reproduce(figure_id: str, outdir: str = ".", scale: float = 1.0,
              workers: int | None = None) -> dict:
    """Run one figure recipe; emits a CSV (or threshold table) plus a JSON
    manifest of all parameters and tolerances.  `scale` shrinks the grid
    resolution for quick runs; the manifest records the actual grid."""
    os.makedirs(outdir, exist_ok=True)
    if figure_id not in FIGURE_IDS:
        raise SpecError(f"unknown figure id {figure_id!r}; "
                        f"choose from {FIGURE_IDS}")
    csv_path = os.path.join(outdir, f"{figure_id}.csv")
    manifest_path = os.path.join(outdir, f"{figure_id}_manifest.json")
    manifest = {"figure": figure_id,
                "tolerances": {"eps_cry": mf.EPS_CRY, "eps_osc": mf.EPS_OSC,
                               "t_max": 400.0, "burn_in": 200.0}}

    if figure_id == "fig8":
        base = ModelParams(delta=0.0, omega=0.75, n_max=1)
        tol_mf, tol_cl = 0.05, 0.1
        vc_mf = cm.critical_v(base, 4.0, 8.0, tol=tol_mf, engine="meanfield")
        vc_cl = cm.critical_v(base, 9.0, 14.0, tol=tol_cl, engine="cluster")
        with open(csv_path, "w", newline="\n") as fh:
            fh.write("engine,zv_c\n")
            fh.write(f"meanfield,{vc_mf:.9g}\n")
            fh.write(f"cluster,{vc_cl:.9g}\n")
        manifest.update({"params": {"delta": 0.0, "omega": 0.75, "n_max": 1},
                         "bisect_tol": {"meanfield": tol_mf,
                                        "cluster": tol_cl},
                         "zv_c": {"meanfield": vc_mf, "cluster": vc_cl}})
        with open(manifest_path, "w") as fh:
            json.dump(manifest, fh, indent=2)
        return {"csv": csv_path, "manifest": manifest_path}

    if figure_id == "fig9":
        omegas = np.linspace(0.0, 1.5, max(2, int(round(50 * scale))))
        base_mf = ModelParams(delta=0.75, u=2.0, zv=5.0, n_max=7)
        base_cl = base_mf.replace(n_max=3)
        lines = ["omega,delta_n_mf,delta_n_cluster"]
        for om in omegas:
            dn_mf = cm.steady_delta_n(base_mf.replace(omega=float(om)),
                                      engine="meanfield",
                                      check_truncation=False)
            dn_cl = cm.steady_delta_n(base_cl.replace(omega=float(om)),
                                      engine="cluster",
                                      check_truncation=False)
            lines.append(f"{om:.9g},{dn_mf:.9g},{dn_cl:.9g}")
        with open(csv_path, "w", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")
        manifest.update({"params": {"delta": 0.75, "u": 2.0, "zv": 5.0,
                                    "n_max_mf": 7, "n_max_cluster": 3},
                         "omega_grid": [float(omegas[0]), float(omegas[-1]),
                                        len(omegas)]})
        with open(manifest_path, "w") as fh:
            json.dump(manifest, fh, indent=2)
        return {"csv": csv_path, "manifest": manifest_path}

    recipes = {
        "fig1": SweepSpec(
            axis1=_axis("delta", -1.0, 1.5, 126, scale),
            axis2=_axis("omega", 0.0, 1.0, 101, scale),
            fixed=ModelParams(zv=0.5), engine="semiclassical"),
        "fig2a": SweepSpec(
            axis1=_axis("zj", 0.0, 1.0, 101, scale),
            axis2=_axis("delta", -1.0, 1.5, 126, scale),
            fixed=ModelParams(omega=1.0, zv=0.5), engine="semiclassical"),
        "fig2b": SweepSpec(
            axis1=_axis("zj", 0.0, 1.0, 101, scale),
            axis2=_axis("delta", -1.0, 1.5, 126, scale),
            fixed=ModelParams(omega=0.6, zv=0.5), engine="semiclassical"),
        "fig2c": SweepSpec(
            axis1=_axis("zj", 0.0, 1.0, 101, scale),
            axis2=_axis("zv", 0.0, 2.0, 101, scale),
            fixed=ModelParams(omega=0.6, delta=0.2), engine="semiclassical"),
        "fig3": SweepSpec(
            axis1=_axis("zj", 0.0, 1.0, 101, scale),
            axis2=_axis("delta", -1.0, 1.5, 126, scale),
            fixed=ModelParams(omega=0.6, zv=0.5, zj2=0.05, zjn=0.05,
                              n_max=15),
            engine="meanfield", seeds="fast"),
        "fig4": SweepSpec(
            axis1=_axis("omega", 0.0, 1.5, 101, scale),
            axis2=_axis("delta", 0.0, 1.5, 101, scale),
            fixed=ModelParams(u=2.0, zv=5.0, n_max=7),
            engine="meanfield", seeds="fast"),
        "fig10": SweepSpec(
            axis1=_axis("omega", 0.0, 1.5, 101, scale),
            axis2=_axis("delta", -1.5, 1.5, 101, scale),
            fixed=ModelParams(u=-4.0, zv=-8.0, zj=0.4, zj2=-4.0, zjn=4.0,
                              n_max=12),
            engine="meanfield", seeds="fast"),
    }
    spec = recipes[figure_id]
    spec = SweepSpec(axis1=spec.axis1, axis2=spec.axis2, fixed=spec.fixed,
                     engine=spec.engine, seeds=spec.seeds, output=csv_path)
    rows, stats = run_sweep(spec, workers=workers)
    manifest.update({
        "engine": spec.engine,
        "seeds": spec.seeds,
        "axis1": asdict(spec.axis1),
        "axis2": asdict(spec.axis2),
        "fixed": asdict(spec.fixed),
        "stats": stats,
    })
    with open(manifest_path, "w") as fh:
        json.dump(manifest, fh, indent=2)
    return {"csv": csv_path, "manifest": manifest_path, "stats": stats}

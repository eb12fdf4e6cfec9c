"""Command-line interface.

Exit codes: 0 success, 2 invalid arguments / sweep specification,
3 when more than 1% of sweep points fail hard.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import circuit as circ
from . import cluster as cm
from . import meanfield as mf
from . import observables as obs
from . import semiclassical as sc
from . import sweep as sw
from .fock import ModelParams, coherent_dm, vacuum_dm

EXIT_OK = 0
EXIT_SPEC = 2
EXIT_FAILURES = 3
FAILURE_BUDGET = 0.01


def _add_params(p: argparse.ArgumentParser):
    p.add_argument("--delta", type=float, default=0.0,
                   help="drive-cavity detuning")
    p.add_argument("--omega", type=float, default=0.0,
                   help="drive amplitude")
    p.add_argument("--u", type=float, default=0.0,
                   help="on-site Kerr strength")
    p.add_argument("--zv", type=float, default=0.0,
                   help="cross-Kerr strength times coordination number")
    p.add_argument("--zj", type=float, default=0.0,
                   help="hopping times coordination number")
    p.add_argument("--zj2", type=float, default=0.0,
                   help="pair hopping times coordination number")
    p.add_argument("--zjn", type=float, default=0.0,
                   help="density-assisted hopping times coordination number")
    p.add_argument("--kappa", type=float, default=1.0, help="loss rate")
    p.add_argument("--n-max", type=int, default=10,
                   help="Fock-space cutoff per site")


def _params(args) -> ModelParams:
    return ModelParams(delta=args.delta, omega=args.omega, u=args.u,
                       zv=args.zv, zj=args.zj, zj2=args.zj2, zjn=args.zjn,
                       kappa=args.kappa, n_max=args.n_max)


def _parse_axis(text: str) -> sw.Axis:
    parts = text.split(":")
    if len(parts) != 4:
        raise sw.SpecError(
            f"axis must be name:start:stop:count, got {text!r}")
    name, start, stop, count = parts
    return sw.Axis(name, float(start), float(stop), int(count))


def cmd_sweep(args) -> int:
    spec = sw.SweepSpec(axis1=_parse_axis(args.axis1),
                        axis2=_parse_axis(args.axis2),
                        fixed=_params(args), engine=args.engine,
                        seeds=args.seeds, output=args.output)
    rows, stats = sw.run_sweep(spec, workers=args.workers)
    print(f"{stats['points']} points, {stats['failures']} failures "
          f"-> {args.output}")
    if stats["failure_fraction"] > FAILURE_BUDGET:
        return EXIT_FAILURES
    return EXIT_OK


def cmd_evolve(args) -> int:
    params = _params(args)
    rho0A = coherent_dm(0.1, params.dim)
    rho0B = vacuum_dm(params.dim)
    rec = mf.evolve_pair(rho0A, rho0B, params, t_max=args.t_max,
                         record_from=args.t_max / 2)
    info = mf.analyze_tail(rec.times, rec.nA, rec.nB,
                           rec.diagnostics["residual"])
    out = {"tag": info["tag"].value, "n_a": info["nA_mean"],
           "n_b": info["nB_mean"], "delta_n": info["delta_n"],
           "osc_amp": info["amp"], "osc_period": info["period"],
           "diagnostics": {k: v for k, v in rec.diagnostics.items()
                           if isinstance(v, (int, float, bool))}}
    print(json.dumps(out, indent=2))
    return EXIT_OK


def cmd_fixed_points(args) -> int:
    params = _params(args)
    if params.u != 0 or params.zj2 != 0 or params.zjn != 0:
        raise sw.SpecError("fixed-point analysis requires u = zj2 = zjn = 0")
    if params.zj == 0:
        reports = sc.fixed_points_J0(params)
    else:
        reports, _ = sc.fixed_points_numeric(params)
    out = []
    for r in reports:
        out.append({"kind": r.kind, "stability": r.stability,
                    "state": [float(v) for v in r.state],
                    "eigenvalues": [[float(e.real), float(e.imag)]
                                    for e in r.eigenvalues]})
    print(json.dumps(out, indent=2))
    return EXIT_OK


def cmd_wigner(args) -> int:
    params = _params(args)
    rho0A = coherent_dm(0.1, params.dim)
    rho0B = vacuum_dm(params.dim)
    rec = mf.evolve_pair(rho0A, rho0B, params, t_max=args.t_max,
                         record_from=args.t_max / 2)
    ax = np.linspace(-args.extent, args.extent, args.points)
    grid = obs.wigner(rec.final_rhoA, ax, ax)
    obs.wigner_to_csv(grid, args.output)
    print(f"wigner grid ({args.points}x{args.points}) -> {args.output}; "
          f"grid-sum/pi = {grid.grid_sum() / np.pi:.6f}")
    return EXIT_OK


def cmd_cluster_sweep(args) -> int:
    spec = sw.SweepSpec(axis1=_parse_axis(args.axis1),
                        axis2=_parse_axis(args.axis2),
                        fixed=_params(args), engine="cluster",
                        output=args.output)
    rows, stats = sw.run_sweep(spec, workers=args.workers)
    print(f"{stats['points']} points, {stats['failures']} failures "
          f"-> {args.output}")
    if stats["failure_fraction"] > FAILURE_BUDGET:
        return EXIT_FAILURES
    return EXIT_OK


def cmd_circuit_map(args) -> int:
    cp = circ.CircuitParams(L=args.L, C=args.C, C_J=args.CJ, E_J=args.EJ,
                            drive_frequency=args.drive_frequency,
                            flux_bias=args.flux_bias)
    ec = circ.derive_couplings(cp, allow_large_cj=args.allow_large_cj,
                               jn_literal_sign=args.jn_literal_sign,
                               printed_ec_form=args.printed_ec_form)
    print(json.dumps(ec.as_dict(), indent=2))
    return EXIT_OK


def cmd_reproduce(args) -> int:
    result = sw.reproduce(args.figure, outdir=args.outdir, scale=args.scale,
                          workers=args.workers)
    print(json.dumps({k: v for k, v in result.items() if k != "stats"},
                     indent=2))
    stats = result.get("stats")
    if stats and stats["failure_fraction"] > FAILURE_BUDGET:
        return EXIT_FAILURES
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="kerrcav",
        description="Steady-state phase diagrams of driven-dissipative "
                    "cavity arrays with cross-Kerr coupling")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sweep", help="2-D parameter sweep to CSV")
    _add_params(p)
    p.add_argument("--axis1", required=True, help="name:start:stop:count")
    p.add_argument("--axis2", required=True,
                   help="name:start:stop:count (fastest-varying)")
    p.add_argument("--engine", default="semiclassical",
                   choices=["semiclassical", "meanfield", "cluster"])
    p.add_argument("--seeds", default="default",
                   choices=["default", "fast"])
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--output", "-o", required=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("evolve",
                       help="single-point two-sublattice evolution")
    _add_params(p)
    p.add_argument("--t-max", type=float, default=400.0)
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("fixed-points",
                       help="semiclassical fixed points and stability")
    _add_params(p)
    p.set_defaults(func=cmd_fixed_points)

    p = sub.add_parser("wigner",
                       help="steady-state Wigner function on a grid")
    _add_params(p)
    p.add_argument("--t-max", type=float, default=400.0)
    p.add_argument("--extent", type=float, default=4.0)
    p.add_argument("--points", type=int, default=81)
    p.add_argument("--output", "-o", required=True)
    p.set_defaults(func=cmd_wigner)

    p = sub.add_parser("cluster-sweep",
                       help="2-D sweep with the 2x2-cluster engine")
    _add_params(p)
    p.add_argument("--axis1", required=True)
    p.add_argument("--axis2", required=True)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--output", "-o", required=True)
    p.set_defaults(func=cmd_cluster_sweep)

    p = sub.add_parser("circuit-map",
                       help="lumped-element circuit to model couplings")
    p.add_argument("--L", type=float, required=True, help="inductance [H]")
    p.add_argument("--C", type=float, required=True, help="capacitance [F]")
    p.add_argument("--CJ", type=float, required=True,
                   help="junction capacitance [F]")
    p.add_argument("--EJ", type=float, required=True,
                   help="junction energy [J]")
    p.add_argument("--drive-frequency", type=float, default=0.0)
    p.add_argument("--flux-bias", type=float, default=1.0)
    p.add_argument("--allow-large-cj", action="store_true")
    p.add_argument("--jn-literal-sign", action="store_true")
    p.add_argument("--printed-ec-form", action="store_true")
    p.set_defaults(func=cmd_circuit_map)

    p = sub.add_parser("reproduce",
                       help="rerun one of the published figure datasets")
    p.add_argument("figure", choices=list(sw.FIGURE_IDS))
    p.add_argument("--outdir", default=".")
    p.add_argument("--scale", type=float, default=1.0,
                   help="grid-resolution multiplier (e.g. 0.1 for a quick "
                        "low-resolution pass)")
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(func=cmd_reproduce)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
        return args.func(args)
    except (sw.SpecError, circ.CircuitError, cm.BracketError,
            ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SPEC


if __name__ == "__main__":
    sys.exit(main())

"""Steady-state phase diagrams of coherently driven, lossy cavity arrays
with cross-Kerr nonlinearity and correlated hopping.

Two-sublattice mean-field and 2x2-cluster Lindblad dynamics, exact
semiclassical fixed-point analysis in the hard-drive limit, Wigner and
squeezing observables, a lumped-element circuit parameter map, and a
parallel sweep engine with CSV phase maps.
"""

from .fock import (
    ModelParams,
    FockError,
    make_ladder_ops,
    vacuum_dm,
    fock_dm,
    coherent_state,
    coherent_dm,
    check_density_matrix,
    density_diagnostics,
    lindblad_rhs,
)
from .semiclassical import (
    FixedPointReport,
    ScopeError,
    semiclassical_rhs,
    fixed_points_J0,
    fixed_points_numeric,
    nonuniform_existence_bound,
    count_uniform_roots,
)
from .meanfield import (
    PhaseTag,
    PhaseLabel,
    TrajectoryRecord,
    TruncationError,
    UndecidedError,
    evolve_pair,
    analyze_tail,
    classify,
    default_seed_pairs,
)
from .observables import (
    WignerGrid,
    SqueezingReport,
    wigner,
    wigner_to_csv,
    quadratures,
    order_parameter,
    squeezing_tag,
)
from .cluster import (
    ClusterTrajectory,
    BracketError,
    cluster_evolve,
    cluster_hamiltonian,
    product_state,
    steady_delta_n,
    critical_v,
)
from .circuit import (
    CircuitParams,
    EffectiveCouplings,
    CircuitError,
    derive_couplings,
    solve_cancellation,
    to_model_params,
)
from .sweep import (
    Axis,
    SweepSpec,
    SpecError,
    PhaseMapRow,
    run_sweep,
    reproduce,
)

__version__ = "0.1.0"

"""Design of communication topologies for decentralized learning overlays."""

from .netmodel import (
    CategoryTable,
    PathTable,
    TopologyError,
    UnderlayNet,
    compute_categories,
    load_topology,
    shortest_paths,
)
from .comm import (
    DemandSet,
    Flow,
    LoadProfile,
    completion_time,
    completion_time_by_category,
    demands_from_activation,
    link_loads,
    maxmin_rate_oracle,
)
from .routing import (
    RoutingSolution,
    default_routing,
    optimize_routing_exact,
    optimize_routing_local,
    tau_bar,
    validate_routing,
)
from .mixing import (
    MixingMatrix,
    benchmark_topology,
    decompose_to_atoms,
    fmmd,
    mixing_from_weights,
    optimize_weights,
    rho,
)
from .convergence import (
    ConvergenceConstants,
    fmmd_guarantee,
    iterations_to_converge,
    total_time,
)
from .dflsim import QuadraticTask, TrainState, dpsgd_step, run_consensus, run_dpsgd

__version__ = "0.1.0"

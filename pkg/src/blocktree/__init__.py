"""Event-driven simulator of longest-chain consensus on P2P networks.

Blocks are created at per-node rates and gossip across active directed
edges; the package measures the emergent blocktree (orphan rate, branch
rate, consensus probability, Gini concentration), the analytical branching
threshold from random-walk hitting times, and fits miner-share data against
power-law and exponential families.
"""

from .engine import (
    Block,
    Blocktree,
    RunTrace,
    SimConfig,
    SimState,
    consensus_fraction,
    initial_state,
    run,
    run_reference,
    step,
)
from .fitting import FitReport, ccdf, fit_exponential, fit_power_law, likelihood_ratio_test
from .harness import (
    ScalingResult,
    SweepResult,
    SweepSpec,
    TauCEstimate,
    default_tau_nd_grid,
    estimate_tau_c,
    finite_size_extrapolate,
    replicate_seeds,
    run_sweep,
)
from .hashpower import (
    HashPowerProfile,
    gini,
    load_miner_shares,
    normalize_rates,
    sample_exponential,
    sample_power_law,
)
from .metrics import (
    ChainPartition,
    MetricsReport,
    branch_lengths,
    branch_rate,
    compute_metrics,
    main_chain_interval,
    mean_branch_length,
    mining_concentration,
    partition_chain,
)
from .topology import (
    DistanceSummary,
    Graph,
    branching_threshold,
    generate_ba,
    generate_complete,
    generate_er,
    generate_tree,
    load_edge_list,
    mean_mfpt,
    mean_shortest_path,
    mfpt_matrix,
    save_edge_list,
)

__version__ = "0.1.0"

__all__ = [
    "Block",
    "Blocktree",
    "ChainPartition",
    "DistanceSummary",
    "FitReport",
    "Graph",
    "HashPowerProfile",
    "MetricsReport",
    "RunTrace",
    "ScalingResult",
    "SimConfig",
    "SimState",
    "SweepResult",
    "SweepSpec",
    "TauCEstimate",
    "branch_lengths",
    "branch_rate",
    "branching_threshold",
    "ccdf",
    "compute_metrics",
    "consensus_fraction",
    "default_tau_nd_grid",
    "estimate_tau_c",
    "finite_size_extrapolate",
    "fit_exponential",
    "fit_power_law",
    "generate_ba",
    "generate_complete",
    "generate_er",
    "generate_tree",
    "gini",
    "initial_state",
    "likelihood_ratio_test",
    "load_edge_list",
    "load_miner_shares",
    "main_chain_interval",
    "mean_branch_length",
    "mean_mfpt",
    "mean_shortest_path",
    "mfpt_matrix",
    "mining_concentration",
    "normalize_rates",
    "partition_chain",
    "replicate_seeds",
    "run",
    "run_reference",
    "run_sweep",
    "sample_exponential",
    "sample_power_law",
    "save_edge_list",
    "step",
]

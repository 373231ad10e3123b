"""Backup network-function placement with piggybacked state updates."""

from nfbackup.netgraph import (
    DistanceTable,
    NetworkGraph,
    all_pairs_shortest,
    build_fat_tree,
    build_random_graph,
)
from nfbackup.workload import (
    PrimaryInstance,
    ServiceChain,
    assign_and_route,
    generate_chains,
    place_primary_instances,
    segment_length,
)
from nfbackup.planner import (
    DeploymentPlan,
    available_servers,
    deploy_piggyback,
    deploy_random,
    deploy_shortest_path,
    deploy_standalone,
    deploy_two_phase,
    lambda_scores,
    validate_plan,
)
from nfbackup.exact import InfeasibleError, enumerate_optimum, solve_exact
from nfbackup.costmodel import CostParams, CostReport, total_expected_cost
from nfbackup.simcore import SimParams, SimReport, generate_arrivals, run_simulation


__version__ = "0.1.0"

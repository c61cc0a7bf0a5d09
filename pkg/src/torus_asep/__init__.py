"""Exact solver and stochastic simulator for a two-species disordered
exclusion process on an L x n torus."""

from .model import (
    ColoredWord,
    MarkedPartition,
    TorusConfig,
    ValidationError,
    enumerate_full,
    enumerate_restricted,
    restricted_count,
    symmetry_transform,
    validate,
    word_partition_iso,
    word_torus_iso,
)
from .symbolic import Monomial, Polynomial, RatePoint
from .dynamics import (
    ResourceCapError,
    SparseGenerator,
    Transition,
    build_generator,
    excess,
    outgoing_transitions,
    reachability_tau0,
    restrict_ta,
    tau_zero,
)
from .stationary import (
    StationaryError,
    StationaryTable,
    box_weight,
    config_weight,
    exact_stationary,
    lump,
    lumped_distribution,
    lumping_report,
    total_box_weight,
    verify_balance,
    weight_identities,
    weight_table,
)
from .observables import (
    CurrentReport,
    DensityReport,
    ObservableMismatch,
    currents_exact,
    densities,
    partition_function,
    partition_function_special,
    scott_russell_check,
)
from .mcmc import CrossingLedger, SimState, estimate_observables, simulate, tv_distance

__all__ = [
    "ColoredWord",
    "CrossingLedger",
    "CurrentReport",
    "DensityReport",
    "MarkedPartition",
    "Monomial",
    "ObservableMismatch",
    "Polynomial",
    "RatePoint",
    "ResourceCapError",
    "SimState",
    "SparseGenerator",
    "StationaryError",
    "StationaryTable",
    "TorusConfig",
    "Transition",
    "ValidationError",
    "box_weight",
    "build_generator",
    "config_weight",
    "currents_exact",
    "densities",
    "enumerate_full",
    "enumerate_restricted",
    "estimate_observables",
    "exact_stationary",
    "excess",
    "lump",
    "lumped_distribution",
    "lumping_report",
    "outgoing_transitions",
    "partition_function",
    "partition_function_special",
    "reachability_tau0",
    "restrict_ta",
    "restricted_count",
    "scott_russell_check",
    "simulate",
    "symmetry_transform",
    "tau_zero",
    "total_box_weight",
    "tv_distance",
    "validate",
    "verify_balance",
    "weight_identities",
    "weight_table",
    "word_partition_iso",
    "word_torus_iso",
]

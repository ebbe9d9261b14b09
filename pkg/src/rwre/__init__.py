"""Random walks in iid random environments on Z^d: simulation, inference
from a single trajectory, moment/CDF reconstruction and replica extraction."""
from __future__ import annotations

__version__ = "0.1.0"

from ._backend import BACKEND
from .environment import (
    DirichletLaw,
    Environment,
    MixtureLaw,
    SiteLaw,
    analytic_V,
    analytic_V_law,
    classify_R_T_analytic,
    law_from_spec,
    mixed_moment,
    sample_site_law,
)
from .errors import (
    ConfigError,
    DomainError,
    FormatError,
    ImpossibleHistory,
    InsufficientTable,
    NoObservations,
    ReinforcementError,
    RWREError,
)
from .estimator import (
    EstimatorState,
    classify_R_T_empirical,
    empirical_V,
    estimate_site_environment,
    ingest,
    merge,
    observed_histories,
    recurrence_diagnostic,
)
from .history import HistoryTracker, local_unordered, record_step
from .lattice import GroupElement, JumpSet, MultiIndex, UnorderedHistory, add, negate
from .reconstruction import (
    CdfGrid,
    MomentTable,
    build_moment_table,
    cdf_bernstein,
    reconstruct_environment_law,
)
from .resampler import extract_many, extract_pair
from .walker import (
    Trajectory,
    annealed_oracle,
    parse_trajectory,
    read_trajectory,
    simulate_quenched,
    simulate_reinforced,
    write_trajectory,
)

__all__ = [
    "BACKEND", "CdfGrid", "ConfigError", "DirichletLaw", "DomainError", "Environment", "EstimatorState",
    "FormatError", "GroupElement", "HistoryTracker", "ImpossibleHistory", "InsufficientTable", "JumpSet",
    "MixtureLaw", "MomentTable", "MultiIndex", "NoObservations", "RWREError", "ReinforcementError",
    "SiteLaw", "Trajectory", "UnorderedHistory", "add", "analytic_V", "analytic_V_law", "annealed_oracle",
    "build_moment_table", "cdf_bernstein", "classify_R_T_analytic", "classify_R_T_empirical",
    "empirical_V", "estimate_site_environment", "extract_many", "extract_pair", "ingest", "law_from_spec",
    "local_unordered", "merge", "mixed_moment", "negate", "observed_histories", "parse_trajectory",
    "read_trajectory", "reconstruct_environment_law", "record_step", "recurrence_diagnostic",
    "sample_site_law", "simulate_quenched", "simulate_reinforced", "write_trajectory",
]

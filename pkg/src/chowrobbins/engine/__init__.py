"""Certifier sweep, exact-rational oracle and Monte Carlo check of the stop rule."""

from .montecarlo import ComparisonResult, SimulationResult, compare_rules, shifted_rule, simulate
from .oracle import OracleResult, crude_horizon_bounds, exact_oracle, walk_horizon_bounds
from .sweep import band_limits, classify, horizon_row, inject_bounds, run_certifier, step_back
from .tables import BetaTable, beta_table, boundary_points
from .types import (
    BandRow,
    BoundaryRecord,
    CertifierResult,
    ConfigError,
    EngineConfig,
    IncompleteCertification,
    Position,
    PrecisionMode,
    default_horizon,
)

__all__ = [
    "BandRow", "BetaTable", "BoundaryRecord", "CertifierResult", "ComparisonResult",
    "ConfigError", "EngineConfig", "IncompleteCertification", "OracleResult", "Position",
    "PrecisionMode", "SimulationResult",
    "band_limits", "beta_table", "boundary_points", "classify", "compare_rules",
    "crude_horizon_bounds", "default_horizon", "exact_oracle", "horizon_row",
    "inject_bounds", "run_certifier", "shifted_rule", "simulate", "step_back",
    "walk_horizon_bounds",
]

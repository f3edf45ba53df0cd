"""
TAT Lab - numerical laboratory for thermoacoustic tomography with a
variable sound speed.

Geometry and hypothesis checks, a 2D wave solver with boundary traces,
boundary operators, and the inverse solvers built on them.
"""

__version__ = "1.0.0"

from .boundary_ops import CutoffProfile, back_project, dn_map, parametrix_symbol, recover_neumann
from .config import ScenarioConfig, load_config, parse_config, serialize_config
from .convexity import (
    PseudoconvexFamily,
    check_condition_12,
    check_cone_condition,
    check_ellipticity,
    check_noncharacteristic,
    check_observation_time,
    check_stability_condition,
    check_strong_pseudoconvexity,
    g_squared,
    second_fundamental_form,
    uniqueness_region,
    verify_foliation,
)
from .domain import Domain, make_domain
from .errors import (
    ArrayFormatError,
    ConfigError,
    DivergenceError,
    EllipticityError,
    GeodesicAccuracyError,
    InstabilityError,
    OutOfDomainError,
    PreconditionError,
    TatLabError,
)
from .geometry import PhasePoint, exit_times, exterior_distance, geodesic_flow, metric_distance, set_distance
from .inversion import (
    SpeedRecoverySetup,
    neumann_consistency_experiment,
    recover_initial_datum,
    recover_source,
    recover_speed,
    second_time_derivative,
    stability_probe,
)
from .io import read_array, write_array
from .metrics import relative_l2_error, summary
from .reports import ConditionReport, ReconstructionReport
from .scenarios import SCENARIOS, get_scenario
from .speed import SpeedField, make_speed, radial_closed_geodesics
from .wave import BoundaryTrace, Grid, SourceTerm, WaveState, duhamel, energy, solve_ivp, solve_source, step

__all__ = [
    "SpeedField",
    "make_speed",
    "radial_closed_geodesics",
    "Domain",
    "make_domain",
    "PhasePoint",
    "geodesic_flow",
    "exit_times",
    "metric_distance",
    "exterior_distance",
    "set_distance",
    "g_squared",
    "check_condition_12",
    "PseudoconvexFamily",
    "check_noncharacteristic",
    "check_strong_pseudoconvexity",
    "second_fundamental_form",
    "verify_foliation",
    "check_observation_time",
    "check_cone_condition",
    "uniqueness_region",
    "check_ellipticity",
    "check_stability_condition",
    "Grid",
    "WaveState",
    "SourceTerm",
    "BoundaryTrace",
    "step",
    "solve_ivp",
    "solve_source",
    "duhamel",
    "energy",
    "CutoffProfile",
    "dn_map",
    "recover_neumann",
    "back_project",
    "parametrix_symbol",
    "second_time_derivative",
    "recover_source",
    "SpeedRecoverySetup",
    "recover_speed",
    "stability_probe",
    "neumann_consistency_experiment",
    "recover_initial_datum",
    "ConditionReport",
    "ReconstructionReport",
    "ScenarioConfig",
    "parse_config",
    "serialize_config",
    "load_config",
    "SCENARIOS",
    "get_scenario",
    "read_array",
    "write_array",
    "relative_l2_error",
    "summary",
    "TatLabError",
    "ConfigError",
    "PreconditionError",
    "OutOfDomainError",
    "GeodesicAccuracyError",
    "InstabilityError",
    "EllipticityError",
    "DivergenceError",
    "ArrayFormatError",
]

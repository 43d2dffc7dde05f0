"""Pole placement and eigenstructure assignment computed directly from input/state data."""
from .baselines import (
    IdentifiedModel,
    ackermann_gain,
    admissible_subspace,
    identify_least_squares,
    kautsky_gain,
    model_based_place,
    projector_gain,
    sylvester_gain,
)
from .errors import (
    DataRankError,
    DDPoleError,
    InfeasibleError,
    InvalidInputError,
    NumericFailure,
    UnsupportedError,
)
from .numerics import DEFAULT_TOL, Tolerance
from .plant import LtiSystem, SimulationConfig, chemical_reactor, random_controllable, simulate
from .signals import (
    DataMatrices,
    Trajectory,
    extract_data_matrices,
    hankel,
    is_persistently_exciting,
    read_trajectory,
    write_trajectory,
)
from .synthesis import (
    GainResult,
    PoleSpec,
    assign_eigenstructure,
    feasibility_report,
    place_poles,
    pole_matching_error,
)

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_TOL", "DDPoleError", "DataMatrices", "DataRankError", "GainResult", "IdentifiedModel",
    "InfeasibleError", "InvalidInputError", "LtiSystem", "NumericFailure", "PoleSpec", "SimulationConfig",
    "Tolerance", "Trajectory", "UnsupportedError", "ackermann_gain", "admissible_subspace",
    "assign_eigenstructure", "chemical_reactor", "extract_data_matrices", "feasibility_report", "hankel",
    "identify_least_squares", "is_persistently_exciting", "kautsky_gain", "model_based_place", "place_poles",
    "pole_matching_error", "projector_gain", "random_controllable", "read_trajectory", "simulate",
    "sylvester_gain", "write_trajectory",
]

"""Coupled Duffing oscillators: homotopy solvers and certificates for the 5^N root count."""

from .errors import (
    InvalidInputError,
    NearSingularError,
    PreconditionError,
    ResourceError,
    SingularParameterError,
    UnsupportedInputError,
)
from .polysys import (
    CoupledSystem,
    OscillatorParams,
    PointC2N,
    SystemBatch,
    anchor_params,
    build_from_slice,
    build_single_physical,
    decouple,
    evaluate,
    jacobian,
    random_system,
)
from .solver import (
    SolutionSet,
    SolverConfig,
    solve_algorithm1,
    solve_algorithm2,
    solve_single,
    total_degree_oracle,
)
from .tracker import PathResult, PathStatus, SegmentHomotopy, TrackerConfig, track, track_batch

__version__ = "0.1.0"

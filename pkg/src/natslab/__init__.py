"""Thermal states, microcanonical subspaces and resource theory for noncommuting charges."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    AlphaOutOfRange,
    ConvergenceWarning,
    DimensionMismatch,
    DimensionOverflow,
    EmptySubspace,
    IndexOutOfRange,
    InfeasibleTarget,
    InvalidArgument,
    InvalidState,
    NatslabError,
    NoConvergence,
    NotHermitian,
    NotUnitary,
    RepresentationMismatch,
)
from .nats import NatsParams, TargetValues, build_nats, expectations, fit_potentials, log_partition  # noqa: E402
from .qops import ChargeFamily, DensityMatrix, HermitianOperator, spin_family  # noqa: E402

__all__ = [
    "AlphaOutOfRange",
    "ChargeFamily",
    "ConvergenceWarning",
    "DensityMatrix",
    "DimensionMismatch",
    "DimensionOverflow",
    "EmptySubspace",
    "HermitianOperator",
    "IndexOutOfRange",
    "InfeasibleTarget",
    "InvalidArgument",
    "InvalidState",
    "NatsParams",
    "NatslabError",
    "NoConvergence",
    "NotHermitian",
    "NotUnitary",
    "RepresentationMismatch",
    "TargetValues",
    "build_nats",
    "expectations",
    "fit_potentials",
    "log_partition",
    "spin_family",
]

"""Numerical laboratory for critical SQG on bounded domains with the spectral Dirichlet Laplacian."""

try:
    from importlib.metadata import PackageNotFoundError, version

    __version__ = version("artifact")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.1.0"

from .eigenbasis import (
    DiskBasis,
    DomainSpec,
    EigenBasis,
    GridField,
    RectangleBasis,
    SpectralField,
    build_basis,
    sobolev_norm,
)
from .solver import SolverConfig, TrajectoryRecord, run

__all__ = [
    "DiskBasis",
    "DomainSpec",
    "EigenBasis",
    "GridField",
    "RectangleBasis",
    "SpectralField",
    "SolverConfig",
    "TrajectoryRecord",
    "build_basis",
    "run",
    "sobolev_norm",
]

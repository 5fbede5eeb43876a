"""Racetrack-memory compute-in-memory simulator with ECC that survives logic operations."""

from .ecc import ConfigurationError, EccScheme, decode, encode, make_scheme
from .engine import CostModel, Engine, FaultKind, ReissuePolicy, SimStats, classify_fault
from .rtm import Dbc, Geometry, Memory, RowAddress
from .senseamp import CimOp, FaultModel, derive_logic, sense

__version__ = "0.1.0"

__all__ = [
    "CimOp", "ConfigurationError", "CostModel", "Dbc", "EccScheme", "Engine", "FaultKind",
    "FaultModel", "Geometry", "Memory", "ReissuePolicy", "RowAddress", "SimStats",
    "classify_fault", "decode", "derive_logic", "encode", "make_scheme", "sense",
]

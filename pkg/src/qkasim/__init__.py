"""Simulator for two-party quantum key agreement over collective-noise
channels, the permutation attack on it, and the first-particle fix."""

from .logical import Basis, BellCode, LogicalSymbol, NoiseModel
from .protocol import Permutation, ProtocolConfig, RunOutcome, Status, run_protocol
from .symbolic import DibitString, final_key

__all__ = [
    "Basis", "BellCode", "DibitString", "LogicalSymbol", "NoiseModel", "Permutation",
    "ProtocolConfig", "RunOutcome", "Status", "final_key", "run_protocol",
]

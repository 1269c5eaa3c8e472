"""Master-equation simulator for a quantum dot coupled to the traveling-wave
modes of a microdisk, probed through a fiber taper."""

from .errors import CQEDError
from .hilbert import OperatorMatrix, SpaceLayout
from .model import DriveSpec, SystemParams
from .solver import DensityMatrix, Liouvillian, steady_state

__all__ = [
    "CQEDError",
    "DensityMatrix",
    "DriveSpec",
    "Liouvillian",
    "OperatorMatrix",
    "SpaceLayout",
    "SystemParams",
    "steady_state",
]

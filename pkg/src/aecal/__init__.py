"""Calibration of acoustic-emission sensors from ball-bounce waveforms."""
from .errors import ConvergenceError, DomainError, PreconditionError

__version__ = "0.1.0"

__all__ = ["ConvergenceError", "DomainError", "PreconditionError", "__version__"]

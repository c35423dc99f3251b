"""Quantization dimension and error estimates for condensation measures."""

from ._version import version as __version__
from .api import CondensationAPI
from .config import AnalysisConfig
from .errors import (
    BudgetExceededError,
    DegenerateSystemError,
    InvalidSystemError,
    NotMaximalError,
    QuantizationError,
)
from .quantizer import Codebook, ErrorEstimate
from .system import CondensationSystem, Interval, Similitude1D, check_iosc, load_system
from .words import Antichain, Word, WeightSystem

__all__ = [
    '__version__',
    'CondensationAPI',
    'AnalysisConfig',
    'QuantizationError',
    'InvalidSystemError',
    'DegenerateSystemError',
    'NotMaximalError',
    'BudgetExceededError',
    'Codebook',
    'ErrorEstimate',
    'CondensationSystem',
    'Interval',
    'Similitude1D',
    'check_iosc',
    'load_system',
    'Antichain',
    'Word',
    'WeightSystem'
]

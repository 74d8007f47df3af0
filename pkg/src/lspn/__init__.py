"""Solvers and tooling for learning sparse parities with noise."""

from .bitlin import BitMatrix, BitVector, Domain
from .estimators import BkwLearner, BruteForceLearner, HighNoiseLearner, LowNoiseLearner
from .oracle import LspnInstance, Oracle, SampleBatch, new_instance
from .outcome import Outcome

__version__ = "0.1.0"

__all__ = [
    "BitMatrix", "BitVector", "Domain", "LspnInstance", "Oracle", "SampleBatch", "new_instance",
    "Outcome", "LowNoiseLearner", "BkwLearner", "HighNoiseLearner", "BruteForceLearner",
]

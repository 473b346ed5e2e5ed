"""ART1 clustering of binary access patterns."""

from .backend import BACKEND, available
from .engine import (
    UNCLUSTERED,
    Art1Config,
    Art1Model,
    Assignment,
    ClusterNode,
    Presentation,
    TrainResult,
)

__all__ = [
    "BACKEND",
    "UNCLUSTERED",
    "Art1Config",
    "Art1Model",
    "Assignment",
    "ClusterNode",
    "Presentation",
    "TrainResult",
    "available",
]

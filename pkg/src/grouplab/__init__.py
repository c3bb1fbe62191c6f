"""Sampling, representation theory and Monte-Carlo analysis on compact matrix groups."""

from .errors import (ConfigError, FieldMismatch, GroupLabError, InsufficientSamples, InvalidShape,
                     MeasureTooSmall, MultiplicityTooHigh, NonIntegerResult, NotComfortable,
                     RankDeficient, TooLarge, Unsupported)
from .estimates import EstimateWithCI
from .sampling import DenseMatrix, GroupSpec, Quaternion, RngStream, UpperTriangular

__all__ = [
    "ConfigError", "DenseMatrix", "EstimateWithCI", "FieldMismatch", "GroupLabError", "GroupSpec",
    "InsufficientSamples", "InvalidShape", "MeasureTooSmall", "MultiplicityTooHigh",
    "NonIntegerResult", "NotComfortable", "Quaternion", "RankDeficient", "RngStream", "TooLarge",
    "Unsupported", "UpperTriangular",
]

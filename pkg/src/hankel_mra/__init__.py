"""Hankel transforms, q-Bessel functions, Hankel-domain multiresolution
analyses, filter banks and the Cuntz relations and frames they generate."""

from ._accel import backend
from .special import AccuracyError, DomainError

__version__ = "0.1.0"

__all__ = ["AccuracyError", "DomainError", "backend", "__version__"]

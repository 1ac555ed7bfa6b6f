"""Discrete harmonic functions on planar conductance networks and their flat rectangle tilings."""

from .errors import (ConsistencyFailure, DegenerateValues, FlatTilerError, MalformedInput,
                     NotApplicable, NotFound, SolverFailure)
from .network import PlanarComplex, ValidationReport, euler_characteristic, validate

__version__ = "0.1.0"

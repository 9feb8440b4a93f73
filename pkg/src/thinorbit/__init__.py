"""Orbit values of thin subgroups of SL(2, Z): balls, histograms, local
densities, circle-method decompositions and the exponent-region cover."""

from .ball import Ball, SectorSets, build_sectors, enumerate_ball, validate_pruning
from .errors import (
    AliasingError,
    ConfigurationError,
    DegenerateInputError,
    InputError,
    ParameterError,
    ResourceError,
    ThinOrbitError,
)
from .gl2 import GroupElement, Mat2Z, ThinGroup, Word, commutator_family, reduce_word, sanov_family
from .growth import GrowthFit, fit_growth
from .orbit import OrbitConfig, OrbitHistogram, histogram_simple, histogram_triple
from .region import critical_sigma, derive_critical_polynomial, full_cover, minimal_delta

__version__ = "0.1.0"

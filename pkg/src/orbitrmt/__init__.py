"""Random matrices with invariant laws over R, C and H: minors, rank-one
perturbations, Gelfand-Tsetlin polytopes and the matching Lie-theoretic
combinatorics."""

from ._accel import NUMBA_ENABLED
from .ensembles import FieldContext, RadialPoint, StructuredMatrix, make_rng

__version__ = "0.1.0"

__all__ = ["FieldContext", "RadialPoint", "StructuredMatrix", "make_rng", "NUMBA_ENABLED", "__version__"]

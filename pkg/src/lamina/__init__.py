"""Exact desk-scale computations around free group automorphisms.

The package covers four layers: reduced words and automorphism tables,
train track maps on marked graphs, Stallings core graphs for finitely
generated subgroups, and the free-by-cyclic extension those feed into,
plus experiment pipelines that turn the layers into reports.
"""

from .errors import (
    DegenerateRayError,
    HypothesisViolationError,
    LaminaError,
    LengthCapExceededError,
    MalformedInputError,
    NotPrimitiveError,
    NotTrainTrackError,
    RankMismatchError,
    ResourceCapError,
    UncertifiedInverseError,
)
from .words import (
    Automorphism,
    Word,
    cyclic_reduce,
    free_reduce,
    homotopy_rep,
    parse_automorphism,
    parse_word,
    parse_words,
    stretch_check,
    verify_inverse,
)

__version__ = "0.1.0"

"""Exception types shared across the package.

Everything raised on bad input derives from :class:`IdiorankError` so the
CLI can map validation failures to exit code 1 and keep genuine bugs
(anything else) at exit code 2.
"""

from __future__ import annotations


class IdiorankError(Exception):
    """Base class for all expected failures."""


# --- dataset ingestion ---------------------------------------------------


class MissingColumn(IdiorankError):
    """A column named by the schema is absent from the TSV header."""


class MalformedRow(IdiorankError):
    """A data row violates an instance invariant (candidate count, dupes,
    gold order not a permutation, ...). Carries the 1-based row number."""

    def __init__(self, row_number: int, reason: str):
        super().__init__(f"row {row_number}: {reason}")
        self.row_number = row_number
        self.reason = reason


# --- embedding store / PFEMB files ---------------------------------------


class FormatError(IdiorankError):
    """A PFEMB or lexicon file does not conform to its format."""


class DuplicateKey(IdiorankError):
    """Two records in a keyed file share the same key."""


class MissingEmbedding(IdiorankError):
    """A required key is absent from an embedding store."""

    def __init__(self, key: str, context: str = ""):
        msg = f"missing embedding for key {key!r}"
        if context:
            msg += f" ({context})"
        super().__init__(msg)
        self.key = key
        self.context = context


class MissingCaptions(IdiorankError):
    """Caption-based streams were requested for an instance without captions."""


# --- vector math ----------------------------------------------------------


class DimensionMismatch(IdiorankError):
    """Two vectors (or a model and a feature) have different dimensions."""


class ZeroVector(IdiorankError):
    """Cosine similarity is undefined for a zero-norm vector."""


class NonPositiveTemperature(IdiorankError):
    """Temperature scaling requires tau > 0."""


class NonFiniteScore(IdiorankError):
    """A score vector contains NaN or infinity."""


# --- sentence typing ------------------------------------------------------


class DegenerateData(IdiorankError):
    """Training data contains a single class."""


class ClientUnavailable(IdiorankError):
    """The external classifier client cannot produce a usable response."""


class UnparseableResponse(IdiorankError):
    """A classifier response could not be reduced to a single label."""


class EmptyInput(IdiorankError):
    """An aggregation operation received no inputs."""


# --- fusion ---------------------------------------------------------------


class AllZeroWeights(IdiorankError):
    """Every stream entering fusion carries zero weight."""


class StreamMismatch(IdiorankError):
    """Two stream lists disagree on names or candidate alignment."""


# --- evaluation -----------------------------------------------------------


class NotAPermutation(IdiorankError):
    """Ranking inputs are not permutations of the same candidate set."""


class MissingGold(IdiorankError):
    """Evaluation requires gold annotations that are absent."""

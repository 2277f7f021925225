"""Exception types shared across the library.

Every documented failure mode maps to a distinct class so callers (and the
CLI exit-code table) can tell them apart.
"""

from __future__ import annotations


class PriormapError(Exception):
    """Base class for all library errors."""


class GeometryError(PriormapError):
    """Degenerate or malformed geometry (zero-length polyline, bad shape)."""


class CanonicalFormError(PriormapError):
    """Element does not have the canonical point count where one is required."""


class DuplicateIdError(PriormapError):
    """Two elements share an id within one map."""


class CorrespondenceError(PriormapError):
    """Correspondence list is inconsistent with the maps it refers to."""


class AssignmentError(PriormapError):
    """Matching input is infeasible or internally inconsistent."""


class QueryFormatError(PriormapError):
    """Query vectors violate the encoding layout."""


class QueryOverflowError(QueryFormatError):
    """More map elements than available query slots."""


class FormatError(PriormapError):
    """Base class for file-format errors."""


class FormatSyntaxError(FormatError):
    """File is not syntactically valid or misses required structure."""


class SchemaVersionError(FormatError):
    """Unknown format tag, unsupported version, or unknown extra fields."""


class ClassTagError(FormatError):
    """Unknown element class tag string."""


class NonFiniteCoordinateError(FormatError):
    """A coordinate is NaN or infinite."""

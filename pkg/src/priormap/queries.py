"""Encoding of existing-map elements into fixed-width detector queries.

Each canonical element becomes a group of L query vectors; query i carries
the i-th point's raw coordinates in meters, a 3-way class one-hot, and zero
padding up to the query width. Slots not backed by a map element are filled
from a stand-in pool of learned queries whose entries are small and never
reproduce the zero-padding signature of an encoded element.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import CANONICAL_POINTS, ElementClass, MapElement
from .errors import QueryFormatError, QueryOverflowError
from .rng import make_rng

DEFAULT_QUERY_WIDTH = 256
DEFAULT_MAX_ELEMENTS = 50
ENCODING_HEADER = 5  # x, y, one-hot over the three classes


@dataclass(frozen=True)
class QueryProvenance:
    """Where one element-group of queries came from."""

    kind: str  # "ex" (existing-map element) or "learned" (pool)
    element_id: str | None = None
    pool_index: int | None = None


@dataclass(eq=False)
class LearnedQueryPool:
    """Stand-in for a trained learnable-query pool: (groups, L, H) values."""

    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 3:
            raise QueryFormatError(f"pool must be 3-d (groups, points, width), got {values.shape}")
        self.values = values

    @property
    def groups(self) -> int:
        return self.values.shape[0]


@dataclass(eq=False)
class ExQuerySet:
    """Assembled query tensor of shape (N, L, H) with per-group provenance."""

    values: np.ndarray
    n_ex: int
    provenance: list[QueryProvenance]

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 3:
            raise QueryFormatError(f"query set must be 3-d, got shape {values.shape}")
        if len(self.provenance) != values.shape[0]:
            raise QueryFormatError("provenance must have one entry per group")
        if not 0 <= self.n_ex <= values.shape[0]:
            raise QueryFormatError(f"n_ex {self.n_ex} out of range for {values.shape[0]} groups")
        self.values = values

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ExQuerySet):
            return NotImplemented
        return (
            self.n_ex == other.n_ex
            and self.provenance == other.provenance
            and self.values.shape == other.values.shape
            and bool(np.all(self.values == other.values))
        )


def encode_element(element: MapElement, width: int = DEFAULT_QUERY_WIDTH) -> np.ndarray:
    """Encode one canonical element as (L, width) query vectors."""
    if width < ENCODING_HEADER:
        raise QueryFormatError(
            f"query width {width} cannot fit coordinates plus class one-hot ({ENCODING_HEADER})"
        )
    element.require_canonical()
    n_points = element.points.shape[0]
    out = np.zeros((n_points, width), dtype=np.float64)
    out[:, 0:2] = element.points
    out[:, 2 + int(element.element_class)] = 1.0
    return out


def decode_element(queries: np.ndarray) -> tuple[np.ndarray, ElementClass]:
    """Recover point coordinates and class from one encoded element group."""
    values = np.asarray(queries, dtype=np.float64)
    if values.ndim != 2 or values.shape[1] < ENCODING_HEADER:
        raise QueryFormatError(f"expected (L, width >= {ENCODING_HEADER}) queries, got {values.shape}")
    onehot = values[:, 2:5]
    first = onehot[0]
    if sorted(first.tolist()) != [0.0, 0.0, 1.0]:
        raise QueryFormatError("queries do not carry an exact class one-hot")
    if not np.all(onehot == first):
        raise QueryFormatError("inconsistent class one-hot across the group")
    return values[:, 0:2].copy(), ElementClass(int(np.argmax(first)))


def learned_pool_stub(
    n_groups: int,
    points_per_group: int = CANONICAL_POINTS,
    width: int = DEFAULT_QUERY_WIDTH,
    seed: int = 0,
) -> LearnedQueryPool:
    """Deterministic pseudo-random pool, entries strictly inside (-0.1, 0.1).

    Every vector is guaranteed a nonzero entry at some index >= 5 so no pool
    vector can be mistaken for a zero-padded element encoding.
    """
    if n_groups < 1 or points_per_group < 1:
        raise QueryFormatError("pool dimensions must be positive")
    if width < ENCODING_HEADER + 1:
        raise QueryFormatError(
            f"pool width must be at least {ENCODING_HEADER + 1} to carry a nonzero tail"
        )
    rng = make_rng(seed)
    values = (rng.random((n_groups, points_per_group, width)) - 0.5) * 0.1999999
    weak_tail = np.abs(values[:, :, ENCODING_HEADER]) < 1e-6
    values[:, :, ENCODING_HEADER][weak_tail] = 0.05
    return LearnedQueryPool(values=values)


def assemble_query_set(
    elements: list[MapElement],
    pool: LearnedQueryPool,
    max_elements: int = DEFAULT_MAX_ELEMENTS,
    points: int = CANONICAL_POINTS,
    width: int = DEFAULT_QUERY_WIDTH,
) -> ExQuerySet:
    """Assemble the full (max_elements, points, width) query tensor.

    The first len(elements) groups encode the given elements in input order;
    the remaining groups copy pool entries 0..(gap - 1).
    """
    n_ex = len(elements)
    if n_ex > max_elements:
        raise QueryOverflowError(
            f"{n_ex} elements exceed {max_elements} query slots by {n_ex - max_elements}"
        )
    n_learned = max_elements - n_ex
    if pool.groups < n_learned:
        raise QueryFormatError(
            f"pool has {pool.groups} groups, need {n_learned} to fill the query set"
        )
    if pool.values.shape[1] != points or pool.values.shape[2] != width:
        raise QueryFormatError(
            f"pool group shape {pool.values.shape[1:]} does not match ({points}, {width})"
        )
    values = np.zeros((max_elements, points, width), dtype=np.float64)
    provenance: list[QueryProvenance] = []
    for slot, element in enumerate(elements):
        encoded = encode_element(element, width)
        if encoded.shape[0] != points:
            raise QueryFormatError(
                f"element {element.element_id!r} has {encoded.shape[0]} points, expected {points}"
            )
        values[slot] = encoded
        provenance.append(QueryProvenance(kind="ex", element_id=element.element_id))
    for k in range(n_learned):
        values[n_ex + k] = pool.values[k]
        provenance.append(QueryProvenance(kind="learned", pool_index=k))
    return ExQuerySet(values=values, n_ex=n_ex, provenance=provenance)

"""Canonical vector-map model.

Maps are sets of classed polylines inside an ego-centric rectangular patch.
Every element is canonicalized to CANONICAL_POINTS evenly spaced points
(equal arc length along the source polyline); pedestrian crossings are closed
rings, so their first and last canonical points coincide.

Frame convention: x is lateral, y is longitudinal. The default patch spans
x in [-15, 15] and y in [-30, 30]; `PatchExtent.width_m` is the longitudinal
(y) span and `height_m` the lateral (x) span.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

from .errors import (
    CanonicalFormError,
    ClassTagError,
    DuplicateIdError,
    GeometryError,
    NonFiniteCoordinateError,
)

CANONICAL_POINTS = 20
EVAL_POINTS = 100


class ElementClass(IntEnum):
    """Map element classes. Integer codes are stable and total-ordered."""

    DIVIDER = 0
    PED_CROSSING = 1
    BOUNDARY = 2

    @property
    def tag(self) -> str:
        return _CLASS_TAGS[self]

    @property
    def closed(self) -> bool:
        """Whether elements of this class are rings rather than open chains."""
        return self is ElementClass.PED_CROSSING

    @classmethod
    def from_tag(cls, tag: str) -> "ElementClass":
        try:
            return _TAG_CLASSES[tag]
        except KeyError:
            raise ClassTagError(f"unknown element class tag {tag!r}") from None


_CLASS_TAGS = {
    ElementClass.DIVIDER: "divider",
    ElementClass.PED_CROSSING: "ped_crossing",
    ElementClass.BOUNDARY: "boundary",
}
_TAG_CLASSES = {tag: c for c, tag in _CLASS_TAGS.items()}


@dataclass(eq=False)
class MapElement:
    """One classed polyline with a stable identity."""

    element_id: str
    element_class: ElementClass
    points: np.ndarray  # (n, 2) float64, meters, ego frame

    def __post_init__(self) -> None:
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] == 0:
            raise GeometryError(
                f"element {self.element_id!r}: points must be a non-empty (n, 2) array"
            )
        if not np.all(np.isfinite(pts)):
            raise NonFiniteCoordinateError(
                f"element {self.element_id!r} has a non-finite coordinate"
            )
        self.points = pts

    @property
    def is_canonical(self) -> bool:
        return self.points.shape[0] == CANONICAL_POINTS

    def require_canonical(self) -> None:
        if not self.is_canonical:
            raise CanonicalFormError(
                f"element {self.element_id!r} has {self.points.shape[0]} points, "
                f"expected {CANONICAL_POINTS}"
            )

    def with_points(self, points: np.ndarray) -> "MapElement":
        return MapElement(self.element_id, self.element_class, points)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MapElement):
            return NotImplemented
        return (
            self.element_id == other.element_id
            and self.element_class == other.element_class
            and self.points.shape == other.points.shape
            and bool(np.all(self.points == other.points))
        )


@dataclass(frozen=True)
class PatchExtent:
    """Ego-centered rectangle. width_m spans y (longitudinal), height_m spans x."""

    width_m: float = 60.0
    height_m: float = 30.0

    def __post_init__(self) -> None:
        if not (self.width_m > 0 and self.height_m > 0):
            raise GeometryError(
                f"patch extent must be positive, got {self.width_m} x {self.height_m}"
            )
        if not (np.isfinite(self.width_m) and np.isfinite(self.height_m)):
            raise GeometryError("patch extent must be finite")

    @property
    def x_min(self) -> float:
        return -self.height_m / 2.0

    @property
    def x_max(self) -> float:
        return self.height_m / 2.0

    @property
    def y_min(self) -> float:
        return -self.width_m / 2.0

    @property
    def y_max(self) -> float:
        return self.width_m / 2.0

    def contains(self, points: np.ndarray, margin: float = 0.0) -> bool:
        pts = np.asarray(points, dtype=np.float64)
        return bool(
            np.all(pts[:, 0] >= self.x_min - margin)
            and np.all(pts[:, 0] <= self.x_max + margin)
            and np.all(pts[:, 1] >= self.y_min - margin)
            and np.all(pts[:, 1] <= self.y_max + margin)
        )


@dataclass(eq=False)
class VectorMap:
    """A set of map elements within one patch."""

    extent: PatchExtent
    elements: list[MapElement] = field(default_factory=list)

    def __post_init__(self) -> None:
        seen: set[str] = set()
        for element in self.elements:
            if element.element_id in seen:
                raise DuplicateIdError(f"duplicate element id {element.element_id!r}")
            seen.add(element.element_id)

    def element_ids(self) -> list[str]:
        return [e.element_id for e in self.elements]

    def get(self, element_id: str) -> MapElement:
        for element in self.elements:
            if element.element_id == element_id:
                return element
        raise KeyError(element_id)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, VectorMap):
            return NotImplemented
        return self.extent == other.extent and self.elements == other.elements


def polyline_arclength(points: np.ndarray) -> np.ndarray:
    """Cumulative arc length at each vertex, starting at 0."""
    pts = np.asarray(points, dtype=np.float64)
    seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    return np.concatenate([[0.0], np.cumsum(seg)])


def resample_polyline(points: np.ndarray, n_points: int = CANONICAL_POINTS) -> np.ndarray:
    """Resample to n_points separated by equal arc length along the input.

    First and last input vertices are preserved exactly.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 2:
        raise GeometryError("resample_polyline needs at least 2 points of shape (n, 2)")
    if n_points < 2:
        raise GeometryError(f"n_points must be >= 2, got {n_points}")
    cum = polyline_arclength(pts)
    total = cum[-1]
    if total <= 0.0:
        raise GeometryError("degenerate polyline: total arc length is 0")
    targets = np.linspace(0.0, total, n_points)
    out = np.column_stack(
        [np.interp(targets, cum, pts[:, 0]), np.interp(targets, cum, pts[:, 1])]
    )
    out[0] = pts[0]
    out[-1] = pts[-1]
    return out


def upsample_for_eval(element: MapElement, n_points: int = EVAL_POINTS) -> np.ndarray:
    """Resample a canonical element to the evaluation resolution."""
    element.require_canonical()
    if n_points < CANONICAL_POINTS:
        raise GeometryError(
            f"evaluation resolution {n_points} is below the canonical {CANONICAL_POINTS}"
        )
    return resample_polyline(element.points, n_points)


def chamfer_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Symmetric average Chamfer distance between two point sets (meters)."""
    pa = np.asarray(a, dtype=np.float64)
    pb = np.asarray(b, dtype=np.float64)
    if pa.size == 0 or pb.size == 0:
        raise GeometryError("chamfer_distance needs two non-empty polylines")
    d = np.linalg.norm(pa[:, None, :] - pb[None, :, :], axis=-1)
    return 0.5 * (float(d.min(axis=1).mean()) + float(d.min(axis=0).mean()))


def _clip_segment_params(p0: np.ndarray, p1: np.ndarray, extent: PatchExtent):
    """Liang-Barsky: entry/exit parameters of segment p0->p1 against the patch.

    Returns (t0, t1) with 0 <= t0 <= t1 <= 1, or None when fully outside.
    """
    d = p1 - p0
    t0, t1 = 0.0, 1.0
    for delta, lo, hi, p in (
        (d[0], extent.x_min, extent.x_max, p0[0]),
        (d[1], extent.y_min, extent.y_max, p0[1]),
    ):
        if delta == 0.0:
            if p < lo or p > hi:
                return None
            continue
        ta = (lo - p) / delta
        tb = (hi - p) / delta
        if ta > tb:
            ta, tb = tb, ta
        t0 = max(t0, ta)
        t1 = min(t1, tb)
        if t0 > t1:
            return None
    return t0, t1


def _inside_runs(points: np.ndarray, extent: PatchExtent) -> list[np.ndarray]:
    """Split a polyline into maximal runs lying inside the patch rectangle."""
    runs: list[list[np.ndarray]] = []
    current: list[np.ndarray] = []
    for i in range(points.shape[0] - 1):
        p0, p1 = points[i], points[i + 1]
        clip = _clip_segment_params(p0, p1, extent)
        if clip is None:
            if current:
                runs.append(current)
                current = []
            continue
        t0, t1 = clip
        q0 = p0 if t0 == 0.0 else p0 + t0 * (p1 - p0)
        q1 = p1 if t1 == 1.0 else p0 + t1 * (p1 - p0)
        if current and np.allclose(current[-1], q0, rtol=0.0, atol=1e-12):
            current.append(q1)
        else:
            if current:
                runs.append(current)
            current = [q0, q1]
        if t1 < 1.0:
            runs.append(current)
            current = []
    if current:
        runs.append(current)
    return [np.asarray(run) for run in runs]


def clip_to_patch(vmap: VectorMap) -> VectorMap:
    """Clip every element to the patch rectangle.

    Elements fully inside pass through untouched. Clipped elements are
    re-canonicalized; when clipping splits an element into several inside
    runs, the longest run by arc length is kept (ties: first). Elements left
    entirely outside, or reduced to a zero-length run, are dropped.
    """
    kept: list[MapElement] = []
    for element in vmap.elements:
        if vmap.extent.contains(element.points):
            kept.append(element)
            continue
        runs = _inside_runs(element.points, vmap.extent)
        best = None
        best_length = 0.0
        for run in runs:
            length = float(polyline_arclength(run)[-1])
            if length > best_length:
                best = run
                best_length = length
        if best is None or best_length <= 0.0:
            continue
        kept.append(element.with_points(resample_polyline(best, CANONICAL_POINTS)))
    return VectorMap(extent=vmap.extent, elements=kept)

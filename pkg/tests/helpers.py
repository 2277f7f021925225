"""Shared builders for the test suite."""

import numpy as np

from priormap import (
    ElementClass,
    MapElement,
    PatchExtent,
    VectorMap,
    resample_polyline,
)


def canonical(element_id, element_class, waypoints):
    """Resample arbitrary waypoints to a canonical element."""
    pts = resample_polyline(np.asarray(waypoints, dtype=np.float64))
    return MapElement(element_id, element_class, pts)


def line(element_id, element_class, start, end):
    return canonical(element_id, element_class, [start, end])


def ring(element_id, cx, cy, half_w, half_h):
    corners = [
        (cx - half_w, cy - half_h),
        (cx + half_w, cy - half_h),
        (cx + half_w, cy + half_h),
        (cx - half_w, cy + half_h),
        (cx - half_w, cy - half_h),
    ]
    return canonical(element_id, ElementClass.PED_CROSSING, corners)


def demo_map(extent=None):
    """Two boundaries, two dividers, one crossing, all well inside the patch."""
    extent = extent or PatchExtent()
    elements = [
        line("b0", ElementClass.BOUNDARY, (-6.0, -25.0), (-6.0, 25.0)),
        line("b1", ElementClass.BOUNDARY, (6.0, -25.0), (6.0, 25.0)),
        line("d0", ElementClass.DIVIDER, (-2.0, -25.0), (-2.0, 25.0)),
        line("d1", ElementClass.DIVIDER, (2.0, -25.0), (2.0, 25.0)),
        ring("p0", 0.0, 10.0, 2.0, 1.5),
    ]
    return VectorMap(extent=extent, elements=elements)


def random_polyline(rng, extent, margin=1.0, n_waypoints=None):
    n = int(n_waypoints if n_waypoints is not None else rng.integers(2, 7))
    while True:
        pts = np.column_stack(
            [
                rng.uniform(extent.x_min + margin, extent.x_max - margin, size=n),
                rng.uniform(extent.y_min + margin, extent.y_max - margin, size=n),
            ]
        )
        if np.all(np.linalg.norm(np.diff(pts, axis=0), axis=1) > 1e-6):
            return pts


def random_element(rng, element_id, extent=None, element_class=None, margin=1.0):
    extent = extent or PatchExtent()
    if element_class is None:
        element_class = ElementClass(int(rng.integers(0, 3)))
    pts = random_polyline(rng, extent, margin=margin)
    if element_class.closed:
        pts = np.vstack([pts, pts[:1]])
    return MapElement(element_id, element_class, resample_polyline(pts))


def random_map(rng, n_elements=None, extent=None, margin=1.0):
    extent = extent or PatchExtent()
    n = int(n_elements if n_elements is not None else rng.integers(1, 8))
    elements = [random_element(rng, f"e{k}", extent, margin=margin) for k in range(n)]
    return VectorMap(extent=extent, elements=elements)

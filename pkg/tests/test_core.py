"""Geometry layer: classes, canonical elements, resampling, chamfer, clipping."""

import numpy as np
import pytest

from priormap import (
    CANONICAL_POINTS,
    EVAL_POINTS,
    CanonicalFormError,
    ClassTagError,
    DuplicateIdError,
    ElementClass,
    GeometryError,
    MapElement,
    NonFiniteCoordinateError,
    PatchExtent,
    VectorMap,
    chamfer_distance,
    clip_to_patch,
    make_rng,
    polyline_arclength,
    resample_polyline,
    upsample_for_eval,
)

from helpers import canonical, demo_map, line, random_map, random_polyline


def test_class_codes_and_tags():
    assert int(ElementClass.DIVIDER) == 0
    assert int(ElementClass.PED_CROSSING) == 1
    assert int(ElementClass.BOUNDARY) == 2
    assert ElementClass.DIVIDER.tag == "divider"
    assert ElementClass.PED_CROSSING.tag == "ped_crossing"
    assert ElementClass.BOUNDARY.tag == "boundary"


def test_only_crossings_are_closed():
    assert ElementClass.PED_CROSSING.closed
    assert not ElementClass.DIVIDER.closed
    assert not ElementClass.BOUNDARY.closed


def test_from_tag_round_trip_and_rejection():
    for klass in ElementClass:
        assert ElementClass.from_tag(klass.tag) is klass
    with pytest.raises(ClassTagError):
        ElementClass.from_tag("crosswalk")


def test_element_validation():
    with pytest.raises(GeometryError):
        MapElement("e", ElementClass.DIVIDER, np.zeros((0, 2)))
    with pytest.raises(GeometryError):
        MapElement("e", ElementClass.DIVIDER, np.zeros((4, 3)))
    bad = np.zeros((20, 2))
    bad[3, 1] = np.nan
    with pytest.raises(NonFiniteCoordinateError):
        MapElement("e", ElementClass.DIVIDER, bad)


def test_canonical_is_a_point_count_check():
    open_20 = MapElement("a", ElementClass.DIVIDER, np.column_stack([np.arange(20.0), np.zeros(20)]))
    assert open_20.is_canonical
    ring_19 = canonical("p", ElementClass.PED_CROSSING, [(0, 0), (2, 0), (2, 1), (0, 1), (0, 0)])
    ring_19 = ring_19.with_points(ring_19.points[:19])
    assert not ring_19.is_canonical
    with pytest.raises(CanonicalFormError):
        ring_19.require_canonical()


def test_with_points_keeps_identity():
    e = line("d7", ElementClass.DIVIDER, (0, 0), (1, 0))
    moved = e.with_points(e.points + 1.0)
    assert moved.element_id == "d7"
    assert moved.element_class is ElementClass.DIVIDER
    assert not np.array_equal(moved.points, e.points)


def test_element_equality_compares_geometry():
    a = line("d0", ElementClass.DIVIDER, (0, 0), (1, 0))
    b = line("d0", ElementClass.DIVIDER, (0, 0), (1, 0))
    c = line("d0", ElementClass.DIVIDER, (0, 0), (1, 1))
    assert a == b
    assert a != c
    assert a != line("d1", ElementClass.DIVIDER, (0, 0), (1, 0))


def test_patch_extent_defaults_and_spans():
    extent = PatchExtent()
    # width is the longitudinal (y) span, height the lateral (x) span
    assert (extent.x_min, extent.x_max) == (-15.0, 15.0)
    assert (extent.y_min, extent.y_max) == (-30.0, 30.0)
    assert extent.contains(np.array([[15.0, -30.0]]))
    assert not extent.contains(np.array([[15.0001, 0.0]]))
    assert extent.contains(np.array([[15.5, 0.0]]), margin=0.5)


def test_patch_extent_rejects_degenerate_sizes():
    with pytest.raises(GeometryError):
        PatchExtent(width_m=0.0)
    with pytest.raises(GeometryError):
        PatchExtent(height_m=-3.0)


def test_vector_map_rejects_duplicate_ids():
    e = line("same", ElementClass.DIVIDER, (0, 0), (1, 0))
    f = line("same", ElementClass.BOUNDARY, (0, 1), (1, 1))
    with pytest.raises(DuplicateIdError):
        VectorMap(extent=PatchExtent(), elements=[e, f])


def test_vector_map_lookup(demo):
    assert demo.element_ids() == ["b0", "b1", "d0", "d1", "p0"]
    assert demo.get("d1").element_class is ElementClass.DIVIDER
    with pytest.raises(KeyError):
        demo.get("nope")


def test_arclength_straight_and_ring():
    straight = np.array([[0.0, 0.0], [3.0, 4.0]])
    assert polyline_arclength(straight)[-1] == pytest.approx(5.0, abs=1e-12)
    square = np.array([[0, 0], [2, 0], [2, 2], [0, 2], [0, 0]], dtype=float)
    assert polyline_arclength(square)[-1] == pytest.approx(8.0, abs=1e-12)
    assert polyline_arclength(square + 100.0)[-1] == pytest.approx(8.0, abs=1e-12)


def test_resample_straight_segment_five_points():
    out = resample_polyline(np.array([[0.0, 0.0], [2.0, 0.0]]), 5)
    assert np.allclose(out[:, 0], [0.0, 0.5, 1.0, 1.5, 2.0], atol=1e-12)
    assert np.all(out[:, 1] == 0.0)


def test_resample_l_shape_midpoint_lands_on_corner():
    # Total length 2, so the middle of 3 samples sits at arc length 1: the corner.
    out = resample_polyline(np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]]), 3)
    assert np.allclose(out[1], [1.0, 0.0], atol=1e-12)


def test_resample_preserves_endpoints_exactly():
    rng = make_rng(11)
    for _ in range(50):
        pts = random_polyline(rng, PatchExtent())
        out = resample_polyline(pts, 20)
        assert np.array_equal(out[0], pts[0])
        assert np.array_equal(out[-1], pts[-1])
        assert out.shape == (20, 2)


def test_resample_default_is_canonical_count():
    out = resample_polyline(np.array([[0.0, 0.0], [1.0, 1.0]]))
    assert out.shape == (CANONICAL_POINTS, 2)


def _equal_step_walk(rng, n, step=1.0):
    # Constant chord length with arbitrary corners: a fixed point of resampling.
    angles = rng.uniform(-np.pi, np.pi, size=n - 1)
    deltas = step * np.column_stack([np.cos(angles), np.sin(angles)])
    return np.vstack([np.zeros(2), np.cumsum(deltas, axis=0)])


def test_resample_identity_on_equal_chord_inputs():
    rng = make_rng(12)
    for _ in range(50):
        pts = _equal_step_walk(rng, 20)
        assert np.allclose(resample_polyline(pts, 20), pts, atol=1e-9)


def test_resample_idempotent_on_straight_lines():
    pts = np.column_stack([np.geomspace(1.0, 64.0, 7), np.zeros(7)])
    once = resample_polyline(pts, 20)
    twice = resample_polyline(once, 20)
    assert np.allclose(twice, once, atol=1e-12)


def test_resample_rejects_degenerate_input():
    with pytest.raises(GeometryError):
        resample_polyline(np.array([[1.0, 1.0], [1.0, 1.0]]))
    with pytest.raises(GeometryError):
        resample_polyline(np.array([[1.0, 1.0]]))
    with pytest.raises(GeometryError):
        resample_polyline(np.array([[0.0, 0.0], [1.0, 0.0]]), 1)


def test_upsample_identity_at_canonical_resolution():
    rng = make_rng(17)
    e = MapElement("d", ElementClass.DIVIDER, _equal_step_walk(rng, CANONICAL_POINTS))
    out = upsample_for_eval(e, CANONICAL_POINTS)
    assert np.allclose(out, e.points, atol=1e-9)


def test_upsample_keeps_straight_lines_collinear():
    e = canonical("d", ElementClass.DIVIDER, [(0.0, -20.0), (5.0, 20.0)])
    out = upsample_for_eval(e, 100)
    arcs = np.diff(polyline_arclength(out))
    assert np.allclose(arcs, arcs.mean(), atol=1e-9)
    cross = (out[:, 0] - out[0, 0]) * 40.0 - (out[:, 1] - out[0, 1]) * 5.0
    assert np.all(np.abs(cross) <= 1e-9)


def _arc_positions_on(source, samples):
    """Locate each sample on the source polyline; (arc position, distance)."""
    cum = polyline_arclength(source)
    positions = np.empty(len(samples))
    offsets = np.empty(len(samples))
    for k, p in enumerate(samples):
        best = (np.inf, 0.0)
        for i in range(source.shape[0] - 1):
            a, b = source[i], source[i + 1]
            d = b - a
            t = float(np.clip(np.dot(p - a, d) / np.dot(d, d), 0.0, 1.0))
            dist = float(np.linalg.norm(a + t * d - p))
            if dist < best[0]:
                best = (dist, cum[i] + t * np.linalg.norm(d))
        offsets[k], positions[k] = best
    return positions, offsets


def test_upsample_points_sit_on_source_at_uniform_arc():
    # The cumulative-arc oracle: output samples lie on the input polyline,
    # spaced uniformly in the input's own arc length.
    e = canonical("d", ElementClass.DIVIDER, [(0, 0), (3, 5), (-2, 8), (6, 12)])
    out = upsample_for_eval(e, 40)
    positions, offsets = _arc_positions_on(e.points, out)
    total = polyline_arclength(e.points)[-1]
    assert np.all(offsets <= 1e-9)
    assert np.allclose(positions, np.linspace(0.0, total, 40), atol=1e-9 * total)


def test_upsample_defaults_and_guards():
    e = canonical("d", ElementClass.DIVIDER, [(0, 0), (1, 0)])
    assert upsample_for_eval(e).shape == (EVAL_POINTS, 2)
    with pytest.raises(GeometryError):
        upsample_for_eval(e, CANONICAL_POINTS - 1)
    short = MapElement("s", ElementClass.DIVIDER, np.array([[0.0, 0.0], [1.0, 0.0]]))
    with pytest.raises(CanonicalFormError):
        upsample_for_eval(short)


def _chamfer_reference(a, b):
    forward = np.mean([min(np.linalg.norm(p - q) for q in b) for p in a])
    backward = np.mean([min(np.linalg.norm(q - p) for p in a) for q in b])
    return 0.5 * (forward + backward)


def test_chamfer_zero_on_identical_sets():
    pts = np.array([[0.0, 0.0], [1.0, 2.0], [3.0, -1.0]])
    assert chamfer_distance(pts, pts) == 0.0


def test_chamfer_translated_line_is_the_offset():
    a = np.column_stack([np.linspace(0.0, 10.0, 25), np.zeros(25)])
    b = a + np.array([0.0, 2.0])
    assert chamfer_distance(a, b) == pytest.approx(2.0, abs=1e-12)


def test_chamfer_hand_case_against_reference():
    a = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]])
    b = np.array([[0.0, 1.0], [2.0, 1.0]])
    assert chamfer_distance(a, b) == pytest.approx(_chamfer_reference(a, b), abs=1e-12)
    # forward means (1 + sqrt 2 + 1) / 3, backward 1
    assert chamfer_distance(a, b) == pytest.approx(0.5 * ((2 + np.sqrt(2)) / 3 + 1), abs=1e-12)


def test_chamfer_matches_brute_force_on_random_sets():
    rng = make_rng(13)
    for _ in range(50):
        a = rng.normal(size=(int(rng.integers(1, 12)), 2))
        b = rng.normal(size=(int(rng.integers(1, 12)), 2))
        assert chamfer_distance(a, b) == pytest.approx(_chamfer_reference(a, b), abs=1e-12)


def test_chamfer_symmetric_and_translation_invariant():
    rng = make_rng(14)
    for _ in range(50):
        a = rng.normal(size=(6, 2))
        b = rng.normal(size=(9, 2))
        assert chamfer_distance(a, b) == chamfer_distance(b, a)
        shift = rng.normal(size=2)
        assert chamfer_distance(a + shift, b + shift) == pytest.approx(
            chamfer_distance(a, b), abs=1e-12
        )


def test_chamfer_is_pure():
    rng = make_rng(15)
    a = rng.normal(size=(7, 2))
    b = rng.normal(size=(5, 2))
    assert chamfer_distance(a, b) == chamfer_distance(a, b)


def test_chamfer_rejects_empty_input():
    with pytest.raises(GeometryError):
        chamfer_distance(np.zeros((0, 2)), np.array([[0.0, 0.0]]))


def test_clip_keeps_inside_map_untouched(demo):
    out = clip_to_patch(demo)
    assert out == demo
    for before, after in zip(demo.elements, out.elements):
        assert np.array_equal(before.points, after.points)


def test_clip_drops_fully_outside_elements(patch):
    inside = line("in", ElementClass.DIVIDER, (0, 0), (1, 0))
    outside = line("out", ElementClass.DIVIDER, (40.0, 0.0), (41.0, 0.0))
    out = clip_to_patch(VectorMap(extent=patch, elements=[inside, outside]))
    assert out.element_ids() == ["in"]


def test_clip_puts_crossing_endpoint_on_the_border(patch):
    # Exits through x = 15; the clipped end must land on the border.
    e = line("d", ElementClass.DIVIDER, (0.0, 0.0), (20.0, 0.0))
    out = clip_to_patch(VectorMap(extent=patch, elements=[e]))
    clipped = out.get("d").points
    assert clipped.shape == (CANONICAL_POINTS, 2)
    assert abs(clipped[-1, 0] - patch.x_max) <= 1e-9
    assert abs(clipped[-1, 1]) <= 1e-9
    assert patch.contains(clipped, margin=1e-9)


def test_clip_keeps_longest_inside_run(patch):
    # Crosses the patch twice; the longer inside span wins.
    waypoints = [(-40.0, 0.0), (-10.0, 0.0), (-16.0, 20.0), (14.0, 20.0)]
    e = canonical("d", ElementClass.DIVIDER, waypoints)
    out = clip_to_patch(VectorMap(extent=patch, elements=[e]))
    clipped = out.get("d").points
    assert patch.contains(clipped, margin=1e-9)
    # The kept run is the one along y = 20, which is longer than the entry stub.
    assert np.all(clipped[:, 1] > 1.0)


def test_clip_idempotent_on_random_maps():
    rng = make_rng(16)
    extent = PatchExtent()
    for _ in range(20):
        vmap = random_map(rng, extent=extent, margin=-4.0)  # may poke outside
        once = clip_to_patch(vmap)
        twice = clip_to_patch(once)
        assert twice == once
        for element in once.elements:
            assert element.is_canonical
            assert extent.contains(element.points, margin=1e-9)

"""Persistence formats: byte-stable round trips and designated rejections."""

import json
from pathlib import Path

import numpy as np
import pytest

from priormap import (
    CanonicalFormError,
    ClassTagError,
    CorrespondenceError,
    DuplicateIdError,
    ElementClass,
    FormatError,
    FormatSyntaxError,
    NonFiniteCoordinateError,
    QueryFormatError,
    ScenarioKind,
    ScenarioSpec,
    SchemaVersionError,
    VariantSet,
    Assignment,
    AssignmentEntry,
    generate_variants,
    load_assignment,
    load_map,
    load_queries,
    load_report,
    load_variants,
    make_rng,
    save_assignment,
    save_map,
    save_report,
    save_variants,
)

from golden_recipes import GOLDEN
from helpers import demo_map, random_map

GOLDEN_DIR = Path(__file__).parent / "golden"


@pytest.mark.parametrize("name", sorted(GOLDEN))
def test_golden_files_stay_byte_identical(name, tmp_path):
    build, save, _ = GOLDEN[name]
    fresh = tmp_path / name
    save(build(), fresh)
    assert fresh.read_bytes() == (GOLDEN_DIR / name).read_bytes()


@pytest.mark.parametrize("name", sorted(GOLDEN))
def test_golden_files_load_to_the_source_object(name):
    build, _, load = GOLDEN[name]
    assert load(GOLDEN_DIR / name) == build()


@pytest.mark.parametrize("name", sorted(GOLDEN))
def test_save_is_deterministic(name, tmp_path):
    build, save, _ = GOLDEN[name]
    obj = build()
    save(obj, tmp_path / "a")
    save(obj, tmp_path / "b")
    assert (tmp_path / "a").read_bytes() == (tmp_path / "b").read_bytes()


@pytest.mark.parametrize("name", sorted(GOLDEN))
def test_save_leaves_no_temp_files(name, tmp_path):
    build, save, _ = GOLDEN[name]
    save(build(), tmp_path / name)
    assert sorted(p.name for p in tmp_path.iterdir()) == [name]


def test_random_maps_round_trip(tmp_path):
    rng = make_rng(80)
    for k in range(10):
        vmap = random_map(rng)
        path = tmp_path / f"m{k}.json"
        save_map(vmap, path)
        assert load_map(path) == vmap


def test_variant_sets_round_trip(tmp_path):
    demo = demo_map()
    for kind in (ScenarioKind.S2B, ScenarioKind.S3A, ScenarioKind.S3B):
        spec = ScenarioSpec(kind=kind)
        vs = VariantSet(
            scenario=spec,
            master_seed=9,
            source_ids=demo.element_ids(),
            variants=generate_variants(demo, spec, count=3, seed=9),
            source_path="maps/demo.json",
        )
        path = tmp_path / f"{kind.value}.json"
        save_variants(vs, path)
        loaded = load_variants(path)
        assert loaded == vs
        assert loaded.source_path == "maps/demo.json"


def test_query_values_survive_bit_exact(tmp_path):
    build = GOLDEN["queries.json"][0]
    queries = build()
    path = tmp_path / "q.json"
    GOLDEN["queries.json"][1](queries, path)
    loaded = load_queries(path)
    assert np.array_equal(loaded.values, queries.values)
    assert loaded.n_ex == queries.n_ex
    assert loaded.provenance == queries.provenance


def test_assignment_round_trip_with_background(tmp_path):
    assignment = Assignment(
        entries=[
            AssignmentEntry(slot=0, gt_id="g1", pinned=True, cost=0.1),
            AssignmentEntry(slot=1, gt_id=None, pinned=False, cost=0.0),
            AssignmentEntry(slot=2, gt_id="g0", pinned=False, cost=12.25),
        ],
        hungarian_shape=(2, 1),
    )
    path = tmp_path / "a.csv"
    save_assignment(assignment, path)
    loaded = load_assignment(path)
    assert loaded == assignment
    assert loaded.entries[0].cost == 0.1  # repr round trip keeps the exact float


def test_assignment_rejects_reserved_gt_id(tmp_path):
    bad = Assignment(
        entries=[AssignmentEntry(slot=0, gt_id="background", pinned=False, cost=1.0)],
        hungarian_shape=(1, 1),
    )
    with pytest.raises(FormatError):
        save_assignment(bad, tmp_path / "a.csv")


def _mutated(tmp_path, name, mutate, suffix="json"):
    obj = json.loads((GOLDEN_DIR / name).read_text())
    mutate(obj)
    out = tmp_path / f"broken.{suffix}"
    out.write_text(json.dumps(obj))
    return out


def test_map_truncated_file_is_a_syntax_error(tmp_path):
    text = (GOLDEN_DIR / "map.json").read_text()
    out = tmp_path / "t.json"
    out.write_text(text[: len(text) // 2])
    with pytest.raises(FormatSyntaxError):
        load_map(out)


def test_map_top_level_must_be_an_object(tmp_path):
    out = tmp_path / "l.json"
    out.write_text("[1, 2, 3]")
    with pytest.raises(FormatSyntaxError):
        load_map(out)


@pytest.mark.parametrize(
    "mutate, error",
    [
        (lambda o: o.update(format="maps"), SchemaVersionError),
        (lambda o: o.update(version=2), SchemaVersionError),
        (lambda o: o.update(bonus=1), SchemaVersionError),
        (lambda o: o.pop("elements"), FormatSyntaxError),
        (lambda o: o["elements"][0].update({"class": "crosswalk"}), ClassTagError),
        (lambda o: o["elements"][0]["points"][0].__setitem__(0, float("nan")), NonFiniteCoordinateError),
        (lambda o: o["elements"][0].update(points=o["elements"][0]["points"][:19]), CanonicalFormError),
        (lambda o: o["elements"][1].update(id=o["elements"][0]["id"]), DuplicateIdError),
        (lambda o: o["elements"][0].update(closed=True), FormatSyntaxError),
        (lambda o: o["elements"][0]["points"].__setitem__(0, [1.0, 2.0, 3.0]), FormatSyntaxError),
        (lambda o: o["elements"][0].update(id=7), FormatSyntaxError),
        (lambda o: o["elements"][0].update(points=5), FormatSyntaxError),
        (lambda o: o["extent"].update(width_m=True), FormatSyntaxError),
    ],
)
def test_map_malformations(tmp_path, mutate, error):
    out = _mutated(tmp_path, "map.json", mutate)
    with pytest.raises(error):
        load_map(out)


def test_map_unknown_class_error_names_the_tag(tmp_path):
    out = _mutated(tmp_path, "map.json", lambda o: o["elements"][0].update({"class": "crosswalk"}))
    with pytest.raises(ClassTagError, match="crosswalk"):
        load_map(out)


@pytest.mark.parametrize(
    "mutate, error",
    [
        (lambda o: o["variants"][0]["correspondences"][0].update(source="phantom"), CorrespondenceError),
        (lambda o: o["variants"][0]["correspondences"].pop(0), CorrespondenceError),
        (
            lambda o: o["variants"][0]["correspondences"][1].update(
                source=o["variants"][0]["correspondences"][0]["source"]
            ),
            CorrespondenceError,
        ),
        (lambda o: o["scenario"].update(kind="s9"), FormatSyntaxError),
        (lambda o: o["variants"][0].update(note="hi"), SchemaVersionError),
        (lambda o: o.update(master_seed="eleven"), FormatSyntaxError),
    ],
)
def test_variants_malformations(tmp_path, mutate, error):
    out = _mutated(tmp_path, "variants.json", mutate)
    with pytest.raises(error):
        load_variants(out)


def test_variants_truncation_yields_no_partial_result(tmp_path):
    text = (GOLDEN_DIR / "variants.json").read_text()
    out = tmp_path / "t.json"
    out.write_text(text[:-40])
    with pytest.raises(FormatSyntaxError):
        load_variants(out)


@pytest.mark.parametrize(
    "mutate, error",
    [
        (lambda o: o["values"].pop(), FormatSyntaxError),
        (lambda o: o["values"].__setitem__(0, float("nan")), NonFiniteCoordinateError),
        (lambda o: o["provenance"][0].update(kind="magic"), FormatSyntaxError),
        (lambda o: o["provenance"][0].update(tint="red"), SchemaVersionError),
        (lambda o: o.update(count=o["count"] + 1), FormatSyntaxError),
    ],
)
def test_queries_malformations(tmp_path, mutate, error):
    out = _mutated(tmp_path, "queries.json", mutate)
    with pytest.raises(error):
        load_queries(out)


@pytest.mark.parametrize(
    "mutate, error",
    [
        (lambda o: o.update(kind="weird"), SchemaVersionError),
        (lambda o: o["aggregate"].pop("std"), FormatSyntaxError),
        (
            lambda o: o["per_seed"][0]["counts"]["divider"].update({"0.5": [1, 2]}),
            FormatSyntaxError,
        ),
        (lambda o: o["estimator"].update(mode="psychic"), FormatSyntaxError),
        (lambda o: o["samples"][0].pop("n_pinned"), FormatSyntaxError),
    ],
)
def test_pipeline_report_malformations(tmp_path, mutate, error):
    out = _mutated(tmp_path, "pipeline_report.json", mutate)
    with pytest.raises(error):
        load_report(out)


def test_eval_report_malformations(tmp_path):
    out = _mutated(tmp_path, "eval_report.json", lambda o: o["class_ap"].pop("divider"))
    with pytest.raises(FormatSyntaxError):
        load_report(out)
    out = _mutated(tmp_path, "eval_report.json", lambda o: o["counts"]["divider"].update({"0.5": [1, 2]}))
    with pytest.raises(FormatSyntaxError):
        load_report(out)


def _assignment_lines():
    return (GOLDEN_DIR / "assignment.csv").read_text().splitlines()


def _write_lines(tmp_path, lines):
    out = tmp_path / "a.csv"
    out.write_text("\n".join(lines) + "\n")
    return out


def test_assignment_missing_magic(tmp_path):
    out = _write_lines(tmp_path, _assignment_lines()[1:])
    with pytest.raises(FormatSyntaxError):
        load_assignment(out)


def test_assignment_unsupported_version(tmp_path):
    lines = _assignment_lines()
    lines[0] = lines[0].replace("assignment/1", "assignment/2")
    with pytest.raises(SchemaVersionError):
        load_assignment(_write_lines(tmp_path, lines))


def test_assignment_bad_header_row(tmp_path):
    lines = _assignment_lines()
    lines[1] = "slot,gt,pinned,cost"
    with pytest.raises(FormatSyntaxError):
        load_assignment(_write_lines(tmp_path, lines))


@pytest.mark.parametrize(
    "row, error",
    [
        ("x,b0,true,0.0", FormatSyntaxError),
        ("9,b9,yes,0.0", FormatSyntaxError),
        ("9,b9,true,inf", NonFiniteCoordinateError),
        ("9,b9,true,zero", FormatSyntaxError),
        ("9,b9,true", FormatSyntaxError),
        ("0,b9,true,0.0", FormatSyntaxError),  # duplicate slot
        ("9,b0,true,0.0", FormatSyntaxError),  # duplicate ground truth
    ],
)
def test_assignment_bad_rows(tmp_path, row, error):
    lines = _assignment_lines() + [row]
    with pytest.raises(error):
        load_assignment(_write_lines(tmp_path, lines))


def test_queries_n_ex_out_of_range_error_type(tmp_path):
    out = _mutated(tmp_path, "queries.json", lambda o: o.update(n_ex=o["count"] + 1))
    with pytest.raises(QueryFormatError):
        load_queries(out)

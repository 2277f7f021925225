"""Bit-exact file formats: maps, variant sets, query sets, assignments, reports.

Maps, variant sets, query sets, and reports are JSON with a `format`/`version`
header, fixed key order, and shortest round-trip float formatting, so the same
value always serializes to the same bytes. Assignments are a small CSV table
with a versioned comment line. All writes go through a temp file in the target
directory followed by an atomic rename.

Loads are strict: unknown fields anywhere raise SchemaVersionError, structural
problems raise FormatSyntaxError, and domain violations raise the matching
domain error (class tag, non-finite coordinate, duplicate id, canonical form,
correspondence integrity).
"""

from __future__ import annotations

import csv
import io
import json
import os
import re
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import ElementClass, MapElement, PatchExtent, VectorMap
from .errors import (
    ClassTagError,
    CorrespondenceError,
    FormatError,
    FormatSyntaxError,
    NonFiniteCoordinateError,
    SchemaVersionError,
)
from .matching import Assignment, AssignmentEntry
from .metrics import AggregateReport, ApReport
from .perturb import Correspondence, PerturbedMap, ScenarioKind, ScenarioSpec
from .queries import ExQuerySet, QueryProvenance
from .simulate import (
    EstimatorMode,
    MockEstimatorSpec,
    PipelineReport,
    SampleStats,
)

FORMAT_VERSION = 1
BACKGROUND_TOKEN = "background"

_CLASS_ORDER = [c.tag for c in ElementClass]


# ---------------------------------------------------------------- plumbing


def _atomic_write_text(path: str | Path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _dump_json(payload: dict) -> str:
    return json.dumps(payload, indent=2, allow_nan=False) + "\n"


def _parse_json(path: str | Path) -> dict:
    text = Path(path).read_text()
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatSyntaxError(f"{path}: malformed JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise FormatSyntaxError(f"{path}: top level must be an object")
    return obj


def _check_header(obj: dict, expected: str, where: str) -> None:
    fmt = obj.get("format")
    version = obj.get("version")
    if fmt != expected:
        raise SchemaVersionError(f"{where}: expected format {expected!r}, got {fmt!r}")
    if version != FORMAT_VERSION:
        raise SchemaVersionError(
            f"{where}: unsupported version {version!r}, expected {FORMAT_VERSION}"
        )


def _fields(obj: dict, where: str, required: tuple[str, ...], optional: tuple[str, ...] = ()) -> None:
    unknown = set(obj) - set(required) - set(optional)
    if unknown:
        raise SchemaVersionError(f"{where}: unknown field(s) {sorted(unknown)}")
    missing = [name for name in required if name not in obj]
    if missing:
        raise FormatSyntaxError(f"{where}: missing field(s) {missing}")


def _obj(value, where: str) -> dict:
    if not isinstance(value, dict):
        raise FormatSyntaxError(f"{where}: expected an object")
    return value


def _arr(value, where: str) -> list:
    if not isinstance(value, list):
        raise FormatSyntaxError(f"{where}: expected an array")
    return value


def _str(value, where: str) -> str:
    if not isinstance(value, str):
        raise FormatSyntaxError(f"{where}: expected a string")
    return value


def _bool(value, where: str) -> bool:
    if not isinstance(value, bool):
        raise FormatSyntaxError(f"{where}: expected a boolean")
    return value


def _int(value, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise FormatSyntaxError(f"{where}: expected an integer")
    return value


def _num(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise FormatSyntaxError(f"{where}: expected a number")
    return float(value)


def _finite(value: float, where: str) -> float:
    if not np.isfinite(value):
        raise NonFiniteCoordinateError(f"{where}: non-finite value {value!r}")
    return value


def _fkey(value: float) -> str:
    return repr(float(value))


# ---------------------------------------------------------------- map files


def _extent_record(extent: PatchExtent) -> dict:
    return {"width_m": float(extent.width_m), "height_m": float(extent.height_m)}


def _extent_from(record, where: str) -> PatchExtent:
    record = _obj(record, where)
    _fields(record, where, ("width_m", "height_m"))
    width = _finite(_num(record["width_m"], f"{where}.width_m"), f"{where}.width_m")
    height = _finite(_num(record["height_m"], f"{where}.height_m"), f"{where}.height_m")
    return PatchExtent(width_m=width, height_m=height)


def _element_record(element: MapElement) -> dict:
    return {
        "id": element.element_id,
        "class": element.element_class.tag,
        "closed": element.element_class.closed,
        "points": [[float(x), float(y)] for x, y in element.points],
    }


def _element_from(record, where: str) -> MapElement:
    record = _obj(record, where)
    _fields(record, where, ("id", "class", "closed", "points"))
    element_id = _str(record["id"], f"{where}.id")
    element_class = ElementClass.from_tag(_str(record["class"], f"{where}.class"))
    closed = _bool(record["closed"], f"{where}.closed")
    if closed != element_class.closed:
        raise FormatSyntaxError(
            f"{where}: closed flag {closed} contradicts class {element_class.tag!r}"
        )
    rows = _arr(record["points"], f"{where}.points")
    points = np.empty((len(rows), 2), dtype=np.float64)
    for i, row in enumerate(rows):
        pair = _arr(row, f"{where}.points[{i}]")
        if len(pair) != 2:
            raise FormatSyntaxError(f"{where}.points[{i}]: expected [x, y]")
        points[i, 0] = _num(pair[0], f"{where}.points[{i}][0]")
        points[i, 1] = _num(pair[1], f"{where}.points[{i}][1]")
    if points.shape[0] == 0:
        raise FormatSyntaxError(f"{where}.points: must be non-empty")
    element = MapElement(element_id, element_class, points)
    element.require_canonical()
    return element


def save_map(vmap: VectorMap, path: str | Path) -> None:
    """Write a map file; every element must be in canonical form."""
    for element in vmap.elements:
        element.require_canonical()
    payload = {
        "format": "map",
        "version": FORMAT_VERSION,
        "extent": _extent_record(vmap.extent),
        "elements": [_element_record(e) for e in vmap.elements],
    }
    _atomic_write_text(path, _dump_json(payload))


def load_map(path: str | Path) -> VectorMap:
    obj = _parse_json(path)
    _check_header(obj, "map", str(path))
    _fields(obj, str(path), ("format", "version", "extent", "elements"))
    extent = _extent_from(obj["extent"], f"{path}:extent")
    records = _arr(obj["elements"], f"{path}:elements")
    elements = [_element_from(rec, f"{path}:elements[{i}]") for i, rec in enumerate(records)]
    return VectorMap(extent, elements)


# ----------------------------------------------------------- scenario specs


_SCENARIO_FIELDS = (
    "kind",
    "sigma_shift",
    "sigma_point",
    "delete_frac",
    "add_frac",
    "mix_p",
    "amp_h",
    "amp_v",
    "inclination",
    "grid_spacing",
    "sigma_grid",
    "exact_half",
)


def _scenario_record(spec: ScenarioSpec) -> dict:
    record: dict = {"kind": spec.kind.value}
    for name in _SCENARIO_FIELDS[1:-1]:
        record[name] = float(getattr(spec, name))
    record["exact_half"] = spec.exact_half
    return record


def _scenario_from(record, where: str) -> ScenarioSpec:
    record = _obj(record, where)
    _fields(record, where, _SCENARIO_FIELDS)
    token = _str(record["kind"], f"{where}.kind")
    try:
        kind = ScenarioKind.from_token(token)
    except ValueError as exc:
        raise FormatSyntaxError(f"{where}.kind: {exc}") from exc
    values = {
        name: _finite(_num(record[name], f"{where}.{name}"), f"{where}.{name}")
        for name in _SCENARIO_FIELDS[1:-1]
    }
    return ScenarioSpec(
        kind=kind, exact_half=_bool(record["exact_half"], f"{where}.exact_half"), **values
    )


# -------------------------------------------------------------- variant sets


@dataclass(eq=True)
class VariantSet:
    """A source map's perturbed variants plus everything needed to replay them."""

    scenario: ScenarioSpec
    master_seed: int
    source_ids: list[str]
    variants: list[PerturbedMap]
    source_path: str | None = None


def save_variants(variant_set: VariantSet, path: str | Path) -> None:
    for variant in variant_set.variants:
        for element in variant.map.elements:
            element.require_canonical()
    extent = variant_set.variants[0].map.extent if variant_set.variants else PatchExtent()
    payload = {
        "format": "variants",
        "version": FORMAT_VERSION,
        "extent": _extent_record(extent),
        "scenario": _scenario_record(variant_set.scenario),
        "master_seed": int(variant_set.master_seed),
        "source_ids": list(variant_set.source_ids),
        "source_path": variant_set.source_path,
        "variants": [
            {
                "seed": int(v.seed),
                "unperturbed": v.unperturbed,
                "elements": [_element_record(e) for e in v.map.elements],
                "correspondences": [
                    {"id": c.perturbed_id, "source": c.source_id} for c in v.correspondences
                ],
            }
            for v in variant_set.variants
        ],
    }
    _atomic_write_text(path, _dump_json(payload))


def _variant_from(
    record, extent: PatchExtent, scenario: ScenarioSpec, source_ids: set[str], where: str
) -> PerturbedMap:
    record = _obj(record, where)
    _fields(record, where, ("seed", "unperturbed", "elements", "correspondences"))
    element_records = _arr(record["elements"], f"{where}.elements")
    elements = [
        _element_from(rec, f"{where}.elements[{i}]") for i, rec in enumerate(element_records)
    ]
    correspondences = []
    for i, rec in enumerate(_arr(record["correspondences"], f"{where}.correspondences")):
        rec = _obj(rec, f"{where}.correspondences[{i}]")
        _fields(rec, f"{where}.correspondences[{i}]", ("id", "source"))
        source = rec["source"]
        if source is not None:
            source = _str(source, f"{where}.correspondences[{i}].source")
            if source not in source_ids:
                raise CorrespondenceError(
                    f"{where}.correspondences[{i}]: unknown source id {source!r}"
                )
        correspondences.append(
            Correspondence(
                perturbed_id=_str(rec["id"], f"{where}.correspondences[{i}].id"),
                source_id=source,
            )
        )
    return PerturbedMap(
        map=VectorMap(extent, elements),
        correspondences=correspondences,
        scenario=scenario,
        seed=_int(record["seed"], f"{where}.seed"),
        unperturbed=_bool(record["unperturbed"], f"{where}.unperturbed"),
    )


def load_variants(path: str | Path) -> VariantSet:
    obj = _parse_json(path)
    _check_header(obj, "variants", str(path))
    _fields(
        obj,
        str(path),
        (
            "format",
            "version",
            "extent",
            "scenario",
            "master_seed",
            "source_ids",
            "source_path",
            "variants",
        ),
    )
    extent = _extent_from(obj["extent"], f"{path}:extent")
    scenario = _scenario_from(obj["scenario"], f"{path}:scenario")
    source_ids = [
        _str(v, f"{path}:source_ids[{i}]") for i, v in enumerate(_arr(obj["source_ids"], f"{path}:source_ids"))
    ]
    source_path = obj["source_path"]
    if source_path is not None:
        source_path = _str(source_path, f"{path}:source_path")
    variants = [
        _variant_from(rec, extent, scenario, set(source_ids), f"{path}:variants[{i}]")
        for i, rec in enumerate(_arr(obj["variants"], f"{path}:variants"))
    ]
    return VariantSet(
        scenario=scenario,
        master_seed=_int(obj["master_seed"], f"{path}:master_seed"),
        source_ids=source_ids,
        variants=variants,
        source_path=source_path,
    )


# ---------------------------------------------------------------- query sets


def save_queries(queries: ExQuerySet, path: str | Path) -> None:
    count, points, width = queries.values.shape
    provenance = []
    for p in queries.provenance:
        if p.kind == "ex":
            provenance.append({"kind": "ex", "element_id": p.element_id})
        else:
            provenance.append({"kind": "learned", "pool_index": int(p.pool_index)})
    payload = {
        "format": "queries",
        "version": FORMAT_VERSION,
        "count": int(count),
        "points": int(points),
        "width": int(width),
        "n_ex": int(queries.n_ex),
        "provenance": provenance,
        "values": [float(v) for v in queries.values.reshape(-1)],
    }
    _atomic_write_text(path, _dump_json(payload))


def load_queries(path: str | Path) -> ExQuerySet:
    obj = _parse_json(path)
    _check_header(obj, "queries", str(path))
    _fields(
        obj,
        str(path),
        ("format", "version", "count", "points", "width", "n_ex", "provenance", "values"),
    )
    count = _int(obj["count"], f"{path}:count")
    points = _int(obj["points"], f"{path}:points")
    width = _int(obj["width"], f"{path}:width")
    n_ex = _int(obj["n_ex"], f"{path}:n_ex")
    provenance = []
    for i, rec in enumerate(_arr(obj["provenance"], f"{path}:provenance")):
        where = f"{path}:provenance[{i}]"
        rec = _obj(rec, where)
        kind = _str(rec.get("kind"), f"{where}.kind") if "kind" in rec else None
        if kind == "ex":
            _fields(rec, where, ("kind", "element_id"))
            provenance.append(
                QueryProvenance(kind="ex", element_id=_str(rec["element_id"], f"{where}.element_id"))
            )
        elif kind == "learned":
            _fields(rec, where, ("kind", "pool_index"))
            provenance.append(
                QueryProvenance(kind="learned", pool_index=_int(rec["pool_index"], f"{where}.pool_index"))
            )
        else:
            raise FormatSyntaxError(f"{where}.kind: expected 'ex' or 'learned', got {kind!r}")
    flat = _arr(obj["values"], f"{path}:values")
    if len(flat) != count * points * width:
        raise FormatSyntaxError(
            f"{path}:values: expected {count * points * width} numbers, got {len(flat)}"
        )
    values = np.empty(count * points * width, dtype=np.float64)
    for i, v in enumerate(flat):
        values[i] = _num(v, f"{path}:values[{i}]")
    if not np.all(np.isfinite(values)):
        raise NonFiniteCoordinateError(f"{path}:values: non-finite entry")
    return ExQuerySet(
        values=values.reshape(count, points, width), n_ex=n_ex, provenance=provenance
    )


# ------------------------------------------------------------- report files


def _ap_payload(report: ApReport) -> dict:
    return {
        "thresholds": [float(t) for t in report.thresholds],
        "class_ap": {
            tag: {_fkey(t): float(report.class_ap[tag][t]) for t in report.thresholds}
            for tag in _CLASS_ORDER
        },
        "class_mean_ap": {tag: float(report.class_mean_ap[tag]) for tag in _CLASS_ORDER},
        "map": float(report.map_value),
        "counts": {
            tag: {_fkey(t): list(report.counts[tag][t]) for t in report.thresholds}
            for tag in _CLASS_ORDER
        },
    }


_AP_FIELDS = ("thresholds", "class_ap", "class_mean_ap", "map", "counts")


def _ap_from(record: dict, where: str) -> ApReport:
    thresholds = tuple(
        _finite(_num(v, f"{where}.thresholds[{i}]"), f"{where}.thresholds[{i}]")
        for i, v in enumerate(_arr(record["thresholds"], f"{where}.thresholds"))
    )
    class_ap: dict[str, dict[float, float]] = {}
    counts: dict[str, dict[float, tuple[int, int, int]]] = {}
    ap_table = _obj(record["class_ap"], f"{where}.class_ap")
    count_table = _obj(record["counts"], f"{where}.counts")
    _fields(ap_table, f"{where}.class_ap", tuple(_CLASS_ORDER))
    _fields(count_table, f"{where}.counts", tuple(_CLASS_ORDER))
    for tag in _CLASS_ORDER:
        per_t = _obj(ap_table[tag], f"{where}.class_ap.{tag}")
        _fields(per_t, f"{where}.class_ap.{tag}", tuple(_fkey(t) for t in thresholds))
        class_ap[tag] = {
            t: _num(per_t[_fkey(t)], f"{where}.class_ap.{tag}.{_fkey(t)}") for t in thresholds
        }
        per_c = _obj(count_table[tag], f"{where}.counts.{tag}")
        _fields(per_c, f"{where}.counts.{tag}", tuple(_fkey(t) for t in thresholds))
        counts[tag] = {}
        for t in thresholds:
            triple = _arr(per_c[_fkey(t)], f"{where}.counts.{tag}.{_fkey(t)}")
            if len(triple) != 3:
                raise FormatSyntaxError(f"{where}.counts.{tag}.{_fkey(t)}: expected [tp, fp, fn]")
            counts[tag][t] = tuple(
                _int(v, f"{where}.counts.{tag}.{_fkey(t)}[{k}]") for k, v in enumerate(triple)
            )
    mean_table = _obj(record["class_mean_ap"], f"{where}.class_mean_ap")
    _fields(mean_table, f"{where}.class_mean_ap", tuple(_CLASS_ORDER))
    class_mean = {tag: _num(mean_table[tag], f"{where}.class_mean_ap.{tag}") for tag in _CLASS_ORDER}
    return ApReport(
        thresholds=thresholds,
        class_ap=class_ap,
        class_mean_ap=class_mean,
        map_value=_num(record["map"], f"{where}.map"),
        counts=counts,
    )


def _estimator_record(spec: MockEstimatorSpec) -> dict:
    return {"mode": spec.mode.value, "sigma_pred": float(spec.sigma_pred)}


def _estimator_from(record, where: str) -> MockEstimatorSpec:
    record = _obj(record, where)
    _fields(record, where, ("mode", "sigma_pred"))
    try:
        mode = EstimatorMode.from_token(_str(record["mode"], f"{where}.mode"))
    except ValueError as exc:
        raise FormatSyntaxError(f"{where}.mode: {exc}") from exc
    return MockEstimatorSpec(mode, _num(record["sigma_pred"], f"{where}.sigma_pred"))


_SAMPLE_FIELDS = (
    "seed",
    "sample_index",
    "n_gt",
    "n_ex",
    "n_pinned",
    "hungarian_rows",
    "hungarian_cols",
    "unperturbed",
    "substituted",
)


def save_report(report: ApReport | PipelineReport, path: str | Path) -> None:
    """Write an evaluation or pipeline report; wall-clock time is not stored."""
    if isinstance(report, ApReport):
        payload = {"format": "report", "version": FORMAT_VERSION, "kind": "evaluation"}
        payload.update(_ap_payload(report))
    else:
        payload = {
            "format": "report",
            "version": FORMAT_VERSION,
            "kind": "pipeline",
            "scenario": _scenario_record(report.scenario),
            "estimator": _estimator_record(report.estimator),
            "seeds": [int(s) for s in report.seeds],
            "corpus_size": int(report.corpus_size),
            "substitute": report.substitute,
            "tau": float(report.tau),
            "pin_threshold": float(report.pin_threshold),
            "per_seed": [_ap_payload(r) for r in report.per_seed],
            "aggregate": {
                "n": int(report.aggregate.n),
                "mean": {k: float(v) for k, v in report.aggregate.mean.items()},
                "std": {k: float(v) for k, v in report.aggregate.std.items()},
            },
            "samples": [
                {
                    "seed": int(s.seed),
                    "sample_index": int(s.sample_index),
                    "n_gt": int(s.n_gt),
                    "n_ex": int(s.n_ex),
                    "n_pinned": int(s.n_pinned),
                    "hungarian_rows": int(s.hungarian_shape[0]),
                    "hungarian_cols": int(s.hungarian_shape[1]),
                    "unperturbed": s.unperturbed,
                    "substituted": s.substituted,
                }
                for s in report.samples
            ],
            "pin_rate": float(report.pin_rate),
            "substitution_count": int(report.substitution_count),
            "unperturbed_count": int(report.unperturbed_count),
        }
    _atomic_write_text(path, _dump_json(payload))


def load_report(path: str | Path) -> ApReport | PipelineReport:
    obj = _parse_json(path)
    _check_header(obj, "report", str(path))
    kind = obj.get("kind")
    if kind == "evaluation":
        _fields(obj, str(path), ("format", "version", "kind") + _AP_FIELDS)
        return _ap_from(obj, str(path))
    if kind != "pipeline":
        raise SchemaVersionError(f"{path}: unknown report kind {kind!r}")
    _fields(
        obj,
        str(path),
        (
            "format",
            "version",
            "kind",
            "scenario",
            "estimator",
            "seeds",
            "corpus_size",
            "substitute",
            "tau",
            "pin_threshold",
            "per_seed",
            "aggregate",
            "samples",
            "pin_rate",
            "substitution_count",
            "unperturbed_count",
        ),
    )
    per_seed = []
    for i, rec in enumerate(_arr(obj["per_seed"], f"{path}:per_seed")):
        rec = _obj(rec, f"{path}:per_seed[{i}]")
        _fields(rec, f"{path}:per_seed[{i}]", _AP_FIELDS)
        per_seed.append(_ap_from(rec, f"{path}:per_seed[{i}]"))
    agg = _obj(obj["aggregate"], f"{path}:aggregate")
    _fields(agg, f"{path}:aggregate", ("n", "mean", "std"))
    aggregate = AggregateReport(
        n=_int(agg["n"], f"{path}:aggregate.n"),
        mean={
            k: _num(v, f"{path}:aggregate.mean.{k}")
            for k, v in _obj(agg["mean"], f"{path}:aggregate.mean").items()
        },
        std={
            k: _num(v, f"{path}:aggregate.std.{k}")
            for k, v in _obj(agg["std"], f"{path}:aggregate.std").items()
        },
    )
    samples = []
    for i, rec in enumerate(_arr(obj["samples"], f"{path}:samples")):
        where = f"{path}:samples[{i}]"
        rec = _obj(rec, where)
        _fields(rec, where, _SAMPLE_FIELDS)
        samples.append(
            SampleStats(
                seed=_int(rec["seed"], f"{where}.seed"),
                sample_index=_int(rec["sample_index"], f"{where}.sample_index"),
                n_gt=_int(rec["n_gt"], f"{where}.n_gt"),
                n_ex=_int(rec["n_ex"], f"{where}.n_ex"),
                n_pinned=_int(rec["n_pinned"], f"{where}.n_pinned"),
                hungarian_shape=(
                    _int(rec["hungarian_rows"], f"{where}.hungarian_rows"),
                    _int(rec["hungarian_cols"], f"{where}.hungarian_cols"),
                ),
                unperturbed=_bool(rec["unperturbed"], f"{where}.unperturbed"),
                substituted=_bool(rec["substituted"], f"{where}.substituted"),
            )
        )
    return PipelineReport(
        scenario=_scenario_from(obj["scenario"], f"{path}:scenario"),
        estimator=_estimator_from(obj["estimator"], f"{path}:estimator"),
        seeds=tuple(_int(s, f"{path}:seeds[{i}]") for i, s in enumerate(_arr(obj["seeds"], f"{path}:seeds"))),
        corpus_size=_int(obj["corpus_size"], f"{path}:corpus_size"),
        substitute=_bool(obj["substitute"], f"{path}:substitute"),
        tau=_num(obj["tau"], f"{path}:tau"),
        pin_threshold=_num(obj["pin_threshold"], f"{path}:pin_threshold"),
        per_seed=per_seed,
        aggregate=aggregate,
        samples=samples,
        pin_rate=_num(obj["pin_rate"], f"{path}:pin_rate"),
        substitution_count=_int(obj["substitution_count"], f"{path}:substitution_count"),
        unperturbed_count=_int(obj["unperturbed_count"], f"{path}:unperturbed_count"),
    )


# ------------------------------------------------------------- assignments


_ASSIGNMENT_HEADER = ["slot", "gt_id", "pinned", "cost"]
_ASSIGNMENT_MAGIC = re.compile(r"^# assignment/(\d+) rows=(\d+) cols=(\d+)$")


def save_assignment(assignment: Assignment, path: str | Path) -> None:
    for entry in assignment.entries:
        if entry.gt_id == BACKGROUND_TOKEN:
            raise FormatError(
                f"ground-truth id {BACKGROUND_TOKEN!r} collides with the background token"
            )
    buffer = io.StringIO()
    rows, cols = assignment.hungarian_shape
    buffer.write(f"# assignment/{FORMAT_VERSION} rows={rows} cols={cols}\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(_ASSIGNMENT_HEADER)
    for entry in assignment.entries:
        writer.writerow(
            [
                entry.slot,
                BACKGROUND_TOKEN if entry.gt_id is None else entry.gt_id,
                "true" if entry.pinned else "false",
                repr(float(entry.cost)),
            ]
        )
    _atomic_write_text(path, buffer.getvalue())


def load_assignment(path: str | Path) -> Assignment:
    lines = Path(path).read_text().splitlines()
    if not lines:
        raise FormatSyntaxError(f"{path}: empty file")
    match = _ASSIGNMENT_MAGIC.match(lines[0])
    if match is None:
        if lines[0].startswith("# assignment/"):
            raise SchemaVersionError(f"{path}: malformed assignment header {lines[0]!r}")
        raise FormatSyntaxError(f"{path}: missing assignment header")
    if int(match.group(1)) != FORMAT_VERSION:
        raise SchemaVersionError(
            f"{path}: unsupported assignment version {match.group(1)}, expected {FORMAT_VERSION}"
        )
    shape = (int(match.group(2)), int(match.group(3)))
    rows = list(csv.reader(lines[1:]))
    if not rows or rows[0] != _ASSIGNMENT_HEADER:
        raise FormatSyntaxError(f"{path}: expected header row {','.join(_ASSIGNMENT_HEADER)!r}")
    entries = []
    seen_slots: set[int] = set()
    seen_gts: set[str] = set()
    for i, row in enumerate(rows[1:]):
        where = f"{path}:row {i + 2}"
        if len(row) != 4:
            raise FormatSyntaxError(f"{where}: expected 4 cells, got {len(row)}")
        try:
            slot = int(row[0])
        except ValueError as exc:
            raise FormatSyntaxError(f"{where}: bad slot {row[0]!r}") from exc
        if slot in seen_slots:
            raise FormatSyntaxError(f"{where}: duplicate slot {slot}")
        seen_slots.add(slot)
        gt_id = None if row[1] == BACKGROUND_TOKEN else row[1]
        if gt_id is not None:
            if gt_id in seen_gts:
                raise FormatSyntaxError(f"{where}: ground truth {gt_id!r} assigned twice")
            seen_gts.add(gt_id)
        if row[2] not in ("true", "false"):
            raise FormatSyntaxError(f"{where}: bad pinned flag {row[2]!r}")
        try:
            cost = float(row[3])
        except ValueError as exc:
            raise FormatSyntaxError(f"{where}: bad cost {row[3]!r}") from exc
        _finite(cost, where)
        entries.append(
            AssignmentEntry(slot=slot, gt_id=gt_id, pinned=row[2] == "true", cost=cost)
        )
    return Assignment(entries=entries, hungarian_shape=shape)

"""Command-line surface: synth | perturb | encode | match | eval | pipeline | render | bench.

Exit codes: 0 success, 2 usage, 3 I/O, 4 data integrity. All randomness flows
from --seed flags, so any command run twice with the same flags produces
byte-identical outputs. Relative --out paths resolve against $PRIORMAP_OUT_DIR
when it is set.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .core import CANONICAL_POINTS
from .errors import PriormapError
from .formats import (
    VariantSet,
    _atomic_write_text,
    load_map,
    load_variants,
    save_assignment,
    save_map,
    save_queries,
    save_report,
    save_variants,
)
from .metrics import EVAL_THRESHOLDS, DetectionResult, evaluate
from .perturb import ScenarioKind, ScenarioSpec, generate_variants
from .queries import DEFAULT_MAX_ELEMENTS, DEFAULT_QUERY_WIDTH, assemble_query_set, learned_pool_stub
from .rng import derive_seed
from .simulate import (
    MockEstimatorSpec,
    SynthSpec,
    build_corpus,
    padded_match,
    parse_estimator,
    run_pipeline,
    synth_map,
)

OUT_DIR_ENV = "PRIORMAP_OUT_DIR"

log = logging.getLogger(__name__)


class UsageError(Exception):
    """Bad flag combination or value; maps to exit code 2."""


def _resolve_out(raw: str) -> Path:
    path = Path(raw)
    base = os.environ.get(OUT_DIR_ENV)
    if base and not path.is_absolute():
        path = Path(base) / path
    if path.parent != Path("."):
        path.parent.mkdir(parents=True, exist_ok=True)
    return path


def _parse_seed_list(raw: str) -> list[int]:
    try:
        seeds = [int(tok) for tok in raw.split(",") if tok.strip() != ""]
    except ValueError as exc:
        raise UsageError(f"bad seed list {raw!r}: {exc}") from exc
    if not seeds:
        raise UsageError(f"seed list {raw!r} is empty")
    return seeds


def _parse_int_list(raw: str, flag: str) -> list[int]:
    try:
        values = [int(tok) for tok in raw.split(",") if tok.strip() != ""]
    except ValueError as exc:
        raise UsageError(f"bad {flag} list {raw!r}: {exc}") from exc
    if not values:
        raise UsageError(f"{flag} list {raw!r} is empty")
    return values


def _parse_float_list(raw: str, flag: str) -> list[float]:
    try:
        values = [float(tok) for tok in raw.split(",") if tok.strip() != ""]
    except ValueError as exc:
        raise UsageError(f"bad {flag} list {raw!r}: {exc}") from exc
    if not values:
        raise UsageError(f"{flag} list {raw!r} is empty")
    return values


_SCENARIO_PARAM_TYPES = {
    f.name: f.type for f in dataclasses.fields(ScenarioSpec) if f.name != "kind"
}


def _build_scenario(token: str, params: list[str]) -> ScenarioSpec:
    try:
        kind = ScenarioKind.from_token(token)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    overrides: dict = {}
    for item in params or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise UsageError(f"bad --param {item!r}, expected key=value")
        if key not in _SCENARIO_PARAM_TYPES:
            raise UsageError(
                f"unknown scenario parameter {key!r}; known: {sorted(_SCENARIO_PARAM_TYPES)}"
            )
        if key == "exact_half":
            if value not in ("true", "false"):
                raise UsageError(f"bad value {value!r} for {key}, expected true|false")
            overrides[key] = value == "true"
        else:
            try:
                overrides[key] = float(value)
            except ValueError as exc:
                raise UsageError(f"bad value {value!r} for {key}") from exc
    try:
        return ScenarioSpec(kind=kind, **overrides)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _parse_estimator_flag(token: str) -> MockEstimatorSpec:
    try:
        return parse_estimator(token)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


# ------------------------------------------------------------------ commands


def cmd_synth(args) -> int:
    out = _resolve_out(args.out)
    if args.count < 1:
        raise UsageError(f"--count must be positive, got {args.count}")
    if args.count == 1:
        save_map(synth_map(SynthSpec(), args.seed), out)
        print(f"wrote 1 map to {out}")
        return 0
    out.mkdir(parents=True, exist_ok=True)
    for k in range(args.count):
        save_map(synth_map(SynthSpec(), derive_seed(args.seed, k)), out / f"map_{k:03d}.json")
    print(f"wrote {args.count} maps to {out}")
    return 0


def cmd_perturb(args) -> int:
    scenario = _build_scenario(args.scenario, args.param)
    source = load_map(args.map)
    count = args.variants
    if count < 1:
        raise UsageError(f"--variants must be positive, got {count}")
    if scenario.kind is ScenarioKind.S1 and count > 1:
        log.warning("scenario s1 is deterministic; writing 1 variant instead of %d", count)
        count = 1
    variants = generate_variants(source, scenario, count=count, seed=args.seed)
    out = _resolve_out(args.out)
    save_variants(
        VariantSet(
            scenario=scenario,
            master_seed=args.seed,
            source_ids=source.element_ids(),
            variants=variants,
            source_path=str(args.map),
        ),
        out,
    )
    print(f"wrote {len(variants)} variant(s) to {out}")
    return 0


def cmd_encode(args) -> int:
    source = load_map(args.map)
    pool = learned_pool_stub(
        n_groups=args.max_elements,
        points_per_group=CANONICAL_POINTS,
        width=args.width,
        seed=args.pool_seed,
    )
    queries = assemble_query_set(
        source.elements, pool, max_elements=args.max_elements, width=args.width
    )
    out = _resolve_out(args.out)
    save_queries(queries, out)
    print(f"wrote {queries.values.shape[0]}x{queries.values.shape[1]}x{queries.values.shape[2]} query set ({queries.n_ex} from elements) to {out}")
    return 0


def cmd_match(args) -> int:
    gt = load_map(args.map)
    variant_set = load_variants(args.variants)
    if not 0 <= args.index < len(variant_set.variants):
        raise UsageError(
            f"--index {args.index} out of range for {len(variant_set.variants)} variant(s)"
        )
    variant = variant_set.variants[args.index]
    _, assignment, _ = padded_match(variant, gt, args.threshold)
    out = _resolve_out(args.out)
    save_assignment(assignment, out)
    pinned = sum(1 for e in assignment.entries if e.pinned)
    print(
        f"wrote assignment ({pinned} pinned, hungarian {assignment.hungarian_shape[0]}x"
        f"{assignment.hungarian_shape[1]}) to {out}"
    )
    return 0


def cmd_eval(args) -> int:
    gt = load_map(args.gt)
    pred_map = load_map(args.pred)
    preds = DetectionResult(pred_map.elements, np.ones(len(pred_map.elements)))
    report = evaluate(
        preds, gt, thresholds=tuple(args.thresholds), eval_points=args.eval_points
    )
    out = _resolve_out(args.out)
    save_report(report, out)
    for key, value in report.flatten().items():
        print(f"{key}\t{value!r}")
    print(f"wrote report to {out}")
    return 0


def cmd_pipeline(args) -> int:
    scenario = _build_scenario(args.scenario, args.param)
    estimator = _parse_estimator_flag(args.estimator)
    seeds = _parse_seed_list(args.seeds)
    if args.corpus_size < 1:
        raise UsageError(f"--corpus-size must be positive, got {args.corpus_size}")
    corpus = build_corpus(args.corpus_size, seed=args.corpus_seed)
    report = run_pipeline(
        corpus,
        scenario,
        estimator,
        seeds,
        substitute=args.substitute,
        tau=args.tau,
        pin_threshold=args.threshold,
    )
    out = _resolve_out(args.out)
    save_report(report, out)
    csv_path = out.with_suffix(".csv")
    lines = ["seed,metric,value"]
    for seed, seed_report in zip(report.seeds, report.per_seed):
        for key, value in seed_report.flatten().items():
            lines.append(f"{seed},{key},{value!r}")
    for key in report.aggregate.mean:
        lines.append(f"aggregate_mean,{key},{report.aggregate.mean[key]!r}")
        lines.append(f"aggregate_std,{key},{report.aggregate.std[key]!r}")
    _atomic_write_text(csv_path, "\n".join(lines) + "\n")
    figure_path = out.with_suffix(".png")
    from .render import render_report_figure

    render_report_figure(report, figure_path)
    mean = report.aggregate.mean["map"]
    std = report.aggregate.std["map"]
    print(f"mAP {mean:.4f} +/- {std:.4f} over {len(report.seeds)} seed(s)")
    print(f"pin rate {report.pin_rate:.4f}, substitutions {report.substitution_count}, "
          f"unperturbed {report.unperturbed_count}")
    print(f"wrote report to {out}, {csv_path}, {figure_path}")
    return 0


def cmd_render(args) -> int:
    from .render import render_map, render_variant

    out = _resolve_out(args.out)
    if args.map is not None:
        render_map(load_map(args.map), out, annotate=args.annotate, title=Path(args.map).name)
    elif args.pred is not None:
        render_map(
            load_map(args.pred), out, annotate=args.annotate, title=f"pred {Path(args.pred).name}"
        )
    else:
        variant_set = load_variants(args.variants)
        if not 0 <= args.index < len(variant_set.variants):
            raise UsageError(
                f"--index {args.index} out of range for {len(variant_set.variants)} variant(s)"
            )
        render_variant(variant_set.variants[args.index], out, annotate=args.annotate)
    print(f"wrote figure to {out}")
    return 0


def cmd_bench(args) -> int:
    from .bench import benchmark_matching, fit_loglog_slope, save_bench_csv
    from .render import render_bench_figure

    sizes = _parse_int_list(args.sizes, "--sizes")
    fractions = _parse_float_list(args.pin_fracs, "--pin-fracs")
    try:
        rows = benchmark_matching(
            tuple(sizes), tuple(fractions), repeats=args.repeats, seed=args.seed
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    out = _resolve_out(args.out)
    save_bench_csv(rows, out)
    render_bench_figure(rows, out.with_suffix(".png"))
    print("size pin_fraction hungarian_s match_s speedup")
    for row in rows:
        print(
            f"{row.size:5d} {row.pin_fraction:12.2f} {row.hungarian_seconds:11.6f} "
            f"{row.match_seconds:8.6f} {row.speedup:7.2f}"
        )
    if 0.0 in fractions and len(sizes) >= 2:
        print(f"log-log slope at pin 0: {fit_loglog_slope(rows):.3f}")
    print(f"wrote table to {out}, figure to {out.with_suffix('.png')}")
    return 0


# -------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="priormap",
        description="Vector-map refresh toolkit: synthesize, perturb, encode, match, evaluate.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    fmt = argparse.ArgumentDefaultsHelpFormatter

    p = sub.add_parser("synth", help="generate synthetic maps", formatter_class=fmt)
    p.add_argument("--seed", type=int, default=0, help="corpus seed")
    p.add_argument("--count", type=int, default=1, help="number of maps")
    p.add_argument("--out", required=True, help="output map file (or directory when count > 1)")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("perturb", help="write a perturbed variant set", formatter_class=fmt)
    p.add_argument("--map", required=True, help="source map file")
    p.add_argument(
        "--scenario",
        required=True,
        choices=[k.value for k in ScenarioKind],
        help="perturbation scenario",
    )
    p.add_argument("--variants", type=int, default=10, help="variant count")
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument(
        "--param",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override one scenario parameter (repeatable)",
    )
    p.add_argument("--out", required=True, help="output variant-set file")
    p.set_defaults(func=cmd_perturb)

    p = sub.add_parser("encode", help="encode a map into a query set", formatter_class=fmt)
    p.add_argument("--map", required=True, help="map file to encode")
    p.add_argument("--max-elements", type=int, default=DEFAULT_MAX_ELEMENTS, help="query slots")
    p.add_argument("--width", type=int, default=DEFAULT_QUERY_WIDTH, help="query vector width")
    p.add_argument("--pool-seed", type=int, default=0, help="learned-pool stub seed")
    p.add_argument("--out", required=True, help="output query-set file")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("match", help="pre-attribute and solve one variant", formatter_class=fmt)
    p.add_argument("--map", required=True, help="ground-truth map file")
    p.add_argument("--variants", required=True, help="variant-set file")
    p.add_argument("--index", type=int, default=0, help="variant index")
    p.add_argument("--threshold", type=float, default=1.0, help="pin threshold in meters")
    p.add_argument("--out", required=True, help="output assignment table")
    p.set_defaults(func=cmd_match)

    p = sub.add_parser("eval", help="evaluate predictions against ground truth", formatter_class=fmt)
    p.add_argument("--pred", required=True, help="prediction map file (confidence 1.0)")
    p.add_argument("--gt", required=True, help="ground-truth map file")
    p.add_argument(
        "--thresholds",
        type=float,
        nargs="+",
        default=list(EVAL_THRESHOLDS),
        help="chamfer thresholds in meters",
    )
    p.add_argument("--eval-points", type=int, default=100, help="evaluation upsampling points")
    p.add_argument("--out", required=True, help="output report file")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("pipeline", help="run the end-to-end refresh pipeline", formatter_class=fmt)
    p.add_argument("--corpus-size", type=int, default=50, help="synthetic corpus size")
    p.add_argument("--corpus-seed", type=int, default=0, help="corpus seed")
    p.add_argument(
        "--scenario",
        required=True,
        choices=[k.value for k in ScenarioKind],
        help="perturbation scenario",
    )
    p.add_argument("--estimator", default="copy_ex", help="estimator mode[:sigma]")
    p.add_argument("--seeds", default="0,1,2", help="comma-separated run seeds")
    p.add_argument("--substitute", action="store_true", help="early-exit substitution policy")
    p.add_argument("--tau", type=float, default=0.5, help="substitution change threshold")
    p.add_argument("--threshold", type=float, default=1.0, help="pin threshold in meters")
    p.add_argument(
        "--param",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override one scenario parameter (repeatable)",
    )
    p.add_argument("--out", required=True, help="output report file (.csv/.png written alongside)")
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("render", help="draw a map, variant, or prediction", formatter_class=fmt)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--map", help="map file")
    group.add_argument("--variants", help="variant-set file")
    group.add_argument("--pred", help="prediction map file")
    p.add_argument("--index", type=int, default=0, help="variant index")
    p.add_argument("--annotate", action="store_true", help="label elements with ids/sources")
    p.add_argument("--out", required=True, help="output image (.svg or .png)")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("bench", help="time the assignment stage", formatter_class=fmt)
    p.add_argument("--sizes", default="10,25,50,100,200", help="comma-separated problem sizes")
    p.add_argument("--pin-fracs", default="0.0,0.25,0.5,0.75", help="comma-separated pin fractions")
    p.add_argument("--repeats", type=int, default=5, help="timing repeats (median reported)")
    p.add_argument("--seed", type=int, default=0, help="instance seed")
    p.add_argument("--out", required=True, help="output CSV (figure written alongside)")
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO, format="%(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except PriormapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())

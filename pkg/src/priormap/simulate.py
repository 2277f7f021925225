"""Synthetic corpus, mock estimators, and the end-to-end refresh pipeline.

The estimator stand-ins span the behavioral range of interest: COPY_EX returns
the (possibly stale) existing map untouched, NOISY_GT models a map-blind
sensor-only estimator, and ORACLE_BLEND returns exact geometry for elements
the pre-attribution step pinned and noisy geometry for the rest.

Per-sample randomness derives from (run seed, sample index) so results do not
depend on execution order.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .core import (
    CANONICAL_POINTS,
    EVAL_POINTS,
    ElementClass,
    MapElement,
    PatchExtent,
    VectorMap,
    resample_polyline,
)
from .matching import (
    PIN_THRESHOLD,
    Assignment,
    PartialAssignment,
    match_with_preattribution,
    pre_attribute,
)
from .metrics import (
    EVAL_THRESHOLDS,
    AggregateReport,
    ApReport,
    DetectionResult,
    aggregate_runs,
    evaluate,
    mean_reports,
)
from .perturb import PerturbedMap, ScenarioSpec, generate_variants
from .rng import derive_seed, make_rng

log = logging.getLogger(__name__)

LANE_WIDTH = 3.25

CONF_COPY_EX = 0.9
CONF_NOISY = 0.8
CONF_SUBSTITUTED = 1.0


@dataclass(frozen=True)
class SynthSpec:
    """Parameters of the synthetic patch generator."""

    extent: PatchExtent = PatchExtent()
    min_roads: int = 1
    max_roads: int = 2
    min_lanes: int = 1
    max_lanes: int = 4
    max_crossings: int = 4
    median_prob: float = 0.3
    edge_margin: float = 0.5
    wiggle_amp: float = 0.3

    def __post_init__(self) -> None:
        if not (1 <= self.min_roads <= self.max_roads <= 2):
            raise ValueError("road count range must sit within [1, 2]")
        if not (1 <= self.min_lanes <= self.max_lanes <= 4):
            raise ValueError("lane count range must sit within [1, 4]")
        if not 0 <= self.max_crossings <= 4:
            raise ValueError("crossing count must sit within [0, 4]")
        if not 0.0 <= self.median_prob <= 1.0:
            raise ValueError("median probability must sit within [0, 1]")
        if self.edge_margin < 0 or self.wiggle_amp < 0:
            raise ValueError("margins must be non-negative")


def _as_rng(rng: int | np.random.Generator) -> np.random.Generator:
    if isinstance(rng, (int, np.integer)):
        return make_rng(int(rng))
    return rng


def _vertical_line(x_offsets: np.ndarray, ys: np.ndarray) -> np.ndarray:
    return resample_polyline(np.column_stack([x_offsets, ys]))


def synth_map(spec: SynthSpec = SynthSpec(), rng: int | np.random.Generator = 0) -> VectorMap:
    """One plausible patch: road corridors with boundaries, dividers, crossings.

    Every element is canonical and strictly inside the patch, so clipping the
    result is the identity. Deterministic for a given seed.
    """
    rng = _as_rng(rng)
    extent = spec.extent
    margin = spec.edge_margin + spec.wiggle_amp
    x_lo, x_hi = extent.x_min + margin, extent.x_max - margin
    y_lo, y_hi = extent.y_min + spec.edge_margin, extent.y_max - spec.edge_margin
    ys = np.linspace(y_lo, y_hi, 12)
    y_span = extent.y_max - extent.y_min

    n_roads = int(rng.integers(spec.min_roads, spec.max_roads + 1))
    slot_edges = np.linspace(x_lo, x_hi, n_roads + 1)

    boundaries: list[np.ndarray] = []
    dividers: list[np.ndarray] = []
    roads: list[tuple[float, float]] = []  # (center x, half width) per road
    for r in range(n_roads):
        lo, hi = slot_edges[r], slot_edges[r + 1]
        lanes = int(rng.integers(spec.min_lanes, spec.max_lanes + 1))
        half = min(lanes * LANE_WIDTH / 2.0, (hi - lo) / 2.0 - 0.1)
        cx = float(rng.uniform(lo + half, hi - half))
        amp = float(rng.uniform(0.0, spec.wiggle_amp))
        phase = float(rng.uniform(0.0, 2.0 * math.pi))
        off = amp * np.sin(2.0 * math.pi * ys / y_span + phase)
        boundaries.append(_vertical_line(cx - half + off, ys))
        boundaries.append(_vertical_line(cx + half + off, ys))
        for i in range(1, lanes):
            dividers.append(_vertical_line(cx - half + i * (2.0 * half / lanes) + off, ys))
        roads.append((cx, half))
        if r == 0 and lanes >= 2 and rng.random() < spec.median_prob:
            # median barrier down the road center; drop any divider sitting there
            if lanes % 2 == 0:
                dividers.pop(len(dividers) - lanes // 2)
            boundaries.append(_vertical_line(cx + off, ys))

    crossings: list[np.ndarray] = []
    n_cross = int(rng.integers(0, spec.max_crossings + 1))
    if n_cross:
        band_edges = np.linspace(y_lo + 2.5, y_hi - 2.5, n_cross + 1)
        for k in range(n_cross):
            cx, half = roads[int(rng.integers(0, n_roads))]
            y_c = float(rng.uniform(band_edges[k], band_edges[k + 1]))
            h = float(rng.uniform(3.0, 4.5))
            x0 = max(cx - half - 0.3, extent.x_min + 0.05)
            x1 = min(cx + half + 0.3, extent.x_max - 0.05)
            ring = np.array(
                [
                    [x0, y_c - h / 2],
                    [x1, y_c - h / 2],
                    [x1, y_c + h / 2],
                    [x0, y_c + h / 2],
                    [x0, y_c - h / 2],
                ]
            )
            crossings.append(resample_polyline(ring))

    elements = (
        [MapElement(f"b{i}", ElementClass.BOUNDARY, p) for i, p in enumerate(boundaries)]
        + [MapElement(f"d{i}", ElementClass.DIVIDER, p) for i, p in enumerate(dividers)]
        + [MapElement(f"p{i}", ElementClass.PED_CROSSING, p) for i, p in enumerate(crossings)]
    )
    return VectorMap(extent, elements)


def build_corpus(size: int, seed: int = 0, spec: SynthSpec = SynthSpec()) -> list[VectorMap]:
    """Independent synthetic maps with per-sample seeds derived from one seed."""
    if size <= 0:
        raise ValueError("corpus size must be positive")
    return [synth_map(spec, derive_seed(seed, k)) for k in range(size)]


class EstimatorMode(Enum):
    COPY_EX = "copy_ex"
    NOISY_GT = "noisy_gt"
    ORACLE_BLEND = "oracle_blend"

    @classmethod
    def from_token(cls, token: str) -> "EstimatorMode":
        for mode in cls:
            if mode.value == token:
                return mode
        raise ValueError(f"unknown estimator mode {token!r}")


@dataclass(frozen=True)
class MockEstimatorSpec:
    """Which stand-in estimator to run and its noise level."""

    mode: EstimatorMode
    sigma_pred: float = 0.5

    def __post_init__(self) -> None:
        if not (np.isfinite(self.sigma_pred) and self.sigma_pred >= 0):
            raise ValueError("sigma_pred must be finite and >= 0")

    @property
    def token(self) -> str:
        return f"{self.mode.value}:{self.sigma_pred!r}"


def parse_estimator(token: str) -> MockEstimatorSpec:
    """Parse 'mode' or 'mode:sigma', e.g. 'noisy_gt:0.25'."""
    name, sep, sigma = token.partition(":")
    mode = EstimatorMode.from_token(name)
    if not sep:
        return MockEstimatorSpec(mode)
    try:
        return MockEstimatorSpec(mode, float(sigma))
    except ValueError as exc:
        raise ValueError(f"bad estimator sigma {sigma!r}") from exc


def _noisy(element: MapElement, sigma: float, rng: np.random.Generator) -> MapElement:
    noise = rng.normal(0.0, sigma, size=element.points.shape) if sigma > 0 else 0.0
    return element.with_points(element.points + noise)


def mock_estimate(
    gt: VectorMap,
    ex: PerturbedMap,
    spec: MockEstimatorSpec,
    rng: np.random.Generator,
    *,
    pin_threshold: float = PIN_THRESHOLD,
) -> DetectionResult:
    """Run the configured stand-in estimator.

    COPY_EX draws nothing from rng; the noisy modes draw per element in map
    order, and ORACLE_BLEND draws only for the elements it does not pin.
    """
    if spec.mode is EstimatorMode.COPY_EX:
        elements = list(ex.map.elements)
        return DetectionResult(elements, np.full(len(elements), CONF_COPY_EX))
    if spec.mode is EstimatorMode.NOISY_GT:
        elements = [_noisy(e, spec.sigma_pred, rng) for e in gt.elements]
        return DetectionResult(elements, np.full(len(elements), CONF_NOISY))
    partial = pre_attribute(ex, gt, threshold=pin_threshold)
    pinned_ids = {gt_id for _, gt_id in partial.pinned}
    elements = []
    confidences = []
    for element in gt.elements:
        if element.element_id in pinned_ids:
            elements.append(element.with_points(element.points.copy()))
            confidences.append(CONF_COPY_EX)
        else:
            elements.append(_noisy(element, spec.sigma_pred, rng))
            confidences.append(CONF_NOISY)
    return DetectionResult(elements, np.array(confidences))


def oracle_change_score(ex: PerturbedMap) -> float:
    """Perfect change detector: 0 on the untouched branch, 1 otherwise."""
    return 0.0 if ex.unperturbed else 1.0


def substitute_if_unchanged(
    pred: DetectionResult, ex: PerturbedMap, c: float, tau: float
) -> DetectionResult:
    """Early exit: below-threshold change score returns the existing map."""
    if not 0.0 <= tau <= 1.0:
        raise ValueError("tau must sit within [0, 1]")
    if not 0.0 <= c <= 1.0:
        raise ValueError("change score must sit within [0, 1]")
    if c >= tau:
        return pred
    elements = list(ex.map.elements)
    return DetectionResult(
        elements, np.full(len(elements), CONF_SUBSTITUTED), substituted=True
    )


def padded_match(
    ex: PerturbedMap, gt: VectorMap, threshold: float
) -> tuple[PartialAssignment, Assignment, list[MapElement]]:
    """Pre-attribute and solve, padding the prediction side when short.

    A real decoder has a fixed surplus of query slots; here the existing map
    may carry fewer elements than the ground truth, so degenerate far-away
    placeholder elements fill the gap and every ground truth keeps a slot.
    """
    preds = list(ex.map.elements)
    partial = pre_attribute(ex, gt, threshold=threshold)
    free_slots = list(partial.free_pred_slots)
    far = np.full((CANONICAL_POINTS, 2), 1.0e4)
    while len(preds) < len(gt.elements):
        slot = len(preds)
        preds.append(MapElement(f"pad-{slot}", ElementClass.DIVIDER, far))
        free_slots.append(slot)
    if len(free_slots) != len(partial.free_pred_slots):
        partial = PartialAssignment(
            pinned=list(partial.pinned),
            free_pred_slots=free_slots,
            free_gt_ids=list(partial.free_gt_ids),
        )
    return partial, match_with_preattribution(preds, gt, partial), preds


@dataclass(eq=True)
class SampleStats:
    """Matching bookkeeping for one (seed, sample) cell."""

    seed: int
    sample_index: int
    n_gt: int
    n_ex: int
    n_pinned: int
    hungarian_shape: tuple[int, int]
    unperturbed: bool
    substituted: bool


@dataclass(eq=True)
class PipelineReport:
    """Aggregated evaluation plus matching statistics for one pipeline run."""

    scenario: ScenarioSpec
    estimator: MockEstimatorSpec
    seeds: tuple[int, ...]
    corpus_size: int
    substitute: bool
    tau: float
    pin_threshold: float
    per_seed: list[ApReport]
    aggregate: AggregateReport
    samples: list[SampleStats]
    pin_rate: float
    substitution_count: int
    unperturbed_count: int
    wall_seconds: float = field(default=0.0, compare=False)


def run_pipeline(
    corpus: list[VectorMap],
    scenario: ScenarioSpec,
    estimator: MockEstimatorSpec,
    seeds: list[int],
    *,
    substitute: bool = False,
    tau: float = 0.5,
    pin_threshold: float = PIN_THRESHOLD,
    thresholds: tuple[float, ...] = EVAL_THRESHOLDS,
    eval_points: int = EVAL_POINTS,
) -> PipelineReport:
    """Perturb, estimate, match, and evaluate the corpus once per seed.

    Each (seed, sample) cell derives its own seed, so a cell's variant and
    estimator draws are independent of every other cell.
    """
    if not corpus:
        raise ValueError("corpus must be non-empty")
    if not seeds:
        raise ValueError("need at least one seed")
    started = time.perf_counter()
    per_seed: list[ApReport] = []
    samples: list[SampleStats] = []
    total_pins = 0
    total_gt = 0
    substitution_count = 0
    unperturbed_count = 0
    for seed in seeds:
        sample_reports: list[ApReport] = []
        for k, gt in enumerate(corpus):
            sample_seed = derive_seed(seed, k)
            variant = generate_variants(gt, scenario, count=1, seed=sample_seed)[0]
            partial, _, _ = padded_match(variant, gt, pin_threshold)
            est_rng = make_rng(derive_seed(sample_seed, 1))
            pred = mock_estimate(gt, variant, estimator, est_rng, pin_threshold=pin_threshold)
            if substitute:
                pred = substitute_if_unchanged(
                    pred, variant, oracle_change_score(variant), tau
                )
            sample_reports.append(
                evaluate(pred, gt, thresholds=thresholds, eval_points=eval_points)
            )
            samples.append(
                SampleStats(
                    seed=seed,
                    sample_index=k,
                    n_gt=len(gt.elements),
                    n_ex=len(variant.map.elements),
                    n_pinned=len(partial.pinned),
                    hungarian_shape=(len(partial.free_pred_slots), len(partial.free_gt_ids)),
                    unperturbed=variant.unperturbed,
                    substituted=pred.substituted,
                )
            )
            total_pins += len(partial.pinned)
            total_gt += len(gt.elements)
            substitution_count += int(pred.substituted)
            unperturbed_count += int(variant.unperturbed)
        per_seed.append(mean_reports(sample_reports))
        log.info("seed %d done: mAP %.4f over %d samples", seed, per_seed[-1].map_value, len(corpus))
    return PipelineReport(
        scenario=scenario,
        estimator=estimator,
        seeds=tuple(seeds),
        corpus_size=len(corpus),
        substitute=substitute,
        tau=tau,
        pin_threshold=pin_threshold,
        per_seed=per_seed,
        aggregate=aggregate_runs(per_seed),
        samples=samples,
        pin_rate=total_pins / total_gt,
        substitution_count=substitution_count,
        unperturbed_count=unperturbed_count,
        wall_seconds=time.perf_counter() - started,
    )

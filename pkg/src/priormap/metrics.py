"""Chamfer-distance average precision.

Predictions are matched to ground truths of the same class greedily in
descending confidence order; a prediction scores a true positive when its
symmetric Chamfer distance to the nearest still-unmatched ground truth stays
below the threshold. AP is the exact area under the interpolated monotone
precision envelope. The report averages each class over the standard
thresholds {0.5, 1.0, 1.5} m and the three classes into one mAP.

A class absent from both predictions and ground truth counts as perfectly
retrieved (AP 1); absent only from the ground truth counts as 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import EVAL_POINTS, ElementClass, MapElement, VectorMap, chamfer_distance, upsample_for_eval

EVAL_THRESHOLDS = (0.5, 1.0, 1.5)


@dataclass(eq=False)
class DetectionResult:
    """Predicted elements with per-element confidence scores."""

    elements: list[MapElement]
    confidences: np.ndarray
    substituted: bool = False

    def __post_init__(self) -> None:
        conf = np.asarray(self.confidences, dtype=np.float64)
        if conf.ndim != 1 or conf.shape[0] != len(self.elements):
            raise ValueError("need exactly one confidence per predicted element")
        if not np.all(np.isfinite(conf)):
            raise ValueError("confidences must be finite")
        if conf.size and (conf.min() < 0.0 or conf.max() > 1.0):
            raise ValueError("confidences must lie in [0, 1]")
        self.confidences = conf

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DetectionResult):
            return NotImplemented
        return (
            self.elements == other.elements
            and self.substituted == other.substituted
            and self.confidences.shape == other.confidences.shape
            and bool(np.all(self.confidences == other.confidences))
        )


@dataclass(eq=True)
class ApReport:
    """Per-class AP at each threshold, per-class means, mAP, and match counts."""

    thresholds: tuple[float, ...]
    class_ap: dict[str, dict[float, float]]
    class_mean_ap: dict[str, float]
    map_value: float
    counts: dict[str, dict[float, tuple[int, int, int]]]  # (tp, fp, fn)

    def flatten(self) -> dict[str, float]:
        """All numeric metrics as one flat ordered mapping."""
        flat: dict[str, float] = {}
        for tag, per_threshold in self.class_ap.items():
            for threshold, value in per_threshold.items():
                flat[f"ap/{tag}/{threshold!r}"] = float(value)
        for tag, value in self.class_mean_ap.items():
            flat[f"mean_ap/{tag}"] = float(value)
        flat["map"] = float(self.map_value)
        for tag, per_threshold in self.counts.items():
            for threshold, (tp, fp, fn) in per_threshold.items():
                flat[f"tp/{tag}/{threshold!r}"] = float(tp)
                flat[f"fp/{tag}/{threshold!r}"] = float(fp)
                flat[f"fn/{tag}/{threshold!r}"] = float(fn)
        return flat


def _upsample_all(elements: list[MapElement], eval_points: int) -> list[np.ndarray]:
    return [upsample_for_eval(e, eval_points) for e in elements]


def _chamfer_matrix(pred_polys: list[np.ndarray], gt_polys: list[np.ndarray]) -> np.ndarray:
    matrix = np.empty((len(pred_polys), len(gt_polys)), dtype=np.float64)
    for r, pred in enumerate(pred_polys):
        for c, gt in enumerate(gt_polys):
            matrix[r, c] = chamfer_distance(pred, gt)
    return matrix


def _greedy_tp_flags(matrix: np.ndarray, threshold: float) -> np.ndarray:
    """True-positive flags per prediction row, rows already in rank order.

    Each prediction takes the nearest still-unmatched ground truth; it is a
    true positive when that distance is strictly below the threshold.
    """
    n_preds, n_gt = matrix.shape
    flags = np.zeros(n_preds, dtype=bool)
    taken = np.zeros(n_gt, dtype=bool)
    for r in range(n_preds):
        distances = np.where(taken, np.inf, matrix[r])
        c = int(np.argmin(distances))
        if distances[c] < threshold:
            flags[r] = True
            taken[c] = True
    return flags


def _ap_area(tp_flags: np.ndarray, n_gt: int) -> float:
    """Exact area under the interpolated monotone precision envelope."""
    tp_cum = np.cumsum(tp_flags)
    fp_cum = np.cumsum(~tp_flags)
    recall = tp_cum / n_gt
    precision = tp_cum / (tp_cum + fp_cum)
    mrec = np.concatenate([[0.0], recall, [1.0]])
    mpre = np.concatenate([[0.0], precision, [0.0]])
    for i in range(mpre.size - 2, -1, -1):
        mpre[i] = max(mpre[i], mpre[i + 1])
    steps = mrec[1:] != mrec[:-1]
    return float(np.sum((mrec[1:][steps] - mrec[:-1][steps]) * mpre[1:][steps]))


def _rank_order(confidences: np.ndarray) -> np.ndarray:
    """Descending confidence, ties broken by original index for determinism."""
    return np.lexsort((np.arange(confidences.size), -confidences))


def _class_curve_inputs(
    preds: DetectionResult, gt: VectorMap, element_class: ElementClass, eval_points: int
) -> tuple[np.ndarray, int]:
    pred_idx = [i for i, e in enumerate(preds.elements) if e.element_class is element_class]
    gt_elements = [e for e in gt.elements if e.element_class is element_class]
    order = _rank_order(preds.confidences[pred_idx]) if pred_idx else np.empty(0, dtype=int)
    ranked = [preds.elements[pred_idx[k]] for k in order]
    if not ranked or not gt_elements:
        return np.empty((len(ranked), len(gt_elements))), len(gt_elements)
    matrix = _chamfer_matrix(
        _upsample_all(ranked, eval_points), _upsample_all(gt_elements, eval_points)
    )
    return matrix, len(gt_elements)


def ap_at_threshold(
    preds: DetectionResult,
    gt: VectorMap,
    element_class: ElementClass,
    threshold: float,
    *,
    eval_points: int = EVAL_POINTS,
) -> float:
    """AP of one class at one Chamfer threshold."""
    if threshold <= 0:
        raise ValueError(f"threshold must be > 0, got {threshold}")
    matrix, n_gt = _class_curve_inputs(preds, gt, element_class, eval_points)
    n_preds = matrix.shape[0]
    if n_gt == 0:
        return 1.0 if n_preds == 0 else 0.0
    if n_preds == 0:
        return 0.0
    return _ap_area(_greedy_tp_flags(matrix, threshold), n_gt)


def evaluate(
    preds: DetectionResult,
    gt: VectorMap,
    *,
    thresholds: tuple[float, ...] = EVAL_THRESHOLDS,
    eval_points: int = EVAL_POINTS,
) -> ApReport:
    """Full report: 3 classes x len(thresholds), per-class means, mAP, counts."""
    class_ap: dict[str, dict[float, float]] = {}
    class_mean: dict[str, float] = {}
    counts: dict[str, dict[float, tuple[int, int, int]]] = {}
    for element_class in ElementClass:
        tag = element_class.tag
        matrix, n_gt = _class_curve_inputs(preds, gt, element_class, eval_points)
        n_preds = matrix.shape[0]
        class_ap[tag] = {}
        counts[tag] = {}
        for threshold in thresholds:
            if n_gt == 0:
                ap = 1.0 if n_preds == 0 else 0.0
                tp = 0
            elif n_preds == 0:
                ap = 0.0
                tp = 0
            else:
                flags = _greedy_tp_flags(matrix, threshold)
                ap = _ap_area(flags, n_gt)
                tp = int(np.count_nonzero(flags))
            class_ap[tag][threshold] = ap
            counts[tag][threshold] = (tp, n_preds - tp, n_gt - tp)
        class_mean[tag] = float(np.mean([class_ap[tag][t] for t in thresholds]))
    map_value = float(np.mean([class_mean[c.tag] for c in ElementClass]))
    return ApReport(
        thresholds=tuple(thresholds),
        class_ap=class_ap,
        class_mean_ap=class_mean,
        map_value=map_value,
        counts=counts,
    )


@dataclass(eq=True)
class ApDelta:
    """Element-wise difference of two reports (enhanced minus base)."""

    class_ap: dict[str, dict[float, float]]
    class_mean_ap: dict[str, float]
    map_value: float


def improvement_delta(enhanced: ApReport, base: ApReport) -> ApDelta:
    if enhanced.thresholds != base.thresholds:
        raise ValueError("reports use different threshold sets")
    class_ap = {
        tag: {
            t: enhanced.class_ap[tag][t] - base.class_ap[tag][t]
            for t in enhanced.thresholds
        }
        for tag in enhanced.class_ap
    }
    class_mean = {
        tag: enhanced.class_mean_ap[tag] - base.class_mean_ap[tag]
        for tag in enhanced.class_mean_ap
    }
    return ApDelta(
        class_ap=class_ap,
        class_mean_ap=class_mean,
        map_value=enhanced.map_value - base.map_value,
    )


def mean_reports(reports: list[ApReport]) -> ApReport:
    """Average AP metrics over samples; match counts are summed.

    Per-class means and mAP are recomputed from the averaged AP table so the
    report-internal invariants keep holding exactly.
    """
    if not reports:
        raise ValueError("need at least one report")
    thresholds = reports[0].thresholds
    for report in reports:
        if report.thresholds != thresholds:
            raise ValueError("reports use different threshold sets")
    class_ap: dict[str, dict[float, float]] = {}
    counts: dict[str, dict[float, tuple[int, int, int]]] = {}
    class_mean: dict[str, float] = {}
    for element_class in ElementClass:
        tag = element_class.tag
        class_ap[tag] = {
            t: float(np.mean([r.class_ap[tag][t] for r in reports])) for t in thresholds
        }
        counts[tag] = {
            t: (
                int(sum(r.counts[tag][t][0] for r in reports)),
                int(sum(r.counts[tag][t][1] for r in reports)),
                int(sum(r.counts[tag][t][2] for r in reports)),
            )
            for t in thresholds
        }
        class_mean[tag] = float(np.mean([class_ap[tag][t] for t in thresholds]))
    map_value = float(np.mean([class_mean[c.tag] for c in ElementClass]))
    return ApReport(
        thresholds=thresholds,
        class_ap=class_ap,
        class_mean_ap=class_mean,
        map_value=map_value,
        counts=counts,
    )


@dataclass(eq=True)
class AggregateReport:
    """Sample mean and sample std (n-1 denominator) of every flat metric."""

    n: int
    mean: dict[str, float]
    std: dict[str, float]


def aggregate_runs(reports: list[ApReport]) -> AggregateReport:
    if not reports:
        raise ValueError("need at least one report to aggregate")
    flats = [report.flatten() for report in reports]
    keys = list(flats[0].keys())
    for flat in flats:
        if list(flat.keys()) != keys:
            raise ValueError("reports expose different metric sets")
    mean: dict[str, float] = {}
    std: dict[str, float] = {}
    for key in keys:
        values = np.array([flat[key] for flat in flats], dtype=np.float64)
        mean[key] = float(values.mean())
        std[key] = float(values.std(ddof=1)) if values.size > 1 else 0.0
    return AggregateReport(n=len(reports), mean=mean, std=std)

"""Pre-attribution and Hungarian matching of predictions to ground truths.

Elements of a perturbed map carry correspondences to their source elements;
pairs whose displacement score stays below a threshold are pinned up front
and removed from the assignment problem. The remaining free predictions and
ground truths are matched by a minimum-cost Hungarian solve; surplus
prediction slots fall to BACKGROUND.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from numba import njit

from .core import MapElement, VectorMap
from .errors import AssignmentError, CorrespondenceError, GeometryError
from .perturb import PerturbedMap

PIN_THRESHOLD = 1.0  # meters
CLASS_MISMATCH_PENALTY = 10_000.0

# A prediction slot matched to no ground-truth element.
BACKGROUND = None


def displacement_score(
    m_ex: MapElement, m_gt: MapElement, *, mean_of_norms: bool = False
) -> float:
    """Norm of the mean point-difference vector between two canonical elements.

    The mean is taken before the norm, so opposite point displacements cancel.
    `mean_of_norms=True` switches to the mean of per-point displacement norms,
    which does not cancel.
    """
    if m_ex.points.shape != m_gt.points.shape:
        raise GeometryError(
            f"point counts differ: {m_ex.points.shape[0]} vs {m_gt.points.shape[0]}"
        )
    diff = m_ex.points - m_gt.points
    if mean_of_norms:
        return float(np.linalg.norm(diff, axis=1).mean())
    return float(np.linalg.norm(diff.mean(axis=0)))


@dataclass(eq=True)
class PartialAssignment:
    """Pinned pairs plus the free pools left for the Hungarian solve."""

    pinned: list[tuple[int, str]]
    free_pred_slots: list[int]
    free_gt_ids: list[str]

    def validate(self, n_preds: int, gt_ids: list[str]) -> None:
        pinned_slots = [slot for slot, _ in self.pinned]
        pinned_ids = [gt_id for _, gt_id in self.pinned]
        if len(set(pinned_ids)) != len(pinned_ids):
            raise AssignmentError("pinned ground-truth ids must be distinct")
        all_slots = sorted(pinned_slots + self.free_pred_slots)
        if all_slots != list(range(n_preds)):
            raise AssignmentError("pinned and free slots must partition the predictions")
        if sorted(pinned_ids + self.free_gt_ids) != sorted(gt_ids):
            raise AssignmentError("pinned and free ids must partition the ground truths")


def pre_attribute(
    perturbed: PerturbedMap,
    gt: VectorMap,
    threshold: float = PIN_THRESHOLD,
    *,
    score_fn: Callable[[MapElement, MapElement], float] = displacement_score,
) -> PartialAssignment:
    """Pin each sourced element whose score against its source is below threshold.

    Elements added synthetically (source None) are never pinned. A
    correspondence naming an id absent from the ground truth is corrupt input.
    """
    gt_by_id = {e.element_id: e for e in gt.elements}
    pinned: list[tuple[int, str]] = []
    free_slots: list[int] = []
    pinned_ids: set[str] = set()
    for slot, element in enumerate(perturbed.map.elements):
        corr = perturbed.correspondence_for(element.element_id)
        if corr.source_id is None:
            free_slots.append(slot)
            continue
        source = gt_by_id.get(corr.source_id)
        if source is None:
            raise CorrespondenceError(
                f"correspondence of {corr.perturbed_id!r} references unknown "
                f"ground-truth id {corr.source_id!r}"
            )
        if score_fn(element, source) < threshold:
            pinned.append((slot, corr.source_id))
            pinned_ids.add(corr.source_id)
        else:
            free_slots.append(slot)
    free_gt_ids = [e.element_id for e in gt.elements if e.element_id not in pinned_ids]
    return PartialAssignment(pinned=pinned, free_pred_slots=free_slots, free_gt_ids=free_gt_ids)


def matching_cost(pred: MapElement, gt: MapElement) -> float:
    """Mean point-to-point L2 distance, direction-invariant, class-penalized.

    The mean is minimized over the two traversal directions of the prediction;
    differing classes add a flat penalty of CLASS_MISMATCH_PENALTY.
    """
    if pred.points.shape != gt.points.shape:
        raise GeometryError(
            f"point counts differ: {pred.points.shape[0]} vs {gt.points.shape[0]}"
        )
    forward = float(np.linalg.norm(pred.points - gt.points, axis=1).mean())
    backward = float(np.linalg.norm(pred.points[::-1] - gt.points, axis=1).mean())
    cost = min(forward, backward)
    if pred.element_class is not gt.element_class:
        cost += CLASS_MISMATCH_PENALTY
    return cost


@njit(cache=True)
def _solve_assignment(cost: np.ndarray) -> np.ndarray:
    """Shortest-augmenting-path assignment for n_rows >= n_cols.

    Returns col_of_row with -1 for rows left unassigned. Every column is
    assigned; the total cost over assigned pairs is minimal.
    """
    n_rows, n_cols = cost.shape
    u = np.zeros(n_cols + 1)
    v = np.zeros(n_rows + 1)
    match_col = np.zeros(n_rows + 1, dtype=np.int64)  # 1-indexed col per row, 0 free
    way = np.zeros(n_rows + 1, dtype=np.int64)
    for col in range(1, n_cols + 1):
        match_col[0] = col
        j0 = 0
        minv = np.full(n_rows + 1, np.inf)
        used = np.zeros(n_rows + 1, dtype=np.bool_)
        while True:
            used[j0] = True
            i0 = match_col[j0]
            delta = np.inf
            j1 = -1
            for j in range(1, n_rows + 1):
                if used[j]:
                    continue
                cur = cost[j - 1, i0 - 1] - u[i0] - v[j]
                if cur < minv[j]:
                    minv[j] = cur
                    way[j] = j0
                if minv[j] < delta:
                    delta = minv[j]
                    j1 = j
            for j in range(n_rows + 1):
                if used[j]:
                    u[match_col[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if match_col[j0] == 0:
                break
        while j0 != 0:
            j1 = way[j0]
            match_col[j0] = match_col[j1]
            j0 = j1
    out = np.full(n_rows, -1, dtype=np.int64)
    for j in range(1, n_rows + 1):
        if match_col[j] != 0:
            out[j - 1] = match_col[j] - 1
    return out


def hungarian(cost: np.ndarray) -> np.ndarray:
    """Minimum-cost one-to-one assignment of every column to a distinct row.

    Rows are free predictions, columns free ground truths; surplus rows are
    implicitly paired with zero-cost dummy columns (BACKGROUND) and come back
    as -1. Requires n_rows >= n_cols so every real column can be assigned.
    """
    matrix = np.asarray(cost, dtype=np.float64)
    if matrix.ndim != 2:
        raise AssignmentError(f"cost must be a 2-d matrix, got shape {matrix.shape}")
    n_rows, n_cols = matrix.shape
    if n_cols == 0:
        return np.full(n_rows, -1, dtype=np.int64)
    if n_rows < n_cols:
        raise AssignmentError(
            f"{n_cols} ground truths cannot all be assigned to {n_rows} predictions"
        )
    if not np.all(np.isfinite(matrix)):
        raise AssignmentError("cost matrix contains non-finite entries")
    return _solve_assignment(np.ascontiguousarray(matrix))


@dataclass(frozen=True)
class AssignmentEntry:
    slot: int
    gt_id: str | None  # None is BACKGROUND
    pinned: bool
    cost: float


@dataclass(eq=True)
class Assignment:
    """Full per-slot assignment: pinned pairs verbatim plus the solved rest."""

    entries: list[AssignmentEntry]
    hungarian_shape: tuple[int, int]

    @property
    def pairs(self) -> dict[int, str | None]:
        return {entry.slot: entry.gt_id for entry in self.entries}

    def assigned_gt_ids(self) -> list[str]:
        return [e.gt_id for e in self.entries if e.gt_id is not None]


def match_with_preattribution(
    preds: list[MapElement],
    gt: VectorMap,
    partial: PartialAssignment,
    *,
    cost_fn: Callable[[MapElement, MapElement], float] = matching_cost,
) -> Assignment:
    """Merge pinned pairs with a Hungarian solve over the free pools.

    Pinned pairs appear verbatim. The Hungarian sub-problem has exactly
    (free predictions) x (free ground truths) entries; solving it requires at
    least as many free predictions as free ground truths.
    """
    gt_by_id = {e.element_id: e for e in gt.elements}
    partial.validate(len(preds), [e.element_id for e in gt.elements])
    entries = []
    for slot, gt_id in partial.pinned:
        entries.append(
            AssignmentEntry(
                slot=slot,
                gt_id=gt_id,
                pinned=True,
                cost=float(cost_fn(preds[slot], gt_by_id[gt_id])),
            )
        )
    free_slots = partial.free_pred_slots
    free_ids = partial.free_gt_ids
    shape = (len(free_slots), len(free_ids))
    if free_ids:
        cost = np.empty(shape, dtype=np.float64)
        for r, slot in enumerate(free_slots):
            pred = preds[slot]
            for c, gt_id in enumerate(free_ids):
                cost[r, c] = cost_fn(pred, gt_by_id[gt_id])
        col_of_row = hungarian(cost)
        for r, slot in enumerate(free_slots):
            c = int(col_of_row[r])
            if c < 0:
                entries.append(AssignmentEntry(slot=slot, gt_id=None, pinned=False, cost=0.0))
            else:
                entries.append(
                    AssignmentEntry(
                        slot=slot, gt_id=free_ids[c], pinned=False, cost=float(cost[r, c])
                    )
                )
    else:
        for slot in free_slots:
            entries.append(AssignmentEntry(slot=slot, gt_id=None, pinned=False, cost=0.0))
    entries.sort(key=lambda entry: entry.slot)
    return Assignment(entries=entries, hungarian_shape=shape)

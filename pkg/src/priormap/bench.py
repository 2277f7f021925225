"""Scaling benchmark for the assignment stage.

Times the bare solver and the full pre-attribution matching path on random
rank-1 product cost matrices (outer product of two uniform vectors). Rank-1
instances force long augmenting paths, keeping the solver in its
worst-case-like regime, and any pinned sub-matrix of a rank-1 matrix is again
rank-1, so timings stay comparable across pin fractions.

The speedup column compares solver time against the pin-fraction-0 solve of
the same size; the end-to-end match time is reported alongside but is
dominated by per-pair cost callbacks at these sizes.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .core import ElementClass, MapElement, PatchExtent, VectorMap
from .formats import _atomic_write_text
from .matching import PartialAssignment, hungarian, match_with_preattribution
from .rng import derive_seed, make_rng

DEFAULT_SIZES = (10, 25, 50, 100, 200)
DEFAULT_PIN_FRACTIONS = (0.0, 0.25, 0.5, 0.75)


@dataclass(frozen=True)
class BenchRow:
    size: int
    pin_fraction: float
    hungarian_seconds: float
    match_seconds: float
    speedup: float


def rank1_costs(size: int, rng: np.random.Generator) -> np.ndarray:
    return np.outer(rng.random(size), rng.random(size)) * 100.0


def _median_time(fn, repeats: int) -> float:
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return float(np.median(times))


def benchmark_matching(
    sizes: tuple[int, ...] = DEFAULT_SIZES,
    pin_fractions: tuple[float, ...] = DEFAULT_PIN_FRACTIONS,
    *,
    repeats: int = 5,
    seed: int = 0,
) -> list[BenchRow]:
    """Median wall times per (size, pin fraction), plus solver speedups."""
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    for fraction in pin_fractions:
        if not 0.0 <= fraction <= 1.0:
            raise ValueError(f"pin fraction {fraction} outside [0, 1]")
    hungarian(np.zeros((3, 3)))  # warm the jitted kernel before timing
    line = np.column_stack([np.linspace(0.0, 1.0, 2), np.zeros(2)])
    rows: list[BenchRow] = []
    for size in sizes:
        if size < 1:
            raise ValueError("sizes must be positive")
        cost = rank1_costs(size, make_rng(derive_seed(seed, size)))
        preds = [MapElement(f"s{i}", ElementClass.DIVIDER, line) for i in range(size)]
        gt = VectorMap(
            extent=PatchExtent(),
            elements=[MapElement(f"g{i}", ElementClass.DIVIDER, line) for i in range(size)],
        )
        pred_ix = {e.element_id: i for i, e in enumerate(preds)}
        gt_ix = {e.element_id: i for i, e in enumerate(gt.elements)}

        def lookup(pred: MapElement, target: MapElement) -> float:
            return float(cost[pred_ix[pred.element_id], gt_ix[target.element_id]])

        timed: list[tuple[float, float, float]] = []
        for fraction in pin_fractions:
            n_pin = int(fraction * size)
            partial = PartialAssignment(
                pinned=[(i, f"g{i}") for i in range(n_pin)],
                free_pred_slots=list(range(n_pin, size)),
                free_gt_ids=[f"g{i}" for i in range(n_pin, size)],
            )
            sub = np.ascontiguousarray(cost[n_pin:, n_pin:])
            hung_seconds = _median_time(lambda: hungarian(sub), repeats)
            match_seconds = _median_time(
                lambda: match_with_preattribution(preds, gt, partial, cost_fn=lookup), repeats
            )
            timed.append((float(fraction), hung_seconds, match_seconds))
        base = next((h for f, h, _ in timed if f == 0.0), None)
        for fraction, hung_seconds, match_seconds in timed:
            speedup = base / hung_seconds if base and hung_seconds > 0 else 1.0
            rows.append(
                BenchRow(
                    size=size,
                    pin_fraction=fraction,
                    hungarian_seconds=hung_seconds,
                    match_seconds=match_seconds,
                    speedup=float(speedup),
                )
            )
    return rows


def fit_loglog_slope(rows: list[BenchRow], pin_fraction: float = 0.0) -> float:
    """Least-squares slope of log(solver time) against log(size)."""
    picked = [r for r in rows if r.pin_fraction == pin_fraction]
    if len(picked) < 2:
        raise ValueError("need at least two sizes to fit a slope")
    xs = np.log([r.size for r in picked])
    ys = np.log([r.hungarian_seconds for r in picked])
    return float(np.polyfit(xs, ys, 1)[0])


def speedup_at(rows: list[BenchRow], size: int, pin_fraction: float) -> float:
    for row in rows:
        if row.size == size and row.pin_fraction == pin_fraction:
            return row.speedup
    raise KeyError(f"no benchmark row for size {size}, pin fraction {pin_fraction}")


def save_bench_csv(rows: list[BenchRow], path) -> None:
    lines = ["size,pin_fraction,hungarian_seconds,match_seconds,speedup"]
    for row in rows:
        lines.append(
            f"{row.size},{row.pin_fraction!r},{row.hungarian_seconds!r},"
            f"{row.match_seconds!r},{row.speedup!r}"
        )
    _atomic_write_text(path, "\n".join(lines) + "\n")

"""Deterministic figure output: map drawings, report charts, benchmark curves.

SVG output pins the hash salt and strips the date metadata so repeated renders
of the same value are byte-identical; raster output is deterministic as-is.
Figures are written via a temp file and an atomic rename like every other
artifact.
"""

from __future__ import annotations

import os
import tempfile
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .bench import BenchRow
from .core import ElementClass, MapElement, PatchExtent, VectorMap
from .metrics import ApReport
from .perturb import PerturbedMap
from .simulate import PipelineReport

CLASS_COLORS = {
    ElementClass.DIVIDER: "lime",
    ElementClass.PED_CROSSING: "blue",
    ElementClass.BOUNDARY: "green",
}
_SVG_SALT = "priormap"


def _save_figure(fig, path: str | Path) -> None:
    path = Path(path)
    suffix = path.suffix.lower() or ".png"
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    os.close(fd)
    try:
        if suffix == ".svg":
            with plt.rc_context({"svg.hashsalt": _SVG_SALT}):
                fig.savefig(tmp, format="svg", metadata={"Date": None})
        else:
            fig.savefig(tmp, format=suffix.lstrip("."))
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    finally:
        plt.close(fig)


def _draw_frame(ax, extent: PatchExtent) -> None:
    xs = [extent.x_min, extent.x_max, extent.x_max, extent.x_min, extent.x_min]
    ys = [extent.y_min, extent.y_min, extent.y_max, extent.y_max, extent.y_min]
    ax.plot(xs, ys, color="0.4", linestyle="--", linewidth=0.8)


def _draw_element(ax, element: MapElement, label: str | None) -> None:
    color = CLASS_COLORS[element.element_class]
    pts = element.points
    if element.element_class.closed:
        ax.fill(pts[:, 0], pts[:, 1], color=color, alpha=0.25, linewidth=0)
    ax.plot(pts[:, 0], pts[:, 1], color=color, linewidth=1.2)
    if label is not None:
        cx, cy = pts.mean(axis=0)
        ax.annotate(label, (cx, cy), fontsize=5, ha="center", color="0.2")


def render_map(
    vmap: VectorMap,
    path: str | Path,
    *,
    annotate: bool = False,
    sources: dict[str, str | None] | None = None,
    title: str | None = None,
) -> None:
    """Draw one map to an image file; an empty map still gets its patch frame."""
    fig, ax = plt.subplots(figsize=(5.0, 9.0))
    _draw_frame(ax, vmap.extent)
    for element in vmap.elements:
        label = None
        if annotate:
            label = element.element_id
            if sources is not None:
                source = sources.get(element.element_id)
                label = f"{label}<-{source}" if source is not None else f"{label}<-new"
        _draw_element(ax, element, label)
    ax.set_xlim(vmap.extent.x_min - 1.5, vmap.extent.x_max + 1.5)
    ax.set_ylim(vmap.extent.y_min - 1.5, vmap.extent.y_max + 1.5)
    ax.set_aspect("equal")
    ax.set_xlabel("x lateral (m)")
    ax.set_ylabel("y longitudinal (m)")
    if title:
        ax.set_title(title, fontsize=9)
    fig.tight_layout()
    _save_figure(fig, path)


def render_variant(
    variant: PerturbedMap, path: str | Path, *, annotate: bool = False
) -> None:
    """Draw a perturbed map; annotations show each element's source id."""
    sources = {c.perturbed_id: c.source_id for c in variant.correspondences}
    suffix = " (unperturbed)" if variant.unperturbed else ""
    render_map(
        variant.map,
        path,
        annotate=annotate,
        sources=sources if annotate else None,
        title=f"scenario {variant.scenario.kind.value}, seed {variant.seed}{suffix}",
    )


def render_report_figure(report: ApReport | PipelineReport, path: str | Path) -> None:
    """Bar chart of per-class AP means (with std whiskers for pipeline runs)."""
    tags = [c.tag for c in ElementClass]
    if isinstance(report, ApReport):
        heights = [report.class_mean_ap[tag] for tag in tags] + [report.map_value]
        errors = None
        title = "evaluation report"
    else:
        heights = [report.aggregate.mean[f"mean_ap/{tag}"] for tag in tags] + [
            report.aggregate.mean["map"]
        ]
        errors = [report.aggregate.std[f"mean_ap/{tag}"] for tag in tags] + [
            report.aggregate.std["map"]
        ]
        title = (
            f"{report.scenario.kind.value} / {report.estimator.mode.value} "
            f"({report.aggregate.n} seeds, {report.corpus_size} samples)"
        )
    labels = tags + ["mAP"]
    colors = [CLASS_COLORS[c] for c in ElementClass] + ["0.5"]
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.bar(labels, heights, color=colors, yerr=errors, capsize=4)
    for x, value in enumerate(heights):
        ax.annotate(f"{value:.3f}", (x, value), ha="center", va="bottom", fontsize=8)
    ax.set_ylim(0.0, 1.1)
    ax.set_ylabel("AP (mean over thresholds)")
    ax.set_title(title, fontsize=9)
    fig.tight_layout()
    _save_figure(fig, path)


def render_bench_figure(rows: list[BenchRow], path: str | Path) -> None:
    """Log-log solver time against problem size, one curve per pin fraction."""
    fractions = sorted({row.pin_fraction for row in rows})
    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    for fraction in fractions:
        picked = sorted((r for r in rows if r.pin_fraction == fraction), key=lambda r: r.size)
        sizes = [r.size for r in picked]
        times = [r.hungarian_seconds for r in picked]
        if any(t <= 0 for t in times):
            continue
        ax.loglog(sizes, times, marker="o", label=f"pin fraction {fraction:g}")
    ax.set_xlabel("problem size N")
    ax.set_ylabel("median solver seconds")
    ax.legend(fontsize=8)
    ax.grid(True, which="both", linewidth=0.3, alpha=0.5)
    fig.tight_layout()
    _save_figure(fig, path)

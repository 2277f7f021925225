"""Scenario-based map perturbation.

Turns a ground-truth map into an imperfect variant while tracking, for each
surviving element, which source element it came from. Five scenario kinds:

- s1: keep boundaries only (deterministic, single variant)
- s2a: one Gaussian translation per element (sigma_shift)
- s2b: independent Gaussian noise per point (sigma_point)
- s3a: outdated map: random deletions, synthetic crossing additions, then a
  trigonometric warp followed by a triangular grid warp
- s3b: with probability mix_p the untouched ground truth, otherwise s3a

Randomized scenarios consume their generator in a fixed documented order so
variant files are reproducible byte-for-byte: s2a draws one (x, y) offset per
element in map order; s2b draws one noise array per element in map order;
s3a draws one keep/drop uniform per deletable element in map order, then one
center per added crossing, then the triangular grid displacement; s3b draws
one branch uniform first.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .core import (
    CANONICAL_POINTS,
    ElementClass,
    MapElement,
    PatchExtent,
    VectorMap,
    clip_to_patch,
    resample_polyline,
)
from .errors import CorrespondenceError, GeometryError
from .rng import derive_seed, make_rng

logger = logging.getLogger(__name__)

ADDED_CROSSING_WIDTH = 4.0  # meters along x
ADDED_CROSSING_HEIGHT = 3.0  # meters along y


class ScenarioKind(Enum):
    S1 = "s1"
    S2A = "s2a"
    S2B = "s2b"
    S3A = "s3a"
    S3B = "s3b"

    @classmethod
    def from_token(cls, token: str) -> "ScenarioKind":
        for kind in cls:
            if kind.value == token:
                return kind
        raise ValueError(f"unknown scenario {token!r}")


@dataclass(frozen=True)
class ScenarioSpec:
    """Scenario kind plus every numeric parameter any kind may use."""

    kind: ScenarioKind
    sigma_shift: float = 1.0
    sigma_point: float = 5.0
    delete_frac: float = 0.5
    add_frac: float = 0.5
    mix_p: float = 0.5
    amp_h: float = 1.0
    amp_v: float = 1.0
    inclination: float = 3.0
    grid_spacing: float = 1.0
    sigma_grid: float = 1.0
    exact_half: bool = False

    def __post_init__(self) -> None:
        for name in ("sigma_shift", "sigma_point", "sigma_grid", "amp_h", "amp_v"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0, got {getattr(self, name)}")
        for name in ("delete_frac", "add_frac", "mix_p"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {value}")
        if self.grid_spacing <= 0:
            raise ValueError(f"grid_spacing must be > 0, got {self.grid_spacing}")


@dataclass(frozen=True)
class Correspondence:
    """Maps a perturbed element id to its source element id, or None if added."""

    perturbed_id: str
    source_id: str | None


@dataclass(eq=False)
class PerturbedMap:
    """A perturbed map plus per-element provenance."""

    map: VectorMap
    correspondences: list[Correspondence]
    scenario: ScenarioSpec
    seed: int
    unperturbed: bool = False

    def __post_init__(self) -> None:
        element_ids = [e.element_id for e in self.map.elements]
        corr_ids = [c.perturbed_id for c in self.correspondences]
        if sorted(element_ids) != sorted(corr_ids):
            raise CorrespondenceError(
                "correspondences must cover every map element exactly once"
            )
        sources = [c.source_id for c in self.correspondences if c.source_id is not None]
        if len(sources) != len(set(sources)):
            raise CorrespondenceError("a source id appears more than once")

    def correspondence_for(self, perturbed_id: str) -> Correspondence:
        for corr in self.correspondences:
            if corr.perturbed_id == perturbed_id:
                return corr
        raise KeyError(perturbed_id)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PerturbedMap):
            return NotImplemented
        return (
            self.map == other.map
            and self.correspondences == other.correspondences
            and self.scenario == other.scenario
            and self.seed == other.seed
            and self.unperturbed == other.unperturbed
        )


def identity_correspondences(vmap: VectorMap) -> list[Correspondence]:
    return [Correspondence(e.element_id, e.element_id) for e in vmap.elements]


def _keep_surviving(
    vmap: VectorMap, correspondences: list[Correspondence]
) -> tuple[VectorMap, list[Correspondence]]:
    """Clip to patch and drop correspondences of elements the clip removed."""
    clipped = clip_to_patch(vmap)
    surviving = {e.element_id for e in clipped.elements}
    return clipped, [c for c in correspondences if c.perturbed_id in surviving]


def s1_remove(vmap: VectorMap) -> PerturbedMap:
    """Keep only boundary elements; geometry untouched. Deterministic."""
    elements = [e for e in vmap.elements if e.element_class is ElementClass.BOUNDARY]
    out = VectorMap(extent=vmap.extent, elements=elements)
    return PerturbedMap(
        map=out,
        correspondences=identity_correspondences(out),
        scenario=ScenarioSpec(kind=ScenarioKind.S1),
        seed=0,
    )


def s2a_shift(vmap: VectorMap, sigma: float, rng: np.random.Generator) -> PerturbedMap:
    """Translate each element by its own N(0, sigma^2 I) vector, then clip."""
    if sigma < 0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    elements = []
    for element in vmap.elements:
        offset = rng.normal(0.0, sigma, size=2) if sigma > 0 else np.zeros(2)
        elements.append(element.with_points(element.points + offset))
    shifted = VectorMap(extent=vmap.extent, elements=elements)
    out, corrs = _keep_surviving(shifted, identity_correspondences(shifted))
    return PerturbedMap(
        map=out,
        correspondences=corrs,
        scenario=ScenarioSpec(kind=ScenarioKind.S2A, sigma_shift=sigma),
        seed=0,
    )


def s2b_point_noise(vmap: VectorMap, sigma: float, rng: np.random.Generator) -> PerturbedMap:
    """Add independent N(0, sigma^2) noise to every point coordinate, then clip."""
    if sigma < 0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    elements = []
    for element in vmap.elements:
        noise = rng.normal(0.0, sigma, size=element.points.shape) if sigma > 0 else 0.0
        elements.append(element.with_points(element.points + noise))
    noisy = VectorMap(extent=vmap.extent, elements=elements)
    out, corrs = _keep_surviving(noisy, identity_correspondences(noisy))
    return PerturbedMap(
        map=out,
        correspondences=corrs,
        scenario=ScenarioSpec(kind=ScenarioKind.S2B, sigma_point=sigma),
        seed=0,
    )


def _synthetic_crossing(element_id: str, extent: PatchExtent, rng: np.random.Generator) -> MapElement:
    """One axis-aligned rectangular crossing placed fully inside the patch."""
    half_w = ADDED_CROSSING_WIDTH / 2.0
    half_h = ADDED_CROSSING_HEIGHT / 2.0
    if extent.x_max - extent.x_min < ADDED_CROSSING_WIDTH or (
        extent.y_max - extent.y_min < ADDED_CROSSING_HEIGHT
    ):
        raise GeometryError("patch too small to place a synthetic crossing")
    center = rng.uniform(
        [extent.x_min + half_w, extent.y_min + half_h],
        [extent.x_max - half_w, extent.y_max - half_h],
    )
    ring = np.array(
        [
            [center[0] - half_w, center[1] - half_h],
            [center[0] + half_w, center[1] - half_h],
            [center[0] + half_w, center[1] + half_h],
            [center[0] - half_w, center[1] + half_h],
            [center[0] - half_w, center[1] - half_h],
        ]
    )
    return MapElement(element_id, ElementClass.PED_CROSSING, resample_polyline(ring))


def trig_warp(
    vmap: VectorMap, amp_h: float = 1.0, amp_v: float = 1.0, inclination: float = 3.0
) -> VectorMap:
    """Smooth sinusoidal displacement of every point.

    x' = x + amp_h * sin(2*pi*inclination * y / height_m)
    y' = y + amp_v * sin(2*pi*inclination * x / width_m)
    """
    if amp_h < 0 or amp_v < 0:
        raise ValueError("amplitudes must be >= 0")
    width = vmap.extent.width_m
    height = vmap.extent.height_m
    elements = []
    for element in vmap.elements:
        x = element.points[:, 0]
        y = element.points[:, 1]
        warped = np.column_stack(
            [
                x + amp_h * np.sin(2.0 * math.pi * inclination * y / height),
                y + amp_v * np.sin(2.0 * math.pi * inclination * x / width),
            ]
        )
        elements.append(element.with_points(warped))
    return VectorMap(extent=vmap.extent, elements=elements)


class _WarpGrid:
    """Regular grid over the patch plus its displaced copy."""

    def __init__(self, extent: PatchExtent, spacing: float, sigma: float, rng: np.random.Generator):
        # Two spare cells beyond each patch edge keep warped-in points on-grid.
        margin = 2
        nx = int(math.ceil((extent.x_max - extent.x_min) / spacing)) + 1 + 2 * margin
        ny = int(math.ceil((extent.y_max - extent.y_min) / spacing)) + 1 + 2 * margin
        self.spacing = spacing
        self.x0 = extent.x_min - margin * spacing
        self.y0 = extent.y_min - margin * spacing
        self.nx = nx
        self.ny = ny
        xs = self.x0 + np.arange(nx) * spacing
        ys = self.y0 + np.arange(ny) * spacing
        gx, gy = np.meshgrid(xs, ys, indexing="ij")
        self.source = np.stack([gx, gy], axis=-1)  # (nx, ny, 2)
        noise = rng.normal(0.0, sigma, size=self.source.shape) if sigma > 0 else np.zeros_like(self.source)
        # Border nodes stay fixed so the warp is identity at the hull boundary.
        noise[0, :] = 0.0
        noise[-1, :] = 0.0
        noise[:, 0] = 0.0
        noise[:, -1] = 0.0
        self.displaced = self.source + noise

    def map_points(self, points: np.ndarray) -> tuple[np.ndarray, int]:
        """Map points by their containing triangle; identity outside the hull."""
        u = (points[:, 0] - self.x0) / self.spacing
        v = (points[:, 1] - self.y0) / self.spacing
        outside = (u < 0.0) | (u > self.nx - 1) | (v < 0.0) | (v > self.ny - 1)
        i = np.clip(np.floor(u).astype(int), 0, self.nx - 2)
        j = np.clip(np.floor(v).astype(int), 0, self.ny - 2)
        fx = u - i
        fy = v - j
        lower = (fx + fy) <= 1.0
        out = np.empty_like(points)

        d = self.displaced
        # Lower triangle: anchor (i, j), legs toward (i+1, j) and (i, j+1).
        a = d[i, j]
        out_lower = a + fx[:, None] * (d[i + 1, j] - a) + fy[:, None] * (d[i, j + 1] - a)
        # Upper triangle: anchor (i+1, j+1), legs toward (i, j+1) and (i+1, j).
        b = d[i + 1, j + 1]
        out_upper = (
            b
            + (1.0 - fx)[:, None] * (d[i, j + 1] - b)
            + (1.0 - fy)[:, None] * (d[i + 1, j] - b)
        )
        out[lower] = out_lower[lower]
        out[~lower] = out_upper[~lower]
        out[outside] = points[outside]
        return out, int(np.count_nonzero(outside))


def triangular_warp(
    vmap: VectorMap,
    grid_spacing: float = 1.0,
    sigma_grid: float = 1.0,
    rng: np.random.Generator | None = None,
) -> VectorMap:
    """Piecewise-affine warp over a randomly displaced regular grid.

    Interior grid nodes move by i.i.d. N(0, sigma_grid^2) per coordinate;
    border nodes stay fixed. Each grid cell is split into two triangles and
    points map by their containing triangle's affine transform. Points
    outside the grid hull pass through unchanged (counted and logged).
    """
    if grid_spacing <= 0:
        raise ValueError(f"grid_spacing must be > 0, got {grid_spacing}")
    if sigma_grid < 0:
        raise ValueError(f"sigma_grid must be >= 0, got {sigma_grid}")
    if rng is None:
        rng = make_rng(0)
    grid = _WarpGrid(vmap.extent, grid_spacing, sigma_grid, rng)
    elements = []
    skipped = 0
    for element in vmap.elements:
        warped, outside = grid.map_points(element.points)
        skipped += outside
        elements.append(element.with_points(warped))
    if skipped:
        logger.warning("triangular_warp: %d points outside grid hull left unchanged", skipped)
    return VectorMap(extent=vmap.extent, elements=elements)


def _unique_id(base: str, index: int, used: set[str]) -> str:
    candidate = f"{base}{index}"
    while candidate in used:
        index += 1
        candidate = f"{base}{index}"
    used.add(candidate)
    return candidate


def s3a_outdated(vmap: VectorMap, spec: ScenarioSpec, rng: np.random.Generator) -> PerturbedMap:
    """Outdated-map scenario: deletions, synthetic additions, two warps, clip."""
    deletable = [
        e
        for e in vmap.elements
        if e.element_class in (ElementClass.PED_CROSSING, ElementClass.DIVIDER)
    ]
    if spec.exact_half:
        n_delete = int(math.floor(len(deletable) * spec.delete_frac))
        order = rng.permutation(len(deletable))
        dropped = {deletable[k].element_id for k in order[:n_delete]}
    else:
        draws = rng.random(len(deletable))
        dropped = {
            e.element_id for e, u in zip(deletable, draws) if u < spec.delete_frac
        }
    kept = [e for e in vmap.elements if e.element_id not in dropped]
    correspondences = [Correspondence(e.element_id, e.element_id) for e in kept]

    remaining_crossings = sum(
        1 for e in kept if e.element_class is ElementClass.PED_CROSSING
    )
    n_add = int(math.floor(remaining_crossings * spec.add_frac))
    used_ids = {e.element_id for e in vmap.elements}
    for k in range(n_add):
        new_id = _unique_id("added-", k, used_ids)
        kept.append(_synthetic_crossing(new_id, vmap.extent, rng))
        correspondences.append(Correspondence(new_id, None))

    warped = trig_warp(
        VectorMap(extent=vmap.extent, elements=kept),
        amp_h=spec.amp_h,
        amp_v=spec.amp_v,
        inclination=spec.inclination,
    )
    warped = triangular_warp(warped, spec.grid_spacing, spec.sigma_grid, rng)
    out, correspondences = _keep_surviving(warped, correspondences)
    return PerturbedMap(map=out, correspondences=correspondences, scenario=spec, seed=0)


def s3b_mix(
    vmap: VectorMap,
    p: float,
    rng: np.random.Generator,
    spec: ScenarioSpec | None = None,
) -> PerturbedMap:
    """With probability p the untouched ground truth, otherwise s3a output."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must be in [0, 1], got {p}")
    if spec is None:
        spec = ScenarioSpec(kind=ScenarioKind.S3B, mix_p=p)
    if rng.random() < p:
        return PerturbedMap(
            map=vmap,
            correspondences=identity_correspondences(vmap),
            scenario=spec,
            seed=0,
            unperturbed=True,
        )
    out = s3a_outdated(vmap, spec, rng)
    return replace(out, scenario=spec)


def apply_scenario(vmap: VectorMap, spec: ScenarioSpec, rng: np.random.Generator) -> PerturbedMap:
    """Dispatch one scenario application using the bundled parameters."""
    if spec.kind is ScenarioKind.S1:
        return s1_remove(vmap)
    if spec.kind is ScenarioKind.S2A:
        return s2a_shift(vmap, spec.sigma_shift, rng)
    if spec.kind is ScenarioKind.S2B:
        return s2b_point_noise(vmap, spec.sigma_point, rng)
    if spec.kind is ScenarioKind.S3A:
        return s3a_outdated(vmap, spec, rng)
    if spec.kind is ScenarioKind.S3B:
        return s3b_mix(vmap, spec.mix_p, rng, spec=spec)
    raise ValueError(f"unhandled scenario kind {spec.kind}")


def generate_variants(
    vmap: VectorMap, spec: ScenarioSpec, count: int, seed: int
) -> list[PerturbedMap]:
    """Generate `count` variants from per-variant sub-seeds of `seed`.

    Scenario s1 is deterministic and always yields exactly one variant.
    """
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    if spec.kind is ScenarioKind.S1:
        count = 1
    variants = []
    for index in range(count):
        sub_seed = derive_seed(seed, index)
        result = apply_scenario(vmap, spec, make_rng(sub_seed))
        variants.append(replace(result, scenario=spec, seed=sub_seed))
    return variants

"""Agreement metrics: volumetric DSC, its sparse-label estimate, tolerance
quantization, surface DSC at a tolerance, and per-patient aggregation."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .distance import distance_transform, distances_to_other_surface
from .errors import GridMismatchError, MissingOrganError
from .grid import Mask, Spacing, SparseLabels, VoxelBox, bounding_box, validate_compatible
from .surface import build_area_table, extract_surface


@dataclass(frozen=True)
class ToleranceSpec:
    """Per-organ tolerances in mm, with an optional fallback."""

    per_organ: dict[str, float] = field(default_factory=dict)
    default_mm: float | None = None

    def __post_init__(self):
        for organ, tau in self.per_organ.items():
            if tau < 0:
                raise ValueError(f"negative tolerance for {organ!r}: {tau}")
        if self.default_mm is not None and self.default_mm < 0:
            raise ValueError(f"negative default tolerance: {self.default_mm}")

    def tolerance_for(self, organ: str) -> float:
        if organ in self.per_organ:
            return self.per_organ[organ]
        if self.default_mm is not None:
            return self.default_mm
        raise KeyError(f"no tolerance configured for organ {organ!r}")


@dataclass(frozen=True)
class SurfaceDscBreakdown:
    """Surface DSC value plus the areas it was computed from.

    ``overlap_area_1`` is the area of the first mask's surface lying within
    the quantized tolerance of the second mask's surface, and vice versa.
    ``value`` is None when both masks are empty (no surfaces to compare).
    """

    overlap_area_1: float
    overlap_area_2: float
    total_area_1: float
    total_area_2: float
    quantized_tau: float
    value: float | None


def volumetric_dsc(a: Mask, b: Mask) -> float | None:
    """Classical overlap coefficient 2|a&b| / (|a|+|b|); None if both empty."""
    validate_compatible(a, b)
    ca = a.voxel_count()
    cb = b.voxel_count()
    if ca + cb == 0:
        return None
    inter = int(np.count_nonzero(a.occupancy & b.occupancy))
    return 2.0 * inter / (ca + cb)


def sparse_volumetric_dsc(cases: Sequence[tuple[SparseLabels, Mask]]) -> float | None:
    """Volumetric DSC estimated from per-slice ground truth.

    Intersections are restricted to each case's labelled region and summed
    across all cases before dividing, so large cases weigh more than small
    ones. None when no labelled voxel meets either mask.
    """
    numer = 0
    denom = 0
    for index, (gt, pred) in enumerate(cases):
        try:
            validate_compatible(gt.labelled, pred)
        except GridMismatchError as exc:
            raise GridMismatchError(f"case {index}: {exc}") from exc
        lab = gt.labelled.occupancy
        gt_in = gt.values.occupancy & lab
        pred_in = pred.occupancy & lab
        numer += 2 * int(np.count_nonzero(gt_in & pred_in))
        denom += int(np.count_nonzero(gt_in)) + int(np.count_nonzero(pred_in))
    if denom == 0:
        return None
    return numer / denom


def quantize_tolerance(tau: float, spacing: Spacing, max_radius: float | None = None) -> float:
    """Round a tolerance to the nearest achievable inter-voxel distance.

    The achievable set is {sqrt((n1*dx)^2 + (n2*dy)^2 + (n3*dz)^2)} for
    non-negative integers n; ties go to the smaller element. Enumeration is
    capped at ``max_radius`` (default tau + 2*max spacing, always enough to
    bracket the nearest element).
    """
    if tau < 0:
        raise ValueError(f"tolerance must be >= 0, got {tau}")
    d = spacing.as_array()
    if max_radius is None:
        max_radius = tau + 2.0 * float(d.max())
    elif max_radius < tau + float(d.max()):
        raise ValueError("max_radius must be at least tau + max(spacing)")
    counts = np.floor(max_radius / d).astype(np.int64) + 1
    n1 = np.arange(counts[0], dtype=np.float64).reshape(-1, 1, 1)
    n2 = np.arange(counts[1], dtype=np.float64).reshape(1, -1, 1)
    n3 = np.arange(counts[2], dtype=np.float64).reshape(1, 1, -1)
    # Squares as single multiplications and the same summation order as the
    # distance transform, so thresholding at the quantized value compares
    # equal bit-for-bit (pow(x, 2) can land one ulp away from x * x).
    sq = np.square(n1 * d[0]) + np.square(n2 * d[1]) + np.square(n3 * d[2])
    dists = np.sqrt(sq.ravel())
    dists = dists[dists <= max_radius]
    order = np.lexsort((dists, np.abs(dists - tau)))
    return float(dists[order[0]])


def _crop_pair(a: Mask, b: Mask) -> tuple[Mask, Mask]:
    """Crop both masks to their union bounding box (one voxel of padding).

    Surfaces and the distances sampled at them are unchanged by the crop;
    only background far from both masks is discarded.
    """
    box_a = bounding_box(a, pad_voxels=1)
    box_b = bounding_box(b, pad_voxels=1)
    if box_a is None and box_b is None:
        return a, b
    box: VoxelBox = box_a.union(box_b) if box_a and box_b else (box_a or box_b)
    return (
        Mask(a.occupancy[box.slices], a.spacing),
        Mask(b.occupancy[box.slices], b.spacing),
    )


def surface_dsc(a: Mask, b: Mask, tau: float) -> SurfaceDscBreakdown:
    """Surface DSC at tolerance ``tau`` (mm).

    The tolerance is first rounded to the grid's achievable-distance set.
    Each surface element whose distance to the other surface is <= the
    quantized tolerance (inclusive) counts its area as overlap; the value is
    the summed overlap area of both surfaces over the summed total area.
    Both masks empty -> value None; exactly one empty -> 0.0.
    """
    validate_compatible(a, b)
    quantized = quantize_tolerance(tau, a.spacing)
    if a.is_empty() and b.is_empty():
        return SurfaceDscBreakdown(0.0, 0.0, 0.0, 0.0, quantized, None)
    a_crop, b_crop = _crop_pair(a, b)
    table = build_area_table(a.spacing)
    surf_a = extract_surface(a_crop, table)
    surf_b = extract_surface(b_crop, table)
    raster_shape = surf_a.raster_shape
    map_a = distance_transform(surf_a, raster_shape, a.spacing)
    map_b = distance_transform(surf_b, raster_shape, a.spacing)
    pairs_a = distances_to_other_surface(surf_a, map_b)
    pairs_b = distances_to_other_surface(surf_b, map_a)
    overlap_1 = float(np.sum(pairs_a[pairs_a[:, 1] <= quantized, 0]))
    overlap_2 = float(np.sum(pairs_b[pairs_b[:, 1] <= quantized, 0]))
    total_1 = surf_a.total_area
    total_2 = surf_b.total_area
    value = (overlap_1 + overlap_2) / (total_1 + total_2)
    return SurfaceDscBreakdown(overlap_1, overlap_2, total_1, total_2, quantized, value)


def aggregate_surface_dsc(
    breakdowns: Mapping[str, SurfaceDscBreakdown],
    relevant: Iterable[str],
) -> float | None:
    """Patient-level surface DSC over the clinically relevant organs.

    Overlap and total areas are summed across organs before dividing, so
    large organs dominate; organs where both masks were empty contribute
    nothing. None when every relevant organ was empty on both sides.
    """
    overlap = 0.0
    total = 0.0
    for organ in relevant:
        if organ not in breakdowns:
            raise MissingOrganError(f"no breakdown for relevant organ {organ!r}")
        bd = breakdowns[organ]
        overlap += bd.overlap_area_1 + bd.overlap_area_2
        total += bd.total_area_1 + bd.total_area_2
    if total == 0.0:
        return None
    return overlap / total

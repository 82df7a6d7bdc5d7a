"""Organ tolerance calibration from inter-observer segmentations.

Distances between two observers' surfaces are pooled symmetrically (A's
elements against B's surface and vice versa), each sample weighted by its
element's area, across all observer pairs and scans; the tolerance is the
weighted 95th-percentile distance.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from itertools import combinations
from typing import Mapping, Sequence

import numpy as np

from .distance import distance_transform, distances_to_other_surface
from .errors import CalibrationError
from .grid import Mask
from .metrics import ToleranceSpec, _crop_pair
from .surface import build_area_table, extract_surface

log = logging.getLogger(__name__)

DEFAULT_PERCENTILE = 0.95


@dataclass(frozen=True)
class DistanceSampleSet:
    """Pooled surface-distance samples for one organ.

    ``distances`` and ``weights`` are parallel arrays (mm, mm^2);
    ``provenance`` records one (scan_id, observer_a, observer_b) triple per
    contributing pair.
    """

    organ: str
    distances: np.ndarray
    weights: np.ndarray
    provenance: tuple[tuple[str, str, str], ...] = ()

    def __post_init__(self):
        d = np.asarray(self.distances, dtype=np.float64)
        w = np.asarray(self.weights, dtype=np.float64)
        if d.shape != w.shape or d.ndim != 1:
            raise ValueError("distances and weights must be parallel 1D arrays")
        if d.size and (not np.isfinite(d).all() or (d < 0).any()):
            raise ValueError("distances must be finite and non-negative")
        if (w <= 0).any():
            raise ValueError("weights must be positive")
        object.__setattr__(self, "distances", d)
        object.__setattr__(self, "weights", w)

    def __len__(self) -> int:
        return len(self.distances)

    @classmethod
    def pooled(cls, organ: str, parts: Sequence["DistanceSampleSet"]) -> "DistanceSampleSet":
        return cls(
            organ=organ,
            distances=np.concatenate([p.distances for p in parts]) if parts else np.empty(0),
            weights=np.concatenate([p.weights for p in parts]) if parts else np.empty(0),
            provenance=tuple(pv for p in parts for pv in p.provenance),
        )


def collect_interobserver_distances(seg_a: Mask, seg_b: Mask) -> np.ndarray:
    """Symmetric pool of surface distances between two observers' masks.

    Returns an (n, 2) array of rows (distance mm, weight mm^2): every element
    of A's surface paired with its distance to B's surface, then B's against
    A's. Both masks must be non-empty.
    """
    if seg_a.is_empty() or seg_b.is_empty():
        raise CalibrationError("cannot collect distances from an empty segmentation")
    a, b = _crop_pair(seg_a, seg_b)
    table = build_area_table(seg_a.spacing)
    surf_a = extract_surface(a, table)
    surf_b = extract_surface(b, table)
    map_a = distance_transform(surf_a, surf_a.raster_shape, seg_a.spacing)
    map_b = distance_transform(surf_b, surf_b.raster_shape, seg_a.spacing)
    ab = distances_to_other_surface(surf_a, map_b)
    ba = distances_to_other_surface(surf_b, map_a)
    # rows come back as (area, distance); samples are (distance, weight)
    return np.concatenate([ab[:, ::-1], ba[:, ::-1]])


def tolerance_percentile(
    samples: DistanceSampleSet,
    q: float = DEFAULT_PERCENTILE,
    weighted: bool = True,
) -> float:
    """Weighted nearest-rank percentile of the pooled distances.

    The smallest distance whose cumulative weight reaches q of the total;
    ``weighted=False`` gives every sample unit weight (per-point counting
    instead of per-area voting).
    """
    if len(samples) == 0:
        raise CalibrationError(f"no distance samples for organ {samples.organ!r}")
    if not 0.0 < q <= 1.0:
        raise ValueError(f"percentile fraction must be in (0, 1], got {q}")
    weights = samples.weights if weighted else np.ones_like(samples.distances)
    order = np.argsort(samples.distances, kind="stable")
    dist = samples.distances[order]
    cum = np.cumsum(weights[order])
    rank = np.searchsorted(cum, q * cum[-1], side="left")
    return float(dist[min(rank, len(dist) - 1)])


def pool_interobserver_distances(
    dataset: Sequence[tuple[str, Mapping[str, Mapping[str, Mask]]]],
) -> dict[str, DistanceSampleSet]:
    """Pool distance samples per organ over all scans and observer pairs.

    ``dataset`` rows are (scan_id, organ -> observer -> mask). Pairs where
    either observer's mask is missing or empty are skipped with a warning.
    """
    per_organ: dict[str, list[DistanceSampleSet]] = {}
    for scan_id, organs in dataset:
        for organ, observers in organs.items():
            for obs_a, obs_b in combinations(sorted(observers), 2):
                seg_a = observers[obs_a]
                seg_b = observers[obs_b]
                if seg_a.is_empty() or seg_b.is_empty():
                    log.warning(
                        "skipping empty pair: scan=%s organ=%s pair=%s|%s",
                        scan_id, organ, obs_a, obs_b,
                    )
                    continue
                rows = collect_interobserver_distances(seg_a, seg_b)
                per_organ.setdefault(organ, []).append(DistanceSampleSet(
                    organ=organ,
                    distances=rows[:, 0],
                    weights=rows[:, 1],
                    provenance=((scan_id, obs_a, obs_b),),
                ))
    return {organ: DistanceSampleSet.pooled(organ, parts)
            for organ, parts in sorted(per_organ.items())}


def calibrate_organ_tolerances(
    dataset: Sequence[tuple[str, Mapping[str, Mapping[str, Mask]]]],
    q: float = DEFAULT_PERCENTILE,
    weighted: bool = True,
) -> ToleranceSpec:
    """Per-organ tolerances from inter-observer distances.

    Organs with no usable observer pair are omitted with a warning.
    """
    pooled = pool_interobserver_distances(dataset)
    per_organ = {}
    for organ, samples in pooled.items():
        if len(samples) == 0:
            log.warning("no distance samples for organ %s; omitted", organ)
            continue
        per_organ[organ] = tolerance_percentile(samples, q=q, weighted=weighted)
    return ToleranceSpec(per_organ=per_organ)


def save_tolerance_spec(
    spec: ToleranceSpec,
    path,
    percentile: float = DEFAULT_PERCENTILE,
    provenance: Sequence[str] = (),
) -> None:
    doc = {
        "organ_tolerances_mm": dict(sorted(spec.per_organ.items())),
        "percentile": percentile,
        "provenance": list(provenance),
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_tolerance_spec(path) -> ToleranceSpec:
    with open(path) as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict) or "organ_tolerances_mm" not in doc:
        raise ValueError(f"{path}: not a tolerance document (missing organ_tolerances_mm)")
    per_organ = doc["organ_tolerances_mm"]
    if not isinstance(per_organ, dict):
        raise ValueError(f"{path}: organ_tolerances_mm must be an object")
    return ToleranceSpec(per_organ={str(k): float(v) for k, v in per_organ.items()})

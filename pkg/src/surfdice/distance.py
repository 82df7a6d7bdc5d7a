"""Exact anisotropic Euclidean distance transform on the shifted raster.

Distances are physical (mm): raster points are spacing apart per axis, so the
separable lower-envelope transform runs with per-axis sampling (dx, dy, dz).
An empty source surface yields an all-infinite map with ``source_empty`` set,
so downstream threshold tests cannot silently pass.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .grid import Spacing
from .surface import SurfaceElementList


@dataclass(frozen=True)
class DistanceMap:
    """Per-raster-point distance (mm) to the nearest source surface point."""

    dist: np.ndarray
    spacing: Spacing
    source_empty: bool

    def __post_init__(self):
        d = np.ascontiguousarray(self.dist)
        d.flags.writeable = False
        object.__setattr__(self, "dist", d)

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.dist.shape


def distance_transform(
    source: SurfaceElementList,
    raster_shape: tuple[int, int, int],
    spacing: Spacing,
) -> DistanceMap:
    """Exact Euclidean distance from every raster point to the nearest
    element of ``source``; all +inf when the source is empty."""
    shape = tuple(int(n) for n in raster_shape)
    if len(source) == 0:
        dist = np.full(shape, np.inf, dtype=np.float64)
        return DistanceMap(dist=dist, spacing=spacing, source_empty=True)
    grid_idx = source.raster_indices + 1
    if np.any(grid_idx < 0) or np.any(grid_idx >= np.array(shape)):
        raise ValueError("source raster indices fall outside raster_shape")
    on_surface = np.zeros(shape, dtype=bool)
    on_surface[tuple(grid_idx.T)] = True
    dist = ndimage.distance_transform_edt(~on_surface, sampling=spacing.as_array())
    return DistanceMap(dist=dist, spacing=spacing, source_empty=False)


def distances_to_other_surface(own: SurfaceElementList, other_map: DistanceMap) -> np.ndarray:
    """Pair every element of ``own`` with its distance to the other surface.

    Returns an (n, 2) array of rows (area mm^2, distance mm) in element
    order; distances are +inf when the other surface was empty.
    """
    grid_idx = own.raster_indices + 1
    if np.any(grid_idx < 0) or np.any(grid_idx >= np.array(other_map.shape)):
        raise ValueError("own raster indices fall outside the distance map")
    dists = other_map.dist[tuple(grid_idx.T)]
    return np.column_stack([own.areas, dists])

"""Surface extraction on the half-voxel-shifted raster.

Every point of the shifted raster sits at ``((i+1/2)dx, (j+1/2)dy, (k+1/2)dz)``
for ``i in -1..nx-1`` (and likewise y, z) and sees the 2x2x2 block of voxels
around it; voxels outside the grid count as background, so a mask touching the
grid boundary still produces its boundary surface. The 8 neighbor states form
a configuration code (bit b set means the voxel at offset
``(b & 1, b >> 1 & 1, b >> 2 & 1)`` is foreground) that indexes a 256-entry
table of marching-cubes triangle areas for a cell of physical size
dx x dy x dz, with triangle vertices at edge midpoints.

Dense raster arrays index point ``(i, j, k)`` at ``[i+1, j+1, k+1]`` and have
shape ``(nx+1, ny+1, nz+1)``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Iterator, NamedTuple

import numpy as np

from ._mc_tables import CORNER_OFFSETS, EDGE_CORNERS, TRI_TABLE
from .errors import GridMismatchError
from .grid import Mask, Spacing

# Configuration bit b -> corner index of the triangulation tables, matching
# offsets (b & 1, b >> 1 & 1, b >> 2 & 1) to CORNER_OFFSETS.
_BIT_TO_CORNER = (0, 1, 3, 2, 4, 5, 7, 6)


@dataclass(frozen=True)
class NeighborAreaTable:
    """Surface area (mm^2) contributed by each of the 256 neighbor codes."""

    spacing: Spacing
    area: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.area, dtype=np.float64)
        if a.shape != (256,):
            raise ValueError("area table must have 256 entries")
        a = np.ascontiguousarray(a)
        a.flags.writeable = False
        object.__setattr__(self, "area", a)


class SurfaceElement(NamedTuple):
    raster_index: tuple[int, int, int]
    position: tuple[float, float, float]
    config: int
    area: float


@dataclass(frozen=True)
class SurfaceElementList:
    """Surface elements of one mask, in raster-lexicographic order.

    Stored as parallel arrays: ``raster_indices`` holds the shifted-raster
    coordinates (values in -1..n-1 per axis), ``configs`` the neighbor codes,
    ``areas`` the per-element areas in mm^2.
    """

    raster_indices: np.ndarray
    configs: np.ndarray
    areas: np.ndarray
    spacing: Spacing
    raster_shape: tuple[int, int, int]
    total_area: float

    def __len__(self) -> int:
        return len(self.areas)

    def positions(self) -> np.ndarray:
        """Physical element positions, one (x, y, z) mm row per element."""
        return (self.raster_indices + 0.5) * self.spacing.as_array()

    def elements(self) -> Iterator[SurfaceElement]:
        for idx, cfg, area in zip(self.raster_indices, self.configs, self.areas):
            pos = (idx + 0.5) * self.spacing.as_array()
            yield SurfaceElement(tuple(int(v) for v in idx), tuple(pos), int(cfg), float(area))


def _triangles(config_corners_inside: int) -> list[np.ndarray]:
    """Unit-cell triangles for a canonical-corner configuration, vertices at
    edge midpoints in the unit cube."""
    row = TRI_TABLE[config_corners_inside]
    tris = []
    for t in range(0, 16, 3):
        if row[t] < 0:
            break
        verts = []
        for e in row[t:t + 3]:
            c0, c1 = EDGE_CORNERS[e]
            p0 = np.array(CORNER_OFFSETS[c0], dtype=np.float64)
            p1 = np.array(CORNER_OFFSETS[c1], dtype=np.float64)
            verts.append(0.5 * (p0 + p1))
        tris.append(np.array(verts))
    return tris


def build_area_table(spacing: Spacing) -> NeighborAreaTable:
    """Triangulate all 256 neighbor configurations for a cell of physical
    size dx x dy x dz and sum the triangle areas."""
    scale = spacing.as_array()
    area = np.zeros(256, dtype=np.float64)
    for code in range(256):
        canonical = 0
        for b in range(8):
            if code >> b & 1:
                canonical |= 1 << _BIT_TO_CORNER[b]
        total = 0.0
        for tri in _triangles(canonical):
            v0, v1, v2 = tri * scale
            cross = np.cross(v1 - v0, v2 - v0)
            total += 0.5 * float(np.sqrt(np.dot(cross, cross)))
        area[code] = total
    return NeighborAreaTable(spacing=spacing, area=area)


def neighbor_config_grid(occupancy: np.ndarray) -> np.ndarray:
    """8-bit neighbor code of every shifted-raster point, shape (nx+1, ny+1, nz+1)."""
    nx, ny, nz = occupancy.shape
    padded = np.zeros((nx + 2, ny + 2, nz + 2), dtype=np.uint8)
    padded[1:-1, 1:-1, 1:-1] = occupancy
    config = np.zeros((nx + 1, ny + 1, nz + 1), dtype=np.uint8)
    for b in range(8):
        ox, oy, oz = b & 1, b >> 1 & 1, b >> 2 & 1
        config |= padded[ox:ox + nx + 1, oy:oy + ny + 1, oz:oz + nz + 1] << np.uint8(b)
    return config


def extract_surface(m: Mask, table: NeighborAreaTable | None = None) -> SurfaceElementList:
    """All shifted-raster points of ``m`` whose neighbor code has nonzero
    table area, with their areas. Builds the table when not handed one."""
    if table is None:
        table = build_area_table(m.spacing)
    if not m.spacing.isclose(table.spacing):
        raise GridMismatchError(
            f"table built for spacing {tuple(table.spacing)}, mask has {tuple(m.spacing)}"
        )
    config = neighbor_config_grid(m.occupancy)
    areas = table.area[config]
    keep = np.argwhere(areas > 0)
    kept_configs = config[tuple(keep.T)]
    kept_areas = areas[tuple(keep.T)]
    return SurfaceElementList(
        raster_indices=keep - 1,
        configs=kept_configs,
        areas=kept_areas,
        spacing=m.spacing,
        raster_shape=config.shape,
        total_area=float(np.sum(kept_areas)),
    )


def total_surface_area(m: Mask, table: NeighborAreaTable | None = None) -> float:
    """Total surface area of the mask in mm^2."""
    return extract_surface(m, table).total_area


def dump_area_table(table: NeighborAreaTable, path) -> None:
    """Write the 256-entry table as CSV (config, area_mm2) for auditing."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["config", "area_mm2"])
        for code in range(256):
            writer.writerow([code, repr(float(table.area[code]))])

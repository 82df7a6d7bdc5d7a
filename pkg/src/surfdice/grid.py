"""Voxel-grid data model: masks, CT volumes, multi-organ segmentations,
sparse per-slice labels, and the organ taxonomy.

Arrays are indexed ``[x, y, z]`` throughout the package; the same order is
used by surface extraction, distance transforms, and file I/O. Voxel
``(x, y, z)`` has its center at physical position ``(x*dx, y*dy, z*dz)`` mm.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import GridMismatchError, SparseLabelError

# Relative spacing tolerance: clinical headers carry float32 rounding noise.
SPACING_RTOL = 1e-6

_AXES = "xyz"


@dataclass(frozen=True)
class Spacing:
    """Physical voxel size in millimetres along x, y, z."""

    dx: float
    dy: float
    dz: float

    def __post_init__(self):
        for name, d in zip(_AXES, self):
            if not (d > 0 and np.isfinite(d)):
                raise ValueError(f"spacing d{name} must be positive and finite, got {d!r}")

    def __iter__(self):
        return iter((self.dx, self.dy, self.dz))

    def as_array(self) -> np.ndarray:
        return np.array([self.dx, self.dy, self.dz], dtype=np.float64)

    def scaled(self, s: float) -> "Spacing":
        return Spacing(self.dx * s, self.dy * s, self.dz * s)

    def isclose(self, other: "Spacing", rtol: float = SPACING_RTOL) -> bool:
        return all(abs(a - b) <= rtol * max(abs(a), abs(b)) for a, b in zip(self, other))


@dataclass(frozen=True)
class GridShape:
    """Voxel counts per axis."""

    nx: int
    ny: int
    nz: int

    def __post_init__(self):
        for name, n in zip(_AXES, self):
            if not (isinstance(n, (int, np.integer)) and n >= 1):
                raise ValueError(f"grid extent n{name} must be a positive integer, got {n!r}")
        if self.nx * self.ny * self.nz > np.iinfo(np.int64).max:
            raise ValueError("grid voxel count overflows a 64-bit counter")

    def __iter__(self):
        return iter((self.nx, self.ny, self.nz))

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.nx, self.ny, self.nz)


def _frozen_array(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class Mask:
    """Binary occupancy grid with physical spacing. Immutable once built."""

    occupancy: np.ndarray
    spacing: Spacing

    def __post_init__(self):
        occ = np.asarray(self.occupancy)
        if occ.ndim != 3:
            raise ValueError(f"occupancy must be a 3D array, got ndim={occ.ndim}")
        if occ.dtype != np.bool_:
            vals = np.unique(occ)
            if not np.isin(vals, (0, 1)).all():
                raise ValueError("occupancy must be binary")
            occ = occ.astype(np.bool_)
        object.__setattr__(self, "occupancy", _frozen_array(occ))

    @property
    def shape(self) -> GridShape:
        return GridShape(*map(int, self.occupancy.shape))

    def voxel_count(self) -> int:
        return int(np.count_nonzero(self.occupancy))

    def is_empty(self) -> bool:
        return not self.occupancy.any()


@dataclass(frozen=True)
class CtVolume:
    """Scalar intensity grid in Hounsfield units on the same layout as Mask."""

    intensities: np.ndarray
    spacing: Spacing

    def __post_init__(self):
        vol = np.asarray(self.intensities)
        if vol.ndim != 3:
            raise ValueError(f"intensities must be a 3D array, got ndim={vol.ndim}")
        object.__setattr__(self, "intensities", _frozen_array(vol.astype(np.float32)))

    @property
    def shape(self) -> GridShape:
        return GridShape(*map(int, self.intensities.shape))


# Head-and-neck organ-at-risk naming used throughout; left/right pairs are
# the channels exchanged when a volume is mirrored along x.
HEAD_NECK_ORGANS: tuple[str, ...] = (
    "Brain",
    "Brainstem",
    "Cochlea-Lt",
    "Cochlea-Rt",
    "Lacrimal-Lt",
    "Lacrimal-Rt",
    "Lens-Lt",
    "Lens-Rt",
    "Lung-Lt",
    "Lung-Rt",
    "Mandible",
    "Optic-Nerve-Lt",
    "Optic-Nerve-Rt",
    "Orbit-Lt",
    "Orbit-Rt",
    "Parotid-Lt",
    "Parotid-Rt",
    "Spinal-Canal",
    "Spinal-Cord",
    "Submandibular-Lt",
    "Submandibular-Rt",
)

HEAD_NECK_PAIRS: tuple[tuple[str, str], ...] = (
    ("Cochlea-Lt", "Cochlea-Rt"),
    ("Lacrimal-Lt", "Lacrimal-Rt"),
    ("Lens-Lt", "Lens-Rt"),
    ("Lung-Lt", "Lung-Rt"),
    ("Optic-Nerve-Lt", "Optic-Nerve-Rt"),
    ("Orbit-Lt", "Orbit-Rt"),
    ("Parotid-Lt", "Parotid-Rt"),
    ("Submandibular-Lt", "Submandibular-Rt"),
)


@dataclass(frozen=True)
class OrganTaxonomy:
    """Known organ names plus their left/right pairing."""

    organs: tuple[str, ...] = HEAD_NECK_ORGANS
    pairs: tuple[tuple[str, str], ...] = HEAD_NECK_PAIRS

    def __post_init__(self):
        if len(set(self.organs)) != len(self.organs):
            raise ValueError("duplicate organ names in taxonomy")
        for a, b in self.pairs:
            if a not in self.organs or b not in self.organs:
                raise ValueError(f"pair ({a}, {b}) names an organ outside the taxonomy")

    def __contains__(self, organ: str) -> bool:
        return organ in self.organs

    def mirror_name(self, organ: str) -> str:
        """Counterpart under a left/right mirror; unpaired organs map to themselves."""
        for a, b in self.pairs:
            if organ == a:
                return b
            if organ == b:
                return a
        return organ


DEFAULT_TAXONOMY = OrganTaxonomy()


@dataclass(frozen=True)
class MultiOrganSegmentation:
    """Per-organ masks on one shared grid. Channels may overlap."""

    channels: dict[str, Mask]
    taxonomy: OrganTaxonomy = field(default=DEFAULT_TAXONOMY)

    def __post_init__(self):
        if not self.channels:
            raise ValueError("segmentation needs at least one channel")
        first = None
        for organ, mask in self.channels.items():
            if organ not in self.taxonomy:
                raise ValueError(f"unknown organ {organ!r}")
            if first is None:
                first = mask
            else:
                validate_compatible(first, mask)

    @property
    def spacing(self) -> Spacing:
        return next(iter(self.channels.values())).spacing

    @property
    def shape(self) -> GridShape:
        return next(iter(self.channels.values())).shape


@dataclass(frozen=True)
class SparseLabels:
    """Ground truth defined only on a union of full grid planes.

    ``labelled`` marks where annotations exist; ``values`` is the foreground
    and must vanish outside ``labelled``. Any labelled voxel must lie on at
    least one axial, coronal, or sagittal plane that is labelled end to end,
    so arbitrary labelled blobs are rejected up front.
    """

    labelled: Mask
    values: Mask

    def __post_init__(self):
        validate_compatible(self.labelled, self.values)
        lab = self.labelled.occupancy
        if np.any(self.values.occupancy & ~lab):
            raise SparseLabelError("foreground voxels outside the labelled region")
        if lab.any():
            covered = np.zeros_like(lab)
            for axis in range(3):
                full = lab.all(axis=tuple(a for a in range(3) if a != axis))
                sl = [np.newaxis] * 3
                sl[axis] = slice(None)
                covered |= full[tuple(sl)]
            if np.any(lab & ~covered):
                raise SparseLabelError("labelled region is not a union of full grid planes")


@dataclass(frozen=True)
class VoxelBox:
    """Axis-aligned voxel index range, inclusive on both ends."""

    lo: tuple[int, int, int]
    hi: tuple[int, int, int]

    def __post_init__(self):
        if any(l > h for l, h in zip(self.lo, self.hi)):
            raise ValueError(f"degenerate box {self.lo}..{self.hi}")

    @property
    def slices(self) -> tuple[slice, slice, slice]:
        return tuple(slice(l, h + 1) for l, h in zip(self.lo, self.hi))

    def union(self, other: "VoxelBox") -> "VoxelBox":
        return VoxelBox(
            tuple(min(a, b) for a, b in zip(self.lo, other.lo)),
            tuple(max(a, b) for a, b in zip(self.hi, other.hi)),
        )


def mask_volume(m: Mask) -> float:
    """Physical foreground volume in mm^3."""
    return m.voxel_count() * m.spacing.dx * m.spacing.dy * m.spacing.dz


def bounding_box(m: Mask, pad_voxels: int = 0) -> VoxelBox | None:
    """Smallest voxel box holding all foreground, padded and clamped to the
    grid. None for an empty mask."""
    if pad_voxels < 0:
        raise ValueError("pad_voxels must be >= 0")
    if m.is_empty():
        return None
    lo = []
    hi = []
    for axis, n in enumerate(m.shape):
        proj = np.any(m.occupancy, axis=tuple(a for a in range(3) if a != axis))
        idx = np.nonzero(proj)[0]
        lo.append(max(int(idx[0]) - pad_voxels, 0))
        hi.append(min(int(idx[-1]) + pad_voxels, n - 1))
    return VoxelBox(tuple(lo), tuple(hi))


def validate_compatible(a: Mask | CtVolume, b: Mask | CtVolume) -> None:
    """Raise GridMismatchError unless shapes match and spacings agree to
    relative 1e-6 per axis."""
    for name, na, nb in zip(_AXES, a.shape, b.shape):
        if na != nb:
            raise GridMismatchError(f"shape mismatch on {name}: {na} vs {nb}")
    for name, da, db in zip(_AXES, a.spacing, b.spacing):
        if abs(da - db) > SPACING_RTOL * max(abs(da), abs(db)):
            raise GridMismatchError(f"spacing mismatch on {name}: {da!r} vs {db!r}")

"""Geometric and intensity perturbations: in-plane affine and elastic
deformation fields, warping, left/right mirroring with label exchange, and
Gaussian intensity noise.

Deformation fields store, per output voxel, the displacement (mm) added to
the voxel's position to find the input sample point; warping pulls values
back through that map. All stochastic operations take an explicit seed and
draw from a counter-based generator (Philox), so results are reproducible
across platforms and parallel splits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

import numpy as np
from scipy import ndimage

from .errors import GridMismatchError
from .grid import CtVolume, Mask, MultiOrganSegmentation, Spacing

_RANGE_FIELDS = ("translation_px", "rotation_deg", "scale", "shear")


@dataclass(frozen=True)
class AugmentationConfig:
    """Sampling ranges for the perturbation chain. Seed is mandatory."""

    seed: int
    translation_px: tuple[float, float] = (-32.0, 32.0)
    rotation_deg: tuple[float, float] = (-9.0, 9.0)
    scale: tuple[float, float] = (0.8, 1.2)
    shear: tuple[float, float] = (-0.1, 0.1)
    mirror_prob: float = 0.5
    elastic_spacing_mm: float = 100.0
    elastic_sigma_mm: float = 5.0
    noise_sigma_hu: float = 20.0

    def __post_init__(self):
        if not isinstance(self.seed, (int, np.integer)):
            raise ValueError("seed must be an integer")
        for name in _RANGE_FIELDS:
            lo, hi = getattr(self, name)
            if not lo < hi:
                raise ValueError(f"degenerate {name} range ({lo}, {hi})")
        if not 0.0 <= self.mirror_prob <= 1.0:
            raise ValueError(f"mirror_prob must be in [0, 1], got {self.mirror_prob}")
        if self.elastic_spacing_mm <= 0:
            raise ValueError("elastic control spacing must be positive")
        if self.elastic_sigma_mm < 0 or self.noise_sigma_hu < 0:
            raise ValueError("sigmas must be non-negative")

    def to_json(self) -> dict[str, Any]:
        return {
            "seed": int(self.seed),
            "translation_px": list(self.translation_px),
            "rotation_deg": list(self.rotation_deg),
            "scale": list(self.scale),
            "shear": list(self.shear),
            "mirror_prob": self.mirror_prob,
            "elastic_spacing_mm": self.elastic_spacing_mm,
            "elastic_sigma_mm": self.elastic_sigma_mm,
            "noise_sigma_hu": self.noise_sigma_hu,
        }

    @classmethod
    def from_json(cls, doc: dict[str, Any]) -> "AugmentationConfig":
        kwargs = dict(doc)
        for name in _RANGE_FIELDS:
            if name in kwargs:
                kwargs[name] = tuple(kwargs[name])
        return cls(**kwargs)


@dataclass(frozen=True)
class AffineParams:
    """One sampled in-plane affine transform; translation is in pixels."""

    translation_px: tuple[float, float] = (0.0, 0.0)
    rotation_deg: float = 0.0
    scale: float = 1.0
    shear: float = 0.0

    def matrix(self) -> np.ndarray:
        """2x2 in-plane linear part: rotation @ scaling @ shear."""
        theta = math.radians(self.rotation_deg)
        rot = np.array([[math.cos(theta), -math.sin(theta)],
                        [math.sin(theta), math.cos(theta)]])
        sca = np.array([[self.scale, 0.0], [0.0, self.scale]])
        shr = np.array([[1.0, self.shear], [0.0, 1.0]])
        return rot @ sca @ shr


@dataclass(frozen=True)
class DeformationField:
    """Dense per-voxel displacement (mm), one (dx, dy, dz) triple per voxel."""

    displacement: np.ndarray
    spacing: Spacing

    def __post_init__(self):
        disp = np.asarray(self.displacement, dtype=np.float64)
        if disp.ndim != 4 or disp.shape[3] != 3:
            raise ValueError("displacement must have shape (nx, ny, nz, 3)")
        disp = np.ascontiguousarray(disp)
        disp.flags.writeable = False
        object.__setattr__(self, "displacement", disp)

    @property
    def grid_shape(self) -> tuple[int, int, int]:
        return self.displacement.shape[:3]


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(int(seed)))


def sample_affine_params(config: AugmentationConfig, rng: np.random.Generator) -> AffineParams:
    return AffineParams(
        translation_px=(rng.uniform(*config.translation_px), rng.uniform(*config.translation_px)),
        rotation_deg=rng.uniform(*config.rotation_deg),
        scale=rng.uniform(*config.scale),
        shear=rng.uniform(*config.shear),
    )


def affine_field(params: AffineParams, shape, spacing: Spacing) -> DeformationField:
    """Dense field of the in-plane affine map about the volume's xy-center.

    A voxel at offset p from the center samples from A @ p + t, so the
    displacement is (A - I) @ p + t; identity parameters give an exactly
    zero field. The translation is converted from pixels to mm.
    """
    nx, ny, nz = (int(n) for n in shape)
    amat = params.matrix() - np.eye(2)
    tx = params.translation_px[0] * spacing.dx
    ty = params.translation_px[1] * spacing.dy
    cx = 0.5 * (nx - 1) * spacing.dx
    cy = 0.5 * (ny - 1) * spacing.dy
    px = (np.arange(nx) * spacing.dx - cx).reshape(-1, 1)
    py = (np.arange(ny) * spacing.dy - cy).reshape(1, -1)
    disp_x = amat[0, 0] * px + amat[0, 1] * py + tx
    disp_y = amat[1, 0] * px + amat[1, 1] * py + ty
    disp = np.zeros((nx, ny, nz, 3), dtype=np.float64)
    disp[..., 0] = disp_x[:, :, np.newaxis]
    disp[..., 1] = disp_y[:, :, np.newaxis]
    return DeformationField(displacement=disp, spacing=spacing)


def _densify_controls(controls: np.ndarray, shape, spacing: Spacing, pitch_mm: float) -> np.ndarray:
    """Interpolate in-plane control vectors on a coarse physical lattice to a
    dense per-voxel field with an interpolating cubic b-spline."""
    nx, ny, nz = (int(n) for n in shape)
    coords = [np.arange(n) * d / pitch_mm for n, d in zip((nx, ny, nz), spacing)]
    mesh = np.meshgrid(*coords, indexing="ij")
    disp = np.zeros((nx, ny, nz, 3), dtype=np.float64)
    for c in range(2):
        disp[..., c] = ndimage.map_coordinates(
            controls[..., c], mesh, order=3, mode="nearest")
    return disp


def elastic_field(config: AugmentationConfig, shape, spacing: Spacing, seed: int) -> DeformationField:
    """Random smooth in-plane field: i.i.d. Gaussian control vectors on a
    lattice with ``config.elastic_spacing_mm`` pitch, spline-interpolated to
    the voxel grid. Deterministic per seed."""
    nx, ny, nz = (int(n) for n in shape)
    pitch = config.elastic_spacing_mm
    rng = _rng(seed)
    n_ctrl = [max(2, math.ceil((n - 1) * d / pitch) + 1) for n, d in zip((nx, ny, nz), spacing)]
    controls = np.zeros((*n_ctrl, 3), dtype=np.float64)
    controls[..., :2] = rng.normal(0.0, config.elastic_sigma_mm, size=(*n_ctrl, 2))
    disp = _densify_controls(controls, (nx, ny, nz), spacing, pitch)
    return DeformationField(displacement=disp, spacing=spacing)


def compose_fields(outer: DeformationField, inner: DeformationField) -> DeformationField:
    """Field of applying ``outer`` first, then ``inner`` from the displaced
    positions: p + c(p) = (p + outer(p)) + inner(p + outer(p)).

    The usual chain puts the affine field as ``outer`` and the elastic field
    as ``inner``. ``inner`` is sampled off-grid by trilinear interpolation
    with edge clamping.
    """
    if outer.grid_shape != inner.grid_shape:
        raise GridMismatchError(
            f"field shapes differ: {outer.grid_shape} vs {inner.grid_shape}")
    if not outer.spacing.isclose(inner.spacing):
        raise GridMismatchError("field spacings differ")
    d = outer.spacing.as_array()
    shape = outer.grid_shape
    base = np.meshgrid(*(np.arange(n, dtype=np.float64) for n in shape), indexing="ij")
    coords = [base[axis] + outer.displacement[..., axis] / d[axis] for axis in range(3)]
    sampled = np.empty_like(inner.displacement)
    for axis in range(3):
        sampled[..., axis] = ndimage.map_coordinates(
            inner.displacement[..., axis], coords, order=1, mode="nearest")
    return DeformationField(displacement=outer.displacement + sampled, spacing=outer.spacing)


def _pullback_coords(f: DeformationField) -> list[np.ndarray]:
    d = f.spacing.as_array()
    base = np.meshgrid(*(np.arange(n, dtype=np.float64) for n in f.grid_shape), indexing="ij")
    return [base[axis] + f.displacement[..., axis] / d[axis] for axis in range(3)]


def warp_ct(v: CtVolume, f: DeformationField) -> CtVolume:
    """Resample a volume through the field with trilinear interpolation;
    samples outside the grid read 0."""
    if v.shape.as_tuple() != f.grid_shape:
        raise GridMismatchError(f"volume shape {v.shape.as_tuple()} vs field {f.grid_shape}")
    if not v.spacing.isclose(f.spacing):
        raise GridMismatchError("volume and field spacings differ")
    warped = ndimage.map_coordinates(
        v.intensities, _pullback_coords(f), order=1, mode="constant", cval=0.0)
    return CtVolume(intensities=warped, spacing=v.spacing)


def warp_mask(m: Mask, f: DeformationField, method: str = "linear") -> Mask:
    """Resample a mask through the field.

    ``linear`` interpolates the {0,1} occupancy and keeps voxels >= 0.5;
    ``nearest`` copies the nearest voxel.
    """
    if m.shape.as_tuple() != f.grid_shape:
        raise GridMismatchError(f"mask shape {m.shape.as_tuple()} vs field {f.grid_shape}")
    if not m.spacing.isclose(f.spacing):
        raise GridMismatchError("mask and field spacings differ")
    coords = _pullback_coords(f)
    if method == "linear":
        dense = ndimage.map_coordinates(
            m.occupancy.astype(np.float64), coords, order=1, mode="constant", cval=0.0)
        occ = dense >= 0.5
    elif method == "nearest":
        occ = ndimage.map_coordinates(
            m.occupancy.astype(np.uint8), coords, order=0, mode="constant", cval=0)
    else:
        raise ValueError(f"unknown mask warp method {method!r}")
    return Mask(occupancy=occ, spacing=m.spacing)


def mirror_with_label_swap(s: MultiOrganSegmentation, axis: str = "x") -> MultiOrganSegmentation:
    """Mirror every channel along x and exchange left/right organ labels."""
    if axis != "x":
        raise ValueError("only the x axis is mirrored")
    channels = {}
    for organ, mask in s.channels.items():
        channels[s.taxonomy.mirror_name(organ)] = Mask(
            occupancy=mask.occupancy[::-1, :, :], spacing=mask.spacing)
    return MultiOrganSegmentation(channels=channels, taxonomy=s.taxonomy)


def add_noise(v: CtVolume, sigma: float = 20.0, seed: int = 0) -> CtVolume:
    """Add i.i.d. zero-mean Gaussian noise (HU) to every voxel."""
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    noise = _rng(seed).normal(0.0, sigma, size=v.intensities.shape)
    return CtVolume(intensities=v.intensities.astype(np.float64) + noise, spacing=v.spacing)


def random_deformation(config: AugmentationConfig, shape, spacing: Spacing) -> DeformationField:
    """Seed-determined elastic-after-affine field sampled from the config."""
    rng = _rng(config.seed)
    params = sample_affine_params(config, rng)
    affine = affine_field(params, shape, spacing)
    elastic = elastic_field(config, shape, spacing, seed=int(rng.integers(2 ** 63)))
    return compose_fields(affine, elastic)

export interface Spacing {
  dx: number;
  dy: number;
  dz: number;
}

/**
 * A binary mask on a regular 3D grid.
 *
 * `data` is laid out x-fastest (Fortran order), the same layout the NIfTI
 * payload uses, so writing a mask is a straight copy: the voxel (x, y, z)
 * lives at index x + nx * (y + ny * z). Values must be 0 or 1.
 */
export interface VoxelMask {
  shape: [number, number, number];
  spacing: Spacing;
  data: Uint8Array;
}

export function makeMask(shape: [number, number, number], spacing: Spacing): VoxelMask {
  const [nx, ny, nz] = shape;
  if (!(nx >= 1 && ny >= 1 && nz >= 1)) {
    throw new Error(`mask shape must be positive, got ${shape.join("x")}`);
  }
  for (const d of [spacing.dx, spacing.dy, spacing.dz]) {
    if (!(d > 0) || !Number.isFinite(d)) {
      throw new Error(`spacing must be positive and finite, got ${d}`);
    }
  }
  return { shape, spacing, data: new Uint8Array(nx * ny * nz) };
}

export function voxelIndex(mask: VoxelMask, x: number, y: number, z: number): number {
  const [nx, ny, nz] = mask.shape;
  if (x < 0 || y < 0 || z < 0 || x >= nx || y >= ny || z >= nz) {
    throw new Error(`voxel (${x}, ${y}, ${z}) outside ${nx}x${ny}x${nz}`);
  }
  return x + nx * (y + ny * z);
}

export function getVoxel(mask: VoxelMask, x: number, y: number, z: number): number {
  return mask.data[voxelIndex(mask, x, y, z)]!;
}

export function setVoxel(mask: VoxelMask, x: number, y: number, z: number, value: 0 | 1): void {
  mask.data[voxelIndex(mask, x, y, z)] = value;
}

export function sameGrid(a: VoxelMask, b: VoxelMask): boolean {
  return (
    a.shape[0] === b.shape[0] &&
    a.shape[1] === b.shape[1] &&
    a.shape[2] === b.shape[2] &&
    a.spacing.dx === b.spacing.dx &&
    a.spacing.dy === b.spacing.dy &&
    a.spacing.dz === b.spacing.dz
  );
}

/** Solid ball in physical mm, a convenient test organ. */
export function ballMask(
  shape: [number, number, number],
  center: [number, number, number],
  radiusMm: number,
  spacing: Spacing,
): VoxelMask {
  const mask = makeMask(shape, spacing);
  const d = [spacing.dx, spacing.dy, spacing.dz];
  const r2 = radiusMm * radiusMm;
  let i = 0;
  for (let z = 0; z < shape[2]; z++) {
    for (let y = 0; y < shape[1]; y++) {
      for (let x = 0; x < shape[0]; x++) {
        const tx = (x - center[0]) * d[0]!;
        const ty = (y - center[1]) * d[1]!;
        const tz = (z - center[2]) * d[2]!;
        mask.data[i++] = tx * tx + ty * ty + tz * tz <= r2 ? 1 : 0;
      }
    }
  }
  return mask;
}

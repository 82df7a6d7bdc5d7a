import { gzipSync } from "node:zlib";
import { writeFileSync } from "node:fs";

import type { VoxelMask } from "./grid.js";

const HEADER_SIZE = 348;
const VOX_OFFSET = 352; // header + 4-byte extension flag

/**
 * Serialize a mask as a single-file little-endian NIfTI-1 blob: uint8
 * payload in Fortran order, magic "n+1", voxel data at offset 352.
 * Only the fields the evaluator reads are populated; the rest stay zero.
 */
export function maskToNifti(mask: VoxelMask): Buffer {
  const [nx, ny, nz] = mask.shape;
  if (mask.data.length !== nx * ny * nz) {
    throw new Error(`mask data length ${mask.data.length} does not match shape ${nx}x${ny}x${nz}`);
  }
  for (const v of mask.data) {
    if (v !== 0 && v !== 1) throw new Error(`mask voxels must be 0 or 1, found ${v}`);
  }

  const header = Buffer.alloc(VOX_OFFSET); // trailing 4 zero bytes = no extensions
  header.writeInt32LE(HEADER_SIZE, 0); // sizeof_hdr
  header.writeInt16LE(3, 40); // dim[0]
  header.writeInt16LE(nx, 42);
  header.writeInt16LE(ny, 44);
  header.writeInt16LE(nz, 46);
  for (let k = 4; k < 8; k++) header.writeInt16LE(1, 40 + 2 * k);
  header.writeInt16LE(2, 70); // datatype uint8
  header.writeInt16LE(8, 72); // bitpix
  header.writeFloatLE(1.0, 76); // pixdim[0]
  header.writeFloatLE(mask.spacing.dx, 80);
  header.writeFloatLE(mask.spacing.dy, 84);
  header.writeFloatLE(mask.spacing.dz, 88);
  header.writeFloatLE(VOX_OFFSET, 108);
  header.writeFloatLE(1.0, 112); // scl_slope
  header.writeFloatLE(0.0, 116); // scl_inter
  header.writeUInt8(0x0a, 123); // xyzt_units: mm and seconds
  header.write("n+1\0", 344, 4, "latin1");

  // the in-memory layout is already x-fastest, so the payload is a copy
  return Buffer.concat([header, Buffer.from(mask.data)]);
}

/** Write a mask to `path`; gzipped (mtime 0, deterministic) when it ends in .gz. */
export function writeMaskNifti(mask: VoxelMask, path: string): void {
  let blob = maskToNifti(mask);
  if (path.endsWith(".gz")) {
    blob = gzipSync(blob);
  }
  writeFileSync(path, blob);
}

import { makeMask, type Spacing, type VoxelMask } from "./grid.js";

/** Mulberry32: tiny deterministic PRNG, plenty for test fixtures. */
export function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

export function randomMask(
  rand: () => number,
  shape: [number, number, number],
  spacing: Spacing,
  p = 0.4,
): VoxelMask {
  const mask = makeMask(shape, spacing);
  for (let i = 0; i < mask.data.length; i++) {
    mask.data[i] = rand() < p ? 1 : 0;
  }
  return mask;
}

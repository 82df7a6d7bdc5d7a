import { afterEach, describe, expect, it } from "vitest";

import {
  calibrateOrganTolerances,
  evaluateDataset,
  makeMask,
  quantizeTolerance,
  setVoxel,
  sparseVolumetricDsc,
  surfaceDsc,
  volumetricDsc,
  type DatasetPatient,
  type VoxelMask,
} from "../src/index.js";

const unit = { dx: 1, dy: 1, dz: 1 };

function singleVoxel(shape: [number, number, number], at: [number, number, number], spacing = unit): VoxelMask {
  const mask = makeMask(shape, spacing);
  setVoxel(mask, ...at, 1);
  return mask;
}

function box(
  shape: [number, number, number],
  lo: [number, number, number],
  hi: [number, number, number],
  spacing = unit,
): VoxelMask {
  const mask = makeMask(shape, spacing);
  for (let z = lo[2]; z < hi[2]; z++)
    for (let y = lo[1]; y < hi[1]; y++)
      for (let x = lo[0]; x < hi[0]; x++) setVoxel(mask, x, y, z, 1);
  return mask;
}

afterEach(() => {
  delete process.env.SURFDICE_BIN;
});

describe("quantizeTolerance", () => {
  it("snaps to the nearest attainable grid distance", () => {
    expect(quantizeTolerance(1.2, unit)).toBe(1.0);
    expect(Object.is(quantizeTolerance(1.5, unit), Math.SQRT2)).toBe(true);
  });

  it("breaks ties toward the smaller distance", () => {
    // 0.5 sits exactly between 0 and 1
    expect(quantizeTolerance(0.5, unit)).toBe(0.0);
  });

  it("respects anisotropy through the spacing", () => {
    const fine = { dx: 0.5, dy: 0.5, dz: 0.5 };
    expect(Object.is(quantizeTolerance(0.9, fine), Math.sqrt(0.75))).toBe(true);
  });
});

describe("surfaceDsc", () => {
  it("is 1 for identical masks and reports the voxel surface area", () => {
    const one = singleVoxel([3, 3, 3], [1, 1, 1]);
    const r = surfaceDsc(one, one, 1.0);
    expect(r.value).toBe(1.0);
    expect(r.volumetricDsc).toBe(1.0);
    expect(Object.is(r.totalArea1Mm2, Math.sqrt(3))).toBe(true);
    expect(r.totalArea2Mm2).toBe(r.totalArea1Mm2);
    expect(r.overlapArea1Mm2).toBe(r.totalArea1Mm2);
    expect(r.volume1Mm3).toBe(1.0);
    expect(r.flags).toEqual([]);
  });

  it("crosses from 0 to 1 as the tolerance passes the separation", () => {
    const a = singleVoxel([8, 4, 4], [0, 0, 0]);
    const b = singleVoxel([8, 4, 4], [3, 0, 0]);
    expect(surfaceDsc(a, b, 1.0).value).toBe(0.0);
    expect(surfaceDsc(a, b, 2.0).value).toBe(0.5);
    expect(surfaceDsc(a, b, 3.0).value).toBe(1.0);
    expect(volumetricDsc(a, b)).toBe(0.0);
  });

  it("returns null with a flag when both masks are empty", () => {
    const empty = makeMask([3, 3, 3], unit);
    const r = surfaceDsc(empty, empty, 1.0);
    expect(r.value).toBeNull();
    expect(r.volumetricDsc).toBeNull();
    expect(r.totalArea1Mm2).toBe(0.0);
    expect(r.tauQuantizedMm).toBe(1.0);
    expect(r.flags).toEqual(["both-empty"]);
  });

  it("rejects mismatched grids locally", () => {
    const a = makeMask([3, 3, 3], unit);
    const b = makeMask([4, 3, 3], unit);
    expect(() => surfaceDsc(a, b, 1.0)).toThrow(/share/);
  });

  it("rejects a negative tolerance locally", () => {
    const a = makeMask([3, 3, 3], unit);
    expect(() => surfaceDsc(a, a, -1)).toThrow(/tolerance/);
  });
});

describe("volumetricDsc", () => {
  it("matches the overlap ratio of two boxes", () => {
    // 2x2x2 cubes overlapping in a 1x2x2 slab: 2*4 / (8+8)
    const a = box([4, 4, 4], [0, 0, 0], [2, 2, 2]);
    const b = box([4, 4, 4], [1, 0, 0], [3, 2, 2]);
    expect(volumetricDsc(a, b)).toBe(0.5);
  });
});

describe("calibrateOrganTolerances", () => {
  it("is zero for observers in perfect agreement", () => {
    const cube = box([6, 6, 6], [2, 2, 2], [4, 4, 4]);
    const patients: DatasetPatient[] = [
      {
        patientId: "p1",
        scanId: "s1",
        segmentations: { alice: { organ: cube }, bob: { organ: cube } },
      },
    ];
    expect(calibrateOrganTolerances(patients)).toEqual({ organ: 0.0 });
  });

  it("finds the one-voxel shift between two observers", () => {
    const cube = box([8, 8, 8], [2, 2, 2], [6, 6, 6]);
    const shifted = box([8, 8, 8], [3, 2, 2], [7, 6, 6]);
    const patients: DatasetPatient[] = [
      {
        patientId: "p1",
        scanId: "s1",
        segmentations: { alice: { organ: cube }, bob: { organ: shifted } },
      },
    ];
    expect(calibrateOrganTolerances(patients)).toEqual({ organ: 1.0 });
    expect(calibrateOrganTolerances(patients, { unweighted: true })).toEqual({ organ: 1.0 });
  });
});

describe("evaluateDataset", () => {
  const patients: DatasetPatient[] = [
    {
      patientId: "p1",
      scanId: "s1",
      segmentations: {
        gold: { organ: box([6, 6, 6], [1, 1, 1], [4, 4, 4]) },
        auto: { organ: box([6, 6, 6], [2, 1, 1], [5, 4, 4]) },
      },
    },
    {
      patientId: "p2",
      scanId: "s1",
      segmentations: {
        gold: { organ: singleVoxel([6, 6, 6], [3, 3, 3]) },
        auto: { organ: singleVoxel([6, 6, 6], [3, 3, 3]) },
      },
    },
  ];

  it("evaluates every patient against the reference", () => {
    const result = evaluateDataset(patients, {
      reference: "gold",
      candidates: ["auto"],
      defaultTauMm: 1.0,
    });
    expect(result.caseErrors).toBe(false);
    expect(result.rows).toHaveLength(2);
    expect(result.aggregates).toHaveLength(2);
    expect(result.csv.startsWith("patient,scan,organ,pair,")).toBe(true);
    const p2 = result.rows.find((r) => r.patient === "p2")!;
    expect(p2.surfaceDsc).toBe(1.0);
    expect(p2.pair).toBe("gold-vs-auto");
  });

  it("applies per-organ tolerances from a spec", () => {
    const result = evaluateDataset(patients, {
      reference: "gold",
      candidates: ["auto"],
      tolerances: { organ: 1.5 },
    });
    for (const row of result.rows) {
      expect(row.tauMm).toBe(1.5);
      expect(Object.is(row.tauQuantizedMm, Math.SQRT2)).toBe(true);
    }
  });

  it("is deterministic across runs and worker counts", () => {
    const opts = { reference: "gold", candidates: ["auto"], defaultTauMm: 1.0 };
    const first = evaluateDataset(patients, { ...opts, jobs: 1 });
    const second = evaluateDataset(patients, { ...opts, jobs: 1 });
    const wide = evaluateDataset(patients, { ...opts, jobs: 4 });
    expect(second.csv).toBe(first.csv);
    expect(wide.csv).toBe(first.csv);
  });

  it("flags failed cases instead of throwing", () => {
    const mismatched: DatasetPatient[] = [
      {
        patientId: "p1",
        scanId: "s1",
        segmentations: {
          gold: { organ: makeMask([4, 4, 4], unit) },
          auto: { organ: makeMask([5, 4, 4], unit) },
        },
      },
    ];
    const result = evaluateDataset(mismatched, {
      reference: "gold",
      candidates: ["auto"],
      defaultTauMm: 1.0,
    });
    expect(result.caseErrors).toBe(true);
    expect(result.rows[0]!.flags).toContain("grid-mismatch");
    expect(result.rows[0]!.surfaceDsc).toBeNull();
  });

  it("requires exactly one tolerance source", () => {
    expect(() => evaluateDataset(patients, { reference: "gold" })).toThrow(/exactly one/);
    expect(() =>
      evaluateDataset(patients, { reference: "gold", defaultTauMm: 1, tolerances: { organ: 1 } }),
    ).toThrow(/exactly one/);
  });

  it("surfaces CLI rejections with their stderr", () => {
    expect(() =>
      evaluateDataset(patients, { reference: "gold", candidates: ["gold"], defaultTauMm: 1 }),
    ).toThrow(/must differ/);
  });
});

describe("sparseVolumetricDsc", () => {
  it("equals the dense score when every voxel is labelled", () => {
    const full = box([5, 5, 5], [0, 0, 0], [5, 5, 5]);
    const values = box([5, 5, 5], [1, 1, 1], [4, 4, 4]);
    const prediction = box([5, 5, 5], [2, 1, 1], [5, 4, 4]);
    const sparse = sparseVolumetricDsc([{ labelled: full, values, prediction }]);
    expect(Object.is(sparse, volumetricDsc(values, prediction))).toBe(true);
  });

  it("pools intersections and sizes across cases", () => {
    // case 1: 3 truth voxels, 3 disjoint predicted ones -> 0 of 6
    // case 2: a single agreeing voxel -> 2 of 2
    // pooled: 2 * 1 / 8
    const full = box([3, 3, 3], [0, 0, 0], [3, 3, 3]);
    const case1 = {
      labelled: full,
      values: box([3, 3, 3], [0, 0, 0], [3, 1, 1]),
      prediction: box([3, 3, 3], [0, 2, 2], [3, 3, 3]),
    };
    const case2 = {
      labelled: full,
      values: singleVoxel([3, 3, 3], [1, 1, 1]),
      prediction: singleVoxel([3, 3, 3], [1, 1, 1]),
    };
    expect(sparseVolumetricDsc([case1, case2])).toBe(0.25);
  });

  it("is null when the labelled region decides nothing", () => {
    const empty = makeMask([3, 3, 3], unit);
    const prediction = singleVoxel([3, 3, 3], [0, 0, 0]);
    expect(sparseVolumetricDsc([{ labelled: empty, values: empty, prediction }])).toBeNull();
  });

  it("requires at least one case", () => {
    expect(() => sparseVolumetricDsc([])).toThrow(/at least one/);
  });
});

describe("runner environment", () => {
  it("reports a missing binary clearly", () => {
    process.env.SURFDICE_BIN = "/nonexistent/surfdice";
    const one = singleVoxel([3, 3, 3], [1, 1, 1]);
    expect(() => surfaceDsc(one, one, 1.0)).toThrow(/could not run/);
  });
});

import { mkdtempSync, readFileSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { makeMask, sameGrid, setVoxel, type Spacing, type VoxelMask } from "./grid.js";
import { writeMaskNifti } from "./nifti.js";
import { parseReportCsv, type ParsedReport, type ReportRow } from "./csv.js";
import { runSurfdice } from "./runner.js";
import {
  writeDataset,
  writeToleranceSpec,
  readToleranceSpec,
  type DatasetOptions,
  type DatasetPatient,
} from "./manifest.js";

function withTempDir<T>(fn: (dir: string) => T): T {
  const dir = mkdtempSync(join(tmpdir(), "surfdice-ts-"));
  try {
    return fn(dir);
  } finally {
    rmSync(dir, { recursive: true, force: true });
  }
}

export interface SurfaceDscResult {
  value: number | null;
  tauMm: number;
  tauQuantizedMm: number;
  volumetricDsc: number | null;
  overlapArea1Mm2: number;
  overlapArea2Mm2: number;
  totalArea1Mm2: number;
  totalArea2Mm2: number;
  volume1Mm3: number;
  volume2Mm3: number;
  flags: string[];
}

function rowToResult(row: ReportRow): SurfaceDscResult {
  // every numeric cell except the two scores is always present on a
  // successfully evaluated pair
  return {
    value: row.surfaceDsc,
    tauMm: row.tauMm!,
    tauQuantizedMm: row.tauQuantizedMm!,
    volumetricDsc: row.volumetricDsc,
    overlapArea1Mm2: row.overlapArea1Mm2!,
    overlapArea2Mm2: row.overlapArea2Mm2!,
    totalArea1Mm2: row.totalArea1Mm2!,
    totalArea2Mm2: row.totalArea2Mm2!,
    volume1Mm3: row.volume1Mm3!,
    volume2Mm3: row.volume2Mm3!,
    flags: row.flags,
  };
}

function evaluatePair(a: VoxelMask, b: VoxelMask, tauMm: number): SurfaceDscResult {
  if (!sameGrid(a, b)) throw new Error("masks must share shape and spacing");
  if (!(tauMm >= 0)) throw new Error(`tolerance must be >= 0, got ${tauMm}`);
  return withTempDir((dir) => {
    writeDataset(dir, [
      {
        patientId: "case",
        scanId: "scan",
        segmentations: { a: { organ: a }, b: { organ: b } },
      },
    ]);
    const out = join(dir, "out");
    runSurfdice([
      "evaluate",
      "--manifest", join(dir, "manifest.json"),
      "--default-tau-mm", String(tauMm),
      "--reference", "a",
      "--candidate", "b",
      "--out", out,
    ]);
    const report = parseReportCsv(readFileSync(join(out, "report.csv"), "utf8"));
    if (report.rows.length !== 1) {
      throw new Error(`expected one case row, got ${report.rows.length}`);
    }
    return rowToResult(report.rows[0]!);
  });
}

/**
 * Surface DSC of two masks at tolerance `tauMm` (mm), with the full area
 * breakdown. One CLI round trip per call; batch work should go through
 * `evaluateDataset` instead.
 */
export function surfaceDsc(a: VoxelMask, b: VoxelMask, tauMm: number): SurfaceDscResult {
  return evaluatePair(a, b, tauMm);
}

/** Classical volumetric DSC; null when both masks are empty. */
export function volumetricDsc(a: VoxelMask, b: VoxelMask): number | null {
  return evaluatePair(a, b, 0).volumetricDsc;
}

/** The tolerance the grid will actually apply: nearest attainable distance. */
export function quantizeTolerance(tauMm: number, spacing: Spacing): number {
  const one = makeMask([3, 3, 3], spacing);
  setVoxel(one, 1, 1, 1, 1);
  return evaluatePair(one, one, tauMm).tauQuantizedMm;
}

export interface CalibrateOptions {
  /** Rank distances without area weights. */
  unweighted?: boolean;
}

/** Per-organ tolerances from inter-observer disagreement, in mm. */
export function calibrateOrganTolerances(
  patients: DatasetPatient[],
  options: CalibrateOptions = {},
): Record<string, number> {
  return withTempDir((dir) => {
    const manifest = writeDataset(dir, patients);
    const out = join(dir, "tolerances.json");
    const args = ["calibrate", "--manifest", manifest, "--out", out];
    if (options.unweighted) args.push("--unweighted-percentile");
    runSurfdice(args);
    return readToleranceSpec(out).organTolerancesMm;
  });
}

export interface EvaluateOptions extends DatasetOptions {
  reference: string;
  /** Exactly one of defaultTauMm and tolerances. */
  defaultTauMm?: number;
  tolerances?: Record<string, number>;
  candidates?: string[];
  jobs?: number;
}

export interface EvaluateResult extends ParsedReport {
  /** The report exactly as the CLI wrote it. */
  csv: string;
  /** True when some cases failed and carry flagged rows (exit code 2). */
  caseErrors: boolean;
}

export function evaluateDataset(
  patients: DatasetPatient[],
  options: EvaluateOptions,
): EvaluateResult {
  const haveTau = options.defaultTauMm !== undefined;
  const haveSpec = options.tolerances !== undefined;
  if (haveTau === haveSpec) {
    throw new Error("exactly one of defaultTauMm and tolerances is required");
  }
  return withTempDir((dir) => {
    const datasetOptions: DatasetOptions = {};
    if (options.taxonomy) datasetOptions.taxonomy = options.taxonomy;
    if (options.relevantOrgans) datasetOptions.relevantOrgans = options.relevantOrgans;
    const manifest = writeDataset(dir, patients, datasetOptions);
    const out = join(dir, "out");
    const args = ["evaluate", "--manifest", manifest, "--reference", options.reference];
    if (haveTau) {
      args.push("--default-tau-mm", String(options.defaultTauMm));
    } else {
      const specPath = join(dir, "tolerances.json");
      writeToleranceSpec(specPath, { organTolerancesMm: options.tolerances! });
      args.push("--tolerances", specPath);
    }
    for (const candidate of options.candidates ?? []) {
      args.push("--candidate", candidate);
    }
    if (options.jobs !== undefined) args.push("--jobs", String(options.jobs));
    args.push("--out", out);
    const run = runSurfdice(args, { okStatus: [0, 2] });
    const csv = readFileSync(join(out, "report.csv"), "utf8");
    return { ...parseReportCsv(csv), csv, caseErrors: run.status === 2 };
  });
}

export interface SparseCase {
  /** Which voxels were ever annotated. */
  labelled: VoxelMask;
  /** Ground truth inside the labelled region. */
  values: VoxelMask;
  prediction: VoxelMask;
}

/** Pooled volumetric DSC over slice-sampled cases; null when nothing overlaps the labels. */
export function sparseVolumetricDsc(cases: SparseCase[]): number | null {
  if (cases.length === 0) throw new Error("at least one case is required");
  return withTempDir((dir) => {
    const docs = cases.map((c, i) => {
      const names = {
        labelled: `case${i}_labelled.nii.gz`,
        values: `case${i}_values.nii.gz`,
        prediction: `case${i}_prediction.nii.gz`,
      };
      writeMaskNifti(c.labelled, join(dir, names.labelled));
      writeMaskNifti(c.values, join(dir, names.values));
      writeMaskNifti(c.prediction, join(dir, names.prediction));
      return names;
    });
    const casesPath = join(dir, "cases.json");
    writeFileSync(casesPath, JSON.stringify(docs));
    const outPath = join(dir, "result.json");
    runSurfdice(["sparse-dsc", "--cases", casesPath, "--out", outPath]);
    const doc = JSON.parse(readFileSync(outPath, "utf8"));
    if (typeof doc !== "object" || doc === null || !("sparse_volumetric_dsc" in doc)) {
      throw new Error("sparse-dsc output missing sparse_volumetric_dsc");
    }
    const v = doc.sparse_volumetric_dsc;
    if (v !== null && typeof v !== "number") {
      throw new Error(`sparse_volumetric_dsc is ${typeof v}`);
    }
    return v;
  });
}

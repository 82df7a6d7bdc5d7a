import { mkdirSync, readFileSync, writeFileSync } from "node:fs";
import { join } from "node:path";

import type { VoxelMask } from "./grid.js";
import { writeMaskNifti } from "./nifti.js";

export interface DatasetPatient {
  patientId: string;
  scanId: string;
  /** observer -> organ -> mask */
  segmentations: Record<string, Record<string, VoxelMask>>;
}

export interface Taxonomy {
  organs: string[];
  /** Left/right organ pairs for mirror perturbations. */
  leftRightPairs?: [string, string][];
}

export interface DatasetOptions {
  taxonomy?: Taxonomy;
  relevantOrgans?: Record<string, string[]>;
}

function fileToken(s: string): string {
  // organ and observer ids become file names; keep them tame
  if (!/^[A-Za-z0-9._-]+$/.test(s)) {
    throw new Error(`id not usable in a file name: ${JSON.stringify(s)}`);
  }
  return s;
}

/**
 * Write every mask as NIfTI plus a manifest.json into `dir` and return the
 * manifest path. The taxonomy defaults to the organs present.
 */
export function writeDataset(
  dir: string,
  patients: DatasetPatient[],
  options: DatasetOptions = {},
): string {
  mkdirSync(join(dir, "masks"), { recursive: true });
  const organsSeen = new Set<string>();
  const patientDocs = [];
  for (const p of patients) {
    const segDoc: Record<string, Record<string, string>> = {};
    for (const [observer, organs] of Object.entries(p.segmentations)) {
      segDoc[observer] = {};
      for (const [organ, mask] of Object.entries(organs)) {
        organsSeen.add(organ);
        const rel = `masks/${fileToken(p.patientId)}_${fileToken(p.scanId)}_${fileToken(
          observer,
        )}_${fileToken(organ)}.nii.gz`;
        writeMaskNifti(mask, join(dir, rel));
        segDoc[observer]![organ] = rel;
      }
    }
    patientDocs.push({
      patient_id: p.patientId,
      scan_id: p.scanId,
      segmentations: segDoc,
    });
  }
  const taxonomy = options.taxonomy ?? { organs: [...organsSeen].sort() };
  const doc: Record<string, unknown> = {
    patients: patientDocs,
    taxonomy: {
      organs: taxonomy.organs,
      ...(taxonomy.leftRightPairs ? { left_right_pairs: taxonomy.leftRightPairs } : {}),
    },
  };
  if (options.relevantOrgans) doc.relevant_organs = options.relevantOrgans;
  const manifestPath = join(dir, "manifest.json");
  writeFileSync(manifestPath, JSON.stringify(doc, null, 2));
  return manifestPath;
}

export interface ToleranceSpec {
  organTolerancesMm: Record<string, number>;
  percentile?: number;
  provenance?: string[];
}

export function writeToleranceSpec(path: string, spec: ToleranceSpec): void {
  writeFileSync(
    path,
    JSON.stringify({
      organ_tolerances_mm: spec.organTolerancesMm,
      percentile: spec.percentile ?? 0.95,
      provenance: spec.provenance ?? [],
    }, null, 2),
  );
}

export function readToleranceSpec(path: string): ToleranceSpec {
  const doc = JSON.parse(readFileSync(path, "utf8"));
  if (typeof doc !== "object" || doc === null || typeof doc.organ_tolerances_mm !== "object") {
    throw new Error(`${path}: not a tolerance document`);
  }
  const organTolerancesMm: Record<string, number> = {};
  for (const [organ, v] of Object.entries(doc.organ_tolerances_mm as Record<string, unknown>)) {
    if (typeof v !== "number") throw new Error(`${path}: tolerance for ${organ} is not a number`);
    organTolerancesMm[organ] = v;
  }
  const spec: ToleranceSpec = { organTolerancesMm };
  if (typeof doc.percentile === "number") spec.percentile = doc.percentile;
  return spec;
}

export {
  ballMask,
  getVoxel,
  makeMask,
  sameGrid,
  setVoxel,
  voxelIndex,
  type Spacing,
  type VoxelMask,
} from "./grid.js";
export { maskToNifti, writeMaskNifti } from "./nifti.js";
export {
  AGGREGATE_ORGAN,
  REPORT_HEADER,
  parseCsv,
  parseReportCsv,
  type ParsedReport,
  type ReportRow,
} from "./csv.js";
export { runSurfdice, surfdiceBin, type RunOptions, type RunResult } from "./runner.js";
export {
  readToleranceSpec,
  writeDataset,
  writeToleranceSpec,
  type DatasetOptions,
  type DatasetPatient,
  type Taxonomy,
  type ToleranceSpec,
} from "./manifest.js";
export { mulberry32, randomMask } from "./random.js";
export {
  calibrateOrganTolerances,
  evaluateDataset,
  quantizeTolerance,
  sparseVolumetricDsc,
  surfaceDsc,
  volumetricDsc,
  type CalibrateOptions,
  type EvaluateOptions,
  type EvaluateResult,
  type SparseCase,
  type SurfaceDscResult,
} from "./api.js";

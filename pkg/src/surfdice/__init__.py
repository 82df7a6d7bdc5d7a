"""Surface-distance and volumetric agreement metrics for 3D segmentations."""

from .calibrate import (
    DEFAULT_PERCENTILE,
    DistanceSampleSet,
    calibrate_organ_tolerances,
    collect_interobserver_distances,
    load_tolerance_spec,
    pool_interobserver_distances,
    save_tolerance_spec,
    tolerance_percentile,
)
from .distance import DistanceMap, distance_transform, distances_to_other_surface
from .errors import (
    CalibrationError,
    GridMismatchError,
    ManifestError,
    MissingOrganError,
    NiftiError,
    NonBinaryMaskError,
    ReportError,
    SparseLabelError,
    SurfdiceError,
    UnsupportedDataTypeError,
)
from .evaluate import (
    CaseTask,
    build_case_tasks,
    calibrate_from_manifest,
    evaluate_dataset,
    perturb_sensitivity,
)
from .grid import (
    DEFAULT_TAXONOMY,
    CtVolume,
    GridShape,
    Mask,
    MultiOrganSegmentation,
    OrganTaxonomy,
    Spacing,
    SparseLabels,
    VoxelBox,
    bounding_box,
    mask_volume,
    validate_compatible,
)
from .manifest import DatasetManifest, PatientScan, load_manifest
from .metrics import (
    SurfaceDscBreakdown,
    ToleranceSpec,
    aggregate_surface_dsc,
    quantize_tolerance,
    sparse_volumetric_dsc,
    surface_dsc,
    volumetric_dsc,
)
from .perturb import (
    AffineParams,
    AugmentationConfig,
    DeformationField,
    add_noise,
    affine_field,
    compose_fields,
    elastic_field,
    mirror_with_label_swap,
    random_deformation,
    sample_affine_params,
    warp_ct,
    warp_mask,
)
from .nifti import read_nifti, write_nifti
from .report import (
    AGGREGATE_ORGAN,
    CSV_HEADER,
    EvaluationReport,
    PerturbRow,
    ReportRow,
    read_report_csv,
    render_csv,
    render_markdown,
    render_perturb_csv,
    summarize_by_organ,
    write_report,
)
from .surface import (
    NeighborAreaTable,
    SurfaceElement,
    SurfaceElementList,
    build_area_table,
    dump_area_table,
    extract_surface,
    total_surface_area,
)

__version__ = "0.1.0"

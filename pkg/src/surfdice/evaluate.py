"""Batch drivers: dataset evaluation, calibration, perturbation sensitivity.

Everything here works on manifests and file paths so it can be driven from
the command line and parallelised with a process pool.  Worker payloads are
plain tuples of strings and floats; masks are loaded inside the worker.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .calibrate import pool_interobserver_distances, tolerance_percentile
from .errors import CalibrationError, GridMismatchError, NiftiError
from .grid import Mask, MultiOrganSegmentation, mask_volume
from .manifest import DatasetManifest
from .metrics import SurfaceDscBreakdown, ToleranceSpec, surface_dsc, volumetric_dsc
from .nifti import read_nifti
from .perturb import (
    AffineParams,
    AugmentationConfig,
    affine_field,
    elastic_field,
    mirror_with_label_swap,
    warp_mask,
)
from .report import AGGREGATE_ORGAN, EvaluationReport, PerturbRow, ReportRow

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class CaseTask:
    """One (scan, organ, observer pair) evaluation, as picklable primitives."""

    patient_id: str
    scan_id: str
    organ: str
    pair: str
    reference_path: str | None
    candidate_path: str | None
    tau_mm: float | None


def _load_mask(path: str) -> Mask:
    obj = read_nifti(Path(path), kind="mask")
    assert isinstance(obj, Mask)
    return obj


def _run_case(task: CaseTask) -> tuple[ReportRow, str | None]:
    """Evaluate one case.  Returns the row plus an error string, if any.

    A case that cannot be computed still yields a row so the report shape
    does not depend on which cases failed; the metric cells hold "-" and
    the flags column says why.
    """
    flags: list[str] = []
    error: str | None = None
    breakdown: SurfaceDscBreakdown | None = None
    vol_dsc = None
    vol_1 = vol_2 = None

    if task.reference_path is None:
        flags.append("missing-reference")
    if task.candidate_path is None:
        flags.append("missing-candidate")
    if task.tau_mm is None:
        flags.append("no-tolerance")

    if not flags:
        try:
            ref = _load_mask(task.reference_path)
            cand = _load_mask(task.candidate_path)
        except NiftiError as exc:
            flags.append("load-error")
            error = f"{task.scan_id}/{task.organ}/{task.pair}: {exc}"
        else:
            try:
                breakdown = surface_dsc(ref, cand, task.tau_mm)
            except GridMismatchError as exc:
                flags.append("grid-mismatch")
                error = f"{task.scan_id}/{task.organ}/{task.pair}: {exc}"
            else:
                vol_dsc = volumetric_dsc(ref, cand)
                vol_1 = mask_volume(ref)
                vol_2 = mask_volume(cand)
                if ref.is_empty() and cand.is_empty():
                    flags.append("both-empty")

    row = ReportRow(
        patient=task.patient_id,
        scan=task.scan_id,
        organ=task.organ,
        pair=task.pair,
        surface_dsc=None if breakdown is None else breakdown.value,
        tau_mm=task.tau_mm,
        tau_quantized_mm=None if breakdown is None else breakdown.quantized_tau,
        volumetric_dsc=vol_dsc,
        overlap_area_1_mm2=None if breakdown is None else breakdown.overlap_area_1,
        overlap_area_2_mm2=None if breakdown is None else breakdown.overlap_area_2,
        total_area_1_mm2=None if breakdown is None else breakdown.total_area_1,
        total_area_2_mm2=None if breakdown is None else breakdown.total_area_2,
        volume_1_mm3=vol_1,
        volume_2_mm3=vol_2,
        flags=tuple(flags),
    )
    return row, error


def _pair_name(reference: str, candidate: str) -> str:
    return f"{reference}-vs-{candidate}"


def build_case_tasks(
    manifest: DatasetManifest,
    tolerances: ToleranceSpec,
    reference: str,
    candidates: tuple[str, ...] | None = None,
) -> tuple[CaseTask, ...]:
    """Expand a manifest into per-case tasks.

    ``candidates`` defaults to every observer other than the reference.
    Organs are the union of those segmented by either side, so a contour
    present in only one set still produces a (flagged or zero) row.
    """
    tasks: list[CaseTask] = []
    for scan in manifest.patients:
        ref_segs = scan.segmentations.get(reference, {})
        cand_names = candidates
        if cand_names is None:
            cand_names = tuple(o for o in scan.observers if o != reference)
        for cand in cand_names:
            cand_segs = scan.segmentations.get(cand, {})
            organs = sorted(set(ref_segs) | set(cand_segs))
            for organ in organs:
                try:
                    tau = tolerances.tolerance_for(organ)
                except KeyError:
                    tau = None
                ref_path = ref_segs.get(organ)
                cand_path = cand_segs.get(organ)
                tasks.append(CaseTask(
                    patient_id=scan.patient_id,
                    scan_id=scan.scan_id,
                    organ=organ,
                    pair=_pair_name(reference, cand),
                    reference_path=None if ref_path is None else str(ref_path),
                    candidate_path=None if cand_path is None else str(cand_path),
                    tau_mm=tau,
                ))
    return tuple(tasks)


def _aggregate_rows(
    manifest: DatasetManifest,
    rows: tuple[ReportRow, ...],
) -> tuple[ReportRow, ...]:
    """Area-weighted aggregate per (patient, scan, pair).

    The organ list comes from the manifest's relevant_organs entry when one
    exists, otherwise every organ that produced a row for that scan counts
    as relevant.  A relevant organ with no usable surface numbers flags the
    aggregate as incomplete rather than sinking the whole row.
    """
    by_scan: dict[tuple[str, str, str], list[ReportRow]] = {}
    for row in rows:
        by_scan.setdefault((row.patient, row.scan, row.pair), []).append(row)

    aggregates = []
    for (patient, scan, pair), scan_rows in sorted(by_scan.items()):
        relevant = manifest.relevant_for(patient)
        if relevant is None:
            relevant = tuple(sorted({r.organ for r in scan_rows}))
        usable = {r.organ: r for r in scan_rows if r.total_area_1_mm2 is not None}

        flags = ["aggregate"]
        if any(name not in usable for name in relevant):
            flags.append("incomplete")

        overlap = total = 0.0
        for name in relevant:
            row = usable.get(name)
            if row is None:
                continue
            overlap += row.overlap_area_1_mm2 + row.overlap_area_2_mm2
            total += row.total_area_1_mm2 + row.total_area_2_mm2

        value = overlap / total if total > 0.0 else None
        aggregates.append(ReportRow(
            patient=patient,
            scan=scan,
            organ=AGGREGATE_ORGAN,
            pair=pair,
            surface_dsc=value,
            tau_mm=None,
            tau_quantized_mm=None,
            volumetric_dsc=None,
            overlap_area_1_mm2=None,
            overlap_area_2_mm2=None,
            total_area_1_mm2=None,
            total_area_2_mm2=None,
            volume_1_mm3=None,
            volume_2_mm3=None,
            flags=tuple(flags),
        ))
    return tuple(aggregates)


def evaluate_dataset(
    manifest: DatasetManifest,
    tolerances: ToleranceSpec,
    reference: str,
    candidates: tuple[str, ...] | None = None,
    jobs: int = 1,
) -> tuple[EvaluationReport, list[str]]:
    """Evaluate every (scan, organ, observer pair) case in the manifest.

    Returns the report plus a list of per-case error strings.  Case errors
    never abort the run; they surface in the flags column and the error
    list so the caller can pick the exit code.
    """
    tasks = build_case_tasks(manifest, tolerances, reference, candidates)
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_case, tasks, chunksize=1))
    else:
        results = [_run_case(t) for t in tasks]

    rows = tuple(row for row, _ in results)
    errors = [err for _, err in results if err is not None]
    aggregates = _aggregate_rows(manifest, rows)
    return EvaluationReport(rows=rows, aggregates=aggregates), errors


def _segmentation_rows(
    manifest: DatasetManifest,
) -> tuple[tuple[str, dict[str, dict[str, Mask]]], ...]:
    rows = []
    for scan in manifest.patients:
        by_organ: dict[str, dict[str, Mask]] = {}
        for observer, segs in scan.segmentations.items():
            for organ, path in segs.items():
                by_organ.setdefault(organ, {})[observer] = _load_mask(str(path))
        rows.append((scan.scan_id, by_organ))
    return tuple(rows)


def calibrate_from_manifest(
    manifest: DatasetManifest,
    percentile: float,
    weighted: bool = True,
) -> tuple[ToleranceSpec, dict[str, int]]:
    """Pool inter-observer distances across the manifest and pick tolerances.

    Needs at least two observers somewhere in the dataset.  Returns the
    tolerance spec and the pooled sample count per organ.
    """
    if len(manifest.all_observers()) < 2:
        raise CalibrationError(
            "calibration needs at least two observers, manifest has "
            f"{len(manifest.all_observers())}"
        )
    dataset = _segmentation_rows(manifest)
    pooled = pool_interobserver_distances(dataset)
    if not pooled:
        raise CalibrationError("no organ has segmentations from two observers")
    per_organ = {organ: tolerance_percentile(samples, q=percentile, weighted=weighted)
                 for organ, samples in pooled.items()}
    counts = {organ: len(samples.distances) for organ, samples in pooled.items()}
    return ToleranceSpec(per_organ=per_organ), counts


_SWEEP_VOXELS = (0, 1, 2, 3, 4)


def perturb_sensitivity(
    manifest: DatasetManifest,
    tolerances: ToleranceSpec,
    reference: str,
    seed: int,
    mask_warp: str = "linear",
) -> tuple[tuple[PerturbRow, ...], list[str]]:
    """Compare each reference mask against perturbed copies of itself.

    Three families per organ: an x translation sweep over whole-voxel
    shifts, one elastic deformation drawn from the default augmentation
    ranges, and a left-right mirror with label swap.  The translation sweep
    gives the table its dose-response shape; the elastic and mirror rows
    show a realistic deformation and the label-swap sanity check.
    """
    rows: list[PerturbRow] = []
    errors: list[str] = []
    config = AugmentationConfig(seed=seed)

    for scan in manifest.patients:
        segs = scan.segmentations.get(reference, {})
        organ_masks: dict[str, Mask] = {}
        for organ in sorted(segs):
            try:
                organ_masks[organ] = _load_mask(str(segs[organ]))
            except NiftiError as exc:
                errors.append(f"{scan.scan_id}/{organ}: {exc}")

        for organ, mask in organ_masks.items():
            try:
                tau = tolerances.tolerance_for(organ)
            except KeyError:
                rows.append(PerturbRow(
                    patient=scan.patient_id, scan=scan.scan_id, organ=organ,
                    perturbation="translate-x", magnitude=0.0,
                    flags=("no-tolerance",),
                ))
                continue

            for k in _SWEEP_VOXELS:
                field = affine_field(AffineParams(translation_px=(float(k), 0.0)),
                                     mask.shape, mask.spacing)
                moved = warp_mask(mask, field, method=mask_warp)
                b = surface_dsc(mask, moved, tau)
                rows.append(PerturbRow(
                    patient=scan.patient_id, scan=scan.scan_id, organ=organ,
                    perturbation="translate-x", magnitude=float(k),
                    surface_dsc=b.value, tau_mm=tau,
                    tau_quantized_mm=b.quantized_tau,
                    flags=("both-empty",) if b.value is None else (),
                ))

            field = elastic_field(config, mask.shape, mask.spacing, seed)
            moved = warp_mask(mask, field, method=mask_warp)
            b = surface_dsc(mask, moved, tau)
            rows.append(PerturbRow(
                patient=scan.patient_id, scan=scan.scan_id, organ=organ,
                perturbation="elastic", magnitude=config.elastic_sigma_mm,
                surface_dsc=b.value, tau_mm=tau,
                tau_quantized_mm=b.quantized_tau,
                flags=("both-empty",) if b.value is None else (),
            ))

        if organ_masks:
            try:
                seg = MultiOrganSegmentation(channels=organ_masks,
                                             taxonomy=manifest.taxonomy)
            except GridMismatchError as exc:
                errors.append(f"{scan.scan_id}: {exc}")
                continue
            mirrored = mirror_with_label_swap(seg)
            for organ, mask in sorted(organ_masks.items()):
                other = mirrored.channels.get(organ)
                if other is None:
                    continue
                try:
                    tau = tolerances.tolerance_for(organ)
                except KeyError:
                    continue
                b = surface_dsc(mask, other, tau)
                rows.append(PerturbRow(
                    patient=scan.patient_id, scan=scan.scan_id, organ=organ,
                    perturbation="mirror-swap", magnitude=0.0,
                    surface_dsc=b.value, tau_mm=tau,
                    tau_quantized_mm=b.quantized_tau,
                    flags=("both-empty",) if b.value is None else (),
                ))

    return tuple(rows), errors

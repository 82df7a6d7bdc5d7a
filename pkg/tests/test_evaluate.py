"""Batch evaluation, calibration, and perturbation drivers."""

import json

import numpy as np
import pytest

from surfdice import (
    AGGREGATE_ORGAN,
    CalibrationError,
    Mask,
    Spacing,
    ToleranceSpec,
    aggregate_surface_dsc,
    build_case_tasks,
    calibrate_from_manifest,
    evaluate_dataset,
    load_manifest,
    perturb_sensitivity,
    surface_dsc,
    volumetric_dsc,
    write_nifti,
)
from surfdice.evaluate import CaseTask, _run_case

TAU = ToleranceSpec(default_mm=1.5)


class TestBuildCaseTasks:
    def test_default_candidates_are_all_other_observers(self, synthetic_dataset):
        manifest = load_manifest(synthetic_dataset["manifest"])
        tasks = build_case_tasks(manifest, TAU, reference="gold")
        pairs = {t.pair for t in tasks}
        assert pairs == {"gold-vs-auto", "gold-vs-obsB"}
        # 2 patients x 2 candidates x 3 organs
        assert len(tasks) == 12

    def test_explicit_candidates(self, synthetic_dataset):
        manifest = load_manifest(synthetic_dataset["manifest"])
        tasks = build_case_tasks(manifest, TAU, reference="gold",
                                 candidates=("auto",))
        assert {t.pair for t in tasks} == {"gold-vs-auto"}
        assert len(tasks) == 6

    def test_organ_union_covers_one_sided_contours(self, synthetic_dataset):
        doc = json.loads(synthetic_dataset["manifest"].read_text())
        del doc["patients"][0]["segmentations"]["auto"]["Brainstem"]
        edited = synthetic_dataset["root"] / "edited.json"
        edited.write_text(json.dumps(doc))
        manifest = load_manifest(edited)
        tasks = build_case_tasks(manifest, TAU, reference="gold",
                                 candidates=("auto",))
        by_organ = {(t.scan_id, t.organ): t for t in tasks}
        task = by_organ[("pat1-scan", "Brainstem")]
        assert task.reference_path is not None
        assert task.candidate_path is None

    def test_tolerances_resolved_per_organ(self, synthetic_dataset):
        manifest = load_manifest(synthetic_dataset["manifest"])
        spec = ToleranceSpec(per_organ={"Brainstem": 2.0})
        tasks = build_case_tasks(manifest, spec, reference="gold")
        taus = {t.organ: t.tau_mm for t in tasks}
        assert taus["Brainstem"] == 2.0
        assert taus["Parotid-Lt"] is None


class TestRunCase:
    def test_missing_paths_flagged(self):
        row, err = _run_case(CaseTask(
            patient_id="p", scan_id="s", organ="O", pair="a-vs-b",
            reference_path=None, candidate_path=None, tau_mm=None))
        assert err is None
        assert set(row.flags) == {"missing-reference", "missing-candidate",
                                  "no-tolerance"}
        assert row.surface_dsc is None
        assert row.volumetric_dsc is None

    def test_load_error_flagged(self, tmp_path):
        bad = tmp_path / "bad.nii"
        bad.write_bytes(b"\x00" * 20)
        row, err = _run_case(CaseTask(
            patient_id="p", scan_id="s", organ="O", pair="a-vs-b",
            reference_path=str(bad), candidate_path=str(bad), tau_mm=1.0))
        assert row.flags == ("load-error",)
        assert err is not None and "truncated" in err

    def test_nonexistent_file_flagged(self, tmp_path):
        row, err = _run_case(CaseTask(
            patient_id="p", scan_id="s", organ="O", pair="a-vs-b",
            reference_path=str(tmp_path / "ghost.nii.gz"),
            candidate_path=str(tmp_path / "ghost.nii.gz"), tau_mm=1.0))
        assert row.flags == ("load-error",)
        assert err is not None

    def test_grid_mismatch_flagged(self, tmp_path):
        a = tmp_path / "a.nii"
        b = tmp_path / "b.nii"
        write_nifti(Mask(occupancy=np.ones((4, 4, 4), dtype=bool),
                         spacing=Spacing(1, 1, 1)), a)
        write_nifti(Mask(occupancy=np.ones((4, 4, 5), dtype=bool),
                         spacing=Spacing(1, 1, 1)), b)
        row, err = _run_case(CaseTask(
            patient_id="p", scan_id="s", organ="O", pair="a-vs-b",
            reference_path=str(a), candidate_path=str(b), tau_mm=1.0))
        assert row.flags == ("grid-mismatch",)
        assert err is not None

    def test_both_empty_flagged(self, tmp_path):
        a = tmp_path / "a.nii"
        b = tmp_path / "b.nii"
        for p in (a, b):
            write_nifti(Mask(occupancy=np.zeros((4, 4, 4), dtype=bool),
                             spacing=Spacing(1, 1, 1)), p)
        row, err = _run_case(CaseTask(
            patient_id="p", scan_id="s", organ="O", pair="a-vs-b",
            reference_path=str(a), candidate_path=str(b), tau_mm=1.0))
        assert err is None
        assert row.flags == ("both-empty",)
        assert row.surface_dsc is None
        assert row.volumetric_dsc is None
        assert row.total_area_1_mm2 == 0.0

    def test_successful_case_matches_direct_call(self, synthetic_dataset):
        masks = synthetic_dataset["masks"]
        spacing = synthetic_dataset["spacing"]
        root = synthetic_dataset["root"]
        row, err = _run_case(CaseTask(
            patient_id="pat1", scan_id="pat1-scan", organ="Brainstem",
            pair="gold-vs-auto",
            reference_path=str(root / "masks/pat1_gold_Brainstem.nii.gz"),
            candidate_path=str(root / "masks/pat1_auto_Brainstem.nii.gz"),
            tau_mm=1.5))
        assert err is None
        ref = Mask(occupancy=masks["pat1", "gold", "Brainstem"], spacing=spacing)
        cand = Mask(occupancy=masks["pat1", "auto", "Brainstem"], spacing=spacing)
        b = surface_dsc(ref, cand, 1.5)
        assert row.surface_dsc == b.value
        assert row.tau_quantized_mm == b.quantized_tau
        assert row.overlap_area_1_mm2 == b.overlap_area_1
        assert row.volumetric_dsc == volumetric_dsc(ref, cand)
        assert row.volume_1_mm3 == float(ref.voxel_count()) * 2.0


class TestEvaluateDataset:
    def test_report_shape(self, synthetic_dataset):
        manifest = load_manifest(synthetic_dataset["manifest"])
        report, errors = evaluate_dataset(manifest, TAU, reference="gold")
        assert errors == []
        assert len(report.rows) == 12
        assert len(report.aggregates) == 4
        assert all(r.organ == AGGREGATE_ORGAN for r in report.aggregates)
        assert all(not r.flags for r in report.rows)

    def test_rows_match_oracle_pipeline(self, synthetic_dataset):
        manifest = load_manifest(synthetic_dataset["manifest"])
        report, _ = evaluate_dataset(manifest, TAU, reference="gold")
        masks = synthetic_dataset["masks"]
        spacing = synthetic_dataset["spacing"]
        for row in report.rows:
            pid = row.patient
            cand_obs = row.pair.split("-vs-")[1]
            ref = Mask(occupancy=masks[pid, "gold", row.organ], spacing=spacing)
            cand = Mask(occupancy=masks[pid, cand_obs, row.organ], spacing=spacing)
            b = surface_dsc(ref, cand, 1.5)
            assert row.surface_dsc == b.value
            assert row.volumetric_dsc == volumetric_dsc(ref, cand)

    def test_aggregate_equals_library_aggregation(self, synthetic_dataset):
        manifest = load_manifest(synthetic_dataset["manifest"])
        report, _ = evaluate_dataset(manifest, TAU, reference="gold")
        masks = synthetic_dataset["masks"]
        spacing = synthetic_dataset["spacing"]
        organs = synthetic_dataset["organs"]
        for agg in report.aggregates:
            cand_obs = agg.pair.split("-vs-")[1]
            breakdowns = {
                organ: surface_dsc(
                    Mask(occupancy=masks[agg.patient, "gold", organ], spacing=spacing),
                    Mask(occupancy=masks[agg.patient, cand_obs, organ], spacing=spacing),
                    1.5)
                for organ in organs
            }
            expected = aggregate_surface_dsc(breakdowns, relevant=organs)
            assert agg.surface_dsc == expected
            assert agg.flags == ("aggregate",)

    def test_jobs_parity(self, synthetic_dataset):
        manifest = load_manifest(synthetic_dataset["manifest"])
        serial, errs1 = evaluate_dataset(manifest, TAU, reference="gold", jobs=1)
        parallel, errs2 = evaluate_dataset(manifest, TAU, reference="gold", jobs=4)
        assert serial == parallel
        assert errs1 == errs2

    def test_incomplete_aggregate_flag(self, synthetic_dataset):
        doc = json.loads(synthetic_dataset["manifest"].read_text())
        # pat1 lists all three organs as relevant; drop one contour pair
        del doc["patients"][0]["segmentations"]["gold"]["Parotid-Rt"]
        del doc["patients"][0]["segmentations"]["auto"]["Parotid-Rt"]
        del doc["patients"][0]["segmentations"]["obsB"]["Parotid-Rt"]
        edited = synthetic_dataset["root"] / "edited.json"
        edited.write_text(json.dumps(doc))
        manifest = load_manifest(edited)
        report, errors = evaluate_dataset(manifest, TAU, reference="gold",
                                          candidates=("auto",))
        assert errors == []
        agg = {a.patient: a for a in report.aggregates}
        assert agg["pat1"].flags == ("aggregate", "incomplete")
        assert agg["pat2"].flags == ("aggregate",)
        # the incomplete aggregate still pools the organs it has
        assert agg["pat1"].surface_dsc is not None

    def test_case_error_does_not_abort(self, synthetic_dataset):
        root = synthetic_dataset["root"]
        (root / "masks/pat1_auto_Brainstem.nii.gz").write_bytes(b"junk")
        manifest = load_manifest(synthetic_dataset["manifest"])
        report, errors = evaluate_dataset(manifest, TAU, reference="gold")
        assert len(report.rows) == 12
        assert len(errors) == 1
        flagged = [r for r in report.rows if r.flags]
        assert len(flagged) == 1
        assert flagged[0].flags == ("load-error",)
        assert flagged[0].organ == "Brainstem"


class TestCalibrateFromManifest:
    def test_single_observer_raises(self, synthetic_dataset):
        doc = json.loads(synthetic_dataset["manifest"].read_text())
        for patient in doc["patients"]:
            patient["segmentations"] = {
                "gold": patient["segmentations"]["gold"]}
        edited = synthetic_dataset["root"] / "solo.json"
        edited.write_text(json.dumps(doc))
        manifest = load_manifest(edited)
        with pytest.raises(CalibrationError, match="two observers"):
            calibrate_from_manifest(manifest, percentile=0.95)

    def test_spec_and_counts(self, synthetic_dataset):
        manifest = load_manifest(synthetic_dataset["manifest"])
        spec, counts = calibrate_from_manifest(manifest, percentile=0.95)
        assert set(counts) == {"Brainstem", "Parotid-Lt", "Parotid-Rt"}
        for organ, tau in spec.per_organ.items():
            assert tau > 0.0
            assert counts[organ] > 0
        # identical anatomy per patient: three observers shifted one voxel
        # along x, so the worst surface gap stays within a two-voxel shift
        assert all(tau <= 2.0 for tau in spec.per_organ.values())

    def test_identical_observers_give_zero(self, synthetic_dataset):
        doc = json.loads(synthetic_dataset["manifest"].read_text())
        root = synthetic_dataset["root"]
        # a second observer with byte-identical masks under fresh names
        # (the manifest schema forbids sharing one file between observers)
        for patient in doc["patients"]:
            gold = patient["segmentations"]["gold"]
            twin = {}
            for organ, rel in gold.items():
                copy_rel = rel.replace(".nii.gz", ".twin.nii.gz")
                (root / copy_rel).write_bytes((root / rel).read_bytes())
                twin[organ] = copy_rel
            patient["segmentations"] = {"gold": gold, "twin": twin}
        edited = root / "twin.json"
        edited.write_text(json.dumps(doc))
        manifest = load_manifest(edited)
        spec, _ = calibrate_from_manifest(manifest, percentile=0.95)
        assert all(tau == 0.0 for tau in spec.per_organ.values())


class TestPerturbSensitivity:
    def test_row_families_and_monotone_sweep(self, synthetic_dataset):
        manifest = load_manifest(synthetic_dataset["manifest"])
        rows, errors = perturb_sensitivity(manifest, TAU, reference="gold",
                                           seed=7)
        assert errors == []
        families = {(r.organ, r.perturbation) for r in rows if r.patient == "pat1"}
        for organ in synthetic_dataset["organs"]:
            assert (organ, "translate-x") in families
            assert (organ, "elastic") in families
            assert (organ, "mirror-swap") in families

        sweep = sorted(
            (r.magnitude, r.surface_dsc) for r in rows
            if r.patient == "pat1" and r.organ == "Brainstem"
            and r.perturbation == "translate-x")
        assert [m for m, _ in sweep] == [0.0, 1.0, 2.0, 3.0, 4.0]
        assert sweep[0][1] == 1.0
        values = [v for _, v in sweep]
        assert all(a >= b for a, b in zip(values, values[1:]))
        assert values[-1] < 1.0

    def test_mirror_swap_of_symmetric_dataset_is_perfect(self, synthetic_dataset):
        # Parotid-Lt at x=6 and Parotid-Rt at x=18 are mirror images on a
        # 24-wide grid, so mirroring with label swap reproduces them.
        manifest = load_manifest(synthetic_dataset["manifest"])
        rows, _ = perturb_sensitivity(manifest, TAU, reference="gold", seed=7)
        mirror = {r.organ: r.surface_dsc for r in rows
                  if r.patient == "pat1" and r.perturbation == "mirror-swap"}
        assert mirror["Parotid-Lt"] == 1.0
        assert mirror["Parotid-Rt"] == 1.0

    def test_deterministic_per_seed(self, synthetic_dataset):
        manifest = load_manifest(synthetic_dataset["manifest"])
        a, _ = perturb_sensitivity(manifest, TAU, reference="gold", seed=3)
        b, _ = perturb_sensitivity(manifest, TAU, reference="gold", seed=3)
        assert a == b

    def test_no_tolerance_flagged(self, synthetic_dataset):
        manifest = load_manifest(synthetic_dataset["manifest"])
        spec = ToleranceSpec(per_organ={"Brainstem": 1.5})
        rows, _ = perturb_sensitivity(manifest, spec, reference="gold", seed=1)
        flagged = [r for r in rows if r.flags == ("no-tolerance",)]
        assert {r.organ for r in flagged} == {"Parotid-Lt", "Parotid-Rt"}
        assert all(r.surface_dsc is None for r in flagged)

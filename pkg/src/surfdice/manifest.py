"""Dataset manifest: which mask files belong to which patient, scan,
observer, and organ. Schema errors carry a JSON-pointer path to the
offending element."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ManifestError
from .grid import DEFAULT_TAXONOMY, OrganTaxonomy


@dataclass(frozen=True)
class PatientScan:
    patient_id: str
    scan_id: str
    ct_path: Path | None
    segmentations: dict[str, dict[str, Path]]

    @property
    def observers(self) -> tuple[str, ...]:
        return tuple(sorted(self.segmentations))

    def organs_present(self) -> tuple[str, ...]:
        """Organs any observer segmented on this scan."""
        organs = {o for per_organ in self.segmentations.values() for o in per_organ}
        return tuple(sorted(organs))


@dataclass(frozen=True)
class DatasetManifest:
    patients: tuple[PatientScan, ...]
    taxonomy: OrganTaxonomy = DEFAULT_TAXONOMY
    relevant_organs: dict[str, tuple[str, ...]] = field(default_factory=dict)

    def relevant_for(self, patient_id: str) -> tuple[str, ...] | None:
        """Explicitly configured relevant organs, or None meaning
        'every organ present for that patient'."""
        return self.relevant_organs.get(patient_id)

    def all_observers(self) -> tuple[str, ...]:
        return tuple(sorted({obs for p in self.patients for obs in p.segmentations}))


def _require(doc, key, expected, pointer):
    if not isinstance(doc, dict):
        raise ManifestError(f"{pointer or '/'}: expected an object")
    if key not in doc:
        raise ManifestError(f"{pointer}/{key}: missing required field")
    value = doc[key]
    if not isinstance(value, expected):
        raise ManifestError(f"{pointer}/{key}: expected {expected.__name__}")
    return value


def _load_taxonomy(doc) -> OrganTaxonomy:
    if "taxonomy" not in doc:
        return DEFAULT_TAXONOMY
    tax = doc["taxonomy"]
    organs = _require(tax, "organs", list, "/taxonomy")
    pairs = tax.get("left_right_pairs", [])
    if not isinstance(pairs, list):
        raise ManifestError("/taxonomy/left_right_pairs: expected a list")
    try:
        return OrganTaxonomy(
            organs=tuple(str(o) for o in organs),
            pairs=tuple((str(a), str(b)) for a, b in pairs),
        )
    except (ValueError, TypeError) as exc:
        raise ManifestError(f"/taxonomy: {exc}") from exc


def load_manifest(path) -> DatasetManifest:
    """Parse and validate a manifest JSON file.

    Mask and CT paths are resolved relative to the manifest's directory and
    must be unique across the whole document.
    """
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ManifestError(f"{path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ManifestError("/: manifest root must be an object")

    taxonomy = _load_taxonomy(doc)
    base = path.parent
    entries = _require(doc, "patients", list, "")
    seen_paths: dict[Path, str] = {}
    seen_scans: set[tuple[str, str]] = set()
    patients = []
    for i, entry in enumerate(entries):
        pointer = f"/patients/{i}"
        patient_id = _require(entry, "patient_id", str, pointer)
        scan_id = _require(entry, "scan_id", str, pointer)
        if (patient_id, scan_id) in seen_scans:
            raise ManifestError(f"{pointer}: duplicate patient/scan pair {patient_id}/{scan_id}")
        seen_scans.add((patient_id, scan_id))

        def claim(p: str, ptr: str) -> Path:
            resolved = (base / p).resolve()
            if resolved in seen_paths:
                raise ManifestError(f"{ptr}: duplicate path {p!r} (also used at {seen_paths[resolved]})")
            seen_paths[resolved] = ptr
            return resolved

        ct_path = None
        if entry.get("ct_path") is not None:
            if not isinstance(entry["ct_path"], str):
                raise ManifestError(f"{pointer}/ct_path: expected str")
            ct_path = claim(entry["ct_path"], f"{pointer}/ct_path")

        segs_doc = _require(entry, "segmentations", dict, pointer)
        segmentations: dict[str, dict[str, Path]] = {}
        for observer, organs_doc in segs_doc.items():
            optr = f"{pointer}/segmentations/{observer}"
            if not isinstance(organs_doc, dict):
                raise ManifestError(f"{optr}: expected an object of organ -> path")
            per_organ: dict[str, Path] = {}
            for organ, mask_path in organs_doc.items():
                mptr = f"{optr}/{organ}"
                if organ not in taxonomy:
                    raise ManifestError(f"{mptr}: unknown organ {organ!r}")
                if not isinstance(mask_path, str):
                    raise ManifestError(f"{mptr}: expected str")
                per_organ[organ] = claim(mask_path, mptr)
            segmentations[observer] = per_organ
        patients.append(PatientScan(
            patient_id=patient_id,
            scan_id=scan_id,
            ct_path=ct_path,
            segmentations=segmentations,
        ))

    relevant: dict[str, tuple[str, ...]] = {}
    known_patients = {p.patient_id for p in patients}
    rel_doc = doc.get("relevant_organs", {})
    if not isinstance(rel_doc, dict):
        raise ManifestError("/relevant_organs: expected an object")
    for patient_id, organs in rel_doc.items():
        rptr = f"/relevant_organs/{patient_id}"
        if patient_id not in known_patients:
            raise ManifestError(f"{rptr}: unknown patient {patient_id!r}")
        if not isinstance(organs, list):
            raise ManifestError(f"{rptr}: expected a list of organ names")
        for organ in organs:
            if organ not in taxonomy:
                raise ManifestError(f"{rptr}: unknown organ {organ!r}")
        relevant[patient_id] = tuple(str(o) for o in organs)

    return DatasetManifest(patients=tuple(patients), taxonomy=taxonomy, relevant_organs=relevant)

"""The whole pipeline from the command line, on a dataset built in /tmp.

Writes NIfTI masks for two patients, two human observers, and one rougher
automatic contour. Tolerances are calibrated from the humans only, then
the auto contour is evaluated against gold at those tolerances and the
report rendered as markdown. Everything the CLI prints is real output;
run this file and read along.
"""

import json
import shutil
import sys
import tempfile
from pathlib import Path

import numpy as np

from surfdice import Mask, Spacing, write_nifti
from surfdice.cli import main as surfdice_main


def ball(shape, center, radius_mm, spacing):
    idx = np.indices(shape, dtype=np.float64)
    d = spacing.as_array()
    sq = np.zeros(shape)
    for axis in range(3):
        sq += ((idx[axis] - center[axis]) * d[axis]) ** 2
    return Mask(occupancy=sq <= radius_mm * radius_mm, spacing=spacing)


def build_dataset(root: Path) -> tuple[Path, Path]:
    spacing = Spacing(1.0, 1.0, 2.0)
    shape = (32, 32, 16)
    (root / "masks").mkdir(parents=True)
    # gold and obsB disagree by a voxel; auto is shifted 2 px and missizes
    observers = {
        "gold": {"shift": (0, 0), "grow": 0.0},
        "obsB": {"shift": (0, 1), "grow": 0.0},
        "auto": {"shift": (2, 0), "grow": 1.0},
    }
    patients = []
    for pid, offset in (("pat1", 0), ("pat2", 1)):
        segs = {obs: {} for obs in observers}
        for obs, err in observers.items():
            sx, sy = err["shift"]
            organ_masks = {
                "Brainstem": ball(shape, (16 + offset + sx, 16 + sy, 8),
                                  6.0 + err["grow"], spacing),
                "Parotid-Lt": ball(shape, (8 + sx, 16 + sy, 8),
                                   4.0 - err["grow"], spacing),
            }
            for organ, mask in organ_masks.items():
                rel = f"masks/{pid}_{obs}_{organ}.nii.gz"
                write_nifti(mask, root / rel)
                segs[obs][organ] = rel
        patients.append({
            "patient_id": pid,
            "scan_id": "planning",
            "segmentations": segs,
        })
    taxonomy = {"organs": ["Brainstem", "Parotid-Lt"]}
    manifest = root / "manifest.json"
    manifest.write_text(json.dumps(
        {"patients": patients, "taxonomy": taxonomy}, indent=2))
    humans = [{**p, "segmentations": {obs: segs for obs, segs
                                      in p["segmentations"].items()
                                      if obs != "auto"}}
              for p in patients]
    humans_manifest = root / "manifest_humans.json"
    humans_manifest.write_text(json.dumps(
        {"patients": humans, "taxonomy": taxonomy}, indent=2))
    return manifest, humans_manifest


def run(argv):
    print(f"\n$ surfdice {' '.join(argv)}")
    code = surfdice_main(argv)
    if code != 0:
        sys.exit(f"exit code {code}")


def main():
    root = Path(tempfile.mkdtemp(prefix="surfdice-demo-"))
    try:
        manifest, humans_manifest = build_dataset(root)
        tol = root / "tolerances.json"
        out = root / "results"

        run(["calibrate", "--manifest", str(humans_manifest), "--out", str(tol)])
        run(["evaluate", "--manifest", str(manifest),
             "--tolerances", str(tol), "--reference", "gold",
             "--candidate", "auto", "--out", str(out)])
        run(["table", str(out / "report.csv"), "--format", "md",
             "--out", str(out / "report.md")])

        print()
        print((out / "report.md").read_text())
    finally:
        shutil.rmtree(root)


if __name__ == "__main__":
    main()

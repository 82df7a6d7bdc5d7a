import json

import numpy as np
import pytest

from surfdice import Mask, Spacing, write_nifti

UNIT = Spacing(1.0, 1.0, 1.0)


def ball_mask(shape, center, radius, spacing=UNIT) -> Mask:
    idx = np.indices(shape)
    d2 = ((idx[0] - center[0]) * spacing.dx) ** 2 \
        + ((idx[1] - center[1]) * spacing.dy) ** 2 \
        + ((idx[2] - center[2]) * spacing.dz) ** 2
    return Mask(occupancy=d2 <= radius * radius, spacing=spacing)


def single_voxel(shape, at, spacing=UNIT) -> Mask:
    occ = np.zeros(shape, dtype=bool)
    occ[at] = True
    return Mask(occupancy=occ, spacing=spacing)


def random_mask(rng, shape, spacing, p=0.4) -> Mask:
    return Mask(occupancy=rng.random(shape) < p, spacing=spacing)


def random_spacing(rng) -> Spacing:
    return Spacing(*(float(x) for x in rng.uniform(0.4, 3.0, size=3)))


@pytest.fixture
def rng():
    return np.random.default_rng(20260822)


@pytest.fixture
def synthetic_dataset(tmp_path):
    """Two patients, three organs, three observers, written as NIfTI + manifest.

    The auto observer is the gold masks rolled one voxel along x, obsB one
    voxel the other way, so every metric value has a closed-form shape.
    """
    root = tmp_path / "dataset"
    (root / "masks").mkdir(parents=True)
    spacing = Spacing(1.0, 1.0, 2.0)
    shape = (24, 24, 16)

    organs = {
        "Brainstem": ball_mask(shape, (12, 12, 8), 5.0, spacing).occupancy,
        "Parotid-Lt": ball_mask(shape, (6, 12, 8), 4.0, spacing).occupancy,
        "Parotid-Rt": ball_mask(shape, (18, 12, 8), 4.0, spacing).occupancy,
    }
    masks = {}
    patients = []
    for pid in ("pat1", "pat2"):
        segs = {}
        for obs, shift in (("gold", 0), ("auto", 1), ("obsB", -1)):
            organ_paths = {}
            for organ, occ in organs.items():
                rolled = np.roll(occ, shift, axis=0) if shift else occ
                rel = f"masks/{pid}_{obs}_{organ}.nii.gz"
                write_nifti(Mask(occupancy=rolled, spacing=spacing), root / rel)
                organ_paths[organ] = rel
                masks[pid, obs, organ] = rolled
            segs[obs] = organ_paths
        patients.append({
            "patient_id": pid,
            "scan_id": f"{pid}-scan",
            "segmentations": segs,
        })

    manifest_path = root / "manifest.json"
    manifest_path.write_text(json.dumps({
        "patients": patients,
        "relevant_organs": {
            "pat1": ["Brainstem", "Parotid-Lt", "Parotid-Rt"],
        },
    }, indent=2))
    return {
        "root": root,
        "manifest": manifest_path,
        "spacing": spacing,
        "shape": shape,
        "masks": masks,
        "organs": tuple(organs),
    }

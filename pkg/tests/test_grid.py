import numpy as np
import pytest

from surfdice import (
    DEFAULT_TAXONOMY,
    CtVolume,
    GridMismatchError,
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
from surfdice.errors import SparseLabelError

from conftest import UNIT, single_voxel


def test_spacing_must_be_positive():
    with pytest.raises(ValueError):
        Spacing(1.0, 0.0, 1.0)
    with pytest.raises(ValueError):
        Spacing(-1.0, 1.0, 1.0)


def test_spacing_isclose_relative():
    a = Spacing(1.0, 1.0, 1.0)
    assert a.isclose(Spacing(1.0 + 1e-8, 1.0, 1.0))
    assert not a.isclose(Spacing(1.001, 1.0, 1.0))


def test_grid_shape_rejects_nonpositive():
    with pytest.raises(ValueError):
        GridShape(0, 3, 3)


def test_mask_normalizes_to_bool_and_freezes():
    m = Mask(occupancy=np.array([[[0, 1]]], dtype=np.int32), spacing=UNIT)
    assert m.occupancy.dtype == np.bool_
    with pytest.raises(ValueError):
        m.occupancy[0, 0, 0] = True


def test_mask_rejects_nonbinary():
    with pytest.raises(ValueError):
        Mask(occupancy=np.array([[[0, 2]]]), spacing=UNIT)


def test_mask_counts():
    m = single_voxel((3, 3, 3), (1, 1, 1))
    assert m.voxel_count() == 1
    assert not m.is_empty()
    assert Mask(occupancy=np.zeros((2, 2, 2), dtype=bool), spacing=UNIT).is_empty()


def test_mask_volume_uses_spacing():
    m = single_voxel((3, 3, 3), (1, 1, 1), spacing=Spacing(1.0, 2.0, 3.0))
    assert mask_volume(m) == 6.0


def test_ct_volume_casts_float32():
    v = CtVolume(intensities=np.zeros((2, 2, 2), dtype=np.float64), spacing=UNIT)
    assert v.intensities.dtype == np.float32


def test_validate_compatible_reports_axis():
    a = Mask(occupancy=np.zeros((2, 2, 2), dtype=bool), spacing=UNIT)
    b = Mask(occupancy=np.zeros((2, 2, 3), dtype=bool), spacing=UNIT)
    with pytest.raises(GridMismatchError, match="shape"):
        validate_compatible(a, b)
    c = Mask(occupancy=np.zeros((2, 2, 2), dtype=bool), spacing=Spacing(1.0, 1.0, 2.0))
    with pytest.raises(GridMismatchError, match="spacing"):
        validate_compatible(a, c)


def test_bounding_box_and_union():
    m = single_voxel((5, 5, 5), (2, 3, 4))
    box = bounding_box(m)
    assert box.lo == (2, 3, 4) and box.hi == (2, 3, 4)
    padded = bounding_box(m, pad_voxels=2)
    assert padded.lo == (0, 1, 2)
    assert padded.hi == (4, 4, 4)  # clamped to the grid
    other = VoxelBox(lo=(0, 0, 0), hi=(1, 1, 1))
    joined = box.union(other)
    assert joined.lo == (0, 0, 0) and joined.hi == (2, 3, 4)


def test_bounding_box_empty_is_none():
    m = Mask(occupancy=np.zeros((4, 4, 4), dtype=bool), spacing=UNIT)
    assert bounding_box(m) is None


def test_box_slices_are_inclusive():
    box = VoxelBox(lo=(1, 0, 2), hi=(2, 0, 3))
    occ = np.zeros((4, 4, 4), dtype=bool)
    occ[box.slices] = True
    assert occ.sum() == 2 * 1 * 2


def test_taxonomy_mirror_name():
    t = DEFAULT_TAXONOMY
    assert t.mirror_name("Parotid-Lt") == "Parotid-Rt"
    assert t.mirror_name("Parotid-Rt") == "Parotid-Lt"
    assert t.mirror_name("Brainstem") == "Brainstem"
    assert "Mandible" in t


def test_taxonomy_rejects_bad_pairs():
    with pytest.raises(ValueError):
        OrganTaxonomy(organs=("A",), pairs=(("A", "B"),))


def test_multi_organ_segmentation_validates():
    a = single_voxel((3, 3, 3), (0, 0, 0))
    with pytest.raises(ValueError, match="unknown organ"):
        MultiOrganSegmentation(channels={"NotAnOrgan": a})
    b = single_voxel((3, 3, 4), (0, 0, 0))
    with pytest.raises(GridMismatchError):
        MultiOrganSegmentation(channels={"Brainstem": a, "Mandible": b})
    seg = MultiOrganSegmentation(channels={"Brainstem": a})
    assert seg.spacing == UNIT


def test_sparse_labels_plane_union():
    labelled = np.zeros((4, 4, 4), dtype=bool)
    labelled[:, :, 1] = True
    values = np.zeros((4, 4, 4), dtype=bool)
    values[2, 2, 1] = True
    sp = SparseLabels(
        labelled=Mask(occupancy=labelled, spacing=UNIT),
        values=Mask(occupancy=values, spacing=UNIT),
    )
    assert sp.labelled.voxel_count() == 16


def test_sparse_labels_reject_blob():
    # a lone labelled voxel is not a full plane along any axis
    labelled = np.zeros((4, 4, 4), dtype=bool)
    labelled[1, 1, 1] = True
    empty = Mask(occupancy=np.zeros((4, 4, 4), dtype=bool), spacing=UNIT)
    with pytest.raises(SparseLabelError):
        SparseLabels(labelled=Mask(occupancy=labelled, spacing=UNIT), values=empty)


def test_sparse_labels_values_must_stay_inside():
    labelled = np.zeros((4, 4, 4), dtype=bool)
    labelled[:, :, 1] = True
    values = np.zeros((4, 4, 4), dtype=bool)
    values[0, 0, 2] = True
    with pytest.raises(SparseLabelError):
        SparseLabels(
            labelled=Mask(occupancy=labelled, spacing=UNIT),
            values=Mask(occupancy=values, spacing=UNIT),
        )

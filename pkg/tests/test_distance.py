import numpy as np
import pytest

from surfdice import Mask, Spacing, distance_transform, distances_to_other_surface, extract_surface

import oracles
from conftest import UNIT, random_mask, random_spacing, single_voxel


def _raster_occupancy(surf):
    on = np.zeros(surf.raster_shape, dtype=bool)
    on[tuple((surf.raster_indices + 1).T)] = True
    return on


def test_empty_source_is_all_infinite():
    surf = extract_surface(Mask(occupancy=np.zeros((3, 3, 3), dtype=bool),
                                spacing=UNIT))
    dmap = distance_transform(surf, (4, 4, 4), UNIT)
    assert dmap.source_empty
    assert np.isinf(dmap.dist).all()


def test_distance_zero_on_the_source_itself():
    surf = extract_surface(single_voxel((4, 4, 4), (1, 2, 1)))
    dmap = distance_transform(surf, surf.raster_shape, UNIT)
    assert not dmap.source_empty
    on = _raster_occupancy(surf)
    assert (dmap.dist[on] == 0.0).all()
    assert (dmap.dist[~on] > 0.0).all()


def test_matches_all_pairs_oracle(rng):
    # the separable transform must agree with brute-force all-pairs search
    # on random anisotropic instances, bit for bit
    for _ in range(30):
        spacing = random_spacing(rng)
        shape = tuple(int(n) for n in rng.integers(2, 6, size=3))
        m = random_mask(rng, shape, spacing)
        surf = extract_surface(m)
        if len(surf) == 0:
            continue
        dmap = distance_transform(surf, surf.raster_shape, spacing)
        expected = oracles.brute_edt(_raster_occupancy(surf), tuple(spacing))
        np.testing.assert_array_equal(dmap.dist, expected)


def test_anisotropic_axis_weighting():
    spacing = Spacing(1.0, 1.0, 5.0)
    surf = extract_surface(single_voxel((5, 5, 5), (2, 2, 2), spacing=spacing))
    dmap = distance_transform(surf, surf.raster_shape, spacing)
    # one raster step along z costs 5 mm, along x only 1 mm
    on = _raster_occupancy(surf)
    base = np.argwhere(on).min(axis=0)
    assert dmap.dist[tuple(base + (0, 0, 2))] == pytest.approx(5.0)
    assert dmap.dist[tuple(base + (2, 0, 0))] == pytest.approx(1.0)


def test_pairing_preserves_element_order(rng):
    a = random_mask(rng, (5, 5, 5), UNIT, p=0.3)
    b = single_voxel((5, 5, 5), (2, 2, 2))
    surf_a = extract_surface(a)
    surf_b = extract_surface(b)
    dmap_b = distance_transform(surf_b, surf_b.raster_shape, UNIT)
    pairs = distances_to_other_surface(surf_a, dmap_b)
    assert pairs.shape == (len(surf_a), 2)
    np.testing.assert_array_equal(pairs[:, 0], surf_a.areas)
    pts_a = surf_a.positions()
    pts_b = surf_b.positions()
    expected = oracles.brute_min_distances([tuple(p) for p in pts_a],
                                           [tuple(p) for p in pts_b])
    np.testing.assert_allclose(pairs[:, 1], expected, rtol=1e-12, atol=1e-12)


def test_pairing_against_empty_map_is_infinite():
    surf = extract_surface(single_voxel((3, 3, 3), (1, 1, 1)))
    empty = extract_surface(Mask(occupancy=np.zeros((3, 3, 3), dtype=bool),
                                 spacing=UNIT))
    dmap = distance_transform(empty, surf.raster_shape, UNIT)
    pairs = distances_to_other_surface(surf, dmap)
    assert np.isinf(pairs[:, 1]).all()


def test_out_of_shape_indices_rejected():
    surf = extract_surface(single_voxel((4, 4, 4), (3, 3, 3)))
    with pytest.raises(ValueError):
        distance_transform(surf, (3, 3, 3), UNIT)

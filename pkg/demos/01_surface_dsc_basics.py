"""Two spheres, one tolerance: the shortest path through the core metric.

Builds a pair of slightly offset balls, scores them at a few tolerances,
and prints the full breakdown so the area bookkeeping is visible.
"""

import numpy as np

from surfdice import Mask, Spacing, surface_dsc, volumetric_dsc


def ball(shape, center, radius_mm, spacing):
    idx = np.indices(shape, dtype=np.float64)
    d = spacing.as_array()
    sq = np.zeros(shape)
    for axis in range(3):
        sq += ((idx[axis] - center[axis]) * d[axis]) ** 2
    return Mask(occupancy=sq <= radius_mm * radius_mm, spacing=spacing)


def main():
    spacing = Spacing(0.98, 0.98, 2.5)
    a = ball((48, 48, 24), (24, 24, 12), 15.0, spacing)
    b = ball((48, 48, 24), (26, 24, 12), 15.0, spacing)

    print(f"volumetric dsc: {volumetric_dsc(a, b):.4f}")
    print()
    print("tau_mm  quantized  surface_dsc  overlap_1/total_1 (mm^2)")
    for tau in (0.0, 1.0, 2.0, 3.0, 5.0):
        r = surface_dsc(a, b, tau)
        print(f"{tau:6.1f}  {r.quantized_tau:9.3f}  {r.value:11.4f}"
              f"  {r.overlap_area_1:8.1f}/{r.total_area_1:8.1f}")
    print()
    print("the volumetric score hides the 2 mm systematic shift;")
    print("the surface score at tau=1 mm does not")


if __name__ == "__main__":
    main()

"""Volumetric DSC when only some slices were ever labelled.

Annotators often mark every nth slice. Scoring a prediction against that
needs two rules: count hits only inside the labelled region, and pool the
counts across cases before dividing. This script shows both, and why the
naive per-case mean is the wrong pooling.
"""

import numpy as np

from surfdice import Mask, SparseLabels, Spacing, sparse_volumetric_dsc, volumetric_dsc


def main():
    spacing = Spacing(1.0, 1.0, 3.0)
    shape = (24, 24, 12)

    truth = np.zeros(shape, dtype=bool)
    truth[6:18, 6:18, :] = True
    pred = np.roll(truth, 2, axis=0)

    dense = volumetric_dsc(Mask(truth, spacing), Mask(pred, spacing))
    print(f"dense volumetric dsc (full annotation): {dense:.4f}")

    # keep every third slice, as an annotator on a budget would
    labelled = np.zeros(shape, dtype=bool)
    labelled[:, :, ::3] = True
    case = (SparseLabels(labelled=Mask(labelled, spacing),
                         values=Mask(truth & labelled, spacing)),
            Mask(pred, spacing))
    sparse = sparse_volumetric_dsc([case])
    print(f"sparse estimate from every third slice:  {sparse:.4f}")

    # pooling across unequal cases: counts add up before the ratio
    big_lab = np.zeros(shape, dtype=bool)
    big_lab[:, :, 1] = True
    big_truth = np.zeros(shape, dtype=bool)
    big_truth[:, 0:12, 1] = True
    big_pred = np.roll(big_truth, 12, axis=1)
    tiny_truth = truth & labelled

    cases = [
        (SparseLabels(labelled=Mask(labelled, spacing),
                      values=Mask(tiny_truth, spacing)), Mask(truth, spacing)),
        (SparseLabels(labelled=Mask(big_lab, spacing),
                      values=Mask(big_truth, spacing)), Mask(big_pred, spacing)),
    ]
    per_case = [sparse_volumetric_dsc([c]) for c in cases]
    pooled = sparse_volumetric_dsc(cases)
    print()
    print(f"case scores {per_case[0]:.2f} and {per_case[1]:.2f}, "
          f"pooled {pooled:.4f} (mean would say {np.mean(per_case):.2f})")


if __name__ == "__main__":
    main()

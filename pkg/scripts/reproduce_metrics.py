"""Recompute the macro metrics of the 210-sample reference confusion matrix.

Prints each metric next to the reference figure it should match. Specificity
follows the usual TN / (TN + FP) definition, which does not give the reference
value; both are shown.
"""

import numpy as np

from motorpm import metrics as M
from motorpm.harness import format_confusion, pct

CM = np.array([[76, 0, 0], [0, 72, 0], [15, 0, 47]])
REFERENCE = {
    "accuracy": "92.86",
    "precision_macro": "94.51",
    "recall_macro": "91.94",
    "specificity_macro": "94.51",
    "f1_macro": "92.42",
}


def main():
    print(format_confusion(CM))
    rep = M.metric_report(CM).as_dict()
    print(f"{'metric':<20}{'computed':>10}{'reference':>10}")
    for k, ref in REFERENCE.items():
        mark = "" if str(pct(rep[k])) == ref else "   <- differs"
        print(f"{k:<20}{str(pct(rep[k])):>10}{ref:>10}{mark}")
    print()
    for c, name in enumerate(("H", "B", "PM")):
        b = M.binary_counts(CM, c)
        print(f"{name:<3} tp={b.tp:<3} fp={b.fp:<3} tn={b.tn:<4} fn={b.fn:<3} "
              f"P={M.precision(b):.5f} R={M.recall(b):.5f} S={M.specificity(b):.5f} F1={M.f1(b):.5f}")


if __name__ == "__main__":
    main()

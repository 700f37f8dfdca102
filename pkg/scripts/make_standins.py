"""Regenerate the synthetic stand-ins for the two clinical CSV files.

The stand-ins copy the column layout and group sizes of the public files
(heart failure clinical records; Wisconsin diagnostic breast cancer) so the
ingestion path and the CLI can be exercised without the real data.
"""
import csv
import os

from qfuse.data import (
    BREAST_CANCER_COLUMNS,
    HEART_FAILURE_COLUMNS,
    HEART_FAILURE_LABEL,
    breast_cancer_standin,
    heart_failure_standin,
)

OUT = os.path.join(os.path.dirname(__file__), "..", "src", "qfuse", "standins")


def _cell(v):
    v = float(v)
    return str(int(v)) if v.is_integer() else repr(v)


def main():
    os.makedirs(OUT, exist_ok=True)
    hf = heart_failure_standin()
    with open(os.path.join(OUT, "heart_failure_standin.csv"), "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(HEART_FAILURE_COLUMNS + [HEART_FAILURE_LABEL])
        for row, label in zip(hf.features, hf.labels):
            writer.writerow([_cell(v) for v in row] + [label])
    bc = breast_cancer_standin()
    with open(os.path.join(OUT, "breast_cancer_standin.csv"), "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["id", "diagnosis"] + BREAST_CANCER_COLUMNS)
        for i, (row, label) in enumerate(zip(bc.features, bc.labels)):
            writer.writerow([900000 + i, label] + [_cell(v) for v in row])


if __name__ == "__main__":
    main()

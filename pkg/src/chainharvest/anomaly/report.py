"""Outlier report: merge method flags, join annotations, rank by consensus."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Optional

from ..features import FEATURE_COLUMNS, FeatureMatrix
from .svm import SvmModel, svm_outliers

METHODS = ("ocsvm", "kmeans", "svm")


@dataclass(frozen=True)
class ReportRow:
    address: str
    flagged_by: tuple[str, ...]  # subset of METHODS, in canonical order
    features: tuple[float, ...]
    annotation: Optional[str] = None


@dataclass
class OutlierReport:
    rows: list[ReportRow]

    def to_doc(self) -> dict:
        return {
            "outliers": [
                {
                    "address": r.address,
                    "flagged_by": list(r.flagged_by),
                    "annotation": r.annotation,
                    "features": dict(zip(FEATURE_COLUMNS, r.features)),
                }
                for r in self.rows
            ]
        }

    def render_text(self) -> str:
        """Fixed-width ranked table, one flagged address per line."""
        header = f"{'address':44} {'methods':20} {'annotation':16} " + " ".join(
            f"{c:>22}" for c in FEATURE_COLUMNS
        )
        lines = [header, "-" * len(header)]
        for r in self.rows:
            methods = "+".join(r.flagged_by)
            annotation = r.annotation or "-"
            feat = " ".join(f"{v:22.6g}" for v in r.features)
            lines.append(f"{r.address:44} {methods:20} {annotation:16} {feat}")
        return "\n".join(lines) + "\n"


def load_annotations(path: str | Path) -> dict[str, str]:
    """Read the offline address,label,source CSV (header row required)."""
    out: dict[str, str] = {}
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header[:2]] != ["address", "label"]:
            raise ValueError("annotations file must start with address,label[,source]")
        for record in reader:
            if len(record) >= 2 and record[0]:
                out[record[0].strip().lower()] = record[1].strip()
    return out


def build_report(
    m: FeatureMatrix,
    ocsvm_out: set[str],
    kmeans_out: set[str],
    svm_model: Optional[SvmModel] = None,
    annotations: Optional[Mapping[str, str]] = None,
    svm_out: Optional[set[str]] = None,
) -> OutlierReport:
    """Union of flagged addresses ranked by how many methods agree.

    Ties order by address so output is reproducible. The annotation map
    is the offline stand-in for public rogue-account listings. SVM flags
    come from the model's non-dominant predictions, or directly from
    svm_out when the flags were computed elsewhere.
    """
    flags: dict[str, set[str]] = {}
    for addr in ocsvm_out:
        flags.setdefault(addr, set()).add("ocsvm")
    for addr in kmeans_out:
        flags.setdefault(addr, set()).add("kmeans")
    if svm_out is None and svm_model is not None:
        svm_out = svm_outliers(svm_model, m)
    for addr in svm_out or ():
        flags.setdefault(addr, set()).add("svm")

    annotations = annotations or {}
    index = {addr: i for i, addr in enumerate(m.addresses)}
    rows = []
    for addr, methods in flags.items():
        if addr not in index:
            continue
        rows.append(ReportRow(
            address=addr,
            flagged_by=tuple(meth for meth in METHODS if meth in methods),
            features=tuple(float(v) for v in m.matrix[index[addr]]),
            annotation=annotations.get(addr),
        ))
    rows.sort(key=lambda r: (-len(r.flagged_by), r.address))
    return OutlierReport(rows)

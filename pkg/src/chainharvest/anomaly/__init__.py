"""Outlier detection suite: OCSVM, K-Means, cluster-label SVM, metrics, report."""

from .kmeans import BadK, KMeansModel, kmeans_fit, kmeans_outliers
from .metrics import (
    ConfusionMatrix,
    EmptyReference,
    LengthMismatch,
    confusion_and_agreement,
    overlap_rate,
)
from .ocsvm import BadParam, DimensionMismatch, OcsvmModel, ocsvm_fit, ocsvm_outliers, rbf_kernel
from .report import OutlierReport, ReportRow, build_report, load_annotations
from .svm import BadSplit, SingleClass, SvmModel, svm_fit, svm_outliers

__all__ = [
    "BadK",
    "BadParam",
    "BadSplit",
    "ConfusionMatrix",
    "DimensionMismatch",
    "EmptyReference",
    "KMeansModel",
    "LengthMismatch",
    "OcsvmModel",
    "OutlierReport",
    "ReportRow",
    "SingleClass",
    "SvmModel",
    "build_report",
    "confusion_and_agreement",
    "kmeans_fit",
    "kmeans_outliers",
    "load_annotations",
    "ocsvm_fit",
    "ocsvm_outliers",
    "overlap_rate",
    "rbf_kernel",
    "svm_fit",
    "svm_outliers",
]

"""
Confusion-matrix evaluation and the decision tree vs k-NN comparison report.
"""

import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from .errors import (
    EmptyInput,
    EmptyMatrix,
    InputNotFound,
    LengthMismatch,
    MalformedField,
    MalformedHeader,
    ModelFormatError,
    TestSetMismatch,
)
from .features import LabeledInstance, PriceClass
from .ingest import QUERY_COLUMNS

logger = logging.getLogger(__name__)

REPORT_FORMAT = "propclass.report"
COMPARISON_FORMAT = "propclass.comparison"
REPORT_VERSION = 1

CLASS_LABELS = tuple(c.label for c in PriceClass)
COMPARISON_ROWS = (
    "Data Source",
    "Measurement Indicator",
    "Analysis",
    "Result of Accuracy",
)

Counts3x3 = Tuple[Tuple[int, int, int], Tuple[int, int, int], Tuple[int, int, int]]


@dataclass(frozen=True)
class ConfusionMatrix:
    """
    Observed x predicted counts. Rows are the observed class, columns the
    predicted class, both in A, B, C order.
    """

    counts: Counts3x3

    def __post_init__(self):
        arr = np.asarray(self.counts)
        if arr.shape != (3, 3):
            raise ValueError(f"Confusion matrix must be 3x3, got shape {arr.shape}")
        if not np.issubdtype(arr.dtype, np.integer) or (arr < 0).any():
            raise ValueError(
                f"Confusion matrix entries must be non-negative integers: {self.counts}"
            )
        counts = tuple(tuple(int(v) for v in row) for row in arr)
        object.__setattr__(self, "counts", counts)

    @classmethod
    def zeros(cls) -> "ConfusionMatrix":
        return cls(((0, 0, 0), (0, 0, 0), (0, 0, 0)))

    def array(self) -> np.ndarray:
        return np.array(self.counts, dtype=np.int64)

    @property
    def total(self) -> int:
        return int(self.array().sum())

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        return ConfusionMatrix(self.array() + other.array())

    def to_dict(self) -> Dict[str, Any]:
        return {"labels": list(CLASS_LABELS), "counts": [list(r) for r in self.counts]}

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "ConfusionMatrix":
        if list(d["labels"]) != list(CLASS_LABELS):
            raise ValueError(f"Unexpected matrix labels: {d['labels']}")
        return cls(tuple(tuple(int(v) for v in row) for row in d["counts"]))


def accumulate(
    truths: Sequence[PriceClass], preds: Sequence[PriceClass]
) -> ConfusionMatrix:
    """Count each (observed, predicted) pair."""
    if len(truths) != len(preds):
        raise LengthMismatch(len(truths), len(preds))
    if len(truths) == 0:
        raise EmptyInput()
    t = np.fromiter((int(x) for x in truths), dtype=np.int64, count=len(truths))
    p = np.fromiter((int(x) for x in preds), dtype=np.int64, count=len(preds))
    flat = np.bincount(t * 3 + p, minlength=9)
    return ConfusionMatrix(flat.reshape(3, 3))


def per_class_recall(cm: ConfusionMatrix) -> Tuple[Optional[float], ...]:
    """Diagonal over row sum per class. None where the class never occurs."""
    arr = cm.array()
    rows = arr.sum(axis=1)
    return tuple(
        float(arr[c, c] / rows[c]) if rows[c] > 0 else None
        for c in range(len(PriceClass))
    )


def overall_accuracy(cm: ConfusionMatrix) -> float:
    total = cm.total
    if total == 0:
        raise EmptyMatrix()
    return float(np.trace(cm.array()) / total)


def percent(value: Optional[float]) -> str:
    """1-decimal percentage, "n/a" for an undefined recall."""
    if value is None:
        return "n/a"
    return f"{100 * value:.1f}%"


def _instance_digest(inst: LabeledInstance) -> str:
    # derived size bins are left out; they follow from the sizes
    payload: Dict[str, Any] = {c: getattr(inst, c) for c in QUERY_COLUMNS}
    payload["label"] = inst.label.label
    text = json.dumps(payload, sort_keys=True)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def test_set_fingerprint(instances: Iterable[LabeledInstance]) -> str:
    """
    Order-independent fingerprint of a test set: SHA-256 over the sorted
    per-instance digests, so repeated instances still count.
    """
    digests = sorted(_instance_digest(i) for i in instances)
    return hashlib.sha256("\n".join(digests).encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class EvalReport:
    """
    Evaluation of one model on one test set.

    Args:
        name: Short model name used in comparisons ("tree", "knn").
        matrix: Confusion matrix on the test set.
        descriptor: Classifier name, hyperparameters and seed.
        fingerprint: `test_set_fingerprint` of the evaluated instances.
        provenance: Resolved configuration, seed and input fingerprint.
        metadata: Comparison cells from `describe_tree` / `describe_knn`.
    """

    name: str
    matrix: ConfusionMatrix
    descriptor: str
    fingerprint: str
    provenance: Mapping[str, Any] = field(default_factory=dict)
    metadata: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if not self.descriptor:
            raise ValueError("Report descriptor must not be empty")

    @property
    def per_class_recall(self) -> Tuple[Optional[float], ...]:
        return per_class_recall(self.matrix)

    @property
    def overall_accuracy(self) -> float:
        return overall_accuracy(self.matrix)


def evaluate(
    name: str,
    truths: Sequence[PriceClass],
    preds: Sequence[PriceClass],
    descriptor: str,
    fingerprint: str,
    provenance: Optional[Mapping[str, Any]] = None,
    metadata: Optional[Mapping[str, str]] = None,
) -> EvalReport:
    report = EvalReport(
        name=name,
        matrix=accumulate(truths, preds),
        descriptor=descriptor,
        fingerprint=fingerprint,
        provenance=dict(provenance or {}),
        metadata=dict(metadata or {}),
    )
    logger.info(
        "Evaluated %s on %d instances: accuracy %s",
        name,
        report.matrix.total,
        percent(report.overall_accuracy),
    )
    return report


def format_report_text(report: EvalReport) -> str:
    """Aligned text table: observed rows, predicted columns, correct percentage."""
    title = report.metadata.get("model", report.name)
    head = ["Observed", *CLASS_LABELS, "Correct Percentage"]
    widths = [max(len(head[0]), *(len(c) for c in CLASS_LABELS), len("Overall"))]
    widths += [max(len(c), 9) for c in CLASS_LABELS] + [len(head[-1])]

    def line(cells: Sequence[str]) -> str:
        first = cells[0].ljust(widths[0])
        rest = [c.rjust(w) for c, w in zip(cells[1:], widths[1:], strict=True)]
        return "  ".join([first, *rest]).rstrip()

    lines = [
        f"Model: {title}",
        f"Descriptor: {report.descriptor}",
        f"Test set: {report.fingerprint}",
        "",
        line(["", "Predicted", "", "", ""]),
        line(head),
    ]
    for label, row, recall in zip(
        CLASS_LABELS, report.matrix.counts, report.per_class_recall, strict=True
    ):
        lines.append(line([label, *(str(v) for v in row), percent(recall)]))
    lines.append(line(["Overall", "", "", "", percent(report.overall_accuracy)]))
    if report.provenance:
        lines.append("")
        lines.append("Provenance:")
        for key in sorted(report.provenance):
            lines.append(f"  {key}: {report.provenance[key]}")
    return "\n".join(lines) + "\n"


def report_to_dict(report: EvalReport) -> Dict[str, Any]:
    return {
        "format": REPORT_FORMAT,
        "version": REPORT_VERSION,
        "name": report.name,
        "descriptor": report.descriptor,
        "fingerprint": report.fingerprint,
        "matrix": report.matrix.to_dict(),
        "per_class_recall": dict(
            zip(CLASS_LABELS, report.per_class_recall, strict=True)
        ),
        "overall_accuracy": report.overall_accuracy,
        "provenance": dict(report.provenance),
        "metadata": dict(report.metadata),
    }


def report_from_dict(d: Mapping[str, Any], source: str = "<dict>") -> EvalReport:
    try:
        if d.get("format") != REPORT_FORMAT:
            raise ValueError(f"not a {REPORT_FORMAT} document")
        if d.get("version") != REPORT_VERSION:
            raise ValueError(f"unsupported version {d.get('version')!r}")
        return EvalReport(
            name=str(d["name"]),
            matrix=ConfusionMatrix.from_dict(d["matrix"]),
            descriptor=str(d["descriptor"]),
            fingerprint=str(d["fingerprint"]),
            provenance=dict(d.get("provenance", {})),
            metadata=dict(d.get("metadata", {})),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise ModelFormatError(source, str(e)) from None


def _dump_json(d: Mapping[str, Any]) -> str:
    return json.dumps(d, indent=2, sort_keys=True) + "\n"


def save_report(report: EvalReport, path: Union[str, Path]) -> Path:
    """Write a report as JSON (".json") or as the text table (any other suffix)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if path.suffix == ".json":
        path.write_text(_dump_json(report_to_dict(report)))
    else:
        path.write_text(format_report_text(report))
    return path


def load_report(path: Union[str, Path]) -> EvalReport:
    """Read a JSON report written by `save_report`."""
    path = Path(path)
    if not path.is_file():
        raise InputNotFound(path)
    try:
        d = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise ModelFormatError(path, str(e)) from None
    if not isinstance(d, dict):
        raise ModelFormatError(path, "expected a JSON object")
    return report_from_dict(d, source=str(path))


@dataclass(frozen=True)
class PredictionRows:
    truths: Tuple[PriceClass, ...]
    preds: Tuple[PriceClass, ...]
    fingerprint: str


def _labels(frame: pd.DataFrame, column: str) -> Tuple[PriceClass, ...]:
    out = []
    for offset, value in enumerate(frame[column]):
        try:
            out.append(PriceClass.from_label(str(value)))
        except ValueError as e:
            raise MalformedField(column, value, str(e), offset + 2) from None
    return tuple(out)


def read_predictions(path: Union[str, Path]) -> PredictionRows:
    """
    Read a predictions CSV with `observed` and `predicted` columns.

    When the listing feature columns are present too, the fingerprint is the
    `test_set_fingerprint` of those rows, so the report can be compared with
    one from a pipeline run on the same test set. Otherwise it is a digest of
    the observed labels.
    """
    path = Path(path)
    if not path.is_file():
        raise InputNotFound(path)
    try:
        frame = pd.read_csv(
            path, dtype=str, keep_default_na=False, encoding="utf-8-sig"
        )
    except pd.errors.EmptyDataError:
        raise MalformedHeader(("observed", "predicted"), ()) from None
    header = [str(c).strip() for c in frame.columns]
    frame.columns = header
    if "observed" not in header or "predicted" not in header:
        raise MalformedHeader(("observed", "predicted"), header)
    truths = _labels(frame, "observed")
    preds = _labels(frame, "predicted")
    if all(c in header for c in QUERY_COLUMNS):
        try:
            instances = [
                LabeledInstance(
                    location=str(row["location"]).strip(),
                    building_size=float(row["building_size"]),
                    land_size=float(row["land_size"]),
                    bedroom=int(float(row["bedroom"])),
                    bathroom=int(float(row["bathroom"])),
                    label=truth,
                )
                for row, truth in zip(frame.to_dict("records"), truths, strict=True)
            ]
        except ValueError as e:
            raise MalformedField("features", str(path.name), str(e)) from None
        fingerprint = test_set_fingerprint(instances)
    else:
        text = "\n".join(sorted(t.label for t in truths))
        fingerprint = hashlib.sha256(text.encode("utf-8")).hexdigest()
    logger.info("Read %d predictions from %s", len(truths), path.name)
    return PredictionRows(truths, preds, fingerprint)


@dataclass(frozen=True)
class ComparisonReport:
    """
    Side-by-side comparison of two reports on the same test set.

    `rows` maps each of COMPARISON_ROWS to one cell per model; `better` is the
    name of the more accurate model or "tie".
    """

    models: Tuple[str, str]
    titles: Tuple[str, str]
    rows: Mapping[str, Tuple[str, str]]
    accuracies: Tuple[float, float]
    better: str
    fingerprint: str


def _cells(report: EvalReport) -> List[str]:
    meta = report.metadata
    return [
        str(report.provenance.get("data_source", "unknown")),
        meta.get("measurement_indicator", report.descriptor),
        meta.get("analysis", report.descriptor),
        percent(report.overall_accuracy),
    ]


def compare(a: EvalReport, b: EvalReport) -> ComparisonReport:
    """Compare two reports; both must have been computed on the same test set."""
    if a.fingerprint != b.fingerprint:
        raise TestSetMismatch(a.fingerprint, b.fingerprint)
    acc_a, acc_b = a.overall_accuracy, b.overall_accuracy
    if acc_a > acc_b:
        better = a.name
    elif acc_b > acc_a:
        better = b.name
    else:
        better = "tie"
    cells = zip(_cells(a), _cells(b), strict=True)
    rows = dict(zip(COMPARISON_ROWS, cells, strict=True))
    logger.info("Compared %s vs %s: %s", a.name, b.name, better)
    return ComparisonReport(
        models=(a.name, b.name),
        titles=(a.metadata.get("model", a.name), b.metadata.get("model", b.name)),
        rows=rows,
        accuracies=(acc_a, acc_b),
        better=better,
        fingerprint=a.fingerprint,
    )


def format_comparison_text(report: ComparisonReport) -> str:
    """Two-column table, one row per comparison item, plus the verdict."""
    first = max(len(r) for r in COMPARISON_ROWS)
    lines = [f"Comparison: {report.titles[0]} vs {report.titles[1]}", ""]
    for row in COMPARISON_ROWS:
        a, b = report.rows[row]
        lines.append(f"{row.ljust(first)}  {report.titles[0]}: {a}")
        lines.append(f"{''.ljust(first)}  {report.titles[1]}: {b}")
    if report.better == "tie":
        verdict = "Both models reach the same accuracy (tie)"
    else:
        verdict = f"Better accuracy: {report.better}"
    lines += ["", verdict, f"Test set: {report.fingerprint}"]
    return "\n".join(lines) + "\n"


def comparison_to_dict(report: ComparisonReport) -> Dict[str, Any]:
    return {
        "format": COMPARISON_FORMAT,
        "version": REPORT_VERSION,
        "models": list(report.models),
        "titles": list(report.titles),
        "rows": {k: list(v) for k, v in report.rows.items()},
        "accuracies": list(report.accuracies),
        "better": report.better,
        "fingerprint": report.fingerprint,
    }


def save_comparison(report: ComparisonReport, path: Union[str, Path]) -> Path:
    """Write a comparison as JSON (".json") or as text (any other suffix)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if path.suffix == ".json":
        path.write_text(_dump_json(comparison_to_dict(report)))
    else:
        path.write_text(format_comparison_text(report))
    return path

"""Scoring: exact-match accuracy, confusion matrix, per-class metrics, and
report files.

The confusion matrix is square over the menu's terminal paths plus two
predicted-only columns: INVALID (the reply failed the output grammar) and
UNKNOWN_PATH (a well-formed path that is not a terminal of the menu).
Dropping either kind would silently inflate accuracy, so both stay visible;
the plain paths-by-paths view is the submatrix without those columns.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .router import INVALID, RoutingResult

UNKNOWN_PATH = "UNKNOWN_PATH"

EXTRA_COLUMNS = (INVALID, UNKNOWN_PATH)

_CONDITION_DISPLAY = {
    "descriptive_menu": "Descriptive Menu",
    "flattened_paths": "Flattened Paths",
}
_FILTER_DISPLAY = {"base_only": "Base Only", "all": "Augmented"}


@dataclass
class ConfusionMatrix:
    true_labels: list[str]
    predicted_labels: list[str]  # true_labels + [INVALID, UNKNOWN_PATH]
    counts: list[list[int]]  # indexed [true][predicted]

    def count(self, true_label: str, predicted_label: str) -> int:
        return self.counts[self.true_labels.index(true_label)][
            self.predicted_labels.index(predicted_label)
        ]

    def row_sum(self, true_label: str) -> int:
        return sum(self.counts[self.true_labels.index(true_label)])

    def total(self) -> int:
        return sum(sum(row) for row in self.counts)


@dataclass
class ClassMetrics:
    label: str
    precision: float
    recall: float
    f1: float
    support: int
    precision_defined: bool
    recall_defined: bool


@dataclass
class EvalReport:
    accuracy: float
    n: int
    matrix: ConfusionMatrix
    per_class: list[ClassMetrics]
    condition: str
    dataset_filter: str
    model_name: str


def accuracy(results: Sequence[RoutingResult]) -> float:
    if not results:
        raise ValueError("no results to score")
    return sum(1 for r in results if r.correct) / len(results)


def confusion_matrix(
    results: Sequence[RoutingResult], classes: Sequence[str]
) -> ConfusionMatrix:
    """counts[t][p] over the given true classes; invalid replies land in the
    INVALID column, well-formed non-terminal paths in UNKNOWN_PATH."""
    true_labels = list(classes)
    predicted_labels = true_labels + list(EXTRA_COLUMNS)
    row_index = {label: i for i, label in enumerate(true_labels)}
    col_index = {label: i for i, label in enumerate(predicted_labels)}
    counts = [[0] * len(predicted_labels) for _ in true_labels]
    for result in results:
        if result.ground_truth not in row_index:
            raise ValueError(
                f"result {result.intent_id}: ground truth {result.ground_truth} "
                "is outside the class list"
            )
        row = row_index[result.ground_truth]
        if result.predicted == INVALID:
            col = col_index[INVALID]
        elif result.predicted in col_index:
            col = col_index[result.predicted]
        else:
            col = col_index[UNKNOWN_PATH]
        counts[row][col] += 1
    return ConfusionMatrix(true_labels, predicted_labels, counts)


def per_class_metrics(matrix: ConfusionMatrix) -> list[ClassMetrics]:
    """Precision, recall, F1, support per true class.

    Undefined ratios (no support, or an empty predicted column) are reported
    as 0.0 with the matching *_defined flag cleared instead of NaN.
    """
    metrics = []
    for i, label in enumerate(matrix.true_labels):
        tp = matrix.counts[i][i]
        support = sum(matrix.counts[i])
        column = sum(row[i] for row in matrix.counts)
        recall_defined = support > 0
        precision_defined = column > 0
        recall = tp / support if recall_defined else 0.0
        precision = tp / column if precision_defined else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
        metrics.append(
            ClassMetrics(
                label=label,
                precision=precision,
                recall=recall,
                f1=f1,
                support=support,
                precision_defined=precision_defined,
                recall_defined=recall_defined,
            )
        )
    return metrics


def build_report(
    results: Sequence[RoutingResult],
    classes: Sequence[str],
    condition: str,
    dataset_filter: str,
    model_name: str,
) -> EvalReport:
    matrix = confusion_matrix(results, classes)
    return EvalReport(
        accuracy=accuracy(results),
        n=len(results),
        matrix=matrix,
        per_class=per_class_metrics(matrix),
        condition=condition,
        dataset_filter=dataset_filter,
        model_name=model_name,
    )


def format_percent(fraction: float) -> str:
    return f"{fraction * 100:.2f}"


# --- emission ------------------------------------------------------------------

def report_to_json(report: EvalReport) -> dict:
    return {
        "accuracy": report.accuracy,
        "n": report.n,
        "condition": report.condition,
        "dataset_filter": report.dataset_filter,
        "model_name": report.model_name,
        "matrix": {
            "true_labels": report.matrix.true_labels,
            "predicted_labels": report.matrix.predicted_labels,
            "counts": report.matrix.counts,
        },
        "per_class": [
            {
                "class": m.label,
                "precision": m.precision,
                "recall": m.recall,
                "f1": m.f1,
                "support": m.support,
                "precision_defined": m.precision_defined,
                "recall_defined": m.recall_defined,
            }
            for m in report.per_class
        ],
    }


def report_from_json(data: dict) -> EvalReport:
    matrix = ConfusionMatrix(
        true_labels=list(data["matrix"]["true_labels"]),
        predicted_labels=list(data["matrix"]["predicted_labels"]),
        counts=[list(row) for row in data["matrix"]["counts"]],
    )
    per_class = [
        ClassMetrics(
            label=m["class"],
            precision=m["precision"],
            recall=m["recall"],
            f1=m["f1"],
            support=m["support"],
            precision_defined=m["precision_defined"],
            recall_defined=m["recall_defined"],
        )
        for m in data["per_class"]
    ]
    return EvalReport(
        accuracy=data["accuracy"],
        n=data["n"],
        matrix=matrix,
        per_class=per_class,
        condition=data["condition"],
        dataset_filter=data["dataset_filter"],
        model_name=data["model_name"],
    )


def matrix_csv(matrix: ConfusionMatrix) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["true\\predicted"] + matrix.predicted_labels)
    for label, row in zip(matrix.true_labels, matrix.counts):
        writer.writerow([label] + row)
    return buffer.getvalue()


def matrix_long_csv(matrix: ConfusionMatrix) -> str:
    """Long-form (true, predicted, count) rows, ready for heatmap plotting."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["true", "predicted", "count"])
    for label, row in zip(matrix.true_labels, matrix.counts):
        for predicted, count in zip(matrix.predicted_labels, row):
            writer.writerow([label, predicted, count])
    return buffer.getvalue()


def summary_markdown(report: EvalReport) -> str:
    condition = _CONDITION_DISPLAY.get(report.condition, report.condition)
    dataset = _FILTER_DISPLAY.get(report.dataset_filter, report.dataset_filter)
    lines = [
        f"# Routing accuracy: {report.model_name}",
        "",
        "| IVR Context | Dataset | Accuracy (%) | N |",
        "| --- | --- | --- | --- |",
        f"| {condition} | {dataset} | {format_percent(report.accuracy)} | {report.n} |",
        "",
        "## Per-class metrics",
        "",
        "| Class | Precision | Recall | F1 | Support |",
        "| --- | --- | --- | --- | --- |",
    ]
    for m in report.per_class:
        precision = f"{m.precision:.2f}" if m.precision_defined else "0.00 (undefined)"
        recall = f"{m.recall:.2f}" if m.recall_defined else "0.00 (undefined)"
        lines.append(
            f"| {m.label} | {precision} | {recall} | {m.f1:.2f} | {m.support} |"
        )
    lines.append("")
    return "\n".join(lines)


def emit_report(
    report: EvalReport,
    out_dir: str | Path,
    formats: set[str] = frozenset({"json", "csv", "markdown"}),
) -> list[Path]:
    """Write the report files; returns the paths written."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if "json" in formats:
        path = out / "report.json"
        path.write_text(
            json.dumps(report_to_json(report), indent=2, ensure_ascii=False) + "\n",
            encoding="utf-8",
        )
        written.append(path)
    if "csv" in formats:
        path = out / "matrix.csv"
        path.write_text(matrix_csv(report.matrix), encoding="utf-8")
        written.append(path)
        path = out / "matrix_long.csv"
        path.write_text(matrix_long_csv(report.matrix), encoding="utf-8")
        written.append(path)
    if "markdown" in formats:
        path = out / "summary.md"
        path.write_text(summary_markdown(report), encoding="utf-8")
        written.append(path)
    return written


def load_report(path: str | Path) -> EvalReport:
    return report_from_json(json.loads(Path(path).read_text(encoding="utf-8")))

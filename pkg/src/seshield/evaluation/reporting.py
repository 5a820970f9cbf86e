"""Table and ROC emission for experiment results."""

from __future__ import annotations

import csv
import json
from pathlib import Path

from .experiments import ProtocolResult
from .metrics import EvalReport

PAPER_COLUMNS = ("F1", "Recall", "Precision", "Accuracy", "Confusion Matrix",
                 "AUC", "DR at 1% FP")


def _format_row(name: str, report: EvalReport, paper_format: bool) -> dict:
    row = report.to_row()
    if paper_format:
        row = {k: (round(v, 4) if isinstance(v, float) else v) for k, v in row.items()}
    return {"Name": name, **row}


def write_table(
    result: ProtocolResult, path: str | Path, paper_format: bool = False
) -> Path:
    """CSV with one row per experiment plus the pooled Global row."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    rows = [_format_row(e.name, e.report, paper_format) for e in result.experiments]
    if len(result.experiments) > 1:
        rows.append(_format_row("Global", result.global_report, paper_format))
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=["Name", *PAPER_COLUMNS])
        writer.writeheader()
        writer.writerows(rows)
    return path


def write_roc(result: ProtocolResult, path: str | Path) -> Path:
    """ROC points of the pooled scores as JSON, for plotting."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        "auc": result.global_report.auc,
        "points": [{"fpr": fpr, "tpr": tpr} for fpr, tpr in result.global_report.roc],
    }
    path.write_text(json.dumps(payload, indent=1), encoding="utf-8")
    return path

"""Write evaluation outputs: report JSON, scatter/importance CSVs, manifests."""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from dataclasses import asdict
from pathlib import Path

from . import __version__

SCATTER_CSV_HEADER = ("condition_id", "actual_mos", "predicted_mos", "repetition", "model")
IMPORTANCE_CSV_HEADER = ("rank", "feature", "importance")


def atomic_write_text(path, text: str) -> Path:
    """Write ``text`` to ``path`` via a temp file so failures leave nothing behind."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise
    return path


def dump_json(doc) -> str:
    return json.dumps(doc, indent=2, allow_nan=False) + "\n"


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def comparison_to_dict(comparison, dataset=None) -> dict:
    doc = {
        "toolkit_version": __version__,
        "cv": asdict(comparison.cv),
        "ranking_by_rmse": comparison.ranking,
        "summary": comparison.table(),
        "models": {r.model: r.to_dict(include_pairs=False) for r in comparison.reports},
    }
    if dataset is not None:
        doc["dataset"] = {
            "n_rows": len(dataset),
            "feature_names": list(dataset.feature_names),
            "provenance": dataset.provenance,
        }
    return doc


def scatter_csv(reports, clamp: bool = False) -> str:
    """Pooled hold-out pairs for every model, one row per prediction."""
    rows = []
    for r in reports:
        for cid, actual, pred, rep in r.pairs:
            if clamp:
                pred = min(5.0, max(1.0, pred))
            rows.append((cid, repr(actual), repr(pred), rep, r.model))
    return _csv_text(SCATTER_CSV_HEADER, rows)


def importance_csv(importances: dict) -> str:
    ranked = sorted(importances.items(), key=lambda kv: (-kv[1], kv[0]))
    return _csv_text(
        IMPORTANCE_CSV_HEADER, ((i + 1, k, repr(v)) for i, (k, v) in enumerate(ranked))
    )


def summary_csv(table) -> str:
    cols = ("model", "rmse", "pearson_r", "abs_err_p95", "outlier_ratio")
    return _csv_text(cols, ([row[c] if row[c] is not None else "" for c in cols] for row in table))


def build_manifest(command: str, config: dict, seed, inputs=None, outputs=None) -> dict:
    return {
        "command": command,
        "toolkit_version": __version__,
        "seed": seed,
        "config": config,
        "inputs": inputs or {},
        "outputs": sorted(str(p) for p in (outputs or [])),
    }

"""Ingest condition/metadata/rating CSVs and assemble the training table."""

from __future__ import annotations

import csv
import hashlib
import math
from collections import OrderedDict
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats

from .domain import (
    CONDITION_CSV_HEADER,
    FEATURE_NAMES,
    METADATA_CSV_HEADER,
    FeatureVector,
    MetadataRecord,
    MOSRecord,
    RatingRecord,
    TestCondition,
    build_feature_vector,
    builtin_source_profiles,
    profile_index,
)
from .errors import (
    DimensionalityMismatch,
    DuplicateCondition,
    EmptyGroup,
    MalformedRow,
    MissingCondition,
    MissingMetadata,
    ScoreOutOfRange,
)

RATINGS_CSV_HEADER = ("condition_id", "subject_id", "score")


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return "sha256:" + h.hexdigest()


def _read_rows(path, header):
    """Yield ``(line_number, row)`` for data rows after checking the header."""
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            first = next(reader)
        except StopIteration:
            raise MalformedRow(path, 1, "missing header") from None
        if tuple(h.strip() for h in first) != tuple(header):
            raise MalformedRow(path, 1, f"expected header {','.join(header)}")
        for row in reader:
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                raise MalformedRow(
                    path, reader.line_num, f"expected {len(header)} fields, got {len(row)}"
                )
            yield reader.line_num, [cell.strip() for cell in row]


def _parse_float(path, line, name, text):
    try:
        value = float(text)
    except ValueError:
        raise MalformedRow(path, line, f"{name}: not a number: {text!r}") from None
    if not math.isfinite(value):
        raise MalformedRow(path, line, f"{name}: not finite: {text!r}")
    return value


def ingest_ratings(path) -> list[RatingRecord]:
    records = []
    for line, (cid, subject, score_text) in _read_rows(path, RATINGS_CSV_HEADER):
        if not cid or not subject:
            raise MalformedRow(path, line, "empty condition_id or subject_id")
        try:
            score = int(score_text)
        except ValueError:
            raise MalformedRow(path, line, f"score is not an integer: {score_text!r}") from None
        if not 1 <= score <= 5:
            raise ScoreOutOfRange(path, line, f"score {score} outside 1..5")
        records.append(RatingRecord(cid, subject, score))
    return records


def ingest_conditions(path) -> list[TestCondition]:
    conditions = []
    for line, (cid, res, rate, bw, plr, jitter) in _read_rows(path, CONDITION_CSV_HEADER):
        try:
            cond = TestCondition(res, rate, bw, _parse_float(path, line, "plr_percent", plr),
                                 _parse_float(path, line, "jitter_ms", jitter))
        except ValueError as exc:
            if isinstance(exc, MalformedRow):
                raise
            raise MalformedRow(path, line, str(exc)) from None
        if cond.condition_id != cid:
            raise MalformedRow(path, line, f"condition_id {cid!r} does not match its factors")
        conditions.append(cond)
    return conditions


def ingest_metadata(path) -> list[MetadataRecord]:
    records = []
    for line, row in _read_rows(path, METADATA_CSV_HEADER):
        values = [
            _parse_float(path, line, name, text)
            for name, text in zip(METADATA_CSV_HEADER[1:], row[1:])
        ]
        records.append(MetadataRecord(row[0], *values))
    return records


def t_quantile_975(df: int) -> float:
    """Two-sided 95% Student-t critical value."""
    return float(stats.t.ppf(0.975, df))


def aggregate_mos(ratings) -> list[MOSRecord]:
    """Average ratings per condition; output follows first appearance order."""
    groups: OrderedDict[str, list[int]] = OrderedDict()
    for r in ratings:
        groups.setdefault(r.condition_id, []).append(r.score)
    out = []
    for cid, scores in groups.items():
        if not scores:
            raise EmptyGroup(cid)
        out.append(summarize_scores(cid, scores))
    return out


def summarize_scores(condition_id: str, scores) -> MOSRecord:
    scores = np.asarray(scores, dtype=float)
    n = scores.size
    if n == 0:
        raise EmptyGroup(condition_id)
    mos = float(scores.mean())
    if n == 1:
        return MOSRecord(condition_id, mos, 1, 0.0, 0.0)
    sd = float(scores.std(ddof=1))
    ci = t_quantile_975(n - 1) * sd / math.sqrt(n) if sd > 0 else 0.0
    return MOSRecord(condition_id, mos, n, sd, ci)


@dataclass(frozen=True)
class Dataset:
    """Feature/target table, one row per rated condition in canonical order."""

    feature_names: tuple[str, ...]
    condition_ids: tuple[str, ...]
    X: np.ndarray
    y: np.ndarray
    ci95: np.ndarray | None = None
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        X = np.array(self.X, dtype=np.float64)
        y = np.array(self.y, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != len(self.feature_names):
            raise DimensionalityMismatch(
                f"feature matrix shape {X.shape} vs {len(self.feature_names)} names"
            )
        if y.shape != (X.shape[0],) or len(self.condition_ids) != X.shape[0]:
            raise DimensionalityMismatch("row count mismatch between ids, features and targets")
        if len(set(self.condition_ids)) != len(self.condition_ids):
            raise DuplicateCondition("duplicate condition_id in dataset")
        if not np.all(np.isfinite(X)):
            raise ValueError("features must be finite")
        if y.size and (y.min() < 1.0 or y.max() > 5.0):
            raise ValueError("targets must lie in [1, 5]")
        X.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        if self.ci95 is not None:
            ci = np.array(self.ci95, dtype=np.float64)
            if ci.shape != y.shape:
                raise DimensionalityMismatch("ci95 length differs from targets")
            ci.flags.writeable = False
            object.__setattr__(self, "ci95", ci)
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        object.__setattr__(self, "condition_ids", tuple(self.condition_ids))

    def __len__(self):
        return self.X.shape[0]

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    @property
    def rows(self):
        for cid, x, t in zip(self.condition_ids, self.X, self.y):
            yield cid, FeatureVector.from_sequence(x), float(t)

    def subset(self, index) -> Dataset:
        index = np.asarray(index, dtype=np.intp)
        return Dataset(
            self.feature_names,
            tuple(self.condition_ids[i] for i in index),
            self.X[index],
            self.y[index],
            None if self.ci95 is None else self.ci95[index],
            self.provenance,
        )


def build_dataset(conditions, profiles, metadata_records, mos_records, provenance=None) -> Dataset:
    cond_by_id = {}
    for c in conditions:
        if c.condition_id in cond_by_id:
            raise DuplicateCondition(f"condition {c.condition_id} listed twice")
        cond_by_id[c.condition_id] = c
    prof_by_key = profile_index(profiles)
    meta_by_id = {}
    for m in metadata_records:
        if m.condition_id in meta_by_id:
            raise DuplicateCondition(f"metadata for {m.condition_id} listed twice")
        meta_by_id[m.condition_id] = m

    rows = []
    seen = set()
    for rec in mos_records:
        cid = rec.condition_id
        if cid in seen:
            raise DuplicateCondition(f"MOS for {cid} listed twice")
        seen.add(cid)
        cond = cond_by_id.get(cid)
        if cond is None:
            raise MissingCondition(f"no test condition for MOS record {cid!r}")
        meta = meta_by_id.get(cid)
        if meta is None:
            raise MissingMetadata(f"no metadata record for condition {cid!r}")
        profile = prof_by_key.get(cond.profile_key)
        if profile is None:
            raise MissingCondition(f"no source profile for {cond.profile_key}")
        fv = build_feature_vector(cond, profile, meta)
        rows.append((cond.sort_key(), cid, fv.as_tuple(), rec.mos, rec.ci95_halfwidth))

    rows.sort(key=lambda r: r[0])
    n = len(rows)
    X = np.array([r[2] for r in rows], dtype=np.float64).reshape(n, len(FEATURE_NAMES))
    return Dataset(
        FEATURE_NAMES,
        tuple(r[1] for r in rows),
        X,
        np.array([r[3] for r in rows], dtype=np.float64),
        np.array([r[4] for r in rows], dtype=np.float64),
        dict(provenance or {}),
    )


def load_dataset(conditions_path, metadata_path, ratings_path, profiles=None) -> Dataset:
    """Read the three input CSVs and join them into a :class:`Dataset`."""
    paths = {
        "conditions": Path(conditions_path),
        "metadata": Path(metadata_path),
        "ratings": Path(ratings_path),
    }
    for role, p in paths.items():
        if not p.is_file():
            raise FileNotFoundError(f"{role} file not found: {p}")
    conditions = ingest_conditions(paths["conditions"])
    metadata = ingest_metadata(paths["metadata"])
    mos = aggregate_mos(ingest_ratings(paths["ratings"]))
    provenance = {role: {"path": str(p), "digest": file_digest(p)} for role, p in paths.items()}
    return build_dataset(
        conditions, profiles or builtin_source_profiles(), metadata, mos, provenance
    )


def _write_csv(path, header, rows):
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    return path


def write_ratings_csv(path, ratings) -> Path:
    return _write_csv(
        path, RATINGS_CSV_HEADER, ((r.condition_id, r.subject_id, r.score) for r in ratings)
    )


def write_metadata_csv(path, records) -> Path:
    return _write_csv(
        path,
        METADATA_CSV_HEADER,
        ([m.condition_id] + [repr(float(getattr(m, k))) for k in METADATA_CSV_HEADER[1:]]
         for m in records),
    )

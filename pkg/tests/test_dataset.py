import math
import random
import statistics

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from avqoe.dataset import (
    aggregate_mos,
    build_dataset,
    ingest_conditions,
    ingest_metadata,
    ingest_ratings,
    load_dataset,
    summarize_scores,
    t_quantile_975,
    write_metadata_csv,
    write_ratings_csv,
)
from avqoe.domain import MOSRecord, RatingRecord, conditions_to_csv
from avqoe.errors import (
    DuplicateCondition,
    EmptyGroup,
    MalformedRow,
    MissingCondition,
    MissingMetadata,
    ScoreOutOfRange,
    UnknownCondition,
)
from avqoe.synth import synthesize_metadata


def _write(tmp_path, name, text):
    p = tmp_path / name
    p.write_bytes(text.encode())
    return p


def test_ingest_single_row(tmp_path):
    p = _write(tmp_path, "r.csv", "condition_id,subject_id,score\nHD720_LQ_High_p0_j0,s01,4\n")
    assert ingest_ratings(p) == [RatingRecord("HD720_LQ_High_p0_j0", "s01", 4)]


def test_ingest_header_only(tmp_path):
    assert ingest_ratings(_write(tmp_path, "r.csv", "condition_id,subject_id,score\n")) == []


def test_ingest_accepts_crlf(tmp_path):
    p = _write(tmp_path, "r.csv", "condition_id,subject_id,score\r\nA,s01,4\r\nA,s02,5\r\n")
    assert [r.score for r in ingest_ratings(p)] == [4, 5]


def test_score_out_of_range_reports_line(tmp_path):
    p = _write(tmp_path, "r.csv", "condition_id,subject_id,score\nA,s01,4\nA,s02,6\n")
    with pytest.raises(ScoreOutOfRange) as exc:
        ingest_ratings(p)
    assert exc.value.line == 3


@pytest.mark.parametrize(
    "body",
    ["A,s01,4.5\n", "A,s01\n", "A,s01,4,extra\n", ",s01,3\n"],
)
def test_malformed_rows(tmp_path, body):
    p = _write(tmp_path, "r.csv", "condition_id,subject_id,score\n" + body)
    with pytest.raises(MalformedRow) as exc:
        ingest_ratings(p)
    assert exc.value.line == 2


def test_wrong_header(tmp_path):
    with pytest.raises(MalformedRow):
        ingest_ratings(_write(tmp_path, "r.csv", "cid,subject,score\nA,s,1\n"))


def test_conditions_roundtrip(tmp_path, matrix):
    p = _write(tmp_path, "c.csv", conditions_to_csv(matrix))
    assert ingest_conditions(p) == matrix


def test_conditions_reject_inconsistent_id(tmp_path):
    text = "condition_id,resolution,bitrate_class,bandwidth_class,plr_percent,jitter_ms\n"
    text += "HD720_LQ_High_p0_j0,HD720,LQ,High,0.1,0\n"
    with pytest.raises(MalformedRow):
        ingest_conditions(_write(tmp_path, "c.csv", text))


def test_metadata_roundtrip(tmp_path, matrix, profiles):
    records = synthesize_metadata(matrix, profiles, seed=3, noise_scale=1.0)
    p = write_metadata_csv(tmp_path / "m.csv", records)
    assert ingest_metadata(p) == records


def test_ratings_roundtrip(tmp_path):
    records = [RatingRecord("A", "s01", 1), RatingRecord("B", "s02", 5)]
    assert ingest_ratings(write_ratings_csv(tmp_path / "r.csv", records)) == records


# --- MOS aggregation ---------------------------------------------------------


def _ratings(cid, scores):
    return [RatingRecord(cid, f"s{i}", s) for i, s in enumerate(scores)]


def test_constant_scores():
    (rec,) = aggregate_mos(_ratings("A", [5, 5, 5]))
    assert (rec.mos, rec.stddev, rec.ci95_halfwidth, rec.n_subjects) == (5.0, 0.0, 0.0, 3)


def test_symmetric_scores():
    assert aggregate_mos(_ratings("A", [1, 5]))[0].mos == 3.0


def test_sample_stddev():
    rec = aggregate_mos(_ratings("A", [4, 4, 3, 5]))[0]
    assert rec.mos == 4.0
    # sum of squared deviations 2 over n-1 = 3
    assert rec.stddev == pytest.approx(math.sqrt(2 / 3), abs=1e-3)
    assert rec.stddev == pytest.approx(0.8165, abs=1e-3)


def test_single_rating_has_zero_spread():
    rec = aggregate_mos(_ratings("A", [3]))[0]
    assert rec.stddev == 0 and rec.ci95_halfwidth == 0


def test_empty_group():
    with pytest.raises(EmptyGroup):
        summarize_scores("A", [])


@pytest.mark.parametrize("df,expected", [(1, 12.706), (2, 4.303), (10, 2.228), (23, 2.069), (40, 2.021)])
def test_t_quantile_against_printed_table(df, expected):
    assert t_quantile_975(df) == pytest.approx(expected, abs=1e-3)


def test_ci_uses_t_distribution():
    rec = aggregate_mos(_ratings("A", [4, 4, 3, 5]))[0]
    assert rec.ci95_halfwidth == pytest.approx(3.182446 * math.sqrt(2 / 3) / 2, rel=1e-5)


@given(st.dictionaries(st.sampled_from("ABCDEFG"), st.lists(st.integers(1, 5), min_size=1, max_size=30), min_size=1))
def test_aggregation_properties(groups):
    ratings = [r for cid, scores in groups.items() for r in _ratings(cid, scores)]
    out = aggregate_mos(ratings)
    assert len(out) == len(groups)
    for rec in out:
        scores = groups[rec.condition_id]
        assert min(scores) <= rec.mos <= max(scores)
        assert rec.mos == pytest.approx(statistics.fmean(scores))
        assert 1 <= rec.mos <= 5
        assert rec.stddev >= 0 and rec.ci95_halfwidth >= 0
        if rec.stddev == 0:
            assert rec.ci95_halfwidth == 0


def test_ci_non_increasing_in_n():
    # fixed spread, growing n: the half-width can only shrink
    sd = 0.7
    widths = [t_quantile_975(n - 1) * sd / math.sqrt(n) for n in range(2, 200)]
    assert all(b <= a for a, b in zip(widths, widths[1:]))


# --- build_dataset -------------------------------------------------------------


def _mos_for(matrix, value=3.0):
    return [MOSRecord(c.condition_id, value, 24, 0.5, 0.2) for c in matrix]


def test_full_join(matrix, profiles):
    ds = build_dataset(matrix, profiles, synthesize_metadata(matrix, profiles), _mos_for(matrix))
    assert len(ds) == 144
    assert ds.condition_ids == tuple(c.condition_id for c in matrix)
    assert ds.n_features == 11


def test_low_bandwidth_feature(matrix, profiles):
    ds = build_dataset(matrix, profiles, synthesize_metadata(matrix, profiles), _mos_for(matrix))
    i = ds.condition_ids.index("HD1080_HQ_Low_p0_j0")
    j = ds.feature_names.index("bandwidth_kbps")
    assert ds.X[i, j] == pytest.approx(0.972 * 18083, abs=0.5)


def test_unknown_condition(matrix, profiles):
    mos = _mos_for(matrix[:3]) + [MOSRecord("nope", 3.0, 1, 0, 0)]
    with pytest.raises(MissingCondition):
        build_dataset(matrix, profiles, synthesize_metadata(matrix, profiles), mos)
    assert issubclass(MissingCondition, UnknownCondition)


def test_missing_metadata(matrix, profiles):
    meta = synthesize_metadata(matrix, profiles)[1:]
    with pytest.raises(MissingMetadata):
        build_dataset(matrix, profiles, meta, _mos_for(matrix))


def test_duplicate_mos(matrix, profiles):
    mos = _mos_for(matrix[:2]) + _mos_for(matrix[:1])
    with pytest.raises(DuplicateCondition):
        build_dataset(matrix, profiles, synthesize_metadata(matrix, profiles), mos)


def test_join_is_order_independent(matrix, profiles):
    meta = synthesize_metadata(matrix, profiles, noise_scale=1.0)
    mos = [MOSRecord(c.condition_id, 1 + (i % 40) / 10, 24, 0.3, 0.1) for i, c in enumerate(matrix)]
    ref = build_dataset(matrix, profiles, meta, mos)
    rng = random.Random(5)
    for _ in range(3):
        shuffled = [list(x) for x in (matrix, profiles, meta, mos)]
        for x in shuffled:
            rng.shuffle(x)
        ds = build_dataset(*shuffled)
        assert ds.condition_ids == ref.condition_ids
        np.testing.assert_array_equal(ds.X, ref.X)
        np.testing.assert_array_equal(ds.y, ref.y)
        np.testing.assert_array_equal(ds.ci95, ref.ci95)


def test_dataset_is_read_only(synthetic_dataset):
    with pytest.raises(ValueError):
        synthetic_dataset.X[0, 0] = 1.0


def test_load_dataset_records_digests(tmp_path, matrix, profiles):
    from avqoe.synth import write_synthetic_corpus

    paths = write_synthetic_corpus(tmp_path, matrix, profiles)
    ds = load_dataset(paths["conditions"], paths["metadata"], paths["ratings"])
    assert len(ds) == 144
    assert set(ds.provenance) == {"conditions", "metadata", "ratings"}
    assert all(v["digest"].startswith("sha256:") for v in ds.provenance.values())


def test_load_dataset_names_missing_file(tmp_path, matrix, profiles):
    from avqoe.synth import write_synthetic_corpus

    paths = write_synthetic_corpus(tmp_path, matrix, profiles)
    paths["ratings"].unlink()
    with pytest.raises(FileNotFoundError, match="ratings"):
        load_dataset(paths["conditions"], paths["metadata"], paths["ratings"])

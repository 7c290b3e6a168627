"""Synthetic ground-truth MOS oracle over the condition matrix.

The oracle composes per-factor quality multipliers, each in (0, 1]::

    mos = 1 + 4 * q_codec * q_plr * q_jitter * q_bw

    q_codec  = exp(-codec_weight * exp(-bpp / BPP_SCALE))
    q_plr    = exp(-plr_weight * plr_percent)
    q_jitter = exp(-jitter_weight * jitter_ms)
    q_bw     = exp(-bw_weight) for Low bandwidth, 1 for High

``bpp`` is the nominal video bits per pixel per frame of the source file.
Because every multiplier stays in (0, 1] for any non-negative weight, the
result lies in [1, 5] without clamping.  Default weights put the noiseless
matrix at roughly MOS 1.85 to 4.6 (see ``scripts/tune_oracle.py``).

Subjects are modelled as ``round(true_mos + N(0, sd))`` clamped to 1..5.
It is a pipeline fixture only; nothing here models human perception.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset import write_metadata_csv, write_ratings_csv
from .domain import (
    BandwidthClass,
    MetadataRecord,
    MOSRecord,
    RatingRecord,
    SourceProfile,
    TestCondition,
    conditions_to_csv,
    profile_index,
)

BPP_SCALE = 0.25

# random stream tags, so ratings and metadata never share draws
_RATINGS_STREAM = 1
_METADATA_STREAM = 2

CLIP_DURATION_S = 30.0
AV_OFFSET_MS = 40.0


@dataclass(frozen=True)
class OracleConfig:
    subject_count: int = 24
    rating_noise_sd: float = 0.35
    seed: int = 0
    plr_weight: float = 1.4
    jitter_weight: float = 0.0036
    bw_weight: float = 0.13
    codec_weight: float = 0.45

    def __post_init__(self):
        if self.subject_count < 1:
            raise ValueError("subject_count must be >= 1")
        if not self.rating_noise_sd >= 0:
            raise ValueError("rating_noise_sd must be >= 0")
        for name in ("plr_weight", "jitter_weight", "bw_weight", "codec_weight"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be >= 0")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")


def quality_factors(
    condition: TestCondition, profile: SourceProfile, config: OracleConfig
) -> dict[str, float]:
    bpp = profile.nominal_bits_per_pixel
    low = condition.bandwidth_class is BandwidthClass.LOW
    return {
        "codec": math.exp(-config.codec_weight * math.exp(-bpp / BPP_SCALE)),
        "plr": math.exp(-config.plr_weight * condition.plr),
        "jitter": math.exp(-config.jitter_weight * condition.jitter_ms),
        "bw": math.exp(-config.bw_weight) if low else 1.0,
    }


def true_mos(condition: TestCondition, profile: SourceProfile, config: OracleConfig) -> float:
    q = quality_factors(condition, profile, config)
    return 1.0 + 4.0 * q["codec"] * q["plr"] * q["jitter"] * q["bw"]


def oracle_mos_records(matrix, profiles, config: OracleConfig = OracleConfig()) -> list[MOSRecord]:
    """Noise-free targets: each condition's MOS is its oracle value exactly."""
    by_key = profile_index(profiles)
    return [
        MOSRecord(c.condition_id, true_mos(c, by_key[c.profile_key], config), 1, 0.0, 0.0)
        for c in matrix
    ]


def _stream(seed: int, tag: int, condition: TestCondition) -> np.random.Generator:
    # keyed by the condition's factor indices, so subsets of the matrix draw
    # the same numbers for the conditions they share
    return np.random.default_rng(np.random.SeedSequence([seed, tag, *condition.sort_key()]))


def synthesize_ratings(matrix, profiles, config: OracleConfig = OracleConfig()) -> list[RatingRecord]:
    by_key = profile_index(profiles)
    width = max(2, len(str(config.subject_count)))
    subjects = [f"s{i:0{width}d}" for i in range(1, config.subject_count + 1)]
    out = []
    for cond in matrix:
        mu = true_mos(cond, by_key[cond.profile_key], config)
        noise = _stream(config.seed, _RATINGS_STREAM, cond).normal(
            0.0, config.rating_noise_sd, size=config.subject_count
        )
        scores = np.clip(np.floor(mu + noise + 0.5), 1, 5).astype(int)
        cid = cond.condition_id
        out.extend(RatingRecord(cid, s, int(v)) for s, v in zip(subjects, scores))
    return out


def synthesize_metadata(
    matrix, profiles, seed: int = 0, noise_scale: float = 0.0
) -> list[MetadataRecord]:
    """Plausible container measurements for each recorded file.

    Header fields describe the source encode, so none of the network
    impairments show up in them.  Each measurement carries a little seeded
    noise, multiplied by ``noise_scale`` (0 gives exact header values).
    """
    by_key = profile_index(profiles)
    out = []
    for cond in matrix:
        prof = by_key[cond.profile_key]
        rng = _stream(seed, _METADATA_STREAM, cond)
        duration = round(CLIP_DURATION_S + noise_scale * rng.normal(0.0, 0.02), 3)
        video_kbps = prof.overall_bitrate_kbps - prof.audio_bitrate_kbps
        bpp = prof.nominal_bits_per_pixel * (1.0 + noise_scale * rng.normal(0.0, 0.01))
        out.append(
            MetadataRecord(
                condition_id=cond.condition_id,
                bits_per_pixel_per_frame=round(bpp, 6),
                av_delay_ms=round(abs(AV_OFFSET_MS + noise_scale * rng.normal(0.0, 8.0)), 2),
                duration_s=duration,
                frame_count=float(round(prof.frame_rate_fps * duration)),
                video_stream_size_kb=round(video_kbps * duration / 8.0, 1),
                audio_stream_size_kb=round(prof.audio_bitrate_kbps * duration / 8.0, 1),
            )
        )
    return out


def write_synthetic_corpus(
    out_dir, matrix, profiles, config: OracleConfig = OracleConfig(), metadata_noise: float = 0.0
):
    """Write ``conditions.csv``, ``metadata.csv`` and ``ratings.csv`` into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "conditions": out / "conditions.csv",
        "metadata": out / "metadata.csv",
        "ratings": out / "ratings.csv",
    }
    paths["conditions"].write_text(conditions_to_csv(matrix), encoding="utf-8", newline="")
    write_metadata_csv(
        paths["metadata"], synthesize_metadata(matrix, profiles, config.seed, metadata_noise)
    )
    write_ratings_csv(paths["ratings"], synthesize_ratings(matrix, profiles, config))
    return paths

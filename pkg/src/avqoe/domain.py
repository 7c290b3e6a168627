"""Core value types: test conditions, source profiles, ratings and features.

The influence-factor matrix crosses five factors::

    resolution       HD1080, HD720
    bitrate class    HQ, MQ, LQ
    bandwidth class  High (2x max bitrate), Low (just under max bitrate)
    packet loss (%)  0, 0.1, 0.5
    jitter (ms)      0, 10, 50, 100

giving 2*3*2*3*4 = 144 conditions.  Canonical order is the nested loop in
the order above, each factor in its listed order.
"""

from __future__ import annotations

import csv
import enum
import io
import itertools
import math
from dataclasses import astuple, dataclass, fields

from .errors import DimensionalityMismatch


class Resolution(str, enum.Enum):
    HD1080 = "HD1080"
    HD720 = "HD720"

    @property
    def size(self) -> tuple[int, int]:
        return _RESOLUTION_SIZE[self]

    @property
    def pixels(self) -> int:
        w, h = self.size
        return w * h


_RESOLUTION_SIZE = {Resolution.HD1080: (1920, 1080), Resolution.HD720: (1280, 720)}


class BitrateClass(str, enum.Enum):
    HQ = "HQ"
    MQ = "MQ"
    LQ = "LQ"


class BandwidthClass(str, enum.Enum):
    HIGH = "High"
    LOW = "Low"


PLR_LEVELS = (0.0, 0.1, 0.5)
JITTER_LEVELS = (0, 10, 50, 100)

FRAME_RATE_FPS = 25.0
AUDIO_SAMPLE_RATE_HZ = 48000

# iperf measured the Low-bandwidth cap at 2.8% under the video max bitrate.
LOW_BANDWIDTH_FACTOR = 0.972
HIGH_BANDWIDTH_FACTOR = 2.0

CONDITION_CSV_HEADER = (
    "condition_id",
    "resolution",
    "bitrate_class",
    "bandwidth_class",
    "plr_percent",
    "jitter_ms",
)


def format_condition_id(resolution, bitrate_class, bandwidth_class, plr, jitter_ms) -> str:
    return (
        f"{Resolution(resolution).value}_{BitrateClass(bitrate_class).value}_"
        f"{BandwidthClass(bandwidth_class).value}_p{float(plr):g}_j{int(jitter_ms)}"
    )


@dataclass(frozen=True)
class TestCondition:
    """One cell of the influence-factor matrix."""

    __test__ = False  # keep pytest from collecting this as a test class

    resolution: Resolution
    bitrate_class: BitrateClass
    bandwidth_class: BandwidthClass
    plr: float
    jitter_ms: int

    def __post_init__(self):
        object.__setattr__(self, "resolution", Resolution(self.resolution))
        object.__setattr__(self, "bitrate_class", BitrateClass(self.bitrate_class))
        object.__setattr__(self, "bandwidth_class", BandwidthClass(self.bandwidth_class))
        plr = float(self.plr)
        if plr not in PLR_LEVELS:
            raise ValueError(f"plr must be one of {PLR_LEVELS}, got {self.plr}")
        jitter = int(self.jitter_ms)
        if jitter != self.jitter_ms or jitter not in JITTER_LEVELS:
            raise ValueError(f"jitter_ms must be one of {JITTER_LEVELS}, got {self.jitter_ms}")
        object.__setattr__(self, "plr", plr)
        object.__setattr__(self, "jitter_ms", jitter)

    @property
    def condition_id(self) -> str:
        return format_condition_id(
            self.resolution, self.bitrate_class, self.bandwidth_class, self.plr, self.jitter_ms
        )

    @property
    def profile_key(self) -> tuple[Resolution, BitrateClass]:
        return (self.resolution, self.bitrate_class)

    def sort_key(self) -> tuple[int, int, int, int, int]:
        """Position of each factor within its domain, for canonical ordering."""
        return (
            list(Resolution).index(self.resolution),
            list(BitrateClass).index(self.bitrate_class),
            list(BandwidthClass).index(self.bandwidth_class),
            PLR_LEVELS.index(self.plr),
            JITTER_LEVELS.index(self.jitter_ms),
        )


def generate_condition_matrix() -> list[TestCondition]:
    return [
        TestCondition(*cell)
        for cell in itertools.product(
            Resolution, BitrateClass, BandwidthClass, PLR_LEVELS, JITTER_LEVELS
        )
    ]


def conditions_to_csv(conditions) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CONDITION_CSV_HEADER)
    for c in conditions:
        writer.writerow(
            [
                c.condition_id,
                c.resolution.value,
                c.bitrate_class.value,
                c.bandwidth_class.value,
                f"{c.plr:g}",
                c.jitter_ms,
            ]
        )
    return buf.getvalue()


@dataclass(frozen=True)
class SourceProfile:
    """Bitrates of one encoded source file (averaged over one second)."""

    resolution: Resolution
    bitrate_class: BitrateClass
    overall_bitrate_kbps: float
    video_max_bitrate_kbps: float
    audio_bitrate_kbps: float
    frame_rate_fps: float = FRAME_RATE_FPS
    audio_sample_rate_hz: int = AUDIO_SAMPLE_RATE_HZ

    def __post_init__(self):
        if not self.overall_bitrate_kbps > self.audio_bitrate_kbps:
            raise ValueError("overall bitrate must exceed the audio bitrate")
        if not self.video_max_bitrate_kbps > 0:
            raise ValueError("video max bitrate must be positive")

    @property
    def key(self) -> tuple[Resolution, BitrateClass]:
        return (self.resolution, self.bitrate_class)

    @property
    def file_name(self) -> str:
        return f"MPEG2_HD_{self.resolution.value[2:]}_{self.bitrate_class.value}.ts"

    @property
    def nominal_bits_per_pixel(self) -> float:
        """Average video bits per pixel per frame implied by the encode bitrate."""
        video_bps = (self.overall_bitrate_kbps - self.audio_bitrate_kbps) * 1000.0
        return video_bps / (self.resolution.pixels * self.frame_rate_fps)


# (resolution, class): overall, video max, audio -- all kbps
_SOURCE_TABLE = (
    (Resolution.HD720, BitrateClass.LQ, 1389, 1477, 128),
    (Resolution.HD720, BitrateClass.MQ, 3461, 3664, 128),
    (Resolution.HD720, BitrateClass.HQ, 8040, 8313, 128),
    (Resolution.HD1080, BitrateClass.LQ, 2871, 3227, 128),
    (Resolution.HD1080, BitrateClass.MQ, 7457, 8069, 128),
    (Resolution.HD1080, BitrateClass.HQ, 13100, 18083, 128),  # listed as 13.1 Mbps
)


def builtin_source_profiles() -> list[SourceProfile]:
    return [
        SourceProfile(res, cls, float(overall), float(vmax), float(audio))
        for res, cls, overall, vmax, audio in _SOURCE_TABLE
    ]


def profile_index(profiles) -> dict[tuple[Resolution, BitrateClass], SourceProfile]:
    return {p.key: p for p in profiles}


def effective_bandwidth(profile: SourceProfile, bandwidth_class) -> float:
    """Bandwidth cap in kbps applied to a stream of ``profile``."""
    factor = (
        HIGH_BANDWIDTH_FACTOR
        if BandwidthClass(bandwidth_class) is BandwidthClass.HIGH
        else LOW_BANDWIDTH_FACTOR
    )
    return factor * profile.video_max_bitrate_kbps


@dataclass(frozen=True)
class RatingRecord:
    condition_id: str
    subject_id: str
    score: int

    def __post_init__(self):
        if self.score not in (1, 2, 3, 4, 5):
            raise ValueError(f"ACR score must be an integer in 1..5, got {self.score!r}")


@dataclass(frozen=True)
class MOSRecord:
    condition_id: str
    mos: float
    n_subjects: int
    stddev: float
    ci95_halfwidth: float


@dataclass(frozen=True)
class MetadataRecord:
    """Container-level measurements of one recorded (impaired) file."""

    condition_id: str
    bits_per_pixel_per_frame: float
    av_delay_ms: float
    duration_s: float
    frame_count: float
    video_stream_size_kb: float
    audio_stream_size_kb: float


METADATA_CSV_HEADER = tuple(f.name for f in fields(MetadataRecord))


@dataclass(frozen=True)
class FeatureVector:
    """Model input: header metadata followed by network side information."""

    bits_per_pixel_per_frame: float
    av_delay_ms: float
    duration_s: float
    frame_count: float
    video_stream_size_kb: float
    audio_stream_size_kb: float
    overall_bitrate_kbps: float
    resolution_pixels: float
    plr_percent: float
    jitter_ms: float
    bandwidth_kbps: float

    def __post_init__(self):
        for f in fields(self):
            value = float(getattr(self, f.name))
            if not math.isfinite(value):
                raise ValueError(f"feature {f.name} is not finite: {value}")
            object.__setattr__(self, f.name, value)

    def as_tuple(self) -> tuple[float, ...]:
        return astuple(self)

    @classmethod
    def from_sequence(cls, values) -> FeatureVector:
        values = list(values)
        if len(values) != len(FEATURE_NAMES):
            raise DimensionalityMismatch(
                f"expected {len(FEATURE_NAMES)} features, got {len(values)}"
            )
        return cls(*values)


FEATURE_NAMES = tuple(f.name for f in fields(FeatureVector))


def build_feature_vector(
    condition: TestCondition, profile: SourceProfile, metadata: MetadataRecord
) -> FeatureVector:
    if profile.key != condition.profile_key:
        raise ValueError(f"profile {profile.key} does not match condition {condition.condition_id}")
    return FeatureVector(
        bits_per_pixel_per_frame=metadata.bits_per_pixel_per_frame,
        av_delay_ms=metadata.av_delay_ms,
        duration_s=metadata.duration_s,
        frame_count=metadata.frame_count,
        video_stream_size_kb=metadata.video_stream_size_kb,
        audio_stream_size_kb=metadata.audio_stream_size_kb,
        overall_bitrate_kbps=profile.overall_bitrate_kbps,
        resolution_pixels=float(condition.resolution.pixels),
        plr_percent=condition.plr,
        jitter_ms=float(condition.jitter_ms),
        bandwidth_kbps=effective_bandwidth(profile, condition.bandwidth_class),
    )

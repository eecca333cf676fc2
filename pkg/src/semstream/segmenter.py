"""Streaming speech segmentation: fixed-duration or slope-adaptive.

In dynamic mode the duration of the next segment is set from the amplitude
slope of the current one:

    next = max(min_duration, (1 - shrink_rate * exp(k)) * d)   if k > 0
    next = min(max_duration, (1 - grow_rate * ln(k + 1)) * d)  otherwise

where k is the dimensionless slope of the mean-normalized RMS envelope.
Note the asymmetry: a rising envelope (k > 0) *shortens* the next segment,
keeping per-segment processing cost low exactly when new content is arriving;
a falling or flat envelope lets segments stretch toward the cap. Durations
therefore stay confined to [min_duration, max_duration] for every slope
sequence (the shrink branch is floored, the grow branch capped).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from typing import Iterable, Iterator

import numpy as np

from .audio import (
    DEFAULT_FRAME_SECONDS,
    DEFAULT_HOP_SECONDS,
    AudioBuffer,
    Envelope,
    rms_envelope,
)


class SegmenterError(ValueError):
    """Invalid segmenter configuration or input."""


@dataclass(frozen=True)
class SegmenterConfig:
    mode: str = "dynamic"  # fixed | dynamic
    shrink_rate: float = 0.05       # weight on exp(k) in the shrink branch
    grow_rate: float = 0.05         # weight on ln(k+1) in the grow branch
    min_duration: float = 0.65      # floor, seconds
    max_duration: float = 0.85      # cap, seconds
    initial_duration: float = 0.75  # first dynamic segment, seconds
    fixed_duration: float = 0.80    # fixed-mode segment length, seconds
    silence_rms: float = 0.01
    slope_min: float = -0.99        # keeps ln(k+1) finite
    slope_max: float = 10.0         # keeps exp(k) bounded
    frame_seconds: float = DEFAULT_FRAME_SECONDS
    hop_seconds: float = DEFAULT_HOP_SECONDS

    def __post_init__(self):
        if self.mode not in ("fixed", "dynamic"):
            raise SegmenterError(f"unknown segmentation mode {self.mode!r}")
        if not 0 < self.min_duration <= self.initial_duration <= self.max_duration:
            raise SegmenterError(
                "need 0 < min_duration <= initial_duration <= max_duration, got "
                f"{self.min_duration}, {self.initial_duration}, {self.max_duration}"
            )
        for name in ("shrink_rate", "grow_rate"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise SegmenterError(f"{name} must be in (0, 1), got {v}")
        if self.slope_min <= -1.0:
            raise SegmenterError("slope_min must be > -1")
        if self.slope_max <= 0.0:
            raise SegmenterError("slope_max must be > 0")
        if self.silence_rms < 0.0:
            raise SegmenterError("silence_rms must be >= 0")
        if self.fixed_duration <= 0.0:
            raise SegmenterError("fixed_duration must be positive")


@dataclass(frozen=True)
class SpeechSegment:
    """A contiguous slice of the input stream processed as one unit."""

    samples: np.ndarray
    index: int
    capture_start: float  # seconds on the stream clock
    sample_rate: int
    slope: float = 0.0
    silent: bool = False

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate

    def __len__(self) -> int:
        return len(self.samples)


def estimate_slope(env: Envelope, duration: float, cfg: SegmenterConfig) -> float:
    """Dimensionless envelope slope: least squares on the mean-normalized
    envelope against frame-center times, clamped to [slope_min, slope_max].

    Mean normalization makes the estimate invariant to signal scale (the
    result feeds exp/log terms, so it must be unit-free and O(1)). An
    all-zero envelope has no defined trend and maps to 0.
    """
    if duration <= 0:
        raise SegmenterError("duration must be positive")
    values = env.values
    if len(values) < 2:
        raise SegmenterError("need at least 2 envelope frames to estimate a slope")
    mean = float(values.mean())
    if mean == 0.0:
        return 0.0
    if values.min() == values.max():
        return 0.0
    times = env.frame_centers()
    t_centered = times - times.mean()
    denom = float(np.dot(t_centered, t_centered))
    # center the normalized values too, so near-flat envelopes do not pick
    # up the rounding residue of sum(t_centered)
    k = float(np.dot(t_centered, values / mean - 1.0) / denom)
    return min(max(k, cfg.slope_min), cfg.slope_max)


def next_duration(d: float, k: float, cfg: SegmenterConfig) -> float:
    """Duration of the following segment given the current duration and slope."""
    if d <= 0:
        raise SegmenterError("duration must be positive")
    if k <= -1.0:
        raise SegmenterError(f"slope {k} <= -1 is outside the rule's domain")
    if k > 0:
        return max(cfg.min_duration, (1.0 - cfg.shrink_rate * math.exp(k)) * d)
    return min(cfg.max_duration, (1.0 - cfg.grow_rate * math.log(k + 1.0)) * d)


def is_silent(segment: SpeechSegment, cfg: SegmenterConfig) -> bool:
    """True iff segment RMS is strictly below the silence threshold."""
    if len(segment) == 0:
        raise SegmenterError("empty segment")
    rms = float(np.sqrt(np.mean(segment.samples**2)))
    return rms < cfg.silence_rms


def segment_stream(
    source: AudioBuffer, cfg: SegmenterConfig
) -> Iterator[SpeechSegment]:
    """Split a source buffer into segments that tile it exactly.

    Fixed mode slices ``fixed_duration`` pieces; dynamic mode starts at
    ``initial_duration`` and adapts each following duration from the current
    segment's envelope slope. The final remainder is emitted as-is even when
    shorter than the floor. Silent segments are still emitted (flagged);
    excluding them from transmission is the pipeline's call.
    """
    x = source.samples
    sr = source.sample_rate
    frame = int(round(cfg.frame_seconds * sr))
    if len(x) < frame:
        raise SegmenterError(
            f"source of {len(x)} samples is shorter than one envelope frame ({frame})"
        )

    hop = int(round(cfg.hop_seconds * sr))
    target = cfg.fixed_duration if cfg.mode == "fixed" else cfg.initial_duration
    pos = 0
    index = 0
    while pos < len(x):
        want = max(1, int(round(target * sr)))
        chunk = x[pos : pos + want]
        seg = SpeechSegment(
            samples=chunk,
            index=index,
            capture_start=pos / sr,
            sample_rate=sr,
        )
        slope = 0.0
        if cfg.mode == "dynamic" and len(chunk) >= frame + hop:
            env = rms_envelope(seg, cfg.frame_seconds, cfg.hop_seconds)
            slope = estimate_slope(env, seg.duration, cfg)
        seg = replace(seg, slope=slope, silent=is_silent(seg, cfg))
        yield seg
        if cfg.mode == "dynamic":
            target = next_duration(seg.duration, slope, cfg)
        pos += len(chunk)
        index += 1


SEGMENT_CSV_HEADER = ("t", "capture_start", "duration", "slope", "silent")


def segments_to_csv(segments: Iterable[SpeechSegment], path) -> None:
    """Emit one row per segment for offline corpus analysis.

    ``path`` may also be an open text stream.
    """
    fh = path if hasattr(path, "write") else open(path, "w", newline="")
    try:
        writer = csv.writer(fh)
        writer.writerow(SEGMENT_CSV_HEADER)
        for seg in segments:
            writer.writerow(
                [
                    seg.index,
                    f"{seg.capture_start:.6f}",
                    f"{seg.duration:.6f}",
                    f"{seg.slope:.6f}",
                    int(seg.silent),
                ]
            )
    finally:
        if fh is not path:
            fh.close()

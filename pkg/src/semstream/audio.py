"""PCM audio loading, synthesis of test signals, and envelope analysis.

Audio is represented as mono float arrays in [-1, 1]. The canonical rate is
16 kHz; files at other rates are accepted as stored but never resampled, so
rate mismatches are the caller's problem to notice.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np
from scipy.io import wavfile
from scipy.io.wavfile import WavFileWarning
import warnings

DEFAULT_SAMPLE_RATE = 16000
DEFAULT_FRAME_SECONDS = 0.02
DEFAULT_HOP_SECONDS = 0.01


class AudioError(ValueError):
    """Malformed, unsupported, or empty audio input."""


@dataclass(frozen=True)
class AudioBuffer:
    """Mono PCM audio with samples in [-1, 1]."""

    samples: np.ndarray
    sample_rate: int = DEFAULT_SAMPLE_RATE

    def __post_init__(self):
        if self.sample_rate <= 0:
            raise AudioError(f"sample_rate must be positive, got {self.sample_rate}")
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise AudioError("AudioBuffer samples must be one-dimensional")
        if samples.size and not np.all(np.isfinite(samples)):
            raise AudioError("AudioBuffer samples must be finite")
        object.__setattr__(self, "samples", samples)

    @property
    def duration_seconds(self) -> float:
        return len(self.samples) / self.sample_rate

    def __len__(self) -> int:
        return len(self.samples)


@dataclass(frozen=True)
class Envelope:
    """Per-frame RMS amplitude of a signal, frames aligned at i*hop."""

    values: np.ndarray
    frame_seconds: float
    hop_seconds: float

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", values)
        if values.size and (np.any(values < 0) or not np.all(np.isfinite(values))):
            raise AudioError("envelope values must be finite and non-negative")

    def frame_centers(self) -> np.ndarray:
        """Time of each frame's center, in seconds from the segment start."""
        idx = np.arange(len(self.values), dtype=np.float64)
        return idx * self.hop_seconds + 0.5 * self.frame_seconds


def load_wav(path) -> AudioBuffer:
    """Load a RIFF/WAVE file as a mono AudioBuffer.

    Supports 16-bit PCM and IEEE-float encodings. Multichannel files are
    averaged down to mono. Integer samples are scaled by 1/32768; the file's
    sample rate is reported as stored (no resampling).
    """
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", WavFileWarning)
            rate, data = wavfile.read(path)
    except FileNotFoundError:
        raise
    except Exception as exc:
        raise AudioError(f"malformed WAV file {path!r}: {exc}") from exc

    if data.dtype == np.int16:
        samples = data.astype(np.float64) / 32768.0
    elif data.dtype in (np.float32, np.float64):
        samples = data.astype(np.float64)
    else:
        raise AudioError(
            f"unsupported WAV encoding {data.dtype} in {path!r}; "
            "expected 16-bit PCM or IEEE float"
        )
    if samples.size == 0:
        raise AudioError(f"empty audio in {path!r}")
    if samples.ndim == 2:
        samples = samples.mean(axis=1)
    return AudioBuffer(samples=samples, sample_rate=int(rate))


def write_wav(path, buf: AudioBuffer) -> None:
    """Write 16-bit PCM mono. Intended for tests and demo output."""
    scaled = np.clip(np.round(buf.samples * 32768.0), -32768, 32767).astype(np.int16)
    wavfile.write(path, buf.sample_rate, scaled)


def wav_bytes(buf: AudioBuffer) -> bytes:
    """Encode as 16-bit PCM WAV in memory (round-trip checks)."""
    bio = io.BytesIO()
    write_wav(bio, buf)
    return bio.getvalue()


def rms_envelope(
    segment: AudioBuffer,
    frame_seconds: float = DEFAULT_FRAME_SECONDS,
    hop_seconds: float = DEFAULT_HOP_SECONDS,
) -> Envelope:
    """Short-time RMS envelope with trailing partial frames dropped.

    values[i] = sqrt(mean(x**2)) over the frame starting at i*hop. Dropping
    the tail avoids an artificial decay that would bias slope estimates.
    """
    if not frame_seconds >= hop_seconds > 0:
        raise AudioError(
            f"need frame_seconds >= hop_seconds > 0, got {frame_seconds}, {hop_seconds}"
        )
    frame = int(round(frame_seconds * segment.sample_rate))
    hop = int(round(hop_seconds * segment.sample_rate))
    if frame < 1 or hop < 1:
        raise AudioError("frame and hop must span at least one sample")
    x = segment.samples
    if len(x) < frame:
        raise AudioError(
            f"segment of {len(x)} samples is shorter than one {frame}-sample frame"
        )
    windows = np.lib.stride_tricks.sliding_window_view(x, frame)[::hop]
    values = np.sqrt(np.mean(windows * windows, axis=1))
    return Envelope(values=values, frame_seconds=frame / segment.sample_rate,
                    hop_seconds=hop / segment.sample_rate)


@dataclass(frozen=True)
class SignalSpec:
    """Recipe for a deterministic synthetic test signal.

    The instantaneous amplitude ramps linearly across ``amplitude_ramp``
    = (start, end) over the clip's duration.
    """

    kind: str = "tone"  # tone | noise
    amplitude_ramp: tuple = (0.5, 0.5)
    duration: float = 1.0
    seed: int = 0
    tone_hz: float = 440.0
    sample_rate: int = DEFAULT_SAMPLE_RATE

    def __post_init__(self):
        if self.kind not in ("tone", "noise"):
            raise AudioError(f"unknown signal kind {self.kind!r}")
        if self.duration <= 0:
            raise AudioError("duration must be positive")
        ramp = tuple(float(a) for a in self.amplitude_ramp)
        if len(ramp) != 2:
            raise AudioError("amplitude_ramp must be a (start, end) pair")
        for a in ramp:
            if not 0.0 <= a <= 1.0:
                raise AudioError(f"amplitude {a} outside [0, 1]")
        object.__setattr__(self, "amplitude_ramp", ramp)


def synth_test_signal(spec: SignalSpec) -> AudioBuffer:
    """Synthesize a tone or noise clip with a linear amplitude ramp.

    Bit-identical output for identical specs (the noise generator is seeded).
    """
    n = int(round(spec.duration * spec.sample_rate))
    t = np.arange(n, dtype=np.float64) / spec.sample_rate
    a0, a1 = spec.amplitude_ramp
    ramp = a0 + (a1 - a0) * t / spec.duration
    if spec.kind == "tone":
        carrier = np.sin(2.0 * np.pi * spec.tone_hz * t)
    else:
        rng = np.random.default_rng(spec.seed)
        carrier = rng.uniform(-1.0, 1.0, size=n)
    return AudioBuffer(samples=ramp * carrier, sample_rate=spec.sample_rate)

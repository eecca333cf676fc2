"""Pluggable semantic codec with a deterministic, invertible reference.

The reference codec stands in for the heavy learned stack of a full
deployment (device-side compressor, edge-side feature extractor/translator,
device-side speech predictor). It is built from exactly invertible linear
pieces so the channel-codec training loop has measurable ground truth:

  compress     frame the segment, orthonormal DCT-II per frame, keep the
               first ``coeffs_kept`` coefficients
  extract      flatten + zero-pad to the fixed span, multiply by a seeded
               row-orthonormal projection
  translate    optional coordinate permutation (a stand-in for a language
               pair mapping), then the projection transpose
  predict      zero-pad coefficients, inverse DCT, trim padding

With ``coeffs_kept == frame_len`` and a square projection the whole chain is
an exact round trip, which pins down every downstream tolerance.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np
from scipy.fft import dct, idct

from .audio import DEFAULT_SAMPLE_RATE
from .segmenter import SpeechSegment


class CodecError(ValueError):
    """Shape or configuration violation in the semantic codec."""


# Shapes of the full-scale learned stack this reference codec substitutes
# for; recorded for documentation and parity-run configuration only.
FULL_SCALE_SHAPES = {
    "compressor": "2x conv1d (128, 64 channels), relu",
    "channel_encoder": "3x dense, 2048 units each, no activation",
    "channel_decoder": "3x dense, 2048 units each, relu",
    "predictor": "2x conv1d (1280 channels each) + 1 dense unit",
}


@dataclass(frozen=True)
class CodecSpec:
    kind: str = "reference"
    frame_len: int = 320          # samples per analysis frame (20 ms at 16 kHz)
    coeffs_kept: int = 64         # coefficients kept per frame
    feature_dim: int = 1024       # semantic feature length (desk-scale runs use 64)
    projection_seed: int = 0
    translator: str = "identity"  # identity | permutation
    translator_seed: int = 0
    max_segment_seconds: float = 1.0
    sample_rate: int = DEFAULT_SAMPLE_RATE

    def __post_init__(self):
        if self.kind != "reference":
            raise CodecError(f"unknown codec kind {self.kind!r}")
        if self.translator not in ("identity", "permutation"):
            raise CodecError(f"unknown translator {self.translator!r}")
        if not 1 <= self.coeffs_kept <= self.frame_len:
            raise CodecError("need 1 <= coeffs_kept <= frame_len")
        if self.max_segment_seconds <= 0 or self.sample_rate <= 0:
            raise CodecError("max_segment_seconds and sample_rate must be positive")
        if self.feature_dim > self.padded_span:
            raise CodecError(
                f"feature_dim {self.feature_dim} exceeds padded span {self.padded_span}; "
                "the projection would not be injective"
            )

    @property
    def max_frames(self) -> int:
        max_samples = int(math.ceil(self.max_segment_seconds * self.sample_rate))
        return (max_samples + self.frame_len - 1) // self.frame_len

    @property
    def padded_span(self) -> int:
        return self.max_frames * self.coeffs_kept

    def spec_hash(self) -> int:
        """Stable 64-bit digest used by the wire handshake."""
        canon = "|".join(
            str(v)
            for v in (
                self.kind, self.frame_len, self.coeffs_kept, self.feature_dim,
                self.projection_seed, self.translator, self.translator_seed,
                self.max_segment_seconds, self.sample_rate,
            )
        )
        digest = hashlib.sha256(canon.encode()).digest()
        return int.from_bytes(digest[:8], "little")


@dataclass(frozen=True)
class IntermediateFeatures:
    """Per-frame kept DCT coefficients plus the metadata needed to invert."""

    data: np.ndarray        # (frames, coeffs_kept)
    frame_len: int
    n_samples: int          # pre-padding segment length, for trimming
    sample_rate: int

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim != 2:
            raise CodecError("feature data must be a (frames, coeffs) matrix")
        object.__setattr__(self, "data", data)

    @property
    def coeffs_kept(self) -> int:
        return self.data.shape[1]

    @property
    def frames(self) -> int:
        return self.data.shape[0]


@dataclass(frozen=True)
class SemanticFeatures:
    """Fixed-length semantic feature vector for one segment."""

    values: np.ndarray
    index: int = 0

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 1:
            raise CodecError("semantic features must be a vector")
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return len(self.values)


def _orthonormal_rows(rows: int, cols: int, seed: int) -> np.ndarray:
    """Seeded (rows x cols) matrix with orthonormal rows, rows <= cols.

    QR of a seeded Gaussian, with column signs fixed so the result does not
    depend on LAPACK's sign convention.
    """
    rng = np.random.default_rng(seed)
    gauss = rng.standard_normal((cols, rows))
    q, r = np.linalg.qr(gauss, mode="reduced")
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return (q * signs).T


class ReferenceCodec:
    """Deterministic invertible codec for one CodecSpec."""

    def __init__(self, spec: CodecSpec):
        self.spec = spec
        self.projection = _orthonormal_rows(
            spec.feature_dim, spec.padded_span, spec.projection_seed
        )
        if spec.translator == "permutation":
            rng = np.random.default_rng(spec.translator_seed)
            self.permutation = rng.permutation(spec.feature_dim)
        else:
            self.permutation = None

    def compress(self, segment: SpeechSegment) -> IntermediateFeatures:
        """Frame, transform, and truncate one segment."""
        x = np.asarray(segment.samples, dtype=np.float64)
        if x.size == 0:
            raise CodecError("cannot compress an empty segment")
        flen = self.spec.frame_len
        frames = (len(x) + flen - 1) // flen
        padded = np.zeros(frames * flen)
        padded[: len(x)] = x
        coeffs = dct(padded.reshape(frames, flen), type=2, norm="ortho", axis=1)
        return IntermediateFeatures(
            data=coeffs[:, : self.spec.coeffs_kept],
            frame_len=flen,
            n_samples=len(x),
            sample_rate=segment.sample_rate,
        )

    def _flatten_pad(self, feats: IntermediateFeatures) -> np.ndarray:
        span = self.spec.padded_span
        flat = feats.data.reshape(-1)
        if feats.coeffs_kept != self.spec.coeffs_kept:
            raise CodecError(
                f"features keep {feats.coeffs_kept} coefficients, codec expects "
                f"{self.spec.coeffs_kept}"
            )
        if flat.size > span:
            raise CodecError(
                f"flattened features ({flat.size}) overflow the padded span ({span})"
            )
        out = np.zeros(span)
        out[: flat.size] = flat
        return out

    def extract_semantics(
        self, feats: IntermediateFeatures, index: int = 0
    ) -> SemanticFeatures:
        """Project the padded feature span down to the semantic vector."""
        return SemanticFeatures(
            values=self.projection @ self._flatten_pad(feats), index=index
        )

    def apply_translator(self, values: np.ndarray) -> np.ndarray:
        if self.permutation is None:
            return values
        return values[self.permutation]

    def invert_translator(self, values: np.ndarray) -> np.ndarray:
        if self.permutation is None:
            return values
        out = np.empty_like(values)
        out[self.permutation] = values
        return out

    def translate_semantics(
        self, sem: SemanticFeatures, n_samples: int | None = None
    ) -> IntermediateFeatures:
        """Map semantic features back to per-frame coefficients.

        ``n_samples`` tells the receiver how much of the padded span is real
        (it travels in segment metadata); None keeps the whole span.
        """
        if len(sem) != self.spec.feature_dim:
            raise CodecError(
                f"feature length {len(sem)} does not match codec dim "
                f"{self.spec.feature_dim}"
            )
        flat = self.projection.T @ self.apply_translator(sem.values)
        full = flat.reshape(self.spec.max_frames, self.spec.coeffs_kept)
        if n_samples is None:
            n_samples = self.spec.max_frames * self.spec.frame_len
        frames = (n_samples + self.spec.frame_len - 1) // self.spec.frame_len
        if frames > self.spec.max_frames:
            raise CodecError(
                f"{n_samples} samples overflow the codec's span of "
                f"{self.spec.max_frames} frames"
            )
        return IntermediateFeatures(
            data=full[:frames],
            frame_len=self.spec.frame_len,
            n_samples=n_samples,
            sample_rate=self.spec.sample_rate,
        )

    def predict_speech(
        self,
        feats: IntermediateFeatures,
        index: int = 0,
        capture_start: float = 0.0,
    ) -> SpeechSegment:
        """Invert the per-frame transform and trim the final-frame padding."""
        flen = feats.frame_len
        full = np.zeros((feats.frames, flen))
        full[:, : feats.coeffs_kept] = feats.data
        samples = idct(full, type=2, norm="ortho", axis=1).reshape(-1)
        if feats.n_samples > samples.size:
            raise CodecError(
                f"metadata claims {feats.n_samples} samples but frames only "
                f"cover {samples.size}"
            )
        return SpeechSegment(
            samples=samples[: feats.n_samples],
            index=index,
            capture_start=capture_start,
            sample_rate=feats.sample_rate,
        )

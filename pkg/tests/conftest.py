"""Shared test fixtures: small deterministic signals and segment builders."""

import numpy as np
import pytest

from semstream import AudioBuffer, SegmenterConfig, SpeechSegment


@pytest.fixture
def tone_1s():
    """One second of a 440 Hz tone at constant 0.5 amplitude."""
    t = np.arange(16000) / 16000.0
    return AudioBuffer(samples=0.5 * np.sin(2 * np.pi * 440.0 * t),
                       sample_rate=16000)


@pytest.fixture
def default_segcfg():
    return SegmenterConfig()


def make_segment(samples, index=0, capture_start=0.0, sample_rate=16000):
    return SpeechSegment(samples=np.asarray(samples, dtype=np.float64),
                         index=index, capture_start=capture_start,
                         sample_rate=sample_rate)

"""
Dynamic segment duration on a swelling then fading tone
=======================================================

The segmenter watches the short-time energy envelope. A rising envelope
(speech onset, someone leaning into the mic) shortens the next capture
window so the translation pipeline reacts faster; a falling envelope
stretches it to spend fewer segments on trailing audio. Durations never
leave the configured [0.65 s, 0.85 s] band.
"""

import numpy as np

from semstream import AudioBuffer, SegmenterConfig, SignalSpec, segment_stream, synth_test_signal

sr = 16000

# 8 s swell followed by 8 s decay, stitched from two ramped tones
up = synth_test_signal(SignalSpec(kind="tone", amplitude_ramp=(0.05, 0.9),
                                  duration=8.0, seed=1))
down = synth_test_signal(SignalSpec(kind="tone", amplitude_ramp=(0.9, 0.05),
                                    duration=8.0, seed=2))
audio = AudioBuffer(samples=np.concatenate([up.samples, down.samples]),
                    sample_rate=sr)

cfg = SegmenterConfig(mode="dynamic")
print(f"duration band [{cfg.min_duration}, {cfg.max_duration}] s, "
      f"start at {cfg.initial_duration} s\n")
print(f"{'seg':>3}  {'start (s)':>9}  {'dur (s)':>7}  {'slope':>8}  trend")

for seg in segment_stream(audio, cfg):
    dur = len(seg.samples) / sr
    trend = "shrink" if seg.slope > 0 else ("grow" if seg.slope < 0 else "hold")
    print(f"{seg.index:>3}  {seg.capture_start:>9.2f}  {dur:>7.3f}  "
          f"{seg.slope:>8.3f}  {trend}")

print("\nrising half pins the duration to the floor, falling half lets it "
      "recover toward the ceiling")

"""End-to-end streaming runs over four stages and a simulated clock.

Stage chain: device_tx segments speech and uploads compressed per-frame
features; edge_a lifts them to semantic vectors and channel-encodes
symbol pairs; edge_b pushes the symbols through the simulated channel,
decodes, and translates back to per-frame features; device_rx rebuilds
the waveform.

The same stage functions drive two execution modes. ``run_streaming``
runs everything in one process but still routes every hop through the
wire codec, so payloads see the exact float32 quantization they would
on TCP; the ``role_*`` functions run each stage as its own networked
node. Under one channel seed both modes produce byte-identical download
frames.

Timing never reads the wall clock. A segment's schedule is derived from
its duration and a per-stage compute cost model, which keeps latency
numbers exactly reproducible run to run.
"""

from __future__ import annotations

import dataclasses
import time
from dataclasses import dataclass, field

import numpy as np

from .audio import AudioBuffer
from .channelsim import ChannelConfig, ComplexSymbols, demap, map_to_symbols, transmit
from .neuralcodec import DenseNetwork, identity_network
from .semcodec import CodecSpec, IntermediateFeatures, ReferenceCodec, SemanticFeatures
from .segmenter import SegmenterConfig, SpeechSegment, segment_stream
from .transport import (
    Config,
    DownloadFeatures,
    Eos,
    LinkSymbols,
    SegmentMeta,
    SessionOutcome,
    UploadFeatures,
    encode_message,
    run_endpoint,
    wire_roundtrip,
)

SCHEDULE_POLICIES = ("pipelined", "serialized")


class PipelineError(RuntimeError):
    """Run could not proceed (config conflict, unexpected peer message)."""


# --- simulated compute costs -------------------------------------------------

@dataclass(frozen=True)
class StageCost:
    """Affine cost in seconds for one stage: base + per_second * duration."""

    base: float = 0.0
    per_second: float = 0.0

    def __post_init__(self):
        if self.base < 0 or self.per_second < 0:
            raise PipelineError(
                f"stage cost coefficients must be non-negative, "
                f"got base={self.base}, per_second={self.per_second}"
            )

    def cost(self, duration: float) -> float:
        return self.base + self.per_second * duration


@dataclass(frozen=True)
class ComputeModel:
    """Per-segment processing budget across the five pipeline stages."""

    device_compress: StageCost = StageCost(0.001, 0.04)
    edge_model: StageCost = StageCost(0.002, 0.10)
    edge_codec: StageCost = StageCost(0.001, 0.0)
    channel: StageCost = StageCost(0.005, 0.0)
    device_predict: StageCost = StageCost(0.001, 0.03)

    def upload_cost(self, duration: float) -> float:
        """Device-side work before the upload leaves for the edge."""
        return self.device_compress.cost(duration)

    def total(self, duration: float) -> float:
        return (
            self.device_compress.cost(duration)
            + self.edge_model.cost(duration)
            + self.edge_codec.cost(duration)
            + self.channel.cost(duration)
            + self.device_predict.cost(duration)
        )


# --- latency accounting --------------------------------------------------------

@dataclass(frozen=True)
class SegmentTiming:
    """One segment's life on the simulated stream clock, in seconds."""

    index: int
    duration: float
    capture_start: float
    capture_end: float
    upload_time: float
    emit_time: float
    cost: float
    transmitted: bool

    @property
    def latency(self) -> float:
        return self.emit_time - self.capture_end


@dataclass(frozen=True)
class LatencyLog:
    """Per-segment timestamps for one run.

    Skipped (silent) segments are logged with capture times but emit
    nothing; they are excluded from emission statistics. The emission
    timestamp sequence covers the transmitted segments in index order.
    """

    entries: tuple
    schedule: str = "pipelined"
    realtime_capture: bool = True

    def __len__(self) -> int:
        return len(self.entries)

    def transmitted_entries(self) -> list:
        return [e for e in self.entries if e.transmitted]

    def emit_times(self) -> np.ndarray:
        return np.array([e.emit_time for e in self.entries if e.transmitted])

    @property
    def segment_count(self) -> int:
        """Number of emitted (transmitted) segments."""
        return sum(1 for e in self.entries if e.transmitted)


TIMING_CSV_HEADER = (
    "t", "duration", "capture_start", "capture_end",
    "upload_time", "emit_time", "cost", "transmitted", "latency",
)


def schedule_segments(
    durations,
    compute: ComputeModel,
    schedule: str = "pipelined",
    transmitted=None,
    realtime_capture: bool = True,
) -> LatencyLog:
    """Deterministic clock for a run.

    pipelined: capture follows the live stream without pause; a finished
    segment waits only for the previous one to clear the stage chain.
    serialized: stop-and-wait reference where the next capture begins
    only once the previous segment has been emitted.

    Skipped segments advance the capture clock but occupy no compute.
    """
    if schedule not in SCHEDULE_POLICIES:
        raise PipelineError(f"unknown schedule policy {schedule!r}")
    durations = list(durations)
    if transmitted is None:
        transmitted = [True] * len(durations)
    if len(transmitted) != len(durations):
        raise PipelineError("one transmitted flag needed per duration")
    entries = []
    stream_pos = 0.0   # where the capture head sits
    busy_until = 0.0   # when the stage chain frees up
    for i, (d, sent) in enumerate(zip(durations, transmitted)):
        if d <= 0:
            raise PipelineError(f"segment {i} has non-positive duration {d}")
        if schedule == "serialized":
            cap_start = max(stream_pos, busy_until)
        else:
            cap_start = stream_pos
        cap_end = cap_start + d
        if sent:
            cost = compute.total(d)
            proc_start = max(cap_end, busy_until)
            upload = proc_start + compute.upload_cost(d)
            emit = proc_start + cost
            busy_until = emit
        else:
            cost = 0.0
            upload = cap_end
            emit = cap_end
        entries.append(SegmentTiming(
            index=i, duration=float(d), capture_start=cap_start,
            capture_end=cap_end, upload_time=upload, emit_time=emit,
            cost=cost, transmitted=bool(sent),
        ))
        stream_pos = cap_end
    return LatencyLog(entries=tuple(entries), schedule=schedule,
                      realtime_capture=realtime_capture)


def average_latency(log: LatencyLog) -> float:
    """Mean gap between consecutive emission timestamps, literal sum form."""
    tl = log.emit_times()
    if len(tl) < 2:
        raise PipelineError("need at least two emitted segments to average")
    return float(np.mean(np.diff(tl)))


def mean_segment_latency(log: LatencyLog) -> float:
    """Mean capture-end to emission delay over transmitted segments."""
    picked = log.transmitted_entries()
    if not picked:
        raise PipelineError("no transmitted segments to average")
    return float(np.mean([e.latency for e in picked]))


def wall_time(log: LatencyLog) -> float:
    """Stream-clock time at which the last translated segment is emitted."""
    tl = log.emit_times()
    if len(tl) == 0:
        raise PipelineError("run emitted nothing")
    return float(tl[-1])


def latency_diagnostics(log: LatencyLog) -> dict:
    """Every latency reading we surface, in one JSON-friendly dict.

    The literal mean emission gap and its telescoped short form
    (TL_last - TL_first)/(T - 1) agree to rounding; both are reported so
    the identity can be checked downstream.
    """
    tl = log.emit_times()
    out = {
        "segments": len(log.entries),
        "transmitted": int(log.segment_count),
        "schedule": log.schedule,
        "wall_time_seconds": wall_time(log) if len(tl) else 0.0,
    }
    if len(tl):
        out["mean_segment_latency_seconds"] = mean_segment_latency(log)
    if len(tl) >= 2:
        out["average_latency_seconds"] = average_latency(log)
        out["average_latency_telescoped_seconds"] = float(
            (tl[-1] - tl[0]) / (len(tl) - 1)
        )
    return out


def timings_to_csv(log: LatencyLog) -> str:
    lines = [",".join(TIMING_CSV_HEADER)]
    for e in log.entries:
        lines.append(
            f"{e.index},{e.duration:.6f},{e.capture_start:.6f},"
            f"{e.capture_end:.6f},{e.upload_time:.6f},{e.emit_time:.6f},"
            f"{e.cost:.6f},{int(e.transmitted)},{e.latency:.6f}"
        )
    return "\n".join(lines) + "\n"


# --- stage functions ---------------------------------------------------------

def stage_device_tx(codec: ReferenceCodec, segment: SpeechSegment,
                    transmitted: bool) -> tuple[SegmentMeta, UploadFeatures | None]:
    """Compress one captured segment and package its upload."""
    meta = SegmentMeta(
        index=segment.index,
        n_samples=len(segment.samples),
        sample_rate=segment.sample_rate,
        capture_start=segment.capture_start,
        slope=segment.slope,
        silent=segment.silent,
        transmitted=transmitted,
    )
    if not transmitted:
        return meta, None
    feats = codec.compress(segment)
    return meta, UploadFeatures(
        index=segment.index, data=feats.data, frame_len=feats.frame_len,
        n_samples=feats.n_samples, sample_rate=feats.sample_rate,
    )


def stage_edge_a(codec: ReferenceCodec, encoder: DenseNetwork,
                 upload: UploadFeatures) -> LinkSymbols:
    """Lift uploaded features to semantics and channel-encode them."""
    feats = IntermediateFeatures(
        data=upload.data, frame_len=upload.frame_len,
        n_samples=upload.n_samples, sample_rate=upload.sample_rate,
    )
    sem = codec.extract_semantics(feats, index=upload.index)
    sym = map_to_symbols(encoder.forward(sem.values))
    return LinkSymbols(
        index=upload.index, re=sym.re, im=sym.im,
        power_scale=sym.power_scale, pad_flag=sym.pad_flag,
    )


def stage_edge_b(codec: ReferenceCodec, decoder: DenseNetwork,
                 link: LinkSymbols, meta: SegmentMeta,
                 channel_cfg: ChannelConfig,
                 rng: np.random.Generator) -> tuple[DownloadFeatures, bool]:
    """Channel, decode, and translate back to per-frame features."""
    sym = ComplexSymbols(
        re=link.re, im=link.im,
        power_scale=link.power_scale, pad_flag=link.pad_flag,
    )
    received, draw = transmit(sym, channel_cfg, rng=rng)
    decoded = decoder.forward(demap(received))
    sem = SemanticFeatures(values=decoded, index=link.index)
    feats = codec.translate_semantics(sem, n_samples=meta.n_samples)
    download = DownloadFeatures(
        index=link.index, data=feats.data, frame_len=feats.frame_len,
        n_samples=feats.n_samples, sample_rate=feats.sample_rate,
    )
    return download, draw.fade_event


def stage_device_rx(codec: ReferenceCodec, meta: SegmentMeta,
                    download: DownloadFeatures | None) -> SpeechSegment:
    """Reconstruct one segment; skipped segments come back as silence."""
    if download is None:
        return SpeechSegment(
            samples=np.zeros(meta.n_samples), index=meta.index,
            capture_start=meta.capture_start, sample_rate=meta.sample_rate,
            slope=meta.slope, silent=meta.silent,
        )
    feats = IntermediateFeatures(
        data=download.data, frame_len=download.frame_len,
        n_samples=download.n_samples, sample_rate=download.sample_rate,
    )
    seg = codec.predict_speech(feats, index=meta.index,
                               capture_start=meta.capture_start)
    return dataclasses.replace(seg, slope=meta.slope, silent=meta.silent)


# --- in-process run ----------------------------------------------------------

@dataclass(frozen=True)
class RunConfig:
    codec: CodecSpec = CodecSpec()
    segmenter: SegmenterConfig = SegmenterConfig()
    channel: ChannelConfig = ChannelConfig(kind="clean")
    compute: ComputeModel = ComputeModel()
    schedule: str = "pipelined"
    realtime_capture: bool = True
    skip_silent: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.schedule not in SCHEDULE_POLICIES:
            raise PipelineError(f"unknown schedule policy {self.schedule!r}")

    def channel_seed(self) -> int:
        return int(self.seed if self.channel.seed is None else self.channel.seed)


@dataclass
class RunResult:
    """Everything a streaming run produced.

    Iterating unpacks the two headline artifacts:
    ``audio, log = run_streaming(...)``.
    """

    cfg: RunConfig
    metas: list = field(default_factory=list)
    predicted: list = field(default_factory=list)
    latency: LatencyLog | None = None
    download_frames: list = field(default_factory=list)
    fade_events: int = 0

    @property
    def transmitted_count(self) -> int:
        return sum(1 for m in self.metas if m.transmitted)

    @property
    def skipped_count(self) -> int:
        return sum(1 for m in self.metas if not m.transmitted)

    @property
    def average_latency(self) -> float:
        return average_latency(self.latency)

    def audio_out(self) -> AudioBuffer:
        """Concatenation of the translated segments, in index order.

        Skipped (silent) segments contribute nothing: an all-silent run
        yields an empty buffer.
        """
        if not self.predicted:
            return AudioBuffer(samples=np.zeros(0),
                               sample_rate=self.cfg.codec.sample_rate)
        samples = np.concatenate([seg.samples for seg in self.predicted])
        return AudioBuffer(samples=samples,
                           sample_rate=self.predicted[0].sample_rate)

    def __iter__(self):
        return iter((self.audio_out(), self.latency))


def _identity_pair(feature_dim: int) -> tuple[DenseNetwork, DenseNetwork]:
    return identity_network(feature_dim), identity_network(feature_dim)


def _check_dims(codec: ReferenceCodec, encoder: DenseNetwork,
                decoder: DenseNetwork) -> None:
    dim = codec.spec.feature_dim
    if encoder.input_dim != dim:
        raise PipelineError(
            f"encoder expects {encoder.input_dim}-dim features, codec "
            f"produces {dim}"
        )
    if decoder.output_dim != dim:
        raise PipelineError(
            f"decoder produces {decoder.output_dim}-dim features, codec "
            f"expects {dim}"
        )
    if encoder.output_dim != decoder.input_dim:
        raise PipelineError(
            f"encoder emits {encoder.output_dim} values, decoder consumes "
            f"{decoder.input_dim}"
        )


def run_streaming(source: AudioBuffer, cfg: RunConfig,
                  encoder: DenseNetwork | None = None,
                  decoder: DenseNetwork | None = None) -> RunResult:
    """One-process run with every hop round-tripped through the wire codec.

    Without explicit networks the channel codec is identity-initialized.
    The channel generator is consumed only for transmitted segments, in
    segment order, exactly as the networked edge_b node consumes it.
    """
    codec = ReferenceCodec(cfg.codec)
    if encoder is None or decoder is None:
        if encoder is not None or decoder is not None:
            raise PipelineError("supply both networks or neither")
        encoder, decoder = _identity_pair(cfg.codec.feature_dim)
    _check_dims(codec, encoder, decoder)
    if source.sample_rate != cfg.codec.sample_rate:
        raise PipelineError(
            f"source sample rate {source.sample_rate} does not match codec "
            f"spec {cfg.codec.sample_rate}"
        )
    channel_cfg = dataclasses.replace(cfg.channel, seed=cfg.channel_seed())
    rng = np.random.default_rng(channel_cfg.seed)
    result = RunResult(cfg=cfg)
    for segment in segment_stream(source, cfg.segmenter):
        transmitted = not (segment.silent and cfg.skip_silent)
        meta, upload = stage_device_tx(codec, segment, transmitted)
        meta = wire_roundtrip(meta)
        download = None
        if upload is not None:
            upload = wire_roundtrip(upload)
            link = wire_roundtrip(stage_edge_a(codec, encoder, upload))
            download, fade = stage_edge_b(codec, decoder, link, meta,
                                          channel_cfg, rng)
            if fade:
                meta = dataclasses.replace(meta, fade_event=True)
                result.fade_events += 1
            result.download_frames.append(encode_message(download))
            download = wire_roundtrip(download)
        result.metas.append(meta)
        if download is not None:
            result.predicted.append(stage_device_rx(codec, meta, download))
    if not result.metas:
        raise PipelineError("input produced no segments")
    result.latency = schedule_segments(
        [m.n_samples / m.sample_rate for m in result.metas],
        cfg.compute,
        schedule=cfg.schedule,
        transmitted=[m.transmitted for m in result.metas],
        realtime_capture=cfg.realtime_capture,
    )
    return result


# --- quality proxies ---------------------------------------------------------

SNR_CAP_DB = 120.0


def reconstruction_snr(reference, produced) -> float:
    """Signal-to-distortion ratio in dB, capped at 120 for exact matches."""
    ref = np.asarray(getattr(reference, "samples", reference), dtype=np.float64)
    out = np.asarray(getattr(produced, "samples", produced), dtype=np.float64)
    if ref.shape != out.shape:
        raise PipelineError(f"length mismatch {ref.shape} vs {out.shape}")
    signal = float(np.sum(ref * ref))
    if signal == 0.0:
        return 0.0
    err = float(np.sum((ref - out) ** 2))
    if err == 0.0:
        return SNR_CAP_DB
    return min(10.0 * np.log10(signal / err), SNR_CAP_DB)


def log_spectral_distance(reference, produced, frame_len: int = 512,
                          hop: int = 256) -> float:
    """Mean over frames of the RMS log-power spectral gap, in dB."""
    ref = np.asarray(getattr(reference, "samples", reference), dtype=np.float64)
    out = np.asarray(getattr(produced, "samples", produced), dtype=np.float64)
    n = min(len(ref), len(out))
    if n < frame_len:
        raise PipelineError("signals shorter than one analysis frame")
    window = np.hanning(frame_len)
    floor = 1e-12
    dists = []
    for start in range(0, n - frame_len + 1, hop):
        a = np.abs(np.fft.rfft(ref[start : start + frame_len] * window)) ** 2
        b = np.abs(np.fft.rfft(out[start : start + frame_len] * window)) ** 2
        gap = 10.0 * np.log10((a + floor) / (b + floor))
        dists.append(np.sqrt(np.mean(gap * gap)))
    return float(np.mean(dists))


def quality_proxy(source, translated, tolerance_samples: int | None = None) -> dict:
    """Reconstruction quality stand-in, meaningful for identity translation.

    Lower log-spectral distance is better; higher reconstruction SNR is
    better. Only use with the identity translator: across languages a
    waveform comparison means nothing. Signals may differ in length by up
    to one segment (default allowance: one second at the source rate, an
    upper bound on any legal segment); metrics run over the common prefix.
    """
    if tolerance_samples is None:
        tolerance_samples = int(round(source.sample_rate))
    gap = abs(len(source.samples) - len(translated.samples))
    if gap > tolerance_samples:
        raise PipelineError(
            f"signals differ by {gap} samples, more than one segment "
            f"({tolerance_samples})"
        )
    n = min(len(source.samples), len(translated.samples))
    ref = source.samples[:n]
    out = translated.samples[:n]
    return {
        "reconstruction_snr_db": reconstruction_snr(ref, out),
        "log_spectral_distance_db": log_spectral_distance(ref, out),
    }


def run_summary(result: RunResult) -> dict:
    """JSON-friendly digest of one run."""
    out = {
        "segments": len(result.metas),
        "transmitted": result.transmitted_count,
        "skipped": result.skipped_count,
        "fade_events": result.fade_events,
        "segmenter_mode": result.cfg.segmenter.mode,
        "channel_kind": result.cfg.channel.kind,
        "snr_db": result.cfg.channel.snr_db,
        "seed": result.cfg.seed,
        "channel_seed": result.cfg.channel_seed(),
    }
    out.update(latency_diagnostics(result.latency))
    return out


# --- networked roles ---------------------------------------------------------

def _config_message(cfg: RunConfig) -> Config:
    spec = cfg.codec
    return Config(
        codec_hash=spec.spec_hash(),
        feature_dim=spec.feature_dim,
        sample_rate=spec.sample_rate,
        channel_kind=cfg.channel.kind,
        snr_db=cfg.channel.snr_db,
        equalize=cfg.channel.equalize,
        channel_seed=cfg.channel_seed(),
    )


def role_device_tx(source: AudioBuffer, cfg: RunConfig,
                   listen=("127.0.0.1", 0), timeout: float = 30.0,
                   ready_callback=None) -> list:
    """Segment the stream and feed the first edge node.

    With realtime_capture the producer paces itself by sleeping out each
    segment's duration, mimicking a live microphone; otherwise the whole
    file is pushed as fast as the link accepts it.
    """
    codec = ReferenceCodec(cfg.codec)
    if source.sample_rate != cfg.codec.sample_rate:
        raise PipelineError(
            f"source sample rate {source.sample_rate} does not match codec "
            f"spec {cfg.codec.sample_rate}"
        )
    metas = []

    def producer(send):
        for segment in segment_stream(source, cfg.segmenter):
            if cfg.realtime_capture:
                time.sleep(segment.duration)
            transmitted = not (segment.silent and cfg.skip_silent)
            meta, upload = stage_device_tx(codec, segment, transmitted)
            send(meta)
            if upload is not None:
                send(upload)
            metas.append(meta)
        send(Eos())

    run_endpoint(
        "device_tx", producer=producer, listen=listen,
        config=_config_message(cfg), codec_hash=cfg.codec.spec_hash(),
        timeout=timeout, ready_callback=ready_callback,
    )
    if not metas:
        raise PipelineError("input produced no segments")
    return metas


def role_edge_a(upstream, codec: ReferenceCodec, encoder: DenseNetwork,
                listen=("127.0.0.1", 0), timeout: float = 30.0,
                ready_callback=None) -> SessionOutcome:
    """Lift uploads to semantics and channel-encode for the far edge."""
    if encoder.input_dim != codec.spec.feature_dim:
        raise PipelineError(
            f"encoder expects {encoder.input_dim}-dim features, codec "
            f"produces {codec.spec.feature_dim}"
        )
    pending = {}

    def handler(msg, send):
        if isinstance(msg, Eos):
            send(Eos())
        elif isinstance(msg, SegmentMeta):
            if msg.transmitted:
                pending["meta"] = msg
            else:
                send(msg)
        elif isinstance(msg, UploadFeatures):
            link = stage_edge_a(codec, encoder, msg)
            send(pending.pop("meta"))
            send(link)
        else:
            raise PipelineError(f"unexpected {type(msg).__name__} from device")

    return run_endpoint(
        "edge_a", handler=handler, listen=listen, connect=upstream,
        codec_hash=codec.spec.spec_hash(), timeout=timeout,
        ready_callback=ready_callback,
    )


def role_edge_b(upstream, codec: ReferenceCodec, decoder: DenseNetwork,
                listen=("127.0.0.1", 0), timeout: float = 30.0,
                ready_callback=None) -> SessionOutcome:
    """Apply the channel, decode, translate; rewrite metas with fades."""
    if decoder.output_dim != codec.spec.feature_dim:
        raise PipelineError(
            f"decoder produces {decoder.output_dim}-dim features, codec "
            f"expects {codec.spec.feature_dim}"
        )
    state = {}

    def on_config(config: Config):
        state["channel"] = ChannelConfig(
            kind=config.channel_kind, snr_db=config.snr_db,
            equalize=config.equalize, seed=config.channel_seed,
        )
        state["rng"] = np.random.default_rng(config.channel_seed)

    def handler(msg, send):
        if isinstance(msg, Eos):
            send(Eos())
        elif isinstance(msg, SegmentMeta):
            if msg.transmitted:
                state["meta"] = msg
            else:
                send(msg)
        elif isinstance(msg, LinkSymbols):
            meta = state.pop("meta")
            download, fade = stage_edge_b(
                codec, decoder, msg, meta, state["channel"], state["rng"]
            )
            if fade:
                meta = dataclasses.replace(meta, fade_event=True)
            send(meta)
            send(download)
        else:
            raise PipelineError(f"unexpected {type(msg).__name__} from edge")

    return run_endpoint(
        "edge_b", handler=handler, listen=listen, connect=upstream,
        codec_hash=codec.spec.spec_hash(), timeout=timeout,
        ready_callback=ready_callback, on_config=on_config,
    )


@dataclass
class ReceiverResult:
    config: Config | None = None
    metas: list = field(default_factory=list)
    predicted: list = field(default_factory=list)
    download_frames: list = field(default_factory=list)

    @property
    def fade_events(self) -> int:
        return sum(1 for m in self.metas if m.fade_event)

    def audio_out(self) -> AudioBuffer:
        """Translated segments concatenated; empty when nothing was sent."""
        if not self.predicted:
            rate = self.config.sample_rate if self.config else 16000
            return AudioBuffer(samples=np.zeros(0), sample_rate=rate)
        samples = np.concatenate([seg.samples for seg in self.predicted])
        return AudioBuffer(samples=samples,
                           sample_rate=self.predicted[0].sample_rate)


def role_device_rx(upstream, codec: ReferenceCodec,
                   timeout: float = 30.0) -> ReceiverResult:
    """Collect features off the wire and rebuild the output stream."""
    result = ReceiverResult()

    def on_config(config: Config):
        if config.feature_dim != codec.spec.feature_dim:
            raise PipelineError(
                f"session feature dim {config.feature_dim} does not match "
                f"local codec {codec.spec.feature_dim}"
            )
        result.config = config

    def handler(msg, send):
        if isinstance(msg, Eos):
            return
        if isinstance(msg, SegmentMeta):
            result.metas.append(msg)  # for transmitted ones a download follows
        elif isinstance(msg, DownloadFeatures):
            result.download_frames.append(encode_message(msg))
            result.predicted.append(
                stage_device_rx(codec, result.metas[-1], msg)
            )
        else:
            raise PipelineError(f"unexpected {type(msg).__name__} from edge")

    run_endpoint(
        "device_rx", handler=handler, connect=upstream,
        codec_hash=codec.spec.spec_hash(), timeout=timeout,
        on_config=on_config,
    )
    return result

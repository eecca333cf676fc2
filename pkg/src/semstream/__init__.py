"""Streaming semantic speech pipeline over simulated radio links.

Speech is cut into short variable-length segments, reduced to semantic
feature vectors, carried across a simulated noisy channel by a trainable
symbol codec, and re-synthesized on the far side, with a deterministic
clock model accounting for per-stage latency.
"""

from .audio import (
    AudioBuffer,
    AudioError,
    Envelope,
    SignalSpec,
    load_wav,
    rms_envelope,
    synth_test_signal,
    wav_bytes,
    write_wav,
)
from .channelsim import ChannelConfig, ChannelDraw, ChannelError, ComplexSymbols, demap, map_to_symbols, transmit
from .neuralcodec import (
    AdaptiveMoments,
    CheckpointError,
    DenseNetwork,
    GradientDescent,
    Layer,
    NetworkError,
    TrainConfig,
    TrainReport,
    TrainingError,
    build_network,
    decode,
    default_decoder,
    default_encoder,
    encode,
    identity_network,
    load_checkpoint,
    mse_loss,
    save_checkpoint,
    train,
)
from .pipeline import (
    ComputeModel,
    LatencyLog,
    PipelineError,
    ReceiverResult,
    RunConfig,
    RunResult,
    SegmentTiming,
    StageCost,
    average_latency,
    latency_diagnostics,
    log_spectral_distance,
    mean_segment_latency,
    quality_proxy,
    reconstruction_snr,
    role_device_rx,
    role_device_tx,
    role_edge_a,
    role_edge_b,
    run_streaming,
    run_summary,
    schedule_segments,
    timings_to_csv,
    wall_time,
)
from .segmenter import (
    SegmenterConfig,
    SegmenterError,
    SpeechSegment,
    estimate_slope,
    is_silent,
    next_duration,
    segment_stream,
    segments_to_csv,
)
from .semcodec import CodecError, CodecSpec, IntermediateFeatures, ReferenceCodec, SemanticFeatures
from .transport import (
    Config,
    DownloadFeatures,
    Eos,
    ErrorMessage,
    Hello,
    LinkSymbols,
    MsgType,
    ProtocolError,
    SegmentMeta,
    SessionOutcome,
    UploadFeatures,
    decode_message,
    encode_message,
    run_endpoint,
    wire_roundtrip,
)

__version__ = "0.1.0"

"""Command line front end.

Subcommands: segment, train, run, sweep, serve. Options come from an
optional TOML config file plus flag overrides; the effective seed is
resolved as flag > config > LSSC_SEED environment variable > 0. Every
command finishes by printing one JSON manifest to stdout that echoes the
fully resolved configuration, so runs are reproducible from their logs.
Progress goes to stderr.

Exit codes: 0 success, 1 runtime failure, 2 bad usage or configuration.
"""

from __future__ import annotations

import argparse
import dataclasses
import glob
import json
import os
import sys

try:
    import tomllib
except ModuleNotFoundError:  # 3.10 fallback
    import tomli as tomllib

import numpy as np

from .audio import (
    AudioBuffer,
    AudioError,
    SignalSpec,
    load_wav,
    synth_test_signal,
    write_wav,
)
from .channelsim import CHANNEL_KINDS, ChannelConfig, ChannelError
from .neuralcodec import (
    CheckpointError,
    DenseNetwork,
    NetworkError,
    TrainConfig,
    TrainingError,
    identity_network,
    load_checkpoint,
    save_checkpoint,
    train,
)
from .pipeline import (
    ComputeModel,
    PipelineError,
    ReceiverResult,
    RunConfig,
    StageCost,
    latency_diagnostics,
    quality_proxy,
    role_device_rx,
    role_device_tx,
    role_edge_a,
    role_edge_b,
    run_streaming,
    run_summary,
    schedule_segments,
    timings_to_csv,
)
from .segmenter import (
    SegmenterConfig,
    SegmenterError,
    segment_stream,
    segments_to_csv,
)
from .semcodec import CodecError, CodecSpec, ReferenceCodec
from .transport import ProtocolError, ROLES

SEED_ENV_VAR = "LSSC_SEED"

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2

_RUNTIME_ERRORS = (
    AudioError, SegmenterError, CodecError, ChannelError, NetworkError,
    CheckpointError, TrainingError, PipelineError, ProtocolError,
    ConnectionError, TimeoutError, OSError,
)


class ConfigError(ValueError):
    """Bad config file or incompatible option combination."""


def _fail_usage(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return EXIT_USAGE


def _build(cls, data: dict, where: str):
    """Construct a config dataclass, rejecting unknown keys."""
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ConfigError(
            f"unknown key(s) {sorted(unknown)} in [{where}]"
        )
    try:
        return cls(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad [{where}] section: {exc}") from exc


def _load_toml(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML in {path}: {exc}") from exc


def _resolve_seed(flag_seed: int | None, raw: dict) -> int:
    if flag_seed is not None:
        return flag_seed
    if "seed" in raw:
        if not isinstance(raw["seed"], int):
            raise ConfigError("seed in config must be an integer")
        return raw["seed"]
    env = os.environ.get(SEED_ENV_VAR)
    if env is not None:
        try:
            return int(env)
        except ValueError as exc:
            raise ConfigError(f"{SEED_ENV_VAR}={env!r} is not an integer") from exc
    return 0


@dataclasses.dataclass
class Settings:
    """Everything a command needs, resolved from file + flags + env."""

    seed: int
    config_file: str | None
    segmenter: SegmenterConfig
    codec_spec: CodecSpec
    channel: ChannelConfig
    compute: ComputeModel
    run: RunConfig
    train: TrainConfig
    raw: dict

    def manifest_config(self) -> dict:
        return {
            "seed": self.seed,
            "segmenter": dataclasses.asdict(self.segmenter),
            "codec": dataclasses.asdict(self.codec_spec),
            "channel": dataclasses.asdict(self.channel),
            "compute": dataclasses.asdict(self.compute),
            "run": {
                "schedule": self.run.schedule,
                "realtime_capture": self.run.realtime_capture,
                "skip_silent": self.run.skip_silent,
            },
            "train": dataclasses.asdict(self.train),
        }


def _build_settings(args) -> Settings:
    config_file = getattr(args, "config", None)
    raw = _load_toml(config_file)
    for section in raw:
        if section not in (
            "seed", "segmenter", "codec", "channel", "compute", "run", "train",
        ):
            raise ConfigError(f"unknown config section [{section}]")
    seed = _resolve_seed(getattr(args, "seed", None), raw)

    seg_data = dict(raw.get("segmenter", {}))
    if getattr(args, "mode", None):
        seg_data["mode"] = args.mode
    segmenter = _build(SegmenterConfig, seg_data, "segmenter")

    codec_data = dict(raw.get("codec", {}))
    codec_data.setdefault("projection_seed", seed)
    codec_data.setdefault("translator_seed", seed)
    codec_spec = _build(CodecSpec, codec_data, "codec")

    chan_data = dict(raw.get("channel", {}))
    if getattr(args, "channel", None):
        chan_data["kind"] = args.channel
    if getattr(args, "snr_db", None) is not None:
        chan_data["snr_db"] = args.snr_db
    chan_data.setdefault("seed", seed)
    channel = _build(ChannelConfig, chan_data, "channel")

    comp_data = dict(raw.get("compute", {}))
    stage_costs = {}
    for name, val in comp_data.items():
        if not isinstance(val, dict):
            raise ConfigError(f"[compute.{name}] must be a table")
        stage_costs[name] = _build(StageCost, val, f"compute.{name}")
    compute = _build(ComputeModel, stage_costs, "compute")

    run_data = dict(raw.get("run", {}))
    if getattr(args, "schedule", None):
        run_data["schedule"] = args.schedule
    if getattr(args, "no_skip_silent", False):
        run_data["skip_silent"] = False
    try:
        run_cfg = RunConfig(
            codec=codec_spec, segmenter=segmenter, channel=channel,
            compute=compute, seed=seed, **run_data,
        )
    except (TypeError, ValueError, PipelineError) as exc:
        raise ConfigError(f"bad [run] section: {exc}") from exc

    train_data = dict(raw.get("train", {}))
    for flag, key in (
        ("epochs", "epochs"), ("max_steps", "max_steps"),
        ("batch_size", "batch_size"), ("learning_rate", "learning_rate"),
        ("optimizer", "optimizer"), ("hidden_dim", "hidden_dim"),
        ("symbol_budget", "symbol_budget"),
    ):
        val = getattr(args, flag, None)
        if val is not None:
            train_data[key] = val
    if "snr_range" in train_data:
        train_data["snr_range"] = tuple(train_data["snr_range"])
    train_data.setdefault("seed", seed)
    try:
        train_cfg = TrainConfig(channel=channel, **{
            k: v for k, v in train_data.items() if k != "channel"
        })
    except (TypeError, ValueError, TrainingError) as exc:
        raise ConfigError(f"bad [train] section: {exc}") from exc

    return Settings(
        seed=seed, config_file=config_file, segmenter=segmenter,
        codec_spec=codec_spec, channel=channel, compute=compute,
        run=run_cfg, train=train_cfg, raw=raw,
    )


def _read_wav_checked(path: str, settings: Settings) -> AudioBuffer:
    if not os.path.exists(path):
        raise ConfigError(f"input not found: {path}")
    audio = load_wav(path)
    if audio.sample_rate != settings.codec_spec.sample_rate:
        raise ConfigError(
            f"{path} is {audio.sample_rate} Hz, codec spec wants "
            f"{settings.codec_spec.sample_rate} Hz"
        )
    return audio


def _load_input(args, settings: Settings) -> AudioBuffer:
    if getattr(args, "input", None):
        return _read_wav_checked(args.input, settings)
    if getattr(args, "synthetic", None):
        spec = SignalSpec(
            kind=args.synthetic,
            amplitude_ramp=(0.1, 0.8),
            duration=args.synthetic_seconds,
            seed=settings.seed,
            sample_rate=settings.codec_spec.sample_rate,
        )
        return synth_test_signal(spec)
    raise ConfigError("provide --input WAV or --synthetic tone|noise")


def _load_corpus(args, settings: Settings) -> list:
    """Training corpus: a directory of WAVs, one WAV, or a synthetic signal."""
    corpus_dir = getattr(args, "corpus", None)
    if corpus_dir:
        if not os.path.isdir(corpus_dir):
            raise ConfigError(f"corpus path not found: {corpus_dir}")
        paths = sorted(glob.glob(os.path.join(corpus_dir, "*.wav")))
        if not paths:
            raise ConfigError(f"no .wav files in corpus path: {corpus_dir}")
        segments = []
        for path in paths:
            audio = _read_wav_checked(path, settings)
            segments.extend(
                seg for seg in segment_stream(audio, settings.segmenter)
                if not seg.silent
            )
        return segments
    audio = _load_input(args, settings)
    return [
        seg for seg in segment_stream(audio, settings.segmenter)
        if not seg.silent
    ]


def _load_networks(args, settings: Settings) -> tuple[DenseNetwork, DenseNetwork]:
    ckpt = getattr(args, "checkpoint", None)
    if getattr(args, "identity_init", False):
        if ckpt:
            raise ConfigError("--identity-init and --checkpoint are exclusive")
        dim = settings.codec_spec.feature_dim
        return identity_network(dim), identity_network(dim)
    if not ckpt:
        raise ConfigError("provide --checkpoint PATH or --identity-init")
    if not os.path.exists(ckpt):
        raise ConfigError(f"checkpoint not found: {ckpt}")
    encoder, decoder = load_checkpoint(ckpt)
    if encoder.input_dim != settings.codec_spec.feature_dim:
        raise ConfigError(
            f"checkpoint encoder expects {encoder.input_dim} features, codec "
            f"produces {settings.codec_spec.feature_dim}"
        )
    return encoder, decoder


def _emit_manifest(command: str, settings: Settings, **extra) -> None:
    from . import __version__

    doc = {
        "command": command,
        "version": __version__,
        "config_file": settings.config_file,
        "config": settings.manifest_config(),
    }
    doc.update(extra)
    json.dump(doc, sys.stdout, indent=2, sort_keys=True, default=float)
    sys.stdout.write("\n")


def _log(msg: str) -> None:
    print(msg, file=sys.stderr, flush=True)


# --- subcommands --------------------------------------------------------------

def _cmd_segment(args) -> int:
    settings = _build_settings(args)
    audio = _load_input(args, settings)
    segments = list(segment_stream(audio, settings.segmenter))
    segments_to_csv(segments, args.output if args.output else sys.stderr)
    durations = [s.duration for s in segments]
    _emit_manifest(
        "segment", settings,
        outputs={"csv": args.output},
        stats={
            "segments": len(segments),
            "silent": sum(1 for s in segments if s.silent),
            "mean_duration_seconds": float(np.mean(durations)) if durations else 0.0,
            "total_seconds": float(sum(durations)),
        },
    )
    return EXIT_OK


def _cmd_train(args) -> int:
    settings = _build_settings(args)
    codec = ReferenceCodec(settings.codec_spec)
    corpus = _load_corpus(args, settings)
    if not corpus:
        raise TrainingError("corpus contains no non-silent segments")
    _log(f"training on {len(corpus)} segments, "
         f"channel {settings.channel.kind} @ {settings.channel.snr_db} dB")
    encoder, decoder, report = train(codec, settings.channel, corpus,
                                     settings.train)
    save_checkpoint(args.output, encoder, decoder)
    report_doc = {
        "epochs_run": report.epochs_run,
        "steps_run": report.steps_run,
        "initial_val_mse": report.initial_val_mse,
        "final_val_mse": report.final_val_mse,
        "train_mse": report.train_mse,
        "val_mse": report.val_mse,
        "converged": report.converged,
        "wall_time_seconds": report.wall_time_seconds,
        "params_checksum": report.params_checksum,
    }
    if args.report:
        with open(args.report, "w") as fh:
            json.dump(report_doc, fh, indent=2)
            fh.write("\n")
    _emit_manifest(
        "train", settings,
        outputs={"checkpoint": args.output, "report": args.report},
        stats=report_doc,
    )
    return EXIT_OK


def _run_once(audio, encoder, decoder, run_cfg):
    result = run_streaming(audio, run_cfg, encoder, decoder)
    summary = run_summary(result)
    out_audio = result.audio_out()
    if run_cfg.codec.translator == "identity" and len(out_audio) == len(audio):
        summary["quality"] = quality_proxy(audio, out_audio)
    return result, summary, out_audio


def _cmd_run(args) -> int:
    settings = _build_settings(args)
    audio = _load_input(args, settings)
    encoder, decoder = _load_networks(args, settings)
    result, summary, out_audio = _run_once(audio, encoder, decoder,
                                           settings.run)
    outputs = {}
    if args.output:
        write_wav(args.output, out_audio)
        outputs["wav"] = args.output
    if args.timings:
        with open(args.timings, "w") as fh:
            fh.write(timings_to_csv(result.latency))
        outputs["timings"] = args.timings
    if args.summary:
        with open(args.summary, "w") as fh:
            json.dump({"config": settings.manifest_config(), **summary},
                      fh, indent=2, default=float)
            fh.write("\n")
        outputs["summary"] = args.summary
    if args.dump_downloads:
        with open(args.dump_downloads, "wb") as fh:
            for frame in result.download_frames:
                fh.write(frame)
        outputs["downloads"] = args.dump_downloads
    _emit_manifest("run", settings, outputs=outputs, stats=summary)
    return EXIT_OK


SWEEP_CSV_HEADER = (
    "snr_db", "channel", "mode", "seed", "average_latency_seconds",
    "mean_segment_latency_seconds", "reconstruction_snr_db",
    "log_spectral_distance_db", "transmitted", "fade_events",
)


def _parse_list(text: str, what: str, allowed=None) -> list[str]:
    items = [v.strip() for v in text.split(",") if v.strip()]
    if not items:
        raise ConfigError(f"{what} is empty")
    if allowed is not None:
        for item in items:
            if item not in allowed:
                raise ConfigError(f"{what}: unknown value {item!r}")
    return items


def _cmd_sweep(args) -> int:
    settings = _build_settings(args)
    audio = _load_input(args, settings)
    encoder, decoder = _load_networks(args, settings)
    try:
        snrs = [float(v) for v in _parse_list(args.snr_list, "--snr-list")]
    except ValueError as exc:
        raise ConfigError(f"bad --snr-list: {exc}") from exc
    deduped = sorted(set(snrs))
    if len(deduped) != len(snrs):
        _log(f"warning: --snr-list has duplicates, sweeping {len(deduped)} "
             f"unique values")
    channels = _parse_list(args.channels, "--channels", CHANNEL_KINDS) \
        if args.channels else [settings.channel.kind]
    modes = _parse_list(args.modes, "--modes", ("fixed", "dynamic")) \
        if args.modes else [settings.segmenter.mode]

    rows = []
    for channel_kind in channels:
        for mode in modes:
            for snr in deduped:
                channel = dataclasses.replace(settings.channel,
                                              kind=channel_kind, snr_db=snr)
                segmenter = dataclasses.replace(settings.segmenter, mode=mode)
                run_cfg = dataclasses.replace(settings.run, channel=channel,
                                              segmenter=segmenter)
                _, summary, _ = _run_once(audio, encoder, decoder, run_cfg)
                quality = summary.get("quality", {})
                rows.append({
                    "snr_db": snr,
                    "channel": channel_kind,
                    "mode": mode,
                    "seed": settings.seed,
                    "average_latency_seconds":
                        summary.get("average_latency_seconds", ""),
                    "mean_segment_latency_seconds":
                        summary.get("mean_segment_latency_seconds", ""),
                    "reconstruction_snr_db":
                        quality.get("reconstruction_snr_db", ""),
                    "log_spectral_distance_db":
                        quality.get("log_spectral_distance_db", ""),
                    "transmitted": summary["transmitted"],
                    "fade_events": summary["fade_events"],
                })
                _log(f"swept {channel_kind}/{mode} @ {snr:+.1f} dB")

    lines = [",".join(SWEEP_CSV_HEADER)]
    for row in rows:
        lines.append(",".join(str(row[k]) for k in SWEEP_CSV_HEADER))
    csv_text = "\n".join(lines) + "\n"
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(csv_text)
    else:
        sys.stderr.write(csv_text)
    _emit_manifest("sweep", settings, outputs={"csv": args.output},
                   stats={"rows": len(rows), "channels": channels,
                          "modes": modes, "snr_values": deduped})
    return EXIT_OK


def _cmd_serve(args) -> int:
    settings = _build_settings(args)
    codec = ReferenceCodec(settings.codec_spec)
    role = args.role

    def parse_addr(text, what):
        if not text:
            raise ConfigError(f"{what} host:port is required for role {role}")
        host, sep, port = text.rpartition(":")
        if not sep:
            raise ConfigError(f"{what} must look like host:port, got {text!r}")
        try:
            return host, int(port)
        except ValueError as exc:
            raise ConfigError(f"bad port in {text!r}") from exc

    def announce(addr):
        _log(json.dumps({"event": "listening", "role": role,
                         "host": addr[0], "port": addr[1]}))

    stats: dict = {"role": role}
    outputs: dict = {}
    if role == "device_tx":
        listen = parse_addr(args.listen, "--listen")
        audio = _load_input(args, settings)
        metas = role_device_tx(audio, settings.run, listen=listen,
                               timeout=args.timeout, ready_callback=announce)
        stats.update(segments=len(metas),
                     transmitted=sum(1 for m in metas if m.transmitted))
    elif role == "edge_a":
        encoder, _decoder = _load_networks(args, settings)
        outcome = role_edge_a(parse_addr(args.upstream, "--upstream"), codec,
                              encoder, listen=parse_addr(args.listen, "--listen"),
                              timeout=args.timeout, ready_callback=announce)
        stats.update(messages=outcome.messages, last_index=outcome.last_index)
    elif role == "edge_b":
        _encoder, decoder = _load_networks(args, settings)
        outcome = role_edge_b(parse_addr(args.upstream, "--upstream"), codec,
                              decoder, listen=parse_addr(args.listen, "--listen"),
                              timeout=args.timeout, ready_callback=announce)
        stats.update(messages=outcome.messages, last_index=outcome.last_index)
    elif role == "device_rx":
        result = role_device_rx(parse_addr(args.upstream, "--upstream"), codec,
                                timeout=args.timeout)
        outputs = _write_receiver_outputs(args, settings, result)
        stats.update(
            segments=len(result.metas),
            transmitted=sum(1 for m in result.metas if m.transmitted),
            fade_events=result.fade_events,
        )
    else:
        raise ConfigError(f"unknown role {role!r}")
    _emit_manifest("serve", settings, outputs=outputs, stats=stats)
    return EXIT_OK


def _write_receiver_outputs(args, settings: Settings,
                            result: ReceiverResult) -> dict:
    out_dir = args.output_dir
    if not out_dir:
        return {}
    os.makedirs(out_dir, exist_ok=True)
    outputs = {}
    wav_path = os.path.join(out_dir, "out.wav")
    write_wav(wav_path, result.audio_out())
    outputs["wav"] = wav_path
    log = schedule_segments(
        [m.n_samples / m.sample_rate for m in result.metas],
        settings.compute,
        schedule=settings.run.schedule,
        transmitted=[m.transmitted for m in result.metas],
        realtime_capture=settings.run.realtime_capture,
    )
    csv_path = os.path.join(out_dir, "timings.csv")
    with open(csv_path, "w") as fh:
        fh.write(timings_to_csv(log))
    outputs["timings"] = csv_path
    dl_path = os.path.join(out_dir, "downloads.bin")
    with open(dl_path, "wb") as fh:
        for frame in result.download_frames:
            fh.write(frame)
    outputs["downloads"] = dl_path
    summary = {
        "segments": len(result.metas),
        "fade_events": result.fade_events,
        **latency_diagnostics(log),
    }
    sum_path = os.path.join(out_dir, "summary.json")
    with open(sum_path, "w") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")
    outputs["summary"] = sum_path
    return outputs


# --- parser -------------------------------------------------------------------

def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="TOML config file")
    p.add_argument("--seed", type=int, help=f"overrides config and ${SEED_ENV_VAR}")


def _add_input(p: argparse.ArgumentParser) -> None:
    p.add_argument("--input", help="input WAV file")
    p.add_argument("--synthetic", choices=("tone", "noise"),
                   help="generate a test signal instead of reading a file")
    p.add_argument("--synthetic-seconds", type=float, default=8.0)


def _add_networks(p: argparse.ArgumentParser) -> None:
    p.add_argument("--checkpoint", help="trained encoder/decoder checkpoint")
    p.add_argument("--identity-init", action="store_true",
                   help="use identity networks instead of a checkpoint")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="semstream",
        description="Streaming semantic speech pipeline over simulated links.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("segment", help="segment a stream and write the CSV log")
    _add_common(p)
    _add_input(p)
    p.add_argument("--mode", choices=("dynamic", "fixed"))
    p.add_argument("--output", help="CSV path (default: print to stderr)")
    p.set_defaults(func=_cmd_segment)

    p = sub.add_parser("train", help="train the channel codec networks")
    _add_common(p)
    _add_input(p)
    p.add_argument("--corpus", help="directory of training WAV files")
    p.add_argument("--output", required=True, help="checkpoint path")
    p.add_argument("--report", help="training report JSON path")
    p.add_argument("--epochs", type=int)
    p.add_argument("--max-steps", type=int)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--learning-rate", type=float)
    p.add_argument("--optimizer", choices=("sgd", "adam"))
    p.add_argument("--hidden-dim", type=int)
    p.add_argument("--symbol-budget", type=int)
    p.add_argument("--channel", choices=CHANNEL_KINDS)
    p.add_argument("--snr-db", type=float)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("run", help="run the full pipeline in one process")
    _add_common(p)
    _add_input(p)
    _add_networks(p)
    p.add_argument("--channel", choices=CHANNEL_KINDS)
    p.add_argument("--snr-db", type=float)
    p.add_argument("--mode", choices=("dynamic", "fixed"),
                   help="segmenter mode override")
    p.add_argument("--schedule", choices=("pipelined", "serialized"))
    p.add_argument("--no-skip-silent", action="store_true",
                   help="transmit silent segments too")
    p.add_argument("--output", help="reconstructed WAV path")
    p.add_argument("--timings", help="timing CSV path")
    p.add_argument("--summary", help="run summary JSON path")
    p.add_argument("--dump-downloads",
                   help="write raw download frames to this file")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("sweep", help="grid of runs over SNR/channel/mode")
    _add_common(p)
    _add_input(p)
    _add_networks(p)
    p.add_argument("--snr-list", required=True,
                   help="comma-separated SNR values in dB")
    p.add_argument("--channels", help="comma-separated channel kinds")
    p.add_argument("--modes", help="comma-separated segmenter modes")
    p.add_argument("--output", help="aggregated CSV path")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("serve", help="run one networked pipeline role")
    _add_common(p)
    _add_input(p)
    _add_networks(p)
    p.add_argument("--role", required=True, choices=ROLES)
    p.add_argument("--listen", help="host:port to accept the downstream node")
    p.add_argument("--upstream", help="host:port of the upstream node")
    p.add_argument("--output-dir", help="device_rx output directory")
    p.add_argument("--mode", choices=("dynamic", "fixed"))
    p.add_argument("--channel", choices=CHANNEL_KINDS)
    p.add_argument("--snr-db", type=float)
    p.add_argument("--no-skip-silent", action="store_true")
    p.add_argument("--timeout", type=float, default=30.0,
                   help="socket timeout in seconds")
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        return _fail_usage(str(exc))
    except _RUNTIME_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())

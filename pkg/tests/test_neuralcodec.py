"""Channel codec networks: forwards, exact gradients, training, checkpoints."""

import numpy as np
import pytest

from semstream import (
    ChannelConfig,
    CheckpointError,
    CodecSpec,
    DenseNetwork,
    Layer,
    NetworkError,
    ReferenceCodec,
    SegmenterConfig,
    SemanticFeatures,
    SignalSpec,
    TrainConfig,
    TrainingError,
    build_network,
    decode,
    encode,
    identity_network,
    load_checkpoint,
    mse_loss,
    save_checkpoint,
    segment_stream,
    synth_test_signal,
    train,
)
from semstream.neuralcodec import (
    ChannelRealization,
    chain_backward,
    chain_forward,
    checkpoint_bytes,
    draw_channel_batch,
    network_checksum,
    _flat_grads,
    _flat_params,
    _segment_features,
)

DESK_SPEC = CodecSpec(frame_len=320, coeffs_kept=64, feature_dim=64,
                      max_segment_seconds=0.15, sample_rate=16000)
SMALL_SPEC = CodecSpec(frame_len=320, coeffs_kept=8, feature_dim=8,
                       max_segment_seconds=0.15, sample_rate=16000)


def training_corpus(duration=24.0):
    """Short fixed segments of a ramped tone; structured, so the decoder
    has an actual manifold to invert rather than rows to memorize."""
    sig = synth_test_signal(SignalSpec(kind="tone", amplitude_ramp=(0.4, 0.9),
                                       duration=duration, seed=11))
    segcfg = SegmenterConfig(mode="fixed", fixed_duration=0.1,
                             min_duration=0.05, initial_duration=0.08,
                             max_duration=0.12)
    return [s for s in segment_stream(sig, segcfg) if not s.silent]


def reference_forward(net, x):
    """Independent dense-network oracle: plain loops, no shared code paths."""
    out = np.asarray(x, dtype=np.float64)
    for layer in net.layers:
        out = layer.weights @ out + layer.bias
        if layer.activation == "relu":
            out = np.maximum(out, 0.0)
    return out


# --- encode / decode ---------------------------------------------------------

def test_identity_layer_passes_input_through():
    net = identity_network(16)
    f = SemanticFeatures(values=np.linspace(-1, 1, 16))
    np.testing.assert_array_equal(encode(f, net), f.values)


def test_zero_input_zero_bias_net():
    net = build_network([8, 12, 6], ["relu", "none"], seed=0)
    for layer in net.layers:
        layer.bias[:] = 0.0
    out = encode(SemanticFeatures(values=np.zeros(8)), net)
    np.testing.assert_array_equal(out, np.zeros(6))


def test_forward_matches_loop_oracle():
    rng = np.random.default_rng(9)
    for seed in range(10):
        net = build_network([6, 10, 10, 4], ["relu", "relu", "none"], seed=seed)
        x = rng.standard_normal(6)
        got = encode(SemanticFeatures(values=x), net)
        np.testing.assert_allclose(got, reference_forward(net, x), atol=1e-9)


def test_decode_mirrors_encode():
    net = identity_network(12)
    y = np.linspace(-2, 2, 12)
    sem = decode(y, net, index=7)
    np.testing.assert_array_equal(sem.values, y)
    assert sem.index == 7


def test_encode_dim_mismatch():
    net = identity_network(8)
    with pytest.raises(NetworkError):
        encode(SemanticFeatures(values=np.zeros(9)), net)


def test_affine_superposition_without_activations():
    """With no ReLU anywhere the stack is affine in its input."""
    net = build_network([5, 9, 5], ["none", "none"], seed=2)
    rng = np.random.default_rng(3)
    x, y = rng.standard_normal((2, 5))
    a, b = 1.7, -0.4
    fx = net.forward(x) - net.forward(np.zeros(5))
    fy = net.forward(y) - net.forward(np.zeros(5))
    fxy = net.forward(a * x + b * y) - net.forward(np.zeros(5))
    np.testing.assert_allclose(fxy, a * fx + b * fy, atol=1e-9)


def test_build_network_deterministic():
    a = build_network([8, 16, 8], ["relu", "none"], seed=5)
    b = build_network([8, 16, 8], ["relu", "none"], seed=5)
    for la, lb in zip(a.layers, b.layers):
        np.testing.assert_array_equal(la.weights, lb.weights)


def test_network_validation():
    with pytest.raises(NetworkError):
        DenseNetwork([])
    with pytest.raises(NetworkError):
        Layer(weights=np.zeros((3, 2)), bias=np.zeros(4))
    with pytest.raises(NetworkError):
        Layer(weights=np.zeros((3, 2)), bias=np.zeros(3), activation="tanh")
    with pytest.raises(NetworkError):
        DenseNetwork([Layer(np.zeros((3, 2)), np.zeros(3)),
                      Layer(np.zeros((5, 4)), np.zeros(5))])


# --- mse_loss ----------------------------------------------------------------

def test_loss_zero_at_equality():
    f = np.array([0.3, -0.2, 1.0])
    assert mse_loss(f, f) == 0.0


def test_loss_worked_example():
    assert mse_loss(np.array([1.0, 2.0]), np.array([0.0, 0.0])) == 2.5


def test_loss_permutation_invariant():
    rng = np.random.default_rng(7)
    f = rng.standard_normal(32)
    g = rng.standard_normal(32)
    perm = rng.permutation(32)
    assert mse_loss(f, g) == pytest.approx(mse_loss(f[perm], g[perm]), rel=1e-12)


def test_loss_positive_unless_equal():
    rng = np.random.default_rng(8)
    f = rng.standard_normal(16)
    g = f.copy()
    g[3] += 1e-9
    assert mse_loss(f, g) > 0.0


def test_loss_length_mismatch():
    with pytest.raises((NetworkError, ValueError)):
        mse_loss(np.zeros(4), np.zeros(5))


# --- gradients ---------------------------------------------------------------

def fd_check(enc, dec, F, real, eps=1e-5):
    """Central finite differences over every parameter entry."""
    F_hat, cache = chain_forward(enc, dec, F, real)
    d_fhat = 2.0 * (F_hat - F) / F.size
    enc_grads, dec_grads = chain_backward(enc, dec, cache, d_fhat, real)
    analytic = _flat_grads(enc_grads, dec_grads)
    params = _flat_params(enc, dec)

    def loss():
        out, _ = chain_forward(enc, dec, F, real)
        return float(np.mean((out - F) ** 2))

    worst = 0.0
    for p, g in zip(params, analytic):
        flat_p = p.reshape(-1)
        flat_g = np.asarray(g, dtype=np.float64).reshape(-1)
        fd = np.empty_like(flat_g)
        for i in range(flat_p.size):
            keep = flat_p[i]
            flat_p[i] = keep + eps
            up = loss()
            flat_p[i] = keep - eps
            down = loss()
            flat_p[i] = keep
            fd[i] = (up - down) / (2 * eps)
        scale = max(np.abs(fd).max(), np.abs(flat_g).max(), 1e-8)
        worst = max(worst, float(np.abs(fd - flat_g).max() / scale))
    return worst


def test_gradient_toy_net_finite_differences():
    rng = np.random.default_rng(13)
    enc = build_network([4, 6, 4], ["none", "none"], seed=1)
    dec = build_network([4, 6, 4], ["relu", "none"], seed=2)
    F = rng.standard_normal((3, 4))
    real = draw_channel_batch(ChannelConfig(kind="awgn", snr_db=10.0), 3, 2,
                              np.random.default_rng(3))
    assert fd_check(enc, dec, F, real) < 1e-4


def test_gradient_zero_at_perfect_reconstruction():
    enc = identity_network(6)
    dec = identity_network(6)
    F = np.random.default_rng(4).standard_normal((2, 6))
    real = draw_channel_batch(ChannelConfig(kind="clean"), 2, 3,
                              np.random.default_rng(0))
    F_hat, cache = chain_forward(enc, dec, F, real)
    np.testing.assert_allclose(F_hat, F, atol=1e-12)
    enc_grads, dec_grads = chain_backward(enc, dec, cache,
                                          np.zeros_like(F), real)
    for g in _flat_grads(enc_grads, dec_grads):
        assert not np.asarray(g).any()


def test_gradient_scales_linearly():
    rng = np.random.default_rng(15)
    enc = build_network([5, 8, 6], ["none", "none"], seed=6)
    dec = build_network([6, 8, 5], ["relu", "none"], seed=7)
    F = rng.standard_normal((4, 5))
    real = draw_channel_batch(ChannelConfig(kind="clean"), 4, 3,
                              np.random.default_rng(1))
    _, cache = chain_forward(enc, dec, F, real)
    d = rng.standard_normal((4, 5))
    g1 = _flat_grads(*chain_backward(enc, dec, cache, d, real))
    g2 = _flat_grads(*chain_backward(enc, dec, cache, 2.0 * d, real))
    for a, b in zip(g1, g2):
        np.testing.assert_allclose(2.0 * np.asarray(a), np.asarray(b),
                                   atol=1e-12)


def test_chain_identity_composition():
    """Identity nets over a clean channel reproduce the input exactly."""
    enc = identity_network(8)
    dec = identity_network(8)
    F = np.random.default_rng(21).standard_normal((5, 8))
    real = draw_channel_batch(ChannelConfig(kind="clean"), 5, 4,
                              np.random.default_rng(0))
    F_hat, _ = chain_forward(enc, dec, F, real)
    np.testing.assert_allclose(F_hat, F, atol=1e-12)


def test_channel_draw_clean_is_inert():
    real = draw_channel_batch(ChannelConfig(kind="clean"), 3, 5,
                              np.random.default_rng(2))
    assert np.all(real.h == 1.0)
    assert not real.noise.any()
    assert not real.equalize_row.any()


def test_channel_draw_deterministic():
    cfg = ChannelConfig(kind="rayleigh", snr_db=12.0)
    a = draw_channel_batch(cfg, 4, 8, np.random.default_rng(33))
    b = draw_channel_batch(cfg, 4, 8, np.random.default_rng(33))
    np.testing.assert_array_equal(a.h, b.h)
    np.testing.assert_array_equal(a.noise, b.noise)


# --- training ----------------------------------------------------------------

def test_linear_pair_learns_identity_small():
    """Clean channel, all-linear nets, 8-dim features: NMSE under -30 dB."""
    corpus = training_corpus()
    codec = ReferenceCodec(SMALL_SPEC)
    enc = build_network([8, 16], ["none"], seed=3)
    dec = build_network([16, 8], ["none"], seed=4)
    cfg = TrainConfig(channel=ChannelConfig(kind="clean"), epochs=200,
                      max_steps=500, patience=10**9, learning_rate=3e-3,
                      seed=5)
    enc, dec, report = train(codec, ChannelConfig(kind="clean"), corpus, cfg,
                             encoder=enc, decoder=dec)
    power = float(np.mean(_segment_features(codec, corpus) ** 2))
    nmse_db = 10 * np.log10(report.final_val_mse / power)
    assert nmse_db <= -30.0
    assert report.steps_run <= 500


def test_awgn_training_improves_twentyfold():
    corpus = training_corpus()
    codec = ReferenceCodec(DESK_SPEC)
    ch = ChannelConfig(kind="awgn", snr_db=18.0)
    cfg = TrainConfig(channel=ch, epochs=120, seed=5)
    _, _, report = train(codec, ch, corpus, cfg)
    assert report.initial_val_mse / report.final_val_mse >= 20.0


def test_zero_epoch_budget_is_noop():
    corpus = training_corpus()
    codec = ReferenceCodec(SMALL_SPEC)
    enc = build_network([8, 16], ["none"], seed=3)
    dec = build_network([16, 8], ["none"], seed=4)
    before = network_checksum(enc, dec)
    cfg = TrainConfig(channel=ChannelConfig(kind="clean"), epochs=0, seed=5)
    enc2, dec2, report = train(codec, ChannelConfig(kind="clean"), corpus, cfg,
                               encoder=enc, decoder=dec)
    assert report.epochs_run == 0
    assert network_checksum(enc2, dec2) == before


def test_training_deterministic_under_seed():
    corpus = training_corpus(duration=8.0)
    codec = ReferenceCodec(DESK_SPEC)
    cfg = TrainConfig(channel=ChannelConfig(kind="awgn", snr_db=12.0),
                      epochs=3, seed=7)
    _, _, r1 = train(codec, cfg.channel, corpus, cfg)
    _, _, r2 = train(codec, cfg.channel, corpus, cfg)
    assert r1.params_checksum == r2.params_checksum
    assert r1.val_mse == r2.val_mse
    assert r1.train_mse == r2.train_mse


def test_empty_corpus_rejected():
    codec = ReferenceCodec(DESK_SPEC)
    cfg = TrainConfig(channel=ChannelConfig(kind="clean"), epochs=1)
    with pytest.raises(TrainingError):
        train(codec, ChannelConfig(kind="clean"), [], cfg)


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_divergence_aborts_with_diagnostic():
    corpus = training_corpus(duration=8.0)
    codec = ReferenceCodec(DESK_SPEC)
    ch = ChannelConfig(kind="clean")
    cfg = TrainConfig(channel=ch, epochs=50, optimizer="sgd",
                      learning_rate=1e10, seed=0)
    with pytest.raises(TrainingError, match="diverged"):
        train(codec, ch, corpus, cfg)


# --- checkpoints -------------------------------------------------------------

def trained_pair():
    enc = build_network([8, 12, 8], ["relu", "none"], seed=10)
    dec = build_network([8, 12, 8], ["relu", "none"], seed=11)
    return enc, dec


def test_checkpoint_roundtrip(tmp_path):
    enc, dec = trained_pair()
    path = tmp_path / "pair.lsscnet"
    save_checkpoint(path, enc, dec)
    enc2, dec2 = load_checkpoint(path)
    for orig, back in zip(enc.layers + dec.layers, enc2.layers + dec2.layers):
        # storage is binary32, so compare against the quantized original
        np.testing.assert_array_equal(
            back.weights, orig.weights.astype("<f4").astype(np.float64))
        assert back.activation == orig.activation
    # a rewrite of the loaded pair is byte-identical
    assert checkpoint_bytes(enc2, dec2) == path.read_bytes()


def test_checkpoint_crc_guard(tmp_path):
    enc, dec = trained_pair()
    path = tmp_path / "pair.lsscnet"
    save_checkpoint(path, enc, dec)
    blob = bytearray(path.read_bytes())
    blob[len(blob) // 2] ^= 0xFF
    path.write_bytes(bytes(blob))
    with pytest.raises(CheckpointError, match="checksum"):
        load_checkpoint(path)


def test_checkpoint_truncation_guard(tmp_path):
    enc, dec = trained_pair()
    path = tmp_path / "pair.lsscnet"
    save_checkpoint(path, enc, dec)
    path.write_bytes(path.read_bytes()[:40])
    with pytest.raises(CheckpointError):
        load_checkpoint(path)


def test_checkpoint_magic_guard(tmp_path):
    path = tmp_path / "bad.lsscnet"
    path.write_bytes(b"NOTANET" + bytes(64))
    with pytest.raises(CheckpointError, match="magic"):
        load_checkpoint(path)


def test_checkpoint_version_guard(tmp_path):
    import zlib
    enc, dec = trained_pair()
    blob = bytearray(checkpoint_bytes(enc, dec))
    blob[7] = 99  # version byte sits right after the 7-byte magic
    blob[-4:] = zlib.crc32(bytes(blob[:-4])).to_bytes(4, "little")
    path = tmp_path / "v99.lsscnet"
    path.write_bytes(bytes(blob))
    with pytest.raises(CheckpointError, match="version"):
        load_checkpoint(path)

"""Trainable channel encoder/decoder with hand-rolled backpropagation.

Small dense networks map semantic feature vectors to channel symbols and
back. The training loop optimizes the pair end to end through the simulated
channel: noise and fading realizations are treated as constants per step
(they enter additively / multiplicatively, so this is exact), while the
symbol power normalization is differentiated through, since its scale
depends on the encoder output.

Per-segment chain (row-wise over a batch):

    f --enc--> x --normalize--> u --channel--> v --rescale--> z --dec--> f_hat

with loss mean((f - f_hat)^2). ``chain_forward``/``chain_backward`` expose
the exact forward and gradient so tests can verify against central finite
differences.
"""

from __future__ import annotations

import time
import zlib
from dataclasses import dataclass, field

import numpy as np

from .channelsim import H_FLOOR, ChannelConfig, draw_fading_gains
from .semcodec import ReferenceCodec, SemanticFeatures

CHECKPOINT_MAGIC = b"LSSCNET"
CHECKPOINT_VERSION = 1

ACTIVATIONS = ("none", "relu")


class NetworkError(ValueError):
    """Shape or configuration violation in the channel codec networks."""


class CheckpointError(ValueError):
    """Malformed or corrupt checkpoint file."""


class TrainingError(RuntimeError):
    """Training could not run or diverged."""


@dataclass
class Layer:
    weights: np.ndarray  # (out, in)
    bias: np.ndarray     # (out,)
    activation: str = "none"

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.bias = np.asarray(self.bias, dtype=np.float64)
        if self.weights.ndim != 2 or self.bias.ndim != 1:
            raise NetworkError("weights must be a matrix and bias a vector")
        if self.weights.shape[0] != self.bias.shape[0]:
            raise NetworkError("bias length must match the layer's output dim")
        if self.activation not in ACTIVATIONS:
            raise NetworkError(f"unknown activation {self.activation!r}")


class DenseNetwork:
    """Stack of affine layers with optional ReLU."""

    def __init__(self, layers: list[Layer]):
        if not layers:
            raise NetworkError("a network needs at least one layer")
        for prev, cur in zip(layers, layers[1:]):
            if cur.weights.shape[1] != prev.weights.shape[0]:
                raise NetworkError(
                    f"layer dims do not chain: {prev.weights.shape} -> "
                    f"{cur.weights.shape}"
                )
        self.layers = layers

    @property
    def input_dim(self) -> int:
        return self.layers[0].weights.shape[1]

    @property
    def output_dim(self) -> int:
        return self.layers[-1].weights.shape[0]

    def forward(self, x: np.ndarray) -> np.ndarray:
        """Plain forward pass; accepts a vector or a (batch, dim) matrix."""
        out, _ = self.forward_cached(np.atleast_2d(np.asarray(x, dtype=np.float64)))
        return out[0] if np.asarray(x).ndim == 1 else out

    def forward_cached(self, X: np.ndarray):
        """Batched forward keeping the per-layer tape needed for backward."""
        if X.ndim != 2 or X.shape[1] != self.input_dim:
            raise NetworkError(
                f"input of shape {X.shape} does not match input dim {self.input_dim}"
            )
        cache = []
        a = X
        for layer in self.layers:
            z = a @ layer.weights.T + layer.bias
            cache.append((a, z))
            a = np.maximum(z, 0.0) if layer.activation == "relu" else z
        return a, cache

    def backward(self, cache, d_out: np.ndarray):
        """Gradients from the tape: returns (d_input, [(dW, db) per layer])."""
        if len(cache) != len(self.layers):
            raise NetworkError("backward called with a stale or foreign tape")
        grads = [None] * len(self.layers)
        da = d_out
        for i in range(len(self.layers) - 1, -1, -1):
            layer = self.layers[i]
            a_prev, z = cache[i]
            dz = da * (z > 0) if layer.activation == "relu" else da
            grads[i] = (dz.T @ a_prev, dz.sum(axis=0))
            da = dz @ layer.weights
        return da, grads

    def copy(self) -> "DenseNetwork":
        return DenseNetwork(
            [Layer(l.weights.copy(), l.bias.copy(), l.activation) for l in self.layers]
        )


def build_network(dims: list[int], activations: list[str], seed: int) -> DenseNetwork:
    """Seeded init: He scaling ahead of ReLU, Xavier for linear layers."""
    if len(activations) != len(dims) - 1:
        raise NetworkError("need one activation per layer")
    rng = np.random.default_rng(seed)
    layers = []
    for i, act in enumerate(activations):
        fan_in, fan_out = dims[i], dims[i + 1]
        if act == "relu":
            std = np.sqrt(2.0 / fan_in)
        else:
            std = np.sqrt(2.0 / (fan_in + fan_out))
        w = rng.standard_normal((fan_out, fan_in)) * std
        layers.append(Layer(w, np.zeros(fan_out), act))
    return DenseNetwork(layers)


def identity_network(dim: int) -> DenseNetwork:
    """Single linear layer initialized to the exact identity map."""
    return DenseNetwork([Layer(np.eye(dim), np.zeros(dim), "none")])


def default_encoder(feature_dim: int, hidden: int, symbol_budget: int,
                    seed: int = 0) -> DenseNetwork:
    """Three linear layers, feature_dim -> 2 * symbol_budget."""
    dims = [feature_dim, hidden, hidden, 2 * symbol_budget]
    return build_network(dims, ["none", "none", "none"], seed)


def default_decoder(feature_dim: int, hidden: int, symbol_budget: int,
                    seed: int = 0) -> DenseNetwork:
    """Three layers, ReLU on the hidden ones. The output layer is linear:
    features take both signs, so a ReLU output could not represent them."""
    dims = [2 * symbol_budget, hidden, hidden, feature_dim]
    return build_network(dims, ["relu", "relu", "none"], seed)


def encode(features: SemanticFeatures, net: DenseNetwork) -> np.ndarray:
    """Map one feature vector to a real symbol-pair vector."""
    if len(features) != net.input_dim:
        raise NetworkError(
            f"feature length {len(features)} does not match encoder input "
            f"{net.input_dim}"
        )
    return net.forward(features.values)

def decode(y: np.ndarray, net: DenseNetwork, index: int = 0) -> SemanticFeatures:
    """Map one received real vector back to semantic features."""
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (net.input_dim,):
        raise NetworkError(
            f"received vector of shape {y.shape} does not match decoder input "
            f"{net.input_dim}"
        )
    return SemanticFeatures(values=net.forward(y), index=index)


def mse_loss(f, f_hat) -> float:
    """Mean squared error over equal-length feature vectors (or batches)."""
    a = np.asarray(getattr(f, "values", f), dtype=np.float64)
    b = np.asarray(getattr(f_hat, "values", f_hat), dtype=np.float64)
    if a.shape != b.shape:
        raise NetworkError(f"shape mismatch {a.shape} vs {b.shape}")
    d = a - b
    return float(np.mean(d * d))


# --- end-to-end training chain -------------------------------------------

@dataclass(frozen=True)
class ChannelRealization:
    """Frozen per-batch channel draw used by the differentiable chain."""

    h: np.ndarray            # (B,) complex block gains
    noise: np.ndarray        # (B, S) complex
    equalize_row: np.ndarray  # (B,) bool, rows divided by their gain

    @property
    def batch(self) -> int:
        return len(self.h)


def draw_channel_batch(
    cfg: ChannelConfig, batch: int, n_symbols: int, rng: np.random.Generator
) -> ChannelRealization:
    """One block gain per row and one noise draw per symbol."""
    if cfg.kind == "clean":
        return ChannelRealization(
            h=np.ones(batch, dtype=complex),
            noise=np.zeros((batch, n_symbols), dtype=complex),
            equalize_row=np.zeros(batch, dtype=bool),
        )
    if cfg.kind == "rayleigh":
        h = draw_fading_gains(rng, batch)
    else:
        h = np.ones(batch, dtype=complex)
    sigma2 = cfg.noise_variance()
    g = rng.standard_normal((batch, n_symbols, 2)) * np.sqrt(sigma2 / 2.0)
    noise = g[..., 0] + 1j * g[..., 1]
    eq = np.zeros(batch, dtype=bool)
    if cfg.kind == "rayleigh" and cfg.equalize:
        eq = np.abs(h) > H_FLOOR
    return ChannelRealization(h=h, noise=noise, equalize_row=eq)


def chain_forward(enc: DenseNetwork, dec: DenseNetwork, F: np.ndarray,
                  real: ChannelRealization):
    """Forward through encoder, normalization, channel, and decoder.

    Returns (F_hat, cache); the cache replays exactly in chain_backward.
    """
    if enc.output_dim % 2 != 0:
        raise NetworkError("encoder output dim must be even to pair symbols")
    if enc.output_dim != dec.input_dim:
        raise NetworkError("decoder input dim must match encoder output dim")
    X, enc_cache = enc.forward_cached(F)
    n_sym = X.shape[1] // 2

    energy = np.sum(X * X, axis=1)
    live = energy > 0
    c = np.where(live, np.sqrt(np.maximum(energy, 1e-300) / n_sym), 1.0)
    U = X / c[:, None]

    u = U[:, 0::2] + 1j * U[:, 1::2]
    v = real.h[:, None] * u + real.noise
    v = np.where(real.equalize_row[:, None], v / real.h[:, None], v)

    V = np.empty_like(U)
    V[:, 0::2] = v.real
    V[:, 1::2] = v.imag
    Z = V * c[:, None]

    F_hat, dec_cache = dec.forward_cached(Z)
    cache = (enc_cache, dec_cache, X, c, live, V, n_sym)
    return F_hat, cache


def chain_backward(enc: DenseNetwork, dec: DenseNetwork, cache,
                   d_fhat: np.ndarray, real: ChannelRealization):
    """Exact gradients of the chain w.r.t. both networks' parameters."""
    enc_cache, dec_cache, X, c, live, V, n_sym = cache

    dZ, dec_grads = dec.backward(dec_cache, d_fhat)

    # Z = c * V: split between the symbol path and the scale path.
    dV = dZ * c[:, None]
    dc = np.sum(dZ * V, axis=1)

    dv = dV[:, 0::2] + 1j * dV[:, 1::2]
    # Rows through a bare gain h need the adjoint conj(h); equalized rows and
    # unit-gain rows pass through unchanged (h/h = 1).
    h_eff = np.where(real.equalize_row, 1.0 + 0j, real.h)
    du = np.conj(h_eff)[:, None] * dv
    dU = np.empty_like(dV)
    dU[:, 0::2] = du.real
    dU[:, 1::2] = du.imag

    # U = X / c with c = sqrt(sum(X^2)/S): both paths contribute to dX.
    dc = dc - np.sum(dU * X, axis=1) / (c * c)
    dX = dU / c[:, None]
    dX = dX + np.where(live, dc / (n_sym * c), 0.0)[:, None] * X

    _, enc_grads = enc.backward(enc_cache, dX)
    return enc_grads, dec_grads


# --- optimizers ------------------------------------------------------------

class GradientDescent:
    """Plain SGD over a fixed list of parameter arrays."""

    def __init__(self, params: list[np.ndarray], learning_rate: float):
        self.params = params
        self.lr = learning_rate

    def step(self, grads: list[np.ndarray]) -> None:
        for p, g in zip(self.params, grads):
            p -= self.lr * g


class AdaptiveMoments:
    """Adam with the standard bias-corrected first and second moments."""

    def __init__(self, params: list[np.ndarray], learning_rate: float,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.params = params
        self.lr = learning_rate
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, grads: list[np.ndarray]) -> None:
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            m *= b1
            m += (1 - b1) * g
            v *= b2
            v += (1 - b2) * g * g
            m_hat = m / (1 - b1**self.t)
            v_hat = v / (1 - b2**self.t)
            p -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


OPTIMIZERS = {"sgd": GradientDescent, "adam": AdaptiveMoments}


def _flat_params(enc: DenseNetwork, dec: DenseNetwork) -> list[np.ndarray]:
    out = []
    for net in (enc, dec):
        for layer in net.layers:
            out.append(layer.weights)
            out.append(layer.bias)
    return out


def _flat_grads(enc_grads, dec_grads) -> list[np.ndarray]:
    out = []
    for grads in (enc_grads, dec_grads):
        for dw, db in grads:
            out.append(dw)
            out.append(db)
    return out


# --- training loop ----------------------------------------------------------

@dataclass(frozen=True)
class TrainConfig:
    channel: ChannelConfig = ChannelConfig(kind="awgn", snr_db=12.0)
    epochs: int = 50
    max_steps: int | None = None
    batch_size: int = 32
    learning_rate: float = 1e-3
    optimizer: str = "adam"
    hidden_dim: int = 128
    symbol_budget: int | None = None  # default: one complex symbol per feature
    snr_policy: str = "fixed"         # fixed | uniform
    snr_range: tuple[float, float] = (0.0, 18.0)
    val_fraction: float = 0.25
    patience: int = 20
    min_improvement: float = 1e-5
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 0 or self.batch_size < 1 or self.learning_rate <= 0:
            raise TrainingError("hyperparameters must be positive")
        if self.optimizer not in OPTIMIZERS:
            raise TrainingError(f"unknown optimizer {self.optimizer!r}")
        if self.snr_policy not in ("fixed", "uniform"):
            raise TrainingError(f"unknown snr policy {self.snr_policy!r}")


@dataclass
class TrainReport:
    epochs_run: int = 0
    steps_run: int = 0
    train_mse: list = field(default_factory=list)  # per epoch
    val_mse: list = field(default_factory=list)    # per epoch
    initial_val_mse: float = float("nan")
    final_val_mse: float = float("nan")
    converged: bool = False
    wall_time_seconds: float = 0.0
    params_checksum: int = 0


def network_checksum(enc: DenseNetwork, dec: DenseNetwork) -> int:
    """CRC-32 over the float32 parameter payload, as stored on disk."""
    crc = 0
    for net in (enc, dec):
        for layer in net.layers:
            crc = zlib.crc32(layer.weights.astype("<f4").tobytes(), crc)
            crc = zlib.crc32(layer.bias.astype("<f4").tobytes(), crc)
    return crc


def _segment_features(codec: ReferenceCodec, segments) -> np.ndarray:
    rows = [
        codec.extract_semantics(codec.compress(seg), index=seg.index).values
        for seg in segments
    ]
    return np.stack(rows)


def train(
    codec: ReferenceCodec,
    channel_cfg: ChannelConfig,
    corpus,
    cfg: TrainConfig,
    encoder: DenseNetwork | None = None,
    decoder: DenseNetwork | None = None,
):
    """Optimize the encoder/decoder pair over a frozen semantic codec.

    Each step recomputes the batch's semantic features from raw segments,
    runs the chain under a fresh channel draw, and updates both networks.
    Stops at the epoch/step budget or when validation MSE stops improving
    by ``min_improvement`` for ``patience`` consecutive epochs.
    """
    corpus = list(corpus)
    if not corpus:
        raise TrainingError("training corpus is empty")
    t_start = time.monotonic()

    ss = np.random.SeedSequence(cfg.seed)
    split_rng, shuffle_rng, channel_rng, val_rng = (
        np.random.default_rng(child) for child in ss.spawn(4)
    )

    feature_dim = codec.spec.feature_dim
    budget = cfg.symbol_budget if cfg.symbol_budget is not None else feature_dim
    if encoder is None:
        encoder = default_encoder(feature_dim, cfg.hidden_dim, budget, seed=cfg.seed)
    if decoder is None:
        decoder = default_decoder(feature_dim, cfg.hidden_dim, budget,
                                  seed=cfg.seed + 1)

    n_sym = encoder.output_dim // 2
    order = split_rng.permutation(len(corpus))
    n_val = max(1, int(round(cfg.val_fraction * len(corpus))))
    if len(corpus) < 4:
        train_idx, val_idx = order, order
    else:
        val_idx, train_idx = order[:n_val], order[n_val:]
    F_val = _segment_features(codec, [corpus[i] for i in val_idx])
    val_real = draw_channel_batch(channel_cfg, len(F_val), n_sym, val_rng)

    def val_mse() -> float:
        F_hat, _ = chain_forward(encoder, decoder, F_val, val_real)
        return mse_loss(F_val, F_hat)

    report = TrainReport(initial_val_mse=val_mse())
    params = _flat_params(encoder, decoder)
    optimizer = OPTIMIZERS[cfg.optimizer](params, cfg.learning_rate)

    best_val = report.initial_val_mse
    stall = 0
    done = False
    for _epoch in range(cfg.epochs):
        idx = shuffle_rng.permutation(train_idx)
        epoch_losses = []
        for lo in range(0, len(idx), cfg.batch_size):
            batch = [corpus[i] for i in idx[lo : lo + cfg.batch_size]]
            F = _segment_features(codec, batch)
            step_cfg = channel_cfg
            if cfg.snr_policy == "uniform" and channel_cfg.kind != "clean":
                snr = float(channel_rng.uniform(*cfg.snr_range))
                step_cfg = ChannelConfig(
                    kind=channel_cfg.kind, snr_db=snr, equalize=channel_cfg.equalize
                )
            real = draw_channel_batch(step_cfg, len(F), n_sym, channel_rng)
            F_hat, cache = chain_forward(encoder, decoder, F, real)
            loss = mse_loss(F, F_hat)
            if not np.isfinite(loss):
                raise TrainingError(
                    f"training diverged at step {report.steps_run}: loss {loss}"
                )
            d_fhat = 2.0 * (F_hat - F) / F.size
            enc_grads, dec_grads = chain_backward(encoder, decoder, cache,
                                                  d_fhat, real)
            optimizer.step(_flat_grads(enc_grads, dec_grads))
            epoch_losses.append(loss)
            report.steps_run += 1
            if cfg.max_steps is not None and report.steps_run >= cfg.max_steps:
                done = True
                break
        if epoch_losses:
            report.train_mse.append(float(np.mean(epoch_losses)))
            report.val_mse.append(val_mse())
            report.epochs_run += 1
            if best_val - report.val_mse[-1] < cfg.min_improvement:
                stall += 1
                if stall >= cfg.patience:
                    report.converged = True
                    done = True
            else:
                stall = 0
            best_val = min(best_val, report.val_mse[-1])
        if done:
            break

    report.final_val_mse = report.val_mse[-1] if report.val_mse else report.initial_val_mse
    report.wall_time_seconds = time.monotonic() - t_start
    report.params_checksum = network_checksum(encoder, decoder)
    return encoder, decoder, report


# --- checkpoint format ------------------------------------------------------

_ACT_CODE = {"none": 0, "relu": 1}
_ACT_NAME = {v: k for k, v in _ACT_CODE.items()}


def checkpoint_bytes(enc: DenseNetwork, dec: DenseNetwork) -> bytes:
    """Serialize both networks; see README for the byte layout."""
    out = bytearray()
    out += CHECKPOINT_MAGIC
    out.append(CHECKPOINT_VERSION)
    nets = (enc, dec)
    out.append(len(nets))
    for net in nets:
        out.append(len(net.layers))
        for layer in net.layers:
            rows, cols = layer.weights.shape
            out += int(cols).to_bytes(4, "little")
            out += int(rows).to_bytes(4, "little")
            out.append(_ACT_CODE[layer.activation])
    for net in nets:
        for layer in net.layers:
            out += layer.weights.astype("<f4").tobytes()
            out += layer.bias.astype("<f4").tobytes()
    out += zlib.crc32(bytes(out)).to_bytes(4, "little")
    return bytes(out)


def save_checkpoint(path, enc: DenseNetwork, dec: DenseNetwork) -> None:
    with open(path, "wb") as fh:
        fh.write(checkpoint_bytes(enc, dec))


def load_checkpoint(path):
    """Read a checkpoint back into (encoder, decoder)."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < len(CHECKPOINT_MAGIC) + 2 + 4:
        raise CheckpointError("checkpoint too short")
    if blob[: len(CHECKPOINT_MAGIC)] != CHECKPOINT_MAGIC:
        raise CheckpointError("bad checkpoint magic")
    stored_crc = int.from_bytes(blob[-4:], "little")
    if zlib.crc32(blob[:-4]) != stored_crc:
        raise CheckpointError("checkpoint checksum mismatch")
    pos = len(CHECKPOINT_MAGIC)
    version = blob[pos]
    pos += 1
    if version != CHECKPOINT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    n_nets = blob[pos]
    pos += 1
    shapes = []
    for _ in range(n_nets):
        n_layers = blob[pos]
        pos += 1
        net_shapes = []
        for _ in range(n_layers):
            cols = int.from_bytes(blob[pos : pos + 4], "little")
            rows = int.from_bytes(blob[pos + 4 : pos + 8], "little")
            act = blob[pos + 8]
            pos += 9
            if act not in _ACT_NAME:
                raise CheckpointError(f"unknown activation code {act}")
            net_shapes.append((rows, cols, _ACT_NAME[act]))
        shapes.append(net_shapes)
    nets = []
    for net_shapes in shapes:
        layers = []
        for rows, cols, act in net_shapes:
            w_bytes = rows * cols * 4
            w = np.frombuffer(blob[pos : pos + w_bytes], dtype="<f4")
            if w.size != rows * cols:
                raise CheckpointError("truncated weight payload")
            pos += w_bytes
            b = np.frombuffer(blob[pos : pos + rows * 4], dtype="<f4")
            if b.size != rows:
                raise CheckpointError("truncated bias payload")
            pos += rows * 4
            layers.append(
                Layer(w.astype(np.float64).reshape(rows, cols),
                      b.astype(np.float64), act)
            )
        nets.append(DenseNetwork(layers))
    if pos != len(blob) - 4:
        raise CheckpointError("trailing bytes after parameter payload")
    if len(nets) != 2:
        raise CheckpointError(f"expected encoder+decoder, found {len(nets)} networks")
    return nets[0], nets[1]

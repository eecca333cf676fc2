"""Simulated wireless hop: symbol mapping, AWGN, and block Rayleigh fading.

Real vectors are paired into complex symbols and normalized to unit mean
power, so a target SNR of ``s`` dB maps exactly to a total noise variance of
``10**(-s/10)`` per symbol. Fading draws one complex gain per call (block
fading, one segment per call); equalization divides by the known gain unless
it is too deep to invert, in which case the call is flagged as a fade event
and the symbols pass through unequalized.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

H_FLOOR = 1e-3  # gains at or below this are not inverted

CHANNEL_KINDS = ("clean", "awgn", "rayleigh")


class ChannelError(ValueError):
    """Invalid channel configuration or symbol input."""


@dataclass(frozen=True)
class ChannelConfig:
    kind: str = "awgn"
    snr_db: float = 12.0
    equalize: bool = True
    seed: int | None = None

    def __post_init__(self):
        if self.kind not in CHANNEL_KINDS:
            raise ChannelError(f"unknown channel kind {self.kind!r}")
        if not np.isfinite(self.snr_db):
            raise ChannelError("snr_db must be finite")

    def noise_variance(self) -> float:
        """Total complex noise variance per unit-power symbol."""
        return 10.0 ** (-self.snr_db / 10.0)


@dataclass(frozen=True)
class ComplexSymbols:
    re: np.ndarray
    im: np.ndarray
    power_scale: float  # multiplier restoring the original amplitude on demap
    pad_flag: bool = False

    def __post_init__(self):
        re = np.asarray(self.re, dtype=np.float64)
        im = np.asarray(self.im, dtype=np.float64)
        if re.shape != im.shape or re.ndim != 1:
            raise ChannelError("re/im must be equal-length vectors")
        object.__setattr__(self, "re", re)
        object.__setattr__(self, "im", im)

    def __len__(self) -> int:
        return len(self.re)

    def mean_power(self) -> float:
        if len(self) == 0:
            return 0.0
        return float(np.mean(self.re**2 + self.im**2))


@dataclass(frozen=True)
class ChannelDraw:
    """One realized channel use: gain, noise level, and fade bookkeeping."""

    kind: str
    snr_db: float
    h: complex
    noise_variance: float
    fade_event: bool = False
    equalized: bool = False


def map_to_symbols(x: np.ndarray) -> ComplexSymbols:
    """Pair consecutive reals into complex symbols at unit mean power.

    Odd-length inputs are zero-padded (recorded in ``pad_flag``); an all-zero
    input passes through with power_scale 1 so demap stays exact.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.size == 0:
        raise ChannelError("input must be a non-empty vector")
    pad = x.size % 2 == 1
    if pad:
        x = np.concatenate([x, [0.0]])
    n_sym = x.size // 2
    energy = float(np.dot(x, x))
    scale = np.sqrt(energy / n_sym) if energy > 0 else 1.0
    u = x / scale
    return ComplexSymbols(re=u[0::2], im=u[1::2], power_scale=scale, pad_flag=pad)


def demap(s: ComplexSymbols) -> np.ndarray:
    """Interleave, rescale, and drop the pad: exact inverse of map_to_symbols."""
    x = np.empty(2 * len(s))
    x[0::2] = s.re
    x[1::2] = s.im
    x *= s.power_scale
    return x[:-1] if s.pad_flag else x


def draw_fading_gains(rng: np.random.Generator, n: int = 1) -> np.ndarray:
    """Unit-mean-power complex Gaussian gains (E|h|^2 = 1)."""
    g = rng.standard_normal((n, 2))
    return (g[:, 0] + 1j * g[:, 1]) / np.sqrt(2.0)


def transmit(
    s: ComplexSymbols,
    cfg: ChannelConfig,
    rng: np.random.Generator | None = None,
) -> tuple[ComplexSymbols, ChannelDraw]:
    """Apply one channel use to a block of symbols.

    clean passes symbols through untouched; awgn adds complex Gaussian noise
    at the configured SNR; rayleigh additionally scales by one block-fading
    gain and (by default) equalizes it back out. Identical cfg + seed give
    identical draws.
    """
    if rng is None:
        rng = np.random.default_rng(cfg.seed)

    if cfg.kind == "clean":
        draw = ChannelDraw(cfg.kind, cfg.snr_db, 1 + 0j, 0.0)
        return s, draw

    sig = s.re + 1j * s.im
    if cfg.kind == "rayleigh":
        h = complex(draw_fading_gains(rng, 1)[0])
    else:
        h = 1 + 0j

    sigma2 = cfg.noise_variance()
    g = rng.standard_normal((len(sig), 2)) * np.sqrt(sigma2 / 2.0)
    y = h * sig + (g[:, 0] + 1j * g[:, 1])

    fade = abs(h) <= H_FLOOR
    equalized = False
    if cfg.kind == "rayleigh" and cfg.equalize and not fade:
        y = y / h
        equalized = True

    out = ComplexSymbols(
        re=y.real, im=y.imag, power_scale=s.power_scale, pad_flag=s.pad_flag
    )
    draw = ChannelDraw(cfg.kind, cfg.snr_db, h, sigma2,
                       fade_event=fade, equalized=equalized)
    return out, draw

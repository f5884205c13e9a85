"""Log-mel spectrogram front-end.

A 2-second segment at 16 kHz becomes a 200x128 matrix: 25 ms Hamming
windows every 10 ms, 512-point FFT, 128 triangular mel filters, natural
log with a floor, then global mean/std normalization. Framing is centered
(reflect padding of half a window on each side) and produces exactly
ceil(len/hop) frames, so the output shape never depends on content.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .audio import Segment
from .errors import ArgumentError, ConfigError

MEL_SCALE = 2595.0
MEL_BREAK_HZ = 700.0


@dataclass(frozen=True)
class SpectrogramConfig:
    n_fft: int = 512
    hop_samples: int = 160
    window_samples: int = 400
    n_mels: int = 128
    fmin_hz: float = 0.0
    fmax_hz: float = 8000.0
    sample_rate_hz: int = 16000
    log_floor: float = 1e-10
    norm_mean: float = 0.0
    norm_std: float = 1.0

    def __post_init__(self):
        if not (self.hop_samples <= self.window_samples <= self.n_fft):
            raise ConfigError("need hop_samples <= window_samples <= n_fft")
        if self.n_mels < 1:
            raise ConfigError("n_mels must be >= 1")
        if self.norm_std <= 0:
            raise ConfigError("norm_std must be positive")
        if not (self.fmin_hz < self.fmax_hz <= self.sample_rate_hz / 2):
            raise ConfigError("need fmin < fmax <= sample_rate/2")


@dataclass
class MelSpectrogram:
    """Normalized log-mel energies, time frames by mel bins."""

    values: np.ndarray  # (T, n_mels)
    frame_hop_s: float = 0.010
    window_s: float = 0.025


def hz_to_mel(f):
    """HTK mel scale: mel(f) = 2595 * log10(1 + f/700)."""
    return MEL_SCALE * np.log10(1.0 + np.asarray(f, dtype=np.float64) / MEL_BREAK_HZ)


def mel_to_hz(m):
    return MEL_BREAK_HZ * (10.0 ** (np.asarray(m, dtype=np.float64) / MEL_SCALE) - 1.0)


def _frames(samples: np.ndarray, cfg: SpectrogramConfig) -> np.ndarray:
    """Centered frames via reflect padding; exactly ceil(len/hop) of them."""
    n = len(samples)
    if n < 2:
        raise ArgumentError("need at least 2 samples to reflect-pad")
    half = cfg.window_samples // 2
    n_frames = -(-n // cfg.hop_samples)  # ceil
    padded = np.pad(samples.astype(np.float64), half, mode="reflect")
    starts = np.arange(n_frames) * cfg.hop_samples
    idx = starts[:, None] + np.arange(cfg.window_samples)[None, :]
    return padded[idx]


def stft_power(samples: np.ndarray, cfg: SpectrogramConfig) -> np.ndarray:
    """Power spectrogram |rfft(hamming * frame)|^2, shape (T, n_fft/2 + 1)."""
    frames = _frames(np.asarray(samples), cfg)
    window = np.hamming(cfg.window_samples)
    spectrum = np.fft.rfft(frames * window, n=cfg.n_fft, axis=1)
    return (spectrum.real**2 + spectrum.imag**2).astype(np.float64)


def mel_filterbank(cfg: SpectrogramConfig) -> np.ndarray:
    """Triangular HTK-mel filters sampled on FFT bins, shape (n_mels, bins).

    Filter edges are equally spaced in mel and snapped to the nearest FFT
    bin; each filter peaks with weight 1 at its center bin, which keeps
    every row nonzero even where mel spacing is finer than bin spacing.
    A filter whose snapped left and right edges coincide has no usable
    width at this FFT resolution and is a configuration error.
    """
    n_bins = cfg.n_fft // 2 + 1
    edges_mel = np.linspace(hz_to_mel(cfg.fmin_hz), hz_to_mel(cfg.fmax_hz), cfg.n_mels + 2)
    edges_hz = mel_to_hz(edges_mel)
    edge_bins = np.rint(edges_hz * cfg.n_fft / cfg.sample_rate_hz).astype(np.int64)

    weights = np.zeros((cfg.n_mels, n_bins), dtype=np.float64)
    for m in range(1, cfg.n_mels + 1):
        left, center, right = edge_bins[m - 1], edge_bins[m], edge_bins[m + 1]
        if left == right:
            raise ConfigError(
                f"mel filter {m - 1} has zero width at n_fft={cfg.n_fft}; "
                "reduce n_mels or raise n_fft"
            )
        for k in range(left, center):
            weights[m - 1, k] = (k - left) / (center - left)
        weights[m - 1, center] = 1.0
        for k in range(center + 1, right + 1):
            weights[m - 1, k] = (right - k) / (right - center)
    return weights


def log_mel(
    seg: Segment, cfg: SpectrogramConfig, filterbank: np.ndarray | None = None
) -> MelSpectrogram:
    """Normalized log-mel spectrogram of one segment.

    values = (ln(max(filterbank . power, log_floor)) - norm_mean) / norm_std
    """
    if filterbank is None:
        filterbank = mel_filterbank(cfg)
    power = stft_power(seg.clip.samples, cfg)
    mel_power = power @ filterbank.T
    values = (np.log(np.maximum(mel_power, cfg.log_floor)) - cfg.norm_mean) / cfg.norm_std
    return MelSpectrogram(
        values=values,
        frame_hop_s=cfg.hop_samples / cfg.sample_rate_hz,
        window_s=cfg.window_samples / cfg.sample_rate_hz,
    )


def compute_norm_stats(
    segments: list[Segment], cfg: SpectrogramConfig
) -> tuple[float, float]:
    """Global mean/std of unnormalized log-mel entries over the given segments.

    Used once per training run; the resulting pair is stored with the model
    so inference applies the same normalization.
    """
    if not segments:
        raise ArgumentError("need at least one segment for normalization stats")
    raw_cfg = replace(cfg, norm_mean=0.0, norm_std=1.0)
    filterbank = mel_filterbank(raw_cfg)
    total = 0.0
    total_sq = 0.0
    count = 0
    for seg in segments:
        values = log_mel(seg, raw_cfg, filterbank).values
        total += float(values.sum())
        total_sq += float((values * values).sum())
        count += values.size
    mean = total / count
    var = max(total_sq / count - mean * mean, 0.0)
    std = float(np.sqrt(var))
    if std <= 0:
        std = 1.0
    # stats are persisted as float32; quantize now so a model predicts
    # identically before and after a save/load round trip
    return float(np.float32(mean)), float(np.float32(std))

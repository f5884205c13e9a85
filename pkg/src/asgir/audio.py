"""WAV decoding, resampling and fixed-length segmentation.

All downstream stages assume mono float samples in [-1, 1] at the canonical
16 kHz rate; recordings are tiled into non-overlapping 2-second segments and
any trailing remainder is dropped.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError, UnsupportedCodecError, WavFormatError

CANONICAL_RATE_HZ = 16000
SEGMENT_SECONDS = 2.0

# windowed-sinc resampler kernel: 64 taps, Kaiser window
_KAISER_BETA = 8.6
_HALF_TAPS = 32


@dataclass
class AudioClip:
    """Mono PCM samples plus their rate and originating recording id."""

    samples: np.ndarray
    sample_rate_hz: int
    source_id: str = ""

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.sample_rate_hz


@dataclass
class Segment:
    """A fixed-length slice of a recording, optionally labelled."""

    clip: AudioClip
    parent_id: str
    offset_s: float
    label: int | None = None


def decode_wav(data: bytes) -> AudioClip:
    """Decode a RIFF/WAVE byte string into a mono [-1, 1] clip.

    Supports 16-bit PCM and 32-bit IEEE float, 1 or 2 channels, any rate.
    Stereo is averaged to mono; integer samples are scaled by 1/32768.
    The sample rate is preserved; resampling is a separate step.
    """
    if len(data) < 12:
        raise WavFormatError("file too short for a RIFF header")
    if data[0:4] != b"RIFF":
        raise WavFormatError(f"bad RIFF magic {data[0:4]!r}")
    if data[8:12] != b"WAVE":
        raise WavFormatError(f"bad WAVE tag {data[8:12]!r}")

    fmt = None
    payload = None
    pos = 12
    while pos + 8 <= len(data):
        chunk_id = data[pos : pos + 4]
        (chunk_size,) = struct.unpack_from("<I", data, pos + 4)
        body = data[pos + 8 : pos + 8 + chunk_size]
        if chunk_id == b"fmt ":
            if len(body) < 16:
                raise WavFormatError("fmt chunk shorter than 16 bytes")
            fmt = struct.unpack_from("<HHIIHH", body, 0)
        elif chunk_id == b"data":
            if len(body) < chunk_size:
                raise WavFormatError("data chunk truncated")
            payload = body
        pos += 8 + chunk_size + (chunk_size & 1)  # chunks are word-aligned

    if fmt is None:
        raise WavFormatError("missing fmt chunk")
    if payload is None:
        raise WavFormatError("missing data chunk")

    audio_format, n_channels, rate, _byte_rate, _block_align, bits = fmt
    if n_channels not in (1, 2):
        raise UnsupportedCodecError(f"{n_channels} channels (want 1 or 2)")
    if rate <= 0:
        raise WavFormatError(f"invalid sample rate {rate}")

    if audio_format == 1 and bits == 16:
        raw = np.frombuffer(payload[: len(payload) // 2 * 2], dtype="<i2")
        samples = raw.astype(np.float64) / 32768.0
    elif audio_format == 3 and bits == 32:
        raw = np.frombuffer(payload[: len(payload) // 4 * 4], dtype="<f4")
        samples = raw.astype(np.float64)
    else:
        raise UnsupportedCodecError(
            f"format code {audio_format} at {bits} bits (want PCM16 or float32)"
        )

    if n_channels == 2:
        samples = samples[: len(samples) // 2 * 2].reshape(-1, 2).mean(axis=1)

    # float inputs may carry NaN/Inf or out-of-range values; the clip
    # invariant is finite samples in [-1, 1]
    samples = np.nan_to_num(samples, nan=0.0, posinf=1.0, neginf=-1.0)
    samples = np.clip(samples, -1.0, 1.0)
    return AudioClip(samples=samples, sample_rate_hz=int(rate))


def encode_wav(clip: AudioClip) -> bytes:
    """Write a clip as canonical 44-byte-header 16-bit PCM mono WAV."""
    ints = np.clip(np.rint(clip.samples * 32768.0), -32768, 32767).astype("<i2")
    payload = ints.tobytes()
    header = struct.pack(
        "<4sI4s4sIHHIIHH4sI",
        b"RIFF",
        36 + len(payload),
        b"WAVE",
        b"fmt ",
        16,
        1,  # PCM
        1,  # mono
        clip.sample_rate_hz,
        clip.sample_rate_hz * 2,
        2,
        16,
        b"data",
        len(payload),
    )
    return header + payload


def _sinc_kernel(offsets: np.ndarray, cutoff: float) -> np.ndarray:
    """Kaiser-windowed sinc evaluated at fractional sample offsets."""
    u = offsets / _HALF_TAPS
    window = np.where(
        np.abs(u) <= 1.0,
        np.i0(_KAISER_BETA * np.sqrt(np.maximum(0.0, 1.0 - u * u))) / np.i0(_KAISER_BETA),
        0.0,
    )
    return cutoff * np.sinc(cutoff * offsets) * window


def resample(clip: AudioClip, target_hz: int) -> AudioClip:
    """Rate-convert with a 64-tap Kaiser-windowed sinc interpolator.

    The output length is round(n * target / source), so duration is
    preserved to within one sample period; identical rates return the
    input unchanged.
    """
    if target_hz <= 0:
        raise ArgumentError("target_hz must be positive")
    if len(clip.samples) == 0:
        raise ArgumentError("cannot resample an empty clip")
    if target_hz == clip.sample_rate_hz:
        return clip

    src = clip.samples.astype(np.float64)
    ratio = clip.sample_rate_hz / target_hz  # input samples per output sample
    n_out = int(round(len(src) * target_hz / clip.sample_rate_hz))
    cutoff = min(1.0, 1.0 / ratio)  # anti-alias when downsampling

    out = np.empty(n_out, dtype=np.float64)
    taps = np.arange(-_HALF_TAPS + 1, _HALF_TAPS + 1)
    block = 65536
    for start in range(0, n_out, block):
        t = np.arange(start, min(start + block, n_out)) * ratio
        base = np.floor(t).astype(np.int64)
        idx = base[:, None] + taps[None, :]
        offsets = t[:, None] - idx
        weights = _sinc_kernel(offsets, cutoff)
        valid = (idx >= 0) & (idx < len(src))
        gathered = np.where(valid, src[np.clip(idx, 0, len(src) - 1)], 0.0)
        out[start : start + len(t)] = np.sum(gathered * weights, axis=1)

    out = np.clip(out, -1.0, 1.0)
    return AudioClip(samples=out, sample_rate_hz=target_hz, source_id=clip.source_id)


def segment(clip: AudioClip, seconds: float = SEGMENT_SECONDS) -> list[Segment]:
    """Tile the clip prefix into non-overlapping fixed-length segments.

    Yields floor(duration/seconds) segments; the trailing remainder is
    discarded. An empty or too-short clip gives an empty list.
    """
    seg_len = int(round(seconds * clip.sample_rate_hz))
    if seg_len <= 0:
        raise ArgumentError("segment length must be positive")
    count = len(clip.samples) // seg_len
    segments = []
    for i in range(count):
        chunk = clip.samples[i * seg_len : (i + 1) * seg_len]
        segments.append(
            Segment(
                clip=AudioClip(
                    samples=chunk,
                    sample_rate_hz=clip.sample_rate_hz,
                    source_id=clip.source_id,
                ),
                parent_id=clip.source_id,
                offset_s=i * seconds,
            )
        )
    return segments

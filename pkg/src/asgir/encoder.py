"""Patch-embedding transformer encoder over log-mel spectrograms.

The spectrogram is cut into overlapping 16x16 patches (stride 10 along both
mel and time), each patch linearly projected to a token, a class token
prepended, positional embeddings added, and a stack of pre-norm transformer
blocks applied. The pooled final representation is the segment embedding.

Inference only: weights are loaded from an ASGW file or randomly
initialized from a seed. All arithmetic is float64 for reproducibility;
stored tensors are float32.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np
from scipy.special import erf

from .errors import (
    ConfigError,
    ShapeError,
    ShapeInconsistencyError,
    TruncatedFileError,
)
from .serialize import open_container, read_tensor_table, write_container
from .spectrogram import MelSpectrogram

ASGW_MAGIC = b"ASGW"
_POOLINGS = ("cls_token", "mean")
_LN_EPS = 1e-5


@dataclass(frozen=True)
class EncoderConfig:
    patch_h: int = 16  # mel bins per patch
    patch_w: int = 16  # time frames per patch
    stride_h: int = 10
    stride_w: int = 10
    embed_dim: int = 192
    n_layers: int = 3
    n_heads: int = 3
    mlp_ratio: int = 4
    pooling: str = "mean"

    def __post_init__(self):
        if self.embed_dim % self.n_heads != 0:
            raise ConfigError("embed_dim must be divisible by n_heads")
        if self.pooling not in _POOLINGS:
            raise ConfigError(f"pooling must be one of {_POOLINGS}")
        if min(self.patch_h, self.patch_w, self.stride_h, self.stride_w) < 1:
            raise ConfigError("patch and stride dims must be positive")

    @property
    def patch_len(self) -> int:
        return self.patch_h * self.patch_w


@dataclass
class EncoderWeights:
    """Named tensors; see expected_tensor_shapes for the full set."""

    tensors: dict[str, np.ndarray]


@dataclass
class Embedding:
    vector: np.ndarray
    segment_ref: str = ""


def patch_grid(cfg: EncoderConfig, n_frames: int, n_mels: int) -> tuple[int, int]:
    """(mel positions, time positions) of the patch grid on a TxF input."""
    if n_mels < cfg.patch_h or n_frames < cfg.patch_w:
        raise ShapeError(
            f"spectrogram {n_frames}x{n_mels} smaller than one "
            f"{cfg.patch_h}x{cfg.patch_w} patch"
        )
    n_h = (n_mels - cfg.patch_h) // cfg.stride_h + 1
    n_w = (n_frames - cfg.patch_w) // cfg.stride_w + 1
    return n_h, n_w


def n_patches(cfg: EncoderConfig, n_frames: int, n_mels: int) -> int:
    n_h, n_w = patch_grid(cfg, n_frames, n_mels)
    return n_h * n_w


def patchify(spec: MelSpectrogram, cfg: EncoderConfig) -> np.ndarray:
    """Flattened patches in frequency-major order, shape (P, patch_len).

    The spectrogram is treated as an image with mel bins as rows and time
    frames as columns; patches are enumerated mel-position first, each
    flattened row-major (mel rows, then time columns).
    """
    image = np.asarray(spec.values).T  # (n_mels, n_frames)
    n_h, n_w = patch_grid(cfg, image.shape[1], image.shape[0])
    windows = np.lib.stride_tricks.sliding_window_view(image, (cfg.patch_h, cfg.patch_w))
    strided = windows[:: cfg.stride_h, :: cfg.stride_w]  # (n_h, n_w, ph, pw)
    return strided.reshape(n_h * n_w, cfg.patch_len)


def expected_tensor_shapes(cfg: EncoderConfig, token_count: int) -> dict[str, tuple]:
    """Full tensor name -> shape map for a model with token_count = P + 1."""
    d = cfg.embed_dim
    hidden = cfg.mlp_ratio * d
    shapes = {
        "patch_proj.weight": (cfg.patch_len, d),
        "patch_proj.bias": (d,),
        "cls_token": (d,),
        "pos_embed": (token_count, d),
        "final_ln.scale": (d,),
        "final_ln.offset": (d,),
    }
    for i in range(cfg.n_layers):
        p = f"layers.{i}."
        shapes.update(
            {
                p + "ln1.scale": (d,),
                p + "ln1.offset": (d,),
                p + "attn.q.weight": (d, d),
                p + "attn.q.bias": (d,),
                p + "attn.k.weight": (d, d),
                p + "attn.k.bias": (d,),
                p + "attn.v.weight": (d, d),
                p + "attn.v.bias": (d,),
                p + "attn.out.weight": (d, d),
                p + "attn.out.bias": (d,),
                p + "ln2.scale": (d,),
                p + "ln2.offset": (d,),
                p + "mlp.fc1.weight": (d, hidden),
                p + "mlp.fc1.bias": (hidden,),
                p + "mlp.fc2.weight": (hidden, d),
                p + "mlp.fc2.bias": (d,),
            }
        )
    return shapes


def validate_weights(cfg: EncoderConfig, weights: EncoderWeights) -> None:
    token_count = weights.tensors["pos_embed"].shape[0] if "pos_embed" in weights.tensors else 0
    expected = expected_tensor_shapes(cfg, token_count)
    for name, shape in expected.items():
        if name not in weights.tensors:
            raise ShapeInconsistencyError(f"missing tensor {name}")
        got = weights.tensors[name].shape
        if tuple(got) != shape:
            raise ShapeInconsistencyError(f"tensor {name} has shape {got}, expected {shape}")
    for name in weights.tensors:
        if name not in expected:
            raise ShapeInconsistencyError(f"unexpected tensor {name}")


def random_weights(cfg: EncoderConfig, patch_count: int, seed: int = 0) -> EncoderWeights:
    """Seeded Gaussian init (std 0.02); layer norms at scale 1, offset 0."""
    rng = np.random.default_rng(seed)
    tensors = {}
    for name, shape in expected_tensor_shapes(cfg, patch_count + 1).items():
        if name.endswith("ln.scale") or ".ln1.scale" in name or ".ln2.scale" in name:
            tensors[name] = np.ones(shape, dtype=np.float32)
        elif name.endswith("offset") or name.endswith("bias"):
            tensors[name] = np.zeros(shape, dtype=np.float32)
        else:
            tensors[name] = rng.normal(0.0, 0.02, size=shape).astype(np.float32)
    return EncoderWeights(tensors=tensors)


def _layer_norm(x: np.ndarray, scale: np.ndarray, offset: np.ndarray) -> np.ndarray:
    mean = x.mean(axis=-1, keepdims=True)
    var = x.var(axis=-1, keepdims=True)
    return (x - mean) / np.sqrt(var + _LN_EPS) * scale + offset


def _softmax(x: np.ndarray) -> np.ndarray:
    shifted = x - x.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def _gelu(x: np.ndarray) -> np.ndarray:
    return 0.5 * x * (1.0 + erf(x / np.sqrt(2.0)))


def _forward(
    batch: np.ndarray,
    weights: EncoderWeights,
    cfg: EncoderConfig,
    attention_sink: list | None = None,
) -> np.ndarray:
    """Run the token stack on (B, P, patch_len) patches; returns (B, D)."""
    w = {k: v.astype(np.float64) for k, v in weights.tensors.items()}
    b, p, _ = batch.shape
    d = cfg.embed_dim
    dh = d // cfg.n_heads

    tokens = batch @ w["patch_proj.weight"] + w["patch_proj.bias"]
    cls = np.broadcast_to(w["cls_token"], (b, 1, d))
    x = np.concatenate([cls, tokens], axis=1)  # (B, P+1, D)
    if x.shape[1] != w["pos_embed"].shape[0]:
        raise ShapeInconsistencyError(
            f"tensor pos_embed has {w['pos_embed'].shape[0]} positions, "
            f"input needs {x.shape[1]}"
        )
    x = x + w["pos_embed"]
    t = x.shape[1]

    for i in range(cfg.n_layers):
        pre = f"layers.{i}."
        y = _layer_norm(x, w[pre + "ln1.scale"], w[pre + "ln1.offset"])
        q = y @ w[pre + "attn.q.weight"] + w[pre + "attn.q.bias"]
        k = y @ w[pre + "attn.k.weight"] + w[pre + "attn.k.bias"]
        v = y @ w[pre + "attn.v.weight"] + w[pre + "attn.v.bias"]
        # (B, H, T, dh)
        q = q.reshape(b, t, cfg.n_heads, dh).transpose(0, 2, 1, 3)
        k = k.reshape(b, t, cfg.n_heads, dh).transpose(0, 2, 1, 3)
        v = v.reshape(b, t, cfg.n_heads, dh).transpose(0, 2, 1, 3)
        scores = _softmax(q @ k.transpose(0, 1, 3, 2) / np.sqrt(dh))
        if attention_sink is not None:
            attention_sink.append(scores.copy())
        context = (scores @ v).transpose(0, 2, 1, 3).reshape(b, t, d)
        x = x + context @ w[pre + "attn.out.weight"] + w[pre + "attn.out.bias"]

        y = _layer_norm(x, w[pre + "ln2.scale"], w[pre + "ln2.offset"])
        hidden = _gelu(y @ w[pre + "mlp.fc1.weight"] + w[pre + "mlp.fc1.bias"])
        x = x + hidden @ w[pre + "mlp.fc2.weight"] + w[pre + "mlp.fc2.bias"]

    x = _layer_norm(x, w["final_ln.scale"], w["final_ln.offset"])
    if cfg.pooling == "cls_token":
        return x[:, 0, :]
    return x[:, 1:, :].mean(axis=1)


def encode(
    spec: MelSpectrogram,
    weights: EncoderWeights,
    cfg: EncoderConfig,
    segment_ref: str = "",
) -> Embedding:
    patches = patchify(spec, cfg)
    vec = _forward(patches[None, :, :], weights, cfg)[0]
    return Embedding(vector=vec, segment_ref=segment_ref)


def encode_with_attention(
    spec: MelSpectrogram, weights: EncoderWeights, cfg: EncoderConfig
) -> tuple[Embedding, list[np.ndarray]]:
    """encode plus per-layer attention maps of shape (n_heads, T, T)."""
    sink: list[np.ndarray] = []
    patches = patchify(spec, cfg)
    vec = _forward(patches[None, :, :], weights, cfg, attention_sink=sink)[0]
    return Embedding(vector=vec), [layer[0] for layer in sink]


def encode_batch(
    specs: list[MelSpectrogram],
    weights: EncoderWeights,
    cfg: EncoderConfig,
    chunk: int = 32,
) -> np.ndarray:
    """Embeddings for many spectrograms, (B, D); identical to encode per item."""
    if not specs:
        return np.zeros((0, cfg.embed_dim))
    out = []
    for start in range(0, len(specs), chunk):
        patches = np.stack([patchify(s, cfg) for s in specs[start : start + chunk]])
        out.append(_forward(patches, weights, cfg))
    return np.concatenate(out, axis=0)


def save_weights(cfg: EncoderConfig, weights: EncoderWeights) -> bytes:
    header = struct.pack(
        "<9I",
        cfg.patch_h,
        cfg.patch_w,
        cfg.stride_h,
        cfg.stride_w,
        cfg.embed_dim,
        cfg.n_layers,
        cfg.n_heads,
        cfg.mlp_ratio,
        _POOLINGS.index(cfg.pooling),
    )
    return write_container(ASGW_MAGIC, header, weights.tensors)


def load_weights(data: bytes) -> tuple[EncoderConfig, EncoderWeights]:
    reader = open_container(data, ASGW_MAGIC)
    raw = struct.unpack("<9I", reader.take(36, "config header"))
    if raw[8] >= len(_POOLINGS):
        raise ShapeInconsistencyError(f"unknown pooling code {raw[8]}")
    cfg = EncoderConfig(
        patch_h=raw[0],
        patch_w=raw[1],
        stride_h=raw[2],
        stride_w=raw[3],
        embed_dim=raw[4],
        n_layers=raw[5],
        n_heads=raw[6],
        mlp_ratio=raw[7],
        pooling=_POOLINGS[raw[8]],
    )
    weights = EncoderWeights(tensors=read_tensor_table(reader))
    if not reader.done():
        raise TruncatedFileError("trailing bytes after tensor table")
    validate_weights(cfg, weights)
    return cfg, weights

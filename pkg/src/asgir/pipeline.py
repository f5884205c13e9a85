"""End-to-end glue: training from a manifest, recording classification,
model bundle persistence, and the on-disk embedding cache."""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import heads as heads_mod
from .audio import CANONICAL_RATE_HZ, AudioClip, Segment, decode_wav, resample, segment
from .encoder import EncoderConfig, EncoderWeights, encode_batch, load_weights, n_patches, random_weights, save_weights
from .errors import ArgumentError
from .evaluation import ClassReport, class_report, confusion, split
from .heads import GmmModel, SvmModel, load_model, save_model_with_extras
from .manifest import DatasetManifest
from .regions import RegionIndex, mask_scores
from .spectrogram import SpectrogramConfig, compute_norm_stats, log_mel, mel_filterbank

log = logging.getLogger(__name__)

SPEC_CONFIG_FIELDS = ("n_fft", "hop_samples", "window_samples", "n_mels", "fmin_hz", "fmax_hz", "sample_rate_hz")


@dataclass
class ModelBundle:
    """Everything inference needs: front-end config, encoder, head."""

    spec_cfg: SpectrogramConfig
    enc_cfg: EncoderConfig
    enc_weights: EncoderWeights
    head: SvmModel | GmmModel

    @property
    def registry(self):
        return self.head.registry

    def score(self, embedding: np.ndarray) -> np.ndarray:
        if isinstance(self.head, SvmModel):
            return heads_mod.svm_score(self.head, embedding)
        return heads_mod.gmm_score(self.head, embedding)


def canonicalize(clip: AudioClip) -> AudioClip:
    if clip.sample_rate_hz != CANONICAL_RATE_HZ:
        clip = resample(clip, CANONICAL_RATE_HZ)
    return clip


def load_recording(path: str | Path, source_id: str | None = None) -> AudioClip:
    data = Path(path).read_bytes()
    clip = decode_wav(data)
    clip.source_id = source_id or str(path)
    return canonicalize(clip)


def segments_to_embeddings(
    segments: list[Segment],
    spec_cfg: SpectrogramConfig,
    enc_cfg: EncoderConfig,
    weights: EncoderWeights,
) -> np.ndarray:
    filterbank = mel_filterbank(spec_cfg)
    specs = [log_mel(seg, spec_cfg, filterbank) for seg in segments]
    return encode_batch(specs, weights, enc_cfg)


@dataclass
class SegmentPrediction:
    offset_s: float
    class_id: int
    score: float


@dataclass
class ClassifyResult:
    segments_evaluated: int
    top_class_id: int
    aggregate_score: float
    per_segment: list[SegmentPrediction]
    region_applied: str | None
    unconstrained_top_id: int | None  # set when masking changed the answer


def majority_vote(class_ids: list[int], summed_scores: dict[int, float]) -> int:
    """Most frequent class; ties broken by summed score, then lowest id."""
    counts: dict[int, int] = {}
    for c in class_ids:
        counts[c] = counts.get(c, 0) + 1
    best = max(counts, key=lambda c: (counts[c], summed_scores.get(c, 0.0), -c))
    return best


def classify_clip(
    clip: AudioClip,
    bundle: ModelBundle,
    region_id: str | None = None,
    region_index: RegionIndex | None = None,
) -> ClassifyResult:
    """Segment, embed and score a recording; majority vote over segments.

    With a region, per-segment scores are masked before the argmax; the
    unconstrained winner is reported alongside whenever it differs.
    """
    clip = canonicalize(clip)
    segments = segment(clip)
    if not segments:
        raise ArgumentError("recording shorter than one segment")
    if region_id is not None and region_index is None:
        raise ArgumentError("region given but no region index loaded")

    embeddings = segments_to_embeddings(segments, bundle.spec_cfg, bundle.enc_cfg, bundle.enc_weights)
    raw_scores = [bundle.score(e) for e in embeddings]

    def vote(scores_list):
        ids = [heads_mod.predict(s) for s in scores_list]
        sums: dict[int, float] = {}
        for s in scores_list:
            for c in range(len(s)):
                if np.isfinite(s[c]):
                    sums[c] = sums.get(c, 0.0) + float(s[c])
        return majority_vote(ids, sums), ids, sums

    unconstrained_top, _, _ = vote(raw_scores)
    if region_id is not None:
        masked = [mask_scores(s, region_id, region_index) for s in raw_scores]
        top, ids, sums = vote(masked)
        per_segment_scores = masked
    else:
        top, ids, sums = vote(raw_scores)
        per_segment_scores = raw_scores

    per_segment = [
        SegmentPrediction(
            offset_s=seg.offset_s,
            class_id=ids[i],
            score=float(per_segment_scores[i][ids[i]]),
        )
        for i, seg in enumerate(segments)
    ]
    return ClassifyResult(
        segments_evaluated=len(segments),
        top_class_id=top,
        aggregate_score=sums.get(top, 0.0),
        per_segment=per_segment,
        region_applied=region_id,
        unconstrained_top_id=unconstrained_top if top != unconstrained_top else None,
    )


# ---------------------------------------------------------------------------
# training


@dataclass
class TrainingData:
    segments: list[Segment]
    class_ids: np.ndarray
    region_ids: list[str | None]
    registry: object


def ingest_manifest(manifest: DatasetManifest, base_dir: str | Path = ".") -> TrainingData:
    """Decode and segment every manifest entry, labels carried through."""
    base = Path(base_dir)
    segments: list[Segment] = []
    class_ids: list[int] = []
    region_ids: list[str | None] = []
    for entry in manifest.entries:
        path = Path(entry.file_path)
        if not path.is_absolute():
            path = base / path
        clip = load_recording(path, source_id=entry.file_path)
        cid = manifest.registry.id_of(entry.species_label)
        for seg in segment(clip):
            seg.label = cid
            segments.append(seg)
            class_ids.append(cid)
            region_ids.append(entry.region_id)
    if not segments:
        raise ArgumentError("manifest produced no segments")
    return TrainingData(
        segments=segments,
        class_ids=np.asarray(class_ids, dtype=np.int64),
        region_ids=region_ids,
        registry=manifest.registry,
    )


@dataclass
class TrainOutcome:
    bundle: ModelBundle
    report: ClassReport
    train_indices: list[int]
    test_indices: list[int]
    embeddings: np.ndarray
    class_ids: np.ndarray
    test_region_ids: list[str | None]


def train_from_manifest(
    manifest: DatasetManifest,
    base_dir: str | Path = ".",
    head: str = "svm",
    seed: int = 0,
    spec_cfg: SpectrogramConfig | None = None,
    enc_cfg: EncoderConfig | None = None,
    enc_weights: EncoderWeights | None = None,
    cache_dir: str | Path | None = None,
) -> TrainOutcome:
    """The full training pipeline: ingest, normalize, embed, split, fit.

    Normalization statistics come from the training split only; encoder
    weights are seeded at random unless supplied.
    """
    data = ingest_manifest(manifest, base_dir)
    spec_cfg = spec_cfg or SpectrogramConfig()
    enc_cfg = enc_cfg or EncoderConfig()

    train_idx, test_idx = split(data.class_ids, ratio=0.8, seed=seed)
    train_segments = [data.segments[i] for i in train_idx]
    mean, std = compute_norm_stats(train_segments, spec_cfg)
    spec_cfg = replace(spec_cfg, norm_mean=mean, norm_std=std)

    seg_len = len(data.segments[0].clip.samples)
    frames = -(-seg_len // spec_cfg.hop_samples)
    if enc_weights is None:
        enc_weights = random_weights(enc_cfg, n_patches(enc_cfg, frames, spec_cfg.n_mels), seed=seed)

    embeddings = compute_embeddings_cached(data.segments, spec_cfg, enc_cfg, enc_weights, cache_dir)

    y = data.class_ids
    if head == "svm":
        model = heads_mod.svm_train(embeddings[train_idx], y[train_idx], data.registry, seed=seed)
    elif head == "gmm":
        model = heads_mod.gmm_train(embeddings[train_idx], y[train_idx], data.registry, seed=seed)
    else:
        raise ArgumentError(f"unknown head {head!r} (want svm or gmm)")

    bundle = ModelBundle(spec_cfg=spec_cfg, enc_cfg=enc_cfg, enc_weights=enc_weights, head=model)
    predictions = [heads_mod.predict(bundle.score(embeddings[i])) for i in test_idx]
    cm = confusion(y[test_idx], predictions, len(data.registry))
    report = class_report(cm, data.registry)
    return TrainOutcome(
        bundle=bundle,
        report=report,
        train_indices=train_idx,
        test_indices=test_idx,
        embeddings=embeddings,
        class_ids=y,
        test_region_ids=[data.region_ids[i] for i in test_idx],
    )


def compute_embeddings_cached(
    segments: list[Segment],
    spec_cfg: SpectrogramConfig,
    enc_cfg: EncoderConfig,
    weights: EncoderWeights,
    cache_dir: str | Path | None,
) -> np.ndarray:
    """Embeddings for all segments, memoized on disk when cache_dir is set.

    The cache key hashes the encoder weights, both configs and the segment
    audio, so any upstream change invalidates the entry.
    """
    if cache_dir is None:
        return segments_to_embeddings(segments, spec_cfg, enc_cfg, weights)

    digest = hashlib.sha256()
    digest.update(save_weights(enc_cfg, weights))
    digest.update(repr(spec_cfg).encode())
    for seg in segments:
        digest.update(np.ascontiguousarray(seg.clip.samples).tobytes())
    key = digest.hexdigest()[:32]
    cache_path = Path(cache_dir) / f"embeddings-{key}.npz"
    if cache_path.exists():
        log.info("embedding cache hit: %s", cache_path)
        return np.load(cache_path)["embeddings"]
    embeddings = segments_to_embeddings(segments, spec_cfg, enc_cfg, weights)
    cache_path.parent.mkdir(parents=True, exist_ok=True)
    np.savez_compressed(cache_path, embeddings=embeddings)
    return embeddings


# ---------------------------------------------------------------------------
# bundle persistence: head + norm stats in ASGM, encoder in ASGW


def save_bundle(bundle: ModelBundle, model_path: str | Path, weights_path: str | Path | None = None):
    model_path = Path(model_path)
    weights_path = Path(weights_path) if weights_path else default_weights_path(model_path)
    extras = {
        "norm_mean": np.asarray(bundle.spec_cfg.norm_mean, dtype=np.float32),
        "norm_std": np.asarray(bundle.spec_cfg.norm_std, dtype=np.float32),
        "spec_config": np.asarray(
            [getattr(bundle.spec_cfg, f) for f in SPEC_CONFIG_FIELDS], dtype=np.float32
        ),
    }
    model_path.write_bytes(save_model_with_extras(bundle.head, extras))
    weights_path.write_bytes(save_weights(bundle.enc_cfg, bundle.enc_weights))


def default_weights_path(model_path: str | Path) -> Path:
    return Path(model_path).with_suffix(".asgw")


def load_bundle(model_path: str | Path, weights_path: str | Path | None = None) -> ModelBundle:
    model_path = Path(model_path)
    weights_path = Path(weights_path) if weights_path else default_weights_path(model_path)
    head, extras = load_model(model_path.read_bytes())
    enc_cfg, enc_weights = load_weights(weights_path.read_bytes())

    def scalar(name: str, default: float) -> float:
        if name not in extras:
            return default
        return float(np.asarray(extras[name]).reshape(-1)[0])

    kwargs = {}
    if "spec_config" in extras:
        values = np.asarray(extras["spec_config"]).reshape(-1)
        for i, name in enumerate(SPEC_CONFIG_FIELDS):
            cast = float if name in ("fmin_hz", "fmax_hz") else int
            kwargs[name] = cast(values[i])
    spec_cfg = SpectrogramConfig(
        norm_mean=scalar("norm_mean", 0.0),
        norm_std=scalar("norm_std", 1.0),
        **kwargs,
    )
    return ModelBundle(spec_cfg=spec_cfg, enc_cfg=enc_cfg, enc_weights=enc_weights, head=head)

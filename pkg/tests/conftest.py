"""Shared fixtures: synthetic tone corpora and a small trained bundle."""

from __future__ import annotations

import csv
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

from asgir.audio import AudioClip, Segment, encode_wav, segment
from asgir.encoder import EncoderConfig, random_weights
from asgir.heads import svm_train
from asgir.labels import LabelRegistry
from asgir.pipeline import ModelBundle, save_bundle, segments_to_embeddings
from asgir.spectrogram import SpectrogramConfig, compute_norm_stats

REPO_ROOT = Path(__file__).resolve().parents[1]
FIXTURES_DIR = REPO_ROOT / "fixtures"

SAMPLE_RATE = 16000
TONE_AMPLITUDE = 0.5


def tone_samples(freq: float, seconds: float, rng: np.random.Generator, snr_db: float = 10.0):
    """Sine in white noise at the given SNR, clipped to [-1, 1]."""
    t = np.arange(int(seconds * SAMPLE_RATE)) / SAMPLE_RATE
    noise_std = TONE_AMPLITUDE / np.sqrt(2.0 * 10.0 ** (snr_db / 10.0))
    x = TONE_AMPLITUDE * np.sin(2 * np.pi * freq * t + rng.uniform(0, 2 * np.pi))
    return np.clip(x + rng.normal(0.0, noise_std, len(t)), -1.0, 1.0)


def tone_clip(freq: float, seconds: float, rng, source_id: str = "tone") -> AudioClip:
    return AudioClip(samples=tone_samples(freq, seconds, rng), sample_rate_hz=SAMPLE_RATE, source_id=source_id)


def tone_segment(freq: float, rng, label: int | None = None) -> Segment:
    seg = segment(tone_clip(freq, 2.0, rng))[0]
    seg.label = label
    return seg


SYNTH_SPECIES = ["Barn-Swallow", "Eurasian-Wren", "Northern-Raven", "Stock-Dove", "Willow-Ptarmigan"]
SYNTH_FREQS = [500.0, 1000.0, 2000.0, 3000.0, 4000.0]
SYNTH_REGIONS = {
    "Barn-Swallow": "EU-C",
    "Eurasian-Wren": "EU-W",
    "Northern-Raven": "EU-N",
    "Stock-Dove": "EU-C",
    "Willow-Ptarmigan": "EU-N",
}


@pytest.fixture(scope="session")
def synth_corpus():
    """The 5-tone acceptance corpus: 40 segments per species, embedded once."""
    rng = np.random.default_rng(7)
    registry = LabelRegistry(SYNTH_SPECIES)
    segments, labels = [], []
    for cid, freq in enumerate(SYNTH_FREQS):
        for i in range(40):
            seg = tone_segment(freq, rng, label=cid)
            seg.parent_id = f"{SYNTH_SPECIES[cid]}-{i}"
            segments.append(seg)
            labels.append(cid)
    labels = np.asarray(labels)

    from asgir.evaluation import split

    train_idx, test_idx = split(labels, 0.8, seed=0)
    spec_cfg = SpectrogramConfig()
    mean, std = compute_norm_stats([segments[i] for i in train_idx], spec_cfg)
    spec_cfg = replace(spec_cfg, norm_mean=mean, norm_std=std)
    enc_cfg = EncoderConfig()
    weights = random_weights(enc_cfg, 228, seed=0)
    embeddings = segments_to_embeddings(segments, spec_cfg, enc_cfg, weights)
    return {
        "registry": registry,
        "segments": segments,
        "labels": labels,
        "train_idx": train_idx,
        "test_idx": test_idx,
        "embeddings": embeddings,
        "spec_cfg": spec_cfg,
        "enc_cfg": enc_cfg,
        "weights": weights,
        "regions": [SYNTH_REGIONS[SYNTH_SPECIES[c]] for c in labels],
    }


@pytest.fixture(scope="session")
def toy_model_dir(tmp_path_factory):
    """A small 2-class trained bundle on disk plus a region file.

    Classes: Barn-Swallow (500 Hz) and Eurasian-Wren (1000 Hz); both have
    wiki fixtures in the repo.
    """
    root = tmp_path_factory.mktemp("toy-model")
    rng = np.random.default_rng(11)
    registry = LabelRegistry(["Barn-Swallow", "Eurasian-Wren"])
    segments, labels = [], []
    for cid, freq in enumerate([500.0, 1000.0]):
        for _ in range(8):
            segments.append(tone_segment(freq, rng, label=cid))
            labels.append(cid)
    labels = np.asarray(labels)

    spec_cfg = SpectrogramConfig()
    mean, std = compute_norm_stats(segments, spec_cfg)
    spec_cfg = replace(spec_cfg, norm_mean=mean, norm_std=std)
    enc_cfg = EncoderConfig(embed_dim=32, n_layers=1, n_heads=2)
    weights = random_weights(enc_cfg, 228, seed=1)
    embeddings = segments_to_embeddings(segments, spec_cfg, enc_cfg, weights)
    head = svm_train(embeddings, labels, registry, seed=0)
    bundle = ModelBundle(spec_cfg=spec_cfg, enc_cfg=enc_cfg, enc_weights=weights, head=head)

    model_path = root / "model.asgm"
    save_bundle(bundle, model_path)
    regions_path = root / "regions.csv"
    with regions_path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["region", "species"])
        writer.writerows(
            [
                ("EU-C", "Barn-Swallow"),
                ("EU-W", "Barn-Swallow"),
                ("EU-W", "Eurasian-Wren"),
            ]
        )
    return {
        "root": root,
        "model_path": model_path,
        "regions_path": regions_path,
        "bundle": bundle,
        "registry": registry,
    }


@pytest.fixture()
def wav_factory(tmp_path):
    """Write tone WAV files into the test's tmp dir."""

    def make(name: str, freq: float, seconds: float, seed: int = 0) -> Path:
        rng = np.random.default_rng(seed)
        path = tmp_path / name
        path.write_bytes(encode_wav(tone_clip(freq, seconds, rng)))
        return path

    return make

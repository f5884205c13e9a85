#!/usr/bin/env python3
"""Build the demo corpus, toy model and sample uploads under demo/.

Five synthetic "species" are pure tones (500..4000 Hz) in pink-ish noise,
named after real birds so the shipped region file and wiki fixtures line
up with model predictions. Produces:

    demo/manifest.csv, demo/wavs/*.wav     training corpus
    demo/regions.csv                        region index for the 5 species
    demo/model.asgm + demo/model.asgw       trained bundle
    demo/sample_barn_swallow.wav            4 s clip the model labels Barn-Swallow
    demo/too_short.wav                      1 s clip (below one segment)

Run: python scripts/build_demo_assets.py [--out demo] [--seed 0]
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from asgir.audio import AudioClip, encode_wav
from asgir.manifest import load_manifest
from asgir.pipeline import save_bundle, train_from_manifest

SPECIES_FREQS = {
    "Barn-Swallow": 500.0,
    "Eurasian-Wren": 1000.0,
    "Northern-Raven": 2000.0,
    "Stock-Dove": 3000.0,
    "Willow-Ptarmigan": 4000.0,
}
SPECIES_REGIONS = {
    "Barn-Swallow": ["EU-C", "EU-W", "EU-S"],
    "Eurasian-Wren": ["EU-W", "EU-C"],
    "Northern-Raven": ["EU-N", "EU-C", "EU-E"],
    "Stock-Dove": ["EU-C", "EU-W"],
    "Willow-Ptarmigan": ["EU-N"],
}
SAMPLE_RATE = 16000
AMPLITUDE = 0.5
SNR_DB = 10.0


def tone_clip(freq: float, seconds: float, rng: np.random.Generator) -> AudioClip:
    t = np.arange(int(seconds * SAMPLE_RATE)) / SAMPLE_RATE
    noise_std = AMPLITUDE / np.sqrt(2.0 * 10.0 ** (SNR_DB / 10.0))
    x = AMPLITUDE * np.sin(2 * np.pi * freq * t + rng.uniform(0, 2 * np.pi))
    x = x + rng.normal(0.0, noise_std, size=len(t))
    return AudioClip(samples=np.clip(x, -1, 1), sample_rate_hz=SAMPLE_RATE)


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="demo")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--segments-per-species", type=int, default=10)
    args = parser.parse_args()

    out = Path(args.out)
    wav_dir = out / "wavs"
    wav_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(args.seed)

    rows = []
    for name, freq in SPECIES_FREQS.items():
        seconds = 2.0 * args.segments_per_species
        clip = tone_clip(freq, seconds, rng)
        path = wav_dir / f"{name}.wav"
        path.write_bytes(encode_wav(clip))
        rows.append((f"wavs/{name}.wav", name, SPECIES_REGIONS[name][0]))

    with (out / "manifest.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["path", "label", "region"])
        writer.writerows(rows)

    with (out / "regions.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["region", "species"])
        for name, regions in SPECIES_REGIONS.items():
            for region in regions:
                writer.writerow([region, name])

    manifest = load_manifest(out / "manifest.csv")
    outcome = train_from_manifest(manifest, base_dir=out, head="svm", seed=args.seed)
    save_bundle(outcome.bundle, out / "model.asgm")
    print(f"toy model test accuracy: {outcome.report.accuracy:.3f}")

    sample = tone_clip(SPECIES_FREQS["Barn-Swallow"], 4.0, rng)
    (out / "sample_barn_swallow.wav").write_bytes(encode_wav(sample))
    short = tone_clip(SPECIES_FREQS["Barn-Swallow"], 1.0, rng)
    (out / "too_short.wav").write_bytes(encode_wav(short))
    print(f"demo assets written to {out}/")
    return 0


if __name__ == "__main__":
    sys.exit(main())

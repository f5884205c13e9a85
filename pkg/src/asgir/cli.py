"""Command-line entry points: train, predict, ablate, serve.

stdout carries machine-readable output only (JSON or the comparison
table); diagnostics go to stderr. Exit codes: 0 success, 1 pipeline
error, 2 usage, 3 audio decode failure, 4 unknown region, 5 info fetch
failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .errors import (
    ArgumentError,
    AsgirError,
    RegionError,
    UnsupportedCodecError,
    WavFormatError,
    WikiError,
)

log = logging.getLogger("asgir")

EXIT_OK = 0
EXIT_PIPELINE = 1
EXIT_USAGE = 2
EXIT_DECODE = 3
EXIT_REGION = 4
EXIT_FETCH = 5


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="asgir", description="Bird sound recognition and information retrieval")
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train a model from a manifest CSV")
    p_train.add_argument("--manifest", required=True)
    p_train.add_argument("--out", required=True, help="model output path (.asgm)")
    p_train.add_argument("--head", choices=["svm", "gmm"], default="svm")
    p_train.add_argument("--seed", type=int, default=0)
    p_train.add_argument("--weights", help="existing encoder weights (.asgw) to reuse")
    p_train.add_argument("--cache-dir", help="embedding cache directory")

    p_predict = sub.add_parser("predict", help="classify one recording")
    p_predict.add_argument("--model", required=True)
    p_predict.add_argument("--weights", help="encoder weights path (default: model path with .asgw)")
    p_predict.add_argument("--audio", required=True)
    p_predict.add_argument("--region")
    p_predict.add_argument("--regions", help="region index CSV/JSON (needed with --region)")
    p_predict.add_argument("--info", action="store_true", help="attach species info")
    p_predict.add_argument("--fixtures", default="fixtures", help="fixture page directory")
    p_predict.add_argument("--live-wiki", action="store_true", help="fetch pages over HTTP")
    p_predict.add_argument("--dump-spectrogram", help="write the first segment's spectrogram as CSV")

    p_ablate = sub.add_parser("ablate", help="compare heads and masking on one dataset")
    p_ablate.add_argument("--manifest", required=True)
    p_ablate.add_argument("--heads", default="svm,gmm", help="comma-separated: svm,gmm")
    p_ablate.add_argument("--with-masking", action="store_true")
    p_ablate.add_argument("--regions", help="region index CSV/JSON (needed with --with-masking)")
    p_ablate.add_argument("--seed", type=int, default=0)
    p_ablate.add_argument("--cache-dir", help="embedding cache directory")

    p_serve = sub.add_parser("serve", help="run the HTTP service")
    p_serve.add_argument("--model", required=True)
    p_serve.add_argument("--weights")
    p_serve.add_argument("--regions")
    p_serve.add_argument("--fixtures", default="fixtures")
    p_serve.add_argument("--live-wiki", action="store_true")
    p_serve.add_argument("--port", type=int, default=8000)
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--ui", help="directory of built UI assets to serve at /")

    return parser


def _cmd_train(args) -> int:
    from .encoder import load_weights
    from .evaluation import report_as_dict, report_as_text
    from .manifest import load_manifest
    from .pipeline import save_bundle, train_from_manifest

    manifest = load_manifest(args.manifest)
    enc_cfg = enc_weights = None
    if args.weights:
        enc_cfg, enc_weights = load_weights(Path(args.weights).read_bytes())
    outcome = train_from_manifest(
        manifest,
        base_dir=Path(args.manifest).parent,
        head=args.head,
        seed=args.seed,
        enc_cfg=enc_cfg,
        enc_weights=enc_weights,
        cache_dir=args.cache_dir,
    )
    out = Path(args.out)
    save_bundle(outcome.bundle, out)
    report_dict = report_as_dict(outcome.report)
    report_json = json.dumps(report_dict, indent=2, sort_keys=True)
    out.with_suffix(".report.json").write_text(report_json + "\n")
    out.with_suffix(".report.txt").write_text(report_as_text(outcome.report) + "\n")
    out.with_suffix(".split.json").write_text(
        json.dumps({"seed": args.seed, "train": outcome.train_indices, "test": outcome.test_indices})
        + "\n"
    )
    log.info("model written to %s (test accuracy %.3f)", out, outcome.report.accuracy)
    print(report_json)
    return EXIT_OK


def _cmd_predict(args) -> int:
    from .labels import SpeciesLabel
    from .pipeline import classify_clip, load_bundle, load_recording
    from .regions import load_region_index
    from .service import classify_result_as_dict
    from .wiki import FetchPolicy, get_species_info

    bundle = load_bundle(args.model, args.weights)

    region_index = None
    if args.regions:
        region_index = load_region_index(Path(args.regions).read_bytes(), bundle.registry)
    if args.region is not None:
        if region_index is None or args.region not in region_index.regions:
            log.error("unknown region %r", args.region)
            return EXIT_REGION

    try:
        clip = load_recording(args.audio)
    except (WavFormatError, UnsupportedCodecError, OSError) as exc:
        log.error("cannot decode %s: %s", args.audio, exc)
        return EXIT_DECODE

    if args.dump_spectrogram:
        import numpy as np

        from .audio import segment
        from .spectrogram import log_mel

        segs = segment(clip)
        if segs:
            np.savetxt(args.dump_spectrogram, log_mel(segs[0], bundle.spec_cfg).values, delimiter=",")

    result = classify_clip(clip, bundle, region_id=args.region, region_index=region_index)
    response = classify_result_as_dict(result, bundle.registry)

    if args.info:
        policy = FetchPolicy(mode="live" if args.live_wiki else "fixture", fixtures_dir=args.fixtures)
        name = response["top_prediction"]["species_name"]
        try:
            info = get_species_info(
                SpeciesLabel(bundle.registry.id_of(name), name), policy
            )
        except WikiError as exc:
            log.error("species info fetch failed: %s", exc)
            return EXIT_FETCH
        response["species_info"] = info.as_dict()

    print(json.dumps(response, indent=2, sort_keys=True))
    return EXIT_OK


def _cmd_ablate(args) -> int:
    from .evaluation import ablation_as_text, run_ablation
    from .manifest import load_manifest
    from .pipeline import train_from_manifest
    from .regions import load_region_index

    manifest = load_manifest(args.manifest)
    head_names = [h.strip() for h in args.heads.split(",") if h.strip()]
    if not head_names:
        raise ArgumentError("no heads given")

    region_index = None
    if args.with_masking:
        if not args.regions:
            raise ArgumentError("--with-masking requires --regions")
        region_index = load_region_index(Path(args.regions).read_bytes(), manifest.registry)

    # one shared upstream pass; the split and embeddings are reused per row
    outcome = train_from_manifest(
        manifest,
        base_dir=Path(args.manifest).parent,
        head=head_names[0],
        seed=args.seed,
        cache_dir=args.cache_dir,
    )
    masking_options = [False, True] if args.with_masking else [False]
    train_idx, test_idx = outcome.train_indices, outcome.test_indices
    embeddings = outcome.embeddings
    class_ids = outcome.class_ids
    rows = run_ablation(
        embeddings[train_idx],
        class_ids[train_idx],
        embeddings[test_idx],
        class_ids[test_idx],
        outcome.test_region_ids,
        manifest.registry,
        region_index,
        head_names,
        masking_options,
        seed=args.seed,
    )
    print(ablation_as_text(rows))
    return EXIT_OK if any(r.error is None for r in rows) else EXIT_PIPELINE


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import ServiceSettings, create_app

    settings = ServiceSettings(
        model_path=args.model,
        weights_path=args.weights,
        regions_path=args.regions,
        fixtures_dir=args.fixtures,
        live_wiki=args.live_wiki,
        ui_dir=args.ui,
    )
    app = create_app(settings)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "train": _cmd_train,
        "predict": _cmd_predict,
        "ablate": _cmd_ablate,
        "serve": _cmd_serve,
    }
    try:
        return handlers[args.command](args)
    except RegionError as exc:
        log.error("%s", exc)
        return EXIT_REGION
    except (WavFormatError, UnsupportedCodecError) as exc:
        log.error("%s", exc)
        return EXIT_DECODE
    except WikiError as exc:
        log.error("%s", exc)
        return EXIT_FETCH
    except (AsgirError, OSError) as exc:
        log.error("%s", exc)
        return EXIT_PIPELINE


if __name__ == "__main__":
    sys.exit(main())

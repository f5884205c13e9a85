"""HTTP service: classify an uploaded recording, list regions, serve
species info and the static UI bundle.

The model, encoder weights and region index are loaded once at startup
and shared read-only across requests; per-request pipeline state is
isolated, so concurrent requests are safe. Species info objects are
cached in memory per page title (fetched_at stays stable across calls).
"""

from __future__ import annotations

import logging
import threading
from dataclasses import dataclass
from pathlib import Path

from fastapi import FastAPI, File, Form, HTTPException, Query, UploadFile
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from .errors import ArgumentError, UnsupportedCodecError, WavFormatError, WikiError
from .labels import LabelRegistry, SpeciesLabel
from .pipeline import ClassifyResult, ModelBundle, classify_clip, load_bundle
from .regions import RegionIndex, load_region_index
from .wiki import FetchPolicy, SpeciesInfo, get_species_info

log = logging.getLogger(__name__)

DEFAULT_MAX_UPLOAD_BYTES = 50 * 1024 * 1024


@dataclass
class ServiceSettings:
    model_path: str
    weights_path: str | None = None
    regions_path: str | None = None
    fixtures_dir: str = "fixtures"
    cache_dir: str | None = None
    live_wiki: bool = False
    ui_dir: str | None = None
    max_upload_bytes: int = DEFAULT_MAX_UPLOAD_BYTES


def classify_result_as_dict(result: ClassifyResult, registry: LabelRegistry) -> dict:
    return {
        "segments_evaluated": result.segments_evaluated,
        "top_prediction": {
            "species_name": registry.name_of(result.top_class_id),
            "aggregate_score": result.aggregate_score,
        },
        "per_segment": [
            {
                "offset_s": p.offset_s,
                "species_name": registry.name_of(p.class_id),
                "score": p.score,
            }
            for p in result.per_segment
        ],
        "region_applied": result.region_applied,
        "unconstrained_top1": (
            registry.name_of(result.unconstrained_top_id)
            if result.unconstrained_top_id is not None
            else None
        ),
        "species_info": None,
        "warning": None,
    }


class _InfoCache:
    """Per-title species info cache; lookups for one title are serialized."""

    def __init__(self, policy: FetchPolicy):
        self.policy = policy
        self._lock = threading.Lock()
        self._entries: dict[str, SpeciesInfo] = {}

    def get(self, species: SpeciesLabel) -> SpeciesInfo:
        with self._lock:
            if species.name in self._entries:
                return self._entries[species.name]
        info = get_species_info(species, self.policy)
        with self._lock:
            self._entries.setdefault(species.name, info)
            return self._entries[species.name]


def create_app(settings: ServiceSettings) -> FastAPI:
    bundle: ModelBundle = load_bundle(settings.model_path, settings.weights_path)
    region_index: RegionIndex | None = None
    if settings.regions_path:
        region_index = load_region_index(
            Path(settings.regions_path).read_bytes(), bundle.registry
        )
    policy = FetchPolicy(
        mode="live" if settings.live_wiki else "fixture",
        fixtures_dir=settings.fixtures_dir,
        cache_dir=settings.cache_dir,
    )
    info_cache = _InfoCache(policy)

    app = FastAPI(title="asgir", version="0.1.0")
    app.state.bundle = bundle
    app.state.region_index = region_index

    @app.post("/api/classify")
    async def classify(
        audio: UploadFile = File(...),
        region: str | None = Form(default=None),
        include_info: bool = Query(default=True),
    ):
        data = await audio.read()
        if len(data) > settings.max_upload_bytes:
            raise HTTPException(status_code=413, detail="upload exceeds size limit")
        try:
            from .audio import decode_wav

            clip = decode_wav(data)
        except (WavFormatError, UnsupportedCodecError) as exc:
            raise HTTPException(status_code=400, detail=f"undecodable audio: {exc}")

        if region is not None and (region_index is None or region not in region_index.regions):
            raise HTTPException(status_code=400, detail=f"unknown region {region!r}")

        try:
            result = classify_clip(clip, bundle, region_id=region, region_index=region_index)
        except ArgumentError as exc:
            raise HTTPException(status_code=422, detail=str(exc))

        response = classify_result_as_dict(result, bundle.registry)
        if include_info:
            name = response["top_prediction"]["species_name"]
            try:
                info = info_cache.get(SpeciesLabel(bundle.registry.id_of(name), name))
                response["species_info"] = info.as_dict()
            except WikiError as exc:
                log.warning("species info unavailable for %s: %s", name, exc)
                response["warning"] = f"species info unavailable: {exc}"
        return JSONResponse(response)

    @app.get("/api/regions")
    def regions():
        if region_index is None:
            return JSONResponse([])
        return JSONResponse(
            [
                {
                    "region_id": rid,
                    "display_name": region_index.display_name(rid),
                    "species_count": len(region_index.regions[rid]),
                }
                for rid in region_index.region_ids()
            ]
        )

    @app.get("/api/species/{name}/info")
    def species_info(name: str):
        if name not in bundle.registry:
            raise HTTPException(status_code=404, detail=f"unknown species {name!r}")
        try:
            info = info_cache.get(SpeciesLabel(bundle.registry.id_of(name), name))
        except WikiError as exc:
            raise HTTPException(status_code=502, detail=f"upstream fetch failed: {exc}")
        return JSONResponse(info.as_dict())

    ui_dir = settings.ui_dir
    if ui_dir and Path(ui_dir).is_dir():
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app

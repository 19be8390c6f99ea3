"""HTTP facade over the extraction pipeline.

Endpoints:
  GET  /healthz        liveness probe
  GET  /api/corpora    stored corpora with per-community counts
  POST /api/extract    run (or replay) an extraction for a stored corpus
  GET  /api/map/{id}   fetch a previously extracted map by id

Extractions are cached by (corpus id, configuration) hash, so repeating a
request replays the identical response document.
"""

from __future__ import annotations

import threading
from collections import OrderedDict
from concurrent.futures import ThreadPoolExecutor
from concurrent.futures import TimeoutError as FutureTimeout

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from .errors import (
    InfeasibleError,
    NarrativeAtlasError,
    NotFoundError,
    SolverInconsistencyError,
    ValidationError,
)
from .mapgraph import to_document
from .pipeline import ExtractionConfig, extract
from .store import CorpusStore

DEFAULT_TIMEOUT_S = 60.0
CACHE_SIZE = 128


def _status_for(exc: NarrativeAtlasError) -> int:
    if isinstance(exc, NotFoundError):
        return 404
    if isinstance(exc, InfeasibleError):
        return 422
    if isinstance(exc, SolverInconsistencyError):
        return 500
    if isinstance(exc, ValidationError):
        return 400
    return 500


def create_app(store: CorpusStore, timeout_s: float = DEFAULT_TIMEOUT_S) -> FastAPI:
    """Build the service around one store instance."""
    app = FastAPI(title="narrative-atlas", docs_url=None, redoc_url=None)
    # the map explorer may be served from a different origin than the API
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["GET", "POST"],
        allow_headers=["content-type"],
    )
    cache: OrderedDict[str, dict] = OrderedDict()
    lock = threading.Lock()
    executor = ThreadPoolExecutor(max_workers=4)

    @app.exception_handler(NarrativeAtlasError)
    async def _atlas_error(_: Request, exc: NarrativeAtlasError):
        body = {"detail": str(exc)}
        if isinstance(exc, InfeasibleError):
            body["constraint_class"] = exc.constraint_class
        return JSONResponse(status_code=_status_for(exc), content=body)

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    @app.get("/api/corpora")
    def corpora():
        return store.list_corpora()

    @app.post("/api/extract")
    def run_extract(payload: dict):
        if not isinstance(payload, dict) or "corpus_id" not in payload:
            raise ValidationError("invalid request: body needs a corpus_id")
        corpus_id = str(payload["corpus_id"])
        config = ExtractionConfig.from_dict(
            {k: v for k, v in payload.items() if k != "corpus_id"}
        )
        map_id = store.map_id_for(corpus_id, config.fingerprint())

        with lock:
            if map_id in cache:
                cache.move_to_end(map_id)
                return cache[map_id]

        corpora_by_name = store.load_corpora(corpus_id)
        table = store.load_embeddings_for(corpus_id)
        future = executor.submit(extract, corpora_by_name, table, config)
        try:
            nmap = future.result(timeout=timeout_s)
        except FutureTimeout:
            future.cancel()
            return JSONResponse(
                status_code=504,
                content={"detail": f"extraction exceeded {timeout_s:.0f}s timeout"},
            )

        response = {"map_id": map_id, "corpus_id": corpus_id, "map": to_document(nmap)}
        with lock:
            cache[map_id] = response
            while len(cache) > CACHE_SIZE:
                cache.popitem(last=False)
        store.save_map(map_id, response)
        return response

    @app.get("/api/map/{map_id}")
    def get_map(map_id: str):
        with lock:
            if map_id in cache:
                cache.move_to_end(map_id)
                return cache[map_id]
        return store.load_map(map_id)

    return app

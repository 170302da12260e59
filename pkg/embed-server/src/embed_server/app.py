"""HTTP embedding service.

Wire contract: POST /embed with body {"texts": [...]} answers
{"dim": d, "vectors": [[...], ...]} with one vector per text, in
request order; GET /health answers {"status": "ok", "dim": d,
"model": "..."}. Errors carry {"error": "..."} with status 400 for
malformed requests, 413 for oversize ones, and 500 for inference
failures. The encoder is loaded once and shared read-only, so
concurrent request handling needs no further locking.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .encoder import DEFAULT_MODEL, load_encoder


@dataclass
class ServerConfig:
    model: str = DEFAULT_MODEL
    port: int = 8100
    max_batch: int = 256
    max_text_length: int = 8192

    def __post_init__(self):
        if not 1 <= int(self.port) <= 65535:
            raise ValueError(f"port {self.port} out of range")
        if self.max_batch < 1:
            raise ValueError("max_batch must be at least 1")
        if self.max_text_length < 1:
            raise ValueError("max_text_length must be at least 1")


def _error(status: int, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": message})


def create_app(config: ServerConfig | None = None) -> FastAPI:
    config = config or ServerConfig()
    encoder = load_encoder(config.model)
    app = FastAPI(title="embed-server", docs_url=None, redoc_url=None)

    @app.get("/health")
    def health():
        return {"status": "ok", "dim": encoder.dim, "model": encoder.name}

    # body parsed by hand so malformed JSON yields the contract's 400,
    # not a framework-shaped validation response
    @app.post("/embed")
    async def embed(request: Request):
        try:
            payload = json.loads(await request.body())
        except (json.JSONDecodeError, UnicodeDecodeError):
            return _error(400, "request body is not valid JSON")
        if not isinstance(payload, dict) or "texts" not in payload:
            return _error(400, "request must be an object with a texts key")
        texts = payload["texts"]
        if not isinstance(texts, list) or any(not isinstance(t, str) for t in texts):
            return _error(400, "texts must be a list of strings")
        if len(texts) > config.max_batch:
            return _error(
                413, f"{len(texts)} texts exceed max_batch {config.max_batch}"
            )
        longest = max((len(t) for t in texts), default=0)
        if longest > config.max_text_length:
            return _error(
                413,
                f"text of {longest} characters exceeds "
                f"max_text_length {config.max_text_length}",
            )
        try:
            vectors = encoder.encode(texts)
        except Exception as exc:
            return _error(500, f"inference failure: {exc}")
        return {
            "dim": encoder.dim,
            "vectors": [[float(x) for x in row] for row in vectors],
        }

    return app

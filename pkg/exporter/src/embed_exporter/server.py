"""HTTP serve mode: POST /embed with {"texts": [...]} returns
{"dim": int, "vectors": [[...]]}.  Malformed requests get 400."""

from __future__ import annotations

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel

from .encoder import EntityEncoder


class EmbedRequest(BaseModel):
    texts: list[str]


def create_app(encoder: EntityEncoder, batch_size: int = 32) -> FastAPI:
    app = FastAPI(title="embed-exporter")

    @app.post("/embed")
    def embed(request: EmbedRequest):
        if not request.texts:
            raise HTTPException(status_code=400, detail="texts must be non-empty")
        if any(not t.strip() for t in request.texts):
            raise HTTPException(status_code=400, detail="texts must not contain empty strings")
        matrix = encoder.encode(request.texts, batch_size=batch_size)
        return {"dim": encoder.hidden_size,
                "vectors": [[float(v) for v in row] for row in matrix]}

    return app

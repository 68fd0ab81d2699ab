"""HTTP reward service.

POST /reward with {response, db_id, source, mode, gold_sql} returns the
reward breakdown as JSON (sigma_f, sigma_e, sigma_s, sigma_t, total, stage);
GET /healthz reports liveness. Correctness of concurrent use follows from the
scorer: timed runs serialize on the harness lock.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel

from .errors import DbNotFound, GoldExecutionError
from .protocol import ThinkingMode
from .reward import GoldRecord, RewardScorer


class RewardRequest(BaseModel):
    response: str
    db_id: str
    source: str = ""
    mode: str = "suppressed"
    gold_sql: str


def create_app(scorer: RewardScorer) -> FastAPI:
    app = FastAPI(title="sqlscore reward service")

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    @app.post("/reward")
    def reward(req: RewardRequest):
        try:
            mode = ThinkingMode.from_string(req.mode)
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        gold = GoldRecord(db_id=req.db_id, source=req.source,
                          mode=mode, gold_sql=req.gold_sql)
        try:
            breakdown = scorer.score_response(req.response, gold)
        except DbNotFound as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        except GoldExecutionError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return breakdown.to_json_dict()

    return app

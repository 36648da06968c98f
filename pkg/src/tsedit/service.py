"""HTTP JSON API in front of the guided sampler, for the browser editor.

The service does no numeric work of its own: every /edit response is
reproducible through the CLI with the same checkpoint, constraints and
seed. Sessions are thin bookkeeping (checkpoint binding, a seed counter,
the last request/response for UI reload); models are shared read-only.

Run with:  python -m tsedit.service --models DIR [--port 8080]
(or set TSEDIT_MODELS / TSEDIT_PORT).
"""

import argparse
import itertools
import json
import os
import threading
from pathlib import Path

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from tsedit.constraints import ConstraintError, parse_constraints
from tsedit.diffusion import NumericError, load_checkpoint
from tsedit.metrics import achieved_stat, mad
from tsedit.sampling import GuidanceConfig, sample_guided


class ModelRegistry:
    """Checkpoints in a directory, loaded lazily and cached."""

    def __init__(self, models_dir):
        self.models_dir = Path(models_dir)
        self._cache = {}
        self._lock = threading.Lock()

    def list(self):
        entries = []
        for path in sorted(self.models_dir.glob("*.json")):
            try:
                model, sched, meta = self.get(path.stem)
            except (ValueError, KeyError, json.JSONDecodeError):
                continue  # not a checkpoint; skip silently
            entries.append(
                {
                    "id": path.stem,
                    "L": model.config.seq_len,
                    "D": model.config.channels,
                    "T": sched.steps,
                    "dataset": meta.get("dataset", "unknown"),
                }
            )
        return entries

    def get(self, checkpoint_id):
        with self._lock:
            if checkpoint_id not in self._cache:
                path = self.models_dir / f"{checkpoint_id}.json"
                if not path.exists():
                    raise KeyError(checkpoint_id)
                self._cache[checkpoint_id] = load_checkpoint(path)
            return self._cache[checkpoint_id]


class Session:
    def __init__(self, session_id, checkpoint_id):
        self.id = session_id
        self.checkpoint_id = checkpoint_id
        self.seed_counter = 0
        self.last_constraints = None
        self.last_result = None
        self.lock = threading.Lock()


def create_app(models_dir):
    app = FastAPI(title="tsedit service")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    registry = ModelRegistry(models_dir)
    sessions = {}
    sessions_lock = threading.Lock()
    next_id = itertools.count(1)

    @app.get("/checkpoints")
    def list_checkpoints():
        return registry.list()

    @app.post("/sessions")
    def create_session(body: dict):
        checkpoint_id = body.get("checkpoint")
        try:
            model, sched, _ = registry.get(checkpoint_id)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown checkpoint {checkpoint_id!r}") from None
        with sessions_lock:
            session_id = f"s{next(next_id)}"
            sessions[session_id] = Session(session_id, checkpoint_id)
        return {
            "session": session_id,
            "L": model.config.seq_len,
            "D": model.config.channels,
            "T": sched.steps,
        }

    @app.post("/sessions/{session_id}/edit")
    def edit(session_id: str, body: dict):
        with sessions_lock:
            session = sessions.get(session_id)
        if session is None:
            raise HTTPException(status_code=404, detail=f"unknown session {session_id!r}")
        model, sched, _ = registry.get(session.checkpoint_id)
        try:
            constraints = parse_constraints(body.get("constraints", {}))
        except ConstraintError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        n = body.get("n", 1)
        if not isinstance(n, int) or not 1 <= n <= 64:
            raise HTTPException(status_code=400, detail="n must be an integer in [1, 64]")
        gcfg = GuidanceConfig()
        with session.lock:
            seed = body.get("seed")
            if seed is None:
                seed = session.seed_counter
                session.seed_counter += n
            elif not isinstance(seed, int):
                raise HTTPException(status_code=400, detail="seed must be an integer")
            try:
                results = [sample_guided(model, sched, constraints, gcfg, seed=seed + i) for i in range(n)]
            except ConstraintError as exc:
                raise HTTPException(status_code=422, detail=str(exc)) from exc
            except NumericError as exc:
                return JSONResponse(status_code=500, content={"detail": str(exc)})
            series = [r.series for r in results]
            response = {
                "seed": seed,
                "series": [s.tolist() for s in series],
                "trace": [r.trace for r in results],
                "mad": mad(series, constraints.points) if constraints.points else None,
                "anchors": [
                    {
                        "t": p.t,
                        "c": p.channel,
                        "target": p.value,
                        "residual": mad(series, [p]),
                    }
                    for p in constraints.points
                ],
                "achieved_stats": [
                    {
                        "s": s.start,
                        "e": s.end,
                        "c": s.channel,
                        "stat": s.stat,
                        "target": s.target,
                        "achieved": sum(achieved_stat(x, s) for x in series) / len(series),
                    }
                    for s in constraints.segments
                ],
            }
            session.last_constraints = body.get("constraints")
            session.last_result = response
        return response

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        with sessions_lock:
            session = sessions.get(session_id)
        if session is None:
            raise HTTPException(status_code=404, detail=f"unknown session {session_id!r}")
        return {
            "session": session.id,
            "checkpoint": session.checkpoint_id,
            "last_constraints": session.last_constraints,
        }

    return app


def main(argv=None):
    parser = argparse.ArgumentParser(description="tsedit HTTP service")
    parser.add_argument("--models", default=os.environ.get("TSEDIT_MODELS", "models"))
    parser.add_argument("--host", default=os.environ.get("TSEDIT_HOST", "127.0.0.1"))
    parser.add_argument("--port", type=int, default=int(os.environ.get("TSEDIT_PORT", "8080")))
    args = parser.parse_args(argv)
    import uvicorn

    uvicorn.run(create_app(args.models), host=args.host, port=args.port)


if __name__ == "__main__":
    main()

"""HTTP API over a live simulation run.

The simulation advances on a background thread in fixed simulated-time
chunks; every endpoint takes the runtime lock, so readers always observe a
consistent snapshot between chunks. `pace` stretches simulated time to wall
time (pace=1.0 is real time, 0 free-runs to the scenario end).
"""
from __future__ import annotations

import asyncio
import json
import threading
import time
from contextlib import asynccontextmanager
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, HTTPException, Query
from fastapi.responses import StreamingResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from .scenario import Scenario
from .sim import Simulation


class SimRuntime:
    """Owns the simulation thread and serializes all access to it."""

    def __init__(self, scenario: Scenario, pace: float = 0.0,
                 chunk_ms: int = 1000):
        self.scenario = scenario
        self.pace = pace
        self.chunk_ms = chunk_ms
        self.sim = Simulation(scenario)
        self.lock = threading.Lock()
        self.snapshot: Optional[dict] = None
        self.finished = False
        self._stop = threading.Event()
        self._thread: Optional[threading.Thread] = None

    def start(self) -> None:
        self._thread = threading.Thread(target=self._loop, daemon=True)
        self._thread.start()

    def stop(self) -> None:
        self._stop.set()
        if self._thread is not None:
            self._thread.join(timeout=5)

    def _loop(self) -> None:
        duration = self.scenario.run.duration_ms
        while not self._stop.is_set() and self.sim.engine.now < duration:
            target = min(duration, self.sim.engine.now + self.chunk_ms)
            with self.lock:
                self.sim.run_until(target)
                self.snapshot = self.sim.snapshot()
            if self.pace > 0:
                time.sleep(self.chunk_ms / 1000.0 * self.pace)
        self.finished = True

    # ---- thread-safe accessors --------------------------------------------

    def get_snapshot(self) -> Optional[dict]:
        with self.lock:
            return self.snapshot

    def set_target(self, ac: str, value: float) -> list[str]:
        with self.lock:
            updated = self.sim.bs.set_target(ac, value)
            self.snapshot = self.sim.snapshot()
            return updated

    def query_readings(self, node: int, frm: int, to: int, granularity: str):
        with self.lock:
            return self.sim.store.query_readings(node, frm, to, granularity)

    def events_since(self, cursor: int) -> list[dict]:
        with self.lock:
            return list(self.sim.events.since(cursor))


class SetpointRequest(BaseModel):
    ac: str
    value: float = Field(ge=20.0, le=28.0)


def create_app(scenario: Scenario, pace: float = 0.0,
               frontend_dir: Optional[str] = None) -> FastAPI:
    runtime = SimRuntime(scenario, pace=pace)

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        runtime.start()
        yield
        runtime.stop()

    app = FastAPI(title="airmote", version="0.1.0", lifespan=lifespan)
    app.state.runtime = runtime

    @app.get("/api/status")
    def status():
        snap = runtime.get_snapshot()
        if snap is None:
            raise HTTPException(status_code=503, detail="no snapshot yet")
        return snap

    @app.get("/api/readings")
    def readings(node: int, granularity: str = "minute",
                 frm: int = Query(0, alias="from"),
                 to: Optional[int] = None):
        snap = runtime.get_snapshot()
        hi = to if to is not None else (snap["sim_time"] if snap else 0)
        try:
            rows = runtime.query_readings(node, frm, hi, granularity)
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        if granularity == "raw":
            return {"node": node, "granularity": granularity,
                    "series": [r.__dict__ for r in rows]}
        return {"node": node, "granularity": granularity,
                "series": [{"bucket": b, "mean": m, "min": lo, "max": hi_,
                            "count": c} for b, m, lo, hi_, c in rows]}

    @app.post("/api/setpoint")
    def setpoint(req: SetpointRequest):
        try:
            updated = runtime.set_target(req.ac, req.value)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown AC {req.ac}")
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return {"updated": updated, "value": req.value}

    @app.get("/api/events")
    def events(since: int = 0):
        try:
            evs = runtime.events_since(since)
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return {"events": evs, "cursor": since + len(evs)}

    @app.get("/api/events/stream")
    async def events_stream(since: int = 0):
        if since < 0:
            raise HTTPException(status_code=400, detail="bad cursor")

        async def gen():
            cursor = since
            while True:
                evs = runtime.events_since(cursor)
                for ev in evs:
                    yield f"data: {json.dumps(ev, separators=(',', ':'))}\n\n"
                cursor += len(evs)
                if runtime._stop.is_set() or (runtime.finished and not evs):
                    return
                await asyncio.sleep(0.2)

        return StreamingResponse(gen(), media_type="text/event-stream")

    dist = Path(frontend_dir) if frontend_dir else \
        Path(__file__).resolve().parents[2] / "frontend" / "dist"
    if dist.is_dir():
        app.mount("/", StaticFiles(directory=str(dist), html=True),
                  name="dashboard")

    return app

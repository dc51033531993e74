"""Episode service consumed by the operator console.

One scene and one skill library per server; one live episode at a time.
Trace events stream over a WebSocket in order with no loss: every
subscriber gets the full event history from the start of the episode, and
slow consumers exert backpressure on the episode thread (bounded queues,
blocking producer) rather than dropping events.
"""

from __future__ import annotations

import asyncio
import json
import queue
import threading
import uuid
from dataclasses import dataclass, field

from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .deploy import EpisodeTrace, run_deployment
from .dsl.library import SkillLibrary, library_to_json
from .oracle.base import OracleBackend
from .sim.model import Scene

SUBSCRIBER_BUFFER = 1024


class TraceFeed:
    """Thread-safe fanout of trace events with full-history catch-up."""

    def __init__(self):
        self._history: list[dict] = []
        self._queues: list[queue.Queue] = []
        self._lock = threading.Lock()

    def publish(self, event: dict) -> None:
        with self._lock:
            self._history.append(event)
            targets = list(self._queues)
        for q in targets:
            q.put(event)  # blocks when a consumer lags: backpressure, no drops

    def subscribe(self) -> queue.Queue:
        q: queue.Queue = queue.Queue(maxsize=SUBSCRIBER_BUFFER)
        with self._lock:
            backlog = list(self._history)
            self._queues.append(q)
        for event in backlog:
            q.put(event)
        return q

    def unsubscribe(self, q: queue.Queue) -> None:
        with self._lock:
            if q in self._queues:
                self._queues.remove(q)


@dataclass
class Episode:
    id: str
    instruction: str
    trace: EpisodeTrace
    feed: TraceFeed
    user_messages: "queue.Queue[str]"
    thread: threading.Thread
    status: str = "running"  # running | finished
    success: bool | None = None

    def snapshot(self) -> dict:
        return {
            "id": self.id,
            "instruction": self.instruction,
            "status": self.status,
            "success": self.success,
            "events": len(self.trace.events),
        }


class StartEpisode(BaseModel):
    instruction: str


class UserTurn(BaseModel):
    text: str


def create_app(
    scene: Scene,
    lib: SkillLibrary,
    backend: OracleBackend,
    budget: int = 5,
    turn_cap: int = 20,
    turn_delay: float = 0.0,
) -> FastAPI:
    app = FastAPI(title="tablebot episode service")
    episodes: dict[str, Episode] = {}
    state_lock = threading.Lock()

    def active_episode() -> Episode | None:
        return next((e for e in episodes.values() if e.status == "running"), None)

    @app.get("/scene")
    def get_scene():
        return scene.to_dict()

    @app.get("/skills")
    def get_skills():
        return json.loads(library_to_json(lib))

    @app.post("/episodes", status_code=201)
    def start_episode(body: StartEpisode):
        if not body.instruction.strip():
            return JSONResponse({"error": "instruction must not be empty"}, status_code=400)
        with state_lock:
            if active_episode() is not None:
                return JSONResponse(
                    {"error": "an episode is already running"}, status_code=409
                )
            episode_id = uuid.uuid4().hex[:12]
            feed = TraceFeed()
            trace = EpisodeTrace()
            trace.listeners.append(feed.publish)
            user_messages: queue.Queue[str] = queue.Queue()

            def run() -> None:
                try:
                    run_deployment(
                        body.instruction,
                        scene,
                        lib,
                        backend,
                        budget=budget,
                        turn_cap=turn_cap,
                        user_messages=user_messages,
                        trace=trace,
                        turn_delay=turn_delay,
                    )
                finally:
                    episode.status = "finished"
                    finished = [e for e in trace.events if e["event"] == "finished"]
                    episode.success = bool(finished and finished[-1].get("success"))

            thread = threading.Thread(target=run, name=f"episode-{episode_id}", daemon=True)
            episode = Episode(
                id=episode_id,
                instruction=body.instruction,
                trace=trace,
                feed=feed,
                user_messages=user_messages,
                thread=thread,
            )
            episodes[episode_id] = episode
            thread.start()
        return {"id": episode_id}

    @app.get("/episodes/{episode_id}")
    def get_episode(episode_id: str):
        episode = episodes.get(episode_id)
        if episode is None:
            return JSONResponse({"error": "no such episode"}, status_code=404)
        return episode.snapshot()

    @app.post("/episodes/{episode_id}/message", status_code=202)
    def post_message(episode_id: str, body: UserTurn):
        episode = episodes.get(episode_id)
        if episode is None:
            return JSONResponse({"error": "no such episode"}, status_code=404)
        if episode.status != "running":
            return JSONResponse({"error": "episode already finished"}, status_code=409)
        episode.user_messages.put(body.text)
        return {"queued": True}

    @app.websocket("/episodes/{episode_id}/events")
    async def episode_events(ws: WebSocket, episode_id: str):
        episode = episodes.get(episode_id)
        if episode is None:
            await ws.close(code=4404)
            return
        await ws.accept()
        q = episode.feed.subscribe()
        loop = asyncio.get_event_loop()

        def next_event():
            try:
                return q.get(timeout=0.5)
            except queue.Empty:
                return None

        try:
            while True:
                event = await loop.run_in_executor(None, next_event)
                if event is None:
                    if episode.status == "finished" and q.empty():
                        break
                    continue
                await ws.send_text(json.dumps(event))
                if event.get("event") == "finished":
                    break
            await ws.close()
        except WebSocketDisconnect:
            pass
        finally:
            episode.feed.unsubscribe(q)

    app.state.episodes = episodes
    return app

"""HTTP service for the human-vs-AI riddle game.

Sessions draw rounds from a pre-built pool of (graph, target) pairs, pool
order shuffled per session. The AI's pick is frozen when the round is
created, the truth is revealed only after the human guesses, and a round
accepts exactly one guess. State lives in memory; an optional append-only
JSONL log records events for persistence.
"""

from __future__ import annotations

import json
import threading
import time
import uuid
from dataclasses import dataclass, field

import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .classifier import GraphObjectClassifier
from .dataset import Sample
from .describe import RiddleRound, build_round


class GuessBody(BaseModel):
    choice_index: int


@dataclass
class RoundState:
    round: RiddleRound
    truth: str
    answered: bool = False
    human_pick: int | None = None
    created_at: float = field(default_factory=time.time)


@dataclass
class SessionState:
    session_id: str
    seed: int
    order: list[int]
    next_pos: int = 0
    rounds: dict[str, RoundState] = field(default_factory=dict)
    rounds_answered: int = 0
    human_correct: int = 0
    ai_correct: int = 0
    lock: threading.Lock = field(default_factory=threading.Lock)


def _round_payload(rid: str, state: RoundState) -> dict:
    return {
        "round_id": rid,
        "riddle_text": state.round.riddle_text,
        "choices": list(state.round.choices),
    }


def create_app(pool: list[Sample], model: GraphObjectClassifier, *,
               seed: int = 0, log_path=None, static_dir=None) -> FastAPI:
    """Wire the game API around a round pool and a trained model."""
    if not pool:
        raise ValueError("round pool is empty")
    app = FastAPI(title="guess-the-object")
    sessions: dict[str, SessionState] = {}
    registry_lock = threading.Lock()
    counter = {"n": 0}
    log_lock = threading.Lock()

    def log_event(kind: str, **payload) -> None:
        if log_path is None:
            return
        with log_lock, open(log_path, "a") as f:
            f.write(json.dumps({"t": time.time(), "event": kind, **payload}))
            f.write("\n")

    def get_session(sid: str) -> SessionState:
        session = sessions.get(sid)
        if session is None:
            raise HTTPException(status_code=404, detail=f"unknown session {sid}")
        return session

    @app.post("/sessions")
    def create_session() -> dict:
        with registry_lock:
            counter["n"] += 1
            session_seed = seed * 100_003 + counter["n"]
        order = np.random.default_rng(session_seed).permutation(len(pool)).tolist()
        sid = uuid.uuid4().hex
        sessions[sid] = SessionState(session_id=sid, seed=session_seed, order=order)
        log_event("session_created", session_id=sid)
        return {"session_id": sid}

    @app.post("/sessions/{sid}/rounds")
    def create_round(sid: str) -> dict:
        session = get_session(sid)
        with session.lock:
            pos = session.next_pos
            session.next_pos += 1
            sample = pool[session.order[pos % len(pool)]]
            rid = f"r{pos + 1}"
            rnd = build_round(sample.graph, sample.target_id, model,
                              seed=session.seed + 7919 * (pos + 1))
            session.rounds[rid] = RoundState(round=rnd, truth=sample.label)
            log_event("round_created", session_id=sid, round_id=rid)
            return _round_payload(rid, session.rounds[rid])

    @app.get("/sessions/{sid}/rounds/{rid}")
    def get_round(sid: str, rid: str) -> dict:
        session = get_session(sid)
        state = session.rounds.get(rid)
        if state is None:
            raise HTTPException(status_code=404, detail=f"unknown round {rid}")
        return _round_payload(rid, state)

    @app.post("/sessions/{sid}/rounds/{rid}/guess")
    def guess(sid: str, rid: str, body: GuessBody) -> dict:
        session = get_session(sid)
        with session.lock:
            state = session.rounds.get(rid)
            if state is None:
                raise HTTPException(status_code=404, detail=f"unknown round {rid}")
            if state.answered:
                raise HTTPException(status_code=409, detail="round already answered")
            if not 0 <= body.choice_index < len(state.round.choices):
                raise HTTPException(status_code=400,
                                    detail=f"choice_index out of range "
                                           f"[0, {len(state.round.choices)})")
            state.answered = True
            state.human_pick = body.choice_index
            correct = body.choice_index == state.round.correct_index
            ai_correct = state.round.ai_top1 == state.truth
            session.rounds_answered += 1
            session.human_correct += int(correct)
            session.ai_correct += int(ai_correct)
            log_event("guess", session_id=sid, round_id=rid,
                      pick=body.choice_index, correct=correct,
                      ai_pick=state.round.ai_top1, ai_correct=ai_correct,
                      truth=state.truth)
            return {
                "correct": correct,
                "truth": state.truth,
                "ai_pick": state.round.ai_top1,
                "ai_correct": ai_correct,
            }

    @app.get("/sessions/{sid}/score")
    def score(sid: str) -> dict:
        session = get_session(sid)
        with session.lock:
            n = session.rounds_answered
            return {
                "rounds": n,
                "human_accuracy": session.human_correct / n if n else None,
                "ai_accuracy": session.ai_correct / n if n else None,
            }

    if static_dir is not None:
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")
    return app

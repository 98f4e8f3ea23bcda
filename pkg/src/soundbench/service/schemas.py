"""Request and response bodies of the rating service API."""

from __future__ import annotations

from pydantic import BaseModel, Field


class SessionCreate(BaseModel):
    rater_id: str = Field(min_length=1)
    category: str = Field(min_length=1)


class SessionInfo(BaseModel):
    session_id: str
    rater_id: str
    category: str
    kind: str  # "rating" | "diversity"
    state: str  # "active" | "complete"
    cursor: int
    trial_count: int


class TrialOut(BaseModel):
    kind: str  # referent | rating | diversity | break | done
    state: str
    progress: float
    trial_id: str | None = None
    position: int | None = None
    audio_url: str | None = None
    scales: list[str] = []


class ResponseIn(BaseModel):
    trial_id: str = Field(min_length=1)
    quality: int | None = Field(default=None, ge=0, le=10)
    fit: int | None = Field(default=None, ge=0, le=10)
    diversity: int | None = Field(default=None, ge=0, le=10)
    listen_count: int = Field(default=1, ge=1)


class ResponseAck(BaseModel):
    status: str  # "ok" | "duplicate"
    session_id: str
    trial_id: str
    cursor: int
    state: str

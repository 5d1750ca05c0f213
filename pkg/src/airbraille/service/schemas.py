"""Request/response models for the /v1 wire API.

Actual-phase trial and submit replies are modeled without any truth
fields at all, so the schema itself guarantees the pattern under test is
never disclosed before the session ends.
"""

from __future__ import annotations

from typing import Optional

from pydantic import BaseModel, Field


class ParticipantIn(BaseModel):
    id: str
    age: Optional[int] = None
    handedness: Optional[str] = None
    braille_experience_years: Optional[float] = None


class SessionCreateRequest(BaseModel):
    participant: ParticipantIn
    participant_index: int = 0
    methods: Optional[list[str]] = None  # default: the three studied methods
    trials_per_method: int = 10
    training_per_method: int = 4
    alphabet: Optional[str] = None  # default: the ten digits
    seed: int = 0
    ordering: str = "counterbalanced"
    session_id: Optional[str] = None


class TrialView(BaseModel):
    """Actual-phase descriptor: no truth fields exist on this model."""

    trial_id: str
    index: int
    total: int
    phase: str
    method: str


class TrainingTrialView(TrialView):
    truth_char: str
    truth_pattern: str


class NextTrialResponse(BaseModel):
    done: bool
    trial: Optional[dict] = None


class SessionCreated(BaseModel):
    session_id: str
    trial_count: int
    training_count: int
    actual_count: int
    methods: list[str]
    first_trial: dict


class SessionStatus(BaseModel):
    session_id: str
    participant_id: str
    trial_count: int
    answered: int
    done: bool
    finalized: bool
    methods: list[str]


class SubmitRequest(BaseModel):
    trial_id: str
    answer: str = Field(min_length=1, max_length=1)
    elapsed_s: float


class ActualSubmitReply(BaseModel):
    """Actual-phase acknowledgment carries no correctness information."""

    phase: str
    accepted: bool


class TrainingSubmitReply(BaseModel):
    phase: str
    correct: bool
    truth_char: str
    truth_pattern: str


class QuestionnaireIn(BaseModel):
    mental_demand: dict[str, int]
    comfort: dict[str, int]
    sus_items: list[int]


class AlphabetEntry(BaseModel):
    char: str
    cells: str  # serialized dot pattern, e.g. "1245"


class AlphabetResponse(BaseModel):
    characters: list[AlphabetEntry]


class MethodsResponse(BaseModel):
    methods: list[str]
    studied: list[str]


class HealthResponse(BaseModel):
    status: str
    version: str

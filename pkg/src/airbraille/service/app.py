"""FastAPI application exposing the experiment engine over HTTP."""

from __future__ import annotations

from pathlib import Path
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from .. import __version__
from ..analysis import EmptyInput, OutOfRangeItem, Phase, UndecodableResponse
from ..braille import UnknownCharacter, encode_char
from ..experiment import (
    DuplicateResponse,
    InvalidConfig,
    InvalidResponse,
    Participant,
    PlannedTrial,
    Questionnaire,
    SessionConfig,
    SessionIncomplete,
    SessionNotFinalized,
    SessionStore,
    UnknownSession,
    UnknownTrial,
)
from ..scheduling import (
    EmptyPattern,
    StimulusMethod,
    UnknownMethod,
    build_schedule,
    schedule_to_document,
)
from . import schemas

_STATUS_BY_ERROR: list[tuple[type[Exception], int]] = [
    (UnknownSession, 404),
    (UnknownTrial, 404),
    (DuplicateResponse, 409),
    (SessionIncomplete, 409),
    (SessionNotFinalized, 409),
    (InvalidConfig, 422),
    (InvalidResponse, 422),
    (UnknownCharacter, 422),
    (UnknownMethod, 422),
    (EmptyPattern, 422),
    (OutOfRangeItem, 422),
    (UndecodableResponse, 422),
    (EmptyInput, 422),
]


def _trial_view(trial: PlannedTrial, total: int) -> dict:
    base = dict(
        trial_id=trial.trial_id,
        index=trial.index,
        total=total,
        phase=trial.phase.value,
        method=trial.method,
    )
    if trial.phase == Phase.TRAINING:
        view = schemas.TrainingTrialView(
            **base,
            truth_char=trial.truth_char,
            truth_pattern=encode_char(trial.truth_char).as_text(),
        )
    else:
        view = schemas.TrialView(**base)
    return view.model_dump()


def create_app(storage_dir: Optional[str | Path] = None, frontend_dir: Optional[str | Path] = None) -> FastAPI:
    app = FastAPI(title="airbraille experiment service", version=__version__)
    app.state.store = SessionStore(Path(storage_dir) if storage_dir else None)

    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    for error_type, status in _STATUS_BY_ERROR:
        def _handler(request: Request, exc: Exception, status=status):
            return JSONResponse(status_code=status, content={"detail": str(exc)})

        app.add_exception_handler(error_type, _handler)

    def store() -> SessionStore:
        return app.state.store

    @app.get("/v1/health", response_model=schemas.HealthResponse)
    def health():
        return schemas.HealthResponse(status="ok", version=__version__)

    @app.get("/v1/alphabet", response_model=schemas.AlphabetResponse)
    def alphabet():
        """The digit choice set with its dot patterns (public chart data)."""
        return schemas.AlphabetResponse(
            characters=[
                schemas.AlphabetEntry(char=ch, cells=encode_char(ch).as_text())
                for ch in "1234567890"
            ]
        )

    @app.get("/v1/methods", response_model=schemas.MethodsResponse)
    def methods():
        return schemas.MethodsResponse(
            methods=[m.value for m in StimulusMethod],
            studied=["constant", "point_by_point", "row_by_row"],
        )

    @app.post("/v1/sessions", response_model=schemas.SessionCreated, status_code=201)
    def create_session(request: schemas.SessionCreateRequest):
        config = SessionConfig(
            participant=Participant(
                id=request.participant.id,
                age=request.participant.age,
                handedness=request.participant.handedness,
                braille_experience_years=request.participant.braille_experience_years,
            ),
            participant_index=request.participant_index,
            methods=tuple(request.methods) if request.methods else ("constant", "point_by_point", "row_by_row"),
            trials_per_method=request.trials_per_method,
            training_per_method=request.training_per_method,
            alphabet=request.alphabet or "1234567890",
            seed=request.seed,
            ordering=request.ordering,
        )
        for method in config.methods:
            StimulusMethod.parse(method)
        session = store().create(config, session_id=request.session_id)
        first = session.next_trial()
        return schemas.SessionCreated(
            session_id=session.id,
            trial_count=len(session.plan),
            training_count=sum(1 for t in session.plan if t.phase == Phase.TRAINING),
            actual_count=sum(1 for t in session.plan if t.phase == Phase.ACTUAL),
            methods=list(config.methods),
            first_trial=_trial_view(first, len(session.plan)),
        )

    @app.get("/v1/sessions/{session_id}", response_model=schemas.SessionStatus)
    def session_status(session_id: str):
        session = store().get(session_id)
        return schemas.SessionStatus(
            session_id=session.id,
            participant_id=session.config.participant.id,
            trial_count=len(session.plan),
            answered=session.cursor,
            done=session.done,
            finalized=session.finalized,
            methods=list(session.config.methods),
        )

    @app.get("/v1/sessions/{session_id}/next", response_model=schemas.NextTrialResponse)
    def next_trial(session_id: str):
        session = store().get(session_id)
        trial = session.next_trial()
        if trial is None:
            return schemas.NextTrialResponse(done=True, trial=None)
        return schemas.NextTrialResponse(done=False, trial=_trial_view(trial, len(session.plan)))

    @app.post("/v1/sessions/{session_id}/responses")
    def submit_response(session_id: str, request: schemas.SubmitRequest):
        result = store().submit_response(
            session_id, request.trial_id, request.answer, request.elapsed_s
        )
        if result.phase == Phase.TRAINING:
            reply = schemas.TrainingSubmitReply(
                phase=result.phase.value,
                correct=result.correct,
                truth_char=result.truth_char,
                truth_pattern=result.truth_pattern,
            )
        else:
            reply = schemas.ActualSubmitReply(phase=result.phase.value, accepted=True)
        return reply.model_dump()

    @app.post("/v1/sessions/{session_id}/finalize")
    def finalize(session_id: str, request: schemas.QuestionnaireIn):
        questionnaire = Questionnaire(
            mental_demand=dict(request.mental_demand),
            comfort=dict(request.comfort),
            sus_items=tuple(request.sus_items),
        )
        summary = store().finalize(session_id, questionnaire)
        return {"session_id": session_id, "summary": summary}

    @app.get("/v1/sessions/{session_id}/results")
    def results(session_id: str):
        session = store().get(session_id)
        if not session.finalized:
            raise SessionNotFinalized(f"session {session_id} has not been finalized")
        return {"session_id": session_id, "summary": session.summary}

    @app.get("/v1/sessions/{session_id}/trials/{trial_id}/schedule")
    def trial_schedule(session_id: str, trial_id: str):
        """Emission schedule document for a trial: the device render feed.

        This feed drives the array (or the training preview); trial-flow
        clients must not use it to display actual-phase patterns.
        """
        session = store().get(session_id)
        for planned in session.plan:
            if planned.trial_id == trial_id:
                schedule = build_schedule(
                    encode_char(planned.truth_char), StimulusMethod.parse(planned.method)
                )
                return schedule_to_document(schedule)
        raise UnknownTrial(trial_id)

    if frontend_dir:
        frontend_path = Path(frontend_dir)
        if frontend_path.is_dir():
            from fastapi.staticfiles import StaticFiles

            app.mount("/ui", StaticFiles(directory=frontend_path, html=True), name="ui")

    return app

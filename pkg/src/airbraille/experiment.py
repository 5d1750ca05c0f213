"""Stateful study sessions: trial ordering, response capture, persistence.

A session walks a participant through a training block followed by an
actual block for each stimulation method.  Method order comes from a
cyclic Latin square (or a seeded shuffle), pattern order from a balanced
seeded draw.  Every mutation appends one JSON line to the session log,
so a crash loses at most the in-flight trial and any log replays back
into an identical session.
"""

from __future__ import annotations

import json
import random
import threading
import time
import uuid
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional, Sequence

from .analysis import (
    Phase,
    TrialRecord,
    likert_median,
    report_to_json,
    statistics_report,
    sus_participant_score,
)
from .braille import encode_char

DEFAULT_METHODS = ("constant", "point_by_point", "row_by_row")
DEFAULT_ALPHABET = "1234567890"

# Client-reported elapsed times that disagree with the server clock by
# more than this factor are flagged, not rejected.
TIMING_DISAGREEMENT_FACTOR = 10.0


class InvalidConfig(ValueError):
    pass


class UnknownSession(KeyError):
    pass


class UnknownTrial(KeyError):
    pass


class DuplicateResponse(ValueError):
    pass


class SessionIncomplete(ValueError):
    pass


class SessionNotFinalized(ValueError):
    pass


class InvalidResponse(ValueError):
    pass


class ReplayError(ValueError):
    pass


@dataclass(frozen=True)
class Participant:
    id: str
    age: Optional[int] = None
    handedness: Optional[str] = None
    braille_experience_years: Optional[float] = None

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "age": self.age,
            "handedness": self.handedness,
            "braille_experience_years": self.braille_experience_years,
        }


@dataclass(frozen=True)
class SessionConfig:
    participant: Participant
    participant_index: int = 0
    methods: tuple[str, ...] = DEFAULT_METHODS
    trials_per_method: int = 10
    training_per_method: int = 4
    alphabet: str = DEFAULT_ALPHABET
    seed: int = 0
    ordering: str = "counterbalanced"  # or "seeded-random"

    def __post_init__(self) -> None:
        if not self.methods:
            raise InvalidConfig("methods must be non-empty")
        if len(set(self.methods)) != len(self.methods):
            raise InvalidConfig("methods must be distinct")
        if self.trials_per_method < 1:
            raise InvalidConfig("trials_per_method must be >= 1")
        if self.training_per_method < 0:
            raise InvalidConfig("training_per_method must be >= 0")
        if self.participant_index < 0:
            raise InvalidConfig("participant_index must be >= 0")
        if self.ordering == "counterbalanced-latin-square":
            object.__setattr__(self, "ordering", "counterbalanced")
        if self.ordering not in ("counterbalanced", "seeded-random"):
            raise InvalidConfig(f"unknown ordering mode {self.ordering!r}")
        if len(set(self.alphabet)) != len(self.alphabet) or not self.alphabet:
            raise InvalidConfig("alphabet must be non-empty without repeats")
        for ch in self.alphabet:
            try:
                if not encode_char(ch):
                    raise InvalidConfig(f"alphabet character {ch!r} has an empty pattern")
            except Exception as exc:
                raise InvalidConfig(f"alphabet character {ch!r} not encodable: {exc}") from None
        object.__setattr__(self, "methods", tuple(self.methods))

    @property
    def trial_count(self) -> int:
        return len(self.methods) * (self.training_per_method + self.trials_per_method)

    def to_json(self) -> dict:
        return {
            "participant": self.participant.to_json(),
            "participant_index": self.participant_index,
            "methods": list(self.methods),
            "trials_per_method": self.trials_per_method,
            "training_per_method": self.training_per_method,
            "alphabet": self.alphabet,
            "seed": self.seed,
            "ordering": self.ordering,
        }

    @classmethod
    def from_json(cls, data: dict) -> "SessionConfig":
        p = data["participant"]
        return cls(
            participant=Participant(
                id=p["id"],
                age=p.get("age"),
                handedness=p.get("handedness"),
                braille_experience_years=p.get("braille_experience_years"),
            ),
            participant_index=data["participant_index"],
            methods=tuple(data["methods"]),
            trials_per_method=data["trials_per_method"],
            training_per_method=data["training_per_method"],
            alphabet=data["alphabet"],
            seed=data["seed"],
            ordering=data["ordering"],
        )


@dataclass(frozen=True)
class PlannedTrial:
    trial_id: str
    index: int
    phase: Phase
    method: str
    truth_char: str


def method_order(config: SessionConfig, rng: random.Random) -> tuple[str, ...]:
    """Counterbalanced mode rotates a cyclic Latin square by participant
    index, so method/position pairings balance over participant triples."""
    k = len(config.methods)
    if config.ordering == "counterbalanced":
        shift = config.participant_index % k
        return tuple(config.methods[(shift + j) % k] for j in range(k))
    shuffled = list(config.methods)
    rng.shuffle(shuffled)
    return tuple(shuffled)


def balanced_draw(alphabet: str, n: int, rng: random.Random) -> list[str]:
    """n characters where counts differ by at most one; full cycles shuffled."""
    full, remainder = divmod(n, len(alphabet))
    out: list[str] = []
    for _ in range(full):
        cycle = list(alphabet)
        rng.shuffle(cycle)
        out.extend(cycle)
    if remainder:
        out.extend(rng.sample(list(alphabet), remainder))
    return out


def build_trial_plan(config: SessionConfig) -> tuple[PlannedTrial, ...]:
    """Deterministic plan: per method block, training precedes actual."""
    rng = random.Random(config.seed)
    plan: list[PlannedTrial] = []
    index = 0
    for method in method_order(config, rng):
        for phase, count in ((Phase.TRAINING, config.training_per_method),
                             (Phase.ACTUAL, config.trials_per_method)):
            for truth in balanced_draw(config.alphabet, count, rng):
                plan.append(
                    PlannedTrial(
                        trial_id=f"t{index:03d}",
                        index=index,
                        phase=phase,
                        method=method,
                        truth_char=truth,
                    )
                )
                index += 1
    return tuple(plan)


@dataclass(frozen=True)
class Questionnaire:
    """Post-session answers: per-method 7-point items plus the 10 SUS items."""

    mental_demand: dict[str, int]
    comfort: dict[str, int]
    sus_items: tuple[int, ...]

    def validate(self, methods: Sequence[str]) -> None:
        for name, answers in (("mental_demand", self.mental_demand), ("comfort", self.comfort)):
            missing = set(methods) - set(answers)
            if missing:
                raise InvalidConfig(f"{name} answers missing for methods {sorted(missing)}")
            for method, value in answers.items():
                likert_median([value])  # range check
        sus_participant_score(list(self.sus_items))  # length + range check

    def to_json(self) -> dict:
        return {
            "mental_demand": dict(self.mental_demand),
            "comfort": dict(self.comfort),
            "sus_items": list(self.sus_items),
        }

    @classmethod
    def from_json(cls, data: dict) -> "Questionnaire":
        return cls(
            mental_demand=dict(data["mental_demand"]),
            comfort=dict(data["comfort"]),
            sus_items=tuple(data["sus_items"]),
        )


@dataclass(frozen=True)
class SubmitResult:
    phase: Phase
    correct: Optional[bool]  # only disclosed for training trials
    truth_char: Optional[str]
    truth_pattern: Optional[str]


@dataclass
class AnsweredTrial:
    planned: PlannedTrial
    response_char: str
    elapsed_s: float
    server_elapsed_s: Optional[float]
    timing_flagged: bool

    def to_record(self, participant_id: str) -> TrialRecord:
        return TrialRecord(
            participant_id=participant_id,
            method=self.planned.method,
            truth=encode_char(self.planned.truth_char),
            response=encode_char(self.response_char),
            elapsed_s=self.elapsed_s,
            phase=self.planned.phase,
        )

    def to_json(self) -> dict:
        return {
            "trial_id": self.planned.trial_id,
            "index": self.planned.index,
            "phase": self.planned.phase.value,
            "method": self.planned.method,
            "truth": self.planned.truth_char,
            "truth_pattern": encode_char(self.planned.truth_char).as_text(),
            "response": self.response_char,
            "response_pattern": encode_char(self.response_char).as_text(),
            "correct": self.planned.truth_char == self.response_char,
            "elapsed_s": self.elapsed_s,
            "server_elapsed_s": self.server_elapsed_s,
            "timing_flagged": self.timing_flagged,
        }


class Session:
    """Single-participant run; mutations are serialized by an internal lock."""

    def __init__(
        self,
        config: SessionConfig,
        session_id: Optional[str] = None,
        clock: Callable[[], float] = time.monotonic,
    ):
        self.id = session_id or uuid.uuid4().hex
        self.config = config
        self.plan = build_trial_plan(config)
        self.answered: list[AnsweredTrial] = []
        self.questionnaire: Optional[Questionnaire] = None
        self.summary: Optional[dict] = None
        self.summary_json: Optional[str] = None
        self._clock = clock
        self._pending_fetched_at: Optional[float] = None
        self._lock = threading.RLock()

    @property
    def cursor(self) -> int:
        return len(self.answered)

    @property
    def done(self) -> bool:
        return self.cursor >= len(self.plan)

    @property
    def finalized(self) -> bool:
        return self.summary_json is not None

    def next_trial(self) -> Optional[PlannedTrial]:
        """Current pending trial; None when all trials are answered.

        Repeated calls return the same trial (idempotent re-fetch); the
        server timer starts at the first fetch.
        """
        with self._lock:
            if self.done:
                return None
            if self._pending_fetched_at is None:
                self._pending_fetched_at = self._clock()
            return self.plan[self.cursor]

    def submit_response(self, trial_id: str, answer: str, elapsed_s: float) -> SubmitResult:
        with self._lock:
            answered_ids = {a.planned.trial_id for a in self.answered}
            if trial_id in answered_ids:
                raise DuplicateResponse(f"trial {trial_id} already has a response")
            if self.done or trial_id != self.plan[self.cursor].trial_id:
                raise UnknownTrial(f"trial {trial_id} is not the pending trial")
            if elapsed_s < 0:
                raise InvalidResponse("elapsed_s must be >= 0")
            if answer not in self.config.alphabet:
                raise InvalidResponse(f"answer {answer!r} outside the session alphabet")
            planned = self.plan[self.cursor]
            server_elapsed = None
            flagged = False
            if self._pending_fetched_at is not None:
                server_elapsed = self._clock() - self._pending_fetched_at
                hi = max(elapsed_s, server_elapsed)
                lo = max(min(elapsed_s, server_elapsed), 1e-9)
                flagged = hi / lo > TIMING_DISAGREEMENT_FACTOR
            self.answered.append(
                AnsweredTrial(
                    planned=planned,
                    response_char=answer,
                    elapsed_s=elapsed_s,
                    server_elapsed_s=server_elapsed,
                    timing_flagged=flagged,
                )
            )
            self._pending_fetched_at = None
            if planned.phase == Phase.TRAINING:
                return SubmitResult(
                    phase=Phase.TRAINING,
                    correct=planned.truth_char == answer,
                    truth_char=planned.truth_char,
                    truth_pattern=encode_char(planned.truth_char).as_text(),
                )
            return SubmitResult(phase=Phase.ACTUAL, correct=None, truth_char=None, truth_pattern=None)

    def trial_records(self) -> list[TrialRecord]:
        return [a.to_record(self.config.participant.id) for a in self.answered]

    def finalize(self, questionnaire: Questionnaire) -> dict:
        """Validate, run the analysis suite over the actual trials, freeze
        the summary.  Idempotent once finalized with the same answers."""
        with self._lock:
            if not self.done:
                raise SessionIncomplete(
                    f"{len(self.plan) - self.cursor} trials still unanswered"
                )
            questionnaire.validate(self.config.methods)
            self.questionnaire = questionnaire
            self.summary = statistics_report(
                self.trial_records(),
                methods=self.config.methods,
                mental_demand={m: [questionnaire.mental_demand[m]] for m in self.config.methods},
                comfort={m: [questionnaire.comfort[m]] for m in self.config.methods},
                sus_items=[list(questionnaire.sus_items)],
            )
            self.summary_json = report_to_json(self.summary)
            return self.summary


class SessionStore:
    """Registry of live sessions with per-session append-only JSONL logs."""

    def __init__(self, directory: Optional[Path] = None, clock: Callable[[], float] = time.monotonic):
        self.directory = Path(directory) if directory is not None else None
        if self.directory is not None:
            self.directory.mkdir(parents=True, exist_ok=True)
        self._clock = clock
        self._sessions: dict[str, Session] = {}
        self._buffers: dict[str, list[str]] = {}
        self._lock = threading.Lock()

    def log_path(self, session_id: str) -> Optional[Path]:
        if self.directory is None:
            return None
        return self.directory / f"{session_id}.jsonl"

    def _append(self, session_id: str, record: dict) -> None:
        line = json.dumps(record)
        self._buffers.setdefault(session_id, []).append(line)
        path = self.log_path(session_id)
        if path is not None:
            with path.open("a") as fh:
                fh.write(line + "\n")
                fh.flush()

    def log_lines(self, session_id: str) -> list[str]:
        return list(self._buffers.get(session_id, []))

    def create(self, config: SessionConfig, session_id: Optional[str] = None) -> Session:
        session = Session(config, session_id=session_id, clock=self._clock)
        with self._lock:
            if session.id in self._sessions:
                raise InvalidConfig(f"session id {session.id} already exists")
            self._sessions[session.id] = session
        self._append(session.id, {"record": "config", "session_id": session.id, **config.to_json()})
        return session

    def get(self, session_id: str) -> Session:
        try:
            return self._sessions[session_id]
        except KeyError:
            raise UnknownSession(session_id) from None

    def submit_response(self, session_id: str, trial_id: str, answer: str, elapsed_s: float) -> SubmitResult:
        session = self.get(session_id)
        result = session.submit_response(trial_id, answer, elapsed_s)
        self._append(session_id, {"record": "trial", **session.answered[-1].to_json()})
        return result

    def finalize(self, session_id: str, questionnaire: Questionnaire) -> dict:
        session = self.get(session_id)
        summary = session.finalize(questionnaire)
        self._append(session_id, {"record": "questionnaire", **questionnaire.to_json()})
        self._append(session_id, {"record": "summary", "report": summary})
        return summary

    def load_from_disk(self, session_id: str) -> Session:
        """Rebuild a session from its log file (crash recovery)."""
        path = self.log_path(session_id)
        if path is None or not path.exists():
            raise UnknownSession(session_id)
        session = replay_log(path.read_text().splitlines(), clock=self._clock)
        with self._lock:
            self._sessions[session.id] = session
        self._buffers[session.id] = [
            json.dumps(json.loads(line)) for line in path.read_text().splitlines() if line.strip()
        ]
        return session


def parse_log(lines: Sequence[str]) -> dict:
    """Split a session log into its record groups."""
    config = None
    session_id = None
    trials = []
    questionnaire = None
    summary = None
    for raw in lines:
        raw = raw.strip()
        if not raw:
            continue
        record = json.loads(raw)
        kind = record.get("record")
        if kind == "config":
            config = SessionConfig.from_json(record)
            session_id = record["session_id"]
        elif kind == "trial":
            trials.append(record)
        elif kind == "questionnaire":
            questionnaire = Questionnaire.from_json(record)
        elif kind == "summary":
            summary = record["report"]
        else:
            raise ReplayError(f"unknown record kind {kind!r}")
    if config is None:
        raise ReplayError("log has no config record")
    return {
        "config": config,
        "session_id": session_id,
        "trials": trials,
        "questionnaire": questionnaire,
        "summary": summary,
    }


def replay_log(lines: Sequence[str], clock: Callable[[], float] = time.monotonic) -> Session:
    """Reconstruct a session by re-running every recorded response.

    The regenerated plan must agree with the recorded truths; finalize on
    the result reproduces the stored analysis bytes exactly.
    """
    parsed = parse_log(lines)
    session = Session(parsed["config"], session_id=parsed["session_id"], clock=clock)
    for record in parsed["trials"]:
        pending = session.next_trial()
        if pending is None or pending.trial_id != record["trial_id"]:
            raise ReplayError(f"log trial {record['trial_id']} does not match the plan")
        if pending.truth_char != record["truth"]:
            raise ReplayError(
                f"trial {record['trial_id']}: log truth {record['truth']!r} "
                f"!= regenerated {pending.truth_char!r} (seed mismatch?)"
            )
        session.submit_response(record["trial_id"], record["response"], record["elapsed_s"])
    if parsed["questionnaire"] is not None and session.done:
        session.finalize(parsed["questionnaire"])
    return session


def records_from_log(lines: Sequence[str]) -> tuple[SessionConfig, list[TrialRecord], Optional[Questionnaire]]:
    """Trial records and questionnaire straight from a log (no re-run)."""
    parsed = parse_log(lines)
    config: SessionConfig = parsed["config"]
    records = [
        TrialRecord(
            participant_id=config.participant.id,
            method=r["method"],
            truth=encode_char(r["truth"]),
            response=encode_char(r["response"]),
            elapsed_s=r["elapsed_s"],
            phase=Phase(r["phase"]),
        )
        for r in parsed["trials"]
    ]
    return config, records, parsed["questionnaire"]

"""Statistics over experiment transcripts.

Covers per-method accuracy and response time, digit confusion matrices,
the perceptual error taxonomy, Friedman tests (chi-square approximation
with average-rank tie handling, plus an exact permutation mode for small
samples), Likert medians and SUS scoring.
"""

from __future__ import annotations

import enum
import itertools
import json
import statistics
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from scipy.stats import chi2 as _chi2_dist

from .braille import Alphabet, DotPattern, decode_pattern, pattern_diff

DIGIT_LABELS = tuple("1234567890")


class UndecodableResponse(ValueError):
    pass


class EmptyInput(ValueError):
    pass


class DegenerateInput(ValueError):
    pass


class OutOfRangeItem(ValueError):
    pass


class Phase(str, enum.Enum):
    TRAINING = "training"
    ACTUAL = "actual"


@dataclass(frozen=True)
class TrialRecord:
    """One presentation: who, which method, what was shown and answered."""

    participant_id: str
    method: str
    truth: DotPattern
    response: DotPattern
    elapsed_s: float
    phase: Phase = Phase.ACTUAL

    def __post_init__(self) -> None:
        if self.elapsed_s < 0:
            raise ValueError("elapsed time must be >= 0")

    @property
    def correct(self) -> bool:
        return self.truth.cells == self.response.cells


class ErrorKind(str, enum.Enum):
    CORRECT = "correct"
    SINGLE_FALSE_NEGATIVE = "single_false_negative"
    SINGLE_FALSE_POSITIVE = "single_false_positive"
    SUBSTITUTED_POINT = "substituted_point"
    MULTIPLE_OMISSION = "multiple_omission"
    OTHER = "other"


@dataclass(frozen=True)
class ErrorClass:
    kind: ErrorKind
    missing: int
    extra: int


def classify_error(truth: DotPattern, response: DotPattern) -> ErrorClass:
    """Total classification of a response against the presented pattern."""
    missing, extra = pattern_diff(truth, response)
    m, e = len(missing), len(extra)
    if m == 0 and e == 0:
        kind = ErrorKind.CORRECT
    elif m == 1 and e == 0:
        kind = ErrorKind.SINGLE_FALSE_NEGATIVE
    elif m == 0 and e == 1:
        kind = ErrorKind.SINGLE_FALSE_POSITIVE
    elif m == 1 and e == 1:
        kind = ErrorKind.SUBSTITUTED_POINT
    elif m >= 2 and e == 0:
        kind = ErrorKind.MULTIPLE_OMISSION
    else:
        kind = ErrorKind.OTHER
    return ErrorClass(kind=kind, missing=m, extra=e)


@dataclass(frozen=True)
class ConfusionMatrix:
    """Counts of truth (rows) against response (columns) over the digits."""

    labels: tuple[str, ...]
    counts: tuple[tuple[int, ...], ...]

    def row_sum(self, label: str) -> int:
        return sum(self.counts[self.labels.index(label)])

    def at(self, truth: str, response: str) -> int:
        return self.counts[self.labels.index(truth)][self.labels.index(response)]

    def to_csv(self) -> str:
        lines = ["truth," + ",".join(self.labels)]
        for label, row in zip(self.labels, self.counts):
            lines.append(label + "," + ",".join(str(c) for c in row))
        return "\n".join(lines) + "\n"


def _decode_digit(pattern: DotPattern, role: str) -> str:
    char = decode_pattern(pattern, Alphabet.DIGITS)
    if char is None:
        raise UndecodableResponse(f"{role} pattern {pattern.as_text()!r} is not a digit pattern")
    return char


def confusion_matrix(
    trials: Iterable[TrialRecord], phase: Optional[Phase] = Phase.ACTUAL
) -> ConfusionMatrix:
    index = {label: i for i, label in enumerate(DIGIT_LABELS)}
    counts = [[0] * len(DIGIT_LABELS) for _ in DIGIT_LABELS]
    for trial in trials:
        if phase is not None and trial.phase != phase:
            continue
        truth = _decode_digit(trial.truth, "truth")
        response = _decode_digit(trial.response, "response")
        counts[index[truth]][index[response]] += 1
    return ConfusionMatrix(labels=DIGIT_LABELS, counts=tuple(tuple(row) for row in counts))


@dataclass(frozen=True)
class MethodStats:
    mean: float
    sd: float  # sample SD across participants; 0.0 when n == 1
    n_participants: int


def _per_participant(values_by_participant: dict[str, list[float]]) -> MethodStats:
    per = [statistics.fmean(vals) for vals in values_by_participant.values()]
    mean = statistics.fmean(per)
    sd = statistics.stdev(per) if len(per) > 1 else 0.0
    return MethodStats(mean=mean, sd=sd, n_participants=len(per))


def _group_actual(trials: Iterable[TrialRecord]) -> dict[str, dict[str, list[TrialRecord]]]:
    grouped: dict[str, dict[str, list[TrialRecord]]] = {}
    for trial in trials:
        if trial.phase != Phase.ACTUAL:
            continue
        grouped.setdefault(trial.method, {}).setdefault(trial.participant_id, []).append(trial)
    if not grouped:
        raise EmptyInput("no actual-phase trials")
    return grouped


def accuracy_by_method(trials: Iterable[TrialRecord]) -> dict[str, MethodStats]:
    """Per-participant accuracy percentages first, then mean/SD across them."""
    out = {}
    for method, by_participant in _group_actual(trials).items():
        scores = {
            pid: [100.0 * sum(t.correct for t in ts) / len(ts)]
            for pid, ts in by_participant.items()
        }
        out[method] = _per_participant(scores)
    return out


def response_time_by_method(trials: Iterable[TrialRecord]) -> dict[str, MethodStats]:
    out = {}
    for method, by_participant in _group_actual(trials).items():
        times = {pid: [t.elapsed_s for t in ts] for pid, ts in by_participant.items()}
        out[method] = _per_participant(times)
    return out


@dataclass(frozen=True)
class FriedmanResult:
    chi2: float
    df: int
    p: float


def _block_ranks(block: Sequence[float]) -> list[float]:
    return [
        1 + sum(1 for w in block if w < v) + (sum(1 for w in block if w == v) - 1) / 2
        for v in block
    ]


def _friedman_statistic(blocks: Sequence[Sequence[float]]) -> float:
    """Tie-corrected Friedman chi-square; 0.0 when every block is fully tied."""
    n = len(blocks)
    k = len(blocks[0])
    rank_sums = [0.0] * k
    ties = 0.0
    for block in blocks:
        for j, r in enumerate(_block_ranks(block)):
            rank_sums[j] += r
        for value in set(block):
            t = sum(1 for v in block if v == value)
            ties += t**3 - t
    correction = 1 - ties / (n * k * (k**2 - 1))
    if correction == 0:
        return 0.0
    uncorrected = 12.0 / (n * k * (k + 1)) * sum(r * r for r in rank_sums) - 3 * n * (k + 1)
    return uncorrected / correction


def friedman_test(blocks: Sequence[Sequence[float]]) -> FriedmanResult:
    """Friedman test over an n-participants x k-treatments value matrix.

    Ties take average ranks.  When every block is fully tied the ranks
    carry no information: the statistic is 0 and p is 1 (the exact
    permutation distribution is degenerate there).
    """
    n = len(blocks)
    if n < 2:
        raise DegenerateInput("need at least two blocks (participants)")
    k = len(blocks[0])
    if k < 2:
        raise DegenerateInput("need at least two treatments")
    if any(len(b) != k for b in blocks):
        raise ValueError("all blocks must have the same width")
    chi2 = _friedman_statistic(blocks)
    p = float(_chi2_dist.sf(chi2, k - 1)) if chi2 > 0 else 1.0
    return FriedmanResult(chi2=chi2, df=k - 1, p=p)


def friedman_exact_p(blocks: Sequence[Sequence[float]]) -> float:
    """Exact permutation p-value: share of within-block reorderings whose
    statistic reaches the observed one.  Feasible for n <= 8 blocks."""
    n = len(blocks)
    if n < 2:
        raise DegenerateInput("need at least two blocks (participants)")
    if n > 8:
        raise ValueError("exact mode supports at most 8 blocks")
    k = len(blocks[0])
    if k < 2:
        raise DegenerateInput("need at least two treatments")
    observed = _friedman_statistic(blocks)
    at_least = 0
    total = 0
    for combo in itertools.product(*(itertools.permutations(block) for block in blocks)):
        total += 1
        if _friedman_statistic(combo) >= observed - 1e-9:
            at_least += 1
    return at_least / total


@dataclass(frozen=True)
class SusResult:
    mean: float
    sd: float
    n_participants: int


def sus_participant_score(items: Sequence[int]) -> float:
    """Standard SUS scoring for one respondent: ten items on 1..5."""
    if len(items) != 10:
        raise OutOfRangeItem(f"expected 10 items, got {len(items)}")
    total = 0
    for i, item in enumerate(items):
        if not 1 <= item <= 5:
            raise OutOfRangeItem(f"item {i + 1} value {item} outside 1..5")
        total += (item - 1) if i % 2 == 0 else (5 - item)
    return total * 2.5


def sus_score(responses: Sequence[Sequence[int]]) -> SusResult:
    if not responses:
        raise EmptyInput("no SUS responses")
    scores = [sus_participant_score(items) for items in responses]
    sd = statistics.stdev(scores) if len(scores) > 1 else 0.0
    return SusResult(mean=statistics.fmean(scores), sd=sd, n_participants=len(scores))


def likert_median(values: Sequence[int], scale: tuple[int, int] = (1, 7)) -> float:
    if not values:
        raise EmptyInput("no Likert responses")
    lo, hi = scale
    for v in values:
        if not lo <= v <= hi:
            raise OutOfRangeItem(f"Likert value {v} outside {lo}..{hi}")
    return float(statistics.median(values))


def likert_medians(
    responses_by_method: dict[str, Sequence[int]], scale: tuple[int, int] = (1, 7)
) -> dict[str, float]:
    return {method: likert_median(values, scale) for method, values in responses_by_method.items()}


@dataclass(frozen=True)
class ErrorBreakdown:
    n_errors: int
    counts: dict[str, int]
    shares_pct: dict[str, float]
    single_point_share_pct: Optional[float]  # (single FN + single FP) / errors


def error_breakdown(trials: Iterable[TrialRecord], phase: Optional[Phase] = Phase.ACTUAL) -> ErrorBreakdown:
    """Distribution of incorrect trials over the error taxonomy."""
    counts: dict[str, int] = {}
    n_errors = 0
    for trial in trials:
        if phase is not None and trial.phase != phase:
            continue
        classified = classify_error(trial.truth, trial.response)
        if classified.kind is ErrorKind.CORRECT:
            continue
        n_errors += 1
        counts[classified.kind.value] = counts.get(classified.kind.value, 0) + 1
    if n_errors == 0:
        return ErrorBreakdown(n_errors=0, counts={}, shares_pct={}, single_point_share_pct=None)
    shares = {kind: 100.0 * c / n_errors for kind, c in counts.items()}
    single = counts.get(ErrorKind.SINGLE_FALSE_NEGATIVE.value, 0) + counts.get(
        ErrorKind.SINGLE_FALSE_POSITIVE.value, 0
    )
    return ErrorBreakdown(
        n_errors=n_errors,
        counts=counts,
        shares_pct=shares,
        single_point_share_pct=100.0 * single / n_errors,
    )


def _method_stats_json(stats: dict[str, MethodStats], methods: Sequence[str]) -> dict:
    return {
        m: {
            "mean": stats[m].mean,
            "sd": stats[m].sd,
            "n_participants": stats[m].n_participants,
        }
        for m in methods
        if m in stats
    }


def _friedman_json(blocks: list[list[float]]) -> Optional[dict]:
    if len(blocks) < 2:
        return None
    result = friedman_test(blocks)
    return {"chi2": result.chi2, "df": result.df, "p": result.p}


def statistics_report(
    trials: Sequence[TrialRecord],
    methods: Optional[Sequence[str]] = None,
    mental_demand: Optional[dict[str, Sequence[int]]] = None,
    comfort: Optional[dict[str, Sequence[int]]] = None,
    sus_items: Optional[Sequence[Sequence[int]]] = None,
) -> dict:
    """Full statistics block with a fixed key order (JSON-ready).

    Friedman entries appear when at least two participants completed
    every method; questionnaire sections appear when data is supplied.
    """
    actual = [t for t in trials if t.phase == Phase.ACTUAL]
    if methods is None:
        methods = sorted({t.method for t in actual})
    accuracy = accuracy_by_method(trials)
    times = response_time_by_method(trials)

    participants = sorted({t.participant_id for t in actual})
    complete = [
        pid
        for pid in participants
        if all(any(t.participant_id == pid and t.method == m for t in actual) for m in methods)
    ]

    def blocks_of(stat: str) -> list[list[float]]:
        rows = []
        for pid in complete:
            row = []
            for m in methods:
                own = [t for t in actual if t.participant_id == pid and t.method == m]
                if stat == "accuracy":
                    row.append(100.0 * sum(t.correct for t in own) / len(own))
                else:
                    row.append(statistics.fmean(t.elapsed_s for t in own))
            rows.append(row)
        return rows

    breakdown = error_breakdown(trials)
    report = {
        "n_participants": len(participants),
        "methods": list(methods),
        "trial_counts": {
            "training": sum(1 for t in trials if t.phase == Phase.TRAINING),
            "actual": len(actual),
        },
        "accuracy_by_method": _method_stats_json(accuracy, methods),
        "response_time_by_method": _method_stats_json(times, methods),
        "friedman": {
            "accuracy": _friedman_json(blocks_of("accuracy")),
            "response_time": _friedman_json(blocks_of("time")),
        },
        "confusion_matrix": {
            "labels": list(DIGIT_LABELS),
            "rows": [list(row) for row in confusion_matrix(trials).counts],
        },
        "error_breakdown": {
            "n_errors": breakdown.n_errors,
            "counts": {k.value: breakdown.counts.get(k.value, 0) for k in ErrorKind if k is not ErrorKind.CORRECT},
            "shares_pct": {k: breakdown.shares_pct[k] for k in sorted(breakdown.shares_pct)},
            "single_point_share_pct": breakdown.single_point_share_pct,
        },
    }
    if mental_demand is not None:
        report["mental_demand_median"] = {
            m: likert_medians(mental_demand)[m] for m in methods if m in mental_demand
        }
    if comfort is not None:
        report["comfort_median"] = {m: likert_medians(comfort)[m] for m in methods if m in comfort}
    if sus_items is not None:
        sus = sus_score(sus_items)
        report["sus"] = {"mean": sus.mean, "sd": sus.sd, "n_participants": sus.n_participants}
    return report


def report_to_json(report: dict) -> str:
    return json.dumps(report, indent=2) + "\n"

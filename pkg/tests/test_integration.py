"""Study-scale integration: eleven participants through the full pipeline."""

import json
import random

import pytest
from click.testing import CliRunner

from airbraille.cli import main
from airbraille.experiment import Participant, Questionnaire, SessionConfig, SessionStore

METHODS = ("constant", "point_by_point", "row_by_row")
DIGITS = "1234567890"

# Misreadings drawn from plausible one-dot confusions, keyed by truth.
CONFUSABLE = {"7": "6", "8": "5", "9": "6", "4": "0", "5": "1", "0": "9"}


@pytest.fixture(scope="module")
def study_logs(tmp_path_factory):
    root = tmp_path_factory.mktemp("study")
    store = SessionStore(root)
    rng = random.Random(99)
    for index in range(11):
        config = SessionConfig(
            participant=Participant(id=f"p{index:02d}", age=19 + index * 4),
            participant_index=index,
            seed=1000 + index,
        )
        session = store.create(config, session_id=f"s{index:02d}")
        while True:
            trial = session.next_trial()
            if trial is None:
                break
            answer = trial.truth_char
            # ~15% of actual responses slip to a neighboring pattern.
            if trial.phase.value == "actual" and rng.random() < 0.15:
                answer = CONFUSABLE.get(trial.truth_char, "1" if trial.truth_char != "1" else "2")
            store.submit_response(session.id, trial.trial_id, answer, rng.uniform(3.0, 12.0))
        store.finalize(
            session.id,
            Questionnaire(
                mental_demand={m: rng.randint(2, 5) for m in METHODS},
                comfort={m: rng.randint(3, 6) for m in METHODS},
                sus_items=tuple(rng.randint(3, 5) if i % 2 == 0 else rng.randint(1, 3) for i in range(10)),
            ),
        )
    return sorted(root.glob("*.jsonl"))


def test_cli_report_over_eleven_participants(study_logs):
    runner = CliRunner()
    result = runner.invoke(main, ["analyze", *[str(p) for p in study_logs]])
    assert result.exit_code == 0, result.output
    report = json.loads(result.output)

    assert report["n_participants"] == 11
    assert report["methods"] == list(METHODS)
    assert report["trial_counts"] == {"training": 11 * 12, "actual": 11 * 30}

    # Every digit is presented once per method block: 11 x 3 = 33 per digit.
    rows = report["confusion_matrix"]["rows"]
    assert all(sum(row) == 33 for row in rows)

    for method in METHODS:
        stats = report["accuracy_by_method"][method]
        assert stats["n_participants"] == 11
        assert 60.0 <= stats["mean"] <= 100.0
        time_stats = report["response_time_by_method"][method]
        assert 3.0 <= time_stats["mean"] <= 12.0

    for key in ("accuracy", "response_time"):
        friedman = report["friedman"][key]
        assert friedman["df"] == 2
        assert 0.0 <= friedman["p"] <= 1.0

    breakdown = report["error_breakdown"]
    assert breakdown["n_errors"] > 0
    assert sum(breakdown["shares_pct"].values()) == pytest.approx(100.0)
    assert set(report["mental_demand_median"]) == set(METHODS)
    assert report["sus"]["n_participants"] == 11
    assert 0.0 <= report["sus"]["mean"] <= 100.0


def test_confusion_csv_matches_report(study_logs, tmp_path):
    runner = CliRunner()
    csv_path = tmp_path / "confusion.csv"
    result = runner.invoke(
        main, ["analyze", *[str(p) for p in study_logs], "--confusion-csv", str(csv_path), "-o", str(tmp_path / "r.json")]
    )
    assert result.exit_code == 0
    report = json.loads((tmp_path / "r.json").read_text())
    lines = csv_path.read_text().splitlines()
    assert lines[0].split(",")[1:] == list(DIGITS)
    for label_row, report_row in zip(lines[1:], report["confusion_matrix"]["rows"]):
        assert [int(v) for v in label_row.split(",")[1:]] == report_row


def test_every_session_replays_identically(study_logs):
    from airbraille.experiment import replay_log

    for path in study_logs:
        lines = path.read_text().splitlines()
        replayed = replay_log(lines)
        stored_summary = json.loads(lines[-1])["report"]
        assert replayed.summary == stored_summary

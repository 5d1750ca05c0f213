"""Command-line front end: encode, schedule, simulate, analyze, serve.

Subcommands are thin wrappers over the library so batch runs stay
deterministic and offline; `serve` hosts the HTTP API.  Exit codes:
0 success, 2 validation error, 3 runtime error.
"""

from __future__ import annotations

import functools
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import click

from .acoustics import (
    ArrayConfig,
    GridSpec,
    PeakNotFound,
    evaluate_field,
    expand_frames,
    field_to_csv,
    focal_metrics,
    frames_to_jsonl,
    solve_multi,
    solve_single,
    zero_field,
)
from .analysis import confusion_matrix, report_to_json, statistics_report
from .braille import encode_char
from .experiment import records_from_log
from .scheduling import (
    CellFrequencies,
    LayoutConfig,
    ScheduleOptions,
    build_schedule,
    sample_schedule,
    schedule_from_json,
    schedule_to_json,
)

VALIDATION_EXIT = 2
RUNTIME_EXIT = 3


@dataclass
class RunManifest:
    """Config overrides shared by the subcommands; flags beat file values."""

    layout: dict = field(default_factory=dict)
    frequencies: dict = field(default_factory=dict)
    array: dict = field(default_factory=dict)
    method_params: dict = field(default_factory=dict)
    seed: int = 0

    @classmethod
    def load(cls, path: Optional[str]) -> "RunManifest":
        if path is None:
            return cls()
        data = json.loads(Path(path).read_text())
        unknown = set(data) - {"layout", "frequencies", "array", "method_params", "seed"}
        if unknown:
            raise ValueError(f"unknown manifest keys: {sorted(unknown)}")
        return cls(
            layout=data.get("layout", {}),
            frequencies=data.get("frequencies", {}),
            array=data.get("array", {}),
            method_params=data.get("method_params", {}),
            seed=data.get("seed", 0),
        )

    def layout_config(self, spacing: Optional[float], height: Optional[float], mirror_x: Optional[bool]) -> LayoutConfig:
        values = dict(self.layout)
        if spacing is not None:
            values["cell_spacing_m"] = spacing
        if height is not None:
            values["plane_height_m"] = height
        if mirror_x is not None:
            values["mirror_x"] = mirror_x
        return LayoutConfig(**values)

    def cell_frequencies(self) -> CellFrequencies:
        if not self.frequencies:
            return CellFrequencies()
        base = CellFrequencies().by_cell | {int(k): float(v) for k, v in self.frequencies.items()}
        return CellFrequencies(base)

    def array_config(self) -> ArrayConfig:
        return ArrayConfig(**self.array)

    def schedule_options(self, **overrides) -> ScheduleOptions:
        values = dict(self.method_params)
        values.update({k: v for k, v in overrides.items() if v is not None})
        return ScheduleOptions(**values)


def _fail(message: str, code: int) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def handles_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except PeakNotFound as exc:
            _fail(str(exc), RUNTIME_EXIT)
        except (ValueError, KeyError, TypeError) as exc:
            _fail(str(exc), VALIDATION_EXIT)
        except OSError as exc:
            _fail(str(exc), RUNTIME_EXIT)

    return wrapper


def _write_or_print(text: str, output: Optional[str]) -> None:
    if output is None or output == "-":
        click.echo(text, nl=False)
    else:
        Path(output).write_text(text)


def _cells_text(pattern) -> str:
    return "{" + ",".join(str(c) for c in pattern) + "}"


@click.group()
@click.version_option()
def main():
    """Braille renderer and simulator for mid-air ultrasonic haptics."""


@main.command("encode")
@click.argument("text")
@handles_errors
def cmd_encode(text: str):
    """Print the dot cells for each character in TEXT."""
    parts = [f"{ch}:{_cells_text(encode_char(ch))}" for ch in text]
    if parts:
        click.echo(" ".join(parts))


@main.command("schedule")
@click.argument("character")
@click.option("--method", default="constant", show_default=True, help="Stimulation method id.")
@click.option("--layout-spacing-m", type=float, default=None, help="Distance between cell centers.")
@click.option("--height-m", type=float, default=None, help="Display plane height above the array.")
@click.option("--mirror-x/--no-mirror-x", default=None, help="Mirror the pattern left-right.")
@click.option("--loop/--no-loop", "loop", default=None, help="Replay bounded schedules in a loop.")
@click.option("--seed", type=int, default=None, help="Override the manifest seed.")
@click.option("--manifest", type=click.Path(exists=True), default=None, help="JSON config overrides.")
@click.option("-o", "--output", default=None, help="Schedule file path (default: stdout).")
@handles_errors
def cmd_schedule(character, method, layout_spacing_m, height_m, mirror_x, loop, seed, manifest, output):
    """Write the emission schedule document for CHARACTER."""
    run = RunManifest.load(manifest)
    if seed is not None:
        run.seed = seed
    layout = run.layout_config(layout_spacing_m, height_m, mirror_x)
    options = run.schedule_options(loop=loop)
    pattern = encode_char(character)
    schedule = build_schedule(pattern, method, layout=layout, freqs=run.cell_frequencies(), options=options)
    _write_or_print(schedule_to_json(schedule), output)


@main.command("simulate")
@click.argument("schedule_file", type=click.Path(exists=True))
@click.option("--t-s", type=float, default=0.0025, show_default=True, help="Sampling instant.")
@click.option("--grid-res-m", type=float, default=0.001, show_default=True, help="Grid resolution.")
@click.option("--grid-half-extent-m", type=float, default=None,
              help="Half extent of the evaluation patch (default: auto around the points).")
@click.option("--iterations", type=int, default=30, show_default=True, help="Phase retrieval iterations.")
@click.option("--control-rate-hz", type=float, default=1000.0, show_default=True,
              help="Frame expansion rate for --frames-jsonl.")
@click.option("--frames-t0", type=float, default=0.0, show_default=True)
@click.option("--frames-t1", type=float, default=None, help="Frame window end (default: one period).")
@click.option("--frames-jsonl", default=None, help="Also write a frame stream to this path.")
@click.option("--field-csv", default=None, help="Write the sampled field grid to this path.")
@click.option("--seed", type=int, default=None, help="Override the manifest seed.")
@click.option("--manifest", type=click.Path(exists=True), default=None, help="JSON config overrides.")
@click.option("-o", "--output", default=None, help="Metrics report path (default: stdout).")
@handles_errors
def cmd_simulate(schedule_file, t_s, grid_res_m, grid_half_extent_m, iterations, control_rate_hz,
                 frames_t0, frames_t1, frames_jsonl, field_csv, seed, manifest, output):
    """Solve and verify the field for one instant of a schedule file."""
    run = RunManifest.load(manifest)
    if seed is not None:
        run.seed = seed
    cfg = run.array_config()
    schedule = schedule_from_json(Path(schedule_file).read_text())

    if frames_jsonl is not None:
        t1 = frames_t1
        if t1 is None:
            t1 = schedule.total_duration_s if schedule.total_duration_s else 1.0
        frames = expand_frames(schedule, cfg, control_rate_hz=control_rate_hz,
                               t0=frames_t0, t1=t1, iterations=iterations)
        Path(frames_jsonl).write_text(frames_to_jsonl(frames, cfg))

    points = sample_schedule(schedule, t_s)
    if not points:
        if schedule.events:
            bases = [e.position for e in schedule.events]
            center = (
                sum(p[0] for p in bases) / len(bases),
                sum(p[1] for p in bases) / len(bases),
                bases[0][2],
            )
        else:
            center = (0.0, 0.0, 0.20)
        grid = GridSpec.xy_patch(center, grid_half_extent_m or 0.03, grid_res_m)
        if field_csv is not None:
            Path(field_csv).write_text(field_to_csv(zero_field(grid)))
        raise PeakNotFound(f"schedule is silent at t = {t_s} s; wrote a zero field")

    positions = [p.position for p in points]
    if len(positions) == 1:
        solution = solve_single(positions[0], cfg)
    else:
        solution = solve_multi(positions, cfg, iterations=iterations)

    cx = sum(p[0] for p in positions) / len(positions)
    cy = sum(p[1] for p in positions) / len(positions)
    cz = positions[0][2]
    if grid_half_extent_m is None:
        spread = max(
            max(abs(p[0] - cx) for p in positions),
            max(abs(p[1] - cy) for p in positions),
        )
        grid_half_extent_m = spread + 0.02
    grid = GridSpec.xy_patch((cx, cy, cz), grid_half_extent_m, grid_res_m)
    fieldsample = evaluate_field(solution, cfg, grid)
    if field_csv is not None:
        Path(field_csv).write_text(field_to_csv(fieldsample))

    metrics = focal_metrics(fieldsample, positions)
    report = {
        "t_s": t_s,
        "n_points": len(positions),
        "points": [
            {
                "target": list(target),
                "modulation_hz": point.mod_freq_hz,
                "envelope_amplitude": point.amplitude,
                "peak_position": list(m.peak_position),
                "peak_magnitude": m.peak_magnitude,
                "fwhm_x_m": m.fwhm_x_m,
                "fwhm_y_m": m.fwhm_y_m,
            }
            for target, point, m in zip(positions, points, metrics.points)
        ],
        "contrast_to_midpoint": metrics.contrast_to_midpoint,
    }
    _write_or_print(json.dumps(report, indent=2) + "\n", output)


@main.command("analyze")
@click.argument("logs", nargs=-1, required=True, type=click.Path(exists=True))
@click.option("--confusion-csv", default=None, help="Also write the confusion matrix CSV here.")
@click.option("-o", "--output", default=None, help="Report path (default: stdout).")
@handles_errors
def cmd_analyze(logs, confusion_csv, output):
    """Run the statistics suite over one or more session logs."""
    all_records = []
    configs = []
    mental_demand: dict[str, list[int]] = {}
    comfort: dict[str, list[int]] = {}
    sus_items = []
    for log_path in logs:
        config, records, questionnaire = records_from_log(Path(log_path).read_text().splitlines())
        configs.append(config)
        all_records.extend(records)
        if questionnaire is not None:
            for method, value in questionnaire.mental_demand.items():
                mental_demand.setdefault(method, []).append(value)
            for method, value in questionnaire.comfort.items():
                comfort.setdefault(method, []).append(value)
            sus_items.append(list(questionnaire.sus_items))

    method_tuples = {c.methods for c in configs}
    if len(method_tuples) == 1:
        methods = list(method_tuples.pop())
    else:
        methods = sorted({m for c in configs for m in c.methods})

    report = statistics_report(
        all_records,
        methods=methods,
        mental_demand=mental_demand or None,
        comfort=comfort or None,
        sus_items=sus_items or None,
    )
    if confusion_csv is not None:
        Path(confusion_csv).write_text(confusion_matrix(all_records).to_csv())
    _write_or_print(report_to_json(report), output)


@main.command("serve")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
@click.option("--storage-dir", default="./sessions", show_default=True,
              help="Directory for append-only session logs.")
@click.option("--frontend-dir", default=None, help="Serve a built trial UI from this directory at /ui.")
@handles_errors
def cmd_serve(host, port, storage_dir, frontend_dir):
    """Host the experiment wire API (and optionally the trial UI)."""
    import uvicorn

    from .service import create_app

    app = create_app(storage_dir=storage_dir, frontend_dir=frontend_dir)
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()

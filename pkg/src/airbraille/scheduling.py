"""Timed emission schedules for presenting a dot pattern on the array.

A schedule turns a DotPattern into positioned, frequency-tagged focal
point emissions under one of nine stimulation methods.  Timing is
computed in integer milliseconds internally so stated totals (e.g. the
2.200 s four-dot point-by-point character) are exact.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from typing import Literal, Optional, Sequence

from .braille import DotPattern

MAX_SIMULTANEOUS_POINTS = 8
MAX_HEIGHT_M = 0.70

# Per-cell amplitude-modulation defaults, Hz.  Fixed across characters so
# each cell keeps a recognizable frequency identity.
DEFAULT_CELL_FREQS_HZ = {1: 200.0, 2: 140.0, 3: 120.0, 4: 160.0, 5: 180.0, 6: 100.0}
MOD_FREQ_RANGE_HZ = (100.0, 200.0)


class InvalidCell(ValueError):
    pass


class EmptyPattern(ValueError):
    pass


class UnknownMethod(ValueError):
    pass


class StimulusMethod(str, enum.Enum):
    CONSTANT = "constant"
    PULSATING = "pulsating"
    ROTATING = "rotating"
    EXPANDING = "expanding"
    VARYING_INTENSITY = "varying_intensity"
    ROW_BY_ROW = "row_by_row"
    COLUMN_BY_COLUMN = "column_by_column"
    POINT_BY_POINT = "point_by_point"
    MORSE_LIKE = "morse_like"

    @classmethod
    def parse(cls, value: "StimulusMethod | str") -> "StimulusMethod":
        if isinstance(value, cls):
            return value
        try:
            return cls(value)
        except ValueError:
            raise UnknownMethod(f"unknown stimulation method {value!r}") from None


METHODS_STUDIED = (
    StimulusMethod.CONSTANT,
    StimulusMethod.POINT_BY_POINT,
    StimulusMethod.ROW_BY_ROW,
)


@dataclass(frozen=True)
class LayoutConfig:
    """Geometry of the displayed character above the array center."""

    cell_spacing_m: float = 0.03
    plane_height_m: float = 0.20
    mirror_x: bool = False

    def __post_init__(self) -> None:
        if self.cell_spacing_m <= 0:
            raise ValueError("cell_spacing_m must be > 0")
        if self.plane_height_m <= 0:
            raise ValueError("plane_height_m must be > 0")


@dataclass(frozen=True)
class CellFrequencies:
    """Modulation frequency per cell, each within the perceivable band."""

    by_cell: dict[int, float] = field(default_factory=lambda: dict(DEFAULT_CELL_FREQS_HZ))

    def __post_init__(self) -> None:
        if set(self.by_cell) != {1, 2, 3, 4, 5, 6}:
            raise ValueError("frequencies must cover cells 1..6 exactly")
        lo, hi = MOD_FREQ_RANGE_HZ
        for cell, freq in self.by_cell.items():
            if not lo <= freq <= hi:
                raise ValueError(f"cell {cell} frequency {freq} Hz outside [{lo}, {hi}]")

    def __getitem__(self, cell: int) -> float:
        return self.by_cell[cell]


def cell_row(cell: int) -> int:
    """Row 1..3, top to bottom."""
    _check_cell(cell)
    return 1 + (cell - 1) % 3


def cell_column(cell: int) -> int:
    """Column 1 (left, cells 1-3) or 2 (right, cells 4-6)."""
    _check_cell(cell)
    return 1 if cell <= 3 else 2


def _check_cell(cell: int) -> None:
    if cell not in (1, 2, 3, 4, 5, 6):
        raise InvalidCell(f"cell index {cell!r} outside 1..6")


def cell_position(cell: int, layout: LayoutConfig | None = None) -> tuple[float, float, float]:
    """Center of a cell in array coordinates (x right, y away, z up)."""
    layout = layout or LayoutConfig()
    _check_cell(cell)
    s = layout.cell_spacing_m
    x = -s / 2 if cell_column(cell) == 1 else s / 2
    if layout.mirror_x:
        x = -x
    y = s * (1 - (cell - 1) % 3)
    return (x, y, layout.plane_height_m)


def grid_center(layout: LayoutConfig | None = None) -> tuple[float, float, float]:
    layout = layout or LayoutConfig()
    return (0.0, 0.0, layout.plane_height_m)


@dataclass(frozen=True)
class CircularTrajectory:
    """Circular orbit around the event's base position, z fixed."""

    radius_m: float
    rev_per_s: float
    clockwise: bool = True

    def offset_at(self, t: float) -> tuple[float, float, float]:
        # Clockwise viewed from above: +x toward -y.
        angle = 2 * math.pi * self.rev_per_s * t
        if self.clockwise:
            angle = -angle
        return (self.radius_m * math.cos(angle), self.radius_m * math.sin(angle), 0.0)

    def to_json(self) -> dict:
        return {
            "kind": "circle",
            "radius_m": self.radius_m,
            "rev_per_s": self.rev_per_s,
            "clockwise": self.clockwise,
        }


@dataclass(frozen=True)
class RadialTrajectory:
    """Scales the base position away from a center point, looping each period."""

    center: tuple[float, float, float]
    scale_from: float
    scale_to: float
    period_s: float

    def scale_at(self, t: float) -> float:
        phase = (t / self.period_s) % 1.0
        return self.scale_from + (self.scale_to - self.scale_from) * phase

    def to_json(self) -> dict:
        return {
            "kind": "radial",
            "center": list(self.center),
            "scale_from": self.scale_from,
            "scale_to": self.scale_to,
            "period_s": self.period_s,
        }


Trajectory = CircularTrajectory | RadialTrajectory


@dataclass(frozen=True)
class SquareWaveGate:
    """On/off gate shared by all events; phase locked to the schedule clock."""

    freq_hz: float
    duty: float = 0.5

    def value_at(self, t: float) -> float:
        return 1.0 if (t * self.freq_hz) % 1.0 < self.duty else 0.0

    def to_json(self) -> dict:
        return {"kind": "square", "freq_hz": self.freq_hz, "duty": self.duty}


@dataclass(frozen=True)
class SineOffsetEnvelope:
    """Slow sinusoidal intensity fluctuation on top of the modulation."""

    base: float
    depth: float
    freq_hz: float

    def value_at(self, t: float) -> float:
        return self.base + self.depth * math.sin(2 * math.pi * self.freq_hz * t)

    def to_json(self) -> dict:
        return {"kind": "sine_offset", "base": self.base, "depth": self.depth, "freq_hz": self.freq_hz}


EnvelopeOverride = SquareWaveGate | SineOffsetEnvelope


@dataclass(frozen=True)
class EmissionEvent:
    """One focal point emission: where, when, how strong, which cell."""

    cell: int
    position: tuple[float, float, float]
    start_s: float
    duration_s: Optional[float]  # None = open-ended
    mod_freq_hz: float
    peak_amplitude: float = 1.0
    trajectory: Optional[Trajectory] = None
    envelope_override: Optional[EnvelopeOverride] = None

    def __post_init__(self) -> None:
        if self.start_s < 0:
            raise ValueError("event start must be >= 0")
        if self.duration_s is not None and self.duration_s <= 0:
            raise ValueError("bounded event duration must be > 0")
        if not 0 < self.peak_amplitude <= 1:
            raise ValueError("peak_amplitude must be in (0, 1]")
        if self.position[2] > MAX_HEIGHT_M:
            raise ValueError(f"event height {self.position[2]} m beyond array range {MAX_HEIGHT_M} m")

    @property
    def end_s(self) -> Optional[float]:
        if self.duration_s is None:
            return None
        return self.start_s + self.duration_s

    def active_at(self, t: float, *, inclusive_end: bool = False) -> bool:
        if t < self.start_s:
            return False
        end = self.end_s
        if end is None:
            return True
        return t <= end if inclusive_end else t < end

    def position_at(self, t: float) -> tuple[float, float, float]:
        if self.trajectory is None:
            return self.position
        if isinstance(self.trajectory, CircularTrajectory):
            ox, oy, oz = self.trajectory.offset_at(t)
            x, y, z = self.position
            return (x + ox, y + oy, z + oz)
        scale = self.trajectory.scale_at(t)
        cx, cy, cz = self.trajectory.center
        x, y, z = self.position
        return (cx + (x - cx) * scale, cy + (y - cy) * scale, cz + (z - cz) * scale)

    def amplitude_at(self, t: float) -> float:
        envelope = 0.5 * (1.0 - math.cos(2 * math.pi * self.mod_freq_hz * t))
        value = self.peak_amplitude * envelope
        if self.envelope_override is not None:
            value *= self.envelope_override.value_at(t)
        return value


@dataclass(frozen=True)
class ActivePoint:
    """Snapshot of one emitting focal point at a sampling instant."""

    cell: int
    position: tuple[float, float, float]
    mod_freq_hz: float
    amplitude: float


@dataclass(frozen=True)
class Schedule:
    method: StimulusMethod
    pattern: DotPattern
    events: tuple[EmissionEvent, ...]
    total_duration_s: Optional[float]  # None = open-ended
    loop: bool = True

    def __post_init__(self) -> None:
        starts = [e.start_s for e in self.events]
        if starts != sorted(starts):
            raise ValueError("events must be sorted by start time")
        if self.total_duration_s is not None and self.total_duration_s < 0:
            raise ValueError("total duration must be >= 0")
        peak = max_simultaneous_events(self.events)
        if peak > MAX_SIMULTANEOUS_POINTS:
            raise ValueError(
                f"{peak} simultaneous points exceeds the {MAX_SIMULTANEOUS_POINTS}-point device limit"
            )

    @property
    def open_ended(self) -> bool:
        return self.total_duration_s is None


def max_simultaneous_events(events: Sequence[EmissionEvent]) -> int:
    """Peak number of concurrently active events over all start instants."""
    peak = 0
    for e in events:
        t = e.start_s
        peak = max(peak, sum(1 for other in events if other.active_at(t)))
    return peak


@dataclass(frozen=True)
class ScheduleOptions:
    """Tunable method parameters; defaults follow the studied presentation."""

    dot_ms: int = 200
    gap_ms: int = 300
    end_pause_ms: int = 500
    row_interval_ms: int = 300
    grid_rows: int = 2  # 4-cell digit grid; rows below grow the span automatically
    loop: bool = True
    peak_amplitude: float = 1.0
    allow_empty: bool = False  # permit the space character's empty schedule
    pulse_rate_hz: float = 2.0
    pulse_duty: float = 0.5
    rotation_radius_m: float = 0.004
    rotation_rev_per_s: float = 2.0
    expand_scale_to: float = 1.5
    expand_period_s: float = 1.0
    intensity_base: float = 0.75
    intensity_depth: float = 0.25
    intensity_freq_hz: float = 1.0


def build_schedule(
    pattern: DotPattern,
    method: StimulusMethod | str,
    layout: LayoutConfig | None = None,
    freqs: CellFrequencies | None = None,
    options: ScheduleOptions | None = None,
) -> Schedule:
    """Construct the emission schedule for one character under one method."""
    method = StimulusMethod.parse(method)
    layout = layout or LayoutConfig()
    freqs = freqs or CellFrequencies()
    opts = options or ScheduleOptions()

    if not pattern and not opts.allow_empty:
        raise EmptyPattern("pattern has no raised cells (pass allow_empty for the space character)")

    cells = sorted(pattern.cells)
    builder = _BUILDERS[method]
    events, total_ms = builder(cells, layout, freqs, opts)
    total_s = None if total_ms is None else total_ms / 1000.0
    return Schedule(
        method=method,
        pattern=pattern,
        events=tuple(events),
        total_duration_s=total_s,
        loop=opts.loop if total_ms is not None else False,
    )


def _constant_family(
    cells: list[int],
    layout: LayoutConfig,
    freqs: CellFrequencies,
    opts: ScheduleOptions,
    trajectory_for=None,
    envelope: Optional[EnvelopeOverride] = None,
) -> tuple[list[EmissionEvent], None]:
    events = []
    for cell in cells:
        pos = cell_position(cell, layout)
        events.append(
            EmissionEvent(
                cell=cell,
                position=pos,
                start_s=0.0,
                duration_s=None,
                mod_freq_hz=freqs[cell],
                peak_amplitude=opts.peak_amplitude,
                trajectory=trajectory_for(pos) if trajectory_for else None,
                envelope_override=envelope,
            )
        )
    return events, None


def _build_constant(cells, layout, freqs, opts):
    return _constant_family(cells, layout, freqs, opts)


def _build_pulsating(cells, layout, freqs, opts):
    gate = SquareWaveGate(freq_hz=opts.pulse_rate_hz, duty=opts.pulse_duty)
    return _constant_family(cells, layout, freqs, opts, envelope=gate)


def _build_rotating(cells, layout, freqs, opts):
    orbit = CircularTrajectory(radius_m=opts.rotation_radius_m, rev_per_s=opts.rotation_rev_per_s)
    return _constant_family(cells, layout, freqs, opts, trajectory_for=lambda pos: orbit)


def _build_expanding(cells, layout, freqs, opts):
    positions = [cell_position(c, layout) for c in cells]
    n = len(positions)
    centroid = (
        sum(p[0] for p in positions) / n,
        sum(p[1] for p in positions) / n,
        sum(p[2] for p in positions) / n,
    )
    trajectory = RadialTrajectory(
        center=centroid, scale_from=1.0, scale_to=opts.expand_scale_to, period_s=opts.expand_period_s
    )
    return _constant_family(cells, layout, freqs, opts, trajectory_for=lambda pos: trajectory)


def _build_varying_intensity(cells, layout, freqs, opts):
    envelope = SineOffsetEnvelope(
        base=opts.intensity_base, depth=opts.intensity_depth, freq_hz=opts.intensity_freq_hz
    )
    return _constant_family(cells, layout, freqs, opts, envelope=envelope)


def _build_point_by_point(cells, layout, freqs, opts):
    events = []
    step_ms = opts.dot_ms + opts.gap_ms
    for i, cell in enumerate(cells):
        events.append(
            EmissionEvent(
                cell=cell,
                position=cell_position(cell, layout),
                start_s=(i * step_ms) / 1000.0,
                duration_s=opts.dot_ms / 1000.0,
                mod_freq_hz=freqs[cell],
                peak_amplitude=opts.peak_amplitude,
            )
        )
    n = len(cells)
    total_ms = n * opts.dot_ms + max(n - 1, 0) * opts.gap_ms + opts.end_pause_ms
    return events, total_ms


def _build_row_by_row(cells, layout, freqs, opts):
    # Silent intervals are kept for empty rows so row index stays readable
    # from elapsed time; digit characters always span two rows.
    span = max(opts.grid_rows, max((cell_row(c) for c in cells), default=0))
    events = []
    for row_index in range(1, span + 1):
        start_ms = (row_index - 1) * opts.row_interval_ms
        for cell in cells:
            if cell_row(cell) != row_index:
                continue
            events.append(
                EmissionEvent(
                    cell=cell,
                    position=cell_position(cell, layout),
                    start_s=start_ms / 1000.0,
                    duration_s=opts.row_interval_ms / 1000.0,
                    mod_freq_hz=freqs[cell],
                    peak_amplitude=opts.peak_amplitude,
                )
            )
    return events, span * opts.row_interval_ms


def _build_column_by_column(cells, layout, freqs, opts):
    span = 2  # six-dot grid always has two columns
    events = []
    for col_index in range(1, span + 1):
        start_ms = (col_index - 1) * opts.row_interval_ms
        for cell in cells:
            if cell_column(cell) != col_index:
                continue
            events.append(
                EmissionEvent(
                    cell=cell,
                    position=cell_position(cell, layout),
                    start_s=start_ms / 1000.0,
                    duration_s=opts.row_interval_ms / 1000.0,
                    mod_freq_hz=freqs[cell],
                    peak_amplitude=opts.peak_amplitude,
                )
            )
    return events, span * opts.row_interval_ms


def _build_morse_like(cells, layout, freqs, opts):
    # All six cell slots are scanned at one central position; absent cells
    # leave their slot silent, so every character shares the same cadence.
    center = grid_center(layout)
    step_ms = opts.dot_ms + opts.gap_ms
    events = []
    for cell in cells:
        events.append(
            EmissionEvent(
                cell=cell,
                position=center,
                start_s=((cell - 1) * step_ms) / 1000.0,
                duration_s=opts.dot_ms / 1000.0,
                mod_freq_hz=freqs[cell],
                peak_amplitude=opts.peak_amplitude,
            )
        )
    total_ms = 6 * opts.dot_ms + 5 * opts.gap_ms + opts.end_pause_ms
    return events, total_ms


_BUILDERS = {
    StimulusMethod.CONSTANT: _build_constant,
    StimulusMethod.PULSATING: _build_pulsating,
    StimulusMethod.ROTATING: _build_rotating,
    StimulusMethod.EXPANDING: _build_expanding,
    StimulusMethod.VARYING_INTENSITY: _build_varying_intensity,
    StimulusMethod.ROW_BY_ROW: _build_row_by_row,
    StimulusMethod.COLUMN_BY_COLUMN: _build_column_by_column,
    StimulusMethod.POINT_BY_POINT: _build_point_by_point,
    StimulusMethod.MORSE_LIKE: _build_morse_like,
}

PastEnd = Literal["wrap", "silence", "clamp"]


def sample_schedule(
    schedule: Schedule, t: float, past_end: Optional[PastEnd] = None
) -> list[ActivePoint]:
    """Active focal points at time t, with trajectory and envelope applied.

    For bounded schedules, t beyond the total duration wraps when the
    schedule loops, otherwise returns silence; "clamp" holds the final
    instant.  The modulation envelope is phase locked to the (wrapped)
    schedule clock: 0.5 * (1 - cos(2 pi f t)).
    """
    if t < 0:
        raise ValueError("sample time must be >= 0")
    total = schedule.total_duration_s
    inclusive_end = False
    if total is not None and t >= total:
        mode = past_end or ("wrap" if schedule.loop else "silence")
        if mode == "silence":
            return []
        if mode == "wrap":
            t = t % total if total > 0 else 0.0
        else:  # clamp
            t = total
            inclusive_end = True

    points = []
    for event in schedule.events:
        if not event.active_at(t, inclusive_end=inclusive_end):
            continue
        points.append(
            ActivePoint(
                cell=event.cell,
                position=event.position_at(t),
                mod_freq_hz=event.mod_freq_hz,
                amplitude=event.amplitude_at(t),
            )
        )
    return points


SCHEDULE_FORMAT = "airbraille-schedule/1"


def schedule_to_document(schedule: Schedule) -> dict:
    """Self-describing document form with a stable field order."""
    events = []
    for e in schedule.events:
        entry: dict = {
            "cell": e.cell,
            "x": e.position[0],
            "y": e.position[1],
            "z": e.position[2],
            "start_s": e.start_s,
            "duration_s": "open" if e.duration_s is None else e.duration_s,
            "freq_hz": e.mod_freq_hz,
            "amplitude": e.peak_amplitude,
        }
        if e.trajectory is not None:
            entry["trajectory"] = e.trajectory.to_json()
        if e.envelope_override is not None:
            entry["envelope"] = e.envelope_override.to_json()
        events.append(entry)
    return {
        "format": SCHEDULE_FORMAT,
        "method": schedule.method.value,
        "pattern": schedule.pattern.as_text(),
        "total_duration_s": "open" if schedule.total_duration_s is None else schedule.total_duration_s,
        "loop": schedule.loop,
        "events": events,
    }


def schedule_to_json(schedule: Schedule) -> str:
    return json.dumps(schedule_to_document(schedule), indent=2) + "\n"


def _trajectory_from_json(data: dict) -> Trajectory:
    if data["kind"] == "circle":
        return CircularTrajectory(
            radius_m=data["radius_m"], rev_per_s=data["rev_per_s"], clockwise=data["clockwise"]
        )
    if data["kind"] == "radial":
        return RadialTrajectory(
            center=tuple(data["center"]),
            scale_from=data["scale_from"],
            scale_to=data["scale_to"],
            period_s=data["period_s"],
        )
    raise ValueError(f"unknown trajectory kind {data.get('kind')!r}")


def _envelope_from_json(data: dict) -> EnvelopeOverride:
    if data["kind"] == "square":
        return SquareWaveGate(freq_hz=data["freq_hz"], duty=data["duty"])
    if data["kind"] == "sine_offset":
        return SineOffsetEnvelope(base=data["base"], depth=data["depth"], freq_hz=data["freq_hz"])
    raise ValueError(f"unknown envelope kind {data.get('kind')!r}")


def document_to_schedule(doc: dict) -> Schedule:
    if doc.get("format") != SCHEDULE_FORMAT:
        raise ValueError(f"not a schedule document (format={doc.get('format')!r})")
    events = []
    for entry in doc["events"]:
        duration = entry["duration_s"]
        events.append(
            EmissionEvent(
                cell=entry["cell"],
                position=(entry["x"], entry["y"], entry["z"]),
                start_s=entry["start_s"],
                duration_s=None if duration == "open" else duration,
                mod_freq_hz=entry["freq_hz"],
                peak_amplitude=entry["amplitude"],
                trajectory=_trajectory_from_json(entry["trajectory"]) if "trajectory" in entry else None,
                envelope_override=_envelope_from_json(entry["envelope"]) if "envelope" in entry else None,
            )
        )
    total = doc["total_duration_s"]
    return Schedule(
        method=StimulusMethod.parse(doc["method"]),
        pattern=DotPattern.from_text(doc["pattern"]),
        events=tuple(events),
        total_duration_s=None if total == "open" else total,
        loop=doc["loop"],
    )


def schedule_from_json(text: str) -> Schedule:
    return document_to_schedule(json.loads(text))

"""Phase solving and free-field simulation for the transducer array.

The forward model is linear superposition of far-field piston sources:

    p(r) = sum_j  A_j * D(theta_j) * exp(i * (k*d_j + phi_j)) / d_j

with piston directivity D(theta) = 2*J1(k*a*sin(theta)) / (k*a*sin(theta)).
Pressure is reported in arbitrary linear units.  No reflections, skin
interaction or nonlinear effects are modeled.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.special import j1

from .scheduling import Schedule, sample_schedule

Vec3 = tuple[float, float, float]

MAX_TARGET_HEIGHT_M = 0.70
MAX_FOCAL_POINTS = 8

_FIELD_CHUNK_NODES = 65536


class OutOfRange(ValueError):
    """Target or grid outside the array's working volume."""


class TooManyPoints(ValueError):
    """More simultaneous focal points than the device supports."""


class PeakNotFound(RuntimeError):
    """No focal maximum near an intended target."""


@dataclass(frozen=True)
class ArrayConfig:
    """Transducer lattice and acoustic constants.

    Defaults model a 16x16 board of 256 elements driven at 40 kHz; the
    sound speed is set so the wavelength is exactly 8.6 mm.
    """

    rows: int = 16
    cols: int = 16
    pitch_m: float = 0.0103
    element_radius_m: float = 0.0045
    carrier_freq_hz: float = 40_000.0
    sound_speed_m_s: float = 344.0

    def __post_init__(self) -> None:
        if self.rows < 1 or self.cols < 1:
            raise ValueError("lattice must have at least one element")
        if self.pitch_m <= 0 or self.element_radius_m <= 0:
            raise ValueError("pitch and element radius must be > 0")
        if self.carrier_freq_hz <= 0 or self.sound_speed_m_s <= 0:
            raise ValueError("carrier frequency and sound speed must be > 0")

    @property
    def n_elements(self) -> int:
        return self.rows * self.cols

    @property
    def wavelength_m(self) -> float:
        return self.sound_speed_m_s / self.carrier_freq_hz

    @property
    def wavenumber(self) -> float:
        return 2 * math.pi / self.wavelength_m

    def element_positions(self) -> np.ndarray:
        """(N, 3) element centers; lattice centered on the origin, z = 0."""
        xs = (np.arange(self.cols) - (self.cols - 1) / 2) * self.pitch_m
        ys = (np.arange(self.rows) - (self.rows - 1) / 2) * self.pitch_m
        gx, gy = np.meshgrid(xs, ys, indexing="xy")
        out = np.zeros((self.n_elements, 3))
        out[:, 0] = gx.ravel()
        out[:, 1] = gy.ravel()
        return out


@dataclass(frozen=True)
class PhaseSolution:
    """Per-transducer drive: phase in [0, 2pi), amplitude in [0, 1]."""

    phases: np.ndarray
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        phases = np.asarray(self.phases, dtype=float)
        amplitudes = np.asarray(self.amplitudes, dtype=float)
        if phases.shape != amplitudes.shape or phases.ndim != 1:
            raise ValueError("phases and amplitudes must be equal-length vectors")
        if not np.all(np.isfinite(phases)):
            raise ValueError("phases must be finite")
        if np.any((amplitudes < 0) | (amplitudes > 1)):
            raise ValueError("amplitudes must lie in [0, 1]")
        object.__setattr__(self, "phases", np.mod(phases, 2 * math.pi))
        object.__setattr__(self, "amplitudes", amplitudes)

    def __len__(self) -> int:
        return self.phases.shape[0]

    def __eq__(self, other) -> bool:
        if not isinstance(other, PhaseSolution):
            return NotImplemented
        return np.array_equal(self.phases, other.phases) and np.array_equal(
            self.amplitudes, other.amplitudes
        )


@dataclass(frozen=True)
class GridSpec:
    """Planar evaluation grid: origin corner plus two orthonormal axes."""

    origin: Vec3
    axis_u: Vec3
    axis_v: Vec3
    nu: int
    nv: int
    resolution_m: float

    def __post_init__(self) -> None:
        if self.nu < 1 or self.nv < 1:
            raise ValueError("grid must have at least one node per axis")
        if self.resolution_m <= 0:
            raise ValueError("resolution must be > 0")
        for name in ("axis_u", "axis_v"):
            axis = np.asarray(getattr(self, name), dtype=float)
            if not math.isclose(float(np.linalg.norm(axis)), 1.0, rel_tol=1e-9):
                raise ValueError(f"{name} must be a unit vector")

    @classmethod
    def xy_patch(cls, center: Vec3, half_extent_m: float, resolution_m: float) -> "GridSpec":
        """Square x/y patch at fixed z, centered on a point."""
        n = 2 * int(round(half_extent_m / resolution_m)) + 1
        origin = (
            center[0] - (n - 1) / 2 * resolution_m,
            center[1] - (n - 1) / 2 * resolution_m,
            center[2],
        )
        return cls(origin=origin, axis_u=(1.0, 0.0, 0.0), axis_v=(0.0, 1.0, 0.0),
                   nu=n, nv=n, resolution_m=resolution_m)

    def node_position(self, iu: int, iv: int) -> np.ndarray:
        o = np.asarray(self.origin, dtype=float)
        u = np.asarray(self.axis_u, dtype=float)
        v = np.asarray(self.axis_v, dtype=float)
        return o + iu * self.resolution_m * u + iv * self.resolution_m * v

    def points(self) -> np.ndarray:
        """(nu*nv, 3) node positions, iu-major."""
        o = np.asarray(self.origin, dtype=float)
        u = np.asarray(self.axis_u, dtype=float)
        v = np.asarray(self.axis_v, dtype=float)
        iu = np.arange(self.nu)[:, None, None]
        iv = np.arange(self.nv)[None, :, None]
        pts = o[None, None, :] + iu * self.resolution_m * u[None, None, :] + iv * self.resolution_m * v[None, None, :]
        return pts.reshape(-1, 3)


@dataclass(frozen=True)
class FieldSample:
    """Complex pressure sampled over a GridSpec, shaped (nu, nv)."""

    grid: GridSpec
    pressure: np.ndarray

    def __post_init__(self) -> None:
        p = np.asarray(self.pressure)
        if p.shape != (self.grid.nu, self.grid.nv):
            raise ValueError("pressure shape must match the grid")
        if not np.all(np.isfinite(p)):
            raise ValueError("pressure must be finite")

    def magnitude(self) -> np.ndarray:
        return np.abs(self.pressure)

    def argmax_position(self) -> np.ndarray:
        mag = self.magnitude()
        iu, iv = np.unravel_index(int(np.argmax(mag)), mag.shape)
        return self.grid.node_position(iu, iv)


@dataclass(frozen=True)
class FocalPointMetrics:
    peak_position: Vec3
    peak_magnitude: float
    fwhm_x_m: float
    fwhm_y_m: float


@dataclass(frozen=True)
class FocalMetrics:
    points: tuple[FocalPointMetrics, ...]
    contrast_to_midpoint: Optional[float] = None  # two-point solves only


def _check_target(target: Sequence[float]) -> np.ndarray:
    t = np.asarray(target, dtype=float)
    if t.shape != (3,):
        raise ValueError("target must be a 3-vector")
    if t[2] > MAX_TARGET_HEIGHT_M:
        raise OutOfRange(f"target height {t[2]:.3f} m beyond array range {MAX_TARGET_HEIGHT_M} m")
    if t[2] <= 0:
        raise OutOfRange("target must lie above the array plane")
    return t


def solve_single(target: Sequence[float], cfg: ArrayConfig | None = None) -> PhaseSolution:
    """Linear focusing: each element's phase cancels its travel phase."""
    cfg = cfg or ArrayConfig()
    t = _check_target(target)
    d = np.linalg.norm(cfg.element_positions() - t, axis=1)
    phases = np.mod(-cfg.wavenumber * d, 2 * math.pi)
    return PhaseSolution(phases=phases, amplitudes=np.ones(cfg.n_elements))


def solve_multi(
    targets: Sequence[Sequence[float]],
    cfg: ArrayConfig | None = None,
    iterations: int = 30,
    weights: Sequence[float] | None = None,
) -> PhaseSolution:
    """Iterative phase retrieval for up to eight simultaneous focal points.

    Alternates between back-propagating the weighted focal phasors to the
    elements and re-propagating forward to update the focal phases.  The
    iteration count is fixed (no convergence test) so results are
    deterministic.  A single target reduces to solve_single exactly.
    """
    cfg = cfg or ArrayConfig()
    if len(targets) == 0:
        raise ValueError("at least one target is required")
    if len(targets) > MAX_FOCAL_POINTS:
        raise TooManyPoints(f"{len(targets)} targets exceeds the {MAX_FOCAL_POINTS}-point limit")
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    pts = np.stack([_check_target(t) for t in targets])
    if weights is None:
        w = np.ones(len(targets))
    else:
        w = np.asarray(weights, dtype=float)
        if w.shape != (len(targets),):
            raise ValueError("weights must match targets")
        if np.any(w < 0) or not np.any(w > 0):
            raise ValueError("weights must be non-negative with at least one positive entry")

    elements = cfg.element_positions()
    k = cfg.wavenumber
    # d[j, m]: element j to target m.
    d = np.linalg.norm(elements[:, None, :] - pts[None, :, :], axis=2)
    psi = np.zeros(len(targets))
    for _ in range(iterations):
        incoming = (w * np.exp(1j * (psi - k * d)) / d).sum(axis=1)
        phases = np.angle(incoming)
        focal = (np.exp(1j * (k * d + phases[:, None])) / d).sum(axis=0)
        psi = np.angle(focal)
    return PhaseSolution(phases=np.mod(phases, 2 * math.pi), amplitudes=np.ones(cfg.n_elements))


def _directivity(ka: float, sin_theta: np.ndarray) -> np.ndarray:
    x = ka * sin_theta
    out = np.ones_like(x)
    nonzero = x > 1e-12
    xv = x[nonzero]
    out[nonzero] = 2.0 * j1(xv) / xv
    return out


def evaluate_field(
    sol: PhaseSolution, cfg: ArrayConfig | None = None, grid: GridSpec | None = None
) -> FieldSample:
    """Superpose all element contributions over the grid (piston model)."""
    cfg = cfg or ArrayConfig()
    if grid is None:
        grid = GridSpec.xy_patch((0.0, 0.0, 0.20), 0.03, 0.001)
    if len(sol) != cfg.n_elements:
        raise ValueError("solution length does not match the array")
    elements = cfg.element_positions()
    k = cfg.wavenumber
    ka = k * cfg.element_radius_m
    points = grid.points()
    pressure = np.empty(points.shape[0], dtype=complex)
    for lo in range(0, points.shape[0], _FIELD_CHUNK_NODES):
        chunk = points[lo : lo + _FIELD_CHUNK_NODES]
        diff = chunk[:, None, :] - elements[None, :, :]
        dist = np.linalg.norm(diff, axis=2)
        lateral = np.hypot(diff[:, :, 0], diff[:, :, 1])
        with np.errstate(invalid="ignore", divide="ignore"):
            sin_theta = np.where(dist > 0, lateral / dist, 0.0)
        directivity = _directivity(ka, sin_theta)
        contrib = sol.amplitudes * directivity * np.exp(1j * (k * dist + sol.phases)) / dist
        pressure[lo : lo + chunk.shape[0]] = contrib.sum(axis=1)
    return FieldSample(grid=grid, pressure=pressure.reshape(grid.nu, grid.nv))


def zero_field(grid: GridSpec) -> FieldSample:
    return FieldSample(grid=grid, pressure=np.zeros((grid.nu, grid.nv), dtype=complex))


def _half_crossing_offset(profile: np.ndarray, peak_idx: int, half: float, step: int) -> float:
    """Distance (in nodes) from the peak to the half-maximum crossing."""
    idx = peak_idx
    while True:
        nxt = idx + step
        if nxt < 0 or nxt >= profile.shape[0]:
            return math.inf  # half level never reached inside the grid
        if profile[nxt] < half:
            frac = (profile[idx] - half) / (profile[idx] - profile[nxt])
            return abs(nxt - peak_idx - step) + frac
        idx = nxt


def _fwhm(mag: np.ndarray, peak: tuple[int, int], axis: int, resolution: float) -> float:
    profile = mag[:, peak[1]] if axis == 0 else mag[peak[0], :]
    peak_idx = peak[axis]
    half = profile[peak_idx] / 2.0
    left = _half_crossing_offset(profile, peak_idx, half, -1)
    right = _half_crossing_offset(profile, peak_idx, half, +1)
    return (left + right) * resolution


def _is_local_max(mag: np.ndarray, iu: int, iv: int) -> bool:
    value = mag[iu, iv]
    if value <= 0:
        return False
    neighborhood = mag[max(iu - 1, 0) : iu + 2, max(iv - 1, 0) : iv + 2]
    return value >= neighborhood.max()


def focal_metrics(field: FieldSample, targets: Sequence[Sequence[float]]) -> FocalMetrics:
    """Locate and size the focal maxima near the intended targets.

    Each target must have a local maximum of |p| within one wavelength
    (search radius 8.6 mm at defaults); FWHM is measured along the grid
    axes through each peak.  With exactly two targets the midpoint
    contrast |p(midpoint)| / min(peaks) is reported.
    """
    if field.grid.resolution_m > 0.001 + 1e-12:
        raise ValueError("focal metrics need a grid resolution of 1 mm or finer")
    if len(targets) == 0:
        raise ValueError("at least one target is required")
    mag = field.magnitude()
    nodes = field.grid.points().reshape(field.grid.nu, field.grid.nv, 3)
    wavelength = 0.0086  # search radius; metric, not tied to a config object
    results = []
    for target in targets:
        t = np.asarray(target, dtype=float)
        dist = np.linalg.norm(nodes - t, axis=2)
        near = dist <= wavelength
        if not near.any():
            raise PeakNotFound(f"grid does not cover target {tuple(t)}")
        masked = np.where(near, mag, -np.inf)
        iu, iv = np.unravel_index(int(np.argmax(masked)), mag.shape)
        if not _is_local_max(mag, iu, iv):
            raise PeakNotFound(f"no focal maximum within {wavelength * 1000:.1f} mm of {tuple(t)}")
        results.append(
            FocalPointMetrics(
                peak_position=tuple(nodes[iu, iv]),
                peak_magnitude=float(mag[iu, iv]),
                fwhm_x_m=_fwhm(mag, (iu, iv), 0, field.grid.resolution_m),
                fwhm_y_m=_fwhm(mag, (iu, iv), 1, field.grid.resolution_m),
            )
        )
    contrast = None
    if len(targets) == 2:
        midpoint = (np.asarray(targets[0], dtype=float) + np.asarray(targets[1], dtype=float)) / 2
        dist = np.linalg.norm(nodes - midpoint, axis=2)
        mu, mv = np.unravel_index(int(np.argmin(dist)), dist.shape)
        weakest_peak = min(r.peak_magnitude for r in results)
        contrast = float(mag[mu, mv] / weakest_peak) if weakest_peak > 0 else math.inf
    return FocalMetrics(points=tuple(results), contrast_to_midpoint=contrast)


@dataclass(frozen=True)
class Frame:
    """One control tick: drive solution plus per-point envelope amplitudes."""

    timestamp_s: float
    solution: Optional[PhaseSolution]  # None = silent tick
    point_amplitudes: tuple[float, ...] = ()

    @property
    def silent(self) -> bool:
        return self.solution is None


def expand_frames(
    schedule: Schedule,
    cfg: ArrayConfig | None = None,
    control_rate_hz: float = 1000.0,
    t0: float = 0.0,
    t1: float = 1.0,
    iterations: int = 30,
    multiplex: bool = False,
) -> list[Frame]:
    """Sample the schedule at the control rate and solve each tick.

    Phase solutions are cached per unique focal point set, so static
    methods re-solve once.  With multiplex=True, ticks round-robin a
    single point from the active set instead of solving them jointly.
    """
    cfg = cfg or ArrayConfig()
    if t0 < 0 or t1 <= t0:
        raise ValueError("need 0 <= t0 < t1")
    mod_freqs = [e.mod_freq_hz for e in schedule.events]
    if mod_freqs and control_rate_hz <= 2 * max(mod_freqs):
        raise ValueError(
            f"control rate {control_rate_hz} Hz below Nyquist for a "
            f"{max(mod_freqs)} Hz modulation envelope"
        )
    n_frames = math.ceil((t1 - t0) * control_rate_hz)
    cache: dict[tuple, PhaseSolution] = {}
    frames = []
    for i in range(n_frames):
        t = t0 + i / control_rate_hz
        points = sample_schedule(schedule, t)
        if not points:
            frames.append(Frame(timestamp_s=t, solution=None))
            continue
        if multiplex:
            points = [points[i % len(points)]]
        key = tuple(tuple(round(c, 9) for c in p.position) for p in points)
        solution = cache.get(key)
        if solution is None:
            positions = [p.position for p in points]
            if len(positions) == 1:
                solution = solve_single(positions[0], cfg)
            else:
                solution = solve_multi(positions, cfg, iterations=iterations)
            cache[key] = solution
        frames.append(
            Frame(
                timestamp_s=t,
                solution=solution,
                point_amplitudes=tuple(p.amplitude for p in points),
            )
        )
    return frames


def frames_to_jsonl(frames: Sequence[Frame], cfg: ArrayConfig | None = None) -> str:
    """One record per tick: timestamp_s, phases[n] in radians, amplitudes."""
    cfg = cfg or ArrayConfig()
    silent_phases = [0.0] * cfg.n_elements
    lines = []
    for frame in frames:
        phases = silent_phases if frame.silent else [float(p) for p in frame.solution.phases]
        record = {
            "timestamp_s": frame.timestamp_s,
            "phases": phases,
            "amplitudes": list(frame.point_amplitudes),
        }
        lines.append(json.dumps(record))
    return "\n".join(lines) + "\n" if lines else ""


def field_to_csv(field: FieldSample) -> str:
    """Dense CSV dump with a self-describing comment header."""
    g = field.grid
    header = [
        "# airbraille-field/1",
        f"# origin_m,{g.origin[0]!r},{g.origin[1]!r},{g.origin[2]!r}",
        f"# axis_u,{g.axis_u[0]!r},{g.axis_u[1]!r},{g.axis_u[2]!r}",
        f"# axis_v,{g.axis_v[0]!r},{g.axis_v[1]!r},{g.axis_v[2]!r}",
        f"# resolution_m,{g.resolution_m!r}",
        f"# shape,{g.nu},{g.nv}",
        "# units,arbitrary-linear",
        "iu,iv,x_m,y_m,z_m,re,im,abs",
    ]
    rows = []
    nodes = g.points().reshape(g.nu, g.nv, 3)
    for iu in range(g.nu):
        for iv in range(g.nv):
            p = field.pressure[iu, iv]
            x, y, z = nodes[iu, iv]
            rows.append(
                f"{iu},{iv},{x!r},{y!r},{z!r},{p.real!r},{p.imag!r},{abs(p)!r}"
            )
    return "\n".join(header + rows) + "\n"

"""Reference path generation for the scenario harness.

A path is one closed cycle of timed waypoints in a coordinate plane,
precomputed at a fixed sample period (the solvers only ever see the waypoint
currently in force). `generate_path` emits round(duration / sample_period)
waypoints covering exactly one cycle; the parametrization is periodic, so
waypoint N coincides with waypoint 0 and playback may wrap.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SHAPES = ("square", "circle", "eight", "hold")
PLANES = {"XY": (np.array([1.0, 0, 0]), np.array([0, 1.0, 0])),
          "YZ": (np.array([0, 1.0, 0]), np.array([0, 0, 1.0]))}

DEFAULT_SAMPLE_PERIOD = 0.03


@dataclass(frozen=True)
class PathSpec:
    shape: str
    plane: str
    center: np.ndarray
    size: float  # square width / circle radius / eight loop radius
    duration: float
    sample_period: float = DEFAULT_SAMPLE_PERIOD

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise ValueError(f"unknown shape '{self.shape}'")
        if self.plane not in PLANES:
            raise ValueError(f"unknown plane '{self.plane}'")
        if self.sample_period <= 0 or self.duration <= 0:
            raise ValueError("duration and sample_period must be positive")
        if self.size <= 0 and self.shape != "hold":
            raise ValueError("size must be positive")
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))


@dataclass(frozen=True)
class Waypoint:
    stamp: float
    position: np.ndarray


def _square_point(phase: float, width: float) -> np.ndarray:
    """Point on a width x width square traced edge-by-edge, CCW from the
    lower-left corner, at arc-length fraction `phase` of the perimeter."""
    s = (phase % 1.0) * 4.0
    h = width / 2.0
    edge = int(s)  # 0..3
    t = s - edge
    if edge == 0:
        return np.array([-h + width * t, -h])
    if edge == 1:
        return np.array([h, -h + width * t])
    if edge == 2:
        return np.array([h - width * t, h])
    return np.array([-h, h - width * t])


def _circle_point(phase: float, radius: float) -> np.ndarray:
    ang = 2.0 * np.pi * phase
    return radius * np.array([np.cos(ang), np.sin(ang)])


def _eight_point(phase: float, radius: float) -> np.ndarray:
    """Two tangent loops of the given radius, crossing at the origin with a
    continuous velocity direction: right loop CCW, then left loop CW."""
    s = (phase % 1.0) * 2.0
    if s < 1.0:
        ang = 2.0 * np.pi * s
        return radius * np.array([1.0 - np.cos(ang), np.sin(ang)])
    ang = 2.0 * np.pi * (s - 1.0)
    return radius * np.array([np.cos(ang) - 1.0, np.sin(ang)])


def path_point(spec: PathSpec, t: float) -> np.ndarray:
    """Path position at time t (periodic in the spec duration)."""
    phase = (t / spec.duration) % 1.0
    if spec.shape == "hold":
        return spec.center.copy()
    if spec.shape == "square":
        xy = _square_point(phase, spec.size)
    elif spec.shape == "circle":
        xy = _circle_point(phase, spec.size)
    else:
        xy = _eight_point(phase, spec.size)
    u, v = PLANES[spec.plane]
    return spec.center + xy[0] * u + xy[1] * v


def path_length(spec: PathSpec) -> float:
    if spec.shape == "square":
        return 4.0 * spec.size
    if spec.shape == "circle":
        return 2.0 * np.pi * spec.size
    if spec.shape == "eight":
        return 4.0 * np.pi * spec.size
    return 0.0


def generate_path(spec: PathSpec) -> list[Waypoint]:
    """One closed cycle of waypoints at the spec's sample period."""
    count = max(1, round(spec.duration / spec.sample_period))
    return [
        Waypoint(stamp=i * spec.sample_period, position=path_point(spec, i * spec.sample_period))
        for i in range(count)
    ]


def waypoint_in_force(waypoints: list[Waypoint], t: float, sample_period: float) -> Waypoint:
    """The reference waypoint active at time t: index floor(t / period),
    wrapping when playback loops past the cycle."""
    return waypoints[int(t / sample_period) % len(waypoints)]

"""Event-camera data model.

Deterministic event generation from frame sequences (threshold crossings of
the piecewise-linear log-intensity signal) and log-intensity reconstruction
by integrating event polarities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple, Sequence

import numpy as np

from .errors import InvalidInputError

DEFAULT_EPS = 1e-3

# absolute slack when deciding whether the log signal reaches the next
# threshold level; log values are O(1), so this is far below one event
_CROSSING_TOL = 1e-9


class Event(NamedTuple):
    x: int
    y: int
    t: int  # microseconds
    p: int  # +1 or -1


@dataclass(frozen=True)
class EventStream:
    """Time-sorted sequence of events on a fixed sensor.

    Events are stored as parallel arrays for fast scanning; iterate the
    stream to get `Event` tuples.
    """

    sensor_width: int
    sensor_height: int
    t_begin: int
    t_end: int
    t: np.ndarray = field(default_factory=lambda: np.empty(0, np.int64))
    x: np.ndarray = field(default_factory=lambda: np.empty(0, np.int32))
    y: np.ndarray = field(default_factory=lambda: np.empty(0, np.int32))
    p: np.ndarray = field(default_factory=lambda: np.empty(0, np.int8))

    def __post_init__(self):
        n = len(self.t)
        if not (len(self.x) == len(self.y) == len(self.p) == n):
            raise InvalidInputError("event arrays must have equal length")
        if self.t_begin > self.t_end:
            raise InvalidInputError("t_begin must not exceed t_end")
        if n:
            if np.any(np.diff(self.t) < 0):
                raise InvalidInputError("events must be sorted by timestamp")
            if self.t[0] < self.t_begin or self.t[-1] > self.t_end:
                raise InvalidInputError("event timestamps outside [t_begin, t_end]")
            if np.any((self.x < 0) | (self.x >= self.sensor_width)):
                raise InvalidInputError("event x coordinate out of sensor bounds")
            if np.any((self.y < 0) | (self.y >= self.sensor_height)):
                raise InvalidInputError("event y coordinate out of sensor bounds")
            if np.any((self.p != 1) & (self.p != -1)):
                raise InvalidInputError("polarity must be +1 or -1")

    def __len__(self) -> int:
        return len(self.t)

    def __iter__(self) -> Iterator[Event]:
        for i in range(len(self.t)):
            yield Event(int(self.x[i]), int(self.y[i]), int(self.t[i]), int(self.p[i]))

    @classmethod
    def from_events(cls, events: Sequence[Event], sensor_width: int,
                    sensor_height: int, t_begin: int, t_end: int) -> "EventStream":
        ev = list(events)
        return cls(
            sensor_width=sensor_width,
            sensor_height=sensor_height,
            t_begin=t_begin,
            t_end=t_end,
            t=np.array([e.t for e in ev], np.int64),
            x=np.array([e.x for e in ev], np.int32),
            y=np.array([e.y for e in ev], np.int32),
            p=np.array([e.p for e in ev], np.int8),
        )


@dataclass(frozen=True)
class IntensityFrame:
    """A single frame with values in [0, 1]; 1 channel (luma) or 3 (RGB)."""

    timestamp: int  # microseconds
    pixels: np.ndarray  # H x W or H x W x 3

    def __post_init__(self):
        px = self.pixels
        if px.ndim not in (2, 3) or (px.ndim == 3 and px.shape[2] != 3):
            raise InvalidInputError("pixels must be HxW or HxWx3")
        if not np.all(np.isfinite(px)):
            raise InvalidInputError("pixel values must be finite")
        if px.min() < 0.0 or px.max() > 1.0:
            raise InvalidInputError("pixel values must lie in [0, 1]")

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def channels(self) -> int:
        return 1 if self.pixels.ndim == 2 else 3


def log_view(frame: IntensityFrame, eps: float = DEFAULT_EPS) -> np.ndarray:
    """ln(luma + eps) for every pixel; RGB frames go through the BT.601 luma."""
    if eps <= 0:
        raise InvalidInputError("eps must be positive")
    px = frame.pixels
    if px.ndim == 3:
        from .metrics import rgb_to_y
        px = rgb_to_y(px)
    if not np.all(np.isfinite(px)):
        raise InvalidInputError("pixel values must be finite")
    return np.log(px.astype(np.float64) + eps)


def simulate_events(frames: Sequence[IntensityFrame], C: float,
                    eps: float = DEFAULT_EPS) -> EventStream:
    """Generate events from frames by linear threshold crossings in log space.

    The per-pixel log-intensity signal is linearly interpolated between frame
    samples. Starting from the first frame's log value as reference, an event
    of polarity sign(dL) fires each time the signal departs from the
    reference by C; the reference then advances by p*C. Event times are
    rounded down to the microsecond. Deterministic: simultaneous events are
    ordered row-major by pixel, positive polarity first.
    """
    if len(frames) < 2:
        raise InvalidInputError("need at least two frames")
    if C <= 0:
        raise InvalidInputError("contrast threshold C must be positive")
    h, w = frames[0].height, frames[0].width
    for f in frames:
        if f.height != h or f.width != w:
            raise InvalidInputError("all frames must share dimensions")
    ts = [f.timestamp for f in frames]
    if any(b <= a for a, b in zip(ts, ts[1:])):
        raise InvalidInputError("frame timestamps must be strictly increasing")

    logs = [log_view(f, eps) for f in frames]
    ref = logs[0].copy()

    rec = []  # (t_us, pixel_index, -p, x, y, p) for canonical sorting
    for (t0, l0), (t1, l1) in zip(zip(ts[:-1], logs[:-1]), zip(ts[1:], logs[1:])):
        dl = l1 - l0
        # number of threshold levels crossed per pixel during this segment
        n_cross = np.floor(np.abs(l1 - ref) / C + _CROSSING_TOL).astype(np.int64)
        n_cross[np.sign(dl) != np.sign(l1 - ref)] = 0
        n_cross[dl == 0] = 0
        ys, xs = np.nonzero(n_cross)
        for yy, xx in zip(ys, xs):
            pol = 1 if dl[yy, xx] > 0 else -1
            for k in range(1, int(n_cross[yy, xx]) + 1):
                target = ref[yy, xx] + pol * k * C
                frac = (target - l0[yy, xx]) / dl[yy, xx]
                t_ev = int(math.floor(t0 + frac * (t1 - t0)))
                rec.append((t_ev, yy * w + xx, -pol, int(xx), int(yy), pol))
            ref[yy, xx] += pol * n_cross[yy, xx] * C

    rec.sort(key=lambda r: (r[0], r[1], r[2]))
    return EventStream(
        sensor_width=w,
        sensor_height=h,
        t_begin=ts[0],
        t_end=ts[-1],
        t=np.array([r[0] for r in rec], np.int64),
        x=np.array([r[3] for r in rec], np.int32),
        y=np.array([r[4] for r in rec], np.int32),
        p=np.array([r[5] for r in rec], np.int8),
    )


def polarity_integral(stream: EventStream, x: int, y: int,
                      t0: int, t1: int) -> int:
    """Sum of polarities of events at (x, y) with t in (t0, t1]."""
    if not (0 <= x < stream.sensor_width and 0 <= y < stream.sensor_height):
        raise InvalidInputError("pixel out of sensor bounds")
    if t0 > t1:
        raise InvalidInputError("t0 must not exceed t1")
    mask = (stream.x == x) & (stream.y == y) & (stream.t > t0) & (stream.t <= t1)
    return int(stream.p[mask].sum())


def reconstruct_log_intensity(frame: IntensityFrame, stream: EventStream,
                              t: int, C: float,
                              eps: float = DEFAULT_EPS) -> np.ndarray:
    """Log-intensity field at time t from a keyframe plus integrated events.

    output(x, y) = log_view(frame)(x, y) + C * sum of p over (frame.timestamp, t].
    """
    if C <= 0:
        raise InvalidInputError("contrast threshold C must be positive")
    if t < frame.timestamp:
        raise InvalidInputError("backward integration is not supported (t < frame time)")
    base = log_view(frame, eps)
    counts = np.zeros(base.shape, np.int64)
    mask = (stream.t > frame.timestamp) & (stream.t <= t)
    np.add.at(counts, (stream.y[mask], stream.x[mask]), stream.p[mask])
    return base + C * counts

"""Voxel grid and temporal pyramid representations of event streams.

The voxel grid accumulates signed polarities into M equal temporal bins
with a bilinear (triangular) kernel. The temporal pyramid stacks L nested
windows around a center timestamp, each 1/r the span of the previous, each
voxelized into M_p bins. Finest granularity: delta_t = 2*half_window /
(M_p * r^L).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Union

import numpy as np

from .errors import InvalidInputError
from .events import EventStream

Number = Union[int, float, Fraction]


@dataclass(frozen=True)
class VoxelGrid:
    bins: int
    t0: float  # microseconds
    t1: float
    data: np.ndarray  # bins x H x W signed reals

    @property
    def height(self) -> int:
        return self.data.shape[1]

    @property
    def width(self) -> int:
        return self.data.shape[2]


@dataclass(frozen=True)
class TemporalPyramid:
    levels: int
    moments_per_level: int
    attenuation: float  # r > 1
    center_t: float  # microseconds
    half_window: float  # microseconds
    data: np.ndarray  # levels x moments x H x W

    def level_window(self, level: int) -> tuple[float, float]:
        """Closed window [center - dt/r^level, center + dt/r^level], level 1-indexed."""
        if not 1 <= level <= self.levels:
            raise InvalidInputError("level out of range")
        h = self.half_window / self.attenuation ** level
        return self.center_t - h, self.center_t + h


@dataclass(frozen=True)
class GranularitySpec:
    half_window_s: Fraction
    levels: int
    moments_per_level: int
    attenuation: Fraction
    delta_t: Fraction  # seconds, exact


def build_voxel_grid(stream: EventStream, M: int, t0: float, t1: float) -> VoxelGrid:
    """Accumulate a stream into M temporal bins over [t0, t1].

    Each in-window event lands at normalized coordinate
    tau = M*(t-t0)/(t1-t0) - 0.5 and splats p*(1-|tau-k|) into the one or
    two nearest bins. tau is clamped into [0, M-1] so that boundary events
    keep their full weight and signed mass is conserved exactly.
    """
    if M < 1:
        raise InvalidInputError("bin count M must be >= 1")
    if t0 >= t1:
        raise InvalidInputError("t0 must be less than t1")
    data = np.zeros((M, stream.sensor_height, stream.sensor_width), np.float64)
    mask = (stream.t >= t0) & (stream.t <= t1)
    if mask.any():
        t = stream.t[mask].astype(np.float64)
        xs = stream.x[mask].astype(np.int64)
        ys = stream.y[mask].astype(np.int64)
        ps = stream.p[mask].astype(np.float64)
        tau = M * (t - t0) / (t1 - t0) - 0.5
        np.clip(tau, 0.0, M - 1.0, out=tau)
        k = np.floor(tau).astype(np.int64)
        np.clip(k, 0, M - 1, out=k)
        frac = tau - k
        flat = data.reshape(M, -1)
        idx = ys * stream.sensor_width + xs
        np.add.at(flat, (k, idx), ps * (1.0 - frac))
        hi = k + 1
        valid = hi < M
        np.add.at(flat, (hi[valid], idx[valid]), ps[valid] * frac[valid])
    return VoxelGrid(bins=M, t0=float(t0), t1=float(t1), data=data)


def build_tpr(stream: EventStream, center_t: float, half_window: float,
              levels: int, moments_per_level: int, attenuation: float) -> TemporalPyramid:
    """Stack L nested voxel grids around center_t into L x M_p x H x W.

    Level l (1-indexed) covers the closed window
    [center_t - half_window/r^l, center_t + half_window/r^l].
    """
    if levels < 1:
        raise InvalidInputError("levels must be >= 1")
    if moments_per_level < 1:
        raise InvalidInputError("moments_per_level must be >= 1")
    if attenuation <= 1:
        raise InvalidInputError("attenuation r must exceed 1")
    if half_window <= 0:
        raise InvalidInputError("half_window must be positive")
    if 2.0 * half_window / float(attenuation) ** levels < 1.0:
        raise InvalidInputError(
            "finest level window narrower than 1 microsecond (granularity "
            "exceeds the timestamp clock)")
    planes = []
    for level in range(1, levels + 1):
        h = half_window / float(attenuation) ** level
        grid = build_voxel_grid(stream, moments_per_level,
                                center_t - h, center_t + h)
        planes.append(grid.data)
    return TemporalPyramid(
        levels=levels,
        moments_per_level=moments_per_level,
        attenuation=float(attenuation),
        center_t=float(center_t),
        half_window=float(half_window),
        data=np.stack(planes, axis=0),
    )


def tpr_granularity(half_window_s: Number, levels: int, moments_per_level: int,
                    attenuation: Number) -> GranularitySpec:
    """Finest time granularity 2*half_window / (M_p * r^L), exact for rational r."""
    if levels < 1 or moments_per_level < 1:
        raise InvalidInputError("levels and moments_per_level must be >= 1")
    hw = _as_fraction(half_window_s)
    if hw <= 0:
        raise InvalidInputError("half_window must be positive")
    r = _as_fraction(attenuation)
    if r <= 1:
        raise InvalidInputError("attenuation r must exceed 1")
    delta = 2 * hw / (moments_per_level * r ** levels)
    return GranularitySpec(
        half_window_s=hw,
        levels=levels,
        moments_per_level=moments_per_level,
        attenuation=r,
        delta_t=delta,
    )


def _as_fraction(v: Number) -> Fraction:
    # Fraction(float) is the exact binary value, so 0.5 etc. stay exact
    return v if isinstance(v, Fraction) else Fraction(v)

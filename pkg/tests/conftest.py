import math

import numpy as np
import pytest

from evtpr import EventStream, IntensityFrame


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def make_ramp_clip(h=32, w=32, n_frames=16, dt_us=1000, lo=0.05, hi=0.9):
    """Frames whose log intensity ramps linearly per pixel (distinct slopes)."""
    frames = []
    yy, xx = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
    log_lo = math.log(lo)
    log_hi = math.log(hi)
    # per-pixel end level varies so different pixels emit different counts
    end = log_lo + (log_hi - log_lo) * (0.25 + 0.75 * (yy * w + xx) / (h * w))
    for i in range(n_frames):
        frac = i / (n_frames - 1)
        log_val = log_lo + frac * (end - log_lo)
        frames.append(IntensityFrame(timestamp=i * dt_us,
                                     pixels=np.exp(log_val)))
    return frames


def random_stream(rng, h=8, w=8, n=200, t_begin=0, t_end=100_000):
    t = np.sort(rng.integers(t_begin, t_end + 1, size=n)).astype(np.int64)
    return EventStream(
        sensor_width=w, sensor_height=h, t_begin=t_begin, t_end=t_end,
        t=t,
        x=rng.integers(0, w, size=n).astype(np.int32),
        y=rng.integers(0, h, size=n).astype(np.int32),
        p=rng.choice(np.array([-1, 1], np.int8), size=n),
    )

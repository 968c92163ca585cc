"""Bit-exact serialization: binary event files, tensor containers, pixmaps.

All multi-byte fields are little-endian irrespective of host.

Event file ("EVT1"): magic 4s | version u32 | width u16 | height u16 |
count u64 | t_begin u64 | t_end u64, then `count` 16-byte records of
t u64 | x u16 | y u16 | p i8 | 3 pad bytes.

Tensor file ("TNS1"): magic 4s | ndim u32 | ndim x u32 dims | row-major
float32 payload.

Frames are binary portable pixmaps: PGM (P5) for luma, PPM (P6) for RGB,
8-bit with maxval 255, mapped to [0, 1] by /255 on read.
"""

from __future__ import annotations

import contextlib
import io
import os
import struct
from typing import BinaryIO, Union

import numpy as np

from .errors import FormatError
from .events import EventStream

EVENT_MAGIC = b"EVT1"
EVENT_VERSION = 1
EVENT_HEADER = struct.Struct("<4sIHHQQQ")  # 36 bytes
EVENT_RECORD = struct.Struct("<QHHb3x")  # 16 bytes

TENSOR_MAGIC = b"TNS1"

PathOrStream = Union[str, os.PathLike, BinaryIO]


@contextlib.contextmanager
def _binary(dest: PathOrStream, mode: str):
    if isinstance(dest, (str, os.PathLike)):
        with open(dest, mode) as fh:
            yield fh
    else:
        yield dest


def write_events(stream: EventStream, dest: PathOrStream) -> None:
    with _binary(dest, "wb") as fh:
        fh.write(EVENT_HEADER.pack(EVENT_MAGIC, EVENT_VERSION,
                                    stream.sensor_width, stream.sensor_height,
                                    len(stream), stream.t_begin, stream.t_end))
        if len(stream):
            rec = np.zeros(len(stream), dtype=_record_dtype())
            rec["t"] = stream.t
            rec["x"] = stream.x
            rec["y"] = stream.y
            rec["p"] = stream.p
            fh.write(rec.tobytes())


def _record_dtype() -> np.dtype:
    return np.dtype({
        "names": ["t", "x", "y", "p"],
        "formats": ["<u8", "<u2", "<u2", "i1"],
        "offsets": [0, 8, 10, 12],
        "itemsize": EVENT_RECORD.size,
    })


def read_events(src: PathOrStream) -> EventStream:
    with _binary(src, "rb") as fh:
        head = fh.read(EVENT_HEADER.size)
        if len(head) != EVENT_HEADER.size:
            raise FormatError("truncated event header")
        magic, version, width, height, count, t_begin, t_end = EVENT_HEADER.unpack(head)
        if magic != EVENT_MAGIC:
            raise FormatError("bad event-file magic")
        if version != EVENT_VERSION:
            raise FormatError("unsupported event-file version %d" % version)
        if t_begin > t_end:
            raise FormatError("t_begin exceeds t_end")
        payload = fh.read(count * EVENT_RECORD.size)
        if len(payload) != count * EVENT_RECORD.size:
            raise FormatError("truncated event payload")
        rec = np.frombuffer(payload, dtype=_record_dtype())
        try:
            return EventStream(
                sensor_width=width, sensor_height=height,
                t_begin=t_begin, t_end=t_end,
                t=rec["t"].astype(np.int64),
                x=rec["x"].astype(np.int32),
                y=rec["y"].astype(np.int32),
                p=rec["p"].astype(np.int8),
            )
        except ValueError as exc:
            raise FormatError(str(exc)) from exc


def write_events_csv(stream: EventStream, dest: Union[str, os.PathLike, io.TextIOBase]) -> None:
    """Plain `t,x,y,p` lines, one event per line."""
    lines = ["%d,%d,%d,%d\n" % (t, x, y, p)
             for x, y, t, p in stream]
    text = "".join(lines)
    if isinstance(dest, (str, os.PathLike)):
        with open(dest, "w") as fh:
            fh.write(text)
    else:
        dest.write(text)


def read_events_csv(src: Union[str, os.PathLike, io.TextIOBase],
                    sensor_width: int, sensor_height: int,
                    t_begin: int, t_end: int) -> EventStream:
    if isinstance(src, (str, os.PathLike)):
        with open(src) as fh:
            text = fh.read()
    else:
        text = src.read()
    ts, xs, ys, ps = [], [], [], []
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != 4:
            raise FormatError("malformed event CSV line: %r" % line)
        try:
            t, x, y, p = (int(v) for v in parts)
        except ValueError as exc:
            raise FormatError("non-integer event CSV field: %r" % line) from exc
        ts.append(t)
        xs.append(x)
        ys.append(y)
        ps.append(p)
    try:
        return EventStream(
            sensor_width=sensor_width, sensor_height=sensor_height,
            t_begin=t_begin, t_end=t_end,
            t=np.array(ts, np.int64), x=np.array(xs, np.int32),
            y=np.array(ys, np.int32), p=np.array(ps, np.int8),
        )
    except ValueError as exc:
        raise FormatError(str(exc)) from exc


def write_tensor(data: np.ndarray, dest: PathOrStream) -> None:
    # np.ascontiguousarray would promote 0-dim scalars to 1-dim
    arr = np.require(np.asarray(data), dtype="<f4", requirements=["C"])
    with _binary(dest, "wb") as fh:
        fh.write(TENSOR_MAGIC)
        fh.write(struct.pack("<I", arr.ndim))
        fh.write(struct.pack("<%dI" % arr.ndim, *arr.shape))
        fh.write(arr.tobytes())


def read_tensor(src: PathOrStream) -> np.ndarray:
    with _binary(src, "rb") as fh:
        magic = fh.read(4)
        if magic != TENSOR_MAGIC:
            raise FormatError("bad tensor-file magic")
        raw = fh.read(4)
        if len(raw) != 4:
            raise FormatError("truncated tensor header")
        (ndim,) = struct.unpack("<I", raw)
        raw = fh.read(4 * ndim)
        if len(raw) != 4 * ndim:
            raise FormatError("truncated tensor dims")
        dims = struct.unpack("<%dI" % ndim, raw) if ndim else ()
        count = int(np.prod(dims, dtype=np.int64)) if ndim else 1
        payload = fh.read(4 * count)
        if len(payload) != 4 * count:
            raise FormatError("tensor payload length mismatch")
        if fh.read(1):
            raise FormatError("trailing bytes after tensor payload")
        return np.frombuffer(payload, dtype="<f4").reshape(dims).copy()


def write_frame(pixels: np.ndarray, dest: PathOrStream) -> None:
    """Binary PGM for HxW input, binary PPM for HxWx3; values in [0,1]."""
    if pixels.ndim == 2:
        magic = b"P5"
    elif pixels.ndim == 3 and pixels.shape[2] == 3:
        magic = b"P6"
    else:
        raise FormatError("expected HxW or HxWx3 pixel array")
    quant = np.clip(np.rint(np.asarray(pixels, np.float64) * 255.0), 0, 255)
    h, w = pixels.shape[:2]
    with _binary(dest, "wb") as fh:
        fh.write(magic + b"\n%d %d\n255\n" % (w, h))
        fh.write(quant.astype(np.uint8).tobytes())


def read_frame(src: PathOrStream) -> np.ndarray:
    with _binary(src, "rb") as fh:
        data = fh.read()
    magic, rest = _pnm_token(data)
    if magic not in (b"P5", b"P6"):
        raise FormatError("unsupported pixmap magic %r" % magic)
    w_tok, rest = _pnm_token(rest)
    h_tok, rest = _pnm_token(rest)
    max_tok, rest = _pnm_token(rest)
    try:
        w, h, maxval = int(w_tok), int(h_tok), int(max_tok)
    except ValueError as exc:
        raise FormatError("malformed pixmap header") from exc
    if maxval != 255:
        raise FormatError("only maxval 255 pixmaps are supported")
    channels = 1 if magic == b"P5" else 3
    need = w * h * channels
    if len(rest) < need:
        raise FormatError("truncated pixmap payload")
    arr = np.frombuffer(rest[:need], np.uint8).astype(np.float64) / 255.0
    if channels == 1:
        return arr.reshape(h, w)
    return arr.reshape(h, w, 3)


def _pnm_token(data: bytes) -> tuple[bytes, bytes]:
    i = 0
    while i < len(data) and data[i:i + 1].isspace():
        i += 1
    j = i
    while j < len(data) and not data[j:j + 1].isspace():
        j += 1
    if j == i:
        raise FormatError("malformed pixmap header")
    # exactly one whitespace byte separates the header from the payload
    return data[i:j], data[j + 1:]

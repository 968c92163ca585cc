"""Forward-only numerical kernels for feature extraction and implicit
decoding: window partitioning, shifted-window attention blocks, multi-scale
down/up-sampling, holistic/regional extractors, temporal embedding, and
area-weighted spatial decoding.

Everything here is pure float32 numpy with explicitly supplied parameters;
no training, no hidden state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import InvalidInputError, NumericError


# ---------------------------------------------------------------------------
# parameter containers

@dataclass(frozen=True)
class AttentionParams:
    heads: int
    w_q: np.ndarray  # C x C
    b_q: np.ndarray
    w_k: np.ndarray
    b_k: np.ndarray
    w_v: np.ndarray
    b_v: np.ndarray
    w_o: np.ndarray
    b_o: np.ndarray

    def __post_init__(self):
        c = self.w_q.shape[1]
        for m in (self.w_q, self.w_k, self.w_v, self.w_o):
            if m.shape != (c, c):
                raise InvalidInputError("attention projections must be square and consistent")
        if c % self.heads != 0:
            raise InvalidInputError("head count must divide the channel dimension")

    @property
    def channels(self) -> int:
        return self.w_q.shape[1]

    @property
    def head_dim(self) -> int:
        return self.channels // self.heads


@dataclass(frozen=True)
class MlpParams:
    weights: tuple[np.ndarray, ...]  # each out_dim x in_dim
    biases: tuple[np.ndarray, ...]
    activations: tuple[str, ...]  # per layer: "gelu", "relu", "none"

    def __post_init__(self):
        if not (len(self.weights) == len(self.biases) == len(self.activations)):
            raise InvalidInputError("mlp layer lists must align")
        for w_prev, w_next in zip(self.weights, self.weights[1:]):
            if w_prev.shape[0] != w_next.shape[1]:
                raise InvalidInputError("consecutive mlp layer dimensions must chain")

    @property
    def in_dim(self) -> int:
        return self.weights[0].shape[1]

    @property
    def out_dim(self) -> int:
        return self.weights[-1].shape[0]


@dataclass(frozen=True)
class LayerNormParams:
    gamma: np.ndarray
    beta: np.ndarray


@dataclass(frozen=True)
class StebParams:
    norm1: LayerNormParams
    attn: AttentionParams
    norm2: LayerNormParams
    mlp: MlpParams


@dataclass(frozen=True)
class ConvParams:
    weight: np.ndarray  # out_c x in_c (1x1) or out_c x in_c x kh x kw
    bias: np.ndarray


@dataclass(frozen=True)
class TemporalEmbedParams:
    mlp: MlpParams  # scalar t -> C_t attention vector
    compress: ConvParams  # 1x1, C_t -> C_ts


@dataclass(frozen=True)
class PipelineConfig:
    n_in: int
    c_r: int = 16  # feature channels inside both extractors
    c_t: int = 640  # fused/temporal channel dimension
    c_ts: int = 64  # compressed channels entering the spatial decoder
    window_size: int = 4  # attention window M
    heads: int = 2
    voxel_bins: int = 4  # M of the holistic voxel grid segments
    tpr_levels: int = 3
    tpr_moments: int = 2
    tpr_ratio: float = 3.0
    tpr_half_window_fraction: float = 0.5  # of the input window span
    encoder_depth: int = 3  # down/up iterations in the holistic extractor
    mlp_ratio: int = 2  # hidden width multiplier inside STEB MLPs
    temporal_hidden: int = 32
    decoder_hidden: int = 64

    def __post_init__(self):
        if self.c_t <= 0:
            raise InvalidInputError("c_t must be positive")
        if self.n_in < 2:
            raise InvalidInputError("n_in must be >= 2")
        if self.c_r % self.heads:
            raise InvalidInputError("heads must divide c_r")

    def tpr_half_window_us(self, span_us: float) -> float:
        return self.tpr_half_window_fraction * span_us

    def validate_spatial(self, h: int, w: int) -> None:
        step = self.window_size * 2 ** self.encoder_depth
        if h % step or w % step:
            raise InvalidInputError(
                "working resolution %dx%d must be divisible by window*2^depth = %d"
                % (h, w, step))


# ---------------------------------------------------------------------------
# geometry

def window_partition(x: np.ndarray, M: int) -> np.ndarray:
    """L x C x H x W -> (L * H/M * W/M) x (M*M) x C, raster order per window."""
    if x.ndim != 4:
        raise InvalidInputError("expected an L x C x H x W tensor")
    l, c, h, w = x.shape
    if h % M or w % M:
        raise InvalidInputError("window size must divide H and W")
    x = x.reshape(l, c, h // M, M, w // M, M)
    x = x.transpose(0, 2, 4, 3, 5, 1)  # l, h/M, w/M, M, M, c
    return np.ascontiguousarray(x.reshape(l * (h // M) * (w // M), M * M, c))


def window_unpartition(windows: np.ndarray, M: int, l: int, h: int, w: int) -> np.ndarray:
    """Inverse of window_partition; bit-exact."""
    c = windows.shape[2]
    if windows.shape != (l * (h // M) * (w // M), M * M, c):
        raise InvalidInputError("window tensor inconsistent with target shape")
    x = windows.reshape(l, h // M, w // M, M, M, c)
    x = x.transpose(0, 5, 1, 3, 2, 4)
    return np.ascontiguousarray(x.reshape(l, c, h, w))


def cyclic_shift(x: np.ndarray, offset: int) -> np.ndarray:
    """Circular roll by (offset, offset) over the two trailing spatial axes."""
    if offset == 0:
        return x
    return np.roll(x, (offset, offset), axis=(-2, -1))


# ---------------------------------------------------------------------------
# core kernels

def layer_norm(x: np.ndarray, gamma: np.ndarray, beta: np.ndarray,
               eps: float = 1e-5) -> np.ndarray:
    """Per-token normalization over the last axis; constant rows map to 0."""
    if eps <= 0:
        raise InvalidInputError("eps must be positive")
    x64 = x.astype(np.float64)
    mean = x64.mean(axis=-1, keepdims=True)
    var = x64.var(axis=-1, keepdims=True)
    normed = (x64 - mean) / np.sqrt(var + eps)
    return (normed * gamma + beta).astype(np.float32)


def _gelu(x: np.ndarray) -> np.ndarray:
    from scipy.special import erf
    x64 = x.astype(np.float64)
    return (0.5 * x64 * (1.0 + erf(x64 / math.sqrt(2.0)))).astype(np.float32)


_ACTIVATIONS = {
    "gelu": lambda x: _gelu(x),
    "relu": lambda x: np.maximum(x, 0.0).astype(np.float32),
    "none": lambda x: x.astype(np.float32),
}


def mlp_forward(x: np.ndarray, params: MlpParams) -> np.ndarray:
    """Dense layers over the last axis of x."""
    out = x.astype(np.float32)
    for w, b, act in zip(params.weights, params.biases, params.activations):
        out = out @ w.T.astype(np.float32) + b.astype(np.float32)
        out = _ACTIVATIONS[act](out)
    return out


def _softmax(scores: np.ndarray) -> np.ndarray:
    shifted = scores - scores.max(axis=-1, keepdims=True)
    e = np.exp(shifted.astype(np.float64))
    return (e / e.sum(axis=-1, keepdims=True)).astype(np.float32)


def multi_head_self_attention(x: np.ndarray, params: AttentionParams,
                              row_sum_dev: Optional[list] = None) -> np.ndarray:
    """softmax(Q K^T / sqrt(d)) V per head, with output projection.

    Works on ... x N x C inputs (leading axes are batched). When
    `row_sum_dev` is given, the max |row sum - 1| of the softmax is
    appended to it.
    """
    if x.shape[-1] != params.channels:
        raise InvalidInputError("input channels do not match attention parameters")
    if x.shape[-2] < 1:
        raise InvalidInputError("need at least one token")
    h, d = params.heads, params.head_dim
    lead = x.shape[:-2]
    n = x.shape[-2]
    xf = x.astype(np.float32)
    q = xf @ params.w_q.T.astype(np.float32) + params.b_q.astype(np.float32)
    k = xf @ params.w_k.T.astype(np.float32) + params.b_k.astype(np.float32)
    v = xf @ params.w_v.T.astype(np.float32) + params.b_v.astype(np.float32)

    def split(m):
        m = m.reshape(lead + (n, h, d))
        return np.moveaxis(m, -2, -3)  # ... h, n, d

    q, k, v = split(q), split(k), split(v)
    scores = (q @ np.swapaxes(k, -1, -2)) / np.float32(math.sqrt(d))
    if not np.all(np.isfinite(scores)):
        raise NumericError("non-finite attention scores")
    attn = _softmax(scores)
    if row_sum_dev is not None:
        row_sum_dev.append(float(np.abs(attn.astype(np.float64).sum(-1) - 1.0).max()))
    out = attn @ v
    out = np.moveaxis(out, -3, -2).reshape(lead + (n, h * d))
    out = out @ params.w_o.T.astype(np.float32) + params.b_o.astype(np.float32)
    if not np.all(np.isfinite(out)):
        raise NumericError("non-finite attention output")
    return out


def steb_forward(x: np.ndarray, params: StebParams, M: int,
                 shifted: bool = False,
                 row_sum_dev: Optional[list] = None) -> np.ndarray:
    """Shift -> partition -> LN+windowed MHSA (residual) -> LN+MLP (residual)
    -> unpartition -> inverse shift. Output shape equals input shape."""
    l, c, h, w = x.shape
    if shifted:
        x = cyclic_shift(x, -(M // 2))
    tokens = window_partition(x, M)
    y = tokens + multi_head_self_attention(
        layer_norm(tokens, params.norm1.gamma, params.norm1.beta),
        params.attn, row_sum_dev=row_sum_dev)
    y = y + mlp_forward(layer_norm(y, params.norm2.gamma, params.norm2.beta),
                        params.mlp)
    out = window_unpartition(y, M, l, h, w)
    if shifted:
        out = cyclic_shift(out, M // 2)
    return out


def conv1x1(x: np.ndarray, params: ConvParams) -> np.ndarray:
    """1x1 convolution over the channel axis of ... x C x H x W."""
    w, b = params.weight, params.bias
    if w.ndim != 2 or x.shape[-3] != w.shape[1]:
        raise InvalidInputError("1x1 conv weight inconsistent with input channels")
    out = np.einsum("oc,...chw->...ohw", w.astype(np.float32), x.astype(np.float32))
    return (out + b.astype(np.float32)[:, None, None]).astype(np.float32)


def downsample_half(x: np.ndarray, params: ConvParams) -> np.ndarray:
    """Strided 2x2 convolution (stride 2), channels preserved."""
    w, b = params.weight, params.bias
    if x.shape[-2] % 2 or x.shape[-1] % 2:
        raise InvalidInputError("downsample requires even spatial dimensions")
    if w.ndim != 4 or w.shape[2:] != (2, 2) or x.shape[-3] != w.shape[1]:
        raise InvalidInputError("downsample kernel must be out_c x in_c x 2 x 2")
    xf = x.astype(np.float32)
    patches = np.stack([xf[..., 0::2, 0::2], xf[..., 0::2, 1::2],
                        xf[..., 1::2, 0::2], xf[..., 1::2, 1::2]], axis=-3)
    # patches: ... x C x 4 x H/2 x W/2
    wf = w.reshape(w.shape[0], w.shape[1], 4).astype(np.float32)
    out = np.einsum("ock,...ckhw->...ohw", wf, patches)
    return (out + b.astype(np.float32)[:, None, None]).astype(np.float32)


def upsample_double(x: np.ndarray, params: ConvParams) -> np.ndarray:
    """Nearest-neighbor x2 followed by a zero-padded 3x3 convolution."""
    w, b = params.weight, params.bias
    if w.ndim != 4 or w.shape[2:] != (3, 3) or x.shape[-3] != w.shape[1]:
        raise InvalidInputError("upsample kernel must be out_c x in_c x 3 x 3")
    xf = np.repeat(np.repeat(x.astype(np.float32), 2, axis=-2), 2, axis=-1)
    padded = np.zeros(xf.shape[:-2] + (xf.shape[-2] + 2, xf.shape[-1] + 2), np.float32)
    padded[..., 1:-1, 1:-1] = xf
    out = np.zeros(xf.shape[:-3] + (w.shape[0],) + xf.shape[-2:], np.float32)
    wf = w.astype(np.float32)
    for di in range(3):
        for dj in range(3):
            sl = padded[..., di:di + xf.shape[-2], dj:dj + xf.shape[-1]]
            out += np.einsum("oc,...chw->...ohw", wf[:, :, di, dj], sl)
    return (out + b.astype(np.float32)[:, None, None]).astype(np.float32)


# ---------------------------------------------------------------------------
# extractors and fusion

@dataclass(frozen=True)
class RegionalParams:
    lift: ConvParams  # 1x1, M_p -> C_r
    blocks: tuple[StebParams, ...]  # alternating plain / shifted


def regional_extractor_forward(tpr: np.ndarray, params: RegionalParams, M: int,
                               row_sum_dev: Optional[list] = None) -> np.ndarray:
    """TPR L x M_p x H x W -> features L x C_r x H x W via 1x1 lift + STEBs."""
    if tpr.ndim != 4:
        raise InvalidInputError("TPR tensor must be L x M_p x H x W")
    x = conv1x1(tpr, params.lift)
    for i, block in enumerate(params.blocks):
        x = steb_forward(x, block, M, shifted=bool(i % 2), row_sum_dev=row_sum_dev)
    return x


@dataclass(frozen=True)
class HolisticParams:
    frame_lift: ConvParams  # 1x1, 3 -> C
    event_lift: ConvParams  # 1x1, voxel_bins -> C
    encoder_blocks: tuple[StebParams, ...]  # depth entries
    downs: tuple[ConvParams, ...]
    decoder_blocks: tuple[StebParams, ...]
    ups: tuple[ConvParams, ...]


def holistic_extractor_forward(frames: np.ndarray, segments: Sequence[np.ndarray],
                               params: HolisticParams, M: int,
                               row_sum_dev: Optional[list] = None) -> np.ndarray:
    """Multi-scale encoder/decoder over lifted frames and event segments.

    frames: N_in x 3 x H x W; segments: N_in - 1 voxel grids, each
    bins x H x W. Frames and segments are interleaved along the level axis
    (2*N_in - 1 levels), lifted to a common channel count, then passed
    through STEB + downsample stages and STEB + upsample stages with
    addition fusion at matching resolutions. Output keeps the input
    resolution.
    """
    n_in = frames.shape[0]
    if len(segments) != n_in - 1:
        raise InvalidInputError("expected N_in - 1 event segments")
    lifted_frames = conv1x1(frames, params.frame_lift)
    lifted_events = conv1x1(np.stack(list(segments), axis=0), params.event_lift)
    levels = []
    for i in range(n_in - 1):
        levels.append(lifted_frames[i])
        levels.append(lifted_events[i])
    levels.append(lifted_frames[n_in - 1])
    x = np.stack(levels, axis=0)  # (2*N_in - 1) x C x H x W

    skips = []
    for block, down in zip(params.encoder_blocks, params.downs):
        x = steb_forward(x, block, M, row_sum_dev=row_sum_dev)
        skips.append(x)
        x = downsample_half(x, down)
    for block, up, skip in zip(params.decoder_blocks, params.ups, reversed(skips)):
        x = steb_forward(x, block, M, shifted=True, row_sum_dev=row_sum_dev)
        x = upsample_double(x, up) + skip
    return x


def fuse_features(f_g: np.ndarray, f_t_l: np.ndarray, conv: ConvParams) -> np.ndarray:
    """Element-wise sum followed by a 1x1 convolution."""
    if f_g.shape != f_t_l.shape:
        raise InvalidInputError("holistic and regional features must share a shape")
    return conv1x1(f_g + f_t_l, conv)


def temporal_embed(t: float, params: TemporalEmbedParams, r_t: np.ndarray) -> np.ndarray:
    """Channel attention a(t) from the MLP, applied to R_t, then compressed.

    r_t: C_t x H x W. Returns C_ts x H x W.
    """
    if not 0.0 <= t <= 1.0:
        raise InvalidInputError("t must lie in [0, 1]")
    attn = mlp_forward(np.array([t], np.float32), params.mlp)
    if attn.shape[0] != r_t.shape[0]:
        raise InvalidInputError("temporal MLP output does not match R_t channels")
    weighted = (attn[:, None, None] * r_t).astype(np.float32)
    return conv1x1(weighted, params.compress)


# ---------------------------------------------------------------------------
# implicit spatial decoding

def spatial_decode(feature: np.ndarray, queries: np.ndarray, s: float,
                   decoder: MlpParams) -> np.ndarray:
    """Decode RGB at continuous (x, y) query points over a C x h x w grid.

    Cell (i, j) has its center at (j + 0.5, i + 0.5); the grid's continuous
    extent is [0, w] x [0, h]. Per query the four nearest cells each decode
    MLP(feature || offset-to-center) into an RGB candidate; candidates are
    combined with weights proportional to the rectangle area spanned by the
    query and the diagonally opposite cell center (weights sum to 1).
    """
    if s < 1:
        raise InvalidInputError("scale must be >= 1")
    c, h, w = feature.shape
    if decoder.in_dim != c + 2:
        raise InvalidInputError("decoder input dim must be feature channels + 2")
    q = np.asarray(queries, np.float64)
    if q.ndim != 2 or q.shape[1] != 2:
        raise InvalidInputError("queries must be N x 2 (x, y)")
    if np.any(q[:, 0] < 0) or np.any(q[:, 0] > w) or np.any(q[:, 1] < 0) or np.any(q[:, 1] > h):
        raise InvalidInputError("query outside the feature grid extent")

    qx, qy = q[:, 0], q[:, 1]
    j0 = np.clip(np.floor(qx - 0.5).astype(np.int64), 0, w - 1)
    i0 = np.clip(np.floor(qy - 0.5).astype(np.int64), 0, h - 1)
    j1 = np.minimum(j0 + 1, w - 1)
    i1 = np.minimum(i0 + 1, h - 1)

    feat = feature.astype(np.float32)
    n = q.shape[0]
    rgb = np.zeros((n, 4, 3), np.float32)
    weights = np.zeros((n, 4), np.float64)
    corners = [(i0, j0), (i0, j1), (i1, j0), (i1, j1)]
    opposite = [3, 2, 1, 0]
    for k, (ci, cj) in enumerate(corners):
        cx, cy = cj + 0.5, ci + 0.5
        dx, dy = qx - cx, qy - cy
        inp = np.concatenate([
            feat[:, ci, cj].T,
            np.stack([dx, dy], axis=1).astype(np.float32),
        ], axis=1)
        rgb[:, k, :] = mlp_forward(inp, decoder)
        oi, oj = corners[opposite[k]]
        weights[:, k] = np.abs((qx - (oj + 0.5)) * (qy - (oi + 0.5)))

    total = weights.sum(axis=1, keepdims=True)
    degenerate = total[:, 0] <= 0
    if np.any(degenerate):
        # clamped corners collapsed; fall back to equal weighting
        weights[degenerate] = 0.25
        total[degenerate] = 1.0
    weights = weights / total
    out = np.einsum("nk,nkc->nc", weights.astype(np.float32), rgb)
    if not np.all(np.isfinite(out)):
        raise NumericError("non-finite decoded values")
    return out

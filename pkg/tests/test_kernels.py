import math

import numpy as np
import pytest

from evtpr.errors import InvalidInputError
from evtpr.kernels import (
    AttentionParams,
    ConvParams,
    LayerNormParams,
    MlpParams,
    StebParams,
    TemporalEmbedParams,
    conv1x1,
    cyclic_shift,
    downsample_half,
    fuse_features,
    holistic_extractor_forward,
    layer_norm,
    mlp_forward,
    multi_head_self_attention,
    regional_extractor_forward,
    spatial_decode,
    steb_forward,
    temporal_embed,
    upsample_double,
    window_partition,
    window_unpartition,
)
from evtpr.pipeline import _init_mlp, _init_steb, charbonnier_loss


def rand_attention(rng, c, heads):
    def mat():
        return rng.standard_normal((c, c)).astype(np.float32) / math.sqrt(c)

    def vec():
        return rng.standard_normal(c).astype(np.float32) * 0.1

    return AttentionParams(heads=heads, w_q=mat(), b_q=vec(), w_k=mat(),
                           b_k=vec(), w_v=mat(), b_v=vec(), w_o=mat(),
                           b_o=vec())


class TestWindowGeometry:
    def test_single_window_raster_order(self):
        x = np.arange(16, dtype=np.float32).reshape(1, 1, 4, 4)
        win = window_partition(x, 4)
        assert win.shape == (1, 16, 1)
        assert np.array_equal(win[0, :, 0], np.arange(16))

    @pytest.mark.parametrize("h", [4, 8, 12, 16])
    @pytest.mark.parametrize("w", [4, 8, 12, 16])
    def test_partition_unpartition_inverse(self, h, w):
        rng = np.random.default_rng(h * 100 + w)
        x = rng.standard_normal((3, 5, h, w)).astype(np.float32)
        back = window_unpartition(window_partition(x, 4), 4, 3, h, w)
        assert np.array_equal(back, x)  # bit-exact

    def test_ramp_against_index_oracle(self):
        x = np.arange(64, dtype=np.float32).reshape(1, 1, 8, 8)
        win = window_partition(x, 4)
        assert win.shape == (4, 16, 1)
        # explicit index-map enumeration: window (wi, wj), in-window (i, j)
        for wi in range(2):
            for wj in range(2):
                for i in range(4):
                    for j in range(4):
                        expected = (wi * 4 + i) * 8 + (wj * 4 + j)
                        assert win[wi * 2 + wj, i * 4 + j, 0] == expected

    def test_non_divisible_rejected(self):
        with pytest.raises(InvalidInputError):
            window_partition(np.zeros((1, 1, 6, 8), np.float32), 4)


class TestCyclicShift:
    def test_zero_offset_identity(self):
        x = np.random.default_rng(0).standard_normal((2, 3, 4, 4))
        assert cyclic_shift(x, 0) is x

    def test_shift_inverse_bit_exact(self):
        x = np.random.default_rng(1).standard_normal((2, 3, 8, 8)).astype(np.float32)
        assert np.array_equal(cyclic_shift(cyclic_shift(x, 2), -2), x)

    def test_modular_index_oracle(self):
        x = np.arange(16, dtype=np.float32).reshape(1, 1, 4, 4)
        out = cyclic_shift(x, 2)
        for i in range(4):
            for j in range(4):
                assert out[0, 0, (i + 2) % 4, (j + 2) % 4] == x[0, 0, i, j]


class TestLayerNorm:
    def test_constant_row_maps_to_zero(self):
        x = np.full((3, 8), 2.5, np.float32)
        out = layer_norm(x, np.ones(8, np.float32), np.zeros(8, np.float32))
        assert np.allclose(out, 0.0, atol=1e-5)

    def test_unit_stats(self):
        x = np.random.default_rng(2).standard_normal((10, 32)).astype(np.float32)
        out = layer_norm(x, np.ones(32, np.float32), np.zeros(32, np.float32))
        assert np.abs(out.mean(axis=-1)).max() <= 1e-6
        assert np.abs(out.var(axis=-1) - 1.0).max() <= 1e-4

    def test_known_four_vector(self):
        x = np.array([[1.0, 2.0, 3.0, 4.0]], np.float32)
        out = layer_norm(x, np.ones(4, np.float32), np.zeros(4, np.float32),
                         eps=1e-12)
        std = math.sqrt(1.25)
        expected = [(v - 2.5) / std for v in (1, 2, 3, 4)]
        assert np.allclose(out[0], expected, atol=1e-6)


def naive_attention(x, params):
    """Brute-force reference: explicit per-head, per-row float64 loops."""
    n, c = x.shape
    h, d = params.heads, params.head_dim
    x = x.astype(np.float64)
    q = x @ params.w_q.T.astype(np.float64) + params.b_q.astype(np.float64)
    k = x @ params.w_k.T.astype(np.float64) + params.b_k.astype(np.float64)
    v = x @ params.w_v.T.astype(np.float64) + params.b_v.astype(np.float64)
    out = np.zeros((n, c))
    for head in range(h):
        sl = slice(head * d, (head + 1) * d)
        qh, kh, vh = q[:, sl], k[:, sl], v[:, sl]
        for i in range(n):
            scores = [float(qh[i] @ kh[j]) / math.sqrt(d) for j in range(n)]
            m = max(scores)
            exps = [math.exp(s - m) for s in scores]
            z = sum(exps)
            for j in range(n):
                out[i, sl] += (exps[j] / z) * vh[j]
    return out @ params.w_o.T.astype(np.float64) + params.b_o.astype(np.float64)


class TestAttention:
    def test_single_token_closed_form(self):
        rng = np.random.default_rng(3)
        params = rand_attention(rng, 8, 2)
        x = rng.standard_normal((1, 8)).astype(np.float32)
        out = multi_head_self_attention(x, params)
        expected = (x @ params.w_v.T + params.b_v) @ params.w_o.T + params.b_o
        assert np.allclose(out, expected, atol=1e-5)

    def test_softmax_rows_sum_to_one(self):
        rng = np.random.default_rng(4)
        dev = []
        for _ in range(20):
            params = rand_attention(rng, 16, 4)
            x = rng.standard_normal((8, 16)).astype(np.float32)
            multi_head_self_attention(x, params, row_sum_dev=dev)
        assert max(dev) <= 1e-6

    def test_matches_naive_reference(self):
        rng = np.random.default_rng(5)
        for _ in range(100):
            c = int(rng.choice([4, 8, 16]))
            heads = int(rng.choice([1, 2]))
            n = int(rng.integers(1, 10))
            params = rand_attention(rng, c, heads)
            x = rng.standard_normal((n, c)).astype(np.float32)
            out = multi_head_self_attention(x, params)
            ref = naive_attention(x, params)
            assert np.allclose(out, ref, rtol=1e-5, atol=1e-5)


def zero_bias_steb(c, heads, seed=0):
    rng = np.random.default_rng(seed)
    params = _init_steb(rng, c, heads, 2)
    zero = lambda a: np.zeros_like(a)
    attn = AttentionParams(
        heads=heads, w_q=params.attn.w_q, b_q=zero(params.attn.b_q),
        w_k=params.attn.w_k, b_k=zero(params.attn.b_k),
        w_v=params.attn.w_v, b_v=zero(params.attn.b_v),
        w_o=np.zeros_like(params.attn.w_o), b_o=zero(params.attn.b_o))
    mlp = MlpParams(weights=(params.mlp.weights[0],
                             np.zeros_like(params.mlp.weights[1])),
                    biases=(zero(params.mlp.biases[0]),
                            zero(params.mlp.biases[1])),
                    activations=params.mlp.activations)
    return StebParams(norm1=params.norm1, attn=attn, norm2=params.norm2,
                      mlp=mlp)


class TestSteb:
    @pytest.mark.parametrize("shifted", [False, True])
    def test_shape_preserved(self, shifted):
        rng = np.random.default_rng(6)
        params = _init_steb(rng, 8, 2, 2)
        x = rng.standard_normal((3, 8, 8, 12)).astype(np.float32)
        out = steb_forward(x, params, 4, shifted=shifted)
        assert out.shape == x.shape

    def test_zero_projections_give_identity(self):
        x = np.random.default_rng(7).standard_normal((2, 8, 8, 8)).astype(np.float32)
        params = zero_bias_steb(8, 2)
        out = steb_forward(x, params, 4)
        assert np.array_equal(out, x)

    def test_matches_composed_reference(self):
        rng = np.random.default_rng(8)
        params = _init_steb(rng, 4, 2, 2)
        x = rng.standard_normal((1, 4, 4, 4)).astype(np.float32)
        out = steb_forward(x, params, 4, shifted=True)
        # straight-line composition of the public kernels
        y = cyclic_shift(x, -2)
        tokens = window_partition(y, 4)
        tokens = tokens + multi_head_self_attention(
            layer_norm(tokens, params.norm1.gamma, params.norm1.beta),
            params.attn)
        tokens = tokens + mlp_forward(
            layer_norm(tokens, params.norm2.gamma, params.norm2.beta),
            params.mlp)
        ref = cyclic_shift(window_unpartition(tokens, 4, 1, 4, 4), 2)
        assert np.array_equal(out, ref)  # bit-identical


class TestResampling:
    def test_shapes(self):
        rng = np.random.default_rng(9)
        x = rng.standard_normal((2, 4, 8, 16)).astype(np.float32)
        down = ConvParams(weight=rng.standard_normal((4, 4, 2, 2)).astype(np.float32),
                          bias=np.zeros(4, np.float32))
        up = ConvParams(weight=rng.standard_normal((4, 4, 3, 3)).astype(np.float32),
                        bias=np.zeros(4, np.float32))
        assert downsample_half(x, down).shape == (2, 4, 4, 8)
        assert upsample_double(x, up).shape == (2, 4, 16, 32)

    def test_identity_upsample_on_constant_interior(self):
        c = 3
        w = np.zeros((c, c, 3, 3), np.float32)
        for i in range(c):
            w[i, i, 1, 1] = 1.0
        up = ConvParams(weight=w, bias=np.zeros(c, np.float32))
        x = np.full((1, c, 4, 4), 0.7, np.float32)
        out = upsample_double(x, up)
        assert np.allclose(out, 0.7)

    def test_three_downsamples_reach_one_eighth(self):
        rng = np.random.default_rng(10)
        x = rng.standard_normal((1, 2, 32, 16)).astype(np.float32)
        down = ConvParams(weight=rng.standard_normal((2, 2, 2, 2)).astype(np.float32),
                          bias=np.zeros(2, np.float32))
        for _ in range(3):
            x = downsample_half(x, down)
        assert x.shape[-2:] == (4, 2)

    def test_odd_dimensions_rejected(self):
        down = ConvParams(weight=np.zeros((1, 1, 2, 2), np.float32),
                          bias=np.zeros(1, np.float32))
        with pytest.raises(InvalidInputError):
            downsample_half(np.zeros((1, 1, 5, 4), np.float32), down)


def naive_conv1x1(x, weight, bias):
    """Per-pixel matrix multiply in float64 loops."""
    c_out, c_in = weight.shape
    lead = x.shape[:-3]
    h, w = x.shape[-2:]
    x2 = x.reshape((-1, c_in, h, w)).astype(np.float64)
    out = np.zeros((x2.shape[0], c_out, h, w))
    for b in range(x2.shape[0]):
        for i in range(h):
            for j in range(w):
                out[b, :, i, j] = weight.astype(np.float64) @ x2[b, :, i, j] + bias
    return out.reshape(lead + (c_out, h, w))


class TestFusion:
    def test_identity_conv_is_plain_sum(self):
        rng = np.random.default_rng(11)
        a = rng.standard_normal((4, 6, 6)).astype(np.float32)
        b = rng.standard_normal((4, 6, 6)).astype(np.float32)
        conv = ConvParams(weight=np.eye(4, dtype=np.float32),
                          bias=np.zeros(4, np.float32))
        assert np.allclose(fuse_features(a, b, conv), a + b, atol=1e-7)
        assert np.allclose(fuse_features(a, np.zeros_like(b), conv), a, atol=1e-7)

    def test_matches_per_pixel_oracle(self):
        rng = np.random.default_rng(12)
        for _ in range(100):
            c_in = int(rng.integers(1, 6))
            c_out = int(rng.integers(1, 6))
            h, w = int(rng.integers(1, 5)), int(rng.integers(1, 5))
            a = rng.standard_normal((c_in, h, w)).astype(np.float32)
            b = rng.standard_normal((c_in, h, w)).astype(np.float32)
            conv = ConvParams(weight=rng.standard_normal((c_out, c_in)).astype(np.float32),
                              bias=rng.standard_normal(c_out).astype(np.float32))
            out = fuse_features(a, b, conv)
            ref = naive_conv1x1((a + b)[None], conv.weight, conv.bias)[0]
            assert np.allclose(out, ref, rtol=1e-5, atol=1e-5)

    def test_shape_mismatch(self):
        conv = ConvParams(weight=np.eye(2, dtype=np.float32),
                          bias=np.zeros(2, np.float32))
        with pytest.raises(InvalidInputError):
            fuse_features(np.zeros((2, 4, 4), np.float32),
                          np.zeros((2, 4, 5), np.float32), conv)


class TestExtractors:
    def test_regional_shape_contract(self):
        rng = np.random.default_rng(13)
        params_rng = np.random.default_rng(14)
        from evtpr.kernels import RegionalParams
        from evtpr.pipeline import _init_conv1x1
        params = RegionalParams(
            lift=_init_conv1x1(params_rng, 2, 8),
            blocks=tuple(_init_steb(params_rng, 8, 2, 2) for _ in range(4)))
        tpr = rng.standard_normal((7, 2, 8, 8)).astype(np.float32)
        out = regional_extractor_forward(tpr, params, 4)
        assert out.shape == (7, 8, 8, 8)

    def test_regional_zero_input_zero_biases(self):
        from evtpr.kernels import RegionalParams
        rng = np.random.default_rng(15)
        lift = ConvParams(weight=rng.standard_normal((8, 2)).astype(np.float32),
                          bias=np.zeros(8, np.float32))
        params = RegionalParams(
            lift=lift, blocks=tuple(zero_bias_steb(8, 2, seed=i) for i in range(4)))
        out = regional_extractor_forward(np.zeros((3, 2, 8, 8), np.float32),
                                         params, 4)
        assert np.array_equal(out, np.zeros_like(out))

    def test_regional_deterministic(self):
        from evtpr.kernels import RegionalParams
        from evtpr.pipeline import _init_conv1x1
        rng = np.random.default_rng(16)
        params = RegionalParams(
            lift=_init_conv1x1(rng, 2, 8),
            blocks=tuple(_init_steb(rng, 8, 2, 2) for _ in range(4)))
        tpr = np.random.default_rng(17).standard_normal((3, 2, 8, 8)).astype(np.float32)
        a = regional_extractor_forward(tpr, params, 4)
        b = regional_extractor_forward(tpr.copy(), params, 4)
        assert np.array_equal(a, b)

    def _holistic_params(self, rng, c, bins, depth):
        from evtpr.kernels import HolisticParams
        from evtpr.pipeline import _init_conv, _init_conv1x1
        return HolisticParams(
            frame_lift=_init_conv1x1(rng, 3, c),
            event_lift=_init_conv1x1(rng, bins, c),
            encoder_blocks=tuple(_init_steb(rng, c, 2, 2) for _ in range(depth)),
            downs=tuple(_init_conv(rng, c, c, 2) for _ in range(depth)),
            decoder_blocks=tuple(_init_steb(rng, c, 2, 2) for _ in range(depth)),
            ups=tuple(_init_conv(rng, c, c, 3) for _ in range(depth)),
        )

    def test_holistic_keeps_resolution(self):
        rng = np.random.default_rng(18)
        params = self._holistic_params(rng, 4, 3, 2)
        frames = rng.random((3, 3, 16, 16)).astype(np.float32)
        segments = [rng.standard_normal((3, 16, 16)) for _ in range(2)]
        out = holistic_extractor_forward(frames, segments, params, 4)
        assert out.shape == (5, 4, 16, 16)

    def test_holistic_minimal_input_single_segment(self):
        rng = np.random.default_rng(19)
        params = self._holistic_params(rng, 4, 3, 1)
        frames = rng.random((2, 3, 8, 8)).astype(np.float32)
        out = holistic_extractor_forward(frames, [rng.standard_normal((3, 8, 8))],
                                         params, 4)
        assert out.shape == (3, 4, 8, 8)
        with pytest.raises(InvalidInputError):
            holistic_extractor_forward(frames, [], params, 4)

    def test_holistic_deterministic(self):
        rng = np.random.default_rng(20)
        params = self._holistic_params(rng, 4, 3, 2)
        data_rng = np.random.default_rng(21)
        frames = data_rng.random((2, 3, 16, 16)).astype(np.float32)
        segments = [data_rng.standard_normal((3, 16, 16))]
        a = holistic_extractor_forward(frames, segments, params, 4)
        b = holistic_extractor_forward(frames.copy(),
                                       [s.copy() for s in segments], params, 4)
        assert np.array_equal(a, b)


def make_temporal_params(rng, c_t, c_ts, hidden=8):
    return TemporalEmbedParams(
        mlp=_init_mlp(rng, [1, hidden, c_t], ["relu", "none"]),
        compress=ConvParams(
            weight=rng.standard_normal((c_ts, c_t)).astype(np.float32),
            bias=rng.standard_normal(c_ts).astype(np.float32)))


def forced_output_mlp(c_t, value):
    """Two-layer MLP that outputs a constant vector regardless of t."""
    return MlpParams(
        weights=(np.zeros((1, 1), np.float32), np.zeros((c_t, 1), np.float32)),
        biases=(np.zeros(1, np.float32), np.full(c_t, value, np.float32)),
        activations=("relu", "none"))


class TestTemporalEmbed:
    def test_identity_attention_before_compression(self):
        rng = np.random.default_rng(22)
        c_t = 6
        r_t = rng.standard_normal((c_t, 4, 4)).astype(np.float32)
        params = TemporalEmbedParams(
            mlp=forced_output_mlp(c_t, 1.0),
            compress=ConvParams(weight=np.eye(c_t, dtype=np.float32),
                                bias=np.zeros(c_t, np.float32)))
        out = temporal_embed(0.3, params, r_t)
        assert np.allclose(out, r_t, atol=1e-7)

    def test_zero_attention_gives_zero(self):
        rng = np.random.default_rng(23)
        c_t = 6
        r_t = rng.standard_normal((c_t, 4, 4)).astype(np.float32)
        params = TemporalEmbedParams(
            mlp=forced_output_mlp(c_t, 0.0),
            compress=ConvParams(weight=np.eye(c_t, dtype=np.float32),
                                bias=np.zeros(c_t, np.float32)))
        assert np.allclose(temporal_embed(0.7, params, r_t), 0.0)

    def test_matches_matvec_broadcast_oracle(self):
        rng = np.random.default_rng(24)
        for _ in range(100):
            c_t = int(rng.integers(2, 8))
            c_ts = int(rng.integers(1, 6))
            t = float(rng.uniform(0, 1))
            params = make_temporal_params(rng, c_t, c_ts)
            r_t = rng.standard_normal((c_t, 3, 3)).astype(np.float32)
            out = temporal_embed(t, params, r_t)
            # dense-layer reference in float64
            hid = np.maximum(
                params.mlp.weights[0].astype(np.float64) @ [t]
                + params.mlp.biases[0], 0.0)
            attn = params.mlp.weights[1].astype(np.float64) @ hid + params.mlp.biases[1]
            weighted = attn[:, None, None] * r_t.astype(np.float64)
            ref = np.einsum("oc,chw->ohw", params.compress.weight.astype(np.float64),
                            weighted) + params.compress.bias[:, None, None]
            assert np.allclose(out, ref, rtol=1e-5, atol=1e-6)

    def test_t_out_of_range(self):
        params = make_temporal_params(np.random.default_rng(25), 4, 2)
        with pytest.raises(InvalidInputError):
            temporal_embed(1.5, params, np.zeros((4, 2, 2), np.float32))


def naive_spatial_decode(feature, queries, decoder):
    """Geometric oracle: nearest-center search + closed-form area weights,
    float64 dense layers evaluated per neighbor."""
    c, h, w = feature.shape
    outs = []
    for qx, qy in queries:
        rows = sorted(range(h), key=lambda i: abs(qy - (i + 0.5)))[:2]
        cols = sorted(range(w), key=lambda j: abs(qx - (j + 0.5)))[:2]
        cells = sorted((i, j) for i in rows for j in cols)
        rgb = []
        wts = []
        for i, j in cells:
            inp = np.concatenate([feature[:, i, j].astype(np.float64),
                                  [qx - (j + 0.5), qy - (i + 0.5)]])
            out = inp
            for wm, bm, act in zip(decoder.weights, decoder.biases,
                                   decoder.activations):
                out = wm.astype(np.float64) @ out + bm.astype(np.float64)
                if act == "relu":
                    out = np.maximum(out, 0.0)
            rgb.append(out)
            oi = max(ii for ii, _ in cells) + min(ii for ii, _ in cells) - i
            oj = max(jj for _, jj in cells) + min(jj for _, jj in cells) - j
            wts.append(abs((qx - (oj + 0.5)) * (qy - (oi + 0.5))))
        wts = np.array(wts) / sum(wts)
        outs.append(sum(wt * r for wt, r in zip(wts, rgb)))
    return np.array(outs)


class TestSpatialDecode:
    def test_constant_field_invariance(self):
        rng = np.random.default_rng(26)
        c = 5
        decoder = _init_mlp(rng, [c + 2, 8, 8, 8, 3],
                            ["relu", "relu", "relu", "none"])
        feature = np.full((c, 4, 4), 0.3, np.float32)
        reference = None
        for s in (1.0, 1.7, 2.0, 3.5):
            q = np.array([[2.0, 2.0], [1.3, 2.9], [0.6, 3.2]])
            out = spatial_decode(feature, q, s, decoder)
            # identical per query position and per scale up to offsets:
            # offsets differ per query, so only compare the center query
            if reference is None:
                reference = out[0]
            assert np.allclose(out[0], reference, atol=1e-6)

    def test_constant_field_weight_partition(self):
        # with a linear decoder ignoring offsets, output must equal the
        # constant candidate exactly for any query: weights sum to 1
        c = 3
        w_lin = np.zeros((3, c + 2), np.float32)
        w_lin[:, :c] = 1.0
        decoder = MlpParams(weights=(w_lin,), biases=(np.zeros(3, np.float32),),
                            activations=("none",))
        feature = np.full((c, 5, 5), 0.21, np.float32)
        rng = np.random.default_rng(27)
        q = np.column_stack([rng.uniform(0, 5, 50), rng.uniform(0, 5, 50)])
        out = spatial_decode(feature, q, 2.0, decoder)
        assert np.allclose(out, 3 * 0.21, atol=1e-6)

    def test_cell_center_gets_full_weight(self):
        rng = np.random.default_rng(28)
        c = 4
        decoder = _init_mlp(rng, [c + 2, 8, 8, 8, 3],
                            ["relu", "relu", "relu", "none"])
        feature = rng.standard_normal((c, 4, 4)).astype(np.float32)
        q = np.array([[1.5, 2.5]])  # center of cell (row 2, col 1)
        out = spatial_decode(feature, q, 1.0, decoder)
        inp = np.concatenate([feature[:, 2, 1], np.zeros(2, np.float32)])
        ref = mlp_forward(inp[None], decoder)[0]
        assert np.allclose(out[0], ref, atol=1e-6)

    def test_matches_geometric_oracle(self):
        rng = np.random.default_rng(29)
        for _ in range(100):
            c = int(rng.integers(1, 6))
            decoder = _init_mlp(rng, [c + 2, 6, 6, 6, 3],
                                ["relu", "relu", "relu", "none"])
            feature = rng.standard_normal((c, 4, 4)).astype(np.float32)
            # interior queries away from the outer half-cell margin
            q = np.column_stack([rng.uniform(0.51, 3.49, 7),
                                 rng.uniform(0.51, 3.49, 7)])
            out = spatial_decode(feature, q, 1.5, decoder)
            ref = naive_spatial_decode(feature, q, decoder)
            assert np.allclose(out, ref, rtol=1e-5, atol=1e-5)

    def test_query_outside_extent(self):
        decoder = _init_mlp(np.random.default_rng(30), [4, 4, 4, 4, 3],
                            ["relu", "relu", "relu", "none"])
        feature = np.zeros((2, 4, 4), np.float32)
        with pytest.raises(InvalidInputError):
            spatial_decode(feature, np.array([[5.0, 1.0]]), 1.0, decoder)


class TestCharbonnier:
    def test_zero_residual(self):
        a = np.random.default_rng(31).random((4, 4))
        assert charbonnier_loss(a, a, eps=1e-3) == pytest.approx(1e-3)

    def test_uniform_residual_closed_form(self):
        a = np.zeros((8, 8))
        d, eps = 0.2, 1e-3
        assert charbonnier_loss(a, a + d, eps=eps) == pytest.approx(
            math.sqrt(d * d + eps * eps))

    def test_symmetry(self):
        rng = np.random.default_rng(32)
        a, b = rng.random((6, 6)), rng.random((6, 6))
        assert charbonnier_loss(a, b) == pytest.approx(charbonnier_loss(b, a))

    def test_shape_mismatch(self):
        with pytest.raises(InvalidInputError):
            charbonnier_loss(np.zeros((2, 2)), np.zeros((3, 2)))

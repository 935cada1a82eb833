import numpy as np
import pytest

import reference_net as R
from helpers import random_params
from oracles import conv2d_loops
from wavedh import blocks as B
from wavedh import wavelet
from wavedh.blocks import ConvKind, Params
from wavedh.errors import ConfigError, DimensionError, ManifestError

KINDS = [ConvKind.GROUP, ConvKind.STANDARD, ConvKind.DEPTHWISE]


def _x(rng, c, h=8, w=8, n=2):
    return rng.random((n, c, h, w), dtype=np.float32)


def _zeros(layers):
    return Params(B.zero_params(layers))


# ---- zero-parameter behaviour ------------------------------------------------

@pytest.mark.parametrize("kind", KINDS)
def test_fmbconv_zero_is_identity(rng, kind):
    x = _x(rng, 16)
    assert np.array_equal(B.fmbconv(x, _zeros(B.fmbconv_layers(16, kind)), kind), x)


@pytest.mark.parametrize("kind", KINDS)
def test_fmb_zero_is_identity(rng, kind):
    x = rng.standard_normal((1, 16, 6, 6)).astype(np.float32)
    assert np.array_equal(B.fmb(x, _zeros(B.fmb_layers(16, kind)), kind), x)


@pytest.mark.parametrize("n_fmb", [0, 1, 2])
def test_wave_block_zero_is_identity(rng, n_fmb):
    x = rng.standard_normal((1, 16, 8, 10)).astype(np.float32)
    y = B.wave_block(x, _zeros(B.wave_block_layers(16, n_fmb)), n_fmb)
    assert np.array_equal(y, x)


def test_cca_zero_gives_half(rng):
    x = np.broadcast_to(rng.random((1, 8, 1, 1), dtype=np.float32), (1, 8, 4, 4)).copy()
    y = B.cca(x, _zeros(B.cca_layers(8)))
    assert np.array_equal(y, 0.5 * x)


def test_lka_zero_annihilates(rng):
    x = _x(rng, 8)
    assert not B.lka(x, _zeros(B.lka_layers(8))).any()


def test_esdb_zero_is_zero(rng):
    x = _x(rng, 8)
    assert not B.esdb(x, _zeros(B.esdb_layers(8))).any()


def test_channel_projection_zero_is_identity(rng):
    x = _x(rng, 8)
    assert np.array_equal(B.channel_projection(x, _zeros(B.channel_projection_layers(8))), x)


# ---- composition oracles -------------------------------------------------------

def _check(got, want, atol=1e-5):
    assert got.shape == want.shape
    np.testing.assert_allclose(got, want, atol=atol, rtol=0)


@pytest.mark.parametrize("kind", KINDS)
def test_fmbconv_composition(rng, kind):
    layers = B.fmbconv_layers(16, kind)
    store, x = random_params(layers, 1), _x(rng, 16)
    _check(B.fmbconv(x, Params(store), kind), R.fmbconv(x, R.P(store), kind.value))


def test_cca_composition(rng):
    layers = B.cca_layers(16)
    store, x = random_params(layers, 2, scale=3), _x(rng, 16)
    _check(B.cca(x, Params(store)), R.cca(x, R.P(store)))


@pytest.mark.parametrize("kind", KINDS)
def test_fmb_composition(rng, kind):
    layers = B.fmb_layers(16, kind)
    store, x = random_params(layers, 3), _x(rng, 16)
    _check(B.fmb(x, Params(store), kind), R.fmb(x, R.P(store), kind.value))


def test_lka_composition(rng):
    layers = B.lka_layers(8)
    store, x = random_params(layers, 4), _x(rng, 8, 24, 24)
    _check(B.lka(x, Params(store)), R.lka(x, R.P(store)))


def test_lka_ones_kernel_on_constant():
    # all-ones kernels, zero bias, constant 1 input: DW5 interior = 25,
    # dilated 7x7 over a 5x5-sized map only hits the centre tap -> 25, pw 1x1 sums d=2 channels
    layers = B.lka_layers(2)
    store = {k: np.ones(v, np.float32) if k.endswith("weight") else np.zeros(v, np.float32)
             for k, v in B.weight_manifest(layers).items()}
    x = np.ones((1, 2, 5, 5), np.float32)
    dw = conv2d_loops(x, store["dw.weight"], None, 1, 2, 1, 2)
    dwd = conv2d_loops(dw, store["dwd.weight"], None, 1, 9, 3, 2)
    pw = conv2d_loops(dwd, store["pw.weight"], None, 1, 0, 1, 1)
    y = B.lka(x, Params(store))
    np.testing.assert_allclose(y, x * pw, atol=1e-4)
    assert y[0, 0, 2, 2] == 2 * 25


def test_esdb_composition(rng):
    layers = B.esdb_layers(8)
    store, x = random_params(layers, 5), _x(rng, 8)
    _check(B.esdb(x, Params(store)), R.esdb(x, R.P(store)))


def test_esdb_concat_width():
    fuse = B.conv_specs(B.esdb_layers(24))["fuse"]
    assert (fuse.in_channels, fuse.out_channels) == (48, 24)


@pytest.mark.parametrize("kind", KINDS)
def test_wave_block_composition(rng, kind):
    layers = B.wave_block_layers(16, 1, kind)
    store, x = random_params(layers, 6), _x(rng, 16)
    _check(B.wave_block(x, Params(store), 1, kind), R.wave_block(x, R.P(store), 1, kind.value))


def test_wave_down_composition(rng):
    layers = B.wave_down_layers(8)
    store, x = random_params(layers, 7), _x(rng, 8)
    y, highs = B.wave_down(x, Params(store))
    ry, rh = R.wave_down(x, R.P(store))
    _check(y, ry)
    _check(highs, rh)


@pytest.mark.parametrize("kind", KINDS)
def test_wave_up_composition(rng, kind):
    layers = B.wave_up_layers(32, kind)
    store = random_params(layers, 8)
    x, highs = _x(rng, 32, 4, 4), rng.standard_normal((2, 48, 4, 4)).astype(np.float32)
    _check(B.wave_up(x, highs, Params(store), kind), R.wave_up(x, highs, R.P(store), kind.value))


# ---- structure and shapes ------------------------------------------------------

def test_expansion_and_projection_widths():
    assert B.expansion_width(32, 1.5) == 48
    assert B.projection_hidden(64, 1.25) == 40
    expand = B.conv_specs(B.fmbconv_layers(32, ConvKind.GROUP))["expand"]
    assert (expand.out_channels, expand.groups, expand.kernel_h) == (48, 4, 3)
    fc1 = B.conv_specs(B.channel_projection_layers(64, 1.25))["fc1"]
    assert (fc1.in_channels, fc1.out_channels) == (32, 40)


def test_cca_hidden_floor():
    assert B.cca_hidden(8) == 4
    assert B.cca_hidden(64) == 16


@pytest.mark.parametrize("d", [2, 4, 8, 16])
@pytest.mark.parametrize("hw", [(2, 2), (4, 6), (10, 8)])
def test_wave_down_up_shapes(rng, d, hw):
    x = _x(rng, d, *hw, n=1)
    y, highs = B.wave_down(x, Params(random_params(B.wave_down_layers(d), d)))
    assert y.shape == (1, 2 * d, hw[0] // 2, hw[1] // 2)
    assert highs.shape == (1, 3 * d, hw[0] // 2, hw[1] // 2)
    kind = ConvKind.STANDARD  # any width works without group constraints
    up = B.wave_up(y, highs, Params(random_params(B.wave_up_layers(2 * d, kind), d)), kind)
    assert up.shape == x.shape


def test_wave_up_rejects_bad_highs(rng):
    p = Params(B.zero_params(B.wave_up_layers(16)))
    with pytest.raises(DimensionError):
        B.wave_up(_x(rng, 16, 4, 4), np.zeros((2, 24, 4, 5), np.float32), p)


def test_wave_block_detail_bands_pass_through(rng, monkeypatch):
    seen = {}
    real_idwt = B.idwt2

    def spy(bands):
        seen["in"] = [np.array(b) for b in bands]
        return real_idwt(bands)

    monkeypatch.setattr(B, "idwt2", spy)
    x = _x(rng, 16)
    B.wave_block(x, Params(random_params(B.wave_block_layers(16), 9)))
    ref = wavelet.dwt2(x)
    for got, want in zip(seen["in"][1:], ref[1:]):
        assert got.tobytes() == want.tobytes()
    assert seen["in"][0].shape == (2, 16, 4, 4)


def test_attention_maps_bounded(rng):
    sb = wavelet.dwt2(rng.standard_normal((1, 8, 8, 8)).astype(np.float32) * 50)
    m = B.wave_attention(sb, Params(random_params(B.wave_attention_layers(8), 10, scale=20)))
    assert np.all(m > 0) and np.all(m < 1)
    x = rng.standard_normal((1, 8, 8, 8)).astype(np.float32) * 100
    a = B.cca_weights(x, Params(random_params(B.cca_layers(8), 11, scale=20)))
    assert np.all(a > 0) and np.all(a < 1)


def test_config_errors():
    with pytest.raises(ConfigError):
        B.fmb_layers(7)
    with pytest.raises(ConfigError):
        B.esdb_layers(5)
    with pytest.raises(ConfigError):
        B.fmbconv_layers(6, ConvKind.GROUP)  # 4 groups do not divide 6
    with pytest.raises(ConfigError):
        B.fmbconv_layers(8, "bogus")


def test_wave_block_odd_dims(rng):
    with pytest.raises(DimensionError):
        B.wave_block(_x(rng, 16, 7, 8), Params(B.zero_params(B.wave_block_layers(16))))


def test_missing_parameter_raises_manifest_error(rng):
    store = B.zero_params(B.fmbconv_layers(16))
    del store["project.bias"]
    with pytest.raises(ManifestError, match="project.bias"):
        B.fmbconv(_x(rng, 16), Params(store))

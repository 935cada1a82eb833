import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import haar_matrix_dwt
from wavedh import tensor as T
from wavedh.errors import DimensionError
from wavedh.wavelet import HAAR_KERNELS, dwt2, idwt2


def test_golden_2x2():
    x = np.array([[1, 2], [3, 4]], np.float32).reshape(1, 1, 2, 2)
    sb = dwt2(x)
    assert [float(b[0, 0, 0, 0]) for b in sb] == [5.0, 2.0, 1.0, 0.0]


def test_kernels_orthonormal():
    k = np.stack([v.ravel() for v in HAAR_KERNELS.values()])
    np.testing.assert_allclose(k @ k.T, np.eye(4), atol=1e-7)


def test_matches_kernel_convolution(rng):
    x = rng.standard_normal((2, 3, 6, 8)).astype(np.float32)
    sb = dwt2(x)
    for name, band in zip(("ll", "lh", "hl", "hh"), sb):
        w = np.tile(HAAR_KERNELS[name][None, None], (3, 1, 1, 1))
        ref = T.conv2d(x, w, None, T.ConvSpec(3, 3, 2, 2, stride=2, groups=3, has_bias=False))
        np.testing.assert_allclose(band, ref, atol=1e-6)


def test_matches_block_sum_oracle(rng):
    x = rng.random((1, 2, 4, 6)).astype(np.float32)
    for got, want in zip(dwt2(x), haar_matrix_dwt(x)):
        np.testing.assert_allclose(got, want, atol=1e-6)


def test_constant_has_no_detail():
    sb = dwt2(np.full((1, 1, 4, 4), 0.3, np.float32))
    assert np.allclose(sb.ll, 0.6)
    assert not sb.lh.any() and not sb.hl.any() and not sb.hh.any()


def test_lh_responds_to_horizontal_edge():
    x = np.zeros((1, 1, 2, 2), np.float32)
    x[..., 1, :] = 1
    sb = dwt2(x)
    assert sb.lh[0, 0, 0, 0] == 1 and sb.hl[0, 0, 0, 0] == 0


def test_adjoint(rng):
    x = rng.standard_normal((1, 2, 6, 4))
    y = [rng.standard_normal((1, 2, 3, 2)) for _ in range(4)]
    lhs = sum(float((a.astype(np.float64) * b).sum()) for a, b in zip(dwt2(x), y))
    rhs = float((x * idwt2(y).astype(np.float64)).sum())
    assert lhs == pytest.approx(rhs, rel=1e-5)


@settings(max_examples=60, deadline=None)
@given(n=st.integers(1, 3), c=st.integers(1, 4), h=st.integers(1, 10), w=st.integers(1, 10),
       seed=st.integers(0, 2**32 - 1))
def test_perfect_reconstruction_and_parseval(n, c, h, w, seed):
    x = np.random.default_rng(seed).uniform(-4, 4, (n, c, 2 * h, 2 * w)).astype(np.float32)
    sb = dwt2(x)
    assert sb.shape == (n, c, h, w)
    assert np.max(np.abs(idwt2(sb) - x)) <= 1e-5
    e_in = float((x.astype(np.float64) ** 2).sum())
    e_out = sum(float((b.astype(np.float64) ** 2).sum()) for b in sb)
    assert abs(e_out - e_in) <= 1e-5 * max(e_in, 1e-12)


def test_highs_order(rng):
    sb = dwt2(rng.random((1, 2, 4, 4)).astype(np.float32))
    assert np.array_equal(sb.highs(), np.concatenate([sb.lh, sb.hl, sb.hh], axis=1))


def test_errors():
    with pytest.raises(DimensionError):
        dwt2(np.zeros((1, 1, 3, 4), np.float32))
    with pytest.raises(DimensionError):
        dwt2(np.zeros((4, 4), np.float32))
    z = np.zeros((1, 1, 2, 2), np.float32)
    with pytest.raises(DimensionError):
        idwt2((z, z, z, np.zeros((1, 1, 2, 3), np.float32)))

import io

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wavedh import imaging
from wavedh.errors import DimensionError, FormatError, UnsupportedError
from wavedh.imaging import ImageBuffer


def _img(rng, w=5, h=3):
    return ImageBuffer.from_array(rng.integers(0, 256, (h, w, 3), dtype=np.uint8))


def test_single_white_pixel_bytes():
    img = ImageBuffer(1, 1, np.array([255, 255, 255], np.uint8))
    blob = imaging.encode_ppm(img)
    assert blob == b"P6\n1 1\n255\n\xff\xff\xff"
    # 11 header bytes ("P6\n", "1 1\n", "255\n") plus one RGB triple
    assert len(blob) == 14


def test_round_trip_file(rng, tmp_path):
    img = _img(rng)
    imaging.write_ppm(img, tmp_path / "a.ppm")
    assert imaging.read_ppm(tmp_path / "a.ppm") == img
    buf = io.BytesIO()
    imaging.write_ppm(img, buf)
    assert imaging.read_ppm(io.BytesIO(buf.getvalue())) == img


def test_reads_comments_and_odd_whitespace(rng):
    img = _img(rng, 2, 2)
    blob = b"P6 # made by hand\n2\t2\r\n# max next\n255 " + img.pixels.tobytes()
    assert imaging.decode_ppm(blob) == img


def test_rejects_wrong_magic_and_maxval(rng):
    body = _img(rng, 1, 1).pixels.tobytes()
    with pytest.raises(FormatError):
        imaging.decode_ppm(b"P3\n1 1\n255\n" + body)
    with pytest.raises(UnsupportedError):
        imaging.decode_ppm(b"P6\n1 1\n65535\n" + body + body)
    with pytest.raises(UnsupportedError):
        imaging.decode_ppm(b"P6\n1 1\n15\n" + body)
    with pytest.raises(FormatError):
        imaging.decode_ppm(b"P6\n1 1\n0\n" + body)


@pytest.mark.parametrize("blob", [b"", b"P6", b"P6\n1 1\n255", b"P6\n1 1\n255\n\x00", b"P6\n0 1\n255\n",
                                  b"P6\n1 x\n255\n\0\0\0", b"P6\n1 1\n255\n\0\0\0\0"])
def test_rejects_malformed(blob):
    with pytest.raises(FormatError):
        imaging.decode_ppm(blob)


def test_pgm(rng):
    g = rng.integers(0, 256, (4, 6), dtype=np.uint8)
    assert np.array_equal(imaging.read_pgm(imaging.encode_pgm(g)), g)
    with pytest.raises(FormatError):
        imaging.read_pgm(imaging.encode_ppm(_img(rng)))


def test_buffer_invariant():
    with pytest.raises(DimensionError):
        ImageBuffer(2, 2, np.zeros(11, np.uint8))


def test_tensor_layout(rng):
    img = _img(rng, 4, 2)
    t = imaging.to_tensor(img)
    assert t.shape == (1, 3, 2, 4) and t.dtype == np.float32
    assert t[0, 1, 1, 3] == np.float32(img.to_array()[1, 3, 1]) / np.float32(255)
    assert imaging.from_tensor(t) == img
    assert imaging.from_tensor(t[0]) == img


def test_from_tensor_clamps_and_rounds():
    t = np.array([-0.5, 0.0, 0.5 / 255, 1.5 / 255, 1.0, 2.0], np.float64).reshape(3, 1, 2)
    assert imaging.from_tensor(t).to_array().transpose(2, 0, 1).ravel().tolist() == [0, 0, 1, 2, 255, 255]
    with pytest.raises(FormatError):
        imaging.from_tensor(np.full((3, 1, 1), np.nan))


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=3, max_size=30).filter(lambda v: len(v) % 3 == 0))
def test_normalisation_round_trip_error(vals):
    t = np.array(vals, np.float32).reshape(3, 1, -1)
    back = imaging.to_tensor(imaging.from_tensor(t))[0]
    assert np.max(np.abs(back.astype(np.float64) - t)) <= 1 / 510 + 1e-7

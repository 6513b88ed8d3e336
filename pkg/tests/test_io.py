import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from elreg import io
from elreg.errors import ImageError
from elreg.image import ImageGrid
from elreg.transforms import AffineParams, DeformationField


@pytest.mark.parametrize("top", [255, 4095])
def test_pgm_roundtrip(tmp_path, top):
    rng = np.random.default_rng(top)
    img = ImageGrid(rng.integers(0, top + 1, size=(7, 11)).astype(float))
    io.write_image(tmp_path / "a.pgm", img)
    back = io.read_image(tmp_path / "a.pgm")
    np.testing.assert_array_equal(back.data, img.data)
    raw = (tmp_path / "a.pgm").read_bytes()
    assert raw.startswith(b"P5\n11 7\n%d\n" % (255 if top == 255 else 65535))


def test_pgm_header_comments(tmp_path):
    path = tmp_path / "c.pgm"
    path.write_bytes(b"P5\n# made by hand\n3 2 # size\n255\n" + bytes([0, 1, 2, 3, 4, 250]))
    np.testing.assert_array_equal(io.read_pgm(path).data, [[0, 1, 2], [3, 4, 250]])


def test_pgm_truncated(tmp_path):
    path = tmp_path / "t.pgm"
    path.write_bytes(b"P5\n4 4\n255\n" + bytes(10))
    with pytest.raises(ImageError):
        io.read_pgm(path)


def test_unknown_format(tmp_path):
    path = tmp_path / "x.bin"
    path.write_bytes(b"GIF89a")
    with pytest.raises(ImageError):
        io.read_image(path)


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 9), st.integers(1, 9), st.integers(0, 2**32 - 1))
def test_raw_roundtrip_bit_exact(tmp_path_factory, w, h, seed):
    d = tmp_path_factory.mktemp("raw")
    rng = np.random.default_rng(seed)
    img = ImageGrid(rng.normal(size=(h, w)) * 1e3)
    io.write_image(d / "a.elrg", img)
    np.testing.assert_array_equal(io.read_image(d / "a.elrg").data, img.data)
    u = DeformationField(rng.normal(size=(h, w)), rng.normal(size=(h, w)))
    io.write_field(d / "u.eldf", u)
    v = io.read_field(d / "u.eldf")
    np.testing.assert_array_equal(v.ux, u.ux)
    np.testing.assert_array_equal(v.uy, u.uy)


def test_raw_size_mismatch(tmp_path):
    img = ImageGrid(np.zeros((3, 3)))
    io.write_image(tmp_path / "a.elrg", img)
    buf = (tmp_path / "a.elrg").read_bytes()
    (tmp_path / "b.elrg").write_bytes(buf[:-8])
    with pytest.raises(ImageError):
        io.read_image(tmp_path / "b.elrg")


def test_affine_text_roundtrip(tmp_path):
    A = AffineParams(1.0000001, -2.5e-7, 12.345678901234, 0.0, 0.999, -3.0)
    io.write_affine(tmp_path / "t.txt", A)
    text = (tmp_path / "t.txt").read_text()
    assert len(text.split()) == 6 and "e" not in text
    assert io.read_affine(tmp_path / "t.txt") == A

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from elreg.errors import DimensionMismatch, TooManyLevels
from elreg.image import ImageGrid, Scale, warp_affine
from elreg.pyramid import (
    build_pyramid,
    clamp_depth,
    demote_affine,
    level_sizes,
    max_depth,
    promote_affine,
    promote_field,
    reduce,
)
from elreg.transforms import AffineParams, DeformationField, LocalAffineField, params_to_field

from conftest import smooth_random


@settings(max_examples=60, deadline=None)
@given(st.integers(8, 300), st.integers(8, 300))
def test_ceil_halving(w, h):
    img = ImageGrid(np.zeros((h, w)))
    out = reduce(img)
    assert (out.width, out.height) == ((w + 1) // 2, (h + 1) // 2)


def test_four_levels_256():
    pyr = build_pyramid(ImageGrid(np.zeros((256, 256))), 4)
    assert [lv.width for lv in pyr] == [32, 64, 128, 256]
    assert level_sizes(64, 64, 4) == [(8, 8), (16, 16), (32, 32), (64, 64)]


def test_depth_one_is_input():
    img = smooth_random(20)
    pyr = build_pyramid(img, 1)
    assert pyr.depth == 1 and pyr.finest is img


def test_finest_unmodified_and_scale_kept():
    img = ImageGrid(smooth_random(40).data, Scale.STANDARD)
    pyr = build_pyramid(img, 3)
    assert pyr.finest is img
    assert all(lv.scale is Scale.STANDARD for lv in pyr)


def test_constant_preserved():
    pyr = build_pyramid(ImageGrid(np.full((50, 37), 3.25)), 3)
    for lv in pyr:
        np.testing.assert_allclose(lv.data, 3.25, rtol=0, atol=1e-12)


def test_too_many_levels():
    with pytest.raises(TooManyLevels):
        build_pyramid(ImageGrid(np.zeros((32, 32))), 4)
    assert max_depth(32, 32) == 3
    with pytest.warns(UserWarning):
        assert clamp_depth(32, 32, 4) == 3


def test_promote_demote():
    assert promote_affine(AffineParams.identity()) == AffineParams.identity()
    assert promote_affine(AffineParams.translation(1.5, -2)) == AffineParams.translation(3, -4)
    A = AffineParams(1.1, 0.1, 4.0, -0.05, 0.9, -8.0)
    assert promote_affine(promote_affine(demote_affine(A, 2))) == A


def test_promote_affine_cross_level():
    fine = smooth_random(128, 3, sigma=6.0)
    coarse = reduce(fine)
    top = fine.data.max()
    A = AffineParams(1.03, 0.02, 1.5, -0.02, 0.97, -2.0)
    want = warp_affine(coarse, A)
    got = reduce(warp_affine(fine, promote_affine(A)))
    diff = np.abs(want.data - got.data)[8:-8, 8:-8] / top
    assert diff.max() < 0.02


def test_promote_field_basic():
    z = promote_field(DeformationField.zeros(8, 6), 16, 12)
    assert z.shape == (12, 16) and z.rms() == 0
    one = promote_field(DeformationField(np.ones((6, 8)), np.zeros((6, 8))), 15, 11)
    np.testing.assert_array_equal(one.ux, 2.0)
    with pytest.raises(DimensionMismatch):
        promote_field(DeformationField.zeros(8, 6), 20, 12)


def test_promote_field_matches_affine():
    A = AffineParams(1.04, -0.03, 2.0, 0.02, 0.96, -1.0)
    coarse = params_to_field(LocalAffineField.constant(20, 20, A.vector()))
    fine = promote_field(coarse, 40, 40)
    ref = params_to_field(LocalAffineField.constant(40, 40, promote_affine(A).vector()))
    # bilinear sampling is exact for affine fields away from the clamped last row/column
    np.testing.assert_allclose(fine.ux[:-2, :-2], ref.ux[:-2, :-2], atol=1e-6)
    np.testing.assert_allclose(fine.uy[:-2, :-2], ref.uy[:-2, :-2], atol=1e-6)

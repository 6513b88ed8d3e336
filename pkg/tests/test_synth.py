import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from elreg.errors import InvalidParams
from elreg.evaluation import displacement_error
from elreg.standardization import detect_landmarks
from elreg.synth import (
    WarpKind,
    WarpSpec,
    draw_nonlinear_params,
    nonlinear_field,
    perturb_intensity,
    phantom,
    random_affine_warp,
    random_nonlinear_warp,
)
from elreg.transforms import AffineParams, DeformationField


def test_phantom_deterministic_and_bimodal():
    a, b = phantom(128, seed=3), phantom(128, seed=3)
    np.testing.assert_array_equal(a.data, b.data)
    assert not np.array_equal(a.data, phantom(128, seed=4).data)
    lm = detect_landmarks(a)
    assert 400 < lm.mu < 750


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_affine_rms_exact(seed):
    A = random_affine_warp(256, 256, 12.0, seed)
    assert 11.99 <= A.displacement(256, 256).rms() <= 12.01
    assert A == random_affine_warp(256, 256, 12.0, seed)


def test_affine_vanishing_rms_is_identity():
    A = random_affine_warp(64, 64, 1e-9, seed=1)
    np.testing.assert_allclose(A.vector(), AffineParams.identity().vector(), rtol=0, atol=1e-8)


def test_literal_formula_by_hand():
    u = nonlinear_field(12, 30, (1, 2, 0, 5, 0, 2, 0, 5))
    y = np.arange(30.0)[:, None]
    np.testing.assert_allclose(u.ux, np.broadcast_to(np.sin(y / 5), (30, 12)), atol=1e-12)
    np.testing.assert_allclose(u.uy, np.broadcast_to(np.cos(y / 5) - y, (30, 12)), atol=1e-12)


def test_zeroed_amplitudes():
    u = nonlinear_field(8, 6, (1, 0, 0, 5, 0, 0, 0, 5), amplitudes=(0.0, 0.0))
    np.testing.assert_array_equal(u.ux, 0.0)
    np.testing.assert_array_equal(u.uy, -np.arange(6.0)[:, None] * np.ones((1, 8)))


def test_sinusoid_depends_only_on_y():
    n = draw_nonlinear_params(40, 40, seed=2)
    n[0], n[4] = 1.0, 0.0
    u = nonlinear_field(40, 40, n, restore_y_identity=True)
    np.testing.assert_allclose(u.ux, np.broadcast_to(u.ux[:, :1], u.ux.shape), atol=1e-12)
    np.testing.assert_allclose(u.uy, np.broadcast_to(u.uy[:, :1], u.uy.shape), atol=1e-12)


def test_restored_identity_shear():
    u = nonlinear_field(10, 10, (1, 0, 0, 5, 0.02, 0, 0, 5), restore_y_identity=True, amplitudes=(0, 0))
    x = np.arange(10.0)[None, :]
    np.testing.assert_allclose(u.uy, np.broadcast_to(0.02 * x, (10, 10)))


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31 - 1), st.floats(1.0, 12.0))
def test_nonlinear_rms_and_determinism(seed, rms):
    u = random_nonlinear_warp(128, 128, rms, seed)
    assert abs(u.rms() - rms) <= 0.01
    v = random_nonlinear_warp(128, 128, rms, seed)
    np.testing.assert_array_equal(u.ux, v.ux)
    assert displacement_error(DeformationField.zeros(128, 128), u) == pytest.approx(rms, abs=0.01)


def test_nonlinear_warps_do_not_fold():
    for seed in range(30):
        u = random_nonlinear_warp(256, 256, 12.0, seed)
        jac = (1 + np.gradient(u.ux, axis=1)) * (1 + np.gradient(u.uy, axis=0)) - np.gradient(
            u.ux, axis=0
        ) * np.gradient(u.uy, axis=1)
        assert jac.min() > 0, seed


def test_invalid():
    with pytest.raises(InvalidParams):
        nonlinear_field(4, 4, (1, 0, 0, 0, 0, 0, 0, 5))
    with pytest.raises(InvalidParams):
        random_affine_warp(4, 4, 0.0)
    with pytest.raises(InvalidParams):
        WarpSpec(WarpKind.NONLINEAR, n=(1, 2, 3))


def test_perturbation_is_monotone():
    img = phantom(64, seed=5)
    out = perturb_intensity(img, seed=9)
    order = np.argsort(img.data, axis=None, kind="stable")
    assert np.all(np.diff(out.data.ravel()[order]) >= 0)
    np.testing.assert_array_equal(out.data, perturb_intensity(img, seed=9).data)

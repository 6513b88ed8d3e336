import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from elreg.config import RegistrationConfig
from elreg.errors import DimensionMismatch
from elreg.evaluation import (
    BatchReport,
    EvalPair,
    Mode,
    PairResult,
    batch_evaluate,
    checkerboard,
    displacement_error,
    format_table,
)
from elreg.image import ImageGrid, warp_affine
from elreg.synth import random_affine_warp
from elreg.transforms import AffineParams, DeformationField


class TestCheckerboard:
    def test_same_image(self):
        a = ImageGrid(np.arange(64.0).reshape(8, 8))
        np.testing.assert_array_equal(checkerboard(a, a, 3).data, a.data)

    def test_single_square(self):
        a, b = ImageGrid(np.ones((6, 9))), ImageGrid(np.zeros((6, 9)))
        np.testing.assert_array_equal(checkerboard(a, b, 9).data, a.data)

    def test_block_pattern(self):
        a, b = ImageGrid(np.ones((16, 16))), ImageGrid(np.zeros((16, 16)))
        out = checkerboard(a, b, 8).data
        expect = np.kron(np.array([[1, 0], [0, 1]]), np.ones((8, 8)))
        np.testing.assert_array_equal(out, expect)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(1, 12), st.integers(2, 30), st.integers(2, 30))
    def test_role_swap_is_complement(self, sq, w, h):
        rng = np.random.default_rng(sq * 1000 + w * 31 + h)
        a, b = ImageGrid(rng.normal(size=(h, w))), ImageGrid(rng.normal(size=(h, w)))
        ab, ba = checkerboard(a, b, sq).data, checkerboard(b, a, sq).data
        y, x = np.mgrid[0:h, 0:w]
        even = (x // sq + y // sq) % 2 == 0
        np.testing.assert_array_equal(np.where(even, ab, ba), a.data)
        np.testing.assert_array_equal(np.where(even, ba, ab), b.data)

    def test_default_square(self):
        a, b = ImageGrid(np.ones((64, 64))), ImageGrid(np.zeros((64, 64)))
        out = checkerboard(a, b).data
        assert out[0, 7] == 1 and out[0, 8] == 0

    def test_errors(self):
        with pytest.raises(DimensionMismatch):
            checkerboard(ImageGrid(np.ones((4, 4))), ImageGrid(np.ones((4, 5))))
        with pytest.raises(ValueError):
            checkerboard(ImageGrid(np.ones((4, 4))), ImageGrid(np.ones((4, 4))), 0)


class TestDisplacementError:
    def test_examples(self):
        u = DeformationField(np.random.default_rng(0).normal(size=(5, 5)), np.zeros((5, 5)))
        assert displacement_error(u, u) == 0
        shifted = DeformationField(u.ux + 3, u.uy + 4)
        assert displacement_error(shifted, u) == pytest.approx(5.0)

    def test_mismatch(self):
        with pytest.raises(DimensionMismatch):
            displacement_error(DeformationField.zeros(4, 4), DeformationField.zeros(5, 4))


def test_table_and_json():
    rep = BatchReport("affine", "standard", [PairResult("1", 0.1), PairResult("2", 0.3), PairResult("3", None, error="x")])
    assert rep.n == 3 and rep.failures == 1
    assert rep.mse_min <= rep.mse_mean <= rep.mse_max
    doc = json.loads(rep.to_json())
    assert {"n", "mse_mean", "mse_max", "mse_min", "pairs"} <= doc.keys()
    assert {"id", "mse", "disp_rms"} <= doc["pairs"][0].keys()
    lines = format_table({"On Standard Scale": rep}).splitlines()
    assert lines[0].split(" | ")[0].strip() == "Scale/Error"
    assert len({len(line) for line in lines}) == 1


@pytest.fixture(scope="module")
def affine_pairs(phantom64):
    pairs = []
    for seed in range(3):
        A = random_affine_warp(64, 64, 3.0, seed)
        pairs.append(EvalPair(str(seed), phantom64, warp_affine(phantom64, A), A))
    return pairs


def test_identical_pairs(phantom64):
    rep = batch_evaluate([EvalPair(str(k), phantom64, phantom64) for k in range(3)])
    assert rep.mse_mean == rep.mse_max == rep.mse_min < 1e-10


def test_batch_order_and_determinism(affine_pairs):
    cfg = RegistrationConfig(depth=3)
    a = batch_evaluate(affine_pairs, Mode.AFFINE, cfg)
    b = batch_evaluate(affine_pairs, "affine", cfg, jobs=2)
    assert [p.id for p in a.pairs] == ["0", "1", "2"]
    assert a.to_json() == b.to_json()
    assert all(p.disp_rms < 0.5 for p in a.pairs)
    assert a.mse_min <= a.mse_mean <= a.mse_max


def test_pair_failure_is_recorded(phantom64):
    bad = EvalPair("bad", phantom64, ImageGrid(np.zeros((32, 32))))
    rep = batch_evaluate([bad, EvalPair("ok", phantom64, phantom64)])
    assert rep.pairs[0].error and "DimensionMismatch" in rep.pairs[0].error
    assert rep.pairs[1].ok and rep.mse_mean < 1e-10


def test_empty_batch():
    with pytest.raises(ValueError):
        batch_evaluate([])

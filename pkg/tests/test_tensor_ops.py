"""Forward semantics of the tensor primitives against brute-force
references and frozen hand-computed values."""
import numpy as np
import pytest

import lfsr.numcore as nc
from lfsr.errors import DimensionError, StateError
from helpers import (
    bicubic_resize_loops,
    conv2d_loops,
    conv3d_loops,
    fold_loops,
    unfold_loops,
)


def t64(arr):
    with nc.precision("f64"):
        return nc.Tensor(np.asarray(arr, dtype=np.float64))


class TestArithmetic:
    def test_add_sub_mul_broadcast(self, rng):
        nc.set_precision("f64")
        a = nc.Tensor(rng.standard_normal((3, 4, 5)))
        b = nc.Tensor(rng.standard_normal((4, 1)))
        np.testing.assert_array_equal(nc.add(a, b).data, a.data + b.data)
        np.testing.assert_array_equal(nc.sub(a, b).data, a.data - b.data)
        np.testing.assert_array_equal(nc.mul(a, b).data, a.data * b.data)

    def test_incompatible_shapes_rejected(self):
        a = nc.Tensor(np.zeros((3, 4)))
        b = nc.Tensor(np.zeros((5, 4)))
        with pytest.raises(DimensionError):
            nc.add(a, b)

    def test_scalar_ops(self):
        a = t64([1.0, -2.0, 3.0])
        np.testing.assert_array_equal(nc.scale(a, 2.0).data, [2.0, -4.0, 6.0])
        np.testing.assert_array_equal(nc.add_scalar(a, 1.0).data, [2.0, -1.0, 4.0])
        np.testing.assert_array_equal(nc.neg(a).data, [-1.0, 2.0, -3.0])

    def test_operator_sugar_matches_functions(self, rng):
        nc.set_precision("f64")
        a = nc.Tensor(rng.standard_normal((2, 3)))
        b = nc.Tensor(rng.standard_normal((2, 3)))
        np.testing.assert_array_equal((a + b).data, nc.add(a, b).data)
        np.testing.assert_array_equal((a - b).data, nc.sub(a, b).data)
        np.testing.assert_array_equal((a * 3.0).data, nc.scale(a, 3.0).data)
        np.testing.assert_array_equal((a / 2.0).data, nc.scale(a, 0.5).data)
        np.testing.assert_array_equal((-a).data, nc.neg(a).data)

    def test_matmul_and_dot(self, rng):
        nc.set_precision("f64")
        a = nc.Tensor(rng.standard_normal((3, 4)))
        b = nc.Tensor(rng.standard_normal((4, 2)))
        np.testing.assert_allclose(nc.matmul(a, b).data, a.data @ b.data, rtol=1e-15)
        v = nc.Tensor(rng.standard_normal(7))
        w = nc.Tensor(rng.standard_normal(7))
        assert nc.dot(v, w).item() == pytest.approx(float(v.data @ w.data), rel=1e-15)

    def test_matmul_rank_checks(self):
        with pytest.raises(DimensionError):
            nc.matmul(nc.Tensor(np.zeros((2, 3, 4))), nc.Tensor(np.zeros((4, 2))))
        with pytest.raises(DimensionError):
            nc.matmul(nc.Tensor(np.zeros((2, 3))), nc.Tensor(np.zeros((2, 3))))

    def test_mixed_dtypes_rejected(self):
        a = t64([1.0])
        with nc.precision("f32"):
            b = nc.Tensor(np.ones(1))
        with pytest.raises(ValueError):
            nc.add(a, b)


class TestPointwise:
    def test_relu_definition(self):
        x = t64([-1.0, 0.0, 2.0])
        np.testing.assert_array_equal(nc.relu(x).data, [0.0, 0.0, 2.0])

    def test_relu_all_negative_and_identity(self, rng):
        nc.set_precision("f64")
        neg = nc.Tensor(-rng.random((4, 4)) - 0.1)
        assert np.all(nc.relu(neg).data == 0.0)
        pos = nc.Tensor(rng.random((4, 4)))
        np.testing.assert_array_equal(nc.relu(pos).data, pos.data)

    def test_clamp01(self):
        x = t64([-0.5, 0.0, 0.25, 1.0, 1.5])
        np.testing.assert_array_equal(nc.clamp01(x).data, [0.0, 0.0, 0.25, 1.0, 1.0])

    def test_abs(self):
        x = t64([-2.0, 3.0, -0.5])
        np.testing.assert_array_equal(nc.abs_(x).data, [2.0, 3.0, 0.5])


class TestReductions:
    def test_sum_and_mean(self, rng):
        nc.set_precision("f64")
        x = nc.Tensor(rng.standard_normal((3, 5)))
        assert nc.sum_(x).item() == pytest.approx(float(x.data.sum()), rel=1e-15)
        assert nc.mean(x).item() == pytest.approx(float(x.data.mean()), rel=1e-15)

    def test_diff_matches_numpy(self, rng):
        nc.set_precision("f64")
        x = nc.Tensor(rng.standard_normal((4, 5, 6)))
        for axis in range(3):
            np.testing.assert_array_equal(nc.diff(x, axis).data, np.diff(x.data, axis=axis))

    def test_diff_needs_two_entries(self):
        with pytest.raises(DimensionError):
            nc.diff(nc.Tensor(np.zeros((1, 4))), 0)


class TestShaping:
    def test_concat(self, rng):
        nc.set_precision("f64")
        a = nc.Tensor(rng.standard_normal((2, 3)))
        b = nc.Tensor(rng.standard_normal((4, 3)))
        np.testing.assert_array_equal(
            nc.concat([a, b], axis=0).data, np.concatenate([a.data, b.data], axis=0)
        )

    def test_permute_reshape(self, rng):
        nc.set_precision("f64")
        x = nc.Tensor(rng.standard_normal((2, 3, 4)))
        np.testing.assert_array_equal(nc.permute(x, (2, 0, 1)).data, x.data.transpose(2, 0, 1))
        np.testing.assert_array_equal(nc.reshape(x, (6, 4)).data, x.data.reshape(6, 4))

    def test_slice_uv(self, rng):
        nc.set_precision("f64")
        x = nc.Tensor(rng.standard_normal((3, 4, 2, 2)))
        np.testing.assert_array_equal(nc.slice_uv(x, 1, 3).data, x.data[1, 3])
        with pytest.raises(ValueError):
            nc.slice_uv(x, 3, 0)

    def test_take_rows(self, rng):
        nc.set_precision("f64")
        x = nc.Tensor(rng.standard_normal((5, 3)))
        idx = np.array([4, 0, 0, 2])
        np.testing.assert_array_equal(nc.take_rows(x, idx).data, x.data[idx])

    def test_take_rows_out_of_range_is_state_error(self):
        x = nc.Tensor(np.zeros((3, 2)))
        with pytest.raises(StateError):
            nc.take_rows(x, np.array([0, 3]))

    def test_repeat_upsample(self):
        x = t64(np.arange(4.0).reshape(1, 2, 2))
        got = nc.repeat_upsample(x, 2).data
        expect = np.array([[0, 0, 1, 1], [0, 0, 1, 1], [2, 2, 3, 3], [2, 2, 3, 3]], dtype=np.float64)
        np.testing.assert_array_equal(got[0], expect)


class TestPixelShuffle:
    def test_identity_factor(self, rng):
        nc.set_precision("f64")
        x = nc.Tensor(rng.standard_normal((4, 3, 3)))
        np.testing.assert_array_equal(nc.pixel_shuffle(x, 1).data, x.data)

    def test_two_by_two_layout(self):
        """[a,b,c,d] channels land as rows [a,b],[c,d]."""
        x = t64(np.array([1.0, 2.0, 3.0, 4.0]).reshape(4, 1, 1))
        got = nc.pixel_shuffle(x, 2).data
        np.testing.assert_array_equal(got, [[[1.0, 2.0], [3.0, 4.0]]])

    def test_mapping_by_loops(self, rng):
        nc.set_precision("f64")
        c, r, h, w = 2, 3, 4, 5
        x = nc.Tensor(rng.standard_normal((c * r * r, h, w)))
        got = nc.pixel_shuffle(x, r).data
        for ch in range(c):
            for y in range(h):
                for xx in range(w):
                    for dy in range(r):
                        for dx in range(r):
                            assert got[ch, r * y + dy, r * xx + dx] == (
                                x.data[ch * r * r + dy * r + dx, y, xx]
                            )

    def test_shape_arithmetic(self):
        x = nc.Tensor(np.zeros((16, 8, 8)))
        assert nc.pixel_shuffle(x, 4).data.shape == (1, 32, 32)

    def test_indivisible_channels(self):
        with pytest.raises(DimensionError):
            nc.pixel_shuffle(nc.Tensor(np.zeros((6, 2, 2))), 2)


class TestRowOps:
    def test_normalize_rows_unit_norm(self, rng):
        nc.set_precision("f64")
        x = nc.Tensor(rng.standard_normal((6, 9)) + 0.1)
        norms = np.linalg.norm(nc.normalize_rows(x).data, axis=1)
        np.testing.assert_allclose(norms, 1.0, atol=1e-12)

    def test_normalize_rows_zero_row_stays_zero(self):
        x = t64(np.array([[0.0, 0.0], [3.0, 4.0]]))
        got = nc.normalize_rows(x).data
        np.testing.assert_array_equal(got[0], [0.0, 0.0])
        np.testing.assert_allclose(got[1], [0.6, 0.8], atol=1e-15)

    def test_argmax_rows_breaks_ties_low(self):
        x = t64(np.array([[1.0, 5.0, 5.0], [2.0, 0.0, 2.0]]))
        np.testing.assert_array_equal(nc.argmax_rows(x), [1, 0])

    def test_argmax_rows_rejects_empty(self):
        with pytest.raises(ValueError):
            nc.argmax_rows(nc.Tensor(np.zeros((0, 3))))

    def test_row_max(self):
        x = t64(np.array([[1.0, 5.0, 2.0], [-3.0, -1.0, -2.0]]))
        np.testing.assert_array_equal(nc.row_max(x).data, [5.0, -1.0])


class TestConv2d:
    def test_identity_kernel(self, rng):
        nc.set_precision("f64")
        x = nc.Tensor(rng.random((1, 5, 7)))
        w = nc.Tensor(np.ones((1, 1, 1, 1)))
        np.testing.assert_array_equal(nc.conv2d(x, w).data, x.data)

    def test_sum_kernel_on_constant_field(self):
        """All-ones 3x3 kernel over a constant 2.0 field sums to 18 away
        from the zero-padded border."""
        x = t64(np.full((1, 5, 5), 2.0))
        w = t64(np.ones((1, 1, 3, 3)))
        out = nc.conv2d(x, w, pad=1).data
        np.testing.assert_array_equal(out[0, 1:-1, 1:-1], np.full((3, 3), 18.0))

    def test_matches_loops_across_geometries(self, rng):
        nc.set_precision("f64")
        worst = 0.0
        for case in range(10):
            k = (1, 3, 3, 5, 3)[case % 5]
            stride = (1, 1, 2, 1, 2)[case % 5]
            pad = (0, 1, 1, 2, 0)[case % 5]
            x = rng.random((2, 3, 6, 7))
            w = rng.standard_normal((4, 3, k, k))
            b = rng.standard_normal(4) if case % 2 else None
            got = nc.conv2d(
                nc.Tensor(x), nc.Tensor(w), nc.Tensor(b) if b is not None else None,
                stride=stride, pad=pad,
            ).data
            ref = conv2d_loops(x, w, b, stride, pad)
            worst = max(worst, float(np.abs(got - ref).max()))
        assert worst < 1e-12

    def test_unbatched_equals_batched(self, rng):
        nc.set_precision("f64")
        x = rng.random((3, 6, 6))
        w = nc.Tensor(rng.standard_normal((2, 3, 3, 3)))
        single = nc.conv2d(nc.Tensor(x), w, pad=1).data
        batched = nc.conv2d(nc.Tensor(x[None]), w, pad=1).data
        np.testing.assert_array_equal(single, batched[0])

    def test_rejects_even_kernel(self):
        with pytest.raises(ValueError):
            nc.conv2d(nc.Tensor(np.zeros((1, 4, 4))), nc.Tensor(np.zeros((1, 1, 2, 2))))

    def test_rejects_channel_mismatch(self):
        with pytest.raises(DimensionError):
            nc.conv2d(nc.Tensor(np.zeros((2, 4, 4))), nc.Tensor(np.zeros((1, 3, 3, 3))), pad=1)

    def test_rejects_bad_bias(self):
        with pytest.raises(DimensionError):
            nc.conv2d(
                nc.Tensor(np.zeros((1, 4, 4))),
                nc.Tensor(np.zeros((2, 1, 3, 3))),
                nc.Tensor(np.zeros(3)),
                pad=1,
            )


class TestConv3d:
    def test_identity_kernel(self, rng):
        nc.set_precision("f64")
        x = nc.Tensor(rng.random((1, 3, 4, 4)))
        w = nc.Tensor(np.ones((1, 1, 1, 1, 1)))
        np.testing.assert_array_equal(nc.conv3d(x, w).data, x.data)

    def test_sum_kernel_interior(self):
        x = t64(np.ones((1, 4, 4, 4)))
        w = t64(np.ones((1, 1, 3, 3, 3)))
        out = nc.conv3d(x, w, pad=(1, 1, 1)).data
        np.testing.assert_array_equal(out[0, 1:-1, 1:-1, 1:-1], np.full((2, 2, 2), 27.0))

    def test_matches_loops(self, rng):
        nc.set_precision("f64")
        for case in range(4):
            pad = ((0, 0, 0), (1, 1, 1), (0, 1, 1), (1, 0, 0))[case]
            x = rng.random((2, 4, 5, 5))
            w = rng.standard_normal((3, 2, 3, 3, 3))
            b = rng.standard_normal(3) if case % 2 else None
            got = nc.conv3d(
                nc.Tensor(x), nc.Tensor(w), nc.Tensor(b) if b is not None else None, pad=pad
            ).data
            ref = conv3d_loops(x, w, b, pad)
            assert float(np.abs(got - ref).max()) < 1e-12

    def test_rejects_channel_mismatch(self):
        with pytest.raises(DimensionError):
            nc.conv3d(nc.Tensor(np.zeros((2, 3, 4, 4))), nc.Tensor(np.zeros((1, 3, 3, 3, 3))))


class TestBicubic:
    def test_constant_preserved_at_all_scales(self):
        x = t64(np.full((2, 8, 8), 0.37))
        for s in (0.25, 0.5, 1.0, 2.0, 4.0):
            out = nc.bicubic_resize(x, s).data
            np.testing.assert_allclose(out, 0.37, atol=1e-12)

    def test_scale_one_is_identity(self, rng):
        nc.set_precision("f64")
        x = nc.Tensor(rng.random((3, 6, 5)))
        np.testing.assert_array_equal(nc.bicubic_resize(x, 1.0).data, x.data)

    def test_linear_ramp_interior(self):
        """Cubic interpolation reproduces a linear ramp exactly at the
        half-pixel-center mapped coordinates (away from clamped borders)."""
        w = 16
        ramp = np.tile(np.arange(w, dtype=np.float64), (4, 1))[None]
        out = nc.bicubic_resize(t64(ramp), 2.0).data
        xs = (np.arange(2 * w) + 0.5) / 2.0 - 0.5
        inner = slice(4, 2 * w - 4)
        np.testing.assert_allclose(out[0, 2, inner], xs[inner], atol=1e-5)

    def test_matches_scalar_loops(self, rng):
        nc.set_precision("f64")
        for scale in (0.25, 0.5, 2.0, 4.0, 1.5):
            x = rng.random((2, 6, 5))
            got = nc.bicubic_resize(nc.Tensor(x), scale).data
            ref = bicubic_resize_loops(x, scale)
            np.testing.assert_allclose(got, ref, atol=1e-12)

    def test_rejects_bad_scale(self):
        with pytest.raises(ValueError):
            nc.bicubic_resize(nc.Tensor(np.zeros((1, 4, 4))), 0.0)


class TestPatches:
    def test_unfold_shape_and_values(self, rng):
        nc.set_precision("f64")
        x = rng.random((1, 4, 4))
        rows = nc.unfold_patches(nc.Tensor(x), 3, 1, 1).data
        assert rows.shape == (16, 9)
        np.testing.assert_allclose(rows, unfold_loops(x, 3, 1, 1), atol=1e-15)

    def test_unfold_matches_loops_strided(self, rng):
        nc.set_precision("f64")
        for k, s, p in ((3, 1, 1), (6, 2, 2), (12, 4, 4), (3, 2, 0)):
            x = rng.random((3, 12, 12))
            got = nc.unfold_patches(nc.Tensor(x), k, s, p).data
            np.testing.assert_allclose(got, unfold_loops(x, k, s, p), atol=1e-15)

    def test_fold_matches_loops(self, rng):
        nc.set_precision("f64")
        for k, s, p in ((3, 1, 1), (6, 2, 2), (3, 2, 0)):
            h = w = 12
            ho = (h + 2 * p - k) // s + 1
            rows = rng.random((ho * ho, 2 * k * k))
            got = nc.fold_patches(nc.Tensor(rows), k, s, p, h, w).data
            np.testing.assert_allclose(got, fold_loops(rows, k, s, p, h, w), atol=1e-13)

    def test_fold_unfold_identity_exact(self, rng):
        """Every pixel folds back the average of identical copies of
        itself, so the round trip is bit-exact, 32-bit mode included."""
        for prec in ("f32", "f64"):
            nc.set_precision(prec)
            x = nc.Tensor(rng.random((5, 16, 16)))
            for k, s, p in ((3, 1, 1), (6, 2, 2), (12, 4, 4)):
                rows = nc.unfold_patches(x, k, s, p)
                back = nc.fold_patches(rows, k, s, p, 16, 16)
                assert np.array_equal(back.data, x.data), (prec, k, s, p)

    def test_fold_rejects_wrong_row_count(self):
        with pytest.raises(DimensionError):
            nc.fold_patches(nc.Tensor(np.zeros((5, 9))), 3, 1, 1, 4, 4)

    def test_unfold_rejects_bad_rank(self):
        with pytest.raises(DimensionError):
            nc.unfold_patches(nc.Tensor(np.zeros((4, 4))), 3, 1, 1)


class TestResampleHelpers:
    def test_matrix_rows_sum_to_one(self):
        m = nc.resample_matrix(13, 7, 13 / 7, dtype=np.float64)
        np.testing.assert_allclose(m.sum(axis=1), 1.0, atol=1e-12)

    def test_integer_shift_is_exact(self, rng):
        img = rng.random((3, 9, 9)).astype(np.float32)
        out = nc.shift_hw(img, 2, -3)
        # out(y, x) = img(y + dy, x + dx) with edge replication
        expect = img[:, [2, 3, 4, 5, 6, 7, 8, 8, 8], :][:, :, [0, 0, 0, 0, 1, 2, 3, 4, 5]]
        np.testing.assert_array_equal(out, expect)

    def test_out_extent_rounding(self):
        assert nc.out_extent(7, 2.0) == 14
        assert nc.out_extent(7, 0.5) == 4
        assert nc.out_extent(5, 1.0) == 5

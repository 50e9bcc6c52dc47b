"""Kronecker products, index bijections, and block (un)folding."""

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sekron import (
    FactorShapeMatrix,
    ShapeError,
    fold_blocks,
    kron_pair,
    kron_sequence,
    reinterpret_shape,
    seq_index_compose,
    seq_index_decompose,
    unfold_blocks,
)


def kron_index_oracle(a, b):
    """Direct evaluation of the index rule: out[i] = a[i // b_n] * b[i % b_n]."""
    out = np.zeros(tuple(x * y for x, y in zip(a.shape, b.shape)))
    for idx in np.ndindex(out.shape):
        j = tuple(i // bn for i, bn in zip(idx, b.shape))
        k = tuple(i % bn for i, bn in zip(idx, b.shape))
        out[idx] = a[j] * b[k]
    return out


class TestKronPair:
    def test_identity_factor_leaves_other_unchanged(self):
        b = np.arange(6.0).reshape(2, 3) + 1
        assert np.array_equal(kron_pair(np.ones((1, 1)), b), b)

    def test_vector_example(self):
        out = kron_pair(np.array([1.0, 2.0]), np.array([3.0, 4.0]))
        assert np.array_equal(out, np.array([3.0, 4.0, 6.0, 8.0]))

    def test_matrix_example(self):
        a = np.array([[0.0, 1.0], [1.0, 0.0]])
        b = np.array([[1.0, 2.0], [3.0, 4.0]])
        expected = np.array(
            [
                [0.0, 0.0, 1.0, 2.0],
                [0.0, 0.0, 3.0, 4.0],
                [1.0, 2.0, 0.0, 0.0],
                [3.0, 4.0, 0.0, 0.0],
            ]
        )
        assert np.array_equal(kron_pair(a, b), expected)

    def test_matches_index_oracle_on_random_tensors(self):
        rng = np.random.default_rng(7)
        for shapes in [((2,), (3,)), ((2, 3), (2, 2)), ((2, 1, 2), (1, 3, 2))]:
            a = rng.standard_normal(shapes[0])
            b = rng.standard_normal(shapes[1])
            assert np.array_equal(kron_pair(a, b), kron_index_oracle(a, b))

    def test_axis_mismatch_is_an_error_unless_padded(self):
        a = np.ones((2,))
        b = np.ones((2, 2))
        with pytest.raises(ShapeError):
            kron_pair(a, b)
        out = kron_pair(a, b, pad=True)
        assert out.shape == (2, 4)
        assert np.array_equal(out, kron_index_oracle(np.ones((1, 2)), b))


class TestKronSequence:
    def test_single_factor(self):
        a = np.arange(4.0).reshape(2, 2)
        assert np.array_equal(kron_sequence([a]), a)

    def test_vector_chain_example(self):
        out = kron_sequence([np.array([1.0, 2.0]), np.array([1.0, 1.0]), np.array([1.0, 3.0])])
        assert np.array_equal(out, np.array([1.0, 3.0, 1.0, 3.0, 2.0, 6.0, 2.0, 6.0]))

    def test_associativity_against_right_fold(self):
        rng = np.random.default_rng(11)
        a, b, c = (rng.standard_normal((2, 2)) for _ in range(3))
        left = kron_sequence([a, b, c])
        right = kron_pair(a, kron_pair(b, c))
        assert np.allclose(left, right, rtol=1e-12, atol=0)

    def test_empty_list_rejected(self):
        with pytest.raises(ShapeError):
            kron_sequence([])

    def test_scalar_law_exhaustive(self):
        # value at every output index equals the product of factor entries at
        # the decomposed sub-indices, on tensors up to 64 elements
        rng = np.random.default_rng(13)
        rows = ((2, 2), (2, 1), (2, 4))
        shapes = FactorShapeMatrix(rows)
        factors = [rng.standard_normal(r) for r in rows]
        out = kron_sequence(factors)
        assert out.size == 64
        for idx in np.ndindex(out.shape):
            js = seq_index_decompose(idx, shapes)
            expected = math.prod(f[j] for f, j in zip(factors, js))
            assert out[idx] == pytest.approx(expected, rel=1e-15)


@st.composite
def shape_matrices(draw):
    n = draw(st.integers(1, 3))
    s = draw(st.integers(1, 3))
    rows = tuple(
        tuple(draw(st.integers(1, 3)) for _ in range(n)) for _ in range(s)
    )
    return FactorShapeMatrix(rows)


class TestIndexBijection:
    def test_zero_index(self):
        shapes = FactorShapeMatrix(((2, 3), (3, 2)))
        js = seq_index_decompose((0, 0), shapes)
        assert js == [(0, 0), (0, 0)]
        assert seq_index_compose(js, shapes) == (0, 0)

    def test_mixed_radix_examples(self):
        shapes = FactorShapeMatrix(((2,), (2,), (2,)))
        assert seq_index_decompose((5,), shapes) == [(1,), (0,), (1,)]
        assert seq_index_compose([(1,), (0,), (1,)], shapes) == (5,)
        shapes2 = FactorShapeMatrix(((3,), (4,)))
        assert seq_index_decompose((7,), shapes2) == [(1,), (3,)]
        assert seq_index_compose([(1,), (3,)], shapes2) == (7,)

    def test_round_trip_exhaustive_6x6(self):
        shapes = FactorShapeMatrix(((2, 3), (3, 2)))
        for idx in np.ndindex((6, 6)):
            assert seq_index_compose(seq_index_decompose(idx, shapes), shapes) == idx

    @settings(max_examples=150, deadline=None)
    @given(shape_matrices(), st.data())
    def test_bijection_property(self, shapes, data):
        target = shapes.target_shape
        idx = tuple(data.draw(st.integers(0, d - 1)) for d in target)
        js = seq_index_decompose(idx, shapes)
        for k, sub in enumerate(js):
            assert all(0 <= j < d for j, d in zip(sub, shapes.rows[k]))
        assert seq_index_compose(js, shapes) == idx
        # and the other direction
        js2 = [
            tuple(data.draw(st.integers(0, d - 1)) for d in row)
            for row in shapes.rows
        ]
        assert seq_index_decompose(seq_index_compose(js2, shapes), shapes) == [
            tuple(j) for j in js2
        ]

    def test_out_of_range_rejected(self):
        shapes = FactorShapeMatrix(((2, 3), (3, 2)))
        with pytest.raises(ShapeError):
            seq_index_decompose((6, 0), shapes)
        with pytest.raises(ShapeError):
            seq_index_compose([(2, 0), (0, 0)], shapes)


class TestUnfoldFold:
    def test_full_block_is_flattened_tensor(self):
        rng = np.random.default_rng(17)
        w = rng.standard_normal((1, 4, 6))
        m = unfold_blocks(w, (4, 6), 1)
        assert m.shape == (1, 1, 24)
        assert np.array_equal(m[0, 0], w[0].ravel())

    def test_scalar_blocks_enumerate_row_major(self):
        rng = np.random.default_rng(19)
        w = rng.standard_normal((1, 3, 2))
        m = unfold_blocks(w, (1, 1), 1)
        assert m.shape == (1, 6, 1)
        assert np.array_equal(m[0, :, 0], w[0].ravel())

    def test_first_block_of_4x4(self):
        w = np.arange(16.0).reshape(4, 4)
        m = unfold_blocks(w, (2, 2))
        assert np.array_equal(m[0, 0], np.array([w[0, 0], w[0, 1], w[1, 0], w[1, 1]]))

    def test_source_index_rule(self):
        rng = np.random.default_rng(23)
        w = rng.standard_normal((2, 4, 6))
        m = unfold_blocks(w, (2, 3), 2)
        for br in range(2):
            for block in range(4):
                j = (block // 2, block % 2)
                for elem in range(6):
                    k = (elem // 3, elem % 3)
                    assert m[br, block, elem] == w[br, 2 * j[0] + k[0], 3 * j[1] + k[1]]

    def test_isometry(self):
        rng = np.random.default_rng(29)
        w = rng.standard_normal((3, 4, 6, 2))
        m = unfold_blocks(w, (2, 3, 1), 3)
        assert np.sum(m * m) == pytest.approx(np.sum(w * w), rel=0, abs=0)

    def test_round_trip(self):
        rng = np.random.default_rng(31)
        w = rng.standard_normal((1, 4, 6))
        m = unfold_blocks(w, (2, 3), 1)
        back = fold_blocks(m, (2, 2), (2, 3))
        assert np.array_equal(back, w)

    def test_single_block_fold_is_reshape(self):
        rng = np.random.default_rng(37)
        m = rng.standard_normal((1, 1, 12))
        assert np.array_equal(fold_blocks(m, (1, 1), (3, 4)), m.reshape(1, 3, 4))

    def test_scalar_block_fold_is_reshape(self):
        rng = np.random.default_rng(41)
        m = rng.standard_normal((1, 12, 1))
        assert np.array_equal(fold_blocks(m, (3, 4), (1, 1)), m.reshape(1, 3, 4))

    def test_non_divisible_axis_rejected(self):
        with pytest.raises(ShapeError):
            unfold_blocks(np.ones((1, 4, 6)), (3, 3), 1)

    def test_fold_size_mismatch_rejected(self):
        with pytest.raises(ShapeError):
            fold_blocks(np.ones((1, 4, 5)), (2, 2), (2, 3))


class TestReinterpretShape:
    def test_flatten_keeps_order(self):
        w = np.arange(6.0).reshape(2, 3)
        assert np.array_equal(reinterpret_shape(w, (6,)), np.arange(6.0))

    def test_round_trip_identity(self):
        w = np.arange(6.0)
        assert np.array_equal(reinterpret_shape(reinterpret_shape(w, (3, 2)), (6,)), w)

    def test_matches_unfold_of_trailing_block(self):
        rng = np.random.default_rng(43)
        w = rng.standard_normal((2, 2, 3, 3))
        direct = reinterpret_shape(w, (4, 9))
        via_unfold = unfold_blocks(w[None], (1, 1, 3, 3), 1)[0]
        assert np.array_equal(direct, via_unfold)

    def test_element_count_mismatch_rejected(self):
        with pytest.raises(ShapeError):
            reinterpret_shape(np.ones((2, 3)), (7,))


class TestFactorShapeMatrix:
    def test_target_and_blocks(self):
        shapes = FactorShapeMatrix(((2, 2, 1, 1), (2, 2, 3, 3)))
        assert shapes.target_shape == (4, 4, 3, 3)
        assert shapes.block_shape(0) == (2, 2, 3, 3)
        assert shapes.block_shape(1) == (1, 1, 1, 1)
        assert shapes.full_rank(0) == 4
        assert shapes.max_ranks() == (4,)

    def test_string_round_trip(self):
        text = "2x2x1x1,2x2x3x3"
        shapes = FactorShapeMatrix.from_string(text)
        assert shapes.rows == ((2, 2, 1, 1), (2, 2, 3, 3))
        assert shapes.to_string() == text

    def test_validate_target(self):
        shapes = FactorShapeMatrix(((2, 3), (3, 2)))
        shapes.validate_target((6, 6))
        with pytest.raises(ShapeError):
            shapes.validate_target((6, 4))

    def test_bad_rows_rejected(self):
        with pytest.raises(ShapeError):
            FactorShapeMatrix(((2, 3), (3,)))
        with pytest.raises(ShapeError):
            FactorShapeMatrix(((0, 3), (3, 2)))


@settings(max_examples=60, deadline=None)
@given(shape_matrices())
def test_kron_shape_law(shapes):
    rng = np.random.default_rng(47)
    factors = [rng.standard_normal(row) for row in shapes.rows]
    out = kron_sequence(factors)
    assert out.shape == shapes.target_shape

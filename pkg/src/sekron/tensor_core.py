"""Dense N-way tensors, Kronecker products of tensor sequences, and the
block unfolding / index arithmetic they rest on.

Conventions used throughout the package:

* tensors are ``float64`` numpy arrays, row-major (last axis fastest);
* a "branch" axis, when present, is always the leading axis;
* block grids and within-block offsets are enumerated row-major.
"""

import math
from dataclasses import dataclass
from functools import reduce

import numpy as np

from sekron.errors import ShapeError


def as_tensor(data) -> np.ndarray:
    """Coerce ``data`` to a C-contiguous float64 array with at least one axis."""
    arr = np.ascontiguousarray(data, dtype=np.float64)
    if arr.ndim == 0:
        raise ShapeError("tensors must have at least one axis")
    if arr.size == 0:
        raise ShapeError("tensors must not have zero-length axes")
    return arr


@dataclass(frozen=True)
class FactorShapeMatrix:
    """Per-factor, per-axis dimensions of a Kronecker sequence.

    ``rows[k]`` holds the shape of factor ``k``; the elementwise product of
    all rows recovers the shape of the composed tensor.
    """

    rows: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        rows = tuple(tuple(int(d) for d in row) for row in self.rows)
        object.__setattr__(self, "rows", rows)
        if not rows:
            raise ShapeError("factor shape matrix needs at least one row")
        n = len(rows[0])
        if n == 0:
            raise ShapeError("factor shapes need at least one axis")
        for row in rows:
            if len(row) != n:
                raise ShapeError("all factor shapes must have the same axis count")
            if any(d < 1 for d in row):
                raise ShapeError("factor dimensions must be >= 1")

    @property
    def num_factors(self) -> int:
        return len(self.rows)

    @property
    def num_axes(self) -> int:
        return len(self.rows[0])

    @property
    def target_shape(self) -> tuple[int, ...]:
        """Elementwise product of all rows: the shape this matrix composes to."""
        return tuple(math.prod(row[n] for row in self.rows) for n in range(self.num_axes))

    def block_shape(self, k: int) -> tuple[int, ...]:
        """Elementwise product of rows ``k+1 .. S-1`` (all-ones for the last row)."""
        return tuple(
            math.prod(row[n] for row in self.rows[k + 1 :])
            for n in range(self.num_axes)
        )

    def factor_volume(self, k: int) -> int:
        """Number of elements of one factor-``k`` slice."""
        return math.prod(self.rows[k])

    def full_rank(self, k: int) -> int:
        """Rank ceiling of the level-``k`` unfolding, ``k`` in ``0 .. S-2``."""
        return min(self.factor_volume(k), math.prod(self.block_shape(k)))

    def max_ranks(self) -> tuple[int, ...]:
        return tuple(self.full_rank(k) for k in range(self.num_factors - 1))

    def validate_target(self, shape) -> None:
        shape = tuple(int(d) for d in shape)
        if len(shape) != self.num_axes:
            raise ShapeError(
                f"target has {len(shape)} axes, factor shapes have {self.num_axes}"
            )
        if self.target_shape != shape:
            raise ShapeError(
                f"per-axis factor products {self.target_shape} != target shape {shape}"
            )

    @classmethod
    def from_string(cls, text: str) -> "FactorShapeMatrix":
        """Parse ``"2x2x1x1,2x2x3x3"``: factors comma-separated, axes x-separated."""
        try:
            rows = tuple(
                tuple(int(d) for d in part.split("x")) for part in text.split(",")
            )
        except ValueError as exc:
            raise ShapeError(f"cannot parse factor shapes {text!r}") from exc
        return cls(rows)

    def to_string(self) -> str:
        return ",".join("x".join(str(d) for d in row) for row in self.rows)


def kron_pair(a, b, pad: bool = False) -> np.ndarray:
    """Kronecker product of two tensors with equal axis counts.

    ``out[i_1..i_N] = a[i_n // b.shape[n], ...] * b[i_n % b.shape[n], ...]``,
    so ``out.shape[n] = a.shape[n] * b.shape[n]``.

    Mismatched axis counts are an error unless ``pad=True``, which left-pads
    the shorter shape with singleton axes.
    """
    a = as_tensor(a)
    b = as_tensor(b)
    if a.ndim != b.ndim:
        if not pad:
            raise ShapeError(
                f"axis count mismatch: {a.ndim} vs {b.ndim} (pass pad=True to pad with 1s)"
            )
        n = max(a.ndim, b.ndim)
        a = a.reshape((1,) * (n - a.ndim) + a.shape)
        b = b.reshape((1,) * (n - b.ndim) + b.shape)
    return np.kron(a, b)


def kron_sequence(factors) -> np.ndarray:
    """Left-fold ``kron_pair`` over a non-empty list of same-ndim tensors."""
    factors = list(factors)
    if not factors:
        raise ShapeError("kron_sequence needs at least one factor")
    return reduce(kron_pair, (as_tensor(f) for f in factors))


def seq_index_decompose(index, shapes: FactorShapeMatrix) -> list[tuple[int, ...]]:
    """Split a multi-index of the composed tensor into one sub-index per factor.

    Per axis this is the mixed-radix expansion of ``index[n]`` with radices
    ``(rows[0][n], ..., rows[S-1][n])``, most significant digit first.
    Inverse of :func:`seq_index_compose`.
    """
    index = tuple(int(i) for i in index)
    target = shapes.target_shape
    if len(index) != shapes.num_axes:
        raise ShapeError(f"index has {len(index)} axes, expected {shapes.num_axes}")
    for n, (i, size) in enumerate(zip(index, target)):
        if not 0 <= i < size:
            raise ShapeError(f"index {i} out of range [0, {size}) on axis {n}")
    digits = [[0] * shapes.num_axes for _ in range(shapes.num_factors)]
    for n in range(shapes.num_axes):
        rest = index[n]
        for k in range(shapes.num_factors):
            stride = math.prod(row[n] for row in shapes.rows[k + 1 :])
            digits[k][n], rest = divmod(rest, stride)
    return [tuple(d) for d in digits]


def seq_index_compose(sub_indices, shapes: FactorShapeMatrix) -> tuple[int, ...]:
    """Recombine per-factor sub-indices: ``i_n = sum_k j_n^k * prod_{l>k} rows[l][n]``."""
    sub_indices = [tuple(int(j) for j in js) for js in sub_indices]
    if len(sub_indices) != shapes.num_factors:
        raise ShapeError(
            f"got {len(sub_indices)} sub-indices, expected {shapes.num_factors}"
        )
    out = [0] * shapes.num_axes
    for k, js in enumerate(sub_indices):
        if len(js) != shapes.num_axes:
            raise ShapeError("sub-index axis count mismatch")
        for n, j in enumerate(js):
            if not 0 <= j < shapes.rows[k][n]:
                raise ShapeError(
                    f"sub-index {j} out of range [0, {shapes.rows[k][n]}) "
                    f"for factor {k}, axis {n}"
                )
            out[n] += j * math.prod(row[n] for row in shapes.rows[k + 1 :])
    return tuple(out)


def unfold_blocks(w, block_shape, n_branches: int = 1) -> np.ndarray:
    """Rearrange a (branch-leading) tensor into ``(branch, block, element)`` layout.

    Axis ``n`` of each branch slice must have size ``g_n * block_shape[n]``;
    blocks enumerate the grid ``(g_1, ..., g_N)`` row-major, elements the
    within-block offsets row-major, and source index ``i_n = grid_n *
    block_shape[n] + offset_n``.  Pure permutation, so the Frobenius norm is
    preserved.  A tensor without a branch axis is accepted when
    ``n_branches == 1``.
    """
    w = as_tensor(w)
    block_shape = tuple(int(b) for b in block_shape)
    if w.ndim == len(block_shape):
        if n_branches != 1:
            raise ShapeError("tensor without a branch axis implies n_branches == 1")
        w = w[None]
    if w.ndim != len(block_shape) + 1:
        raise ShapeError(
            f"expected {len(block_shape)} (+1 branch) axes, got {w.ndim}"
        )
    if w.shape[0] != n_branches:
        raise ShapeError(f"branch axis is {w.shape[0]}, expected {n_branches}")
    grid = []
    for n, (size, b) in enumerate(zip(w.shape[1:], block_shape)):
        if b < 1 or size % b:
            raise ShapeError(f"axis {n} of size {size} not divisible by block {b}")
        grid.append(size // b)
    split = [n_branches]
    for g, b in zip(grid, block_shape):
        split += [g, b]
    m = w.reshape(split)
    ndim = len(block_shape)
    order = [0] + [1 + 2 * n for n in range(ndim)] + [2 + 2 * n for n in range(ndim)]
    m = m.transpose(order)
    return np.ascontiguousarray(
        m.reshape(n_branches, math.prod(grid), math.prod(block_shape))
    )


def fold_blocks(m, grid_shape, block_shape) -> np.ndarray:
    """Inverse of :func:`unfold_blocks`; returns the branch-leading tensor."""
    m = as_tensor(m)
    grid_shape = tuple(int(g) for g in grid_shape)
    block_shape = tuple(int(b) for b in block_shape)
    if len(grid_shape) != len(block_shape):
        raise ShapeError("grid and block shapes must have the same axis count")
    if m.ndim != 3:
        raise ShapeError("expected a (branch, block, element) array")
    n_branches = m.shape[0]
    if m.shape[1] != math.prod(grid_shape) or m.shape[2] != math.prod(block_shape):
        raise ShapeError(
            f"array of shape {m.shape} inconsistent with grid {grid_shape} "
            f"and block {block_shape}"
        )
    ndim = len(grid_shape)
    t = m.reshape((n_branches,) + grid_shape + block_shape)
    order = [0]
    for n in range(ndim):
        order += [1 + n, 1 + ndim + n]
    t = t.transpose(order)
    final = tuple(g * b for g, b in zip(grid_shape, block_shape))
    return np.ascontiguousarray(t.reshape((n_branches,) + final))


def reinterpret_shape(w, new_shape) -> np.ndarray:
    """Reshape without touching the row-major data order."""
    w = as_tensor(w)
    new_shape = tuple(int(d) for d in new_shape)
    if math.prod(new_shape) != w.size:
        raise ShapeError(
            f"cannot reinterpret {w.size} elements as shape {new_shape}"
        )
    return w.reshape(new_shape)

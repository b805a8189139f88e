"""Dense row-major float64 matrices and the handful of kernels backprop needs.

Two mat_mul kernels are provided: a pure-Python naive triple loop (the
reference, and a measurable "no vectorization" configuration) and the
default numpy path. They agree to within 1e-12 but not bitwise; all other
operations always run on numpy. Every operation is a pure function over
immutable inputs, so values can be shared freely between threads.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from .errors import ShapeError

__all__ = [
    "Matrix",
    "mat_mul",
    "mat_mul_naive",
    "transpose",
    "hadamard",
    "col_mean",
    "col_sum",
    "add_bias_row",
    "add",
    "sub",
    "scale",
    "set_matmul_kernel",
    "get_matmul_kernel",
]


class Matrix:
    """2-D matrix of 64-bit floats, row-major, at least 1x1.

    Wraps a read-only C-contiguous numpy array; `data` exposes the flat
    row-major storage.
    """

    __slots__ = ("array",)

    def __init__(self, array: np.ndarray):
        a = np.ascontiguousarray(array, dtype=np.float64)
        if a.ndim != 2:
            raise ShapeError(f"matrix must be 2-D, got {a.ndim}-D")
        if a.shape[0] < 1 or a.shape[1] < 1:
            raise ShapeError(f"matrix must be at least 1x1, got {a.shape[0]}x{a.shape[1]}")
        a.setflags(write=False)
        self.array = a

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[float]]) -> "Matrix":
        return cls(np.array(rows, dtype=np.float64))

    @classmethod
    def from_flat(cls, rows: int, cols: int, data: Iterable[float]) -> "Matrix":
        a = np.fromiter(data, dtype=np.float64)
        if a.size != rows * cols:
            raise ShapeError(f"flat data of length {a.size} cannot fill {rows}x{cols}")
        return cls(a.reshape(rows, cols))

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "Matrix":
        return cls(np.zeros((rows, cols), dtype=np.float64))

    @classmethod
    def identity(cls, n: int) -> "Matrix":
        return cls(np.eye(n, dtype=np.float64))

    @property
    def rows(self) -> int:
        return self.array.shape[0]

    @property
    def cols(self) -> int:
        return self.array.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.array.shape

    @property
    def data(self) -> np.ndarray:
        """Flat row-major view of the storage (read-only)."""
        return self.array.reshape(-1)

    def row_slice(self, lo: int, hi: int) -> "Matrix":
        if not 0 <= lo < hi <= self.rows:
            raise ShapeError(f"row slice [{lo}:{hi}] out of range for {self.rows} rows")
        return Matrix(self.array[lo:hi])

    def tolist(self) -> list[list[float]]:
        return self.array.tolist()

    def __getitem__(self, idx: tuple[int, int]) -> float:
        return float(self.array[idx])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Matrix):
            return NotImplemented
        return self.shape == other.shape and bool(np.array_equal(self.array, other.array))

    def __repr__(self) -> str:
        return f"Matrix({self.rows}x{self.cols})"


def _shape_of(m: Matrix) -> str:
    return f"{m.rows}x{m.cols}"


_matmul_kernel = "fast"


def set_matmul_kernel(name: str) -> None:
    """Select the mat_mul kernel: "fast" (numpy) or "naive" (pure Python)."""
    global _matmul_kernel
    if name not in ("fast", "naive"):
        raise ValueError(f"unknown mat_mul kernel {name!r}")
    _matmul_kernel = name


def get_matmul_kernel() -> str:
    return _matmul_kernel


def mat_mul_naive(a: Matrix, b: Matrix) -> Matrix:
    """Reference O(n^3) triple loop over flat Python floats."""
    if a.cols != b.rows:
        raise ShapeError(f"mat_mul: inner dimensions differ ({_shape_of(a)} @ {_shape_of(b)})")
    n, k, m = a.rows, a.cols, b.cols
    av = a.data.tolist()
    bv = b.data.tolist()
    out = [0.0] * (n * m)
    for i in range(n):
        for j in range(m):
            acc = 0.0
            for p in range(k):
                acc += av[i * k + p] * bv[p * m + j]
            out[i * m + j] = acc
    return Matrix.from_flat(n, m, out)


def mat_mul(a: Matrix, b: Matrix) -> Matrix:
    if _matmul_kernel == "naive":
        return mat_mul_naive(a, b)
    if a.cols != b.rows:
        raise ShapeError(f"mat_mul: inner dimensions differ ({_shape_of(a)} @ {_shape_of(b)})")
    return Matrix(a.array @ b.array)


def transpose(a: Matrix) -> Matrix:
    return Matrix(a.array.T)


def hadamard(a: Matrix, b: Matrix) -> Matrix:
    if a.shape != b.shape:
        raise ShapeError(f"hadamard: shapes differ ({_shape_of(a)} vs {_shape_of(b)})")
    return Matrix(a.array * b.array)


def _pairwise_row_sum(a: np.ndarray) -> np.ndarray:
    # Pairwise halving keeps the sum of 2^k identical rows exact, which a
    # sequential reduction does not (3r already rounds).
    while a.shape[0] > 1:
        even = a.shape[0] - (a.shape[0] % 2)
        reduced = a[0:even:2] + a[1:even:2]
        if even < a.shape[0]:
            reduced = np.concatenate([reduced, a[even:]], axis=0)
        a = reduced
    return a


def col_mean(a: Matrix) -> Matrix:
    """1 x cols matrix of column means."""
    return Matrix(_pairwise_row_sum(a.array) / a.rows)


def col_sum(a: Matrix) -> Matrix:
    """1 x cols matrix of column sums (bias-gradient reduction)."""
    return Matrix(_pairwise_row_sum(a.array))


def add_bias_row(a: Matrix, bias: Matrix) -> Matrix:
    """Add a 1 x cols bias row to every row of `a`."""
    if bias.rows != 1 or bias.cols != a.cols:
        raise ShapeError(f"add_bias_row: bias {_shape_of(bias)} does not broadcast over {_shape_of(a)}")
    return Matrix(a.array + bias.array)


def add(a: Matrix, b: Matrix) -> Matrix:
    if a.shape != b.shape:
        raise ShapeError(f"add: shapes differ ({_shape_of(a)} vs {_shape_of(b)})")
    return Matrix(a.array + b.array)


def sub(a: Matrix, b: Matrix) -> Matrix:
    if a.shape != b.shape:
        raise ShapeError(f"sub: shapes differ ({_shape_of(a)} vs {_shape_of(b)})")
    return Matrix(a.array - b.array)


def scale(a: Matrix, c: float) -> Matrix:
    return Matrix(a.array * c)

"""Class-structured coding matrices and their scatter/discriminant terms.

A coding matrix A (atoms x samples) is partitioned twice: columns by the
sample's class (blocks A_i) and rows by the atom's class (blocks A_i^j, the
coefficients of class-i samples over class j's atoms). The discriminant
value is tr(S_W) - tr(S_B) + eta * ||A||_F^2 with the usual within/between
class scatter matrices of the coefficient columns.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, ParameterError

Range = tuple[int, int]


def _check_ranges(ranges, total, what):
    pos = 0
    for start, stop in ranges:
        if start != pos or stop <= start:
            raise DimensionError(f"{what} ranges must partition 0..{total} contiguously")
        pos = stop
    if pos != total:
        raise DimensionError(f"{what} ranges cover {pos} of {total}")


@dataclass
class CodingMatrix:
    """Coefficient matrix with per-class column spans and per-class row spans."""

    values: np.ndarray
    row_ranges: list[Range]
    col_ranges: list[Range]

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise DimensionError("coding matrix must be 2-D")
        if len(self.row_ranges) != len(self.col_ranges):
            raise DimensionError("row and column partitions must have the same class count")
        _check_ranges(self.row_ranges, self.values.shape[0], "row")
        _check_ranges(self.col_ranges, self.values.shape[1], "column")
        if not np.all(np.isfinite(self.values)):
            raise ParameterError("coding matrix has non-finite entries")

    @property
    def n_classes(self) -> int:
        return len(self.col_ranges)

    def block(self, i: int) -> np.ndarray:
        """A_i: all coefficients of class-i samples (view)."""
        start, stop = self.col_ranges[i]
        return self.values[:, start:stop]

    def sub_block(self, i: int, j: int) -> np.ndarray:
        """A_i^j: class-i samples' coefficients over class j's atoms (view)."""
        cstart, cstop = self.col_ranges[i]
        rstart, rstop = self.row_ranges[j]
        return self.values[rstart:rstop, cstart:cstop]

    def class_sizes(self) -> np.ndarray:
        return np.array([stop - start for start, stop in self.col_ranges])

    def copy(self) -> "CodingMatrix":
        return CodingMatrix(self.values.copy(), list(self.row_ranges), list(self.col_ranges))


def scatter_within(A: CodingMatrix) -> np.ndarray:
    """S_W: sum over classes of column scatter about the class mean."""
    n = A.values.shape[0]
    out = np.zeros((n, n))
    for i in range(A.n_classes):
        block = A.block(i)
        centered = block - block.mean(axis=1, keepdims=True)
        out += centered @ centered.T
    return out


def scatter_between(A: CodingMatrix) -> np.ndarray:
    """S_B: class-size-weighted scatter of class means about the global mean."""
    n = A.values.shape[0]
    global_mean = A.values.mean(axis=1)
    out = np.zeros((n, n))
    for i in range(A.n_classes):
        block = A.block(i)
        diff = block.mean(axis=1) - global_mean
        out += block.shape[1] * np.outer(diff, diff)
    return out


def fisher_term(A: CodingMatrix, eta: float) -> float:
    """tr(S_W) - tr(S_B) + eta * ||A||_F^2."""
    if eta < 0:
        raise ParameterError("eta must be >= 0")
    return float(
        np.trace(scatter_within(A))
        - np.trace(scatter_between(A))
        + eta * np.sum(A.values**2)
    )


def fisher_term_class(A: CodingMatrix, class_i: int, eta: float, block=None) -> float:
    """Per-class view of the discriminant as a function of A_i alone:

        ||A_i - M_i||_F^2 - sum_k ||M_k - M||_F^2 + eta * ||A_i||_F^2

    where M_k stacks copies of class k's mean and M copies of the global
    mean. Other classes' columns act as constants, but both the class mean
    and the global mean track ``block`` when it replaces A_i.
    """
    values = A.values
    if block is not None:
        values = values.copy()
        start, stop = A.col_ranges[class_i]
        if block.shape != (values.shape[0], stop - start):
            raise DimensionError("replacement block has the wrong shape")
        values[:, start:stop] = block
    start, stop = A.col_ranges[class_i]
    a_i = values[:, start:stop]
    centered = a_i - a_i.mean(axis=1, keepdims=True)
    within = float(np.sum(centered**2))
    global_mean = values.mean(axis=1)
    between = 0.0
    for cstart, cstop in A.col_ranges:
        diff = values[:, cstart:cstop].mean(axis=1) - global_mean
        between += (cstop - cstart) * float(diff @ diff)
    return within - between + eta * float(np.sum(a_i**2))


def fisher_term_grad(A: CodingMatrix, class_i: int, eta: float) -> np.ndarray:
    """Gradient of the per-class discriminant view with respect to A_i.

    Both means are differentiated exactly; the global-mean contributions of
    the other classes cancel (their deviations sum to zero), leaving

        2 (A_i - M_i) - 2 (m_i - m) 1^T + 2 eta A_i.
    """
    if eta < 0:
        raise ParameterError("eta must be >= 0")
    a_i = A.block(class_i)
    class_mean = a_i.mean(axis=1)
    global_mean = A.values.mean(axis=1)
    return (
        2.0 * (a_i - class_mean[:, None])
        - 2.0 * (class_mean - global_mean)[:, None]
        + 2.0 * eta * a_i
    )

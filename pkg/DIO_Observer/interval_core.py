## @file interval_core.py
## @brief Interval vectors and sign-split matrix arithmetic.
##
## An interval is a lower/upper pair of real vectors. The image of an interval
## under a linear map is bounded with the positive/negative parts of the
## matrix, which is exact at the interval vertices.

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Iterable

import numpy as np

from .errors import EmptyIntersectionError, InvalidInputError


def _frozen(values, ndim: int, what: str) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.ndim != ndim:
        raise InvalidInputError(f"{what}: expected {ndim}-D array, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class IntervalVector:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = _frozen(self.lower, 1, "interval lower")
        upper = _frozen(self.upper, 1, "interval upper")
        if lower.shape != upper.shape:
            raise InvalidInputError(
                f"interval bounds differ in length: {lower.size} vs {upper.size}"
            )
        if np.isnan(lower).any() or np.isnan(upper).any():
            raise InvalidInputError("interval bounds contain NaN")
        bad = np.flatnonzero(lower > upper)
        if bad.size:
            raise InvalidInputError(
                f"interval lower > upper at coordinates {bad.tolist()}"
            )
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @classmethod
    def point(cls, x) -> IntervalVector:
        return cls(x, x)

    @property
    def size(self) -> int:
        return self.lower.size

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower

    def __eq__(self, other) -> bool:
        if not isinstance(other, IntervalVector):
            return NotImplemented
        return (np.array_equal(self.lower, other.lower)
                and np.array_equal(self.upper, other.upper))

    def __repr__(self) -> str:
        return f"IntervalVector(lower={self.lower.tolist()}, upper={self.upper.tolist()})"


@dataclass(frozen=True, eq=False)
class SignSplitMatrix:
    """@brief Nonnegative parts M⁺, M⁻ of a real matrix with M = M⁺ − M⁻."""

    plus: np.ndarray
    minus: np.ndarray

    @property
    def abs(self) -> np.ndarray:
        return self.plus + self.minus

    @property
    def shape(self) -> tuple[int, ...]:
        return self.plus.shape

    def reconstruct(self) -> np.ndarray:
        return self.plus - self.minus


def sign_split(M) -> SignSplitMatrix:
    """@brief Split a matrix into its positive and negative parts.
    @param M  Real matrix (any 2-D array-like).
    @return   SignSplitMatrix with plus = max(M, 0), minus = max(−M, 0).
    """
    arr = np.array(M, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2:
        raise InvalidInputError(f"sign_split expects a matrix, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise InvalidInputError("sign_split: matrix has non-finite entries")
    plus = np.maximum(arr, 0.0)
    minus = np.maximum(-arr, 0.0)
    plus.setflags(write=False)
    minus.setflags(write=False)
    return SignSplitMatrix(plus, minus)


def interval_image(A, iv: IntervalVector) -> IntervalVector:
    """@brief Tightest interval containing {A x : x ∈ iv}.
    @param A   p×n matrix or its SignSplitMatrix.
    @param iv  Interval of length n.
    @return    [A⁺x̲ − A⁻x̄, A⁺x̄ − A⁻x̲].
    """
    split = A if isinstance(A, SignSplitMatrix) else sign_split(A)
    if split.shape[1] != iv.size:
        raise InvalidInputError(
            f"interval_image: matrix has {split.shape[1]} columns, interval has {iv.size}"
        )
    lower = split.plus @ iv.lower - split.minus @ iv.upper
    upper = split.plus @ iv.upper - split.minus @ iv.lower
    return IntervalVector(lower, upper)


def intersect(a: IntervalVector, b: IntervalVector) -> IntervalVector:
    if a.size != b.size:
        raise InvalidInputError(f"intersect: lengths {a.size} and {b.size} differ")
    lower = np.maximum(a.lower, b.lower)
    upper = np.minimum(a.upper, b.upper)
    empty = np.flatnonzero(lower > upper)
    if empty.size:
        raise EmptyIntersectionError(
            f"empty intersection at coordinates {empty.tolist()}"
        )
    return IntervalVector(lower, upper)


def intersect_all(intervals: Iterable[IntervalVector]) -> IntervalVector:
    return reduce(intersect, intervals)


def contains(iv: IntervalVector, x) -> bool:
    """@brief True iff lower ≤ x ≤ upper element-wise (closed interval)."""
    x = np.asarray(x, dtype=float)
    if x.shape != iv.lower.shape:
        raise InvalidInputError(
            f"contains: point shape {x.shape} vs interval length {iv.size}"
        )
    return bool(np.all(iv.lower <= x) and np.all(x <= iv.upper))

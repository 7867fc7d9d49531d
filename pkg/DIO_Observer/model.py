## @file model.py
## @brief The LTI plant x_{k+1} = A x_k + B w_k, y^i_k = C^i x_k + D^i v^i_k.

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .interval_core import IntervalVector


def _matrix(values, what: str) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2:
        raise InvalidInputError(f"{what} must be a matrix, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise InvalidInputError(f"{what} has non-finite entries")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class NoiseBounds:
    """@brief Process and per-agent measurement noise bounds."""

    w: IntervalVector
    v: tuple[IntervalVector, ...]


@dataclass(frozen=True, eq=False)
class PlantModel:
    A: np.ndarray
    B: np.ndarray
    C: tuple[np.ndarray, ...]
    D: tuple[np.ndarray, ...]
    noise: NoiseBounds
    x0_bounds: IntervalVector

    def __post_init__(self):
        A = _matrix(self.A, "A")
        n = A.shape[0]
        if A.shape != (n, n):
            raise InvalidInputError(f"A must be square, got {A.shape}")
        B = _matrix(self.B, "B")
        if B.shape[0] != n:
            raise InvalidInputError(f"B has {B.shape[0]} rows, A has {n}")
        if len(self.C) != len(self.D):
            raise InvalidInputError(f"{len(self.C)} output matrices but {len(self.D)} noise maps")
        if len(self.C) != len(self.noise.v):
            raise InvalidInputError(
                f"{len(self.C)} agents but {len(self.noise.v)} measurement bounds"
            )
        C = tuple(_matrix(c, f"C[{i}]") for i, c in enumerate(self.C))
        D = tuple(_matrix(d, f"D[{i}]") for i, d in enumerate(self.D))
        for i, (c, d) in enumerate(zip(C, D)):
            if c.shape[1] != n:
                raise InvalidInputError(f"C[{i}] has {c.shape[1]} columns, expected {n}")
            if d.shape[0] != c.shape[0]:
                raise InvalidInputError(f"D[{i}] has {d.shape[0]} rows, C[{i}] has {c.shape[0]}")
            if d.shape[1] != self.noise.v[i].size:
                raise InvalidInputError(
                    f"D[{i}] has {d.shape[1]} columns, v bounds for agent {i} have {self.noise.v[i].size}"
                )
        if self.noise.w.size != B.shape[1]:
            raise InvalidInputError(
                f"B has {B.shape[1]} columns, w bounds have {self.noise.w.size}"
            )
        if self.x0_bounds.size != n:
            raise InvalidInputError(f"initial bounds have length {self.x0_bounds.size}, expected {n}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "D", D)

    @property
    def n_states(self) -> int:
        return self.A.shape[0]

    @property
    def n_agents(self) -> int:
        return len(self.C)

## @file noise.py
## @brief Noise realization policies: seeded uniform, zero, and closed-form terms.

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Union

import numpy as np

from .interval_core import IntervalVector


class NoiseForm(Enum):
    SIN = "sin"
    COS = "cos"
    SIN2 = "sin2"
    CONST = "const"


@dataclass(frozen=True)
class NoiseTerm:
    """@brief amplitude · form(frequency · k + phase)."""

    form: NoiseForm
    amplitude: float
    frequency: float = 0.0
    phase: float = 0.0

    def value(self, k: int) -> float:
        arg = self.frequency * k + self.phase
        if self.form is NoiseForm.SIN:
            return self.amplitude * math.sin(arg)
        if self.form is NoiseForm.COS:
            return self.amplitude * math.cos(arg)
        if self.form is NoiseForm.SIN2:
            return self.amplitude * math.sin(arg) ** 2
        return self.amplitude

    def scaled(self, factor: float) -> NoiseTerm:
        return NoiseTerm(self.form, self.amplitude * factor, self.frequency, self.phase)


@dataclass(frozen=True)
class UniformNoise:
    def sample(self, k: int, bounds: IntervalVector, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(bounds.lower, bounds.upper)


@dataclass(frozen=True)
class ZeroNoise:
    def sample(self, k: int, bounds: IntervalVector, rng: np.random.Generator) -> np.ndarray:
        return np.zeros(bounds.size)


@dataclass(frozen=True)
class FormulaNoise:
    terms: tuple[NoiseTerm, ...]

    def sample(self, k: int, bounds: IntervalVector, rng: np.random.Generator) -> np.ndarray:
        return np.array([t.value(k) for t in self.terms])

    @property
    def size(self) -> int:
        return len(self.terms)


NoisePolicy = Union[UniformNoise, ZeroNoise, FormulaNoise]


def first_violation(policy: NoisePolicy, bounds: IntervalVector, horizon: int) -> tuple[int, int] | None:
    """@brief First (k, coordinate) with k ≤ horizon where the policy leaves its bounds."""
    if isinstance(policy, UniformNoise):
        return None
    if isinstance(policy, ZeroNoise):
        bad = np.flatnonzero((bounds.lower > 0) | (bounds.upper < 0))
        return (0, int(bad[0])) if bad.size else None
    for k in range(horizon + 1):
        for s, term in enumerate(policy.terms):
            value = term.value(k)
            if not bounds.lower[s] <= value <= bounds.upper[s]:
                return k, s
    return None

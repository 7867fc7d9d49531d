## @file simulation.py
## @brief Plant simulation with in-bounds noise realizations.

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .interval_core import IntervalVector, contains
from .noise import NoisePolicy
from .scenario import Scenario


@dataclass(frozen=True, eq=False)
class Trajectory:
    """@brief States, noises and measurements for k = 0..K, one row per k."""

    x: np.ndarray
    w: np.ndarray
    v: tuple[np.ndarray, ...]
    y: tuple[np.ndarray, ...]

    @property
    def horizon(self) -> int:
        return self.x.shape[0] - 1

    def measurements(self, k: int) -> list[np.ndarray]:
        return [y[k] for y in self.y]

    def noise(self, k: int) -> list[np.ndarray]:
        return [v[k] for v in self.v]


def _draw(policy: NoisePolicy, k: int, bounds: IntervalVector, rng, what: str) -> np.ndarray:
    value = np.asarray(policy.sample(k, bounds, rng), dtype=float)
    if not contains(bounds, value):
        raise InvalidInputError(f"{what} at k = {k} leaves its bounds")
    return value


def simulate_plant(scenario: Scenario, seed: int | None = None) -> Trajectory:
    """@brief Run x_{k+1} = A x_k + B w_k, y^i_k = C^i x_k + D^i v^i_k.
    @param scenario  Validated scenario.
    @param seed      Overrides the scenario seed.
    @return          Trajectory for k = 0..K; deterministic given the seed.
    """
    plant = scenario.plant
    rng = np.random.default_rng(scenario.seed if seed is None else seed)
    K = scenario.horizon
    bounds = plant.noise

    if scenario.x0 is not None:
        x0 = np.asarray(scenario.x0, dtype=float)
    else:
        x0 = rng.uniform(plant.x0_bounds.lower, plant.x0_bounds.upper)

    x = np.empty((K + 1, plant.n_states))
    w = np.empty((K + 1, plant.B.shape[1]))
    v = [np.empty((K + 1, b.size)) for b in bounds.v]
    y = [np.empty((K + 1, C.shape[0])) for C in plant.C]
    x[0] = x0
    for k in range(K + 1):
        w[k] = _draw(scenario.w_policy, k, bounds.w, rng, "process noise")
        for i, policy in enumerate(scenario.v_policies):
            v[i][k] = _draw(policy, k, bounds.v[i], rng, f"measurement noise of agent {i}")
            y[i][k] = plant.C[i] @ x[k] + plant.D[i] @ v[i][k]
        if k < K:
            x[k + 1] = plant.A @ x[k] + plant.B @ w[k]
    return Trajectory(x, w, tuple(v), tuple(y))

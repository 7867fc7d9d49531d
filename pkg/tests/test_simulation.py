## @file test_simulation.py
## @brief Plant simulation determinism and noise realizations.

import numpy as np

from DIO_Observer.interval_core import contains
from DIO_Observer.simulation import simulate_plant


def test_same_seed_same_trajectory(example1):
    a = simulate_plant(example1, seed=5)
    b = simulate_plant(example1, seed=5)
    np.testing.assert_array_equal(a.x, b.x)
    np.testing.assert_array_equal(a.w, b.w)
    c = simulate_plant(example1, seed=6)
    assert not np.array_equal(a.x, c.x)


def test_trajectory_shapes_and_dynamics(example1):
    traj = simulate_plant(example1)
    plant = example1.plant
    assert traj.horizon == example1.horizon
    assert traj.x.shape == (201, 4)
    assert len(traj.y) == 3 and traj.y[2].shape == (201, 1)
    for k in range(5):
        np.testing.assert_allclose(traj.x[k + 1], plant.A @ traj.x[k] + plant.B @ traj.w[k])
        for i in range(3):
            np.testing.assert_allclose(traj.y[i][k], plant.C[i] @ traj.x[k] + plant.D[i] @ traj.v[i][k])


def test_initial_state_and_noise_respect_bounds(example1):
    traj = simulate_plant(example1, seed=2)
    plant = example1.plant
    assert contains(plant.x0_bounds, traj.x[0])
    assert all(contains(plant.noise.w, w) for w in traj.w)
    for i, bounds in enumerate(plant.noise.v):
        assert all(contains(bounds, v) for v in traj.v[i])


def test_formula_noise_follows_closed_form(example2):
    traj = simulate_plant(example2)
    np.testing.assert_array_equal(traj.x[0], example2.x0)
    np.testing.assert_allclose(traj.w[100, 0], 0.5 * np.sin(0.01 * 100))
    np.testing.assert_allclose(traj.w[100, 2], 0.2 * np.cos(0.01 * 100))
    np.testing.assert_allclose(traj.v[0][50, 0], 0.2 * np.sin(0.5) ** 2)
    assert not traj.v[1].any()

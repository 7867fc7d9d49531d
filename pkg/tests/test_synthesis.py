## @file test_synthesis.py
## @brief LP gain design and the CPDN initialization on the bundled plants.

import numpy as np
import pytest

from DIO_Observer.errors import InvalidInputError, NotStronglyConnectedError
from DIO_Observer.graph import complete_graph, diameter, directed_ring, from_edge_list, hop_distances
from DIO_Observer.lp_solver import solve_lp
from DIO_Observer.synthesis import (
    agent_gains,
    design_all_gains,
    design_gains,
    gain_program,
    row_gain_program,
    STRICT_NORM_LIMIT,
    run_cpdn_init,
)


def test_example1_row_norms(example1_synthesis):
    gains = example1_synthesis.gains
    np.testing.assert_allclose(gains[0].row_norms, [0, 2, 0, 1], atol=1e-9)
    np.testing.assert_allclose(gains[1].row_norms, [2, 0, 1, 0], atol=1e-9)
    assert gains[0].row_norms.sum() == pytest.approx(3.0, abs=1e-9)
    # agent 2 sees x0 + x1 only, so no row of its own contracts
    np.testing.assert_allclose(gains[2].row_norms, [2, 2, 1, 1], atol=1e-9)


def test_gains_are_consistent(example1):
    A = example1.plant.A
    for C in example1.plant.C:
        g = design_gains(A, C)
        n = A.shape[0]
        np.testing.assert_allclose(g.T, np.eye(n) - g.Gamma @ C, atol=1e-12)
        np.testing.assert_allclose(g.A_tilde, g.T @ A - g.L @ C, atol=1e-12)
        np.testing.assert_allclose(g.row_norms, np.abs(g.A_tilde).sum(axis=1), atol=1e-12)


def test_row_programs_match_stacked_program(example1):
    A, C = example1.plant.A, example1.plant.C[0]
    whole = solve_lp(gain_program(A, C))
    rows = sum(solve_lp(row_gain_program(A, C, s)).objective for s in range(A.shape[0]))
    assert whole.optimal
    assert whole.objective == pytest.approx(rows, abs=1e-9)


def test_design_is_no_worse_than_zero_gains(rng):
    A = rng.normal(size=(3, 3))
    C = rng.normal(size=(1, 3))
    g = design_gains(A, C)
    trivial = agent_gains(A, C, np.zeros((3, 1)), np.zeros((3, 1)))
    assert np.all(g.row_norms <= trivial.row_norms + 1e-9)


def test_full_state_output_gives_zero_norm():
    A = np.array([[0.5, 2.0], [-1.0, 3.0]])
    g = design_gains(A, np.eye(2))
    np.testing.assert_allclose(g.row_norms, 0.0, atol=1e-9)


def test_zero_output_matrix_leaves_rows_unchanged():
    A = np.array([[0.5, -0.2], [0.0, 1.5]])
    g = design_gains(A, np.zeros((1, 2)))
    np.testing.assert_allclose(g.row_norms, [0.7, 1.5], atol=1e-9)


def test_row_program_rejects_bad_shapes():
    with pytest.raises(InvalidInputError):
        row_gain_program(np.eye(2), np.ones((1, 3)), 0)
    with pytest.raises(InvalidInputError):
        row_gain_program(np.eye(2), np.ones((1, 2)), 2)


def test_example1_cpdn(example1_synthesis):
    cpdn = example1_synthesis.cpdn
    assert cpdn.success
    assert cpdn.d_star == 1
    assert cpdn.diameter == 1
    assert cpdn.local_d == (1, 1, 1)
    assert cpdn.stabilizer[(0, 0)] == 0 and cpdn.hops[(0, 0)] == 0
    assert cpdn.stabilizer[(0, 1)] == 1 and cpdn.hops[(0, 1)] == 1
    assert [cpdn.stabilizer[(2, s)] for s in range(4)] == [0, 1, 0, 1]
    assert cpdn.stabilizer_array(3, 4).min() >= 0


def test_example1_stabilizer_rows_contract(example1_synthesis):
    gains = example1_synthesis.gains
    for (i, s), agent in example1_synthesis.cpdn.stabilizer.items():
        assert gains[agent].row_norms[s] < 1.0


def test_example2_cpdn(example2_synthesis):
    cpdn = example2_synthesis.cpdn
    assert cpdn.success
    assert cpdn.diameter == 5
    assert cpdn.d_star == 5
    assert set(cpdn.local_d) == {5}
    # agent 0 learns block j's position and velocity rows from agent j, j hops away
    for j in range(6):
        assert cpdn.stabilizer[(0, 2 * j)] == j
        assert cpdn.hops[(0, 2 * j + 1)] == j


def test_cpdn_queue_grows_one_hop_per_round(example2_synthesis):
    trace = example2_synthesis.cpdn.trace
    assert trace[0][0] == (0,)
    assert trace[1][0] == (0, 1)
    assert trace[-1][0] == tuple(range(6))


def test_cpdn_d_star_is_max_of_local_counters(example1_synthesis, example2_synthesis):
    for syn in (example1_synthesis, example2_synthesis):
        assert syn.cpdn.d_star == max(syn.cpdn.local_d)


def test_cpdn_failure_reports_diameter_plus_one():
    A = np.array([[1.0]])
    gains = design_all_gains(A, [np.zeros((1, 1)), np.zeros((1, 1))])
    result = run_cpdn_init(complete_graph(2), gains)
    assert not result.success
    assert result.d_star == 2
    assert result.stabilizer == {}


def test_cpdn_on_single_node():
    A = np.array([[0.5]])
    result = run_cpdn_init(complete_graph(1), design_all_gains(A, [np.ones((1, 1))]))
    assert result.success
    assert result.d_star == 1


def test_cpdn_rejects_disconnected_graph():
    A = np.array([[0.5]])
    gains = design_all_gains(A, [np.ones((1, 1))] * 2)
    with pytest.raises(NotStronglyConnectedError):
        run_cpdn_init(from_edge_list(2, [(0, 1)]), gains)


def test_cpdn_rejects_gain_count_mismatch():
    gains = design_all_gains(np.array([[0.5]]), [np.ones((1, 1))])
    with pytest.raises(InvalidInputError):
        run_cpdn_init(directed_ring(3), gains)


def test_open_loop_stable_plant_without_measurements():
    A = np.array([[0.3, 0.2], [-0.1, 0.4]])
    gains = design_all_gains(A, [np.zeros((1, 2))] * 3)
    for g in gains:
        np.testing.assert_array_equal(g.L, 0.0)
        np.testing.assert_array_equal(g.Gamma, 0.0)
    result = run_cpdn_init(directed_ring(3), gains)
    assert result.success
    assert result.d_star == 1
    assert all(agent == i for (i, _), agent in result.stabilizer.items())


def test_example2_gain_structure(example2_synthesis):
    for i, g in enumerate(example2_synthesis.gains):
        own = [2 * i, 2 * i + 1]
        np.testing.assert_allclose(g.A_tilde[own], 0.0, atol=1e-9)
        others = np.delete(g.row_norms, own)
        np.testing.assert_allclose(others, np.tile([1.01, 1.0], 5), atol=1e-9)


def _random_strong_digraph(rng, N):
    order = rng.permutation(N)
    edges = {(int(order[k]), int(order[(k + 1) % N])) for k in range(N)}
    for i in range(N):
        for j in range(N):
            if i != j and rng.random() < 0.15:
                edges.add((i, j))
    return from_edge_list(N, edges)


def _random_closed_loops(rng, N, n):
    gains = []
    for _ in range(N):
        A = rng.uniform(-0.6, 0.6, size=(n, n)) * (rng.random((n, n)) < 0.6)
        A[rng.random(n) < 0.5] *= 4.0
        gains.append(agent_gains(A, np.zeros((1, n)), np.zeros((n, 1)), np.zeros((n, 1))))
    return gains


def _centralized_cpdn(graph, gains):
    """Nearest contracting row per (i, s) from global BFS distances."""
    N, n = graph.node_count, gains[0].n_states
    stabilizer, hops, local = {}, {}, []
    for i in range(N):
        dist = hop_distances(graph, i)
        worst = 0
        for s in range(n):
            options = [(dist[j], j) for j in range(N) if gains[j].row_norms[s] <= STRICT_NORM_LIMIT]
            if not options:
                return None
            hop, j = min(options)
            stabilizer[(i, s)], hops[(i, s)] = j, hop
            worst = max(worst, hop)
        local.append(max(1, worst))
    return max(local), stabilizer, hops


@pytest.mark.parametrize("seed", range(40))
def test_cpdn_matches_centralized_reference(seed):
    rng = np.random.default_rng(seed)
    N, n = int(rng.integers(2, 8)), int(rng.integers(1, 5))
    graph = _random_strong_digraph(rng, N)
    gains = _random_closed_loops(rng, N, n)
    result = run_cpdn_init(graph, gains)
    reference = _centralized_cpdn(graph, gains)
    if reference is None:
        assert not result.success
        assert result.d_star == diameter(graph) + 1
        return
    d_star, stabilizer, hops = reference
    assert result.success
    assert result.d_star == d_star
    assert result.stabilizer == stabilizer
    assert result.hops == hops

## @file test_stability.py
## @brief Selection assignments, spectral radius and the certificates.

import numpy as np
import pytest

from DIO_Observer.errors import InvalidAssignmentError, InvalidInputError
from DIO_Observer.graph import complete_graph, directed_ring
from DIO_Observer.interval_core import IntervalVector
from DIO_Observer.stability import (
    CertificateKind,
    SelectionAssignment,
    Side,
    assemble_ahat,
    certify,
    hstar_from_assignment,
    infnorm_certificate,
    is_nilpotent,
    lower_index,
    lower_spectral_radius,
    lsr_certificate,
    realized_selection,
    spectral_radius,
    upper_index,
)


def test_index_layout():
    n = 4
    assert lower_index(0, 0, n) == 0
    assert upper_index(0, 0, n) == 4
    assert lower_index(2, 3, n) == 19
    assert upper_index(2, 3, n) == 23


def test_ahat_is_block_diagonal_and_nonnegative(example1_synthesis):
    Ahat = assemble_ahat(example1_synthesis.gains)
    assert Ahat.shape == (24, 24)
    assert np.all(Ahat >= 0)
    assert not Ahat[:8, 8:].any()
    At = example1_synthesis.gains[0].A_tilde
    np.testing.assert_allclose(Ahat[:4, :4] - Ahat[:4, 4:8], At, atol=1e-12)


def test_identity_assignment_is_noop(rng):
    H = SelectionAssignment.identity(3, 2)
    M = rng.uniform(size=(12, 12))
    np.testing.assert_array_equal(H.apply(M), M)
    np.testing.assert_array_equal(H.to_matrix(), np.eye(12))


def test_apply_matches_matrix_product(rng):
    lower = np.array([[1, 0], [1, 2], [0, 0]])
    upper = np.array([[2, 0], [1, 1], [2, 1]])
    H = SelectionAssignment(lower, upper, 2)
    M = rng.uniform(size=(12, 12))
    np.testing.assert_allclose(H.apply(M), H.to_matrix() @ M)
    assert H.source(1, 1, Side.LOWER) == 2
    assert H.source(2, 0, Side.UPPER) == 2


def test_assignment_validation():
    with pytest.raises(InvalidAssignmentError):
        SelectionAssignment([[0, 3]], [[0, 0]], 1)
    ring = directed_ring(3)
    H = SelectionAssignment([[2], [1], [2]], [[0], [1], [2]], 1)
    with pytest.raises(InvalidAssignmentError):
        H.validate(ring)
    SelectionAssignment([[2], [1], [2]], [[0], [1], [2]], 2).validate(ring)


def test_example1_infnorm_certificate(example1, example1_synthesis):
    H = hstar_from_assignment(example1_synthesis.cpdn, example1.graph, 1)
    cert = infnorm_certificate(H, assemble_ahat(example1_synthesis.gains))
    assert cert.kind is CertificateKind.INFNORM
    assert cert.value == pytest.approx(0.0, abs=1e-9)
    assert cert.stable


def test_example1_identity_assignment_is_not_certified(example1_synthesis):
    cert = infnorm_certificate(SelectionAssignment.identity(3, 4), assemble_ahat(example1_synthesis.gains))
    assert cert.value == pytest.approx(2.0, abs=1e-9)
    assert not cert.stable


def test_hstar_needs_enough_rounds(example1, example1_synthesis):
    with pytest.raises(InvalidAssignmentError):
        hstar_from_assignment(example1_synthesis.cpdn, example1.graph, 0)


def test_example2_certificates(example2, example2_synthesis):
    cert = certify(example2_synthesis.gains, example2.graph, 5, example2_synthesis.cpdn)
    assert cert.kind is CertificateKind.INFNORM
    assert cert.value == pytest.approx(0.0, abs=1e-9)

    cert = certify(example2_synthesis.gains, example2.graph, 1, example2_synthesis.cpdn)
    assert cert.kind is CertificateKind.LOWER_SPECTRAL_RADIUS
    assert cert.value == 0.0
    assert cert.stable
    cert.assignment.validate(example2.graph)


def test_example2_rejects_cpdn_certificate_below_d_star(example2, example2_synthesis):
    with pytest.raises(InvalidAssignmentError):
        certify(example2_synthesis.gains, example2.graph, 1, example2_synthesis.cpdn, method="infnorm")


def test_isolated_agents_in_example1_are_not_stable(example1, example1_synthesis):
    cert = certify(example1_synthesis.gains, example1.graph, 0, example1_synthesis.cpdn)
    assert cert.kind is CertificateKind.LOWER_SPECTRAL_RADIUS
    assert not cert.stable


def test_certify_rejects_unknown_method(example1, example1_synthesis):
    with pytest.raises(InvalidInputError):
        certify(example1_synthesis.gains, example1.graph, 1, example1_synthesis.cpdn, method="bogus")


def test_spectral_radius_known_values():
    assert spectral_radius([[0.5, 0.5], [0.5, 0.5]]).value == pytest.approx(1.0, abs=1e-8)
    assert spectral_radius([[0.0, 2.0], [0.5, 0.0]]).value == pytest.approx(1.0, abs=1e-8)
    assert spectral_radius(np.diag([0.3, 0.7])).value == pytest.approx(0.7)
    assert spectral_radius([[0.0, 1.0], [0.0, 0.0]]).value == 0.0


def test_spectral_radius_matches_numpy(rng):
    M = rng.uniform(size=(6, 6))
    M[M < 0.4] = 0.0
    est = spectral_radius(M)
    assert est.converged
    assert est.value == pytest.approx(max(abs(np.linalg.eigvals(M))), abs=1e-7)


def test_spectral_radius_rejects_negative_entries():
    with pytest.raises(InvalidInputError):
        spectral_radius([[0.0, -1.0], [0.0, 0.0]])


def test_nilpotency():
    assert is_nilpotent(np.triu(np.ones((4, 4)), k=1))
    assert not is_nilpotent(np.eye(2))
    assert is_nilpotent(np.zeros((3, 3)))


LSR_CANDIDATES = [
    [[0.5, 0.0], [0.1, 0.3]],
    [[0.0, 0.6], [0.2, 0.2]],
]


@pytest.mark.parametrize("method", ["exhaustive", "policy", "auto"])
def test_lower_spectral_radius_small_set(method):
    result = lower_spectral_radius(LSR_CANDIDATES, method=method)
    assert result.value == pytest.approx(0.4, abs=1e-8)
    assert result.choice == (1, 1)


def test_lower_spectral_radius_finds_nilpotent_selection():
    candidates = [
        [[0.9, 0.0, 0.0], [0.0, 0.0, 0.0]],
        [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
        [[0.0, 0.0, 2.0], [0.0, 3.0, 0.0]],
    ]
    result = lower_spectral_radius(candidates)
    assert result.value == 0.0
    assert is_nilpotent(result.matrix)


def test_lower_spectral_radius_validation():
    with pytest.raises(InvalidInputError):
        lower_spectral_radius([[]])
    with pytest.raises(InvalidInputError):
        lower_spectral_radius([[[-1.0]]])
    with pytest.raises(InvalidInputError):
        lower_spectral_radius(LSR_CANDIDATES, method="simplex")


def test_lsr_never_exceeds_cpdn_certificate(example1, example1_synthesis):
    cert = lsr_certificate(example1_synthesis.gains, example1.graph, 1)
    assert cert.value <= 1e-9
    cert.assignment.validate(example1.graph)


def test_realized_selection_picks_tightest_bounds():
    framers = [
        IntervalVector([0.0, 0.0], [5.0, 5.0]),
        IntervalVector([1.0, -1.0], [6.0, 4.0]),
        IntervalVector([0.5, 0.5], [4.0, 4.0]),
    ]
    H = realized_selection(framers, complete_graph(3), 1)
    assert H.lower_source[0].tolist() == [1, 2]
    assert H.upper_source[0].tolist() == [2, 1]
    H0 = realized_selection(framers, complete_graph(3), 0)
    assert H0.lower_source.tolist() == [[0, 0], [1, 1], [2, 2]]


def _random_candidates(rng):
    dim = int(rng.integers(2, 9))
    counts = rng.integers(1, 4, size=dim)
    # keep the exhaustive side affordable
    while np.prod(counts) > 729:
        counts[int(np.argmax(counts))] -= 1
    candidates = []
    for r in range(dim):
        rows = []
        for _ in range(counts[r]):
            row = rng.uniform(0.05, 1.0, size=dim) * (rng.random(dim) < 0.5)
            row[int(rng.integers(dim))] = rng.uniform(0.05, 1.0)
            rows.append(row)
        candidates.append(rows)
    return candidates


@pytest.mark.parametrize("seed", range(50))
def test_policy_iteration_matches_enumeration(seed):
    candidates = _random_candidates(np.random.default_rng(seed))
    exact = lower_spectral_radius(candidates, method="exhaustive")
    policy = lower_spectral_radius(candidates, method="policy")
    assert policy.value == pytest.approx(exact.value, abs=1e-8)

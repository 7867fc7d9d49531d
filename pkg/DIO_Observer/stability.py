## @file stability.py
## @brief Collective error matrices, selection assignments and Schur certificates.
##
## The collective error stacks [e̲⁰; ē⁰; e̲¹; ē¹; …] with blocks of length n,
## so agent i, state s sits at row 2ni + s (lower side) and 2ni + s + n (upper
## side). A selection assignment says which neighbour's framer each row adopts;
## it is kept as two N×n index arrays and only expanded to a 0/1 matrix on
## request.

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple, Sequence

import networkx as nx
import numpy as np

from .errors import InvalidAssignmentError, InvalidInputError
from .graph import Digraph, dhop
from .interval_core import IntervalVector, sign_split
from .synthesis import AgentGains, CpdnResult

log = logging.getLogger(__name__)

## Certificates need value < 1 − CERTIFICATE_MARGIN.
CERTIFICATE_MARGIN = 1e-9
## Entries at or below this are treated as structural zeros.
ZERO_TOL = 1e-12
POWER_TOL = 1e-10
POWER_MAX_ITER = 100_000
## Largest vertex count the lower spectral radius enumerates exhaustively.
EXHAUSTIVE_LIMIT = 1_000_000
DOMINANT_ITER = 5_000
POSITIVITY_SHIFT = 1e-12


def lower_index(i: int, s: int, n: int) -> int:
    return 2 * n * i + s


def upper_index(i: int, s: int, n: int) -> int:
    return 2 * n * i + s + n


class Side(Enum):
    LOWER = "lower"
    UPPER = "upper"


class CertificateKind(Enum):
    INFNORM = "infnorm"
    SPECTRAL_RADIUS = "spectral_radius"
    LOWER_SPECTRAL_RADIUS = "lower_spectral_radius"


def _index_array(values, what: str) -> np.ndarray:
    arr = np.array(values, dtype=int)
    if arr.ndim != 2:
        raise InvalidInputError(f"{what} must be an agents×states array, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class SelectionAssignment:
    """@brief Source agent per (agent, state, side); the sparse form of H."""

    lower_source: np.ndarray
    upper_source: np.ndarray
    d: int

    def __post_init__(self):
        lower = _index_array(self.lower_source, "lower_source")
        upper = _index_array(self.upper_source, "upper_source")
        if lower.shape != upper.shape:
            raise InvalidInputError(
                f"lower/upper sources differ in shape: {lower.shape} vs {upper.shape}"
            )
        N = lower.shape[0]
        if lower.size and (min(lower.min(), upper.min()) < 0 or max(lower.max(), upper.max()) >= N):
            raise InvalidAssignmentError(f"source agent outside [0, {N})")
        if self.d < 0:
            raise InvalidInputError(f"round count must be nonnegative, got {self.d}")
        object.__setattr__(self, "lower_source", lower)
        object.__setattr__(self, "upper_source", upper)

    @classmethod
    def identity(cls, n_agents: int, n_states: int) -> SelectionAssignment:
        own = np.repeat(np.arange(n_agents)[:, None], n_states, axis=1)
        return cls(own, own, 0)

    @property
    def n_agents(self) -> int:
        return self.lower_source.shape[0]

    @property
    def n_states(self) -> int:
        return self.lower_source.shape[1]

    @property
    def dim(self) -> int:
        return 2 * self.n_agents * self.n_states

    def source(self, i: int, s: int, side: Side) -> int:
        table = self.lower_source if side is Side.LOWER else self.upper_source
        return int(table[i, s])

    def row_sources(self) -> np.ndarray:
        """@brief For every collective row, the row of the argument that H copies."""
        N, n = self.n_agents, self.n_states
        out = np.empty(self.dim, dtype=int)
        for i in range(N):
            for s in range(n):
                out[lower_index(i, s, n)] = lower_index(int(self.lower_source[i, s]), s, n)
                out[upper_index(i, s, n)] = upper_index(int(self.upper_source[i, s]), s, n)
        return out

    def apply(self, M) -> np.ndarray:
        """@brief H·M for a matrix, or H·e for a vector, without forming H."""
        M = np.asarray(M, dtype=float)
        if M.shape[0] != self.dim:
            raise InvalidInputError(f"operand has {M.shape[0]} rows, expected {self.dim}")
        return M[self.row_sources()]

    def to_matrix(self) -> np.ndarray:
        H = np.zeros((self.dim, self.dim))
        H[np.arange(self.dim), self.row_sources()] = 1.0
        return H

    def validate(self, graph: Digraph) -> None:
        if graph.node_count != self.n_agents:
            raise InvalidAssignmentError(
                f"assignment covers {self.n_agents} agents, graph has {graph.node_count}"
            )
        for i in range(self.n_agents):
            allowed = dhop(graph, i, self.d)
            for table, side in ((self.lower_source, Side.LOWER), (self.upper_source, Side.UPPER)):
                for s in range(self.n_states):
                    if int(table[i, s]) not in allowed:
                        raise InvalidAssignmentError(
                            f"agent {i} state {s} ({side.value}) reads agent {int(table[i, s])}, "
                            f"outside its {self.d}-hop neighbourhood"
                        )


@dataclass(frozen=True, eq=False)
class StabilityCertificate:
    kind: CertificateKind
    value: float
    assignment: SelectionAssignment
    converged: bool = True

    @property
    def stable(self) -> bool:
        return self.value < 1.0 - CERTIFICATE_MARGIN


class SpectralEstimate(NamedTuple):
    value: float
    converged: bool


class LsrResult(NamedTuple):
    value: float
    choice: tuple[int, ...]
    matrix: np.ndarray
    converged: bool


def assemble_ahat(gains: Sequence[AgentGains]) -> np.ndarray:
    """@brief Block-diagonal Â with blocks [[Ã⁺, Ã⁻], [Ã⁻, Ã⁺]].
    @param gains  One AgentGains per agent, common state dimension.
    @return       Nonnegative 2Nn×2Nn matrix.
    """
    if not gains:
        raise InvalidInputError("no agents to assemble")
    n = gains[0].n_states
    if any(g.n_states != n for g in gains):
        raise InvalidInputError("agents disagree on the state dimension")
    N = len(gains)
    Ahat = np.zeros((2 * N * n, 2 * N * n))
    for i, g in enumerate(gains):
        split = sign_split(g.A_tilde)
        at = 2 * n * i
        Ahat[at:at + 2 * n, at:at + 2 * n] = np.block([
            [split.plus, split.minus],
            [split.minus, split.plus],
        ])
    return Ahat


def hstar_from_assignment(cpdn: CpdnResult, graph: Digraph, d: int) -> SelectionAssignment:
    """@brief H_* reading both sides of (i, s) from the stabilizing agent ℓ(i, s)."""
    if not cpdn.success:
        raise InvalidAssignmentError("CPDN initialization failed; no stabilizer map")
    N = graph.node_count
    n = 1 + max(s for _, s in cpdn.stabilizer)
    source = np.empty((N, n), dtype=int)
    for (i, s), agent in cpdn.stabilizer.items():
        source[i, s] = agent
    assignment = SelectionAssignment(source, source, d)
    assignment.validate(graph)
    return assignment


def infnorm_certificate(H: SelectionAssignment, Ahat) -> StabilityCertificate:
    M = H.apply(Ahat)
    value = float(np.abs(M).sum(axis=1).max(initial=0.0))
    return StabilityCertificate(CertificateKind.INFNORM, value, H)


def _support(M: np.ndarray) -> np.ndarray:
    return M > ZERO_TOL


def is_nilpotent(M) -> bool:
    """@brief Nilpotency of the support pattern by boolean repeated squaring."""
    M = np.asarray(M, dtype=float)
    P = _support(M).astype(np.int64)
    power = 1
    while power < max(M.shape[0], 1):
        P = ((P @ P) > 0).astype(np.int64)
        power *= 2
        if not P.any():
            return True
    return not P.any()


def _check_nonnegative_square(M: np.ndarray) -> None:
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise InvalidInputError(f"expected a square matrix, got shape {M.shape}")
    if not np.isfinite(M).all():
        raise InvalidInputError("matrix has non-finite entries")
    if (M < -ZERO_TOL).any():
        raise InvalidInputError("matrix has negative entries")


def _power_growth(M: np.ndarray) -> SpectralEstimate:
    """@brief ρ of an irreducible block by power iteration on M + I."""
    v = np.ones(M.shape[0])
    prev = math.inf
    for _ in range(POWER_MAX_ITER):
        w = M @ v + v
        growth = float(w.max())
        v = w / growth
        estimate = growth - 1.0
        if abs(estimate - prev) < POWER_TOL:
            return SpectralEstimate(max(estimate, 0.0), True)
        prev = estimate
    return SpectralEstimate(max(prev, 0.0), False)


def spectral_radius(M) -> SpectralEstimate:
    """@brief Spectral radius of a nonnegative matrix.
    @param M  Square nonnegative matrix.
    @return   SpectralEstimate; exact 0 for nilpotent support patterns.
    """
    M = np.asarray(M, dtype=float)
    _check_nonnegative_square(M)
    if is_nilpotent(M):
        return SpectralEstimate(0.0, True)
    support = nx.DiGraph()
    support.add_nodes_from(range(M.shape[0]))
    support.add_edges_from(map(tuple, np.argwhere(_support(M))))
    best, converged = 0.0, True
    for component in nx.strongly_connected_components(support):
        idx = sorted(component)
        if len(idx) == 1:
            best = max(best, float(M[idx[0], idx[0]]) if M[idx[0], idx[0]] > ZERO_TOL else 0.0)
            continue
        est = _power_growth(M[np.ix_(idx, idx)])
        best = max(best, est.value)
        converged = converged and est.converged
    if not converged:
        log.warning("power iteration hit %d iterations; spectral radius %.6g is an estimate",
                    POWER_MAX_ITER, best)
    return SpectralEstimate(best, converged)


def spectral_certificate(H: SelectionAssignment, Ahat) -> StabilityCertificate:
    est = spectral_radius(H.apply(Ahat))
    return StabilityCertificate(CertificateKind.SPECTRAL_RADIUS, est.value, H, est.converged)


def dominant_vector(M) -> np.ndarray:
    """@brief Strictly positive approximation of a Perron vector, max entry 1."""
    M = np.asarray(M, dtype=float)
    v = np.ones(M.shape[0])
    for _ in range(DOMINANT_ITER):
        w = M @ v + v
        w /= w.max()
        if np.abs(w - v).max() < POWER_TOL:
            v = w
            break
        v = w
    return v + POSITIVITY_SHIFT


def _selected(candidates: Sequence[Sequence[np.ndarray]], choice: Sequence[int]) -> np.ndarray:
    return np.array([candidates[r][c] for r, c in enumerate(choice)], dtype=float)


def _nilpotent_choice(candidates: Sequence[Sequence[np.ndarray]]) -> list[int] | None:
    """@brief A selection with acyclic support, found by resolving rows layer by layer.

    A row is resolved once some candidate reads only resolved rows; a nilpotent
    selection exists exactly when every row gets resolved.
    """
    dim = len(candidates)
    resolved = np.zeros(dim, dtype=bool)
    choice: list[int | None] = [None] * dim
    while not resolved.all():
        layer = []
        for r in range(dim):
            if resolved[r]:
                continue
            for c, row in enumerate(candidates[r]):
                if not (_support(row) & ~resolved).any():
                    choice[r] = c
                    layer.append(r)
                    break
        if not layer:
            return None
        resolved[layer] = True
    return [int(c) for c in choice]


def _exhaustive(candidates) -> LsrResult:
    best: LsrResult | None = None
    all_converged = True
    for choice in itertools.product(*(range(len(c)) for c in candidates)):
        M = _selected(candidates, choice)
        est = spectral_radius(M)
        all_converged = all_converged and est.converged
        if best is None or est.value < best.value:
            best = LsrResult(est.value, tuple(choice), M, est.converged)
            if est.value == 0.0:
                break
    return best._replace(converged=all_converged)


def _policy_iteration(candidates) -> LsrResult:
    ones = np.ones(len(candidates))
    choice = [int(np.argmin([row @ ones for row in rows])) for rows in candidates]
    seen: set[tuple[int, ...]] = set()
    best: LsrResult | None = None
    while True:
        M = _selected(candidates, choice)
        est = spectral_radius(M)
        if best is None or est.value < best.value:
            best = LsrResult(est.value, tuple(choice), M, est.converged)
        if est.value == 0.0:
            return best
        key = tuple(choice)
        if key in seen:
            log.warning("lower spectral radius: selection repeats, keeping ρ = %.6g", best.value)
            return best
        seen.add(key)
        v = dominant_vector(M)
        changed = False
        for r, rows in enumerate(candidates):
            scores = [float(row @ v) for row in rows]
            current = scores[choice[r]]
            pick = int(np.argmin(scores))
            if scores[pick] < current - ZERO_TOL * max(1.0, abs(current)):
                choice[r] = pick
                changed = True
        if not changed:
            return best


def lower_spectral_radius(
    row_candidates: Sequence[Sequence],
    method: str = "auto",
    max_vertices: int = EXHAUSTIVE_LIMIT,
) -> LsrResult:
    """@brief Minimum spectral radius over an independent-row-uncertainty set.
    @param row_candidates  Per row, a nonempty list of nonnegative candidate rows.
    @param method          "auto", "exhaustive" or "policy".
    @param max_vertices    Vertex count up to which "auto" enumerates.
    @return                LsrResult with the minimizing candidate index per row.
    """
    candidates = [[np.asarray(row, dtype=float) for row in rows] for rows in row_candidates]
    dim = len(candidates)
    for r, rows in enumerate(candidates):
        if not rows:
            raise InvalidInputError(f"row {r} has no candidates")
        for row in rows:
            if row.shape != (dim,):
                raise InvalidInputError(f"row {r} candidate has shape {row.shape}, expected ({dim},)")
            if (row < -ZERO_TOL).any() or not np.isfinite(row).all():
                raise InvalidInputError(f"row {r} candidate is not finite and nonnegative")
    if method not in ("auto", "exhaustive", "policy"):
        raise InvalidInputError(f"unknown lower spectral radius method {method!r}")

    zero = _nilpotent_choice(candidates)
    if zero is not None:
        return LsrResult(0.0, tuple(zero), _selected(candidates, zero), True)
    vertices = math.prod(len(rows) for rows in candidates)
    if method == "exhaustive" or (method == "auto" and vertices <= max_vertices):
        return _exhaustive(candidates)
    log.debug("lower spectral radius: %d vertices, using policy iteration", vertices)
    return _policy_iteration(candidates)


def lsr_certificate(
    gains: Sequence[AgentGains],
    graph: Digraph,
    d: int,
    Ahat=None,
    method: str = "auto",
) -> StabilityCertificate:
    """@brief Certificate from the best selection among all d-hop admissible ones."""
    Ahat = assemble_ahat(gains) if Ahat is None else np.asarray(Ahat, dtype=float)
    N, n = len(gains), gains[0].n_states
    sources: list[list[int]] = []
    candidates: list[list[np.ndarray]] = []
    rows = sorted(
        [(lower_index(i, s, n), i, s, lower_index) for i in range(N) for s in range(n)]
        + [(upper_index(i, s, n), i, s, upper_index) for i in range(N) for s in range(n)]
    )
    for _, i, s, index in rows:
        reach = sorted(dhop(graph, i, d))
        sources.append(reach)
        candidates.append([Ahat[index(j, s, n)] for j in reach])
    result = lower_spectral_radius(candidates, method=method)
    lower = np.empty((N, n), dtype=int)
    upper = np.empty((N, n), dtype=int)
    for i in range(N):
        for s in range(n):
            r = lower_index(i, s, n)
            lower[i, s] = sources[r][result.choice[r]]
            r = upper_index(i, s, n)
            upper[i, s] = sources[r][result.choice[r]]
    return StabilityCertificate(
        CertificateKind.LOWER_SPECTRAL_RADIUS,
        result.value,
        SelectionAssignment(lower, upper, d),
        result.converged,
    )


def certify(
    gains: Sequence[AgentGains],
    graph: Digraph,
    d: int,
    cpdn: CpdnResult | None = None,
    method: str = "auto",
) -> StabilityCertificate:
    """@brief Pick a certificate for rounds d.

    "auto" tries ‖H_*Â‖∞ and ρ(H_*Â) when the CPDN map is admissible for d,
    then falls back to the lower spectral radius.
    """
    Ahat = assemble_ahat(gains)
    if method not in ("auto", "infnorm", "spectral", "lsr"):
        raise InvalidInputError(f"unknown certificate method {method!r}")
    usable = cpdn is not None and cpdn.success and d >= cpdn.d_star
    if method in ("infnorm", "spectral") and not usable:
        raise InvalidAssignmentError(
            f"no CPDN stabilizer map admissible for d = {d}"
        )
    if method == "lsr" or (method == "auto" and not usable):
        return lsr_certificate(gains, graph, d, Ahat)
    H = hstar_from_assignment(cpdn, graph, d)
    cert = infnorm_certificate(H, Ahat)
    if method == "infnorm" or (method == "auto" and cert.stable):
        return cert
    cert = spectral_certificate(H, Ahat)
    if method == "spectral" or cert.stable:
        return cert
    return lsr_certificate(gains, graph, d, Ahat)


def realized_selection(framers: Sequence[IntervalVector], graph: Digraph, d: int) -> SelectionAssignment:
    """@brief H_k realized by d intersection rounds: argmax of lowers, argmin of uppers.

    Ties go to the smallest agent index.
    """
    N = len(framers)
    if N != graph.node_count:
        raise InvalidInputError(f"{N} framers for {graph.node_count} nodes")
    n = framers[0].size
    lower = np.empty((N, n), dtype=int)
    upper = np.empty((N, n), dtype=int)
    lowers = np.array([f.lower for f in framers])
    uppers = np.array([f.upper for f in framers])
    for i in range(N):
        reach = np.array(sorted(dhop(graph, i, d)))
        lower[i] = reach[np.argmax(lowers[reach], axis=0)]
        upper[i] = reach[np.argmin(uppers[reach], axis=0)]
    return SelectionAssignment(lower, upper, d)

## @file synthesis.py
## @brief LP observer gain design and the distributed CPDN initialization.
##
## Each agent minimises the entry-wise 1-norm of Ã = T A − L C with
## T = I − Γ C. The s-th rows of Γ and L only touch the s-th row of Ã, so the
## design is solved as n independent row programs. Agents then flood their Ã
## over the graph until every state has a row with 1-norm below one within
## reach, and agree on the largest hop count by max-consensus.

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .errors import InvalidInputError, LpError
from .graph import Digraph, diameter, neighbors
from .lp_solver import LinearProgram, LpStatus, solve_lp

log = logging.getLogger(__name__)

## Rows count as contracting only below this value.
STRICT_NORM_LIMIT = 1.0 - 1e-9

## Designed gains are rounded to this many significant digits; entries below
## GAIN_ROUNDOFF times the largest gain of their row are cleared.
GAIN_DIGITS = 12
GAIN_ROUNDOFF = 1e-12


@dataclass(frozen=True, eq=False)
class AgentGains:
    L: np.ndarray
    Gamma: np.ndarray
    T: np.ndarray
    A_tilde: np.ndarray
    row_norms: np.ndarray

    @property
    def n_states(self) -> int:
        return self.A_tilde.shape[0]


def agent_gains(A, C, L, Gamma) -> AgentGains:
    """@brief Derive T = I − ΓC, Ã = TA − LC and the row 1-norms of Ã."""
    A = np.asarray(A, dtype=float)
    C = np.atleast_2d(np.asarray(C, dtype=float))
    n = A.shape[0]
    L = np.asarray(L, dtype=float).reshape(n, C.shape[0])
    Gamma = np.asarray(Gamma, dtype=float).reshape(n, C.shape[0])
    T = np.eye(n) - Gamma @ C
    A_tilde = T @ A - L @ C
    row_norms = np.abs(A_tilde).sum(axis=1)
    for arr in (L, Gamma, T, A_tilde, row_norms):
        arr.setflags(write=False)
    return AgentGains(L, Gamma, T, A_tilde, row_norms)


class RowGains(NamedTuple):
    gamma: np.ndarray
    l: np.ndarray
    min_norm: float


def row_gain_program(A, C, s: int) -> LinearProgram:
    """@brief LP for min ‖A_s − γ(CA) − l C‖₁ over z = [γ, l, E].
    @param A  n×n system matrix.
    @param C  m×n output matrix.
    @param s  Row index.
    @return   LinearProgram with 2m + n free variables.
    """
    A = np.asarray(A, dtype=float)
    C = np.atleast_2d(np.asarray(C, dtype=float))
    n = A.shape[0]
    if not 0 <= s < n:
        raise InvalidInputError(f"row index {s} outside [0, {n})")
    if C.shape[1] != n:
        raise InvalidInputError(f"C has {C.shape[1]} columns, A has {n}")
    m = C.shape[0]
    CA = C @ A
    eye = np.eye(n)
    G = np.block([
        [-CA.T, -C.T, -eye],
        [CA.T, C.T, -eye],
    ])
    h = np.concatenate([-A[s], A[s]])
    c = np.concatenate([np.zeros(2 * m), np.ones(n)])
    return LinearProgram(c=c, G=G, h=h)


def gain_program(A, C) -> LinearProgram:
    """@brief The whole design LP for one agent, all rows stacked block-diagonally."""
    A = np.asarray(A, dtype=float)
    rows = [row_gain_program(A, C, s) for s in range(A.shape[0])]
    width = rows[0].num_vars
    total = width * len(rows)
    G = np.zeros((sum(r.h.size for r in rows), total))
    at = 0
    for k, r in enumerate(rows):
        G[at:at + r.h.size, k * width:(k + 1) * width] = r.G
        at += r.h.size
    return LinearProgram(
        c=np.concatenate([r.c for r in rows]),
        G=G,
        h=np.concatenate([r.h for r in rows]),
    )


def design_gains_row(A, C, s: int) -> RowGains:
    C = np.atleast_2d(np.asarray(C, dtype=float))
    m = C.shape[0]
    sol = solve_lp(row_gain_program(A, C, s))
    if sol.status is not LpStatus.OPTIMAL:
        # E = |A_s| is always feasible and the objective is bounded below by 0
        raise LpError(f"row {s} design LP returned {sol.status.value}")
    log.debug("row %d: min 1-norm %.6g after %d pivots", s, sol.objective, sol.pivots)
    return RowGains(sol.z[:m].copy(), sol.z[m:2 * m].copy(), max(sol.objective, 0.0))


def _clean(values: np.ndarray, scale: float) -> np.ndarray:
    """@brief Strip simplex round-off so exact gains such as Γ = 1, L = 0 stay exact."""
    out = np.where(np.abs(values) < GAIN_ROUNDOFF * scale, 0.0, values)
    nz = out != 0.0
    step = 10.0 ** (GAIN_DIGITS - 1 - np.floor(np.log10(np.abs(out[nz]))))
    out[nz] = np.round(out[nz] * step) / step
    return out


def design_gains(A, C) -> AgentGains:
    """@brief Minimise Σ|Ã| row by row and assemble the agent's gains.
    @param A  n×n system matrix.
    @param C  m_i×n output matrix of the agent.
    @return   AgentGains at the global LP optimum.
    """
    A = np.asarray(A, dtype=float)
    C = np.atleast_2d(np.asarray(C, dtype=float))
    n, m = A.shape[0], C.shape[0]
    Gamma = np.zeros((n, m))
    L = np.zeros((n, m))
    for s in range(n):
        row = design_gains_row(A, C, s)
        scale = max(1.0, float(np.abs(row.gamma).max()), float(np.abs(row.l).max()))
        Gamma[s] = _clean(row.gamma, scale)
        L[s] = _clean(row.l, scale)
    return agent_gains(A, C, L, Gamma)


def design_all_gains(A, outputs: Sequence) -> tuple[AgentGains, ...]:
    return tuple(design_gains(A, C) for C in outputs)


@dataclass(frozen=True)
class QEntry:
    """@brief One closed-loop matrix held by a node during initialization."""

    origin: int
    hop: int
    matrix: np.ndarray = field(compare=False, repr=False)


@dataclass(eq=False)
class CpdnResult:
    d_star: int
    success: bool
    diameter: int
    stabilizer: dict[tuple[int, int], int]
    hops: dict[tuple[int, int], int]
    local_d: tuple[int, ...]
    trace: list[dict[int, tuple[int, ...]]] = field(default_factory=list)

    def stabilizer_array(self, n_agents: int, n_states: int) -> np.ndarray:
        out = np.full((n_agents, n_states), -1, dtype=int)
        for (i, s), agent in self.stabilizer.items():
            out[i, s] = agent
        return out


def _qualifying(entry: QEntry, s: int) -> bool:
    return float(np.abs(entry.matrix[s]).sum()) <= STRICT_NORM_LIMIT


def _coverage(queue: dict[int, QEntry], n: int) -> dict[int, tuple[int, int]] | None:
    """@brief Pick (hop, origin) per state, or None when some state is uncovered."""
    picks: dict[int, tuple[int, int]] = {}
    for s in range(n):
        options = [(e.hop, e.origin) for e in queue.values() if _qualifying(e, s)]
        if not options:
            return None
        picks[s] = min(options)
    return picks


def run_cpdn_init(graph: Digraph, gains: Sequence[AgentGains], plant=None) -> CpdnResult:
    """@brief Synchronous-round simulation of the DIO initialization protocol.
    @param graph  Strongly connected communication graph.
    @param gains  One AgentGains per node.
    @param plant  Optional PlantModel the gains belong to, used for shape checks.
    @return       CpdnResult; failure is reported through `success`.
    """
    N = graph.node_count
    if len(gains) != N:
        raise InvalidInputError(f"{len(gains)} gain sets for {N} nodes")
    n = gains[0].n_states
    if any(g.n_states != n for g in gains):
        raise InvalidInputError("agents disagree on the state dimension")
    if plant is not None and (plant.n_agents != N or plant.n_states != n):
        raise InvalidInputError(
            f"plant has {plant.n_agents} agents and {plant.n_states} states, "
            f"gains describe {N} and {n}"
        )
    diam = diameter(graph)

    queues = [{i: QEntry(i, 0, gains[i].A_tilde)} for i in range(N)]
    done_at: list[int | None] = [None] * N
    stabilizer: dict[tuple[int, int], int] = {}
    hops: dict[tuple[int, int], int] = {}
    trace: list[dict[int, tuple[int, ...]]] = []

    for exchange in range(diam + 1):
        trace.append({i: tuple(sorted(queues[i])) for i in range(N)})
        for i in range(N):
            if done_at[i] is not None:
                continue
            picks = _coverage(queues[i], n)
            if picks is None:
                continue
            done_at[i] = exchange
            for s, (hop, origin) in picks.items():
                stabilizer[(i, s)] = origin
                hops[(i, s)] = hop
        log.debug("cpdn round %d: %d/%d nodes covered", exchange,
                  sum(d is not None for d in done_at), N)
        if all(d is not None for d in done_at) or exchange == diam:
            break
        outbox = [dict(q) for q in queues]
        for i in range(N):
            merged: dict[int, QEntry] = {}
            for j in sorted(neighbors(graph, i)):
                step = 0 if j == i else 1
                for origin, entry in outbox[j].items():
                    hop = entry.hop + step
                    if origin not in merged or hop < merged[origin].hop:
                        merged[origin] = QEntry(origin, hop, entry.matrix)
            queues[i] = merged

    local = [diam + 1 if d is None else max(1, d) for d in done_at]
    agreed = list(local)
    for _ in range(diam):
        agreed = [max(agreed[j] for j in neighbors(graph, i)) for i in range(N)]
    success = all(d is not None for d in done_at)
    if not success:
        missing = [i for i, d in enumerate(done_at) if d is None]
        log.warning("CPDN fails: nodes %s find no contracting row within %d hops",
                    missing, diam)
        stabilizer, hops = {}, {}
    return CpdnResult(
        d_star=max(agreed),
        success=success,
        diameter=diam,
        stabilizer=stabilizer,
        hops=hops,
        local_d=tuple(local),
        trace=trace,
    )

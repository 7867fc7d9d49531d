## @file observer.py
## @brief DIO runtime: local interval update and intersection rounds.
##
## One step k → k+1 runs the local update at every agent, then d synchronous
## rounds in which agent i intersects the framers of N_i. The local update
## needs y_{k+1}, so the caller advances the plant before stepping observers.

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import InvalidInputError, ObserverInternalError
from .graph import Digraph, neighbors
from .interval_core import IntervalVector, SignSplitMatrix, intersect_all, sign_split
from .model import NoiseBounds, PlantModel
from .stability import SelectionAssignment, realized_selection
from .synthesis import AgentGains


EPS = float(np.finfo(float).eps)


@dataclass(frozen=True, eq=False)
class LocalObserverMatrices:
    """@brief Time-invariant sign splits used by one agent's local update."""

    gains: AgentGains
    a_tilde: SignSplitMatrix
    tb: SignSplitMatrix
    noise_plus: np.ndarray
    noise_minus: np.ndarray
    guard_x: np.ndarray
    guard_w: np.ndarray
    guard_v: np.ndarray
    guard_factor: float


def local_matrices(gains: AgentGains, A, B, C, D) -> LocalObserverMatrices:
    """@brief Precompute Ã±, (TB)±, (LD)⁺+(ΓD)⁺, (LD)⁻+(ΓD)⁻ and the magnitudes
    used by the optional outward-rounding guard."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    C = np.atleast_2d(np.asarray(C, dtype=float))
    D = np.atleast_2d(np.asarray(D, dtype=float))
    absT, absL, absG = np.abs(gains.T), np.abs(gains.L), np.abs(gains.Gamma)
    LD = sign_split(gains.L @ D)
    GD = sign_split(gains.Gamma @ D)
    TB = sign_split(gains.T @ B)
    n, p = B.shape
    m = C.shape[0]
    return LocalObserverMatrices(
        gains=gains,
        a_tilde=sign_split(gains.A_tilde),
        tb=TB,
        noise_plus=LD.plus + GD.plus,
        noise_minus=LD.minus + GD.minus,
        guard_x=np.abs(gains.A_tilde) + absT @ np.abs(A) + absL @ np.abs(C)
        + absG @ np.abs(C) @ np.abs(A),
        guard_w=TB.abs + absT @ np.abs(B) + absG @ np.abs(C) @ np.abs(B),
        guard_v=(absL + absG) @ np.abs(D) + LD.abs + GD.abs,
        guard_factor=(n + p + 2 * m + 8) * EPS,
    )


@dataclass(eq=False)
class AgentObserverState:
    agent: int
    framer: IntervalVector
    matrices: LocalObserverMatrices
    last_measurement: np.ndarray | None = None


@dataclass(frozen=True, eq=False)
class NetworkMessage:
    round: int
    sender: int
    framer: IntervalVector

    def __post_init__(self):
        if self.round < 1:
            raise InvalidInputError(f"message round must be ≥ 1, got {self.round}")


class StepResult(NamedTuple):
    pre_network: tuple[IntervalVector, ...]
    framers: tuple[IntervalVector, ...]
    selection: SelectionAssignment


def local_update(
    state: AgentObserverState,
    y_k,
    y_k1,
    w_bounds: IntervalVector,
    v_bounds: IntervalVector,
    outward_rounding: bool = False,
) -> IntervalVector:
    """@brief One agent's propagation and measurement update.
    @param state     Agent state holding the framer at k.
    @param y_k       Measurement at k.
    @param y_k1      Measurement at k+1.
    @param w_bounds  Process noise bounds.
    @param v_bounds  This agent's measurement noise bounds.
    @param outward_rounding  Widen both bounds by a machine-epsilon guard so the
                             framer also encloses the floating-point trajectory.
    @return          Framer at k+1 before any network round.
    """
    mats = state.matrices
    g = mats.gains
    x = state.framer
    y_k = np.asarray(y_k, dtype=float).reshape(-1)
    y_k1 = np.asarray(y_k1, dtype=float).reshape(-1)
    if y_k.size != g.L.shape[1] or y_k1.size != g.L.shape[1]:
        raise InvalidInputError(
            f"agent {state.agent}: measurement length {y_k.size}/{y_k1.size}, "
            f"expected {g.L.shape[1]}"
        )
    At, TB = mats.a_tilde, mats.tb
    wl, wu = w_bounds.lower, w_bounds.upper
    vl, vu = v_bounds.lower, v_bounds.upper
    output = g.L @ y_k + g.Gamma @ y_k1

    lower = (At.plus @ x.lower - At.minus @ x.upper
             + TB.plus @ wl - TB.minus @ wu
             + output
             - mats.noise_plus @ vu + mats.noise_minus @ vl)
    upper = (At.plus @ x.upper - At.minus @ x.lower
             + TB.plus @ wu - TB.minus @ wl
             + output
             - mats.noise_plus @ vl + mats.noise_minus @ vu)

    if outward_rounding:
        guard = mats.guard_factor * (
            mats.guard_x @ (np.abs(x.lower) + np.abs(x.upper))
            + mats.guard_w @ (np.abs(wl) + np.abs(wu))
            + np.abs(g.L) @ np.abs(y_k) + np.abs(g.Gamma) @ np.abs(y_k1)
            + mats.guard_v @ (np.abs(vl) + np.abs(vu))
        )
        lower = lower - guard
        upper = upper + guard

    bad = np.flatnonzero(~(lower <= upper))
    if bad.size:
        raise ObserverInternalError(
            f"agent {state.agent}: lower > upper at states {bad.tolist()}"
        )
    return IntervalVector(lower, upper)


def network_round(framers: Sequence[IntervalVector], graph: Digraph, round: int = 1) -> list[IntervalVector]:
    """@brief Agent i keeps the intersection of the framers sent by j ∈ N_i."""
    if len(framers) != graph.node_count:
        raise InvalidInputError(f"{len(framers)} framers for {graph.node_count} nodes")
    outbox = [NetworkMessage(round, j, f) for j, f in enumerate(framers)]
    return [
        intersect_all(outbox[j].framer for j in sorted(neighbors(graph, i)))
        for i in range(graph.node_count)
    ]


def observer_states(plant: PlantModel, gains: Sequence[AgentGains]) -> list[AgentObserverState]:
    if len(gains) != plant.n_agents:
        raise InvalidInputError(f"{len(gains)} gain sets for {plant.n_agents} agents")
    return [
        AgentObserverState(
            agent=i,
            framer=plant.x0_bounds,
            matrices=local_matrices(g, plant.A, plant.B, plant.C[i], plant.D[i]),
        )
        for i, g in enumerate(gains)
    ]


def dio_step(
    states: Sequence[AgentObserverState],
    y_k: Sequence,
    y_k1: Sequence,
    noise: NoiseBounds,
    graph: Digraph,
    d: int,
    outward_rounding: bool = False,
) -> StepResult:
    """@brief Advance every agent from k to k+1 with d intersection rounds.

    States are updated in place; d = 0 leaves agents independent.
    """
    if d < 0:
        raise InvalidInputError(f"round count must be nonnegative, got {d}")
    pre = [
        local_update(st, y_k[st.agent], y_k1[st.agent], noise.w, noise.v[st.agent],
                     outward_rounding)
        for st in states
    ]
    framers = list(pre)
    for t in range(1, d + 1):
        framers = network_round(framers, graph, t)
    for st, f in zip(states, framers):
        st.framer = f
        st.last_measurement = np.asarray(y_k1[st.agent], dtype=float)
    return StepResult(tuple(pre), tuple(framers), realized_selection(pre, graph, d))

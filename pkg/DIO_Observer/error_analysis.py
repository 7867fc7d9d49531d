## @file error_analysis.py
## @brief Collective framer error, noise injection and the comparison system.
##
## e_k stacks [x − x̲ⁱ; x̄ⁱ − x] per agent. Between steps it obeys
## e_{k+1} = H_k (Â e_k + W_k + V_k); replacing H_k by a fixed admissible H_*
## gives a linear comparison system whose trajectory dominates e_k.

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, NamedTuple, Sequence

import numpy as np

from .errors import InvalidInputError
from .interval_core import IntervalVector, contains, sign_split
from .model import PlantModel
from .stability import SelectionAssignment
from .synthesis import AgentGains

## Steps up to this index are traced in full.
TRACE_FULL_LIMIT = 10_000
TRACE_STRIDE = 10

CSV_COLUMNS = ("k", "agent", "state", "lower", "upper", "width", "e_lower", "e_upper")


def collective_error(framers: Sequence[IntervalVector], x_true) -> np.ndarray:
    """@brief Ordered error vector [e̲⁰; ē⁰; …; e̲ᴺ⁻¹; ēᴺ⁻¹]."""
    x = np.asarray(x_true, dtype=float)
    blocks = []
    for i, f in enumerate(framers):
        if f.size != x.size:
            raise InvalidInputError(f"framer {i} has length {f.size}, state has {x.size}")
        blocks.append(x - f.lower)
        blocks.append(f.upper - x)
    e = np.concatenate(blocks) if blocks else np.zeros(0)
    if all(contains(f, x) for f in framers) and (e < 0).any():
        raise InvalidInputError("negative error entry for a containing framer")
    return e


class NoiseInjection(NamedTuple):
    W: np.ndarray
    V: np.ndarray

    @property
    def total(self) -> np.ndarray:
        return self.W + self.V


def _slack(value, bounds: IntervalVector, what: str) -> tuple[np.ndarray, np.ndarray]:
    value = np.asarray(value, dtype=float).reshape(-1)
    if not contains(bounds, value):
        raise InvalidInputError(f"{what} lies outside its declared bounds")
    return value - bounds.lower, bounds.upper - value


def noise_injection(
    plant: PlantModel,
    gains: Sequence[AgentGains],
    w_k,
    v_k: Sequence,
    v_k1: Sequence,
) -> NoiseInjection:
    """@brief W_k and V_k driving the collective error from k to k+1.
    @param plant  Plant with B, Dⁱ and the noise bounds.
    @param gains  One AgentGains per agent.
    @param w_k    Process noise at k.
    @param v_k    Per-agent measurement noise at k (enters through L).
    @param v_k1   Per-agent measurement noise at k+1 (enters through Γ).
    @return       NoiseInjection with both vectors of length 2Nn.
    """
    s_lo, s_hi = _slack(w_k, plant.noise.w, "process noise")
    W, V = [], []
    for i, g in enumerate(gains):
        TB = sign_split(g.T @ plant.B)
        W.append(TB.plus @ s_lo + TB.minus @ s_hi)
        W.append(TB.minus @ s_lo + TB.plus @ s_hi)
        LD = sign_split(g.L @ plant.D[i])
        GD = sign_split(g.Gamma @ plant.D[i])
        a_lo, a_hi = _slack(v_k[i], plant.noise.v[i], f"measurement noise of agent {i} at k")
        b_lo, b_hi = _slack(v_k1[i], plant.noise.v[i], f"measurement noise of agent {i} at k+1")
        V.append(LD.plus @ a_hi + LD.minus @ a_lo + GD.plus @ b_hi + GD.minus @ b_lo)
        V.append(LD.minus @ a_hi + LD.plus @ a_lo + GD.minus @ b_hi + GD.plus @ b_lo)
    return NoiseInjection(np.concatenate(W), np.concatenate(V))


def comparison_trajectory(
    H_star: SelectionAssignment,
    Ahat,
    e0,
    injections: Iterable[NoiseInjection],
) -> np.ndarray:
    """@brief ẽ_{k+1} = H_*(Â ẽ_k + W_k + V_k) with ẽ_0 = e_0, one row per k."""
    M = H_star.apply(Ahat)
    e = np.asarray(e0, dtype=float)
    out = [e]
    for inj in injections:
        e = M @ e + H_star.apply(inj.total)
        out.append(e)
    return np.array(out)


def _impulse_gain(M: np.ndarray) -> float:
    """@brief ‖Σ_t Mᵗ‖∞ for nonnegative M with ρ(M) < 1."""
    total = np.linalg.inv(np.eye(M.shape[0]) - M)
    return float(np.abs(total).sum(axis=1).max(initial=0.0))


def iss_envelope(
    H_star: SelectionAssignment,
    Ahat,
    e0,
    injections: Sequence[NoiseInjection],
) -> np.ndarray:
    """@brief Upper bound on ‖e_k‖∞ for each k from the comparison system.

    ‖Mᵏe₀‖∞ + ‖Σ_t Mᵗ‖∞ · sup_t ‖H_*(W_t + V_t)‖∞ with M = H_*Â, which
    needs M Schur stable.
    """
    M = H_star.apply(Ahat)
    sup_input = max((float(np.abs(H_star.apply(inj.total)).max(initial=0.0))
                     for inj in injections), default=0.0)
    steady = _impulse_gain(M) * sup_input
    e = np.asarray(e0, dtype=float)
    out = []
    for _ in range(len(injections) + 1):
        out.append(float(np.abs(e).max(initial=0.0)) + steady)
        e = M @ e
    return np.array(out)


@dataclass(frozen=True)
class DecayFit:
    rate: float
    scale: float
    r_squared: float
    samples: int


def fit_decay_rate(norms) -> DecayFit:
    """@brief Fit ‖e_k‖ ≈ scale · rateᵏ by least squares on log scale, skipping zeros."""
    norms = np.asarray(norms, dtype=float)
    k = np.flatnonzero(norms > 0)
    if k.size < 2:
        return DecayFit(0.0, float(norms[k[0]]) if k.size else 0.0, 1.0, int(k.size))
    logs = np.log(norms[k])
    slope, intercept = np.polyfit(k, logs, 1)
    fitted = slope * k + intercept
    ss_res = float(((logs - fitted) ** 2).sum())
    ss_tot = float(((logs - logs.mean()) ** 2).sum())
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return DecayFit(float(np.exp(slope)), float(np.exp(intercept)), r2, int(k.size))


def traced(k: int) -> bool:
    return k <= TRACE_FULL_LIMIT or k % TRACE_STRIDE == 0


def trace_rows(k: int, framers: Sequence[IntervalVector], x_true) -> Iterator[dict]:
    """@brief CSV rows for step k, one per (agent, state)."""
    x = np.asarray(x_true, dtype=float)
    for i, f in enumerate(framers):
        for s in range(f.size):
            yield {
                "k": k,
                "agent": i,
                "state": s,
                "lower": repr(float(f.lower[s])),
                "upper": repr(float(f.upper[s])),
                "width": repr(float(f.upper[s] - f.lower[s])),
                "e_lower": repr(float(x[s] - f.lower[s])),
                "e_upper": repr(float(f.upper[s] - x[s])),
            }

"""The quantum-mediated protocol pipeline for 2x2 games.

A run prepares |00>, entangles with J(gamma), applies each player's
local 1-qubit strategy, disentangles with J-dagger, and measures.
Measurement outcome |ab> maps to the game cell (row=a, col=b), i.e.
bit 0 is the first strategy label (C / Buy) and bit 1 the second.

Two named strategy families are provided: the two-parameter set A
(theta, phi) and its three-parameter superset B (theta, alpha, beta),
which coincides with A at beta=0.  Note the matrices use cos(theta),
not the half-angle convention.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .errors import RangeError, ValidationError
from .games import Bimatrix
from .qcore import (
    DEFECT_GATE,
    SIGMA_X,
    TOLERANCES,
    EntanglerMode,
    Gate1Q,
    OutcomeDistribution,
    PureState2Q,
    Tolerances,
    apply,
    clamp_gamma,
    dagger,
    entangler,
    measure,
    tensor,
)

# closed-form gates must be unitary at the identity tolerance
_GATE_TOL = Tolerances(unitary_atol=TOLERANCES.identity_atol)


def _check_range(name: str, value: float, lo: float, hi: float) -> float:
    v = float(value)
    if not np.isfinite(v) or v < lo - 1e-12 or v > hi + 1e-12:
        raise RangeError(f"{name}={value!r} outside [{lo:.6g}, {hi:.6g}]")
    return min(max(v, lo), hi)


@dataclass(frozen=True)
class StrategyParamsA:
    """Parameters of the two-parameter strategy set:
    theta in [0, pi/2], phi in [0, pi/2]."""

    theta: float
    phi: float

    def __post_init__(self):
        object.__setattr__(self, "theta", _check_range("theta", self.theta, 0.0, np.pi / 2))
        object.__setattr__(self, "phi", _check_range("phi", self.phi, 0.0, np.pi / 2))


@dataclass(frozen=True)
class StrategyParamsB:
    """Parameters of the full strategy set: theta in [0, pi/2],
    alpha and beta in [-pi, pi]."""

    theta: float
    alpha: float
    beta: float

    def __post_init__(self):
        object.__setattr__(self, "theta", _check_range("theta", self.theta, 0.0, np.pi / 2))
        object.__setattr__(self, "alpha", _check_range("alpha", self.alpha, -np.pi, np.pi))
        object.__setattr__(self, "beta", _check_range("beta", self.beta, -np.pi, np.pi))


def strategy_matrix(theta: float, alpha: float, beta: float) -> np.ndarray:
    """Raw matrix of the three-parameter family (no range checks)."""
    c, s = np.cos(theta), np.sin(theta)
    return np.array(
        [[np.exp(1j * alpha) * c, np.exp(1j * beta) * s],
         [-np.exp(-1j * beta) * s, np.exp(-1j * alpha) * c]],
        dtype=np.complex128,
    )


def gate_from_A(params: StrategyParamsA) -> Gate1Q:
    """[[e^{i phi} cos t, sin t], [-sin t, e^{-i phi} cos t]]."""
    return Gate1Q(strategy_matrix(params.theta, params.phi, 0.0), tol=_GATE_TOL)


def gate_from_B(params: StrategyParamsB) -> Gate1Q:
    """[[e^{i a} cos t, e^{i b} sin t], [-e^{-i b} sin t, e^{-i a} cos t]];
    reduces to the set-A gate at beta=0."""
    return Gate1Q(strategy_matrix(params.theta, params.alpha, params.beta), tol=_GATE_TOL)


class CanonicalGates(NamedTuple):
    C: Gate1Q
    D: Gate1Q
    Q: Gate1Q


def canonical_gates(mode: EntanglerMode) -> CanonicalGates:
    """The named strategies C (cooperate), D (defect), Q (quantum).

    C is the identity and Q = diag(i, -i) in both modes.  The defect
    gate depends on the entangler generator: it is the gate whose
    tensor square commutes with the generator, so that defecting embeds
    the classical game at every gamma.  PAULI_X pairs with i*sigma_x,
    DEFECT with [[0,1],[-1,0]] (the set-A gate at theta=pi/2).
    """
    c = Gate1Q(np.eye(2, dtype=np.complex128), tol=_GATE_TOL)
    q = Gate1Q(np.diag([1j, -1j]), tol=_GATE_TOL)
    if mode == EntanglerMode.PAULI_X:
        d = Gate1Q(1j * SIGMA_X, tol=_GATE_TOL)
    elif mode == EntanglerMode.DEFECT:
        d = Gate1Q(DEFECT_GATE, tol=_GATE_TOL)
    else:
        raise ValidationError(f"unknown entangler mode: {mode!r}")
    return CanonicalGates(C=c, D=d, Q=q)


@dataclass(frozen=True)
class ProtocolResult:
    """Outcome distribution and expected payoffs of one protocol run.

    final_state is the post-circuit pure state, or None when the run
    is an exact mixture (mixed strategies, noisy channels)."""

    distribution: OutcomeDistribution
    payoff_I: float
    payoff_II: float
    final_state: Optional[PureState2Q] = None


def payoffs_from_distribution(game: Bimatrix, dist: OutcomeDistribution) -> tuple:
    a, b = game.payoff_vectors()
    return float(dist.probs @ a), float(dist.probs @ b)


def run_protocol(game: Bimatrix, gamma: float, mode: EntanglerMode,
                 u1: Gate1Q, u2: Gate1Q) -> ProtocolResult:
    """Evaluate J-dagger (u1 x u2) J |00> and score it against the game."""
    j = entangler(clamp_gamma(gamma), mode)
    state = apply(j, PureState2Q.ket00())
    state = apply(tensor(u1, u2), state)
    state = apply(dagger(j), state)
    dist = measure(state)
    pay_i, pay_ii = payoffs_from_distribution(game, dist)
    return ProtocolResult(distribution=dist, payoff_I=pay_i, payoff_II=pay_ii,
                          final_state=state)


class MixedQuantumStrategy:
    """A finite probability mixture over 1-qubit strategies."""

    __slots__ = ("support",)

    DEFAULT_MAX_SUPPORT = 4

    def __init__(self, support, max_support: Optional[int] = DEFAULT_MAX_SUPPORT):
        entries = []
        total = 0.0
        for weight, gate in support:
            w = float(weight)
            if not np.isfinite(w) or w < -1e-12:
                raise ValidationError(f"mixed-strategy weight {weight!r} must be nonnegative")
            if not isinstance(gate, Gate1Q):
                gate = Gate1Q(gate)
            entries.append((max(w, 0.0), gate))
            total += w
        if not entries:
            raise ValidationError("mixed strategy needs a nonempty support")
        if max_support is not None and len(entries) > max_support:
            raise ValidationError(
                f"mixed-strategy support size {len(entries)} exceeds cap {max_support}")
        if abs(total - 1.0) > 1e-9:
            raise ValidationError(f"mixed-strategy weights sum to {total!r}, expected 1")
        object.__setattr__(self, "support", tuple(entries))

    def __setattr__(self, name, value):
        raise AttributeError("MixedQuantumStrategy is immutable")

    @classmethod
    def point_mass(cls, gate: Gate1Q) -> "MixedQuantumStrategy":
        return cls([(1.0, gate)], max_support=1)

    def __len__(self):
        return len(self.support)


def run_protocol_mixed(game: Bimatrix, gamma: float, mode: EntanglerMode,
                       m1: MixedQuantumStrategy, m2: MixedQuantumStrategy) -> ProtocolResult:
    """Exact convex combination of protocol runs over the support pairs.

    No sampling is involved; the returned distribution and payoffs are
    the exact mixture, and final_state is None because the average of
    pure runs is not itself pure.
    """
    probs = np.zeros(4)
    for w1, u1 in m1.support:
        if w1 == 0.0:
            continue
        for w2, u2 in m2.support:
            if w2 == 0.0:
                continue
            probs += (w1 * w2) * run_protocol(game, gamma, mode, u1, u2).distribution.probs
    dist = OutcomeDistribution(probs)
    pay_i, pay_ii = payoffs_from_distribution(game, dist)
    return ProtocolResult(distribution=dist, payoff_I=pay_i, payoff_II=pay_ii, final_state=None)

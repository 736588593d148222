"""Noisy-channel variants of the protocol, evaluated on density matrices.

Channels are exact Kraus sums over 4x4 density matrices; nothing is
sampled.  By default noise acts on the players' return channel (after
their gates, before the disentangler); a forward-channel variant
applies it right after the entangler instead.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from .errors import ConvergenceError, RangeError, ValidationError
from .ewl import ProtocolResult, payoffs_from_distribution, run_protocol, strategy_matrix
from .games import Bimatrix
from .qcore import (
    I2,
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    EntanglerMode,
    Gate1Q,
    OutcomeDistribution,
    PureState2Q,
    Tolerances,
    TOLERANCES,
    clamp_gamma,
    entangler,
    tensor,
)
from .search import SearchConfig, verify_eps_nash


class NoiseKind(Enum):
    NONE = "none"
    PER_QUBIT_DEPOLARIZING = "per_qubit_depolarizing"
    TWO_QUBIT_DEPOLARIZING = "two_qubit_depolarizing"


class ChannelLocation(Enum):
    RETURN = "return"    # after player gates, before the disentangler
    FORWARD = "forward"  # after the entangler, before player gates


@dataclass(frozen=True)
class NoiseSpec:
    kind: NoiseKind = NoiseKind.NONE
    p: float = 0.0
    location: ChannelLocation = ChannelLocation.RETURN

    def __post_init__(self):
        if not isinstance(self.kind, NoiseKind):
            raise ValidationError(f"kind must be a NoiseKind, got {self.kind!r}")
        if not isinstance(self.location, ChannelLocation):
            raise ValidationError(f"location must be a ChannelLocation, got {self.location!r}")
        p = float(self.p)
        if not (0.0 <= p <= 1.0):
            raise RangeError(f"noise probability p={self.p!r} outside [0,1]")
        object.__setattr__(self, "p", p)


class DensityMatrix2Q:
    """A validated two-qubit density matrix: Hermitian, unit trace,
    positive semidefinite (within tolerance)."""

    __slots__ = ("entries",)

    def __init__(self, entries, *, tol: Tolerances = TOLERANCES):
        m = np.array(entries, dtype=np.complex128)
        if m.shape != (4, 4):
            raise ValidationError(f"DensityMatrix2Q must be 4x4, got {m.shape}")
        if not (np.all(np.isfinite(m.real)) and np.all(np.isfinite(m.imag))):
            raise ValidationError("DensityMatrix2Q entries must be finite")
        if np.abs(m - m.conj().T).max() > tol.state_atol:
            raise ValidationError("DensityMatrix2Q is not Hermitian")
        tr = complex(np.trace(m))
        if abs(tr - 1.0) > tol.state_atol:
            raise ValidationError(f"DensityMatrix2Q trace is {tr!r}, expected 1")
        eigs = np.linalg.eigvalsh((m + m.conj().T) / 2)
        if eigs.min() < -tol.state_atol:
            raise ValidationError(f"DensityMatrix2Q has negative eigenvalue {eigs.min()!r}")
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)

    def __setattr__(self, name, value):
        raise AttributeError("DensityMatrix2Q is immutable")

    @classmethod
    def from_pure(cls, state: PureState2Q) -> "DensityMatrix2Q":
        return cls(np.outer(state.amps, state.amps.conj()))

    def diagonal_distribution(self) -> OutcomeDistribution:
        return OutcomeDistribution(np.real(np.diag(self.entries)))


def depolarizing_kraus_1q(p: float) -> list:
    """Kraus set {sqrt(1-p) I, sqrt(p/3) X, sqrt(p/3) Y, sqrt(p/3) Z}."""
    if not (0.0 <= p <= 1.0):
        raise RangeError(f"p={p!r} outside [0,1]")
    w = np.sqrt(p / 3.0)
    return [np.sqrt(1.0 - p) * I2, w * SIGMA_X, w * SIGMA_Y, w * SIGMA_Z]


def _apply_kind(rho: np.ndarray, spec: NoiseSpec) -> np.ndarray:
    if spec.kind == NoiseKind.NONE or spec.p == 0.0:
        return rho
    if spec.kind == NoiseKind.TWO_QUBIT_DEPOLARIZING:
        return (1.0 - spec.p) * rho + spec.p * np.trace(rho).real * np.eye(4) / 4.0
    kraus = depolarizing_kraus_1q(spec.p)
    for position in (0, 1):
        acc = np.zeros_like(rho)
        for k in kraus:
            full = np.kron(k, I2) if position == 0 else np.kron(I2, k)
            acc += full @ rho @ full.conj().T
        rho = acc
    return rho


def apply_noise(rho: DensityMatrix2Q, spec: NoiseSpec) -> DensityMatrix2Q:
    """Exact Kraus-sum application of the configured channel."""
    return DensityMatrix2Q(_apply_kind(rho.entries, spec))


def run_protocol_noisy(game: Bimatrix, gamma: float, mode: EntanglerMode,
                       u1: Gate1Q, u2: Gate1Q, noise: NoiseSpec) -> ProtocolResult:
    """Protocol run with the noise channel inserted at its location.

    The state is carried as a density matrix throughout; with
    kind=NONE the result matches run_protocol exactly.
    """
    if not isinstance(noise, NoiseSpec):
        raise ValidationError(f"noise must be a NoiseSpec, got {noise!r}")
    j = entangler(clamp_gamma(gamma), mode).matrix
    rho = np.zeros((4, 4), dtype=np.complex128)
    rho[0, 0] = 1.0
    rho = j @ rho @ j.conj().T
    if noise.location == ChannelLocation.FORWARD:
        rho = _apply_kind(rho, noise)
    u = tensor(u1, u2).matrix
    rho = u @ rho @ u.conj().T
    if noise.location == ChannelLocation.RETURN:
        rho = _apply_kind(rho, noise)
    rho = j.conj().T @ rho @ j
    final = DensityMatrix2Q(rho)
    dist = final.diagonal_distribution()
    pay_i, pay_ii = payoffs_from_distribution(game, dist)
    return ProtocolResult(distribution=dist, payoff_I=pay_i, payoff_II=pay_ii,
                          final_state=None)


def gamma_sweep(game: Bimatrix, mode: EntanglerMode, u1: Gate1Q, u2: Gate1Q,
                steps: int) -> tuple:
    """Payoffs of a fixed profile over a uniform entanglement grid.

    Returns (("gamma", "payoff_I", "payoff_II"), rows).  The table is
    recorded data; no monotonicity is implied.
    """
    if steps < 2:
        raise RangeError(f"steps must be >= 2, got {steps}")
    rows = np.empty((steps, 3))
    for k, g in enumerate(np.linspace(0.0, np.pi / 2, steps)):
        r = run_protocol(game, g, mode, u1, u2)
        rows[k] = (g, r.payoff_I, r.payoff_II)
    return ("gamma", "payoff_I", "payoff_II"), rows


@dataclass(frozen=True)
class ThresholdResult:
    found: bool
    p_star: Optional[float]
    payoff_noiseless: float
    payoff_full_noise: float
    limit: float
    gate: Gate1Q


def symmetric_equilibrium_gate(game: Bimatrix, gamma: float, mode: EntanglerMode,
                               cfg: SearchConfig, max_checks: int = 12) -> Gate1Q:
    """Best symmetric set-A equilibrium profile's gate.

    Grid candidates are ranked by symmetric payoff (ties lexicographic
    in parameters) and checked with verify_eps_nash until one passes.
    """
    gamma = clamp_gamma(gamma)
    n = cfg.grid_resolution
    thetas = np.linspace(0, np.pi / 2, n)
    phis = np.linspace(0, np.pi / 2, n)
    tt, pp = np.meshgrid(thetas, phis, indexing="ij")
    pts = np.stack([tt.ravel(), pp.ravel()], axis=1)

    j = entangler(gamma, mode).matrix
    m0 = (j @ PureState2Q.ket00().amps).reshape(2, 2)
    c, s = np.cos(pts[:, 0]), np.sin(pts[:, 0])
    u = np.empty((len(pts), 2, 2), dtype=np.complex128)
    u[:, 0, 0] = np.exp(1j * pts[:, 1]) * c
    u[:, 0, 1] = s
    u[:, 1, 0] = -s
    u[:, 1, 1] = np.exp(-1j * pts[:, 1]) * c
    psi = np.einsum("nij,jk,nlk->nil", u, m0, u)
    probs = np.abs(psi.reshape(-1, 4) @ j.conj()) ** 2
    a, _ = game.payoff_vectors()
    payoffs = probs @ a

    order = np.argsort(-payoffs, kind="stable")
    for k in order[:max_checks]:
        gate = Gate1Q(strategy_matrix(pts[k, 0], pts[k, 1], 0.0))
        ok, _ = verify_eps_nash(game, gamma, mode, gate, gate, "A", cfg)
        if ok:
            return gate
    raise ConvergenceError(
        "no symmetric set-A equilibrium found among the top grid candidates")


def advantage_threshold(game: Bimatrix, mode: EntanglerMode, noise_kind: NoiseKind,
                        cfg: SearchConfig, gamma: float = np.pi / 2,
                        limit: float = 2.5, p_tol: float = 1e-3) -> ThresholdResult:
    """Smallest noise level at which the symmetric quantum equilibrium
    payoff drops below the limit, by bisection on p.

    The equilibrium profile is located noiselessly in set A; its payoff
    is then tracked under the channel.  If the payoff never crosses the
    limit on [0, 1] the result reports no threshold.
    """
    gate = symmetric_equilibrium_gate(game, gamma, mode, cfg)

    def payoff_at(p: float) -> float:
        spec = NoiseSpec(kind=noise_kind, p=p)
        return run_protocol_noisy(game, gamma, mode, gate, gate, spec).payoff_I

    lo_pay = payoff_at(0.0)
    hi_pay = payoff_at(1.0)
    if noise_kind != NoiseKind.NONE and lo_pay <= limit:
        return ThresholdResult(True, 0.0, lo_pay, hi_pay, limit, gate)
    if noise_kind == NoiseKind.NONE or hi_pay > limit:
        # The payoff never crosses the limit on [0, 1].
        return ThresholdResult(False, None, lo_pay, hi_pay, limit, gate)

    lo, hi = 0.0, 1.0
    while hi - lo > p_tol:
        mid = (lo + hi) / 2.0
        if payoff_at(mid) > limit:
            lo = mid
        else:
            hi = mid
    return ThresholdResult(True, (lo + hi) / 2.0, lo_pay, hi_pay, limit, gate)

"""Exact complex linear algebra for two-qubit protocol states.

Conventions used throughout the package:
  * State vectors are length-4 complex128 arrays over the computational
    basis in the fixed order |00>, |01>, |10>, |11>.
  * The left bit belongs to Player I (row player), the right bit to
    Player II (column player).
  * 1-qubit gates are 2x2 complex128 matrices, 2-qubit gates 4x4; a
    tensor product's left factor acts on Player I's qubit.
  * Everything is evaluated exactly (no sampling); measurement returns
    the full Born-rule distribution.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import RangeError, ValidationError


@dataclass(frozen=True)
class Tolerances:
    """Single record of the numeric tolerances used for validation.

    state_atol / unitary_atol guard stored values; identity_atol is the
    tighter bound used for closed-form identities.
    """

    state_atol: float = 1e-9
    unitary_atol: float = 1e-9
    identity_atol: float = 1e-12


TOLERANCES = Tolerances()

GAMMA_MIN = 0.0
GAMMA_MAX = np.pi / 2
_GAMMA_CLAMP = 1e-12


class EntanglerMode(Enum):
    """Generator choice for the entangling gate.

    PAULI_X builds cos(g/2) I(x)I + i sin(g/2) sx(x)sx.  DEFECT swaps the
    sx(x)sx generator for Dg(x)Dg, where Dg = [[0,1],[-1,0]] is the
    canonical defect gate; that generator commutes with Dg on either
    qubit, so classical play embeds correctly at every entanglement
    level (PAULI_X only embeds the i*sx defect correctly).
    """

    PAULI_X = "pauli_x"
    DEFECT = "defect"


I2 = np.eye(2, dtype=np.complex128)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)
DEFECT_GATE = np.array([[0, 1], [-1, 0]], dtype=np.complex128)
for _m in (I2, SIGMA_X, SIGMA_Y, SIGMA_Z, DEFECT_GATE):
    _m.setflags(write=False)


def _as_complex_matrix(value, dim: int, who: str) -> np.ndarray:
    m = np.array(value, dtype=np.complex128)
    if m.shape != (dim, dim):
        raise ValidationError(f"{who}: expected a {dim}x{dim} matrix, got shape {m.shape}")
    if not (np.all(np.isfinite(m.real)) and np.all(np.isfinite(m.imag))):
        raise ValidationError(f"{who}: entries must be finite")
    return m


def _check_unitary(m: np.ndarray, who: str, atol: float) -> None:
    err = np.abs(m.conj().T @ m - np.eye(m.shape[0])).max()
    if err > atol:
        raise ValidationError(f"{who} is not unitary (max deviation {err:.3e} > {atol:.1e})")


class Gate1Q:
    """A validated 2x2 unitary; the carrier for player strategies."""

    __slots__ = ("matrix",)

    def __init__(self, matrix, *, tol: Tolerances = TOLERANCES):
        m = _as_complex_matrix(matrix, 2, "Gate1Q")
        _check_unitary(m, "Gate1Q", tol.unitary_atol)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def __setattr__(self, name, value):
        raise AttributeError("Gate1Q is immutable")

    def dagger(self) -> "Gate1Q":
        return Gate1Q(self.matrix.conj().T)

    def __matmul__(self, other: "Gate1Q") -> "Gate1Q":
        return Gate1Q(self.matrix @ other.matrix)

    def __repr__(self):
        return f"Gate1Q({self.matrix.tolist()!r})"


class Gate2Q:
    """A validated 4x4 unitary; referee operators and joint strategies."""

    __slots__ = ("matrix",)

    def __init__(self, matrix, *, tol: Tolerances = TOLERANCES):
        m = _as_complex_matrix(matrix, 4, "Gate2Q")
        _check_unitary(m, "Gate2Q", tol.unitary_atol)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def __setattr__(self, name, value):
        raise AttributeError("Gate2Q is immutable")

    def dagger(self) -> "Gate2Q":
        return Gate2Q(self.matrix.conj().T)

    def __matmul__(self, other: "Gate2Q") -> "Gate2Q":
        return Gate2Q(self.matrix @ other.matrix)

    def __repr__(self):
        return f"Gate2Q({self.matrix.tolist()!r})"


class PureState2Q:
    """A normalized two-qubit state vector."""

    __slots__ = ("amps",)

    def __init__(self, amps, *, tol: Tolerances = TOLERANCES):
        a = np.array(amps, dtype=np.complex128)
        if a.shape != (4,):
            raise ValidationError(f"PureState2Q: expected 4 amplitudes, got shape {a.shape}")
        if not (np.all(np.isfinite(a.real)) and np.all(np.isfinite(a.imag))):
            raise ValidationError("PureState2Q: amplitudes must be finite")
        norm_err = abs(float(np.sum(np.abs(a) ** 2)) - 1.0)
        if norm_err > tol.state_atol:
            raise ValidationError(
                f"PureState2Q is not normalized (|norm^2 - 1| = {norm_err:.3e})")
        a.setflags(write=False)
        object.__setattr__(self, "amps", a)

    def __setattr__(self, name, value):
        raise AttributeError("PureState2Q is immutable")

    @classmethod
    def basis(cls, index: int) -> "PureState2Q":
        if index not in (0, 1, 2, 3):
            raise RangeError(f"basis index must be in 0..3, got {index}")
        a = np.zeros(4, dtype=np.complex128)
        a[index] = 1.0
        return cls(a)

    @classmethod
    def ket00(cls) -> "PureState2Q":
        return cls.basis(0)

    def __repr__(self):
        return f"PureState2Q({self.amps.tolist()!r})"


class OutcomeDistribution:
    """Probabilities over the four measurement outcomes, basis order."""

    __slots__ = ("probs",)

    def __init__(self, probs, *, tol: Tolerances = TOLERANCES):
        p = np.asarray(probs, dtype=np.float64)
        if p.shape != (4,):
            raise ValidationError(f"OutcomeDistribution: expected 4 probabilities, got {p.shape}")
        if not np.all(np.isfinite(p)):
            raise ValidationError("OutcomeDistribution: probabilities must be finite")
        if p.min() < -tol.state_atol or p.max() > 1.0 + tol.state_atol:
            raise ValidationError(f"OutcomeDistribution: probabilities outside [0,1]: {p.tolist()}")
        if abs(float(p.sum()) - 1.0) > tol.state_atol:
            raise ValidationError(f"OutcomeDistribution does not sum to 1 (sum={p.sum()!r})")
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    def __setattr__(self, name, value):
        raise AttributeError("OutcomeDistribution is immutable")

    def __repr__(self):
        return f"OutcomeDistribution({self.probs.tolist()!r})"


def tensor(u, v) -> Gate2Q:
    """Kronecker product of two 1-qubit gates.

    The left factor acts on Player I's qubit.  Inputs may be Gate1Q or
    raw 2x2 matrices; each operand is validated and named on failure.
    """
    mu = u.matrix if isinstance(u, Gate1Q) else _as_complex_matrix(u, 2, "tensor: left operand")
    mv = v.matrix if isinstance(v, Gate1Q) else _as_complex_matrix(v, 2, "tensor: right operand")
    _check_unitary(mu, "tensor: left operand", TOLERANCES.unitary_atol)
    _check_unitary(mv, "tensor: right operand", TOLERANCES.unitary_atol)
    return Gate2Q(np.kron(mu, mv))


def clamp_gamma(gamma: float) -> float:
    """Validate the entanglement angle, absorbing <1e-12 rounding spill."""
    g = float(gamma)
    if not np.isfinite(g):
        raise RangeError("gamma must be finite")
    if g < GAMMA_MIN:
        if GAMMA_MIN - g >= _GAMMA_CLAMP:
            raise RangeError(f"gamma={g!r} below allowed range [0, pi/2]")
        g = GAMMA_MIN
    elif g > GAMMA_MAX:
        if g - GAMMA_MAX >= _GAMMA_CLAMP:
            raise RangeError(f"gamma={g!r} above allowed range [0, pi/2]")
        g = GAMMA_MAX
    return g


def entangler_generator(mode: EntanglerMode) -> np.ndarray:
    if mode == EntanglerMode.PAULI_X:
        return np.kron(SIGMA_X, SIGMA_X)
    if mode == EntanglerMode.DEFECT:
        return np.kron(DEFECT_GATE, DEFECT_GATE)
    raise ValidationError(f"unknown entangler mode: {mode!r}")


def entangler(gamma: float, mode: EntanglerMode = EntanglerMode.PAULI_X) -> Gate2Q:
    """The referee's entangling gate cos(g/2) I4 + i sin(g/2) G(mode).

    gamma=0 gives the identity (classical play); gamma=pi/2 maximal
    entanglement.
    """
    g = clamp_gamma(gamma)
    gen = entangler_generator(mode)
    return Gate2Q(np.cos(g / 2) * np.eye(4, dtype=np.complex128) + 1j * np.sin(g / 2) * gen)


def dagger(g: Gate2Q) -> Gate2Q:
    """Conjugate transpose; the referee's disentangling gate."""
    return g.dagger()


def apply(g: Gate2Q, s: PureState2Q) -> PureState2Q:
    """Apply a 4x4 unitary to a state vector."""
    return PureState2Q(g.matrix @ s.amps)


def measure(s: PureState2Q) -> OutcomeDistribution:
    """Born-rule probabilities over the computational basis."""
    return OutcomeDistribution(np.abs(s.amps) ** 2)

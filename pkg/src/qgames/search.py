"""Numerical equilibrium analysis over the quantum strategy spaces.

Best responses are located by a dense grid scan followed by
Nelder-Mead refinement from the best grid cells; results are
deterministic for a fixed SearchConfig (nothing random is drawn), and
equal-payoff ties resolve to the lexicographically smallest parameter
tuple.  The finite-menu mixed-equilibrium solver runs best-response
dynamics on the induced bimatrix and falls back to support enumeration
over the strategies visited in a cycle.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence, Union

import numpy as np
from scipy.optimize import minimize

from .errors import ConvergenceError, RangeError, ValidationError
from .ewl import (
    MixedQuantumStrategy,
    StrategyParamsA,
    StrategyParamsB,
    canonical_gates,
    run_protocol,
    strategy_matrix,
)
from .games import Bimatrix
from .qcore import EntanglerMode, Gate1Q, PureState2Q, clamp_gamma, entangler

_TIE_TOL = 1e-10
_REFINE_XATOL = 1e-8
_REFINE_FATOL = 1e-10
_N_STARTS = 6


class Player(Enum):
    I = 1
    II = 2


@dataclass(frozen=True)
class SearchConfig:
    """Knobs for grid search and refinement.

    seed is carried for report reproducibility; the built-in search
    paths are deterministic and draw no randomness themselves.
    """

    grid_resolution: int = 64
    refine_iters: int = 200
    eps_nash: float = 1e-6
    seed: int = 0

    def __post_init__(self):
        if self.grid_resolution < 2:
            raise RangeError(f"grid_resolution must be >= 2, got {self.grid_resolution}")
        if self.eps_nash <= 0:
            raise RangeError(f"eps_nash must be positive, got {self.eps_nash}")
        if self.refine_iters < 0:
            raise RangeError(f"refine_iters must be >= 0, got {self.refine_iters}")


@dataclass(frozen=True)
class BestResponse:
    responder: Player
    params: Union[StrategyParamsA, StrategyParamsB, None]
    gate: Gate1Q
    payoff: float
    improvement: float


_SPACE_BOUNDS = {
    "A": ((0.0, np.pi / 2), (0.0, np.pi / 2)),
    "B": ((0.0, np.pi / 2), (-np.pi, np.pi), (-np.pi, np.pi)),
}


def _space_matrices(space: str, params: np.ndarray) -> np.ndarray:
    """Stack of strategy matrices for an (N, k) parameter array."""
    theta = params[:, 0]
    if space == "A":
        alpha, beta = params[:, 1], np.zeros_like(theta)
    else:
        alpha, beta = params[:, 1], params[:, 2]
    c, s = np.cos(theta), np.sin(theta)
    u = np.empty((len(theta), 2, 2), dtype=np.complex128)
    u[:, 0, 0] = np.exp(1j * alpha) * c
    u[:, 0, 1] = np.exp(1j * beta) * s
    u[:, 1, 0] = -np.exp(-1j * beta) * s
    u[:, 1, 1] = np.exp(-1j * alpha) * c
    return u


def _make_evaluator(game: Bimatrix, gamma: float, mode: EntanglerMode,
                    opponent: Gate1Q, responder: Player, space: str):
    """Build a fast batch payoff function for one search context.

    The entangled input J|00> is reshaped to a 2x2 amplitude matrix M;
    (U1 x U2)|psi> is then U1 @ M @ U2^T, so one side can be folded
    into a constant and the batch reduces to stacked 2x2 products.
    Cross-checked against run_protocol in the test suite.
    """
    j = entangler(gamma, mode).matrix
    m0 = (j @ PureState2Q.ket00().amps).reshape(2, 2)
    jd = j.conj()  # right-multiplying rows by this applies J-dagger
    a, b = game.payoff_vectors()
    payvec = a if responder == Player.I else b
    v = opponent.matrix
    if responder == Player.I:
        right = m0 @ v.T

        def evaluate(params: np.ndarray) -> np.ndarray:
            psi = _space_matrices(space, params) @ right
            return (np.abs(psi.reshape(-1, 4) @ jd) ** 2) @ payvec
    else:
        left = v @ m0

        def evaluate(params: np.ndarray) -> np.ndarray:
            u = _space_matrices(space, params)
            psi = left[None, :, :] @ np.swapaxes(u, 1, 2)
            return (np.abs(psi.reshape(-1, 4) @ jd) ** 2) @ payvec
    return evaluate


def _batch_payoffs(game: Bimatrix, gamma: float, mode: EntanglerMode,
                   opponent: Gate1Q, responder: Player,
                   space: str, params: np.ndarray) -> np.ndarray:
    """Responder payoffs for a batch of own-strategy parameters."""
    return _make_evaluator(game, gamma, mode, opponent, responder, space)(params)


def _responder_payoff(game, gamma, mode, opponent, responder, gate: Gate1Q) -> float:
    if responder == Player.I:
        return run_protocol(game, gamma, mode, gate, opponent).payoff_I
    return run_protocol(game, gamma, mode, opponent, gate).payoff_II


def _grid_axes(space: str, resolution: int):
    return [np.linspace(lo, hi, resolution) for lo, hi in _SPACE_BOUNDS[space]]


def _params_obj(space: str, x: np.ndarray):
    if space == "A":
        return StrategyParamsA(theta=float(x[0]), phi=float(x[1]))
    return StrategyParamsB(theta=float(x[0]), alpha=float(x[1]), beta=float(x[2]))


def _search_space(game, gamma, mode, opponent, responder, space: str,
                  cfg: SearchConfig, extra_starts=()):
    """Grid scan + Nelder-Mead polish; returns (params_array, payoff)."""
    evaluate = _make_evaluator(game, gamma, mode, opponent, responder, space)
    axes = _grid_axes(space, cfg.grid_resolution)
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    vals = evaluate(pts)

    order = np.argsort(-vals, kind="stable")[:_N_STARTS]
    candidates = [(pts[k], float(vals[k])) for k in order]

    bounds = _SPACE_BOUNDS[space]

    def neg_payoff(x):
        return -float(evaluate(np.asarray(x, dtype=float)[None, :])[0])

    starts = [pts[k] for k in order] + [np.asarray(s, dtype=float) for s in extra_starts]
    if cfg.refine_iters > 0:
        for x0 in starts:
            res = minimize(neg_payoff, x0, method="Nelder-Mead", bounds=bounds,
                           options={"maxiter": cfg.refine_iters,
                                    "xatol": _REFINE_XATOL, "fatol": _REFINE_FATOL})
            candidates.append((np.clip(res.x, [b[0] for b in bounds], [b[1] for b in bounds]),
                               float(-res.fun)))
    for s in extra_starts:
        x = np.asarray(s, dtype=float)
        candidates.append((x, -neg_payoff(x)))

    best_x, best_v = None, -np.inf
    for x, v in candidates:
        if v > best_v + _TIE_TOL:
            best_x, best_v = x, v
        elif abs(v - best_v) <= _TIE_TOL and tuple(x) < tuple(best_x):
            best_x = x
    return best_x, best_v


def best_response(game: Bimatrix, gamma: float, mode: EntanglerMode,
                  opponent_gate: Gate1Q, responder: Player,
                  space: Union[str, Sequence[Gate1Q]], cfg: SearchConfig,
                  incumbent: Optional[Gate1Q] = None) -> BestResponse:
    """Best reply of one player against a fixed opponent gate.

    space is "A", "B", or an explicit finite menu of gates.  For the
    parametric spaces, the space-B search additionally refines from the
    space-A optimum embedded at beta=0, so the B payoff never falls
    below the A payoff.  improvement is relative to the optional
    incumbent gate and clamped at zero.
    """
    gamma = clamp_gamma(gamma)
    if isinstance(space, str):
        if space not in _SPACE_BOUNDS:
            raise ValidationError(f"space must be 'A', 'B', or a gate menu, got {space!r}")
        extra = []
        if space == "B":
            inner = best_response(game, gamma, mode, opponent_gate, responder, "A", cfg)
            extra.append((inner.params.theta, inner.params.phi, 0.0))
        x, payoff = _search_space(game, gamma, mode, opponent_gate, responder,
                                  space, cfg, extra_starts=extra)
        params = _params_obj(space, x)
        gate = Gate1Q(strategy_matrix(x[0], x[1], 0.0 if space == "A" else x[2]))
    else:
        menu = list(space)
        if not menu:
            raise ValidationError("menu space must be nonempty")
        payoff, idx = -np.inf, 0
        for k, g in enumerate(menu):
            v = _responder_payoff(game, gamma, mode, opponent_gate, responder, g)
            if v > payoff + _TIE_TOL:
                payoff, idx = v, k
        params, gate = None, menu[idx]

    improvement = 0.0
    if incumbent is not None:
        base = _responder_payoff(game, gamma, mode, opponent_gate, responder, incumbent)
        improvement = max(0.0, payoff - base)
    return BestResponse(responder=responder, params=params, gate=gate,
                        payoff=float(payoff), improvement=float(improvement))


def verify_eps_nash(game: Bimatrix, gamma: float, mode: EntanglerMode,
                    u1: Gate1Q, u2: Gate1Q,
                    space: Union[str, Sequence[Gate1Q]], cfg: SearchConfig) -> tuple:
    """(is_equilibrium, max_improvement) for the profile (u1, u2)."""
    br1 = best_response(game, gamma, mode, u2, Player.I, space, cfg, incumbent=u1)
    br2 = best_response(game, gamma, mode, u1, Player.II, space, cfg, incumbent=u2)
    worst = max(br1.improvement, br2.improvement)
    return worst <= cfg.eps_nash, worst


def payoff_landscape(game: Bimatrix, gamma: float, mode: EntanglerMode,
                     space: str, fixed_opponent: Gate1Q, cfg: SearchConfig,
                     responder: Player = Player.I) -> tuple:
    """Dense payoff samples over the space's parameter grid.

    Returns (column_names, data); rows are in row-major axis order so
    repeated runs emit identical tables.
    """
    if space not in _SPACE_BOUNDS:
        raise ValidationError(f"landscape space must be 'A' or 'B', got {space!r}")
    axes = _grid_axes(space, cfg.grid_resolution)
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    vals = _batch_payoffs(game, clamp_gamma(gamma), mode, fixed_opponent,
                          responder, space, pts)
    data = np.column_stack([pts, vals])
    names = ("theta", "phi", "payoff") if space == "A" else ("theta", "alpha", "beta", "payoff")
    return names, data


# -- finite-menu mixed equilibria -------------------------------------------

@dataclass(frozen=True)
class MixedEquilibriumResult:
    strategy_I: MixedQuantumStrategy
    strategy_II: MixedQuantumStrategy
    payoff_I: float
    payoff_II: float
    method: str  # "pure_fixed_point" or "support_enumeration"


def _phase_canonical_key(matrix: np.ndarray, decimals: int = 10) -> tuple:
    """Hashable gate key invariant under global phase."""
    flat = matrix.ravel()
    k = int(np.argmax(np.abs(flat)))
    phase = flat[k] / abs(flat[k])
    canon = np.round(flat / phase, decimals) + 0.0  # normalize -0.0
    return tuple(zip(canon.real.tolist(), canon.imag.tolist()))


def _dedup_menu(menu: Sequence[Gate1Q]) -> list:
    """First-occurrence representatives of phase-equivalent gates.

    A global phase on either player's gate cannot change the outcome
    distribution, so equivalent menu entries induce identical rows of
    the finite game.
    """
    reps, seen = [], set()
    for g in menu:
        key = _phase_canonical_key(g.matrix)
        if key not in seen:
            seen.add(key)
            reps.append(g)
    return reps


def default_menu(mode: EntanglerMode, points_per_axis: int = 5) -> list:
    """Named gates C, D, Q plus a uniform set-B parameter grid."""
    named = canonical_gates(mode)
    menu = [named.C, named.D, named.Q]
    for th in np.linspace(0, np.pi / 2, points_per_axis):
        for al in np.linspace(-np.pi, np.pi, points_per_axis):
            for be in np.linspace(-np.pi, np.pi, points_per_axis):
                menu.append(Gate1Q(strategy_matrix(th, al, be)))
    return menu


def _induced_tables(game, gamma, mode, reps):
    n = len(reps)
    pi = np.empty((n, n))
    pii = np.empty((n, n))
    for i, u in enumerate(reps):
        for j, v in enumerate(reps):
            r = run_protocol(game, gamma, mode, u, v)
            pi[i, j], pii[i, j] = r.payoff_I, r.payoff_II
    return pi, pii


def _argmax_first(values: np.ndarray) -> int:
    best = float(np.max(values))
    return int(np.nonzero(values >= best - _TIE_TOL)[0][0])


def _support_equilibria(pi, pii, rows, cols, eps):
    """Equal-size support enumeration restricted to given strategy sets."""
    found = []
    max_k = min(len(rows), len(cols))
    for k in range(1, max_k + 1):
        for r_sub in itertools.combinations(rows, k):
            for c_sub in itertools.combinations(cols, k):
                eq = _solve_support(pi, pii, r_sub, c_sub, eps)
                if eq is not None:
                    found.append(eq)
    return found


def _solve_support(pi, pii, r_sub, c_sub, eps):
    k = len(r_sub)
    if k == 1:
        x = np.array([1.0])
        y = np.array([1.0])
    else:
        # Column mix makes supported rows indifferent, and vice versa.
        m = np.zeros((k + 1, k + 1))
        m[:k, :k] = pi[np.ix_(r_sub, c_sub)]
        m[:k, k] = -1.0
        m[k, :k] = 1.0
        rhs = np.zeros(k + 1)
        rhs[k] = 1.0
        try:
            y = np.linalg.solve(m, rhs)[:k]
        except np.linalg.LinAlgError:
            return None
        m2 = np.zeros((k + 1, k + 1))
        m2[:k, :k] = pii[np.ix_(r_sub, c_sub)].T
        m2[:k, k] = -1.0
        m2[k, :k] = 1.0
        try:
            x = np.linalg.solve(m2, rhs)[:k]
        except np.linalg.LinAlgError:
            return None
        if x.min() < -1e-9 or y.min() < -1e-9:
            return None
        x = np.clip(x, 0.0, None)
        y = np.clip(y, 0.0, None)
        x /= x.sum()
        y /= y.sum()
    xf = np.zeros(pi.shape[0])
    yf = np.zeros(pi.shape[1])
    xf[list(r_sub)] = x
    yf[list(c_sub)] = y
    vi = float(xf @ pi @ yf)
    vii = float(xf @ pii @ yf)
    # No deviation to any strategy of the full (deduplicated) menu.
    if float(np.max(pi @ yf)) - vi > eps or float(np.max(xf @ pii)) - vii > eps:
        return None
    return xf, yf, vi, vii


def mixed_quantum_equilibrium(game: Bimatrix, gamma: float, mode: EntanglerMode,
                              menu: Sequence[Gate1Q], cfg: SearchConfig,
                              support_cap: Optional[int] = None) -> MixedEquilibriumResult:
    """Equilibrium of the finite game induced by a gate menu.

    Pure best-response dynamics run first; a pure fixed point is
    returned directly.  When the dynamics cycle, equal-size support
    enumeration over the cycle's strategies recovers the mixed
    equilibria, each checked against every menu strategy at eps_nash;
    among the survivors the one with the largest payoff sum is
    returned (players coordinating on the best available equilibrium).
    """
    menu = list(menu)
    if not menu:
        raise ValidationError("menu must be nonempty")
    cap = len(menu) if support_cap is None else support_cap
    if len(menu) > cap:
        raise ValidationError(f"menu size {len(menu)} exceeds support cap {cap}")
    gamma = clamp_gamma(gamma)
    reps = _dedup_menu(menu)
    pi, pii = _induced_tables(game, gamma, mode, reps)
    eps = cfg.eps_nash

    def result_from(xf, yf, vi, vii, method):
        sup1 = [(float(w), reps[i]) for i, w in enumerate(xf) if w > 1e-12]
        sup2 = [(float(w), reps[j]) for j, w in enumerate(yf) if w > 1e-12]
        return MixedEquilibriumResult(
            strategy_I=MixedQuantumStrategy(sup1, max_support=cap),
            strategy_II=MixedQuantumStrategy(sup2, max_support=cap),
            payoff_I=vi, payoff_II=vii, method=method)

    state = (0, 0)
    trace = [state]
    seen = {state: 0}
    for _ in range(len(reps) ** 2 + 4):
        i = _argmax_first(pi[:, state[1]])
        j = _argmax_first(pii[i, :])
        new = (i, j)
        if new == state:
            xf = np.zeros(len(reps))
            yf = np.zeros(len(reps))
            xf[i], yf[j] = 1.0, 1.0
            if float(np.max(pi[:, j])) - pi[i, j] <= eps and \
               float(np.max(pii[i, :])) - pii[i, j] <= eps:
                return result_from(xf, yf, float(pi[i, j]), float(pii[i, j]),
                                   "pure_fixed_point")
            break  # argmax fixpoint that is not an equilibrium: degenerate ties
        if new in seen:
            trace.append(new)
            break
        seen[new] = len(trace)
        trace.append(new)
        state = new
    else:
        raise ConvergenceError(f"best-response dynamics did not terminate; trace={trace}")

    start = seen[trace[-1]]
    cycle = trace[start:]
    rows = sorted({i for i, _ in cycle})
    cols = sorted({j for _, j in cycle})
    equilibria = _support_equilibria(pi, pii, rows, cols, eps)
    if not equilibria:  # widen to everything the dynamics visited
        rows = sorted({i for i, _ in trace})
        cols = sorted({j for _, j in trace})
        equilibria = _support_equilibria(pi, pii, rows, cols, eps)
    if not equilibria:
        raise ConvergenceError(
            "best-response dynamics cycled and no equilibrium was found on the "
            f"visited supports; trace={trace}")
    equilibria.sort(key=lambda e: (-(e[2] + e[3]),
                                   tuple(np.round(e[0], 12)), tuple(np.round(e[1], 12))))
    xf, yf, vi, vii = equilibria[0]
    return result_from(xf, yf, vi, vii, "support_enumeration")

"""Iterated-play tournament harness for the trading game.

Two agents repeatedly play the protocol over a finite gate menu.  A
single seeded random stream drives each tournament and is consumed in
a fixed order per round: agent 1's decision draws, agent 2's, then
outcome sampling (when enabled), so runs are bit-for-bit reproducible.

"Observed defection" for trigger-style agents is the outcome mass on
the opponent's defect-labeled basis states (the sampled outcome counts
as mass 1 when sampling is on).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple, Optional

import numpy as np

from .errors import RangeError, ValidationError
from .ewl import canonical_gates, run_protocol
from .games import Bimatrix
from .noise import NoiseKind, NoiseSpec, run_protocol_noisy
from .qcore import EntanglerMode, Gate1Q, clamp_gamma


class NamedGate(NamedTuple):
    name: str
    gate: Gate1Q


class AgentKind(Enum):
    FIXED = "fixed"
    GRIM_TRIGGER = "grim_trigger"
    TIT_FOR_TAT = "tit_for_tat"
    EPSILON_GREEDY_BANDIT = "epsilon_greedy_bandit"


@dataclass(frozen=True)
class AgentSpec:
    """Menu-based agent description.

    fixed plays menu[0] forever. grim_trigger and tit_for_tat treat
    menu[0] as the cooperative gate and menu[-1] as the punishment.
    epsilon_greedy_bandit learns action values over the whole menu.
    """

    kind: AgentKind
    menu: tuple
    epsilon: float = 0.1
    learning_rate: float = 0.1
    trigger_threshold: float = 0.5

    def __post_init__(self):
        if not isinstance(self.kind, AgentKind):
            raise ValidationError(f"kind must be an AgentKind, got {self.kind!r}")
        menu = tuple(self.menu)
        if not menu:
            raise ValidationError("agent menu must be nonempty")
        for entry in menu:
            if not isinstance(entry, NamedGate) or not isinstance(entry.gate, Gate1Q):
                raise ValidationError(f"menu entries must be NamedGate, got {entry!r}")
        object.__setattr__(self, "menu", menu)
        if not (0.0 <= self.epsilon <= 1.0):
            raise RangeError(f"epsilon={self.epsilon!r} outside [0,1]")
        if not (0.0 < self.learning_rate <= 1.0):
            raise RangeError(f"learning_rate={self.learning_rate!r} outside (0,1]")
        if not (0.0 <= self.trigger_threshold <= 1.0):
            raise RangeError(f"trigger_threshold={self.trigger_threshold!r} outside [0,1]")


@dataclass(frozen=True)
class TournamentConfig:
    rounds: int
    gamma: float = np.pi / 2
    mode: EntanglerMode = EntanglerMode.DEFECT
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    seed: int = 0
    sampled_outcomes: bool = False

    def __post_init__(self):
        if self.rounds < 1:
            raise RangeError(f"rounds must be >= 1, got {self.rounds}")
        object.__setattr__(self, "gamma", clamp_gamma(self.gamma))


@dataclass(frozen=True)
class RoundRecord:
    index: int
    gate_I: str
    gate_II: str
    distribution: tuple
    sampled_outcome: Optional[int]
    payoff_I: float
    payoff_II: float


@dataclass(frozen=True)
class TournamentResult:
    records: tuple
    mean_payoff_I: float
    mean_payoff_II: float


class _Agent:
    def __init__(self, spec: AgentSpec):
        self.spec = spec

    def choose(self, rng: np.random.Generator) -> int:
        raise NotImplementedError

    def observe(self, own_index: int, opponent_defect_mass: float, reward: float) -> None:
        pass


class _FixedAgent(_Agent):
    def choose(self, rng):
        return 0


class _GrimTriggerAgent(_Agent):
    """Cooperates until opponent-defect mass first exceeds the
    threshold, then punishes forever."""

    def __init__(self, spec):
        super().__init__(spec)
        self.triggered = False

    def choose(self, rng):
        return len(self.spec.menu) - 1 if self.triggered else 0

    def observe(self, own_index, opponent_defect_mass, reward):
        if opponent_defect_mass > self.spec.trigger_threshold:
            self.triggered = True


class _TitForTatAgent(_Agent):
    def __init__(self, spec):
        super().__init__(spec)
        self.retaliate = False

    def choose(self, rng):
        return len(self.spec.menu) - 1 if self.retaliate else 0

    def observe(self, own_index, opponent_defect_mass, reward):
        self.retaliate = opponent_defect_mass > self.spec.trigger_threshold


class _BanditAgent(_Agent):
    """Constant-step epsilon-greedy value learner over the menu."""

    def __init__(self, spec):
        super().__init__(spec)
        self.values = np.zeros(len(spec.menu))

    def choose(self, rng):
        if rng.random() < self.spec.epsilon:
            return int(rng.integers(len(self.spec.menu)))
        return int(np.argmax(self.values))  # first index wins ties

    def observe(self, own_index, opponent_defect_mass, reward):
        self.values[own_index] += self.spec.learning_rate * (reward - self.values[own_index])


_AGENT_CLASSES = {
    AgentKind.FIXED: _FixedAgent,
    AgentKind.GRIM_TRIGGER: _GrimTriggerAgent,
    AgentKind.TIT_FOR_TAT: _TitForTatAgent,
    AgentKind.EPSILON_GREEDY_BANDIT: _BanditAgent,
}


def play_tournament(game: Bimatrix, a1: AgentSpec, a2: AgentSpec,
                    cfg: TournamentConfig) -> TournamentResult:
    """Run a sequential tournament between two agents.

    Per-pair protocol results are cached, so long tournaments over
    small menus stay cheap.  Without outcome sampling the recorded
    payoffs are the exact expected payoffs of each round's profile.
    """
    rng = np.random.default_rng(cfg.seed)
    agent1 = _AGENT_CLASSES[a1.kind](a1)
    agent2 = _AGENT_CLASSES[a2.kind](a2)
    noisy = cfg.noise.kind != NoiseKind.NONE

    cache = {}

    def pair_result(i1: int, i2: int):
        key = (i1, i2)
        if key not in cache:
            g1, g2 = a1.menu[i1].gate, a2.menu[i2].gate
            if noisy:
                r = run_protocol_noisy(game, cfg.gamma, cfg.mode, g1, g2, cfg.noise)
            else:
                r = run_protocol(game, cfg.gamma, cfg.mode, g1, g2)
            cache[key] = (r.distribution.probs.copy(), r.payoff_I, r.payoff_II)
        return cache[key]

    records = []
    total_i = total_ii = 0.0
    for k in range(cfg.rounds):
        i1 = agent1.choose(rng)
        i2 = agent2.choose(rng)
        probs, exp_i, exp_ii = pair_result(i1, i2)
        if cfg.sampled_outcomes:
            outcome = int(np.searchsorted(np.cumsum(probs), rng.random(), side="right"))
            outcome = min(outcome, 3)
            pay_i, pay_ii = game.cell(outcome >> 1, outcome & 1)
            defect_mass_1 = 1.0 if outcome & 1 else 0.0
            defect_mass_2 = 1.0 if outcome >> 1 else 0.0
        else:
            outcome = None
            pay_i, pay_ii = exp_i, exp_ii
            defect_mass_1 = float(probs[1] + probs[3])
            defect_mass_2 = float(probs[2] + probs[3])
        agent1.observe(i1, defect_mass_1, pay_i)
        agent2.observe(i2, defect_mass_2, pay_ii)
        records.append(RoundRecord(
            index=k, gate_I=a1.menu[i1].name, gate_II=a2.menu[i2].name,
            distribution=tuple(float(x) for x in probs),
            sampled_outcome=outcome, payoff_I=pay_i, payoff_II=pay_ii))
        total_i += pay_i
        total_ii += pay_ii
    return TournamentResult(records=tuple(records),
                            mean_payoff_I=total_i / cfg.rounds,
                            mean_payoff_II=total_ii / cfg.rounds)


@dataclass(frozen=True)
class MenuAdvantageReport:
    quantum: TournamentResult
    classical: TournamentResult
    tail_window: int
    quantum_tail_mean: tuple
    classical_tail_mean: tuple


def _tail_mean(result: TournamentResult, window: int) -> tuple:
    tail = result.records[-window:]
    return (sum(r.payoff_I for r in tail) / len(tail),
            sum(r.payoff_II for r in tail) / len(tail))


def menu_advantage_experiment(game: Bimatrix, cfg: TournamentConfig) -> MenuAdvantageReport:
    """Self-play value learners with and without the quantum gate.

    Both conditions run epsilon-greedy bandits against each other with
    the same seed schedule; the quantum condition's menu adds Q to the
    classical {C, D} menu.  The tail means over the final rounds are
    the headline comparison.
    """
    named = canonical_gates(cfg.mode)
    quantum_menu = (NamedGate("C", named.C), NamedGate("D", named.D), NamedGate("Q", named.Q))
    classical_menu = (NamedGate("C", named.C), NamedGate("D", named.D))

    def bandit(menu):
        return AgentSpec(kind=AgentKind.EPSILON_GREEDY_BANDIT, menu=menu)

    quantum = play_tournament(game, bandit(quantum_menu), bandit(quantum_menu), cfg)
    classical = play_tournament(game, bandit(classical_menu), bandit(classical_menu), cfg)
    window = min(1000, cfg.rounds)
    return MenuAdvantageReport(
        quantum=quantum, classical=classical, tail_window=window,
        quantum_tail_mean=_tail_mean(quantum, window),
        classical_tail_mean=_tail_mean(classical, window))

"""One-slot Bayesian game between a block proposer and attesters."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import cached_property
from typing import Sequence

from .incentive_model import (
    DomainError,
    IncentiveParams,
    RewardSummary,
    _frac,
    proposer_reward_at,
    summarize,
)


class Action(enum.Enum):
    COOPERATE = "C"
    DEVIATE = "D"


class Role(enum.Enum):
    PROPOSER = "B"
    ATTESTER = "A"


class LeakMode(enum.Enum):
    FORCED_ON = "on"
    FORCED_OFF = "off"
    DERIVED = "derived"


C, D = Action.COOPERATE, Action.DEVIATE
B, A = Role.PROPOSER, Role.ATTESTER


class InvariantError(ValueError):
    pass


@dataclass(frozen=True)
class TypeAssignment:
    roles: tuple[Role, ...]

    def __post_init__(self):
        object.__setattr__(self, "roles", tuple(self.roles))
        if sum(r is B for r in self.roles) != 1:
            raise InvariantError("exactly one agent must be the block proposer")

    @classmethod
    def with_proposer(cls, n: int, proposer: int) -> "TypeAssignment":
        return cls(tuple(B if k == proposer else A for k in range(n)))

    @property
    def proposer(self) -> int:
        return self.roles.index(B)

    def __len__(self):
        return len(self.roles)


@dataclass(frozen=True)
class Strategy:
    """Type-contingent probabilities of cooperating."""

    prob_cooperate_as_proposer: Fraction = Fraction(1)
    prob_cooperate_as_attester: Fraction = Fraction(1)

    def __post_init__(self):
        for name in ("prob_cooperate_as_proposer", "prob_cooperate_as_attester"):
            p = _frac(getattr(self, name))
            if not 0 <= p <= 1:
                raise DomainError(f"{name} must lie in [0, 1], got {p}")
            object.__setattr__(self, name, p)

    @classmethod
    def pure(cls, as_proposer: Action, as_attester: Action) -> "Strategy":
        return cls(Fraction(as_proposer is C), Fraction(as_attester is C))

    @classmethod
    def uniform(cls, p_cooperate) -> "Strategy":
        return cls(p_cooperate, p_cooperate)

    def p_cooperate(self, role: Role) -> Fraction:
        return self.prob_cooperate_as_proposer if role is B else self.prob_cooperate_as_attester

    def prob(self, action: Action, role: Role) -> Fraction:
        p = self.p_cooperate(role)
        return p if action is C else 1 - p

    @property
    def is_pure(self) -> bool:
        return all(p in (0, 1) for p in (self.prob_cooperate_as_proposer, self.prob_cooperate_as_attester))


COOPERATE = Strategy.pure(C, C)
DEVIATE = Strategy.pure(D, D)


@dataclass(frozen=True)
class GameConfig:
    n_agents: int = 4
    gamma_threshold: Fraction = Fraction(1, 3)
    # None -> equal to the attester penalty
    inactivity_penalty: Fraction | None = None
    leak_mode: LeakMode = LeakMode.DERIVED
    incentive_params: IncentiveParams = field(default_factory=IncentiveParams)
    # None -> derived from the cost schedule
    cost_per_epoch: Fraction | None = None

    def __post_init__(self):
        if self.n_agents < 2:
            raise DomainError(f"n_agents must be >= 2, got {self.n_agents}")
        object.__setattr__(self, "gamma_threshold", _frac(self.gamma_threshold))
        if not 0 < self.gamma_threshold <= 1:
            raise DomainError("gamma_threshold must lie in (0, 1]")
        if self.inactivity_penalty is not None:
            object.__setattr__(self, "inactivity_penalty", _frac(self.inactivity_penalty))
            if self.inactivity_penalty < 0:
                raise DomainError("inactivity_penalty must be non-negative")
        if self.cost_per_epoch is not None:
            object.__setattr__(self, "cost_per_epoch", _frac(self.cost_per_epoch))
            if self.cost_per_epoch < 0:
                raise DomainError("cost_per_epoch must be non-negative")
        object.__setattr__(self, "leak_mode", LeakMode(self.leak_mode))

    @property
    def prior_proposer(self) -> Fraction:
        return Fraction(1, self.n_agents)

    @property
    def prior_attester(self) -> Fraction:
        return 1 - self.prior_proposer

    @cached_property
    def rewards(self) -> RewardSummary:
        return summarize(self.incentive_params)

    @property
    def attester_reward(self) -> Fraction:
        return self.rewards.attestation

    @property
    def attester_penalty(self) -> Fraction:
        return self.rewards.attester_penalty

    @property
    def leak_penalty(self) -> Fraction:
        if self.inactivity_penalty is None:
            return self.rewards.attester_penalty
        return self.inactivity_penalty

    @property
    def epoch_cost(self) -> Fraction:
        if self.cost_per_epoch is None:
            return self.rewards.cost_per_epoch
        return self.cost_per_epoch

    def proposer_reward(self, gamma: Fraction) -> Fraction:
        # the lookup is hit once per deviator count; cache on the instance
        cache = self.__dict__.setdefault("_proposer_reward_cache", {})
        gamma = _frac(gamma)
        if gamma not in cache:
            cache[gamma] = proposer_reward_at(self.incentive_params, gamma, self.rewards)
        return cache[gamma]

    def leak_status(self, history: bool = False) -> bool:
        if self.leak_mode is LeakMode.FORCED_ON:
            return True
        if self.leak_mode is LeakMode.FORCED_OFF:
            return False
        return history

    def reachable_leak_states(self, gamma: Fraction) -> tuple[bool, ...]:
        """Leak states a single slot can face without knowing history.

        In derived mode the leak is only possible once the offline share
        reaches the threshold."""
        if self.leak_mode is LeakMode.FORCED_ON:
            return (True,)
        if self.leak_mode is LeakMode.FORCED_OFF:
            return (False,)
        return (False, True) if gamma >= self.gamma_threshold else (False,)

    def with_(self, **changes) -> "GameConfig":
        return replace(self, **changes)


@dataclass(frozen=True)
class Scenario:
    """Situation faced by the focal agent: the proposer among the others
    (if any) and its action, the offline share of the others, and whether
    the inactivity leak is in force."""

    x_bc: int = 0
    x_bd: int = 0
    gamma: Fraction = Fraction(0)
    leak_triggered: bool = False

    def __post_init__(self):
        if self.x_bc not in (0, 1) or self.x_bd not in (0, 1):
            raise InvariantError("x_bc and x_bd are indicators")
        if self.x_bc + self.x_bd > 1:
            raise InvariantError("the proposer among the others plays C or D, not both")
        object.__setattr__(self, "gamma", _frac(self.gamma))
        if not 0 <= self.gamma <= 1:
            raise InvariantError("gamma must lie in [0, 1]")


@dataclass(frozen=True)
class UtilityOutcome:
    gross_reward: Fraction
    penalty: Fraction
    cost: Fraction

    @property
    def net(self) -> Fraction:
        return self.gross_reward - self.penalty - self.cost


def classify_scenario(
    profile: Sequence[Action],
    assignment: TypeAssignment,
    focal_agent: int,
    cfg: GameConfig,
    leak_history: bool = False,
) -> Scenario:
    n = len(profile)
    if len(assignment) != n:
        raise InvariantError("profile and assignment lengths differ")
    if not 0 <= focal_agent < n:
        raise IndexError(f"focal agent {focal_agent} out of range")
    others = [k for k in range(n) if k != focal_agent]
    deviators = sum(profile[k] is D for k in others)
    proposer = assignment.proposer
    x_bc = x_bd = 0
    if proposer != focal_agent:
        x_bc = int(profile[proposer] is C)
        x_bd = 1 - x_bc
    return Scenario(x_bc, x_bd, Fraction(deviators, n - 1), cfg.leak_status(leak_history))


def role_utility(role: Role, action: Action, scenario: Scenario, cfg: GameConfig) -> UtilityOutcome:
    """Utility from the focal agent's own role and action alone."""
    zero = Fraction(0)
    if role is B:
        gross = cfg.proposer_reward(scenario.gamma) if action is C else zero
        return UtilityOutcome(gross, zero, cfg.epoch_cost)
    if action is C:
        gross = zero if scenario.leak_triggered else cfg.attester_reward
        return UtilityOutcome(gross, zero, cfg.epoch_cost)
    penalty = cfg.leak_penalty if scenario.leak_triggered else cfg.attester_penalty
    return UtilityOutcome(zero, penalty, cfg.epoch_cost)


def utility(
    focal_agent: int,
    profile: Sequence[Action],
    assignment: TypeAssignment,
    scenario: Scenario,
    cfg: GameConfig,
) -> UtilityOutcome:
    if len(profile) != len(assignment):
        raise InvariantError("profile and assignment lengths differ")
    return role_utility(assignment.roles[focal_agent], profile[focal_agent], scenario, cfg)

"""Closed-form validator rewards, penalties and costs.

Every monetary amount is in GWei and carried as an exact ``Fraction``.
Rounding to whole GWei happens only when a report is rendered (floor).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from decimal import Context, Decimal
from fractions import Fraction
from typing import Iterable, Union

GWEI_PER_ETH = 10**9
MAX_EFFECTIVE_BALANCE = 32 * GWEI_PER_ETH
SECONDS_PER_SLOT = 12
SECONDS_PER_YEAR = 60 * 60 * 24 * 365

Number = Union[int, Fraction]

_SQRT_CONTEXT = Context(prec=60)


class DomainError(ValueError):
    """A parameter lies outside the domain of the formula it feeds."""


def _frac(x) -> Fraction:
    if isinstance(x, float):
        return Fraction(str(x))
    return Fraction(x)


@dataclass(frozen=True)
class ProtocolWeights:
    w_source: int = 14
    w_target: int = 26
    w_head: int = 14
    w_sync: int = 2
    w_proposer: int = 8
    w_total: int = 64

    def __post_init__(self):
        parts = (self.w_source, self.w_target, self.w_head, self.w_sync, self.w_proposer)
        if any(w <= 0 for w in parts) or self.w_total <= 0:
            raise DomainError("all protocol weights must be positive")
        if sum(parts) != self.w_total:
            raise DomainError(
                f"weights sum to {sum(parts)}, expected w_total={self.w_total}"
            )
        if self.w_proposer >= self.w_total:
            raise DomainError("w_proposer must be below w_total")

    @property
    def proposer_fraction(self) -> Fraction:
        return Fraction(self.w_proposer, self.w_total - self.w_proposer)


@dataclass(frozen=True)
class NetworkParams:
    """Network state. ``total_staked`` and ``n_attesters_per_epoch`` default
    to every validator holding 32 ETH and every validator attesting."""

    n_validators: int = 500_000
    total_staked: int | None = None
    n_attesters_per_epoch: int | None = None
    ebi: int = GWEI_PER_ETH
    br_factor: int = 64
    sync_committee_size: int = 512
    slots_per_epoch: int = 32

    def __post_init__(self):
        if self.n_validators < 2:
            raise DomainError(f"n_validators must be >= 2, got {self.n_validators}")
        if self.total_staked is None:
            object.__setattr__(self, "total_staked", self.n_validators * MAX_EFFECTIVE_BALANCE)
        if self.n_attesters_per_epoch is None:
            object.__setattr__(self, "n_attesters_per_epoch", self.n_validators)
        if self.total_staked <= 0:
            raise DomainError("total_staked must be positive")
        if not 0 <= self.n_attesters_per_epoch <= self.n_validators:
            raise DomainError("n_attesters_per_epoch must lie in [0, n_validators]")
        if self.ebi <= 0 or self.br_factor <= 0:
            raise DomainError("ebi and br_factor must be positive")
        if self.sync_committee_size <= 0 or self.slots_per_epoch <= 0:
            raise DomainError("sync_committee_size and slots_per_epoch must be positive")


@dataclass(frozen=True)
class BalanceState:
    total_balance: int

    @property
    def effective_balance(self) -> int:
        return effective_balance(self.total_balance)


@dataclass(frozen=True)
class CostSchedule:
    setup_cost: Fraction = Fraction(0)
    infrastructure_cost: Fraction = Fraction(0)
    operating_cost: Fraction = Fraction(0)
    participation_cost: Fraction = Fraction(MAX_EFFECTIVE_BALANCE)
    attest_exec_cost: Fraction = Fraction(0)
    sync_exec_cost: Fraction = Fraction(0)
    propose_exec_cost: Fraction = Fraction(0)
    years: Fraction = Fraction(1)

    def __post_init__(self):
        for name in self.__dataclass_fields__:
            object.__setattr__(self, name, _frac(getattr(self, name)))
        if self.years <= 0:
            raise DomainError("years must be positive")
        for name in self.__dataclass_fields__:
            if getattr(self, name) < 0:
                raise DomainError(f"{name} must be non-negative")


@dataclass(frozen=True)
class TransactionTips:
    tips: tuple[Fraction, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "tips", tuple(_frac(t) for t in self.tips))
        if any(t < 0 for t in self.tips):
            raise DomainError("tips must be non-negative")


@dataclass(frozen=True)
class IncentiveParams:
    weights: ProtocolWeights = field(default_factory=ProtocolWeights)
    network: NetworkParams = field(default_factory=NetworkParams)
    costs: CostSchedule = field(default_factory=CostSchedule)
    tips: TransactionTips = field(default_factory=TransactionTips)
    # every validator is assumed to hold this effective balance
    effective_balance: int = MAX_EFFECTIVE_BALANCE

    def __post_init__(self):
        if effective_balance(self.effective_balance) != self.effective_balance:
            raise DomainError("effective_balance must be a whole ETH amount <= 32 ETH")


# -- balances ---------------------------------------------------------------


def effective_balance(total_balance: Number) -> int:
    """Round to the nearest whole ETH (ties up) and cap at 32 ETH."""
    total_balance = _frac(total_balance)
    if total_balance < 0:
        raise DomainError("balance must be non-negative")
    eth = math.floor(total_balance / GWEI_PER_ETH + Fraction(1, 2))
    return min(eth * GWEI_PER_ETH, MAX_EFFECTIVE_BALANCE)


def increments(eb: Number, ebi: int = GWEI_PER_ETH) -> Fraction:
    return _frac(eb) / ebi


# -- rewards ----------------------------------------------------------------


def _sqrt(x: Number) -> Fraction:
    x = _frac(x)
    if x.denominator == 1:
        root = math.isqrt(x.numerator)
        if root * root == x.numerator:
            return Fraction(root)
    d = _SQRT_CONTEXT.divide(Decimal(x.numerator), Decimal(x.denominator))
    return Fraction(_SQRT_CONTEXT.sqrt(d))


def base_reward(params: NetworkParams) -> Fraction:
    """Base reward per increment, ``EBI * BR_FACTOR / sqrt(total stake)``.

    Perfect squares give an exact result; otherwise the root is carried at
    60 significant digits.
    """
    if params.total_staked <= 0:
        raise DomainError("total stake must be positive")
    return Fraction(params.ebi * params.br_factor) / _sqrt(params.total_staked)


def _weighted(weight: int, eb: Number, br: Number, w: ProtocolWeights, ebi: int) -> Fraction:
    return Fraction(weight, w.w_total) * increments(eb, ebi) * _frac(br)


def attestation_source_reward(eb, br, w: ProtocolWeights = ProtocolWeights(), ebi: int = GWEI_PER_ETH) -> Fraction:
    return _weighted(w.w_source, eb, br, w, ebi)


def attestation_target_reward(eb, br, w: ProtocolWeights = ProtocolWeights(), ebi: int = GWEI_PER_ETH) -> Fraction:
    return _weighted(w.w_target, eb, br, w, ebi)


def attestation_head_reward(eb, br, w: ProtocolWeights = ProtocolWeights(), ebi: int = GWEI_PER_ETH) -> Fraction:
    return _weighted(w.w_head, eb, br, w, ebi)


def attestation_total_reward(eb, br, w: ProtocolWeights = ProtocolWeights(), ebi: int = GWEI_PER_ETH) -> Fraction:
    return _weighted(w.w_source + w.w_target + w.w_head, eb, br, w, ebi)


def sync_committee_reward(params: NetworkParams, eb, br, w: ProtocolWeights = ProtocolWeights()) -> Fraction:
    scale = Fraction(1, params.slots_per_epoch * params.sync_committee_size)
    return scale * Fraction(w.w_sync, w.w_total) * params.n_validators * increments(eb, params.ebi) * _frac(br)


def proposer_attestation_reward(n_attesters: int, r_a, w: ProtocolWeights = ProtocolWeights()) -> Fraction:
    if w.w_proposer >= w.w_total:
        raise DomainError("w_proposer must be below w_total")
    return w.proposer_fraction * n_attesters * _frac(r_a)


def proposer_sync_reward(r_c, w: ProtocolWeights = ProtocolWeights(), sync_committee_size: int = 512) -> Fraction:
    if w.w_proposer >= w.w_total:
        raise DomainError("w_proposer must be below w_total")
    return w.proposer_fraction * _frac(r_c) * sync_committee_size


def proposer_tips(tips: TransactionTips | Iterable[Number]) -> Fraction:
    if not isinstance(tips, TransactionTips):
        tips = TransactionTips(tuple(tips))
    return sum(tips.tips, Fraction(0))


def proposer_total_reward(pa, pc, pt) -> Fraction:
    return _frac(pa) + _frac(pc) + _frac(pt)


# -- penalties --------------------------------------------------------------


def attester_penalty(r_as, r_at) -> Fraction:
    """Maximum attester penalty. The head vote is never penalised."""
    return _frac(r_as) + _frac(r_at)


def sync_penalty(r_c) -> Fraction:
    return _frac(r_c)


# -- costs ------------------------------------------------------------------


def epochs_per_year(slots_per_epoch: int = 32) -> Fraction:
    return Fraction(SECONDS_PER_YEAR, SECONDS_PER_SLOT * slots_per_epoch)


def _check_years(c: CostSchedule):
    if c.years <= 0:
        raise DomainError("years must be positive")


def annual_equipment_cost(c: CostSchedule) -> Fraction:
    _check_years(c)
    return (c.setup_cost + c.infrastructure_cost + c.operating_cost) / c.years


def annual_participation_cost(c: CostSchedule) -> Fraction:
    _check_years(c)
    return c.participation_cost / c.years


def annual_execution_cost(c: CostSchedule) -> Fraction:
    _check_years(c)
    return (c.attest_exec_cost + c.sync_exec_cost + c.propose_exec_cost) / c.years


def annual_total_cost(c: CostSchedule) -> Fraction:
    return annual_equipment_cost(c) + annual_participation_cost(c) + annual_execution_cost(c)


def cost_per_epoch(c: CostSchedule, slots_per_epoch: int = 32) -> Fraction:
    return annual_total_cost(c) / epochs_per_year(slots_per_epoch)


# -- aggregate view ---------------------------------------------------------


@dataclass(frozen=True)
class RewardSummary:
    """Every per-epoch quantity for one validator of the configured network."""

    base_reward: Fraction
    source: Fraction
    target: Fraction
    head: Fraction
    attestation: Fraction
    sync: Fraction
    proposer_attestation: Fraction
    proposer_sync: Fraction
    proposer_tips: Fraction
    proposer_total: Fraction
    attester_penalty: Fraction
    sync_penalty: Fraction
    cost_per_epoch: Fraction

    def rows(self) -> list[tuple[str, Fraction]]:
        return [(name, getattr(self, name)) for name in self.__dataclass_fields__]


def summarize(params: IncentiveParams) -> RewardSummary:
    net, w, eb = params.network, params.weights, params.effective_balance
    br = base_reward(net)
    r_as = attestation_source_reward(eb, br, w, net.ebi)
    r_at = attestation_target_reward(eb, br, w, net.ebi)
    r_ah = attestation_head_reward(eb, br, w, net.ebi)
    r_a = attestation_total_reward(eb, br, w, net.ebi)
    r_c = sync_committee_reward(net, eb, br, w)
    pa = proposer_attestation_reward(net.n_attesters_per_epoch, r_a, w)
    pc = proposer_sync_reward(r_c, w, net.sync_committee_size)
    pt = proposer_tips(params.tips)
    return RewardSummary(
        base_reward=br,
        source=r_as,
        target=r_at,
        head=r_ah,
        attestation=r_a,
        sync=r_c,
        proposer_attestation=pa,
        proposer_sync=pc,
        proposer_tips=pt,
        proposer_total=proposer_total_reward(pa, pc, pt),
        attester_penalty=attester_penalty(r_as, r_at),
        sync_penalty=sync_penalty(r_c),
        cost_per_epoch=cost_per_epoch(params.costs, net.slots_per_epoch),
    )


def online_attesters(n_attesters: int, gamma: Fraction) -> int:
    """Attestations still available to the proposer when a fraction
    ``gamma`` of validators is offline."""
    return math.floor((1 - _frac(gamma)) * n_attesters)


def proposer_reward_at(params: IncentiveParams, gamma: Fraction, summary: RewardSummary | None = None) -> Fraction:
    s = summary or summarize(params)
    pa = proposer_attestation_reward(
        online_attesters(params.network.n_attesters_per_epoch, gamma), s.attestation, params.weights
    )
    return proposer_total_reward(pa, s.proposer_sync, s.proposer_tips)


def floor_gwei(x: Number) -> int:
    return math.floor(_frac(x))

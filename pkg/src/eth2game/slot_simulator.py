"""Monte Carlo play of repeated one-slot games with the inactivity leak.

Random streams: ``SeedSequence(seed).spawn(n_agents + 1)`` feeding PCG64
generators. Stream 0 draws the proposer of every slot; stream ``1 + j``
draws agent ``j``'s action uniforms. Within a stream, slot
``(epoch, slot)`` consumes draw number ``epoch * slots_per_epoch + slot``,
so a run is reproducible independent of platform or of how replicas are
spread over workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .equilibrium import StrategyProfile, expected_utility
from .game_core import A, B, C, D, GameConfig, Scenario, role_utility

FINALIZATION_THRESHOLD = Fraction(2, 3)
LEAK_AFTER_EPOCHS = 4


def finalization_check(online_stake_fraction) -> bool:
    """A checkpoint finalises when at least two thirds of stake attests."""
    f = Fraction(online_stake_fraction)
    if not 0 <= f <= 1:
        raise ValueError(f"stake fraction must lie in [0, 1], got {f}")
    return f >= FINALIZATION_THRESHOLD


@dataclass(frozen=True)
class EpochState:
    epoch_index: int = 0
    checkpoint_finalized: bool = True
    consecutive_unfinalized: int = 0
    leak_active: bool = False


def step_epoch(state: EpochState, finalized: bool) -> EpochState:
    if finalized:
        return EpochState(state.epoch_index + 1, True, 0, False)
    streak = state.consecutive_unfinalized + 1
    return EpochState(state.epoch_index + 1, False, streak, streak >= LEAK_AFTER_EPOCHS)


@dataclass(frozen=True)
class EpochTrace:
    epoch: int
    finalized: bool
    # leak state in force while this epoch's slots were played
    leak_during: bool
    # leak state after this epoch closed
    leak_active: bool
    consecutive_unfinalized: int
    nets: tuple[int, ...]


@dataclass(frozen=True)
class SimulationResult:
    n_agents: int
    epochs: int
    slots_per_epoch: int
    rng_seed: int
    totals: tuple[int, ...]
    # per agent: {(role value, action value): count}
    counts: tuple[dict, ...]
    mean: tuple[float, ...]
    std_error: tuple[float, ...]
    leak_epochs: int
    trace: tuple[EpochTrace, ...] = field(repr=False, default=())

    @property
    def slots(self) -> int:
        return self.epochs * self.slots_per_epoch


def _payoff_table(cfg: GameConfig) -> np.ndarray:
    """Integer GWei nets indexed [is_proposer, cooperates, deviators, leak]."""
    n = cfg.n_agents
    table = np.zeros((2, 2, n, 2), dtype=np.int64)
    for is_b, role in ((0, A), (1, B)):
        for coop, action in ((0, D), (1, C)):
            for k in range(n):
                for leak in (0, 1):
                    x_bc = 0 if role is B else 1
                    scen = Scenario(x_bc, 0, Fraction(k, n - 1), bool(leak))
                    table[is_b, coop, k, leak] = math.floor(role_utility(role, action, scen, cfg).net)
    return table


def run_simulation(cfg: GameConfig, profile: StrategyProfile, epochs: int, seed: int,
                   keep_trace: bool = True) -> SimulationResult:
    """Play ``epochs * slots_per_epoch`` slots.

    Each slot: uniform proposer draw, independent realisation of every
    agent's type-contingent strategy, payoff from the realised scenario.
    The leak state in force during an epoch comes from the preceding
    epochs' finalisation record (or is fixed by a forced leak mode).
    Per-slot nets are floored to whole GWei.
    """
    if epochs < 1:
        raise ValueError("epochs must be >= 1")
    n = cfg.n_agents
    if len(profile) != n:
        raise ValueError(f"profile has {len(profile)} strategies for {n} agents")
    spe = cfg.incentive_params.network.slots_per_epoch
    total_slots = epochs * spe

    streams = [np.random.Generator(np.random.PCG64(s)) for s in np.random.SeedSequence(seed).spawn(n + 1)]
    proposer = streams[0].integers(0, n, size=total_slots)
    is_b = proposer[None, :] == np.arange(n)[:, None]
    p_b = np.array([float(s.prob_cooperate_as_proposer) for s in profile.strategies])[:, None]
    p_a = np.array([float(s.prob_cooperate_as_attester) for s in profile.strategies])[:, None]
    uniforms = np.stack([streams[1 + j].random(total_slots) for j in range(n)])
    coop = uniforms < np.where(is_b, p_b, p_a)

    offline = ~coop
    k = offline.sum(axis=0)[None, :] - offline

    online_per_epoch = coop.reshape(n, epochs, spe).sum(axis=(0, 2))
    # equal effective balances: stake fraction == online agent-slot fraction
    finalized = [finalization_check(Fraction(int(o), n * spe)) for o in online_per_epoch]

    state = EpochState()
    leak_during = np.zeros(epochs, dtype=bool)
    states = []
    for e in range(epochs):
        leak_during[e] = cfg.leak_status(state.leak_active)
        state = step_epoch(state, finalized[e])
        states.append(state)

    leak_slots = np.repeat(leak_during, spe)[None, :].repeat(n, axis=0)
    nets = _payoff_table(cfg)[is_b.astype(int), coop.astype(int), k, leak_slots.astype(int)]

    totals = tuple(int(t) for t in nets.sum(axis=1, dtype=np.int64))
    counts = []
    for j in range(n):
        c = {}
        for role, rmask in ((B, is_b[j]), (A, ~is_b[j])):
            for action, amask in ((C, coop[j]), (D, ~coop[j])):
                c[(role.value, action.value)] = int(np.count_nonzero(rmask & amask))
        counts.append(c)
    x = nets.astype(np.float64)
    mean = tuple(float(t) / total_slots for t in totals)
    if total_slots > 1:
        se = tuple(float(v) for v in x.std(axis=1, ddof=1) / math.sqrt(total_slots))
    else:
        se = (float("nan"),) * n

    trace = ()
    if keep_trace:
        per_epoch = nets.reshape(n, epochs, spe).sum(axis=2)
        trace = tuple(
            EpochTrace(
                epoch=e + 1,
                finalized=finalized[e],
                leak_during=bool(leak_during[e]),
                leak_active=states[e].leak_active,
                consecutive_unfinalized=states[e].consecutive_unfinalized,
                nets=tuple(int(v) for v in per_epoch[:, e]),
            )
            for e in range(epochs)
        )

    return SimulationResult(
        n_agents=n,
        epochs=epochs,
        slots_per_epoch=spe,
        rng_seed=seed,
        totals=totals,
        counts=tuple(counts),
        mean=mean,
        std_error=se,
        leak_epochs=int(leak_during.sum()),
        trace=trace,
    )


@dataclass(frozen=True)
class Comparison:
    agent: int
    empirical: float
    analytic: Fraction
    std_error: float

    @property
    def z(self) -> float:
        diff = self.empirical - float(self.analytic)
        if self.std_error == 0:
            return 0.0 if abs(diff) < 1 else math.inf
        return diff / self.std_error


def compare_to_analytic(result: SimulationResult, cfg: GameConfig, profile: StrategyProfile) -> list[Comparison]:
    """Empirical mean per slot against the exact expected utility.

    The analytic side assumes no leak history, which is what the
    simulation produces whenever checkpoints keep finalising.
    """
    return [
        Comparison(i, result.mean[i], expected_utility(i, profile, cfg).value, result.std_error[i])
        for i in range(cfg.n_agents)
    ]


"""Expected utilities, best responses and equilibrium verification.

The focal agent's payoff depends on the others only through the
proposer's identity/action and the number of offline agents, so
enumeration runs over those classes rather than over all 2**(n-1)
opposing profiles. ``method="bruteforce"`` walks every atom instead and
exists as a cross-check.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from fractions import Fraction
from math import comb
from typing import Iterable, Sequence

from .game_core import (
    A,
    B,
    C,
    COOPERATE,
    D,
    Action,
    GameConfig,
    Role,
    Scenario,
    Strategy,
    TypeAssignment,
    classify_scenario,
    role_utility,
    utility,
)
from .incentive_model import GWEI_PER_ETH, DomainError, TransactionTips

CASE_LABELS = ("1.1", "1.2.1", "1.2.2", "2.1", "2.2.1", "2.2.2",
               "3.1.1", "3.1.2", "3.2.1", "3.2.2", "4")

SWEEP_AXES = ("cost_per_epoch", "gamma_threshold", "inactivity_penalty", "n_validators", "tips-total")


class NullEventError(ValueError):
    """Conditioning event has probability zero."""


class UnknownAxisError(ValueError):
    pass


@dataclass(frozen=True)
class StrategyProfile:
    strategies: tuple[Strategy, ...]

    def __post_init__(self):
        object.__setattr__(self, "strategies", tuple(self.strategies))

    @classmethod
    def all_cooperate(cls, n: int) -> "StrategyProfile":
        return cls((COOPERATE,) * n)

    @classmethod
    def uniform(cls, n: int, strategy: Strategy) -> "StrategyProfile":
        return cls((strategy,) * n)

    def with_agent(self, agent: int, strategy: Strategy) -> "StrategyProfile":
        s = list(self.strategies)
        s[agent] = strategy
        return StrategyProfile(tuple(s))

    def __len__(self):
        return len(self.strategies)

    def __getitem__(self, k) -> Strategy:
        return self.strategies[k]


@dataclass(frozen=True)
class ScenarioFilter:
    """Conditioning event over scenarios; ``None`` fields are unconstrained."""

    focal_role: Role | None = None
    focal_action: Action | None = None
    x_bc: int | None = None
    x_bd: int | None = None
    gamma: Fraction | None = None
    gamma_at_least_threshold: bool | None = None
    leak_triggered: bool | None = None

    @classmethod
    def from_scenario(cls, s: Scenario) -> "ScenarioFilter":
        return cls(x_bc=s.x_bc, x_bd=s.x_bd, gamma=s.gamma, leak_triggered=s.leak_triggered)

    def matches(self, role: Role, action: Action, s: Scenario, threshold: Fraction) -> bool:
        checks = (
            (self.focal_role, role),
            (self.focal_action, action),
            (self.x_bc, s.x_bc),
            (self.x_bd, s.x_bd),
            (self.gamma, s.gamma),
            (self.gamma_at_least_threshold, s.gamma >= threshold),
            (self.leak_triggered, s.leak_triggered),
        )
        return all(want is None or want == got for want, got in checks)


@dataclass(frozen=True)
class ExpectedUtility:
    value: Fraction
    conditioning: ScenarioFilter | None = None
    # probability of the conditioning event (1 when unconditional)
    probability: Fraction = Fraction(1)


# -- class enumeration ------------------------------------------------------


def _deviator_counts(probs: Iterable[Fraction]) -> list[Fraction]:
    """Distribution of the number of deviators given per-agent deviation
    probabilities (Poisson-binomial, exact)."""
    dist = [Fraction(1)]
    for q in probs:
        nxt = [Fraction(0)] * (len(dist) + 1)
        for k, p in enumerate(dist):
            if p:
                nxt[k] += p * (1 - q)
                nxt[k + 1] += p * q
        dist = nxt
    return dist


def scenario_distribution(agent: int, profile: StrategyProfile, cfg: GameConfig,
                          leak_history: bool = False) -> list[tuple[Role, Scenario, Fraction]]:
    """All (own role, scenario) classes the agent can face, with probabilities.

    Classes with probability zero are dropped. Order is deterministic.
    """
    n = cfg.n_agents
    if len(profile) != n:
        raise DomainError(f"profile has {len(profile)} strategies for {n} agents")
    if not 0 <= agent < n:
        raise IndexError(f"agent {agent} out of range")
    leak = cfg.leak_status(leak_history)
    w = Fraction(1, n)
    out: dict[tuple, Fraction] = {}

    others = [m for m in range(n) if m != agent]
    dist = _deviator_counts(1 - profile[m].prob_cooperate_as_attester for m in others)
    for k, p in enumerate(dist):
        if p:
            key = (B, 0, 0, k)
            out[key] = out.get(key, 0) + w * p

    for j in others:
        rest = [m for m in others if m != j]
        dist = _deviator_counts(1 - profile[m].prob_cooperate_as_attester for m in rest)
        p_c = profile[j].prob_cooperate_as_proposer
        for k, p in enumerate(dist):
            if not p:
                continue
            if p_c:
                key = (A, 1, 0, k)
                out[key] = out.get(key, 0) + w * p * p_c
            if 1 - p_c:
                key = (A, 0, 1, k + 1)
                out[key] = out.get(key, 0) + w * p * (1 - p_c)

    return [
        (role, Scenario(x_bc, x_bd, Fraction(k, n - 1), leak), out[(role, x_bc, x_bd, k)])
        for role, x_bc, x_bd, k in sorted(out, key=lambda t: (t[0].value, t[1], t[2], t[3]))
    ]


def _atoms(agent, profile, cfg, leak_history=False):
    """Yield (own role, own action, scenario, probability) with the agent's
    own mixing folded in."""
    own = profile[agent]
    for role, scen, p in scenario_distribution(agent, profile, cfg, leak_history):
        for action in (C, D):
            q = own.prob(action, role)
            if q:
                yield role, action, scen, p * q


def _bruteforce_atoms(agent, profile, cfg, leak_history=False):
    n = cfg.n_agents
    if len(profile) != n:
        raise DomainError(f"profile has {len(profile)} strategies for {n} agents")
    merged: dict[tuple, Fraction] = {}
    for j in range(n):
        assignment = TypeAssignment.with_proposer(n, j)
        for acts in itertools.product((C, D), repeat=n):
            w = Fraction(1, n)
            for m, a in enumerate(acts):
                w *= profile[m].prob(a, assignment.roles[m])
                if not w:
                    break
            if not w:
                continue
            scen = classify_scenario(acts, assignment, agent, cfg, leak_history)
            key = (assignment.roles[agent], acts[agent], scen)
            merged[key] = merged.get(key, 0) + w
    for (role, action, scen), w in merged.items():
        yield role, action, scen, w


def _atom_source(method: str):
    if method == "classes":
        return _atoms
    if method == "bruteforce":
        return _bruteforce_atoms
    raise ValueError(f"unknown method {method!r}")


# -- expected utilities -----------------------------------------------------


def expected_utility(agent: int, profile: StrategyProfile, cfg: GameConfig,
                     method: str = "classes", leak_history: bool = False) -> ExpectedUtility:
    total = Fraction(0)
    for role, action, scen, p in _atom_source(method)(agent, profile, cfg, leak_history):
        total += p * role_utility(role, action, scen, cfg).net
    return ExpectedUtility(total)


def conditional_expected_utility(agent: int, profile: StrategyProfile, scenario: Scenario | ScenarioFilter,
                                 cfg: GameConfig, method: str = "classes",
                                 leak_history: bool = False) -> ExpectedUtility:
    cond = ScenarioFilter.from_scenario(scenario) if isinstance(scenario, Scenario) else scenario
    if cond.x_bc is not None and cond.x_bd is not None and cond.x_bc + cond.x_bd > 1:
        raise DomainError("x_bc and x_bd cannot both hold")
    mass = Fraction(0)
    total = Fraction(0)
    for role, action, scen, p in _atom_source(method)(agent, profile, cfg, leak_history):
        if cond.matches(role, action, scen, cfg.gamma_threshold):
            mass += p
            total += p * role_utility(role, action, scen, cfg).net
    if mass == 0:
        raise NullEventError(f"conditioning on a null event: {cond}")
    return ExpectedUtility(total / mass, cond, mass)


def scenario_partition(agent: int, profile: StrategyProfile, cfg: GameConfig,
                       leak_history: bool = False) -> list[tuple[Scenario, Fraction]]:
    """Scenarios with positive probability; they partition the outcome space."""
    mass: dict[Scenario, Fraction] = {}
    for _, _, scen, p in _atoms(agent, profile, cfg, leak_history):
        mass[scen] = mass.get(scen, 0) + p
    return list(mass.items())


def mixed_strategy_eu(agent: int, p_cooperate, opposing: StrategyProfile, cfg: GameConfig,
                      method: str = "classes") -> ExpectedUtility:
    profile = opposing.with_agent(agent, Strategy.uniform(p_cooperate))
    return expected_utility(agent, profile, cfg, method)


# -- best responses ---------------------------------------------------------


@dataclass(frozen=True)
class BestResponseSet:
    """Argmax over type-contingent strategies.

    Expected utility is linear in each type's cooperation probability, so
    the set is a product of per-type action sets: a singleton when the
    type's C-vs-D gap is non-zero, both actions on a tie.
    """

    as_proposer: frozenset
    as_attester: frozenset
    gap_proposer: Fraction
    gap_attester: Fraction

    @property
    def pure(self) -> frozenset:
        return frozenset(Strategy.pure(b, a) for b in self.as_proposer for a in self.as_attester)

    def __contains__(self, s: Strategy) -> bool:
        for acts, p in ((self.as_proposer, s.prob_cooperate_as_proposer),
                        (self.as_attester, s.prob_cooperate_as_attester)):
            if len(acts) == 2:
                continue
            if p != (1 if C in acts else 0):
                return False
        return True

    def label(self) -> str:
        def one(acts):
            return "C|D" if len(acts) == 2 else next(iter(acts)).value
        return f"B:{one(self.as_proposer)} A:{one(self.as_attester)}"


def _argmax(gap: Fraction) -> frozenset:
    if gap > 0:
        return frozenset({C})
    if gap < 0:
        return frozenset({D})
    return frozenset({C, D})


def type_gaps(agent: int, opposing: StrategyProfile, cfg: GameConfig,
              method: str = "classes") -> tuple[Fraction, Fraction]:
    """E[u(C) - u(D) | own type] for own type proposer and attester.

    The per-epoch cost appears on both sides and cancels.
    """
    # the agent's own strategy does not move the scenario distribution
    profile = opposing.with_agent(agent, COOPERATE)
    gaps = {B: Fraction(0), A: Fraction(0)}
    mass = {B: Fraction(0), A: Fraction(0)}
    for role, action, scen, p in _atom_source(method)(agent, profile, cfg):
        mass[role] += p
        gaps[role] += p * (role_utility(role, C, scen, cfg).net - role_utility(role, D, scen, cfg).net)
    return gaps[B] / mass[B], gaps[A] / mass[A]


def best_response(agent: int, opposing: StrategyProfile, cfg: GameConfig,
                  method: str = "classes") -> BestResponseSet:
    g_b, g_a = type_gaps(agent, opposing, cfg, method)
    return BestResponseSet(_argmax(g_b), _argmax(g_a), g_b, g_a)


# -- reports ----------------------------------------------------------------


@dataclass(frozen=True)
class CaseRow:
    label: str
    eu_cooperate: Fraction | None
    eu_deviate: Fraction | None
    atoms: int = 0

    @property
    def reachable(self) -> bool:
        return self.eu_cooperate is not None

    @property
    def gap(self) -> Fraction | None:
        if not self.reachable:
            return None
        return self.eu_cooperate - self.eu_deviate


@dataclass(frozen=True)
class EquilibriumReport:
    n_agents: int
    method: str
    best_responses: tuple[BestResponseSet, ...] = ()
    bne_verdict: bool | None = None
    flagged_agents: tuple[int, ...] = ()
    dominance_verdict: bool | None = None
    min_gap: Fraction | None = None
    case_breakdown: dict = field(default_factory=dict)

    @property
    def dominance_label(self) -> str | None:
        if self.min_gap is None:
            return None
        if self.min_gap > 0:
            return "strict"
        if self.min_gap == 0:
            return "weak"
        return "violated"


def verify_bne(profile: StrategyProfile, cfg: GameConfig, method: str = "classes") -> EquilibriumReport:
    brs = tuple(best_response(i, profile, cfg, method) for i in range(cfg.n_agents))
    flagged = tuple(i for i, br in enumerate(brs) if profile[i] not in br)
    return EquilibriumReport(
        n_agents=cfg.n_agents,
        method=method,
        best_responses=brs,
        bne_verdict=not flagged,
        flagged_agents=flagged,
    )


def case_labels(role: Role, scen: Scenario, threshold: Fraction) -> list[str]:
    """Proof-case rows an atom belongs to. Rows overlap: an all-online
    atom is both a Case 1 row and a low-offline Case 2/3 row."""
    high = scen.gamma >= threshold
    if role is B:
        out = ["1.1"] if scen.gamma == 0 else []
        if not high:
            out.append("2.1")
        else:
            out.append("2.2.1" if scen.leak_triggered else "2.2.2")
        return out
    if scen.x_bc:
        out = ["1.2.1"] if scen.gamma == 0 else []
        out.append("3.1.1" if high else "3.1.2")
        return out
    if scen.x_bd:
        return ["3.2.1" if high else "3.2.2"]
    return ["1.2.2"]


def _dominance_classes(cfg: GameConfig):
    """(role, scenario, multiplicity) for every opposing pure class."""
    n = cfg.n_agents
    for k in range(n):
        for leak in cfg.reachable_leak_states(Fraction(k, n - 1)):
            yield B, Scenario(0, 0, Fraction(k, n - 1), leak), comb(n - 1, k)
    for prop_action in (C, D):
        for kk in range(n - 1):
            k = kk + (prop_action is D)
            g = Fraction(k, n - 1)
            for leak in cfg.reachable_leak_states(g):
                x_bc = int(prop_action is C)
                yield A, Scenario(x_bc, 1 - x_bc, g, leak), (n - 1) * comb(n - 2, kk)


def _dominance_bruteforce(cfg: GameConfig, agent: int):
    n = cfg.n_agents
    others = [m for m in range(n) if m != agent]
    for j in range(n):
        assignment = TypeAssignment.with_proposer(n, j)
        for bits in itertools.product((C, D), repeat=n - 1):
            acts = [C] * n
            for m, a in zip(others, bits):
                acts[m] = a
            base = classify_scenario(acts, assignment, agent, cfg)
            for leak in cfg.reachable_leak_states(base.gamma):
                scen = replace(base, leak_triggered=leak)
                uc = utility(agent, _with(acts, agent, C), assignment, scen, cfg).net
                ud = utility(agent, _with(acts, agent, D), assignment, scen, cfg).net
                yield assignment.roles[agent], scen, uc, ud


def _with(acts, k, a):
    acts = list(acts)
    acts[k] = a
    return acts


def verify_ex_ante_dominance(cfg: GameConfig, method: str = "classes",
                             mixed_probe: Fraction = Fraction(1, 2)) -> EquilibriumReport:
    """Check that cooperating is weakly better in every opposing situation.

    Every (proposer, opposing action profile, reachable leak state) atom
    is examined; mixed opposing profiles follow by linearity. Row "4"
    compares the mixed-strategy endpoints against opposing agents that
    all mix with probability ``mixed_probe``.
    """
    rows: dict[str, tuple] = {}
    counts = {label: 0 for label in CASE_LABELS}
    min_gap = None

    def record(role, scen, uc, ud, weight):
        nonlocal min_gap
        gap = uc - ud
        min_gap = gap if min_gap is None else min(min_gap, gap)
        for label in case_labels(role, scen, cfg.gamma_threshold):
            counts[label] += weight
            cur = rows.get(label)
            if cur is None or (gap, uc) < (cur[0] - cur[1], cur[0]):
                rows[label] = (uc, ud)

    if method == "classes":
        for role, scen, mult in _dominance_classes(cfg):
            uc = role_utility(role, C, scen, cfg).net
            ud = role_utility(role, D, scen, cfg).net
            # agents are exchangeable, so every focal agent sees the same classes
            record(role, scen, uc, ud, mult * cfg.n_agents)
    elif method == "bruteforce":
        for agent in range(cfg.n_agents):
            for role, scen, uc, ud in _dominance_bruteforce(cfg, agent):
                record(role, scen, uc, ud, 1)
    else:
        raise ValueError(f"unknown method {method!r}")

    probe = StrategyProfile.uniform(cfg.n_agents, Strategy.uniform(mixed_probe))
    eu_c = mixed_strategy_eu(0, 1, probe, cfg, method).value
    eu_d = mixed_strategy_eu(0, 0, probe, cfg, method).value
    rows["4"] = (eu_c, eu_d)
    counts["4"] = 1
    min_gap = min(min_gap, eu_c - eu_d)

    breakdown = {
        label: CaseRow(label, *rows.get(label, (None, None)), atoms=counts[label])
        for label in CASE_LABELS
    }
    brs = tuple(best_response(i, StrategyProfile.all_cooperate(cfg.n_agents), cfg, method)
                for i in range(cfg.n_agents))
    return EquilibriumReport(
        n_agents=cfg.n_agents,
        method=method,
        best_responses=brs,
        dominance_verdict=min_gap >= 0,
        min_gap=min_gap,
        case_breakdown=breakdown,
    )


# -- sweeps -----------------------------------------------------------------


def apply_axis(cfg: GameConfig, axis: str, value) -> GameConfig:
    value = Fraction(value)
    if axis == "cost_per_epoch":
        return cfg.with_(cost_per_epoch=value)
    if axis == "gamma_threshold":
        return cfg.with_(gamma_threshold=value)
    if axis == "inactivity_penalty":
        return cfg.with_(inactivity_penalty=value)
    ip = cfg.incentive_params
    if axis == "n_validators":
        if value.denominator != 1:
            raise DomainError("n_validators must be an integer")
        n = int(value)
        network = replace(ip.network, n_validators=n, total_staked=n * 32 * GWEI_PER_ETH,
                          n_attesters_per_epoch=n)
        return cfg.with_(incentive_params=replace(ip, network=network))
    if axis == "tips-total":
        return cfg.with_(incentive_params=replace(ip, tips=TransactionTips((value,))))
    raise UnknownAxisError(f"unknown sweep axis {axis!r}; choose from {', '.join(SWEEP_AXES)}")


def sensitivity_sweep(cfg: GameConfig, axis: str, grid: Sequence, method: str = "classes"):
    """Re-run the dominance check at every grid value.

    Returns a list of ``(value, EquilibriumReport)`` pairs.
    """
    if axis not in SWEEP_AXES:
        raise UnknownAxisError(f"unknown sweep axis {axis!r}; choose from {', '.join(SWEEP_AXES)}")
    return [(Fraction(v), verify_ex_ante_dominance(apply_axis(cfg, axis, v), method)) for v in grid]

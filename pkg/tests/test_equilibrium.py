from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracle_bruteforce as oracle
from eth2game.equilibrium import (
    CASE_LABELS,
    NullEventError,
    ScenarioFilter,
    StrategyProfile,
    UnknownAxisError,
    apply_axis,
    best_response,
    conditional_expected_utility,
    expected_utility,
    mixed_strategy_eu,
    scenario_distribution,
    scenario_partition,
    sensitivity_sweep,
    verify_bne,
    verify_ex_ante_dominance,
)
from eth2game.game_core import A, B, C, COOPERATE, D, DEVIATE, GameConfig, Scenario, Strategy
from eth2game.incentive_model import DomainError


def near(x, y, tol=Fraction(1, 1000)):
    return abs(Fraction(x) - Fraction(y)) <= tol


probs = st.fractions(0, 1, max_denominator=8)
strategies = st.builds(Strategy, probs, probs)


def _strategies_tuple(profile):
    return [(s.prob_cooperate_as_proposer, s.prob_cooperate_as_attester) for s in profile.strategies]


# -- expected utility -------------------------------------------------------


def test_eu_two_agents_all_cooperate():
    # oracle value: half proposer reward, half attestation reward, minus cost
    cfg = GameConfig(n_agents=2)
    eu = expected_utility(0, StrategyProfile.all_cooperate(2), cfg).value
    assert near(eu, Fraction("488076140.604001"))
    assert eu == (cfg.proposer_reward(Fraction(0)) + cfg.attester_reward) / 2 - cfg.epoch_cost


def test_eu_two_agents_against_deviator():
    cfg = GameConfig(n_agents=2)
    profile = StrategyProfile.all_cooperate(2).with_agent(1, DEVIATE)
    eu = expected_utility(0, profile, cfg).value
    assert near(eu, Fraction("181873.035165"))


def test_eu_methods_agree_small():
    cfg = GameConfig(n_agents=3)
    profile = StrategyProfile((Strategy(Fraction(1, 3), Fraction(3, 4)), COOPERATE, DEVIATE))
    for i in range(3):
        assert expected_utility(i, profile, cfg).value == expected_utility(i, profile, cfg, "bruteforce").value


def test_profile_length_must_match():
    with pytest.raises(DomainError):
        expected_utility(0, StrategyProfile.all_cooperate(3), GameConfig(n_agents=4))


def test_unknown_method():
    with pytest.raises(ValueError):
        expected_utility(0, StrategyProfile.all_cooperate(2), GameConfig(n_agents=2), "sampling")


# -- conditional expected utility -------------------------------------------


def test_conditional_on_proposer_cooperating():
    cfg = GameConfig(n_agents=4)
    cond = conditional_expected_utility(0, StrategyProfile.all_cooperate(4), Scenario(1, 0, Fraction(0), False), cfg)
    assert cond.value == cfg.attester_reward - cfg.epoch_cost
    assert cond.probability == Fraction(3, 4)


def test_conditional_on_high_offline_band():
    cfg = GameConfig(n_agents=4)
    profile = StrategyProfile.uniform(4, Strategy.uniform(Fraction(1, 2)))
    band = ScenarioFilter(focal_role=A, focal_action=C, gamma_at_least_threshold=True)
    got = conditional_expected_utility(0, profile, band, cfg)
    # derived leak mode with no history keeps the leak off
    assert got.value == cfg.attester_reward - cfg.epoch_cost
    assert 0 < got.probability < 1


def test_conditional_null_event():
    cfg = GameConfig(n_agents=4)
    with pytest.raises(NullEventError):
        conditional_expected_utility(0, StrategyProfile.all_cooperate(4), Scenario(0, 1, Fraction(1, 3), False), cfg)


def test_conditional_rejects_both_indicators():
    with pytest.raises(DomainError):
        conditional_expected_utility(0, StrategyProfile.all_cooperate(2), ScenarioFilter(x_bc=1, x_bd=1),
                                     GameConfig(n_agents=2))


@given(st.lists(strategies, min_size=4, max_size=4))
@settings(max_examples=40, deadline=None)
def test_law_of_total_expectation(strats):
    cfg = GameConfig(n_agents=4)
    profile = StrategyProfile(tuple(strats))
    parts = scenario_partition(0, profile, cfg)
    assert sum(p for _, p in parts) == 1
    total = sum(p * conditional_expected_utility(0, profile, s, cfg).value for s, p in parts)
    assert total == expected_utility(0, profile, cfg).value


def test_scenario_distribution_masses():
    cfg = GameConfig(n_agents=5)
    dist = scenario_distribution(2, StrategyProfile.uniform(5, Strategy.uniform(Fraction(1, 3))), cfg)
    assert sum(p for _, _, p in dist) == 1
    assert sum(q for r, _, q in dist if r is B) == Fraction(1, 5)


# -- mixed strategies -------------------------------------------------------


@given(probs, st.lists(strategies, min_size=3, max_size=3))
@settings(max_examples=40, deadline=None)
def test_mixed_eu_linear_in_p(p, strats):
    cfg = GameConfig(n_agents=3)
    opp = StrategyProfile(tuple(strats))
    at = mixed_strategy_eu(1, p, opp, cfg).value
    hi = mixed_strategy_eu(1, 1, opp, cfg).value
    lo = mixed_strategy_eu(1, 0, opp, cfg).value
    assert at == p * hi + (1 - p) * lo
    assert hi >= at >= lo


# -- best responses and BNE -------------------------------------------------


def test_all_cooperate_is_bne_with_strict_gaps():
    cfg = GameConfig(n_agents=4)
    rep = verify_bne(StrategyProfile.all_cooperate(4), cfg)
    assert rep.bne_verdict and rep.flagged_agents == ()
    for br in rep.best_responses:
        assert br.pure == frozenset({COOPERATE})
        assert br.gap_proposer > 0 and br.gap_attester > 0


def test_all_deviate_is_not_bne():
    cfg = GameConfig(n_agents=3)
    rep = verify_bne(StrategyProfile.uniform(3, DEVIATE), cfg)
    assert not rep.bne_verdict
    assert rep.flagged_agents == (0, 1, 2)


def test_tie_when_leak_costs_nothing():
    # forced leak with zero inactivity penalty: attesting earns nothing and
    # skipping costs nothing, so the attester type is indifferent
    cfg = GameConfig(n_agents=3, leak_mode="on", inactivity_penalty=0)
    br = best_response(0, StrategyProfile.all_cooperate(3), cfg)
    assert br.as_attester == frozenset({C, D})
    assert br.gap_attester == 0
    assert br.as_proposer == frozenset({C})
    assert Strategy(1, Fraction(1, 2)) in br
    assert Strategy(Fraction(1, 2), 1) not in br
    assert br.label() == "B:C A:C|D"


def test_best_response_matches_oracle_gaps():
    cfg = GameConfig(n_agents=4)
    profile = StrategyProfile((Strategy(Fraction(1, 2), Fraction(1, 5)), COOPERATE, DEVIATE, COOPERATE))
    pr = oracle.primitives(cfg)
    for i in range(4):
        br = best_response(i, profile, cfg)
        assert (br.gap_proposer, br.gap_attester) == oracle.type_gaps(pr, i, _strategies_tuple(profile))


# -- ex ante dominance ------------------------------------------------------


def test_dominance_default_min_gap():
    rep = verify_ex_ante_dominance(GameConfig(n_agents=4))
    assert rep.dominance_verdict and rep.dominance_label == "strict"
    # the attester penalty: 40/64 of 32 base rewards
    assert near(rep.min_gap, Fraction("10119.288512"))
    assert rep.min_gap == GameConfig().attester_penalty


def test_case_rows_n4_and_n5():
    rep4 = verify_ex_ante_dominance(GameConfig(n_agents=4))
    unreachable = {k for k, r in rep4.case_breakdown.items() if not r.reachable}
    assert unreachable == {"1.2.2", "3.2.2"}
    rep5 = verify_ex_ante_dominance(GameConfig(n_agents=5))
    # a focal attester always has another agent as proposer, so 1.2.2 is null
    live = {k: r for k, r in rep5.case_breakdown.items() if r.reachable}
    assert set(live) == set(CASE_LABELS) - {"1.2.2"}
    assert all(r.gap > 0 for r in live.values())


@pytest.mark.parametrize("n", [2, 3, 4, 5])
@pytest.mark.parametrize("leak_mode", ["on", "off", "derived"])
def test_dominance_matches_oracle(n, leak_mode):
    cfg = GameConfig(n_agents=n, leak_mode=leak_mode, inactivity_penalty=Fraction(4321, 7))
    min_gap, rows = oracle.dominance(oracle.primitives(cfg))
    for method in ("classes", "bruteforce"):
        rep = verify_ex_ante_dominance(cfg, method)
        pure_rows = {k: r for k, r in rep.case_breakdown.items() if k != "4" and r.reachable}
        assert set(pure_rows) == set(rows)
        for k, r in pure_rows.items():
            assert (r.eu_cooperate, r.eu_deviate, r.gap) == rows[k]
        assert rep.min_gap == min(min_gap, rep.case_breakdown["4"].gap)


def test_classes_and_bruteforce_reports_identical():
    cfg = GameConfig(n_agents=5)
    a = verify_ex_ante_dominance(cfg, "classes")
    b = verify_ex_ante_dominance(cfg, "bruteforce")
    assert a.min_gap == b.min_gap
    assert a.best_responses == b.best_responses
    for k in CASE_LABELS:
        ra, rb = a.case_breakdown[k], b.case_breakdown[k]
        assert (ra.eu_cooperate, ra.eu_deviate, ra.atoms) == (rb.eu_cooperate, rb.eu_deviate, rb.atoms)


def test_dominance_weak_when_leak_free():
    cfg = GameConfig(n_agents=3, leak_mode="on", inactivity_penalty=0)
    rep = verify_ex_ante_dominance(cfg)
    assert rep.dominance_label == "weak"


# -- sweeps -----------------------------------------------------------------


def test_cost_sweep_leaves_gaps_unchanged():
    cfg = GameConfig(n_agents=4)
    r_a = cfg.attester_reward
    grid = [r_a * k / 4 for k in range(0, 41, 8)]
    results = sensitivity_sweep(cfg, "cost_per_epoch", grid)
    gaps = {r.min_gap for _, r in results}
    assert len(gaps) == 1
    assert len({r.best_responses for _, r in results}) == 1
    assert all(r.dominance_verdict for _, r in results)


def test_sweep_empty_grid():
    assert sensitivity_sweep(GameConfig(n_agents=3), "gamma_threshold", []) == []


def test_sweep_unknown_axis():
    with pytest.raises(UnknownAxisError):
        sensitivity_sweep(GameConfig(n_agents=3), "slots", [1])


def test_n_validators_axis_rescales_stake():
    cfg = apply_axis(GameConfig(n_agents=3), "n_validators", 1000)
    net = cfg.incentive_params.network
    assert (net.n_validators, net.n_attesters_per_epoch) == (1000, 1000)
    assert net.total_staked == 1000 * 32 * 10**9
    with pytest.raises(DomainError):
        apply_axis(cfg, "n_validators", Fraction(1, 2))


def test_tips_axis_raises_proposer_gap():
    cfg = GameConfig(n_agents=3)
    base = best_response(0, StrategyProfile.all_cooperate(3), cfg).gap_proposer
    tipped = best_response(0, StrategyProfile.all_cooperate(3), apply_axis(cfg, "tips-total", 10**6)).gap_proposer
    assert tipped - base == 10**6

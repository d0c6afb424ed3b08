"""Monte Carlo mean payoff against the exact expected utility.

Runs increasing slot counts for one seed, then counts how many of a
batch of seeds land within three standard errors.
"""

import argparse
from fractions import Fraction

from eth2game.equilibrium import StrategyProfile
from eth2game.game_core import GameConfig, Strategy
from eth2game.report import table
from eth2game.slot_simulator import compare_to_analytic, run_simulation


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--agents", type=int, default=4)
    ap.add_argument("--cooperate", type=Fraction, default=Fraction(1))
    ap.add_argument("--seeds", type=int, default=100)
    ap.add_argument("--epochs", type=int, default=3125)
    args = ap.parse_args()

    cfg = GameConfig(n_agents=args.agents)
    profile = StrategyProfile.uniform(args.agents, Strategy.uniform(args.cooperate))

    rows = []
    for epochs in (10, 100, 1000, args.epochs):
        res = run_simulation(cfg, profile, epochs, seed=0, keep_trace=False)
        c = compare_to_analytic(res, cfg, profile)[0]
        rows.append([str(res.slots), f"{c.empirical:.1f}", f"{float(c.analytic):.1f}",
                     f"{c.std_error:.1f}", f"{c.z:+.2f}", str(res.leak_epochs)])
    print(table(["slots", "agent 0 mean", "analytic", "std err", "z", "leak epochs"], rows))

    good = 0
    for seed in range(args.seeds):
        res = run_simulation(cfg, profile, args.epochs, seed, keep_trace=False)
        good += all(abs(c.z) <= 3 for c in compare_to_analytic(res, cfg, profile))
    print(f"seeds with every agent within 3 SE: {good}/{args.seeds}")


if __name__ == "__main__":
    main()

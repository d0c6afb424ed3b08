"""Check that staying online is a BNE and ex ante dominant for several n.

Also reports the smallest gap over a sweep of the inactivity penalty.
"""

import argparse
from fractions import Fraction

from eth2game.equilibrium import StrategyProfile, sensitivity_sweep, verify_bne, verify_ex_ante_dominance
from eth2game.game_core import GameConfig
from eth2game.report import gwei, table


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--max-agents", type=int, default=8)
    ap.add_argument("--leak-mode", choices=("on", "off", "derived"), default="derived")
    args = ap.parse_args()

    rows = []
    for n in range(2, args.max_agents + 1):
        cfg = GameConfig(n_agents=n, leak_mode=args.leak_mode)
        bne = verify_bne(StrategyProfile.all_cooperate(n), cfg)
        dom = verify_ex_ante_dominance(cfg)
        live = sum(r.reachable for r in dom.case_breakdown.values())
        rows.append([str(n), str(bne.bne_verdict), dom.dominance_label, gwei(dom.min_gap), str(live)])
    print(table(["agents", "BNE", "dominance", "min gap", "rows reached"], rows))

    cfg = GameConfig(n_agents=5, leak_mode="on")
    grid = [Fraction(0), Fraction(1), Fraction(100), cfg.attester_penalty, 10 * cfg.attester_penalty]
    rows = [[gwei(v), r.dominance_label, gwei(r.min_gap)]
            for v, r in sensitivity_sweep(cfg, "inactivity_penalty", grid)]
    print("forced leak, n=5, varying the inactivity penalty")
    print(table(["penalty", "dominance", "min gap"], rows), end="")


if __name__ == "__main__":
    main()
